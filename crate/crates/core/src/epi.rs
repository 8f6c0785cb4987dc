//! Epimorphisms between finite structures.
//!
//! A surjection `f: A -> B` is an epimorphism when
//!
//! * for every direct symbol `r` and injective tuple `β` of `B`:
//!   `β ∈ r^B` iff `β = f ∘ α` for some `α ∈ r^A`;
//! * for every dual symbol `R` and surjective labeling `β` of `B`:
//!   `β ∈ R^B` iff `β ∘ f ∈ R^A`.
//!
//! Tuples `α` whose image `f ∘ α` is not injective impose nothing.

use std::collections::{BTreeSet, HashSet};
use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::error::EpiError;
use crate::model::{DirectTuple, DualTuple, FiniteStructure, Interpretation, SurjectiveMap};

fn check_shapes(f: &SurjectiveMap, a: &FiniteStructure, b: &FiniteStructure) -> Result<(), EpiError> {
    if !a.same_signature(b) {
        return Err(EpiError::SignatureMismatch);
    }
    if f.source_size() != a.size() || f.target_size() != b.size() {
        return Err(EpiError::SizeMismatch {
            map_source: f.source_size(),
            map_target: f.target_size(),
            source_size: a.size(),
            target_size: b.size(),
        });
    }
    Ok(())
}

fn is_injective(xs: &[usize]) -> bool {
    xs.iter().enumerate().all(|(i, x)| !xs[..i].contains(x))
}

/// Shape-checked caller guarantees matching sizes and signatures.
fn epi_condition(table: &[usize], a: &FiniteStructure, b: &FiniteStructure) -> bool {
    for (ia, ib) in a.interpretations().iter().zip(b.interpretations()) {
        match (ia, ib) {
            (Interpretation::Direct(ra), Interpretation::Direct(rb)) => {
                let mut image: HashSet<Vec<usize>> = HashSet::with_capacity(rb.len());
                for alpha in ra {
                    let beta: Vec<usize> = alpha.0.iter().map(|&x| table[x]).collect();
                    if is_injective(&beta) {
                        if !rb.contains(&DirectTuple(beta.clone())) {
                            return false;
                        }
                        image.insert(beta);
                    }
                }
                if image.len() != rb.len() {
                    return false;
                }
            }
            (Interpretation::Dual(ra), Interpretation::Dual(rb)) => {
                for beta in rb {
                    let pulled: Vec<usize> = table.iter().map(|&y| beta.0[y]).collect();
                    if !ra.contains(&DualTuple(pulled)) {
                        return false;
                    }
                }
                let map = SurjectiveMap::new_unchecked(table.to_vec(), b.size());
                for alpha in ra {
                    if let Some(beta) = map.push_forward(&alpha.0) {
                        if !rb.contains(&DualTuple(beta)) {
                            return false;
                        }
                    }
                }
            }
            _ => return false,
        }
    }
    true
}

pub fn is_epimorphism(f: &SurjectiveMap, a: &FiniteStructure, b: &FiniteStructure) -> Result<bool, EpiError> {
    check_shapes(f, a, b)?;
    Ok(epi_condition(f.table(), a, b))
}

/// The unique structure on `0..f.target_size()` that makes `f` an epimorphism
/// out of `k`.
pub fn induced_structure(k: &FiniteStructure, f: &SurjectiveMap) -> Result<FiniteStructure, EpiError> {
    if f.source_size() != k.size() {
        return Err(EpiError::SizeMismatch {
            map_source: f.source_size(),
            map_target: f.target_size(),
            source_size: k.size(),
            target_size: f.target_size(),
        });
    }
    let interps = k
        .interpretations()
        .iter()
        .map(|interp| match interp {
            Interpretation::Direct(set) => Interpretation::Direct(
                set.iter()
                    .map(|t| t.0.iter().map(|&x| f.apply(x)).collect::<Vec<_>>())
                    .filter(|b| is_injective(b))
                    .map(DirectTuple)
                    .collect(),
            ),
            Interpretation::Dual(set) => {
                Interpretation::Dual(set.iter().filter_map(|t| f.push_forward(&t.0)).map(DualTuple).collect())
            }
        })
        .collect();
    Ok(FiniteStructure::from_parts(k.signature_arc().clone(), f.target_size(), interps))
}

/// Backtracking search for maps `A -> B` that are epimorphisms, optionally
/// bijective, optionally restricted pointwise.
struct Search<'a> {
    a: &'a FiniteStructure,
    b: &'a FiniteStructure,
    bijective: bool,
    allowed: Option<&'a [Vec<usize>]>,
    /// Direct tuples of `A` grouped by their largest entry: checked once that
    /// entry is assigned.
    direct_by_max: Vec<Vec<(usize, &'a [usize])>>,
    /// Dual symbols with nonempty `R^B`, with the tuples of `R^A`.
    dual_needed: Vec<Vec<&'a [usize]>>,
    /// Last point of `A` allowed to map to each point of `B`.
    last_allowed: Vec<Option<usize>>,
}

struct State {
    table: Vec<usize>,
    hits: Vec<usize>,
    unhit: usize,
}

impl<'a> Search<'a> {
    fn new(a: &'a FiniteStructure, b: &'a FiniteStructure, bijective: bool, allowed: Option<&'a [Vec<usize>]>) -> Self {
        let mut direct_by_max = vec![Vec::new(); a.size()];
        let mut dual_needed = Vec::new();
        for (i, (ia, ib)) in a.interpretations().iter().zip(b.interpretations()).enumerate() {
            match (ia, ib) {
                (Interpretation::Direct(ra), _) => {
                    for t in ra {
                        if let Some(&m) = t.0.iter().max() {
                            direct_by_max[m].push((i, t.0.as_slice()));
                        }
                    }
                }
                (Interpretation::Dual(ra), Interpretation::Dual(rb)) if !rb.is_empty() => {
                    dual_needed.push(ra.iter().map(|t| t.0.as_slice()).collect());
                }
                _ => {}
            }
        }
        let mut last_allowed = vec![a.size().checked_sub(1); b.size()];
        if let Some(allowed) = allowed {
            last_allowed = vec![None; b.size()];
            for (x, ys) in allowed.iter().enumerate() {
                for &y in ys {
                    last_allowed[y] = Some(x);
                }
            }
        }
        Search { a, b, bijective, allowed, direct_by_max, dual_needed, last_allowed }
    }

    fn candidates(&self, x: usize) -> Vec<usize> {
        match self.allowed {
            Some(allowed) => allowed[x].clone(),
            None => (0..self.b.size()).collect(),
        }
    }

    fn feasible_shape(&self) -> bool {
        let (n, m) = (self.a.size(), self.b.size());
        m >= 1 && n >= m && (!self.bijective || n == m)
    }

    /// Checks every constraint that became decidable once point `x` was assigned.
    fn consistent(&self, x: usize, st: &State, joined_fiber: bool) -> bool {
        let n = self.a.size();
        if n - x - 1 < st.unhit {
            return false;
        }
        if self.allowed.is_some()
            && st.hits.iter().zip(&self.last_allowed).any(|(&h, &last)| h == 0 && last.is_none_or(|l| l <= x))
        {
            return false;
        }
        for &(sym, alpha) in &self.direct_by_max[x] {
            let beta: Vec<usize> = alpha.iter().map(|&p| st.table[p]).collect();
            if is_injective(&beta) {
                let Interpretation::Direct(rb) = self.b.interpretation(sym) else { return false };
                if !rb.contains(&DirectTuple(beta)) {
                    return false;
                }
            }
        }
        if joined_fiber {
            // Some β ∘ f must lie in R^A, and β ∘ f is constant on fibers.
            let mut first_of: Vec<Option<usize>> = vec![None; self.b.size()];
            for (p, &y) in st.table[..=x].iter().enumerate() {
                first_of[y].get_or_insert(p);
            }
            for tuples in &self.dual_needed {
                let ok = tuples.iter().any(|alpha| {
                    st.table[..=x].iter().enumerate().all(|(p, &y)| alpha[p] == alpha[first_of[y].unwrap()])
                });
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    fn run<F>(&self, st: &mut State, x: usize, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        if x == self.a.size() {
            if epi_condition(&st.table, self.a, self.b) {
                return visit(&st.table);
            }
            return ControlFlow::Continue(());
        }
        for v in self.candidates(x) {
            if self.bijective && st.hits[v] > 0 {
                continue;
            }
            let joined = st.hits[v] > 0;
            st.table[x] = v;
            st.hits[v] += 1;
            if !joined {
                st.unhit -= 1;
            }
            let flow =
                if self.consistent(x, st, joined) { self.run(st, x + 1, visit) } else { ControlFlow::Continue(()) };
            st.hits[v] -= 1;
            if !joined {
                st.unhit += 1;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn fresh_state(&self) -> State {
        State { table: vec![0; self.a.size()], hits: vec![0; self.b.size()], unhit: self.b.size() }
    }

    fn first(&self) -> Option<Vec<usize>> {
        if !self.feasible_shape() {
            return None;
        }
        let mut found = None;
        let mut st = self.fresh_state();
        let _ = self.run(&mut st, 0, &mut |t| {
            found = Some(t.to_vec());
            ControlFlow::Break(())
        });
        found
    }

    /// All solutions, in lexicographic order. The branches below point 0 run
    /// in parallel and are concatenated in order.
    fn all(&self) -> Vec<Vec<usize>> {
        if !self.feasible_shape() {
            return Vec::new();
        }
        let top = self.candidates(0);
        let branches: Vec<Vec<Vec<usize>>> = top
            .par_iter()
            .map(|&v| {
                let mut out = Vec::new();
                let mut st = self.fresh_state();
                st.table[0] = v;
                st.hits[v] = 1;
                st.unhit -= 1;
                if self.consistent(0, &st, false) {
                    let _ = self.run(&mut st, 1, &mut |t| {
                        out.push(t.to_vec());
                        ControlFlow::Continue(())
                    });
                }
                out
            })
            .collect();
        branches.into_iter().flatten().collect()
    }
}

fn to_maps(tables: Vec<Vec<usize>>, target: usize) -> Vec<SurjectiveMap> {
    tables.into_iter().map(|t| SurjectiveMap::new_unchecked(t, target)).collect()
}

/// Every epimorphism `A -> B`, in lexicographic order of the map table.
pub fn enumerate_epimorphisms(a: &FiniteStructure, b: &FiniteStructure) -> Result<Vec<SurjectiveMap>, EpiError> {
    if !a.same_signature(b) {
        return Err(EpiError::SignatureMismatch);
    }
    Ok(to_maps(Search::new(a, b, false, None).all(), b.size()))
}

/// The lexicographically first epimorphism `A -> B`, if any.
pub fn first_epimorphism(a: &FiniteStructure, b: &FiniteStructure) -> Result<Option<SurjectiveMap>, EpiError> {
    if !a.same_signature(b) {
        return Err(EpiError::SignatureMismatch);
    }
    Ok(Search::new(a, b, false, None).first().map(|t| SurjectiveMap::new_unchecked(t, b.size())))
}

/// The first epimorphism `h: D -> B` with `f ∘ h = t`, where `f: B -> A` and
/// `t: D -> A`.
pub fn find_lift(
    d: &FiniteStructure,
    b: &FiniteStructure,
    f: &SurjectiveMap,
    t: &SurjectiveMap,
) -> Result<Option<SurjectiveMap>, EpiError> {
    if !d.same_signature(b) {
        return Err(EpiError::SignatureMismatch);
    }
    if f.source_size() != b.size() || t.source_size() != d.size() || f.target_size() != t.target_size() {
        return Err(EpiError::SizeMismatch {
            map_source: t.source_size(),
            map_target: f.source_size(),
            source_size: d.size(),
            target_size: b.size(),
        });
    }
    let fibers = f.fibers();
    let allowed: Vec<Vec<usize>> = t.table().iter().map(|&y| fibers[y].clone()).collect();
    Ok(Search::new(d, b, false, Some(&allowed)).first().map(|h| SurjectiveMap::new_unchecked(h, b.size())))
}

/// The lexicographically least isomorphism `A -> B`, if any.
pub fn find_isomorphism(a: &FiniteStructure, b: &FiniteStructure) -> Result<Option<SurjectiveMap>, EpiError> {
    if !a.same_signature(b) {
        return Err(EpiError::SignatureMismatch);
    }
    if a.size() != b.size() {
        return Ok(None);
    }
    Ok(Search::new(a, b, true, None).first().map(|t| SurjectiveMap::new_unchecked(t, b.size())))
}

/// All automorphisms of `A`, in lexicographic order (the identity first).
pub fn automorphism_group(a: &FiniteStructure) -> Vec<SurjectiveMap> {
    to_maps(Search::new(a, a, true, None).all(), a.size())
}

/// Common refinement of two epimorphisms out of the same structure: both
/// factor through `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub refined: FiniteStructure,
    /// The nonempty fiber intersections, as `(f-value, g-value)` pairs.
    pub blocks: Vec<(usize, usize)>,
    pub h: SurjectiveMap,
    pub factor_f: SurjectiveMap,
    pub factor_g: SurjectiveMap,
}

/// Refines `f: K -> A` and `g: K -> B` through the partition of `K` into the
/// nonempty sets `f^{-1}(a) ∩ g^{-1}(b)`, ordered by `(a, b)`.
pub fn common_refinement(
    k: &FiniteStructure,
    a: &FiniteStructure,
    b: &FiniteStructure,
    f: &SurjectiveMap,
    g: &SurjectiveMap,
) -> Result<Refinement, EpiError> {
    if !is_epimorphism(f, k, a)? || !is_epimorphism(g, k, b)? {
        return Err(EpiError::NotEpimorphism);
    }
    Ok(refine_maps(k, f, g))
}

/// The refinement construction without checking that `f` and `g` are
/// epimorphisms.
pub(crate) fn refine_maps(k: &FiniteStructure, f: &SurjectiveMap, g: &SurjectiveMap) -> Refinement {
    let blocks: Vec<(usize, usize)> =
        (0..k.size()).map(|x| (f.apply(x), g.apply(x))).collect::<BTreeSet<_>>().into_iter().collect();
    let h_table =
        (0..k.size()).map(|x| blocks.binary_search(&(f.apply(x), g.apply(x))).expect("block exists")).collect();
    let h = SurjectiveMap::new_unchecked(h_table, blocks.len());
    let refined = induced_structure(k, &h).expect("sizes match");
    let factor_f = SurjectiveMap::new_unchecked(blocks.iter().map(|p| p.0).collect(), f.target_size());
    let factor_g = SurjectiveMap::new_unchecked(blocks.iter().map(|p| p.1).collect(), g.target_size());
    Refinement { refined, blocks, h, factor_f, factor_g }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::catalog::{bare, r_cycle, r_path};
    use crate::combinat::{injections, surjections};
    use crate::model::{Signature, SymbolDecl};

    /// The definition, read literally: all injective β for direct symbols and
    /// all surjective β for dual ones.
    fn naive_is_epi(table: &[usize], a: &FiniteStructure, b: &FiniteStructure) -> bool {
        for (d, (ia, ib)) in a.signature().symbols().iter().zip(a.interpretations().iter().zip(b.interpretations())) {
            match (ia, ib) {
                (Interpretation::Direct(ra), Interpretation::Direct(rb)) => {
                    for beta in injections(b.size(), d.arity) {
                        let lhs = rb.contains(&DirectTuple(beta.clone()));
                        let rhs = ra.iter().any(|al| al.0.iter().map(|&x| table[x]).collect::<Vec<_>>() == beta);
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
                (Interpretation::Dual(ra), Interpretation::Dual(rb)) => {
                    for beta in surjections(b.size(), d.arity) {
                        let lhs = rb.contains(&DualTuple(beta.clone()));
                        let rhs = ra.contains(&DualTuple(table.iter().map(|&y| beta[y]).collect()));
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        true
    }

    fn naive_epis(a: &FiniteStructure, b: &FiniteStructure) -> Vec<Vec<usize>> {
        surjections(a.size(), b.size()).into_iter().filter(|t| naive_is_epi(t, a, b)).collect()
    }

    fn map(t: &[usize]) -> SurjectiveMap {
        SurjectiveMap::from_table(t.to_vec()).unwrap()
    }

    #[test]
    fn identity_is_an_epimorphism() {
        for s in [r_path(3), r_cycle(4), bare(2)] {
            assert!(is_epimorphism(&SurjectiveMap::identity(s.size()), &s, &s).unwrap());
        }
    }

    #[test]
    fn empty_signature_three_onto_two() {
        let (a, b) = (bare(3), bare(2));
        let epis = enumerate_epimorphisms(&a, &b).unwrap();
        assert_eq!(epis.len(), 6);
        assert_eq!(naive_epis(&a, &b).len(), 6);
    }

    #[test]
    fn path_onto_edge() {
        let (a, b) = (r_path(3), r_path(2));
        // Oracle: classify all 6 surjections by the definition.
        let expected: Vec<Vec<usize>> = naive_epis(&a, &b);
        assert_eq!(expected.len(), 6);
        assert!(is_epimorphism(&map(&[0, 0, 1]), &a, &b).unwrap());
        assert!(is_epimorphism(&map(&[0, 1, 0]), &a, &b).unwrap());
        let got: Vec<Vec<usize>> = enumerate_epimorphisms(&a, &b).unwrap().iter().map(|m| m.table().to_vec()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn non_epimorphism_is_rejected() {
        // The 2-point structure with no edge is not an image of the 3-path.
        let empty2 = FiniteStructure::empty(Arc::new(Signature::r_graph()), 2);
        assert!(!is_epimorphism(&map(&[0, 0, 1]), &r_path(3), &empty2).unwrap());
        assert!(is_epimorphism(&map(&[0, 1, 1, 0]), &r_path(4), &r_path(2)).unwrap());
        assert!(matches!(is_epimorphism(&map(&[0, 1]), &r_path(3), &r_path(2)), Err(EpiError::SizeMismatch { .. })));
        assert!(matches!(is_epimorphism(&map(&[0, 0, 1]), &r_path(3), &bare(2)), Err(EpiError::SignatureMismatch)));
    }

    #[test]
    fn onto_a_point() {
        let a = r_path(4);
        let epis = enumerate_epimorphisms(&a, &r_path(1)).unwrap();
        assert_eq!(epis.len(), 1);
    }

    #[test]
    fn path_automorphisms() {
        let auts = automorphism_group(&r_path(3));
        assert_eq!(auts.iter().map(|m| m.table().to_vec()).collect::<Vec<_>>(), vec![vec![0, 1, 2], vec![2, 1, 0]]);
        assert_eq!(enumerate_epimorphisms(&r_path(3), &r_path(3)).unwrap(), auts);
    }

    #[test]
    fn automorphism_group_orders() {
        assert_eq!(automorphism_group(&bare(4)).len(), 24);
        assert_eq!(automorphism_group(&r_cycle(4)).len(), 8);
        let d8 = automorphism_group(&r_cycle(4));
        for g in &d8 {
            assert!(d8.contains(&g.inverse().unwrap()));
            for h in &d8 {
                assert!(d8.contains(&g.then(h)));
            }
        }
    }

    #[test]
    fn isomorphism_search() {
        let p = r_path(3);
        assert_eq!(find_isomorphism(&p, &p).unwrap(), Some(SurjectiveMap::identity(3)));
        assert_eq!(find_isomorphism(&p, &r_cycle(3)).unwrap(), None);
        let q = crate::canon::relabel(&p, &[1, 0, 2]);
        let iso = find_isomorphism(&p, &q).unwrap().unwrap();
        assert!(is_epimorphism(&iso, &p, &q).unwrap());
        assert!(is_epimorphism(&iso.inverse().unwrap(), &q, &p).unwrap());
    }

    #[test]
    fn induced_on_the_path() {
        let k = r_path(3);
        assert_eq!(induced_structure(&k, &SurjectiveMap::identity(3)).unwrap(), k);
        assert_eq!(induced_structure(&k, &map(&[0, 0, 1])).unwrap(), r_path(2));
    }

    #[test]
    fn induced_dual_symbol() {
        let sig = Arc::new(Signature::new(vec![SymbolDecl::dual("R", 2)], false).unwrap());
        let mut k = FiniteStructure::empty(sig.clone(), 4);
        for t in surjections(4, 2) {
            k.insert_dual("R", t).unwrap();
        }
        assert_eq!(k.interpretation(0).len(), 14);
        for f in surjections(4, 2) {
            let f = map(&f);
            let a = induced_structure(&k, &f).unwrap();
            // Oracle: β ∈ R^A iff β ∘ f ∈ R^K, over all surjections 2 -> 2.
            let expected: BTreeSet<DualTuple> = surjections(2, 2)
                .into_iter()
                .filter(|beta| {
                    k.interpretation(0)
                        .as_dual()
                        .unwrap()
                        .contains(&DualTuple(f.table().iter().map(|&y| beta[y]).collect()))
                })
                .map(DualTuple)
                .collect();
            assert_eq!(a.interpretation(0).as_dual().unwrap(), &expected);
            assert_eq!(expected.len(), 2);
            assert!(is_epimorphism(&f, &k, &a).unwrap());
        }
    }

    #[test]
    fn refinement_examples() {
        let k = bare(4);
        let f = map(&[0, 0, 1, 1]);
        let g = map(&[0, 1, 0, 1]);
        let (a, b) = (bare(2), bare(2));
        let r = common_refinement(&k, &a, &b, &f, &g).unwrap();
        assert_eq!(r.refined.size(), 4);
        assert!(r.h.is_bijection());
        assert_eq!(r.h.then(&r.factor_f), f);
        assert_eq!(r.h.then(&r.factor_g), g);

        let same = common_refinement(&k, &a, &a, &f, &f).unwrap();
        assert_eq!(same.refined.size(), 2);
        assert_eq!(same.h, f);
        assert_eq!(same.refined, a);
    }

    #[test]
    fn refinement_rejects_non_epis() {
        let k = r_path(3);
        let bad = FiniteStructure::empty(Arc::new(Signature::r_graph()), 2);
        let f = map(&[0, 0, 1]);
        assert_eq!(common_refinement(&k, &bad, &r_path(2), &f, &f), Err(EpiError::NotEpimorphism));
    }

    #[test]
    fn lifting() {
        // h: P4 -> P3 with f ∘ h = t where f = (0,1,1): P3 -> P2.
        let (d, b) = (r_path(4), r_path(3));
        let f = map(&[0, 1, 1]);
        let t = map(&[0, 0, 1, 1]);
        let h = find_lift(&d, &b, &f, &t).unwrap().unwrap();
        assert_eq!(h.then(&f), t);
        assert!(is_epimorphism(&h, &d, &b).unwrap());
        let t = map(&[0, 0, 0, 1]);
        assert_eq!(find_lift(&d, &b, &f, &t).unwrap(), None);
    }

    #[test]
    fn optimized_matches_naive_on_small_pairs() {
        let structures = [r_path(1), r_path(2), r_path(3), r_path(4), r_cycle(3), r_cycle(4)];
        for a in &structures {
            for b in &structures {
                let got: Vec<Vec<usize>> =
                    enumerate_epimorphisms(a, b).unwrap().iter().map(|m| m.table().to_vec()).collect();
                assert_eq!(got, naive_epis(a, b));
            }
        }
    }
}
