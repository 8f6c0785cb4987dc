//! Turning direct relations into dual ones, and realizing a permutation
//! group as the automorphism group of a purely dual structure.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use crate::combinat::surjections;
use crate::epi::{automorphism_group, induced_structure};
use crate::error::TransformError;
use crate::format::join;
use crate::group::{inverse, PermutationGroup};
use crate::model::{DualTuple, FiniteStructure, Interpretation, Signature, SurjectiveMap, SymbolDecl, SymbolKind};
use crate::report::Report;

/// `R_<s>_<k>_<digits of f>`.
pub fn dualized_name(s: &str, k: usize, f: &[usize]) -> String {
    let digits: String = f.iter().map(|d| d.to_string()).collect();
    format!("R_{s}_{k}_{digits}")
}

/// Replaces the direct symbol `s` of arity `n` by the dual symbols `R_s^f`,
/// one per surjection `f: n -> k` with `0 < k <= n`, each of arity `k + 1`.
///
/// A `(k+1)`-labeling `e` satisfies `R_s^f` when some `a ∈ s^M` has
/// `e(a_i) = f(i)` for every `i`; block `k` is slack and must merely be
/// nonempty. New symbols follow the untouched ones, ordered by `k` then `f`.
pub fn dualize(m: &FiniteStructure, s: &str) -> Result<FiniteStructure, TransformError> {
    let sig = m.signature();
    let idx = sig.index_of(s).ok_or_else(|| TransformError::NotDirect(s.to_string()))?;
    let decl = &sig.symbols()[idx];
    if decl.kind != SymbolKind::Direct {
        return Err(TransformError::NotDirect(s.to_string()));
    }
    let n = decl.arity;
    let tuples = m.interpretation(idx).as_direct().expect("direct symbol");

    let base = sig.without(s);
    let mut symbols: Vec<SymbolDecl> = base.symbols().to_vec();
    let mut interps: Vec<Interpretation> =
        (0..sig.len()).filter(|&i| i != idx).map(|i| m.interpretation(i).clone()).collect();
    for k in 1..=n {
        let labelings = surjections(m.size(), k + 1);
        for f in surjections(n, k) {
            let name = dualized_name(s, k, &f);
            if base.index_of(&name).is_some() {
                return Err(TransformError::NameClash(name));
            }
            let holds: BTreeSet<DualTuple> = labelings
                .iter()
                .filter(|e| tuples.iter().any(|a| a.0.iter().zip(&f).all(|(&x, &fi)| e[x] == fi)))
                .map(|e| DualTuple(e.clone()))
                .collect();
            symbols.push(SymbolDecl::dual(name, k + 1));
            interps.push(Interpretation::Dual(holds));
        }
    }
    let sig = Signature::new(symbols, base.r_reserved()).expect("names are distinct and well formed");
    Ok(FiniteStructure::from_parts(Arc::new(sig), m.size(), interps))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualizationCheck {
    pub symbol: String,
    pub arity: usize,
    pub before: Vec<SurjectiveMap>,
    pub after: Vec<SurjectiveMap>,
    /// The slack block forces `|M| > arity` before every witness tuple can
    /// be seen by some labeling; at or below that size `s` may be lost.
    pub domain_exceeds_arity: bool,
}

impl DualizationCheck {
    pub fn equal(&self) -> bool {
        self.before == self.after
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("symbol", &self.symbol)
            .set("arity", self.arity)
            .set("aut_before.order", self.before.len())
            .set("aut_after.order", self.after.len())
            .set("aut_equal", self.equal())
            .set("domain_exceeds_arity", self.domain_exceeds_arity);
        r
    }
}

pub fn verify_dualization(m: &FiniteStructure, s: &str) -> Result<DualizationCheck, TransformError> {
    let dual = dualize(m, s)?;
    let arity = m.signature().symbol(s).expect("checked by dualize").arity;
    Ok(DualizationCheck {
        symbol: s.to_string(),
        arity,
        before: automorphism_group(m),
        after: automorphism_group(&dual),
        domain_exceeds_arity: m.size() > arity,
    })
}

pub fn orbit_name(arity: usize, index: usize) -> String {
    format!("O_{arity}_{index}")
}

/// Orbits of `G` on the surjective `n`-labelings under `g·e = e ∘ g⁻¹`,
/// each sorted, listed by least member.
pub fn labeling_orbits(g: &PermutationGroup, n: usize) -> Vec<Vec<Vec<usize>>> {
    let inverses: Vec<Vec<usize>> = g.elements().iter().map(|p| inverse(p)).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut orbits = Vec::new();
    for e in surjections(g.degree(), n) {
        if seen.contains(&e) {
            continue;
        }
        let orbit: BTreeSet<Vec<usize>> = inverses.iter().map(|gi| gi.iter().map(|&y| e[y]).collect()).collect();
        seen.extend(orbit.iter().cloned());
        orbits.push(orbit.into_iter().collect());
    }
    orbits
}

/// The purely dual structure on `0..degree` with one symbol `O_n_i` per
/// orbit of arity `n`, for `n` in `2..=max_arity`.
pub fn orbit_structure(g: &PermutationGroup, max_arity: usize) -> Result<FiniteStructure, TransformError> {
    let degree = g.degree();
    if degree < 2 {
        return Err(TransformError::DegreeTooSmall(degree));
    }
    if !(2..=degree).contains(&max_arity) {
        return Err(TransformError::BadArity { max_arity, degree });
    }
    let per_arity: Vec<Vec<Vec<Vec<usize>>>> = (2..=max_arity).into_par_iter().map(|n| labeling_orbits(g, n)).collect();
    let mut symbols = Vec::new();
    let mut interps = Vec::new();
    for (n, orbits) in (2..=max_arity).zip(per_arity) {
        for (i, orbit) in orbits.into_iter().enumerate() {
            symbols.push(SymbolDecl::dual(orbit_name(n, i), n));
            interps.push(Interpretation::Dual(orbit.into_iter().map(DualTuple).collect()));
        }
    }
    let sig = Signature::new(symbols, false).expect("orbit names are distinct");
    Ok(FiniteStructure::from_parts(Arc::new(sig), degree, interps))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitCheck {
    pub degree: usize,
    pub max_arity: usize,
    pub group_order: usize,
    pub symbols: usize,
    pub automorphisms: Vec<SurjectiveMap>,
    pub equal: bool,
}

impl OrbitCheck {
    /// Truncated arities can only enlarge Aut, so equality is not promised.
    pub fn exact_by_construction(&self) -> bool {
        self.max_arity == self.degree
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("degree", self.degree)
            .set("max_arity", self.max_arity)
            .set("group.order", self.group_order)
            .set("symbols", self.symbols)
            .set("aut.order", self.automorphisms.len())
            .set("aut_equals_group", self.equal)
            .set("construction", if self.exact_by_construction() { "exact" } else { "inexact by construction" });
        r
    }
}

pub fn verify_orbit_structure(g: &PermutationGroup, max_arity: usize) -> Result<OrbitCheck, TransformError> {
    let k = orbit_structure(g, max_arity)?;
    let automorphisms = automorphism_group(&k);
    let aut: BTreeSet<&[usize]> = automorphisms.iter().map(|a| a.table()).collect();
    let grp: BTreeSet<&[usize]> = g.elements().iter().map(|p| p.as_slice()).collect();
    Ok(OrbitCheck {
        degree: g.degree(),
        max_arity,
        group_order: g.order(),
        symbols: k.signature().len(),
        equal: aut == grp,
        automorphisms,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneityCheck {
    pub surjections: usize,
    /// Classes of surjections inducing the same target structure.
    pub classes: usize,
    /// A pair `(f_1, f_2)` inducing the same structure with no `g` in Aut
    /// satisfying `f_1 ∘ g = f_2`.
    pub failure: Option<(SurjectiveMap, SurjectiveMap)>,
}

impl HomogeneityCheck {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("surjections", self.surjections).set("classes", self.classes).set("holds", self.holds());
        if let Some((f1, f2)) = &self.failure {
            r.set_map("failure.f1", f1).set_map("failure.f2", f2);
        }
        r
    }
}

/// Projective ultra-homogeneity of the full-arity orbit structure: any two
/// surjections out of it that induce the same structure differ by an
/// automorphism. Since `f ↦ f ∘ g` is a group action, comparing every
/// surjection with the first of its class covers all pairs.
pub fn verify_orbit_homogeneity(g: &PermutationGroup) -> Result<HomogeneityCheck, TransformError> {
    let k = orbit_structure(g, g.degree())?;
    let aut = automorphism_group(&k);
    let maps: Vec<SurjectiveMap> = (1..=k.size())
        .flat_map(|m| surjections(k.size(), m))
        .map(|t| SurjectiveMap::from_table(t).expect("surjective"))
        .collect();
    let induced: Vec<FiniteStructure> =
        maps.par_iter().map(|f| induced_structure(&k, f).expect("sizes match")).collect();
    let mut classes: HashMap<&FiniteStructure, Vec<usize>> = HashMap::new();
    for (i, s) in induced.iter().enumerate() {
        classes.entry(s).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = classes.into_values().collect();
    groups.sort();
    let failure = groups.par_iter().find_map_first(|members| {
        let f1 = &maps[members[0]];
        members[1..].iter().find_map(|&j| {
            let f2 = &maps[j];
            let found = aut.iter().any(|a| a.then(f1) == *f2);
            (!found).then(|| (f1.clone(), f2.clone()))
        })
    });
    Ok(HomogeneityCheck { surjections: maps.len(), classes: groups.len(), failure })
}

/// Printable listing of an orbit structure's symbols and orbit sizes.
pub fn orbit_report(k: &FiniteStructure) -> Report {
    let mut r = Report::new();
    for (decl, interp) in k.signature().symbols().iter().zip(k.interpretations()) {
        r.set(format!("{}.size", decl.name), interp.len());
        if let Some(first) = interp.as_dual().and_then(|s| s.iter().next()) {
            r.set(format!("{}.least", decl.name), join(&first.0));
        }
    }
    r
}
