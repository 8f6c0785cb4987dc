//! Explicit finite classes of structures and the class axioms: hereditary
//! property (HP), joint surjecting property (JSP) and projective amalgamation
//! property (PAP).
//!
//! Classes are finite lists, so a failing JSP or PAP search may only mean
//! the witness is larger than `max_size`. Such failures are flagged
//! `bounded`. HP is decided exactly: every quotient of a member is no larger
//! than the member.

use std::fmt;

use rayon::prelude::*;

use crate::canon::{canonical_key, dedup_canonical, DEFAULT_CANON_BOUND};
use crate::combinat::set_partitions;
use crate::epi::{
    enumerate_epimorphisms, find_isomorphism, find_lift, first_epimorphism, induced_structure, is_epimorphism,
};
use crate::error::ClassError;
use crate::model::{FiniteStructure, Signature, SurjectiveMap};
use crate::report::{index_key, Report};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureClass {
    members: Vec<FiniteStructure>,
    max_size: usize,
}

impl StructureClass {
    /// Canonicalizes and deduplicates `members`, then sorts them into
    /// canonical order (smaller domains first).
    pub fn new(members: Vec<FiniteStructure>, max_size: usize) -> Result<Self, ClassError> {
        Self::with_canon_bound(members, max_size, DEFAULT_CANON_BOUND)
    }

    pub fn with_canon_bound(members: Vec<FiniteStructure>, max_size: usize, bound: usize) -> Result<Self, ClassError> {
        if members.is_empty() {
            return Err(ClassError::Empty);
        }
        for (index, m) in members.iter().enumerate() {
            let violations = m.validate();
            if !violations.is_empty() {
                return Err(ClassError::InvalidMember { index, violations });
            }
            if !m.same_signature(&members[0]) {
                return Err(ClassError::MixedSignatures);
            }
        }
        let members = dedup_canonical(&members, bound)?;
        Ok(StructureClass { members, max_size })
    }

    pub fn members(&self) -> &[FiniteStructure] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &FiniteStructure {
        &self.members[i]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn signature(&self) -> &Signature {
        self.members[0].signature()
    }

    /// Members no larger than `bound`, by index.
    pub fn indices_up_to(&self, bound: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.members.len()).filter(move |&i| self.members[i].size() <= bound)
    }

    /// The member isomorphic to `s`, with an isomorphism `s -> member`.
    pub fn find_member(&self, s: &FiniteStructure) -> Option<(usize, SurjectiveMap)> {
        let counts: Vec<usize> = s.interpretations().iter().map(|i| i.len()).collect();
        self.members.iter().enumerate().find_map(|(i, m)| {
            if m.size() != s.size() || m.interpretations().iter().map(|x| x.len()).ne(counts.iter().copied()) {
                return None;
            }
            find_isomorphism(s, m).ok().flatten().map(|iso| (i, iso))
        })
    }

    /// The class extended by every quotient of every member.
    pub fn with_quotients(&self) -> Result<StructureClass, ClassError> {
        let mut all = self.members.clone();
        for m in &self.members {
            for p in set_partitions(m.size()) {
                let f = SurjectiveMap::from_table(p).expect("growth strings are surjective");
                all.push(induced_structure(m, &f).expect("sizes match"));
            }
        }
        StructureClass::new(all, self.max_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    Hp,
    Jsp,
    Pap,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::Hp => "HP",
            Axiom::Jsp => "JSP",
            Axiom::Pap => "PAP",
        })
    }
}

/// One quotient of a member; `matched` is the member it is isomorphic to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientInstance {
    pub source: usize,
    pub map: SurjectiveMap,
    pub induced: FiniteStructure,
    pub matched: Option<(usize, SurjectiveMap)>,
}

/// A pair of members and, when found, `(c, c -> a, c -> b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointInstance {
    pub a: usize,
    pub b: usize,
    pub witness: Option<(usize, SurjectiveMap, SurjectiveMap)>,
}

/// `f_a: A -> C`, `f_b: B -> C` and, when found, `(d, g_a, g_b)` with
/// `f_a ∘ g_a = f_b ∘ g_b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamInstance {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub f_a: SurjectiveMap,
    pub f_b: SurjectiveMap,
    pub witness: Option<(usize, SurjectiveMap, SurjectiveMap)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    Quotient(QuotientInstance),
    Joint(JointInstance),
    Amalgam(AmalgamInstance),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub holds: bool,
    pub bounded: bool,
    /// Every instance examined, in instance order.
    pub instances: Vec<Evidence>,
}

impl AxiomReport {
    fn from_instances(axiom: Axiom, instances: Vec<Evidence>) -> Self {
        let holds = instances.iter().all(Evidence::satisfied);
        let bounded = !holds && axiom != Axiom::Hp;
        AxiomReport { axiom, holds, bounded, instances }
    }

    pub fn counterexample(&self) -> Option<&Evidence> {
        self.instances.iter().find(|e| !e.satisfied())
    }

    /// Re-checks every witness in the report against `cls`.
    pub fn recheck(&self, cls: &StructureClass) -> bool {
        self.instances.iter().all(|e| e.recheck(cls))
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("axiom", self.axiom).set("holds", self.holds).set("bounded", self.bounded);
        r.set("instances", self.instances.len());
        let failures = self.instances.iter().filter(|e| !e.satisfied()).count();
        r.set("failures", failures);
        if let Some(e) = self.counterexample() {
            e.describe(&mut r, "counterexample");
        }
        r
    }
}

impl Evidence {
    pub fn satisfied(&self) -> bool {
        match self {
            Evidence::Quotient(q) => q.matched.is_some(),
            Evidence::Joint(j) => j.witness.is_some(),
            Evidence::Amalgam(a) => a.witness.is_some(),
        }
    }

    fn recheck(&self, cls: &StructureClass) -> bool {
        let epi =
            |f: &SurjectiveMap, a: &FiniteStructure, b: &FiniteStructure| is_epimorphism(f, a, b).unwrap_or(false);
        match self {
            Evidence::Quotient(q) => {
                let source = cls.member(q.source);
                let ok = epi(&q.map, source, &q.induced);
                match &q.matched {
                    Some((m, iso)) => ok && iso.is_bijection() && epi(iso, &q.induced, cls.member(*m)),
                    None => ok,
                }
            }
            Evidence::Joint(j) => match &j.witness {
                Some((c, to_a, to_b)) => {
                    let c = cls.member(*c);
                    epi(to_a, c, cls.member(j.a)) && epi(to_b, c, cls.member(j.b))
                }
                None => true,
            },
            Evidence::Amalgam(p) => {
                let (a, b, c) = (cls.member(p.a), cls.member(p.b), cls.member(p.c));
                let base = epi(&p.f_a, a, c) && epi(&p.f_b, b, c);
                match &p.witness {
                    Some((d, g_a, g_b)) => {
                        let d = cls.member(*d);
                        base && epi(g_a, d, a) && epi(g_b, d, b) && g_a.then(&p.f_a) == g_b.then(&p.f_b)
                    }
                    None => base,
                }
            }
        }
    }

    fn describe(&self, r: &mut Report, prefix: &str) {
        match self {
            Evidence::Quotient(q) => {
                r.set(format!("{prefix}.source"), q.source);
                r.set_map(format!("{prefix}.map"), &q.map);
                r.set(format!("{prefix}.induced_size"), q.induced.size());
                if let Some(edges) = q.induced.r_edges() {
                    let e: Vec<String> = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                    r.set(format!("{prefix}.induced_r_edges"), e.join(" "));
                }
            }
            Evidence::Joint(j) => {
                r.set(format!("{prefix}.a"), j.a);
                r.set(format!("{prefix}.b"), j.b);
            }
            Evidence::Amalgam(p) => {
                r.set(format!("{prefix}.a"), p.a);
                r.set(format!("{prefix}.b"), p.b);
                r.set(format!("{prefix}.c"), p.c);
                r.set_map(format!("{prefix}.f_a"), &p.f_a);
                r.set_map(format!("{prefix}.f_b"), &p.f_b);
            }
        }
    }
}

/// HP: every quotient of a member is (isomorphic to) a member. Quotients are
/// taken up to relabeling of the target, one per set partition.
pub fn check_hp(cls: &StructureClass) -> AxiomReport {
    let jobs: Vec<(usize, Vec<usize>)> =
        (0..cls.len()).flat_map(|i| set_partitions(cls.member(i).size()).into_iter().map(move |p| (i, p))).collect();
    let instances = jobs
        .into_par_iter()
        .map(|(i, p)| {
            let map = SurjectiveMap::from_table(p).expect("growth strings are surjective");
            let induced = induced_structure(cls.member(i), &map).expect("sizes match");
            let matched = cls.find_member(&induced);
            Evidence::Quotient(QuotientInstance { source: i, map, induced, matched })
        })
        .collect();
    AxiomReport::from_instances(Axiom::Hp, instances)
}

/// The first member (canonical order, size at most `max_size`) that maps
/// onto both `a` and `b`.
pub fn joint_witness(
    cls: &StructureClass,
    a: &FiniteStructure,
    b: &FiniteStructure,
) -> Option<(usize, SurjectiveMap, SurjectiveMap)> {
    let lower = a.size().max(b.size());
    cls.indices_up_to(cls.max_size()).filter(|&c| cls.member(c).size() >= lower).find_map(|c| {
        let cs = cls.member(c);
        let to_a = first_epimorphism(cs, a).ok().flatten()?;
        let to_b = first_epimorphism(cs, b).ok().flatten()?;
        Some((c, to_a, to_b))
    })
}

pub fn check_jsp(cls: &StructureClass) -> AxiomReport {
    let pairs: Vec<(usize, usize)> = (0..cls.len()).flat_map(|a| (a..cls.len()).map(move |b| (a, b))).collect();
    let instances = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let witness = joint_witness(cls, cls.member(a), cls.member(b));
            Evidence::Joint(JointInstance { a, b, witness })
        })
        .collect();
    AxiomReport::from_instances(Axiom::Jsp, instances)
}

/// The first `(d, g_a, g_b)` with `D` a member of size at most `max_size`,
/// `g_a: D -> A`, `g_b: D -> B` epimorphisms and `f_a ∘ g_a = f_b ∘ g_b`.
/// Members are tried in canonical order, then `g_a` lexicographically.
pub fn amalgam_witness(
    cls: &StructureClass,
    a: &FiniteStructure,
    b: &FiniteStructure,
    f_a: &SurjectiveMap,
    f_b: &SurjectiveMap,
) -> Option<(usize, SurjectiveMap, SurjectiveMap)> {
    amalgam_witness_within(cls, cls.max_size(), a, b, f_a, f_b)
}

/// [`amalgam_witness`] with witnesses of at most `bound` points.
pub fn amalgam_witness_within(
    cls: &StructureClass,
    bound: usize,
    a: &FiniteStructure,
    b: &FiniteStructure,
    f_a: &SurjectiveMap,
    f_b: &SurjectiveMap,
) -> Option<(usize, SurjectiveMap, SurjectiveMap)> {
    let lower = a.size().max(b.size());
    cls.indices_up_to(bound).filter(|&d| cls.member(d).size() >= lower).find_map(|d| {
        let ds = cls.member(d);
        let to_a = enumerate_epimorphisms(ds, a).ok()?;
        to_a.into_iter().find_map(|g_a| {
            let target = g_a.then(f_a);
            find_lift(ds, b, f_b, &target).ok().flatten().map(|g_b| (d, g_a, g_b))
        })
    })
}

pub fn check_pap(cls: &StructureClass) -> AxiomReport {
    check_pap_within(cls, cls.max_size())
}

/// PAP restricted to instances whose `A`, `B` have at most `instance_bound`
/// points; witnesses may still use every member up to `max_size`.
pub fn check_pap_within(cls: &StructureClass, instance_bound: usize) -> AxiomReport {
    let small: Vec<usize> = cls.indices_up_to(instance_bound).collect();
    let mut jobs = Vec::new();
    for &c in &small {
        for &a in &small {
            let into_c_from_a = enumerate_epimorphisms(cls.member(a), cls.member(c)).expect("shared signature");
            if into_c_from_a.is_empty() {
                continue;
            }
            for &b in &small {
                let into_c_from_b = enumerate_epimorphisms(cls.member(b), cls.member(c)).expect("shared signature");
                for f_a in &into_c_from_a {
                    for f_b in &into_c_from_b {
                        jobs.push((a, b, c, f_a.clone(), f_b.clone()));
                    }
                }
            }
        }
    }
    jobs.sort_by(|x, y| (x.0, x.1, x.2, &x.3, &x.4).cmp(&(y.0, y.1, y.2, &y.3, &y.4)));
    let instances = jobs
        .into_par_iter()
        .map(|(a, b, c, f_a, f_b)| {
            let witness = amalgam_witness(cls, cls.member(a), cls.member(b), &f_a, &f_b);
            Evidence::Amalgam(AmalgamInstance { a, b, c, f_a, f_b, witness })
        })
        .collect();
    AxiomReport::from_instances(Axiom::Pap, instances)
}

/// The three axiom reports merged into one key-value report, one block per
/// axiom.
pub fn class_report(cls: &StructureClass, reports: &[AxiomReport]) -> Report {
    let mut r = Report::new();
    r.set("class.members", cls.len());
    r.set("class.max_size", cls.max_size());
    let sizes: Vec<String> = cls.members().iter().map(|m| m.size().to_string()).collect();
    r.set("class.sizes", sizes.join(" "));
    for rep in reports {
        r.merge_prefixed(&rep.axiom.to_string(), &rep.to_report());
    }
    r
}

/// Numbered member listing, for reports.
pub fn member_listing(cls: &StructureClass) -> Report {
    let mut r = Report::new();
    for (i, m) in cls.members().iter().enumerate() {
        let (size, _) = canonical_key(m);
        r.set(format!("member.{}.size", index_key(i, cls.len())), size);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{bare, r_cycle, r_path, r_paths_up_to};

    #[test]
    fn point_class_satisfies_everything() {
        let cls = StructureClass::new(vec![r_path(1)], 1).unwrap();
        for rep in [check_hp(&cls), check_jsp(&cls), check_pap(&cls)] {
            assert!(rep.holds, "{}", rep.axiom);
            assert!(!rep.bounded);
            assert!(rep.recheck(&cls));
        }
        let jsp = check_jsp(&cls);
        let Evidence::Joint(j) = &jsp.instances[0] else { panic!() };
        assert_eq!(j.witness.as_ref().unwrap().0, 0);
    }

    #[test]
    fn members_are_deduplicated_and_ordered() {
        let p3 = r_path(3);
        let q3 = crate::canon::relabel(&p3, &[1, 2, 0]);
        let cls = StructureClass::new(vec![r_path(4), q3, p3, r_path(1)], 4).unwrap();
        let sizes: Vec<usize> = cls.members().iter().map(|m| m.size()).collect();
        assert_eq!(sizes, vec![1, 3, 4]);
        assert!(matches!(StructureClass::new(vec![], 1), Err(ClassError::Empty)));
        assert!(matches!(StructureClass::new(vec![r_path(2), bare(2)], 2), Err(ClassError::MixedSignatures)));
    }

    #[test]
    fn paths_fail_hp_with_a_cycle_quotient() {
        let cls = StructureClass::new(r_paths_up_to(4), 4).unwrap();
        let hp = check_hp(&cls);
        assert!(!hp.holds);
        assert!(!hp.bounded);
        assert!(hp.recheck(&cls));
        // Golden: the first failure in instance order folds the two ends of
        // the canonical 4-path 2-0-1-3 together, giving a triangle.
        let Some(Evidence::Quotient(q)) = hp.counterexample() else { panic!() };
        assert_eq!(q.source, 3);
        assert_eq!(cls.member(q.source).r_edges().unwrap(), vec![(0, 1), (0, 2), (1, 3)]);
        assert_eq!(q.map.table(), &[0, 1, 2, 2]);
        assert!(find_isomorphism(&q.induced, &r_cycle(3)).unwrap().is_some());
        // Quotient counts: Bell numbers 1 + 2 + 5 + 15.
        assert_eq!(hp.instances.len(), 23);
        let failures = hp.instances.iter().filter(|e| !e.satisfied()).count();
        assert_eq!(failures, 1);
    }

    #[test]
    fn adding_quotients_restores_hp() {
        let cls = StructureClass::new(r_paths_up_to(4), 4).unwrap();
        let closed = cls.with_quotients().unwrap();
        assert!(check_hp(&closed).holds);
        assert_eq!(closed.with_quotients().unwrap(), closed);
    }

    #[test]
    fn hand_built_class_missing_a_quotient() {
        let cls = StructureClass::new(vec![r_path(1), r_path(3)], 3).unwrap();
        let hp = check_hp(&cls);
        assert!(!hp.holds);
        let Some(Evidence::Quotient(q)) = hp.counterexample() else { panic!() };
        assert_eq!(q.induced, r_path(2));
        assert!(hp.recheck(&cls));
    }

    #[test]
    fn paths_have_jsp() {
        let cls = StructureClass::new(r_paths_up_to(4), 4).unwrap();
        let jsp = check_jsp(&cls);
        assert!(jsp.holds);
        assert!(jsp.recheck(&cls));
        assert_eq!(jsp.instances.len(), 10);
    }

    #[test]
    fn jsp_failure_is_bounded() {
        // Two incompatible one-point-wide dual predicates: nothing in the
        // class maps onto both.
        use crate::model::{Signature, SymbolDecl};
        use std::sync::Arc;
        let sig = Arc::new(Signature::new(vec![SymbolDecl::dual("P", 2)], false).unwrap());
        let mut a = FiniteStructure::empty(sig.clone(), 2);
        a.insert_dual("P", vec![0, 1]).unwrap();
        let mut b = FiniteStructure::empty(sig.clone(), 2);
        b.insert_dual("P", vec![0, 1]).unwrap();
        b.insert_dual("P", vec![1, 0]).unwrap();
        let cls = StructureClass::new(vec![a, b], 2).unwrap();
        let jsp = check_jsp(&cls);
        assert!(!jsp.holds);
        assert!(jsp.bounded);
    }

    #[test]
    fn empty_signature_pap_uses_pullbacks() {
        let cls = StructureClass::new((1..=4).map(bare).collect(), 4).unwrap();
        let pap = check_pap(&cls);
        // Some amalgams need a pullback with more than 4 points (two maps
        // from 4 points onto 2), so the verdict is a bounded failure.
        assert!(!pap.holds);
        assert!(pap.bounded);
        assert!(pap.recheck(&cls));
        for e in &pap.instances {
            let Evidence::Amalgam(p) = e else { panic!() };
            let (a, b) = (cls.member(p.a).size(), cls.member(p.b).size());
            // Pullback size: sum over c of |f_a^{-1}(c)| * |f_b^{-1}(c)|.
            let fa = p.f_a.fibers();
            let fb = p.f_b.fibers();
            let pullback: usize = fa.iter().zip(&fb).map(|(x, y)| x.len() * y.len()).sum();
            assert!(pullback >= a.max(b));
            if pullback <= 4 {
                assert!(p.witness.is_some(), "pullback fits but no witness");
            }
        }
    }

    #[test]
    fn excluded_pullback_fails_pap() {
        // 3 -> 2 with fibers (2, 1) against 3 -> 2 with fibers (1, 2): any
        // amalgam needs 4 points, and the class stops at 3.
        let cls = StructureClass::new((1..=3).map(bare).collect(), 3).unwrap();
        let pap = check_pap(&cls);
        assert!(!pap.holds);
        let Some(Evidence::Amalgam(p)) = pap.counterexample() else { panic!() };
        assert!(p.witness.is_none());
        assert!(cls.member(p.a).size() >= 2 && cls.member(p.b).size() >= 2);
    }
}
