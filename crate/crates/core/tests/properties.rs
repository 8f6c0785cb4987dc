use std::collections::BTreeSet;
use std::sync::Arc;

use pfraisse::canon::relabel;
use pfraisse::catalog::r_paths_up_to;
use pfraisse::class::StructureClass;
use pfraisse::combinat::{injections, permutations, surjections};
use pfraisse::error::LimitError;
use pfraisse::group::{inverse, subgroups_of_symmetric};
use pfraisse::limit::{build_generic_sequence, evaluate_dual_tuple};
use pfraisse::prespace::{build_interval_system, check_prespace, quotient_by_r};
use pfraisse::transforms::{labeling_orbits, orbit_structure};
use pfraisse::{
    canonical_form, common_refinement, enumerate_epimorphisms, induced_structure, is_epimorphism, parse_structure,
    serialize_structure, FiniteStructure, Signature, SurjectiveMap, SymbolDecl,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random structure on `n` points: up to two ordinary symbols of either
/// kind and arity 1..=3, plus `r` half the time.
fn random_structure(n: usize, seed: u64) -> FiniteStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let with_r = rng.random_bool(0.5);
    let mut decls = Vec::new();
    if with_r {
        decls.push(SymbolDecl::direct("r", 2));
    }
    for i in 0..rng.random_range(0..=2) {
        let arity = rng.random_range(1..=3);
        decls.push(if rng.random_bool(0.5) {
            SymbolDecl::direct(format!("S{i}"), arity)
        } else {
            SymbolDecl::dual(format!("S{i}"), arity)
        });
    }
    let sig = Arc::new(Signature::new(decls.clone(), with_r).unwrap());
    random_over(&sig, n, &mut rng)
}

fn random_over(sig: &Arc<Signature>, n: usize, rng: &mut ChaCha8Rng) -> FiniteStructure {
    let mut s = FiniteStructure::empty(sig.clone(), n);
    for d in sig.symbols() {
        if sig.r_reserved() && d.name == "r" {
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(0.4) {
                        s.add_r_edge(a, b).unwrap();
                    }
                }
            }
        } else if d.kind == pfraisse::SymbolKind::Direct {
            for t in injections(n, d.arity) {
                if rng.random_bool(0.3) {
                    s.insert_direct(&d.name, t).unwrap();
                }
            }
        } else {
            for t in surjections(n, d.arity) {
                if rng.random_bool(0.3) {
                    s.insert_dual(&d.name, t).unwrap();
                }
            }
        }
    }
    s
}

fn random_surjection(n: usize, seed: u64) -> SurjectiveMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=n);
    let all = surjections(n, k);
    SurjectiveMap::from_table(all[rng.random_range(0..all.len())].clone()).unwrap()
}

fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let all = permutations(n);
    all[(seed % all.len() as u64) as usize].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn serialization_round_trips(n in 1usize..=5, seed in any::<u64>()) {
        let s = random_structure(n, seed);
        prop_assert!(s.is_valid());
        let text = serialize_structure(&s);
        prop_assert_eq!(parse_structure(&text).unwrap(), s);
    }

    #[test]
    fn canonical_form_is_a_relabeling_invariant(n in 1usize..=5, seed in any::<u64>(), p in any::<u64>()) {
        let s = random_structure(n, seed);
        let c = canonical_form(&s).unwrap();
        prop_assert_eq!(canonical_form(&c).unwrap(), c.clone());
        prop_assert_eq!(canonical_form(&relabel(&s, &random_permutation(n, p))).unwrap(), c);
    }

    #[test]
    fn surjections_are_epimorphisms_onto_what_they_induce(n in 1usize..=5, seed in any::<u64>(), m in any::<u64>()) {
        let k = random_structure(n, seed);
        let f = random_surjection(n, m);
        let induced = induced_structure(&k, &f).unwrap();
        prop_assert!(induced.is_valid());
        prop_assert!(is_epimorphism(&f, &k, &induced).unwrap());
    }

    #[test]
    fn epimorphisms_compose(n in 1usize..=5, seed in any::<u64>(), m1 in any::<u64>(), m2 in any::<u64>()) {
        let a = random_structure(n, seed);
        let f = random_surjection(n, m1);
        let b = induced_structure(&a, &f).unwrap();
        let g = random_surjection(b.size(), m2);
        let c = induced_structure(&b, &g).unwrap();
        prop_assert!(is_epimorphism(&f.then(&g), &a, &c).unwrap());
        prop_assert!(enumerate_epimorphisms(&a, &c).unwrap().contains(&f.then(&g)));
    }

    #[test]
    fn refinement_factors_both_maps(n in 1usize..=6, seed in any::<u64>(), m1 in any::<u64>(), m2 in any::<u64>()) {
        let k = random_structure(n, seed);
        let (f, g) = (random_surjection(n, m1), random_surjection(n, m2));
        let (a, b) = (induced_structure(&k, &f).unwrap(), induced_structure(&k, &g).unwrap());
        let rf = common_refinement(&k, &a, &b, &f, &g).unwrap();
        prop_assert_eq!(rf.h.then(&rf.factor_f), f);
        prop_assert_eq!(rf.h.then(&rf.factor_g), g);
        prop_assert!(rf.refined.size() <= a.size() * b.size());
        prop_assert!(is_epimorphism(&rf.h, &k, &rf.refined).unwrap());
        prop_assert!(is_epimorphism(&rf.factor_f, &rf.refined, &a).unwrap());
        prop_assert!(is_epimorphism(&rf.factor_g, &rf.refined, &b).unwrap());
    }

    #[test]
    fn quotient_projection_is_an_epimorphism(n in 1usize..=6, seed in any::<u64>()) {
        let s = random_structure(n, seed);
        if s.signature().r_reserved() && check_prespace(&s).unwrap().is_prespace() {
            let (q, map) = quotient_by_r(&s).unwrap();
            prop_assert!(is_epimorphism(&map, &s.without_symbol("r"), &q).unwrap());
        } else if s.signature().r_reserved() {
            prop_assert!(quotient_by_r(&s).is_err());
        }
    }

    #[test]
    fn generic_sequence_threads_satisfy_the_bonds(seed in 0u64..64) {
        let cls = StructureClass::new(r_paths_up_to(6), 6).unwrap();
        let sys = build_generic_sequence(&cls, 4, 2, seed).unwrap();
        prop_assert!(sys.validate().is_ok());
        for t in sys.threads() {
            prop_assert!(sys.is_thread(&t));
        }
        // The path language has no dual symbols to evaluate against.
        let err = evaluate_dual_tuple(&sys, 2, &vec![0; sys.level(2).size()]).unwrap_err();
        prop_assert_eq!(err, LimitError::ArityMismatch(1));
    }
}

#[test]
fn orbits_partition_the_labelings_and_are_invariant() {
    for n in 2..=4usize {
        for g in subgroups_of_symmetric(n) {
            for arity in 2..=n {
                let orbits = labeling_orbits(&g, arity);
                let all: BTreeSet<Vec<usize>> = surjections(n, arity).into_iter().collect();
                let union: BTreeSet<Vec<usize>> = orbits.iter().flatten().cloned().collect();
                assert_eq!(union, all);
                assert_eq!(orbits.iter().map(Vec::len).sum::<usize>(), all.len(), "orbits overlap");
            }
            let k = orbit_structure(&g, n).unwrap();
            for (decl, interp) in k.signature().symbols().iter().zip(k.interpretations()) {
                let set = interp.as_dual().unwrap();
                for p in g.elements() {
                    let pinv = inverse(p);
                    for e in set {
                        let moved: Vec<usize> = pinv.iter().map(|&y| e.0[y]).collect();
                        assert!(set.iter().any(|t| t.0 == moved), "{} not invariant", decl.name);
                    }
                }
            }
        }
    }
}

#[test]
fn interval_levels_are_paths_with_epimorphic_bonds() {
    let sys = build_interval_system(6);
    for n in 1..=6 {
        let edges = sys.level(n).r_edges().unwrap();
        assert_eq!(edges, (1..1usize << n).map(|k| (k - 1, k)).collect::<Vec<_>>());
    }
    for n in 1..6 {
        assert!(is_epimorphism(sys.bond(n), sys.level(n + 1), sys.level(n)).unwrap());
    }
}
