//! Canonical forms by exhaustive relabeling.
//!
//! The canonical form is the relabeling whose encoding (each interpretation
//! as a sorted tuple list, in signature order) is lexicographically least
//! over all bijections of the domain.

use std::collections::BTreeSet;

use crate::combinat::permutations;
use crate::error::CanonError;
use crate::model::{DirectTuple, DualTuple, FiniteStructure, Interpretation};

pub const DEFAULT_CANON_BOUND: usize = 10;

/// Relabels `s` along the bijection `perm` (old point `x` becomes `perm[x]`).
pub fn relabel(s: &FiniteStructure, perm: &[usize]) -> FiniteStructure {
    let mut inverse = vec![0; perm.len()];
    for (x, &y) in perm.iter().enumerate() {
        inverse[y] = x;
    }
    let interps = s
        .interpretations()
        .iter()
        .map(|interp| match interp {
            Interpretation::Direct(set) => Interpretation::Direct(
                set.iter().map(|t| DirectTuple(t.0.iter().map(|&x| perm[x]).collect())).collect(),
            ),
            Interpretation::Dual(set) => {
                Interpretation::Dual(set.iter().map(|t| DualTuple(inverse.iter().map(|&x| t.0[x]).collect())).collect())
            }
        })
        .collect();
    FiniteStructure::from_parts(s.signature_arc().clone(), s.size(), interps)
}

/// Each interpretation as a sorted row list, in signature order.
pub type Encoding = Vec<Vec<Vec<usize>>>;

fn encode(s: &FiniteStructure, perm: &[usize], inverse: &[usize]) -> Encoding {
    s.interpretations()
        .iter()
        .map(|interp| {
            let mut rows: Vec<Vec<usize>> = match interp {
                Interpretation::Direct(set) => set.iter().map(|t| t.0.iter().map(|&x| perm[x]).collect()).collect(),
                Interpretation::Dual(set) => set.iter().map(|t| inverse.iter().map(|&x| t.0[x]).collect()).collect(),
            };
            rows.sort_unstable();
            rows
        })
        .collect()
}

/// The lexicographically least relabeling of `s`, found by trying all
/// `size!` bijections. Refuses domains above `bound`.
pub fn canonical_form_bounded(s: &FiniteStructure, bound: usize) -> Result<FiniteStructure, CanonError> {
    let n = s.size();
    if n > bound {
        return Err(CanonError::TooLarge { size: n, bound });
    }
    let mut best: Option<(Encoding, Vec<usize>)> = None;
    let mut inverse = vec![0; n];
    for perm in permutations(n) {
        for (x, &y) in perm.iter().enumerate() {
            inverse[y] = x;
        }
        let code = encode(s, &perm, &inverse);
        if best.as_ref().is_none_or(|(b, _)| code < *b) {
            best = Some((code, perm));
        }
    }
    let (_, perm) = best.expect("domain is nonempty");
    Ok(relabel(s, &perm))
}

pub fn canonical_form(s: &FiniteStructure) -> Result<FiniteStructure, CanonError> {
    canonical_form_bounded(s, DEFAULT_CANON_BOUND)
}

/// Sort key placing structures in canonical order: smaller domains first,
/// then by encoding.
pub fn canonical_key(s: &FiniteStructure) -> (usize, Encoding) {
    let id: Vec<usize> = (0..s.size()).collect();
    (s.size(), encode(s, &id, &id))
}

/// Distinct canonical forms among `items`, in canonical order.
pub fn dedup_canonical(items: &[FiniteStructure], bound: usize) -> Result<Vec<FiniteStructure>, CanonError> {
    let mut set = BTreeSet::new();
    for s in items {
        let c = canonical_form_bounded(s, bound)?;
        set.insert((canonical_key(&c), c));
    }
    Ok(set.into_iter().map(|(_, c)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{r_cycle, r_path};

    #[test]
    fn relabelings_of_the_path_agree() {
        let p = r_path(3);
        let q = relabel(&p, &[2, 0, 1]);
        assert_ne!(p, q);
        assert_eq!(canonical_form(&p).unwrap(), canonical_form(&q).unwrap());
    }

    #[test]
    fn path_and_cycle_differ() {
        assert_ne!(canonical_form(&r_path(3)).unwrap(), canonical_form(&r_cycle(3)).unwrap());
    }

    #[test]
    fn single_point_is_fixed() {
        let p = r_path(1);
        assert_eq!(canonical_form(&p).unwrap(), p);
    }

    #[test]
    fn bound_is_enforced() {
        assert_eq!(canonical_form_bounded(&r_path(4), 3), Err(CanonError::TooLarge { size: 4, bound: 3 }));
        assert!(canonical_form(&r_path(11)).is_err());
    }

    #[test]
    fn idempotent() {
        let c = canonical_form(&r_cycle(4)).unwrap();
        assert_eq!(canonical_form(&c).unwrap(), c);
    }
}
