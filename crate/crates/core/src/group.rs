//! Explicit permutation groups on `{0..degree-1}`.
//!
//! Group file format:
//!
//! ```text
//! degree 4
//! generators
//! 1 2 3 0
//! ```
//!
//! Each permutation line is an image list. Under `elements` (the default
//! section) the lines must already form a group; under `generators` the
//! closure is computed.

use std::collections::{BTreeSet, VecDeque};

use crate::combinat::permutations;
use crate::error::{ParseError, TransformError};
use crate::format::{parse_usize, tokenize};

pub type Permutation = Vec<usize>;

pub fn identity(degree: usize) -> Permutation {
    (0..degree).collect()
}

/// `second ∘ first`: apply `first`, then `second`.
pub fn compose(first: &[usize], second: &[usize]) -> Permutation {
    first.iter().map(|&x| second[x]).collect()
}

pub fn inverse(p: &[usize]) -> Permutation {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

fn is_permutation(p: &[usize], degree: usize) -> bool {
    p.len() == degree && p.iter().copied().collect::<BTreeSet<_>>() == (0..degree).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PermutationGroup {
    degree: usize,
    // Sorted; the identity comes first.
    elements: Vec<Permutation>,
}

impl PermutationGroup {
    /// Checks closure, inverses and the identity.
    pub fn from_elements(degree: usize, elements: Vec<Permutation>) -> Result<Self, TransformError> {
        let set: BTreeSet<Permutation> = elements.into_iter().collect();
        if let Some(p) = set.iter().find(|p| !is_permutation(p, degree)) {
            return Err(TransformError::NotAGroup(format!("{p:?} is not a permutation of {degree} points")));
        }
        if !set.contains(&identity(degree)) {
            return Err(TransformError::NotAGroup("identity missing".into()));
        }
        for p in &set {
            if !set.contains(&inverse(p)) {
                return Err(TransformError::NotAGroup(format!("inverse of {p:?} missing")));
            }
            for q in &set {
                if !set.contains(&compose(p, q)) {
                    return Err(TransformError::NotAGroup(format!("{p:?} then {q:?} missing")));
                }
            }
        }
        Ok(PermutationGroup { degree, elements: set.into_iter().collect() })
    }

    /// The subgroup generated by `generators`.
    pub fn generate(degree: usize, generators: &[Permutation]) -> Result<Self, TransformError> {
        if let Some(p) = generators.iter().find(|p| !is_permutation(p, degree)) {
            return Err(TransformError::NotAGroup(format!("{p:?} is not a permutation of {degree} points")));
        }
        let mut seen: BTreeSet<Permutation> = BTreeSet::new();
        let mut queue = VecDeque::from([identity(degree)]);
        seen.insert(identity(degree));
        while let Some(p) = queue.pop_front() {
            for g in generators {
                let q = compose(&p, g);
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
        Ok(PermutationGroup { degree, elements: seen.into_iter().collect() })
    }

    pub fn trivial(degree: usize) -> Self {
        PermutationGroup { degree, elements: vec![identity(degree)] }
    }

    pub fn symmetric(degree: usize) -> Self {
        PermutationGroup { degree, elements: permutations(degree) }
    }

    pub fn cyclic(degree: usize) -> Self {
        let shift: Permutation = (0..degree).map(|x| (x + 1) % degree).collect();
        Self::generate(degree, &[shift]).expect("shift is a permutation")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, p: &[usize]) -> bool {
        self.elements.binary_search_by(|e| e.as_slice().cmp(p)).is_ok()
    }
}

/// Every subgroup of the symmetric group on `degree` points, sorted by
/// order and then elements. Built by closing upward from the trivial group:
/// each subgroup arises from a smaller one by adding one element.
pub fn subgroups_of_symmetric(degree: usize) -> Vec<PermutationGroup> {
    let all = permutations(degree);
    let mut found: BTreeSet<Vec<Permutation>> = BTreeSet::new();
    let trivial = PermutationGroup::trivial(degree);
    found.insert(trivial.elements.clone());
    let mut frontier = vec![trivial];
    while let Some(h) = frontier.pop() {
        for p in &all {
            if h.contains(p) {
                continue;
            }
            let mut gens = h.elements.clone();
            gens.push(p.clone());
            let g = PermutationGroup::generate(degree, &gens).expect("permutations");
            if found.insert(g.elements.clone()) {
                frontier.push(g);
            }
        }
    }
    let mut out: Vec<PermutationGroup> =
        found.into_iter().map(|elements| PermutationGroup { degree, elements }).collect();
    out.sort_by(|a, b| (a.order(), &a.elements).cmp(&(b.order(), &b.elements)));
    out
}

pub fn parse_group(text: &str) -> Result<PermutationGroup, ParseError> {
    let mut degree: Option<usize> = None;
    let mut generated = false;
    let mut perms: Vec<Permutation> = Vec::new();
    let mut last_line = 1;
    for (ln, toks) in tokenize(text) {
        last_line = ln;
        match toks[0].text {
            "degree" => {
                if degree.is_some() || toks.len() != 2 {
                    return Err(ParseError::new(ln, toks[0].column, "expected a single `degree <n>` line first"));
                }
                degree = Some(parse_usize(&toks[1], ln, "degree")?);
            }
            "generators" | "elements" => {
                if toks.len() != 1 || !perms.is_empty() {
                    return Err(ParseError::new(ln, toks[0].column, "section header must precede permutations"));
                }
                generated = toks[0].text == "generators";
            }
            _ => {
                let Some(n) = degree else {
                    return Err(ParseError::new(ln, toks[0].column, "permutation before `degree`"));
                };
                let p = toks.iter().map(|t| parse_usize(t, ln, "point")).collect::<Result<Vec<_>, _>>()?;
                if !is_permutation(&p, n) {
                    return Err(ParseError::new(ln, toks[0].column, format!("not a permutation of {n} points")));
                }
                perms.push(p);
            }
        }
    }
    let Some(n) = degree else {
        return Err(ParseError::new(last_line, 1, "missing `degree` line"));
    };
    let result = if generated {
        PermutationGroup::generate(n, &perms)
    } else if perms.is_empty() {
        Ok(PermutationGroup::trivial(n))
    } else {
        PermutationGroup::from_elements(n, perms)
    };
    result.map_err(|e| ParseError::new(last_line, 1, e.to_string()))
}

pub fn serialize_group(g: &PermutationGroup) -> String {
    let mut out = format!("degree {}\nelements\n", g.degree());
    for p in g.elements() {
        out.push_str(&crate::format::join(p));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subgroups_of_s4() {
        let subs = subgroups_of_symmetric(4);
        assert_eq!(subs.len(), 30);
        let orders: BTreeSet<usize> = subs.iter().map(|g| g.order()).collect();
        assert_eq!(orders, [1, 2, 3, 4, 6, 8, 12, 24].into_iter().collect());
        assert_eq!(subgroups_of_symmetric(3).len(), 6);
    }

    #[test]
    fn closure_and_validation() {
        assert_eq!(PermutationGroup::cyclic(4).order(), 4);
        assert_eq!(PermutationGroup::generate(4, &[vec![1, 0, 2, 3], vec![1, 2, 3, 0]]).unwrap().order(), 24);
        assert!(PermutationGroup::from_elements(3, vec![vec![0, 1, 2], vec![1, 2, 0]]).is_err());
        assert!(PermutationGroup::from_elements(3, vec![vec![0, 1, 2], vec![1, 0, 2]]).is_ok());
    }

    #[test]
    fn group_file() {
        let g = parse_group("degree 4\ngenerators\n1 2 3 0 # rotation\n").unwrap();
        assert_eq!(g, PermutationGroup::cyclic(4));
        assert_eq!(parse_group(&serialize_group(&g)).unwrap(), g);
        assert!(parse_group("degree 3\n0 1 1\n").is_err());
        assert!(parse_group("1 0\n").is_err());
        assert!(parse_group("degree 3\nelements\n1 2 0\n").is_err());
    }
}
