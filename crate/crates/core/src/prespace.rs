//! The reserved relation `r`: pre-space checks, quotients by `r`, and the
//! dyadic-interval and Cantor inverse systems whose limits have `[0,1]` and
//! the Cantor set as `r`-quotients.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::epi::{induced_structure, is_epimorphism};
use crate::error::PrespaceError;
use crate::limit::{InverseSystem, Provenance};
use crate::model::{FiniteStructure, Signature, SurjectiveMap, RESERVED_R};
use crate::report::{index_key, Report};

/// An exact dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Self {
        let shift = num.trailing_zeros().min(exp);
        if num == 0 {
            return Dyadic { num: 0, exp: 0 };
        }
        Dyadic { num: num >> shift, exp: exp - shift }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }
}

impl std::ops::Sub for Dyadic {
    type Output = Dyadic;

    fn sub(self, other: Dyadic) -> Dyadic {
        let e = self.exp.max(other.exp);
        Dyadic::new((self.num << (e - self.exp)) - (other.num << (e - other.exp)), e)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        (self.num << (e - self.exp)).cmp(&(other.num << (e - other.exp)))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrespaceCheck {
    pub symmetric: bool,
    /// A witness `(a, b, c)` with `a r b`, `b r c`, `a ≠ c` and not `a r c`.
    pub intransitive: Option<(usize, usize, usize)>,
    /// Equivalence classes, by least member, when `r` is transitive.
    pub classes: Option<Vec<Vec<usize>>>,
}

impl PrespaceCheck {
    pub fn is_prespace(&self) -> bool {
        self.symmetric && self.intransitive.is_none()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("symmetric", self.symmetric)
            .set("transitive", self.intransitive.is_none())
            .set("prespace", self.is_prespace());
        if let Some((a, b, c)) = self.intransitive {
            r.set("counterexample", format!("{a} r {b}, {b} r {c}, not {a} r {c}"));
        }
        if let Some(classes) = &self.classes {
            r.set("classes", classes.len());
            for (i, c) in classes.iter().enumerate() {
                r.set(format!("class.{}", index_key(i, classes.len())), crate::format::join(c));
            }
        }
        r
    }
}

fn r_adjacency(s: &FiniteStructure) -> Result<Vec<Vec<bool>>, PrespaceError> {
    let idx = s.signature().r_index().ok_or(PrespaceError::NoReservedR)?;
    let n = s.size();
    let mut adj = vec![vec![false; n]; n];
    for (x, row) in adj.iter_mut().enumerate() {
        row[x] = true;
    }
    for t in s.interpretation(idx).as_direct().expect("r is direct") {
        adj[t.0[0]][t.0[1]] = true;
    }
    Ok(adj)
}

/// Symmetry and transitivity of `r` with its implicit diagonal.
pub fn check_prespace(s: &FiniteStructure) -> Result<PrespaceCheck, PrespaceError> {
    let adj = r_adjacency(s)?;
    let n = s.size();
    let symmetric = (0..n).all(|a| (0..n).all(|b| adj[a][b] == adj[b][a]));
    let intransitive = (0..n).find_map(|a| {
        (0..n).find_map(|b| {
            if !adj[a][b] {
                return None;
            }
            (0..n).find(|&c| adj[b][c] && !adj[a][c]).map(|c| (a, b, c))
        })
    });
    let classes = (symmetric && intransitive.is_none()).then(|| {
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for a in 0..n {
            if !seen[a] {
                let class: Vec<usize> = (a..n).filter(|&b| adj[a][b]).collect();
                for &b in &class {
                    seen[b] = true;
                }
                out.push(class);
            }
        }
        out
    });
    Ok(PrespaceCheck { symmetric, intransitive, classes })
}

/// The quotient of `s` by the equivalence `r`: classes ordered by least
/// member, `r` dropped, remaining symbols induced along the projection.
pub fn quotient_by_r(s: &FiniteStructure) -> Result<(FiniteStructure, SurjectiveMap), PrespaceError> {
    let check = check_prespace(s)?;
    let classes = check.classes.ok_or(PrespaceError::NotTransitive)?;
    let mut table = vec![0; s.size()];
    for (i, class) in classes.iter().enumerate() {
        for &x in class {
            table[x] = i;
        }
    }
    let map = SurjectiveMap::new(table, classes.len()).expect("classes cover the domain");
    let quotient = induced_structure(&s.without_symbol(RESERVED_R), &map).expect("sizes match");
    Ok((quotient, map))
}

fn r_graph_level(size: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> FiniteStructure {
    let mut s = FiniteStructure::empty(Arc::new(Signature::r_graph()), size);
    for (a, b) in edges {
        s.add_r_edge(a, b).expect("r is declared");
    }
    s
}

/// Atom `k` of level `n` is the closed interval `[k/2^n, (k+1)/2^n]`.
pub fn dyadic_atom(n: u32, k: u64) -> (Dyadic, Dyadic) {
    (Dyadic::new(k, n), Dyadic::new(k + 1, n))
}

fn halving_bonds(depth: usize) -> Vec<SurjectiveMap> {
    (1..depth)
        .map(|n| SurjectiveMap::new((0..1usize << (n + 1)).map(|k| k / 2).collect(), 1 << n).expect("onto"))
        .collect()
}

/// Levels `1..=depth`: the `2^n` dyadic atoms of `[0,1]`, with `r` joining
/// atoms whose closed intervals meet. Bonds forget the last bit.
pub fn build_interval_system(depth: usize) -> InverseSystem {
    let mut levels = Vec::with_capacity(depth);
    let mut log = Vec::new();
    for n in 1..=depth as u32 {
        let count = 1u64 << n;
        let mut edges = Vec::new();
        let mut point_meets = 0;
        for k in 0..count {
            for l in k + 1..count {
                let (a0, a1) = dyadic_atom(n, k);
                let (b0, b1) = dyadic_atom(n, l);
                let lo = a0.max(b0);
                let hi = a1.min(b1);
                if lo <= hi {
                    edges.push((k as usize, l as usize));
                    if lo == hi {
                        point_meets += 1;
                    }
                }
            }
        }
        log.push(Provenance::Note(format!(
            "level {n}: {point_meets} pairs of atoms meet in a single endpoint, so their regular-closed meet is empty; they are the r-edges"
        )));
        if n > 1 {
            log.push(Provenance::Note(format!(
                "level {n}: atoms 2k and 2k+1 are the halves of atom k of level {}; their join is atom k",
                n - 1
            )));
        }
        log.push(Provenance::Note(format!(
            "level {n}: the complement of atom k is the join of the other {} atoms",
            count - 1
        )));
        levels.push(r_graph_level(count as usize, edges));
    }
    InverseSystem::new(levels, halving_bonds(depth), log).expect("halving is an epimorphism of dyadic paths")
}

/// Levels `1..=depth`: `2^n` cylinders, no `r`-edges, bit-truncation bonds.
pub fn build_cantor_system(depth: usize) -> InverseSystem {
    let levels = (1..=depth).map(|n| r_graph_level(1 << n, [])).collect();
    let log = vec![Provenance::Note("distinct cylinders are disjoint; r is the diagonal at every level".into())];
    InverseSystem::new(levels, halving_bonds(depth), log).expect("truncation is an epimorphism")
}

/// Which geometric reading of the levels to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Interval,
    Cantor,
    Abstract,
}

fn components(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}

fn max_clique(adj: &[Vec<usize>]) -> usize {
    fn grow(adj: &[Vec<usize>], clique: usize, candidates: Vec<usize>, best: &mut usize) {
        *best = (*best).max(clique);
        for (i, &v) in candidates.iter().enumerate() {
            if clique + candidates.len() - i <= *best {
                return;
            }
            let next: Vec<usize> = candidates[i + 1..].iter().copied().filter(|u| adj[v].contains(u)).collect();
            grow(adj, clique + 1, next, best);
        }
    }
    let mut best = 0;
    grow(adj, 0, (0..adj.len()).collect(), &mut best);
    best
}

/// Per-level `r` diagnostics, and the limit relation on the threads of the
/// prefix: `x ~ y` when their coordinates are `r`-related or equal at every
/// level.
pub fn limit_quotient_report(sys: &InverseSystem, geometry: Geometry) -> Result<Report, PrespaceError> {
    let mut r = Report::new();
    let d = sys.depth();
    r.set("depth", d);
    let mut all_paths = true;
    let mut all_epi = true;
    for n in 1..=d {
        let level = sys.level(n);
        let key = index_key(n, d);
        let edges = level.r_edges().ok_or(PrespaceError::NoReservedR)?;
        let mut adj = vec![Vec::new(); level.size()];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        r.set(format!("level.{key}.atoms"), level.size());
        r.set(format!("level.{key}.edges"), edges.len());
        r.set(format!("level.{key}.components"), components(&adj));
        r.set(format!("level.{key}.max_degree"), adj.iter().map(Vec::len).max().unwrap_or(0));
        if geometry == Geometry::Interval {
            let is_path = edges == (1..level.size()).map(|k| (k - 1, k)).collect::<Vec<_>>();
            all_paths &= is_path;
            r.set(format!("level.{key}.is_path"), is_path);
            let mesh = (0..level.size() as u64)
                .map(|k| {
                    let (lo, hi) = dyadic_atom(n as u32, k);
                    hi - lo
                })
                .max()
                .expect("nonempty level");
            r.set(format!("level.{key}.mesh"), mesh);
        }
        if n < d {
            let ok = is_epimorphism(sys.bond(n), sys.level(n + 1), level).unwrap_or(false);
            all_epi &= ok;
            r.set(format!("bond.{key}.epimorphism"), ok);
        }
    }
    r.set("bonds_epimorphic", all_epi);
    if geometry == Geometry::Interval {
        r.set("levels_are_paths", all_paths);
    }

    let threads = sys.threads();
    let t = threads.len();
    let related = |x: usize, y: usize| {
        (1..=d).all(|n| {
            let (a, b) = (threads[x].coordinates[n - 1], threads[y].coordinates[n - 1]);
            a == b || sys.level(n).r_related(a, b)
        })
    };
    let adj: Vec<Vec<usize>> =
        (0..t).into_par_iter().map(|x| (0..t).filter(|&y| y != x && related(x, y)).collect()).collect();
    let pairs: usize = adj.iter().map(Vec::len).sum::<usize>() / 2;
    let transitive = (0..t).all(|x| adj[x].iter().all(|&y| adj[y].iter().all(|&z| z == x || adj[x].contains(&z))));
    r.set("limit.threads", t);
    r.set("limit.related_pairs", pairs);
    r.set("limit.max_class_size", max_clique(&adj).max(1));
    r.set("limit.transitive_at_depth", transitive);
    if geometry == Geometry::Interval {
        let top = sys.level(d).size() as u64;
        for (x, partners) in adj.iter().enumerate() {
            for &y in partners.iter().filter(|&&y| y > x) {
                let point = Dyadic::new(y as u64, top.trailing_zeros());
                r.set(
                    format!("limit.pair.{}.{}", index_key(x, t), index_key(y, t)),
                    format!("{x} {y} meet at {point}"),
                );
            }
        }
    }
    Ok(r)
}
