//! Small named structures used by the demos, fixtures and tests.

use std::sync::Arc;

use crate::model::{FiniteStructure, Signature};

/// `n` points over the empty signature.
pub fn bare(n: usize) -> FiniteStructure {
    FiniteStructure::empty(Arc::new(Signature::empty()), n)
}

/// The `r`-path `0 - 1 - ... - (n-1)`.
pub fn r_path(n: usize) -> FiniteStructure {
    let mut s = FiniteStructure::empty(Arc::new(Signature::r_graph()), n);
    for k in 1..n {
        s.add_r_edge(k - 1, k).expect("r is declared");
    }
    s
}

/// The `r`-cycle on `n >= 3` points.
pub fn r_cycle(n: usize) -> FiniteStructure {
    let mut s = r_path(n);
    s.add_r_edge(n - 1, 0).expect("r is declared");
    s
}

/// `r`-paths of sizes `1..=max`.
pub fn r_paths_up_to(max: usize) -> Vec<FiniteStructure> {
    (1..=max).map(r_path).collect()
}
