//! Finite topological structures carrying direct relations (injective
//! tuples) and dual relations (ordered partitions), with the epimorphism
//! calculus, projective Fraïssé class checks, inverse-system construction,
//! dualization, orbit structures and `r`-quotients.

pub mod canon;
pub mod catalog;
pub mod class;
pub mod combinat;
pub mod epi;
pub mod error;
pub mod format;
pub mod group;
pub mod io;
pub mod limit;
pub mod model;
pub mod prespace;
pub mod report;
pub mod rng;
pub mod transforms;

pub use canon::{canonical_form, canonical_form_bounded, DEFAULT_CANON_BOUND};
pub use epi::{
    automorphism_group, common_refinement, enumerate_epimorphisms, find_isomorphism, induced_structure, is_epimorphism,
    Refinement,
};
pub use format::{parse_structure, serialize_structure};
pub use model::{
    DirectTuple, DualTuple, FiniteStructure, Interpretation, Signature, SurjectiveMap, SymbolDecl, SymbolKind,
    Violation, ViolationKind,
};

/// Every broken invariant of `s`; empty when `s` is valid.
pub fn validate_structure(s: &FiniteStructure) -> Vec<Violation> {
    s.validate()
}
