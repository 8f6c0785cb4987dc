//! Signatures, finite structures and surjective maps.
//!
//! Domains are always the initial segment `0..size`. Direct interpretations
//! hold injective tuples; dual interpretations hold surjective labelings of
//! the whole domain (ordered partitions into nonempty blocks).

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::ModelError;

/// Name of the reserved binary symbol.
pub const RESERVED_R: &str = "r";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Direct,
    Dual,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::Direct => f.write_str("direct"),
            SymbolKind::Dual => f.write_str("dual"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolDecl {
    pub name: String,
    pub arity: usize,
    pub kind: SymbolKind,
}

impl SymbolDecl {
    pub fn direct(name: impl Into<String>, arity: usize) -> Self {
        SymbolDecl { name: name.into(), arity, kind: SymbolKind::Direct }
    }

    pub fn dual(name: impl Into<String>, arity: usize) -> Self {
        SymbolDecl { name: name.into(), arity, kind: SymbolKind::Dual }
    }
}

/// A relational language. Symbol order is significant: interpretations of a
/// [`FiniteStructure`] are stored in the same order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    symbols: Vec<SymbolDecl>,
    r_reserved: bool,
}

impl Signature {
    pub fn new(symbols: Vec<SymbolDecl>, r_reserved: bool) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if s.name.is_empty() || s.name.chars().any(|c| c.is_whitespace() || c == '#') {
                return Err(ModelError::BadSymbolName(s.name.clone()));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(ModelError::DuplicateSymbol(s.name.clone()));
            }
            if s.arity == 0 {
                return Err(ModelError::ZeroArity(s.name.clone()));
            }
        }
        if r_reserved {
            match symbols.iter().find(|s| s.name == RESERVED_R) {
                Some(s) if s.kind == SymbolKind::Direct && s.arity == 2 => {}
                _ => return Err(ModelError::BadReservedSymbol),
            }
        }
        Ok(Signature { symbols, r_reserved })
    }

    pub fn empty() -> Self {
        Signature { symbols: Vec::new(), r_reserved: false }
    }

    /// The language `{r}` with `r` reserved.
    pub fn r_graph() -> Self {
        Signature { symbols: vec![SymbolDecl::direct(RESERVED_R, 2)], r_reserved: true }
    }

    pub fn symbols(&self) -> &[SymbolDecl] {
        &self.symbols
    }

    pub fn r_reserved(&self) -> bool {
        self.r_reserved
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolDecl> {
        self.symbols.iter().find(|s| s.name == name)
    }

    /// Index of the reserved `r`, if the signature reserves it.
    pub fn r_index(&self) -> Option<usize> {
        if self.r_reserved {
            self.index_of(RESERVED_R)
        } else {
            None
        }
    }

    /// The signature with symbol `name` dropped. Dropping `r` clears the
    /// reservation.
    pub fn without(&self, name: &str) -> Signature {
        let symbols = self.symbols.iter().filter(|s| s.name != name).cloned().collect();
        Signature { symbols, r_reserved: self.r_reserved && name != RESERVED_R }
    }
}

/// An injective map `{0..n-1} -> K`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectTuple(pub Vec<usize>);

impl DirectTuple {
    pub fn is_injective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.iter().all(|x| seen.insert(*x))
    }
}

/// A surjective labeling `K -> {0..n-1}`, stored as the label of each point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualTuple(pub Vec<usize>);

impl DualTuple {
    /// True when every label `0..arity` is used and no label is out of range.
    pub fn is_surjective_onto(&self, arity: usize) -> bool {
        let mut hit = vec![false; arity];
        for &l in &self.0 {
            match hit.get_mut(l) {
                Some(h) => *h = true,
                None => return false,
            }
        }
        hit.into_iter().all(|h| h)
    }

    /// The blocks `e^{-1}(0), ..., e^{-1}(arity-1)`.
    pub fn blocks(&self, arity: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); arity];
        for (x, &l) in self.0.iter().enumerate() {
            if l < arity {
                out[l].push(x);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Interpretation {
    Direct(BTreeSet<DirectTuple>),
    Dual(BTreeSet<DualTuple>),
}

impl Interpretation {
    pub fn empty(kind: SymbolKind) -> Self {
        match kind {
            SymbolKind::Direct => Interpretation::Direct(BTreeSet::new()),
            SymbolKind::Dual => Interpretation::Dual(BTreeSet::new()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Interpretation::Direct(s) => s.len(),
            Interpretation::Dual(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> SymbolKind {
        match self {
            Interpretation::Direct(_) => SymbolKind::Direct,
            Interpretation::Dual(_) => SymbolKind::Dual,
        }
    }

    pub fn as_direct(&self) -> Option<&BTreeSet<DirectTuple>> {
        match self {
            Interpretation::Direct(s) => Some(s),
            Interpretation::Dual(_) => None,
        }
    }

    pub fn as_dual(&self) -> Option<&BTreeSet<DualTuple>> {
        match self {
            Interpretation::Dual(s) => Some(s),
            Interpretation::Direct(_) => None,
        }
    }
}

/// What went wrong with one symbol or tuple of a structure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    ArityMismatch { expected: usize, found: usize },
    IndexOutOfRange,
    NotInjective,
    NotSurjective,
    NotSymmetric,
    KindMismatch,
    MissingInterpretation,
    EmptyDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub symbol: String,
    pub tuple: Vec<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuple: Vec<String> = self.tuple.iter().map(|x| x.to_string()).collect();
        let what = match &self.kind {
            ViolationKind::ArityMismatch { expected, found } => {
                format!("arity mismatch (expected {expected}, found {found})")
            }
            ViolationKind::IndexOutOfRange => "index out of range".to_string(),
            ViolationKind::NotInjective => "not injective".to_string(),
            ViolationKind::NotSurjective => "not surjective".to_string(),
            ViolationKind::NotSymmetric => format!("{} not symmetric", self.symbol),
            ViolationKind::KindMismatch => "interpretation kind does not match declaration".to_string(),
            ViolationKind::MissingInterpretation => "interpretation count does not match signature".to_string(),
            ViolationKind::EmptyDomain => "domain is empty".to_string(),
        };
        write!(f, "{} ({}): {}", self.symbol, tuple.join(" "), what)
    }
}

/// A finite topological structure on the discrete domain `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteStructure {
    sig: Arc<Signature>,
    size: usize,
    interps: Vec<Interpretation>,
}

impl FiniteStructure {
    /// A structure with every interpretation empty.
    pub fn empty(sig: Arc<Signature>, size: usize) -> Self {
        let interps = sig.symbols().iter().map(|s| Interpretation::empty(s.kind)).collect();
        FiniteStructure { sig, size, interps }
    }

    /// Assembles a structure without checking it; see [`FiniteStructure::validate`].
    pub fn from_parts(sig: Arc<Signature>, size: usize, interps: Vec<Interpretation>) -> Self {
        FiniteStructure { sig, size, interps }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn interpretations(&self) -> &[Interpretation] {
        &self.interps
    }

    pub fn interpretation(&self, index: usize) -> &Interpretation {
        &self.interps[index]
    }

    pub fn interpretation_of(&self, name: &str) -> Option<&Interpretation> {
        self.sig.index_of(name).map(|i| &self.interps[i])
    }

    pub fn same_signature(&self, other: &FiniteStructure) -> bool {
        Arc::ptr_eq(&self.sig, &other.sig) || *self.sig == *other.sig
    }

    pub fn insert_direct(&mut self, name: &str, tuple: Vec<usize>) -> Result<(), ModelError> {
        let i = self.sig.index_of(name).ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))?;
        match &mut self.interps[i] {
            Interpretation::Direct(set) => {
                set.insert(DirectTuple(tuple));
                Ok(())
            }
            Interpretation::Dual(_) => Err(ModelError::WrongKind(name.to_string())),
        }
    }

    pub fn insert_dual(&mut self, name: &str, labeling: Vec<usize>) -> Result<(), ModelError> {
        let i = self.sig.index_of(name).ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))?;
        match &mut self.interps[i] {
            Interpretation::Dual(set) => {
                set.insert(DualTuple(labeling));
                Ok(())
            }
            Interpretation::Direct(_) => Err(ModelError::WrongKind(name.to_string())),
        }
    }

    /// Adds both orientations of an `r`-edge. Loops are ignored: the diagonal
    /// is implicit.
    pub fn add_r_edge(&mut self, a: usize, b: usize) -> Result<(), ModelError> {
        if a == b {
            return Ok(());
        }
        self.insert_direct(RESERVED_R, vec![a, b])?;
        self.insert_direct(RESERVED_R, vec![b, a])
    }

    /// Off-diagonal `r`-pairs `(a, b)` with `a < b`, or `None` when `r` is not reserved.
    pub fn r_edges(&self) -> Option<Vec<(usize, usize)>> {
        let i = self.sig.r_index()?;
        let set = self.interps[i].as_direct()?;
        Some(set.iter().filter(|t| t.0.len() == 2 && t.0[0] < t.0[1]).map(|t| (t.0[0], t.0[1])).collect())
    }

    /// True when `a` and `b` are `r`-related, counting the implicit diagonal.
    pub fn r_related(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        match self.sig.r_index().and_then(|i| self.interps[i].as_direct()) {
            Some(set) => set.contains(&DirectTuple(vec![a, b])),
            None => false,
        }
    }

    /// The same structure with symbol `name` removed from the signature.
    pub fn without_symbol(&self, name: &str) -> FiniteStructure {
        let sig = Arc::new(self.sig.without(name));
        let interps = self
            .sig
            .symbols()
            .iter()
            .zip(&self.interps)
            .filter(|(s, _)| s.name != name)
            .map(|(_, i)| i.clone())
            .collect();
        FiniteStructure { sig, size: self.size, interps }
    }

    /// Every broken invariant, in a deterministic order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.size == 0 {
            out.push(Violation { symbol: String::new(), tuple: vec![], kind: ViolationKind::EmptyDomain });
        }
        if self.interps.len() != self.sig.len() {
            out.push(Violation { symbol: String::new(), tuple: vec![], kind: ViolationKind::MissingInterpretation });
            return out;
        }
        for (decl, interp) in self.sig.symbols().iter().zip(&self.interps) {
            let v = |tuple: &[usize], kind| Violation { symbol: decl.name.clone(), tuple: tuple.to_vec(), kind };
            match (decl.kind, interp) {
                (SymbolKind::Direct, Interpretation::Direct(set)) => {
                    for t in set {
                        if t.0.len() != decl.arity {
                            out.push(v(&t.0, ViolationKind::ArityMismatch { expected: decl.arity, found: t.0.len() }));
                        } else if t.0.iter().any(|&x| x >= self.size) {
                            out.push(v(&t.0, ViolationKind::IndexOutOfRange));
                        } else if !t.is_injective() {
                            out.push(v(&t.0, ViolationKind::NotInjective));
                        }
                    }
                }
                (SymbolKind::Dual, Interpretation::Dual(set)) => {
                    for t in set {
                        if t.0.len() != self.size {
                            out.push(v(&t.0, ViolationKind::ArityMismatch { expected: self.size, found: t.0.len() }));
                        } else if t.0.iter().any(|&l| l >= decl.arity) {
                            out.push(v(&t.0, ViolationKind::IndexOutOfRange));
                        } else if !t.is_surjective_onto(decl.arity) {
                            out.push(v(&t.0, ViolationKind::NotSurjective));
                        }
                    }
                }
                _ => out.push(v(&[], ViolationKind::KindMismatch)),
            }
        }
        if let Some(ri) = self.sig.r_index() {
            if let Interpretation::Direct(set) = &self.interps[ri] {
                for t in set {
                    if t.0.len() == 2 && t.0[0] != t.0[1] && !set.contains(&DirectTuple(vec![t.0[1], t.0[0]])) {
                        out.push(Violation {
                            symbol: RESERVED_R.to_string(),
                            tuple: t.0.clone(),
                            kind: ViolationKind::NotSymmetric,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// A total surjection `{0..source_size-1} -> {0..target_size-1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SurjectiveMap {
    target_size: usize,
    table: Vec<usize>,
}

impl SurjectiveMap {
    pub fn new(table: Vec<usize>, target_size: usize) -> Result<Self, ModelError> {
        let mut hit = vec![false; target_size];
        for &y in &table {
            *hit.get_mut(y).ok_or(ModelError::MapOutOfRange { value: y, target_size })? = true;
        }
        if table.is_empty() || !hit.iter().all(|h| *h) {
            return Err(ModelError::NotSurjective);
        }
        Ok(SurjectiveMap { target_size, table })
    }

    /// Builds a map whose target is `0..=max(table)`.
    pub fn from_table(table: Vec<usize>) -> Result<Self, ModelError> {
        let target = table.iter().max().map_or(0, |m| m + 1);
        SurjectiveMap::new(table, target)
    }

    pub(crate) fn new_unchecked(table: Vec<usize>, target_size: usize) -> Self {
        debug_assert!(SurjectiveMap::new(table.clone(), target_size).is_ok());
        SurjectiveMap { target_size, table }
    }

    pub fn identity(size: usize) -> Self {
        SurjectiveMap { target_size: size, table: (0..size).collect() }
    }

    pub fn source_size(&self) -> usize {
        self.table.len()
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// `outer ∘ self`: first `self`, then `outer`.
    pub fn then(&self, outer: &SurjectiveMap) -> SurjectiveMap {
        assert_eq!(self.target_size, outer.source_size(), "composition size mismatch");
        SurjectiveMap { target_size: outer.target_size, table: self.table.iter().map(|&y| outer.table[y]).collect() }
    }

    pub fn is_bijection(&self) -> bool {
        self.table.len() == self.target_size
    }

    pub fn inverse(&self) -> Option<SurjectiveMap> {
        if !self.is_bijection() {
            return None;
        }
        let mut inv = vec![0; self.target_size];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y] = x;
        }
        Some(SurjectiveMap { target_size: self.table.len(), table: inv })
    }

    /// Fibers `f^{-1}(y)` in increasing order of `y`.
    pub fn fibers(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.target_size];
        for (x, &y) in self.table.iter().enumerate() {
            out[y].push(x);
        }
        out
    }

    /// True when `labeling` is constant on every fiber of this map.
    pub fn is_constant_on_fibers(&self, labeling: &[usize]) -> bool {
        let mut seen: Vec<Option<usize>> = vec![None; self.target_size];
        for (x, &y) in self.table.iter().enumerate() {
            match seen[y] {
                Some(l) if l != labeling[x] => return false,
                Some(_) => {}
                None => seen[y] = Some(labeling[x]),
            }
        }
        true
    }

    /// The unique `beta` with `beta ∘ self = labeling`, when `labeling` is
    /// constant on fibers.
    pub fn push_forward(&self, labeling: &[usize]) -> Option<Vec<usize>> {
        let mut out: Vec<Option<usize>> = vec![None; self.target_size];
        for (x, &y) in self.table.iter().enumerate() {
            match out[y] {
                Some(l) if l != labeling[x] => return None,
                Some(_) => {}
                None => out[y] = Some(labeling[x]),
            }
        }
        out.into_iter().collect()
    }
}

impl fmt::Display for SurjectiveMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.table.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteStructure {
        let mut s = FiniteStructure::empty(Arc::new(Signature::r_graph()), 3);
        s.add_r_edge(0, 1).unwrap();
        s.add_r_edge(1, 2).unwrap();
        s
    }

    #[test]
    fn asymmetric_r_is_reported() {
        let mut s = FiniteStructure::empty(Arc::new(Signature::r_graph()), 3);
        s.insert_direct("r", vec![0, 1]).unwrap();
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NotSymmetric);
        assert!(v[0].to_string().contains("r not symmetric"));
    }

    #[test]
    fn dual_tuple_missing_a_label() {
        let sig = Signature::new(vec![SymbolDecl::dual("R", 3)], false).unwrap();
        let mut s = FiniteStructure::empty(Arc::new(sig), 4);
        s.insert_dual("R", vec![0, 1, 1, 0]).unwrap();
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NotSurjective);
        assert!(v[0].to_string().contains("not surjective"));
    }

    #[test]
    fn empty_signature_is_valid() {
        let s = FiniteStructure::empty(Arc::new(Signature::empty()), 5);
        assert!(s.validate().is_empty());
        assert!(path3().validate().is_empty());
    }

    #[test]
    fn non_injective_direct_tuple() {
        let sig = Signature::new(vec![SymbolDecl::direct("s", 2)], false).unwrap();
        let mut s = FiniteStructure::empty(Arc::new(sig), 2);
        s.insert_direct("s", vec![1, 1]).unwrap();
        assert_eq!(s.validate()[0].kind, ViolationKind::NotInjective);
    }

    #[test]
    fn signature_rules() {
        assert!(matches!(
            Signature::new(vec![SymbolDecl::direct("a", 1), SymbolDecl::dual("a", 2)], false),
            Err(ModelError::DuplicateSymbol(_))
        ));
        assert!(matches!(Signature::new(vec![SymbolDecl::direct("a", 0)], false), Err(ModelError::ZeroArity(_))));
        assert!(matches!(Signature::new(vec![SymbolDecl::dual("r", 2)], true), Err(ModelError::BadReservedSymbol)));
        assert!(matches!(Signature::new(vec![], true), Err(ModelError::BadReservedSymbol)));
        assert!(Signature::new(vec![SymbolDecl::direct("", 1)], false).is_err());
    }

    #[test]
    fn map_basics() {
        assert!(SurjectiveMap::new(vec![0, 0, 2], 3).is_err());
        assert!(SurjectiveMap::new(vec![0, 3], 2).is_err());
        let f = SurjectiveMap::new(vec![0, 0, 1], 2).unwrap();
        let g = SurjectiveMap::new(vec![0, 0], 1).unwrap();
        assert_eq!(f.then(&g).table(), &[0, 0, 0]);
        assert_eq!(f.fibers(), vec![vec![0, 1], vec![2]]);
        assert_eq!(f.push_forward(&[1, 1, 0]), Some(vec![1, 0]));
        assert_eq!(f.push_forward(&[1, 0, 0]), None);
        let p = SurjectiveMap::new(vec![2, 0, 1], 3).unwrap();
        assert_eq!(p.then(&p.inverse().unwrap()), SurjectiveMap::identity(3));
    }
}
