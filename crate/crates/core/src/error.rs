use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate symbol name `{0}`")]
    DuplicateSymbol(String),
    #[error("symbol `{0}` has arity 0")]
    ZeroArity(String),
    #[error("invalid symbol name `{0}`")]
    BadSymbolName(String),
    #[error("reserved symbol `r` must be declared once as a direct binary symbol")]
    BadReservedSymbol,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` has the other kind")]
    WrongKind(String),
    #[error("map value {value} outside target of size {target_size}")]
    MapOutOfRange { value: usize, target_size: usize },
    #[error("map is not surjective")]
    NotSurjective,
}

/// A syntax error in one of the text formats. Lines and columns are 1-based.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("structure violates invariants: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpiError {
    #[error("structures have different signatures")]
    SignatureMismatch,
    #[error("map has shape {map_source}->{map_target} but structures have sizes {source_size}->{target_size}")]
    SizeMismatch { map_source: usize, map_target: usize, source_size: usize, target_size: usize },
    #[error("map is not an epimorphism")]
    NotEpimorphism,
    #[error("maps do not share a source")]
    DifferentSources,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonError {
    #[error("domain size {size} exceeds canonicalization bound {bound}")]
    TooLarge { size: usize, bound: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassError {
    #[error("class is empty")]
    Empty,
    #[error("class members do not share a signature")]
    MixedSignatures,
    #[error("member {index} is invalid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidMember { index: usize, violations: Vec<Violation> },
    #[error(transparent)]
    Canon(#[from] CanonError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LimitError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("no witness within max_size {max_size}: {task}")]
    Bounded { task: String, max_size: usize },
    #[error("system is invalid: {0}")]
    InvalidSystem(String),
    #[error("level {level} out of range 1..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("labeling has length {found}, level has {expected} points")]
    LabelingSize { expected: usize, found: usize },
    #[error("labeling is not surjective onto its labels")]
    LabelingNotSurjective,
    #[error("no dual symbol of arity {0}")]
    ArityMismatch(usize),
    #[error("anchor is invalid: {0}")]
    BadAnchor(String),
    #[error(transparent)]
    Class(#[from] ClassError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("symbol `{0}` is not a direct symbol of the structure")]
    NotDirect(String),
    #[error("generated symbol name `{0}` clashes with an existing symbol")]
    NameClash(String),
    #[error("group degree {0} is below 2")]
    DegreeTooSmall(usize),
    #[error("max_arity {max_arity} outside 2..={degree}")]
    BadArity { max_arity: usize, degree: usize },
    #[error("not a group: {0}")]
    NotAGroup(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrespaceError {
    #[error("signature does not reserve `r`")]
    NoReservedR,
    #[error("`r` is not transitive; run check_prespace for details")]
    NotTransitive,
}

/// A failure tied to a file on disk; the message names the file.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Class { path: PathBuf, source: ClassError },
    #[error("{}: {source}", path.display())]
    System { path: PathBuf, source: LimitError },
}
