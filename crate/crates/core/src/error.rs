use thiserror::Error;

use crate::algebra::RelationAtom;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("unknown relation atom `{0}`")]
    UnknownAtom(String),
    #[error("syntax error on line {line}")]
    Syntax { line: usize },
    #[error("entry ({0}, {1}) appears twice")]
    DuplicateEntry(RelationAtom, RelationAtom),
    #[error("entry ({0}, {1}) is missing")]
    MissingEntry(RelationAtom, RelationAtom),
    #[error("checksum mismatch: header says {expected}, records hash to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("table violates {0} axiom condition(s)")]
    Invalid(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
