use thiserror::Error;

use crate::model::{AttrKind, Class};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("attribute `{attr}` declared twice for {class}s")]
    DuplicateAttribute { class: Class, attr: String },
    #[error("object id `{0}` is not unique")]
    DuplicateObject(String),
    #[error("object `{id}` listed as a {expected} but built as the other class")]
    WrongClass { id: String, expected: Class },
    #[error("object `{object}` has undeclared attribute `{attr}`")]
    UnknownAttribute { object: String, attr: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{object}`: value of `{attr}` does not match its {kind:?} kind")]
    KindMismatch {
        object: String,
        attr: String,
        kind: AttrKind,
    },
    #[error("object `{object}`: atomic value of `{attr}` is empty")]
    EmptyAtomic { object: String, attr: String },
}

/// Schema violations found while evaluating or validating conditions and constraints.
#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("{class} attribute `{attr}` is not declared")]
    UnknownAttribute { class: Class, attr: String },
    #[error("operator `{op}` cannot be applied to {class} attribute `{attr}` of kind {kind:?}")]
    OperatorKind {
        op: &'static str,
        class: Class,
        attr: String,
        kind: AttrKind,
    },
    #[error(
        "constraint `{attr_u} {op} {attr_r}` pairs incompatible kinds {user:?} and {resource:?}"
    )]
    ConstraintKind {
        attr_u: String,
        op: &'static str,
        attr_r: String,
        user: AttrKind,
        resource: AttrKind,
    },
    #[error("condition on `{attr}` has an invalid constant: {reason}")]
    BadConstant { attr: String, reason: &'static str },
    #[error("rule uses undeclared action `{0}`")]
    UnknownAction(String),
    #[error("entitlement references unknown {class} `{id}`")]
    UnknownEntity { class: Class, id: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed CSV{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Csv { line: Option<u64>, message: String },
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line());
        FormatError::Csv {
            line,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("similarity threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("weight for `{attr}` is {weight}; weights must be finite and non-negative")]
    Weight { attr: String, weight: f64 },
    #[error("attribute weights over {0:?} sum to zero")]
    ZeroWeight(Vec<String>),
    #[error("NTCF must satisfy 1 <= numHigh <= numMed, got <{0}, {1}>")]
    Ntcf(usize, usize),
    #[error("removal percentage {0} is outside (0, 1)")]
    Percent(f64),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("group member `{0}` is not in the object model")]
    UnknownObject(String),
    #[error("attribute `{attr}` is not active on `{object}`")]
    InactiveAttribute { object: String, attr: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("no complete user/resource pairs to learn from")]
    InsufficientData,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("evaluation needs a complete model, found {0} Missing cells")]
    Incomplete(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
