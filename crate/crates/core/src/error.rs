use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. [`Error::kind`] gives the stable
/// identifier used by the HTTP service and the C bindings.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("line {line}: state repeated in a #NON-PERMISSIVE file")]
    DuplicateStateInDeterministicFile { line: usize },
    #[error("line {line}: expected {expected} state fields, found {found}")]
    ArityMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: token `{token}` is not in the dictionary of `{variable}`")]
    UnknownCategoricalToken {
        line: usize,
        variable: String,
        token: String,
    },
    #[error("column {0} is declared both numeric and categorical")]
    OverlappingColumnTypes(usize),
    #[error("column {0} is neither numeric nor categorical")]
    GapInColumnCoverage(usize),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("strategy row {0} has an empty action list")]
    EmptyActionList(usize),
    #[error("coefficient `{0}` is defined but never used in the template")]
    UndeclaredCoefficient(String),
    #[error("state not found in controller")]
    StateNotFound,
    #[error("value `{value}` of `{variable}` is not covered by any group")]
    UnknownCategoricalValue { variable: String, value: String },
    #[error("expression cannot be evaluated: {0}")]
    NonEvaluableExpression(String),
    #[error("template enumeration of {count} assignments exceeds the cap of {cap}")]
    EnumerationBlowup { count: u128, cap: usize },
    #[error("only one value of `{0}` is present")]
    DegenerateSplit(String),
    #[error("{0} has no node-level impurity")]
    UnsupportedAtNodeLevel(&'static str),
    #[error("no candidate predicate splits the node")]
    NoValidPredicate,
    #[error("controller has no states")]
    EmptyController,
    #[error("session has no open node")]
    SessionClosed,
    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("tree still has {0} open nodes")]
    IncompleteTree(usize),
    #[error("unsupported schema version {0}")]
    SchemaVersionMismatch(i64),
    #[error("function `{0}` has no C counterpart")]
    UnsupportedFunction(String),
    #[error("action `{0}` is not allowed in the current state")]
    DisallowedAction(String),
    #[error("no known successor: {0}")]
    UnknownSuccessor(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state has {found} coordinates, expected {expected}")]
    StateShape { expected: usize, found: usize },
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(line: usize, column: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::DuplicateStateInDeterministicFile { .. } => "DuplicateStateInDeterministicFile",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::UnknownCategoricalToken { .. } => "UnknownCategoricalToken",
            Error::OverlappingColumnTypes(_) => "OverlappingColumnTypes",
            Error::GapInColumnCoverage(_) => "GapInColumnCoverage",
            Error::MalformedJson(_) => "MalformedJson",
            Error::EmptyActionList(_) => "EmptyActionList",
            Error::UndeclaredCoefficient(_) => "UndeclaredCoefficient",
            Error::StateNotFound => "StateNotFound",
            Error::UnknownCategoricalValue { .. } => "UnknownCategoricalValue",
            Error::NonEvaluableExpression(_) => "NonEvaluableExpression",
            Error::EnumerationBlowup { .. } => "EnumerationBlowup",
            Error::DegenerateSplit(_) => "DegenerateSplit",
            Error::UnsupportedAtNodeLevel(_) => "UnsupportedAtNodeLevel",
            Error::NoValidPredicate => "NoValidPredicate",
            Error::EmptyController => "EmptyController",
            Error::SessionClosed => "SessionClosed",
            Error::InvalidPredicate(_) => "InvalidPredicate",
            Error::UnknownNode(_) => "UnknownNode",
            Error::IncompleteTree(_) => "IncompleteTree",
            Error::SchemaVersionMismatch(_) => "SchemaVersionMismatch",
            Error::UnsupportedFunction(_) => "UnsupportedFunction",
            Error::DisallowedAction(_) => "DisallowedAction",
            Error::UnknownSuccessor(_) => "UnknownSuccessor",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::StateShape { .. } => "StateShape",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::MalformedJson(err.to_string())
    }
}
