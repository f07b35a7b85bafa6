use thiserror::Error;

/// Errors raised while building or evaluating games.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two pieces whose boundaries must agree were put together.
    #[error("cannot compose {left} with {right}: {detail}")]
    Composition {
        left: String,
        right: String,
        detail: String,
    },

    #[error("boundary mismatch: expected {expected}, found {found}")]
    Boundary { expected: String, found: String },

    #[error("element {elem:?} is not in set {set}")]
    Element { elem: String, set: String },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("set {0} must be nonempty")]
    Empty(String),

    #[error("payoff dimension error: {0}")]
    Dimension(String),

    #[error("value does not inhabit {space}: {detail}")]
    Value { space: String, detail: String },

    #[error("{0}")]
    Semantic(String),

    #[error("profile product has {count} elements, above the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },

    /// Input file does not match the game file schema.
    #[error("{path}: {detail}")]
    Schema { path: String, detail: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn schema(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable class used by the command-line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "schema",
            Error::Io(_) => "io",
            Error::CapExceeded { .. } => "cap",
            _ => "semantic",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "schema" | "io" => 2,
            "cap" => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
