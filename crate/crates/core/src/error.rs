//! Error type shared by every module of the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration key failed to parse or violated a constraint.
    #[error("{}", ConfigDisplay { key, line: *line, message })]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tr(B†B) exceeded the transmit power budget.
    #[error("transmit power {trace} exceeds budget {budget}")]
    PowerConstraint { trace: f64, budget: f64 },

    #[error("all channel energy falls outside the {taps}-tap window")]
    EmptyWindow { taps: usize },

    #[error("power allocation failed: {0}")]
    Allocation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct ConfigDisplay<'a> {
    key: &'a str,
    line: Option<usize>,
    message: &'a str,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config key `{}` (line {}): {}", self.key, line, self.message),
            None => write!(f, "config key `{}`: {}", self.key, self.message),
        }
    }
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            line: None,
            message: message.into(),
        }
    }

    /// Wraps the error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a configuration problem.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
