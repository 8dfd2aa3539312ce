use std::fmt;

/// A single violated configuration rule, with the path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("invalid configuration ({} violations): {}", .0.len(), join(.0))]
    Config(Vec<Violation>),

    #[error("cost table has no {ports}-ported macro of width {width} covering depth {depth}")]
    UnsupportedMacro { width: u32, depth: u64, ports: String },

    #[error("simulation deadlocked at internal cycle {cycle}: level {level} made no progress ({detail})")]
    Deadlock {
        cycle: u64,
        level: usize,
        detail: String,
    },

    #[error("average power undefined for a zero-cycle report")]
    UndefinedAverage,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
