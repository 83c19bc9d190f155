use std::fmt;

use thiserror::Error;

use crate::dataset::Group;

pub type Result<T> = std::result::Result<T, Error>;

/// Which fairness constraint made a problem infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingConstraint {
    MinSeparation,
    EqualOpportunity,
    Joint,
}

impl fmt::Display for BindingConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingConstraint::MinSeparation => write!(f, "minimum-separation"),
            BindingConstraint::EqualOpportunity => write!(f, "equal-opportunity"),
            BindingConstraint::Joint => write!(f, "minimum-separation with equal-opportunity band"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("constraint undefined: group {group} has no samples with label {label:+}")]
    ConstraintUndefined { group: Group, label: i8 },

    #[error(
        "infeasible {binding} constraint: requested separation {requested} exceeds the maximum attainable {max_separation}"
    )]
    Infeasible {
        binding: BindingConstraint,
        requested: f64,
        max_separation: f64,
    },

    #[error("data integrity failure: {0}")]
    DataIntegrity(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } => 3,
            Error::DataIntegrity(_) => 4,
            _ => 2,
        }
    }
}
