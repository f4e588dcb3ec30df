use std::fmt;

use thiserror::Error;

/// Applicant group. The model is binary; `Male` is the majority reference group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Male => "m",
            Gender::Female => "f",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "m" | "M" => Some(Gender::Male),
            "f" | "F" => Some(Gender::Female),
            _ => None,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("correlation matrix is not positive semi-definite: {0}")]
    NotPsd(String),

    #[error("infeasible selection: {group} applicants would need a within-group pass rate of {required:.6}")]
    Infeasible { group: Gender, required: f64 },

    #[error("degenerate region: {0}")]
    Degenerate(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("collinear design: {0}")]
    Collinear(String),

    #[error("skipped: {0}")]
    Skipped(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
