use std::fmt;

use thiserror::Error;

use crate::auth::AuthError;
use crate::campaign::CampaignError;
use crate::resolution::ResolutionError;
use crate::rubric::RubricError;
use crate::stats::StatsError;
use crate::store::StoreError;

/// Coarse failure category shared by the CLI and the HTTP layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The input could not be parsed at all.
    Malformed,
    NotFound,
    /// Wrong lifecycle phase or stale revision.
    Conflict,
    /// Well-formed input that breaks a domain rule.
    Domain,
    /// Storage failure or corrupted data.
    Internal,
}

/// Implemented by every error type that crosses a process boundary.
pub trait Coded {
    /// Stable, machine-readable identifier.
    fn code(&self) -> &'static str;
    fn class(&self) -> ErrorClass;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} literal {literal:?}")]
pub struct ParseLiteralError {
    pub kind: &'static str,
    pub literal: String,
}

impl ParseLiteralError {
    pub(crate) fn new(kind: &'static str, literal: &str) -> Self {
        Self {
            kind,
            literal: literal.to_owned(),
        }
    }
}

impl Coded for ParseLiteralError {
    fn code(&self) -> &'static str {
        match self.kind {
            "rating" => "off_scale",
            "challenge kind" => "unknown_challenge_kind",
            _ => "invalid_literal",
        }
    }

    fn class(&self) -> ErrorClass {
        ErrorClass::Domain
    }
}

/// Union of the module errors, for callers that drive several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Literal(#[from] ParseLiteralError),
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

impl Coded for Error {
    fn code(&self) -> &'static str {
        match self {
            Error::Literal(e) => e.code(),
            Error::Rubric(e) => e.code(),
            Error::Campaign(e) => e.code(),
            Error::Stats(e) => e.code(),
            Error::Resolution(e) => e.code(),
            Error::Store(e) => e.code(),
            Error::Auth(e) => e.code(),
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            Error::Literal(e) => e.class(),
            Error::Rubric(e) => e.class(),
            Error::Campaign(e) => e.class(),
            Error::Stats(e) => e.class(),
            Error::Resolution(e) => e.class(),
            Error::Store(e) => e.class(),
            Error::Auth(e) => e.class(),
        }
    }
}

/// The `{"error": {"code", "message"}}` body written to stderr and HTTP responses.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

impl ErrorBody {
    pub fn new(code: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            error: ErrorDetail {
                code: code.into(),
                message: message.to_string(),
            },
        }
    }

    pub fn from_coded<E: Coded + fmt::Display>(err: &E) -> Self {
        Self::new(err.code(), err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error body serializes")
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
