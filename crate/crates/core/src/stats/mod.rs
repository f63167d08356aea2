//! Inter-rater reliability: rating encoding, fully crossed rating matrices,
//! two-way ANOVA, ICC(C,k) and agreement bands, plus count-based
//! disagreement metrics.

mod anova;
mod disagreement;
mod icc;
mod matrix;

use serde::Serialize;
use thiserror::Error;

use crate::campaign::CampaignError;
use crate::error::{Coded, ErrorClass};
use crate::scale::Standard;

pub use anova::{anova_two_way, AnovaDecomposition};
pub use disagreement::{
    dataset_disagreement_counts, disagreement_cells, element_inconsistency_rates, overall_disagreement_rate,
    DatasetDisagreements, DisagreementOptions, ElementRate, Rate,
};
pub use icc::{classify_band, icc_consistency_avg, AgreementBand, IccResult, ICC_MODEL};
pub use matrix::{build_matrix, encode_rating, MatrixScope, RatingMatrix};

/// A cell a rater has not filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingCell {
    pub element: String,
    pub standard: Standard,
    pub rater: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("incomplete: [{}]", .missing.iter().map(|m| format!("({}, {}, {})", m.element, m.standard, m.rater)).collect::<Vec<_>>().join(", "))]
    Incomplete { dataset: String, missing: Vec<MissingCell> },
    #[error("round {round} is incomplete: {missing} cells missing")]
    IncompleteRound { round: u32, missing: usize },
    #[error("insufficient design: need n >= 3 subjects and k >= 2 raters, got n = {n}, k = {k}")]
    InsufficientDesign { n: usize, k: usize },
    #[error("degenerate: no subject variance (ICC undefined)")]
    Degenerate,
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("empty series: {0}")]
    EmptySeries(&'static str),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

impl Coded for StatsError {
    fn code(&self) -> &'static str {
        match self {
            StatsError::Incomplete { .. } => "incomplete",
            StatsError::IncompleteRound { .. } => "incomplete_round",
            StatsError::InsufficientDesign { .. } => "insufficient_design",
            StatsError::Degenerate => "degenerate",
            StatsError::Shape(_) => "matrix_shape",
            StatsError::NonFinite { .. } => "non_finite",
            StatsError::EmptySeries(_) => "empty_series",
            StatsError::Campaign(e) => e.code(),
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            StatsError::Campaign(e) => e.class(),
            StatsError::Shape(_) | StatsError::NonFinite { .. } => ErrorClass::Malformed,
            _ => ErrorClass::Domain,
        }
    }
}
