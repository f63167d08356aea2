//! Core library for auditing machine-learning dataset documentation with a
//! data-curation rubric: rubric definitions, multi-rater evaluation
//! campaigns, inter-rater reliability statistics, disagreement resolution,
//! reports and a file-system store.

pub mod auth;
pub mod campaign;
pub mod error;
pub mod report;
pub mod resolution;
pub mod rubric;
pub mod scale;
pub mod service;
pub mod stats;
pub mod store;

pub use campaign::{Campaign, CampaignError, CellKey, EvaluationCell, EvaluationInput, RoundStatus};
pub use error::{Coded, Error, ErrorBody, ErrorClass, Result};
pub use rubric::{default_rubric, RubricSpec};
pub use scale::{Rating, Standard};
pub use store::Store;
