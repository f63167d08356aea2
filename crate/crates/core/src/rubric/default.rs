use std::sync::OnceLock;

use super::{load_rubric, RubricSpec};

/// The built-in rubric document: 19 elements in five groups.
pub const DEFAULT_RUBRIC_JSON: &str = include_str!("../../data/default-rubric.json");

/// Returns the built-in data curation rubric.
pub fn default_rubric() -> RubricSpec {
    static SPEC: OnceLock<RubricSpec> = OnceLock::new();
    SPEC.get_or_init(|| load_rubric(DEFAULT_RUBRIC_JSON).expect("built-in rubric document is valid"))
        .clone()
}
