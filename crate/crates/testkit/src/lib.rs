//! Test support for curalens: an exact-arithmetic ANOVA/ICC oracle, the
//! engineered fixture campaign, and seeded random campaigns.

pub mod fixture;
pub mod generate;
pub mod oracle;

pub use fixture::{build_fixture, build_fixture_with, resolve_fixture, Fixture, FixtureOptions};
pub use generate::random_campaign;
pub use oracle::{exact_anova, ExactAnova};
