//! HTTP interface over a curalens store.
//!
//! Every body is a JSON document rendered with
//! [`render_document`](curalens_core::report::render_document), so stats
//! responses are byte-identical to the CLI's `--format doc` output.
//!
//! Status codes:
//!
//! | status | meaning |
//! |--------|---------|
//! | 200 | success |
//! | 201 | campaign created |
//! | 400 | malformed body or query |
//! | 401 | missing or invalid bearer token |
//! | 403 | token valid but not allowed (operator-only route, another rater's data, blind mode) |
//! | 404 | unknown rubric, campaign, round, dataset, element, rater or record |
//! | 409 | wrong round phase, stale revision, id already taken |
//! | 422 | domain rule violated (off-scale rating, degenerate matrix, incomplete round...) |
//! | 500 | storage failure or corrupted data |

mod error;
mod handlers;

use axum::routing::{get, post};
use axum::Router;
use curalens_core::Store;

pub use error::ApiError;

/// Serves the API for the given store.
pub fn router(store: Store) -> Router {
    Router::new()
        .route("/rubrics/{id}", get(handlers::get_rubric))
        .route("/rubrics/{id}/guidance", get(handlers::get_guidance))
        .route("/campaigns", post(handlers::create_campaign))
        .route("/campaigns/{id}", get(handlers::get_campaign))
        .route("/campaigns/{id}/rounds", post(handlers::add_round))
        .route(
            "/campaigns/{id}/rounds/{ix}/transition",
            post(handlers::transition_round),
        )
        .route(
            "/campaigns/{id}/evaluations",
            get(handlers::list_evaluations).put(handlers::put_evaluation),
        )
        .route("/campaigns/{id}/completeness", get(handlers::completeness))
        .route("/campaigns/{id}/disagreements", get(handlers::list_disagreements))
        .route("/disagreements/{key}/actions", post(handlers::submit_action))
        .route("/disagreements/{key}/tags", post(handlers::add_tag))
        .route("/disagreements/{key}/close", post(handlers::close_standing))
        .route("/campaigns/{id}/stats/icc", get(handlers::stats_icc))
        .route("/campaigns/{id}/stats/rounds", get(handlers::stats_rounds))
        .route("/campaigns/{id}/stats/elements", get(handlers::stats_elements))
        .route("/campaigns/{id}/reports/plot-data", get(handlers::plot_data))
        .fallback(handlers::not_found)
        .with_state(store)
}
