//! Store-backed operations shared by the command-line and HTTP front ends.
//! Both render the values returned here with
//! [`render_document`](crate::report::render_document), which keeps their
//! `doc` outputs identical for the same store state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::auth::mint_token;
use crate::campaign::{Campaign, CompletenessReport, OPERATOR};
use crate::error::Result;
use crate::report::{
    disagreement_series, element_table, emit_plot_data, icc_stats, irr_series, ElementTable, IccStats, IrrSeries,
    PlotDocument, RatingBasis, RatingView, RoundDisagreementSeries,
};
use crate::rubric::RubricSpec;
use crate::stats::{DisagreementOptions, MatrixScope};
use crate::store::{Store, VersionToken};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IccQuery {
    /// One dataset, or every dataset of the campaign when absent.
    pub dataset: Option<String>,
    pub scope: MatrixScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesQuery {
    pub basis: RatingBasis,
    pub scope: MatrixScope,
    /// Count standing disagreements as disagreements.
    pub count_standing: bool,
}

impl Default for SeriesQuery {
    fn default() -> Self {
        Self {
            basis: RatingBasis::Latest,
            scope: MatrixScope::Combined,
            count_standing: DisagreementOptions::default().count_standing,
        }
    }
}

impl SeriesQuery {
    fn options(&self) -> DisagreementOptions {
        DisagreementOptions {
            count_standing: self.count_standing,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    #[default]
    Irr,
    Rounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotQuery {
    pub series: PlotKind,
    pub basis: RatingBasis,
    pub scope: MatrixScope,
    pub count_standing: bool,
}

impl Default for PlotQuery {
    fn default() -> Self {
        PlotQuery::new(PlotKind::default(), SeriesQuery::default())
    }
}

impl PlotQuery {
    pub fn new(series: PlotKind, filter: SeriesQuery) -> Self {
        Self {
            series,
            basis: filter.basis,
            scope: filter.scope,
            count_standing: filter.count_standing,
        }
    }

    pub fn filter(&self) -> SeriesQuery {
        SeriesQuery {
            basis: self.basis,
            scope: self.scope,
            count_standing: self.count_standing,
        }
    }
}

/// Loads a campaign and the rubric it was created with.
pub fn load_with_rubric(store: &Store, id: &str) -> Result<(Campaign, RubricSpec)> {
    let campaign = store.load_campaign(id)?;
    let rubric = store.get_rubric(&campaign.rubric)?;
    Ok((campaign, rubric))
}

fn view(store: &Store, id: &str, basis: RatingBasis) -> Result<(RatingView, RubricSpec)> {
    let (campaign, rubric) = load_with_rubric(store, id)?;
    let view = match basis {
        RatingBasis::Latest => RatingView::latest(campaign),
        RatingBasis::PreResolution => RatingView::pre_resolution(&store.read_events(id)?)?,
    };
    Ok((view, rubric))
}

pub fn icc_document(store: &Store, id: &str, query: &IccQuery) -> Result<IccStats> {
    let (campaign, rubric) = load_with_rubric(store, id)?;
    Ok(icc_stats(&campaign, &rubric, query.dataset.as_deref(), query.scope)?)
}

pub fn irr_document(store: &Store, id: &str, query: &SeriesQuery) -> Result<IrrSeries> {
    let (view, rubric) = view(store, id, query.basis)?;
    Ok(irr_series(&view, &rubric, query.scope)?)
}

pub fn rounds_document(store: &Store, id: &str, query: &SeriesQuery) -> Result<RoundDisagreementSeries> {
    let (view, rubric) = view(store, id, query.basis)?;
    Ok(disagreement_series(&view, &rubric, query.options())?)
}

pub fn elements_document(store: &Store, id: &str, query: &SeriesQuery) -> Result<ElementTable> {
    let (view, rubric) = view(store, id, query.basis)?;
    Ok(element_table(&view, &rubric, query.options())?)
}

pub fn plot_document(store: &Store, id: &str, query: &PlotQuery) -> Result<PlotDocument> {
    Ok(match query.series {
        PlotKind::Irr => emit_plot_data(&irr_document(store, id, &query.filter())?)?,
        PlotKind::Rounds => emit_plot_data(&rounds_document(store, id, &query.filter())?)?,
    })
}

/// Completeness of one round, or of every round in order.
pub fn completeness_document(store: &Store, id: &str, round: Option<u32>) -> Result<Vec<CompletenessReport>> {
    let (campaign, rubric) = load_with_rubric(store, id)?;
    let rounds: Vec<u32> = match round {
        Some(ix) => vec![ix],
        None => (0..campaign.rounds.len() as u32).collect(),
    };
    rounds
        .into_iter()
        .map(|ix| Ok(campaign.completeness_check(&rubric, ix)?))
        .collect()
}

/// Runs `f` on the campaign under its writer lock with events stamped by
/// `actor`, then persists the result. Nothing is written when `f` fails.
pub fn update_campaign<T>(
    store: &Store,
    id: &str,
    actor: &str,
    f: impl FnOnce(&mut Campaign, &RubricSpec) -> Result<T>,
) -> Result<(T, VersionToken)> {
    let _guard = store.lock_campaign(id)?;
    let mut campaign = store.load_unlocked(id)?;
    let rubric = store.get_rubric(&campaign.rubric)?;
    campaign.set_actor(actor);
    let out = f(&mut campaign, &rubric)?;
    let version = store.save_locked(&mut campaign)?;
    Ok((out, version))
}

/// Bearer tokens for the operator and every rater of a campaign, keyed by
/// subject.
pub fn campaign_tokens(store: &Store, id: &str) -> Result<BTreeMap<String, String>> {
    let campaign = store.load_campaign(id)?;
    let secret = store.campaign_secret(id)?;
    Ok(std::iter::once(OPERATOR)
        .chain(campaign.raters.iter().map(|r| r.id.as_str()))
        .map(|subject| (subject.to_owned(), mint_token(&secret, id, subject)))
        .collect())
}
