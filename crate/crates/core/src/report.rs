//! Reports computed on demand from a campaign: per-dataset ICC series,
//! round-over-round disagreement, per-element inconsistency, plot data and
//! delimited exports.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::campaign::{Campaign, CampaignError, EventKind, EventRecord, RoundStatus};
use crate::error::Coded;
use crate::rubric::RubricSpec;
use crate::stats::{
    anova_two_way, build_matrix, classify_band, dataset_disagreement_counts, element_inconsistency_rates,
    icc_consistency_avg, AgreementBand, DisagreementOptions, MatrixScope, StatsError, ICC_MODEL,
};

/// Pretty JSON with a trailing newline. Every `doc` output goes through this
/// so CLI and HTTP bodies match byte for byte.
pub fn render_document<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report documents serialize");
    out.push('\n');
    out
}

/// Which ratings a report reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingBasis {
    /// Current ratings, including resolution changes.
    #[default]
    Latest,
    /// Each round's ratings as they stood when it entered resolving.
    PreResolution,
}

/// A campaign together with the rating basis it was built for.
#[derive(Debug, Clone)]
pub struct RatingView {
    campaign: Campaign,
    basis: RatingBasis,
}

impl RatingView {
    pub fn latest(campaign: Campaign) -> Self {
        Self {
            campaign,
            basis: RatingBasis::Latest,
        }
    }

    /// Replays the log, keeping each closed round's cells as of its
    /// collecting → resolving transition. Disagreement records of those
    /// rounds are dropped since they postdate the snapshot.
    pub fn pre_resolution(events: &[EventRecord]) -> Result<Self, CampaignError> {
        let mut iter = events.iter();
        let first = iter
            .next()
            .ok_or_else(|| CampaignError::Replay("event log is empty".into()))?;
        let mut campaign = Campaign::replay([first])?;
        let mut snapshots = Vec::new();
        for event in iter {
            campaign.apply(event)?;
            if let EventKind::RoundTransition {
                index,
                to: RoundStatus::Resolving,
                ..
            } = event.kind
            {
                snapshots.push((index, campaign.clone()));
            }
        }
        for (index, snapshot) in snapshots {
            let round = campaign.round(index)?.clone();
            let datasets: BTreeSet<&str> = round.datasets.iter().map(|d| d.id.as_str()).collect();
            campaign.replace_cells_of_datasets(&datasets, &snapshot);
            campaign.disagreements.retain(|_, r| r.round != index);
        }
        Ok(Self {
            campaign,
            basis: RatingBasis::PreResolution,
        })
    }

    /// Builds the view for `basis`; the log is only read for the
    /// pre-resolution basis.
    pub fn build(campaign: Campaign, events: &[EventRecord], basis: RatingBasis) -> Result<Self, CampaignError> {
        match basis {
            RatingBasis::Latest => Ok(Self::latest(campaign)),
            RatingBasis::PreResolution => Self::pre_resolution(events),
        }
    }

    pub fn campaign(&self) -> &Campaign {
        &self.campaign
    }

    pub fn basis(&self) -> RatingBasis {
        self.basis
    }
}

/// Sequence number of the event that moved `round` into resolving.
pub fn resolving_sequence(events: &[EventRecord], round: u32) -> Option<u64> {
    events.iter().find_map(|e| match e.kind {
        EventKind::RoundTransition {
            index,
            to: RoundStatus::Resolving,
            ..
        } if index == round => Some(e.sequence),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub dataset: String,
    pub round: String,
    pub code: String,
    pub reason: String,
}

impl Exclusion {
    fn new(dataset: &str, round: &str, err: &StatsError) -> Self {
        Self {
            dataset: dataset.to_owned(),
            round: round.to_owned(),
            code: err.code().to_owned(),
            reason: err.to_string(),
        }
    }
}

/// Per-dataset statistics record of the ICC document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccRecord {
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub ms_rows: f64,
    pub ms_error: f64,
    pub icc: f64,
    pub band: AgreementBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccStats {
    pub model: String,
    pub scope: MatrixScope,
    pub datasets: Vec<IccRecord>,
    pub excluded: Vec<Exclusion>,
}

fn icc_record(
    campaign: &Campaign,
    rubric: &RubricSpec,
    dataset: &str,
    scope: MatrixScope,
) -> Result<IccRecord, StatsError> {
    let matrix = build_matrix(campaign, rubric, dataset, scope)?;
    let anova = anova_two_way(&matrix)?;
    let icc = icc_consistency_avg(&anova)?;
    Ok(IccRecord {
        dataset: dataset.to_owned(),
        n: anova.n,
        k: anova.k,
        ms_rows: anova.ms_rows,
        ms_error: anova.ms_error,
        icc: icc.value,
        band: icc.band,
    })
}

/// ICC document for one dataset (errors propagate) or for every dataset in
/// round order (failures are listed under `excluded`).
pub fn icc_stats(
    campaign: &Campaign,
    rubric: &RubricSpec,
    dataset: Option<&str>,
    scope: MatrixScope,
) -> Result<IccStats, StatsError> {
    campaign.check_rubric(rubric)?;
    let mut stats = IccStats {
        model: ICC_MODEL.to_owned(),
        scope,
        datasets: Vec::new(),
        excluded: Vec::new(),
    };
    if let Some(dataset) = dataset {
        stats.datasets.push(icc_record(campaign, rubric, dataset, scope)?);
        return Ok(stats);
    }
    for round in &campaign.rounds {
        for d in &round.datasets {
            match icc_record(campaign, rubric, &d.id, scope) {
                Ok(record) => stats.datasets.push(record),
                Err(e) => stats.excluded.push(Exclusion::new(&d.id, &round.label, &e)),
            }
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrPoint {
    pub dataset: String,
    pub round: String,
    pub round_index: u32,
    pub icc: f64,
    pub band: AgreementBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundIrrSummary {
    pub round: String,
    pub round_index: u32,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrSeries {
    pub basis: RatingBasis,
    pub model: String,
    pub points: Vec<IrrPoint>,
    pub rounds: Vec<RoundIrrSummary>,
    pub excluded: Vec<Exclusion>,
    pub notes: Vec<String>,
}

fn median(sorted: &[f64]) -> f64 {
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// One point per dataset with a complete, non-degenerate matrix, ordered by
/// round then dataset.
pub fn irr_series(view: &RatingView, rubric: &RubricSpec, scope: MatrixScope) -> Result<IrrSeries, StatsError> {
    let campaign = view.campaign();
    campaign.check_rubric(rubric)?;
    let mut series = IrrSeries {
        basis: view.basis(),
        model: ICC_MODEL.to_owned(),
        points: Vec::new(),
        rounds: Vec::new(),
        excluded: Vec::new(),
        notes: Vec::new(),
    };
    for round in &campaign.rounds {
        let mut values = Vec::new();
        for d in &round.datasets {
            match icc_record(campaign, rubric, &d.id, scope) {
                Ok(record) => {
                    values.push(record.icc);
                    series.points.push(IrrPoint {
                        dataset: d.id.clone(),
                        round: round.label.clone(),
                        round_index: round.index,
                        icc: record.icc,
                        band: record.band,
                    });
                }
                Err(e) => series.excluded.push(Exclusion::new(&d.id, &round.label, &e)),
            }
        }
        if values.is_empty() {
            continue;
        }
        values.sort_by(f64::total_cmp);
        series.rounds.push(RoundIrrSummary {
            round: round.label.clone(),
            round_index: round.index,
            count: values.len(),
            min: values[0],
            max: values[values.len() - 1],
            median: median(&values),
        });
    }
    if series.points.is_empty() {
        series
            .notes
            .push("no dataset has a complete, non-degenerate rating matrix".into());
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDisagreement {
    pub round: String,
    pub round_index: u32,
    pub datasets: usize,
    pub disagreements: usize,
    pub cells: usize,
    pub percent: f64,
    /// Plain mean of the per-dataset disagreement counts.
    pub mean_per_dataset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDisagreementSeries {
    pub basis: RatingBasis,
    pub count_standing: bool,
    pub rounds: Vec<RoundDisagreement>,
    pub notes: Vec<String>,
}

impl RoundDisagreementSeries {
    pub fn percentages(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.percent).collect()
    }
}

/// Rounds whose collection is over and whose cells are all rated; notes
/// explain every round left out.
fn reportable_rounds(
    campaign: &Campaign,
    rubric: &RubricSpec,
    notes: &mut Vec<String>,
) -> Result<Vec<u32>, StatsError> {
    let mut rounds = Vec::new();
    for round in &campaign.rounds {
        if !round.status.is_closed() {
            notes.push(format!("round {:?} skipped: still {}", round.label, round.status));
            continue;
        }
        let report = campaign.completeness_check(rubric, round.index)?;
        if !report.is_complete() {
            notes.push(format!(
                "round {:?} skipped: incomplete, {} cells missing",
                round.label,
                report.missing_count()
            ));
            continue;
        }
        rounds.push(round.index);
    }
    if rounds.is_empty() {
        notes.push("no closed, complete rounds".into());
    }
    Ok(rounds)
}

/// Overall disagreement percentage of every closed, complete round.
pub fn disagreement_series(
    view: &RatingView,
    rubric: &RubricSpec,
    opts: DisagreementOptions,
) -> Result<RoundDisagreementSeries, StatsError> {
    let campaign = view.campaign();
    campaign.check_rubric(rubric)?;
    let mut notes = Vec::new();
    let mut rounds = Vec::new();
    for index in reportable_rounds(campaign, rubric, &mut notes)? {
        let round = campaign.round(index)?;
        let per_dataset = dataset_disagreement_counts(campaign, rubric, index, opts)?;
        let disagreements: usize = per_dataset.iter().map(|d| d.disagreements).sum();
        let cells: usize = per_dataset.iter().map(|d| d.cells).sum();
        let datasets = per_dataset.len();
        rounds.push(RoundDisagreement {
            round: round.label.clone(),
            round_index: index,
            datasets,
            disagreements,
            cells,
            percent: crate::stats::Rate {
                count: disagreements,
                total: cells,
            }
            .percent(),
            mean_per_dataset: if datasets == 0 {
                0.0
            } else {
                disagreements as f64 / datasets as f64
            },
        });
    }
    Ok(RoundDisagreementSeries {
        basis: view.basis(),
        count_standing: opts.count_standing,
        rounds,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRow {
    pub element: String,
    pub title: String,
    pub group: String,
    pub datasets_with_disagreement: usize,
    pub datasets: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementTable {
    pub basis: RatingBasis,
    pub rounds: Vec<String>,
    pub elements: Vec<ElementRow>,
    pub notes: Vec<String>,
}

/// One row per rubric element over every closed, complete round, sorted by
/// percentage descending (rubric order breaks ties).
pub fn element_table(
    view: &RatingView,
    rubric: &RubricSpec,
    opts: DisagreementOptions,
) -> Result<ElementTable, StatsError> {
    let campaign = view.campaign();
    campaign.check_rubric(rubric)?;
    let mut notes = Vec::new();
    let rounds = reportable_rounds(campaign, rubric, &mut notes)?;
    let rates = element_inconsistency_rates(campaign, rubric, &rounds, opts)?;
    let mut elements: Vec<ElementRow> = rates
        .into_iter()
        .map(|rate| {
            let group = rubric
                .groups
                .iter()
                .find(|g| g.elements.iter().any(|e| e.id == rate.element))
                .map(|g| g.id.clone())
                .unwrap_or_default();
            let title = rubric
                .element(&rate.element)
                .map(|e| e.title.clone())
                .unwrap_or_default();
            ElementRow {
                element: rate.element,
                title,
                group,
                datasets_with_disagreement: rate.datasets.count,
                datasets: rate.datasets.total,
                percent: rate.datasets.percent(),
            }
        })
        .collect();
    elements.sort_by(|a, b| {
        (b.datasets_with_disagreement * a.datasets.max(1)).cmp(&(a.datasets_with_disagreement * b.datasets.max(1)))
    });
    Ok(ElementTable {
        basis: view.basis(),
        rounds: rounds
            .iter()
            .map(|&i| campaign.rounds[i as usize].label.clone())
            .collect(),
        elements,
        notes,
    })
}

pub const PLOT_SCHEMA: &str = "curalens/plot-data";
pub const PLOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandThreshold {
    pub band: AgreementBand,
    pub lower: f64,
}

fn band_thresholds() -> Vec<BandThreshold> {
    let [fair, good, excellent] = AgreementBand::THRESHOLDS;
    vec![
        BandThreshold {
            band: AgreementBand::Fair,
            lower: fair,
        },
        BandThreshold {
            band: AgreementBand::Good,
            lower: good,
        },
        BandThreshold {
            band: AgreementBand::Excellent,
            lower: excellent,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlotSeries {
    Irr {
        basis: RatingBasis,
        thresholds: Vec<BandThreshold>,
        records: Vec<IrrPoint>,
        summaries: Vec<RoundIrrSummary>,
    },
    Rounds {
        basis: RatingBasis,
        records: Vec<RoundDisagreement>,
    },
}

impl PlotSeries {
    pub fn record_count(&self) -> usize {
        match self {
            PlotSeries::Irr { records, .. } => records.len(),
            PlotSeries::Rounds { records, .. } => records.len(),
        }
    }
}

impl From<&IrrSeries> for PlotSeries {
    fn from(s: &IrrSeries) -> Self {
        PlotSeries::Irr {
            basis: s.basis,
            thresholds: band_thresholds(),
            records: s.points.clone(),
            summaries: s.rounds.clone(),
        }
    }
}

impl From<&RoundDisagreementSeries> for PlotSeries {
    fn from(s: &RoundDisagreementSeries) -> Self {
        PlotSeries::Rounds {
            basis: s.basis,
            records: s.rounds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDocument {
    pub schema: String,
    pub schema_version: u32,
    pub series: PlotSeries,
}

/// Wraps a non-empty series in the versioned plot-data envelope.
pub fn emit_plot_data(series: impl Into<PlotSeries>) -> Result<PlotDocument, StatsError> {
    let series = series.into();
    if series.record_count() == 0 {
        return Err(StatsError::EmptySeries("nothing to plot"));
    }
    Ok(PlotDocument {
        schema: PLOT_SCHEMA.to_owned(),
        schema_version: PLOT_SCHEMA_VERSION,
        series,
    })
}

pub fn write_icc_csv<W: Write>(stats: &IccStats, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "n", "k", "ms_rows", "ms_error", "icc", "band"])?;
    for r in &stats.datasets {
        w.write_record([
            r.dataset.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.ms_rows.to_string(),
            r.ms_error.to_string(),
            r.icc.to_string(),
            r.band.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_irr_csv<W: Write>(series: &IrrSeries, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "dataset", "icc", "band"])?;
    for p in &series.points {
        w.write_record([
            p.round.clone(),
            p.dataset.clone(),
            p.icc.to_string(),
            p.band.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rounds_csv<W: Write>(series: &RoundDisagreementSeries, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "round",
        "datasets",
        "disagreements",
        "cells",
        "percent",
        "mean_per_dataset",
    ])?;
    for r in &series.rounds {
        w.write_record([
            r.round.clone(),
            r.datasets.to_string(),
            r.disagreements.to_string(),
            r.cells.to_string(),
            r.percent.to_string(),
            r.mean_per_dataset.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_elements_csv<W: Write>(table: &ElementTable, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["element", "group", "datasets_with_disagreement", "datasets", "percent"])?;
    for r in &table.elements {
        w.write_record([
            r.element.clone(),
            r.group.clone(),
            r.datasets_with_disagreement.to_string(),
            r.datasets.to_string(),
            r.percent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Confirms the band of every point agrees with [`classify_band`].
pub fn bands_consistent(series: &IrrSeries) -> bool {
    series.points.iter().all(|p| classify_band(p.icc) == p.band)
}
