//! Bulk evaluation import/export as UTF-8 CSV with the header
//! `round,dataset,element,standard,rater,rating,comment,recorded_at,revision`.

use std::io::{Read, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Campaign, CampaignError, EvaluationInput};
use crate::rubric::RubricSpec;
use crate::scale::{Rating, Standard};

pub const HEADER: [&str; 9] = [
    "round",
    "dataset",
    "element",
    "standard",
    "rater",
    "rating",
    "comment",
    "recorded_at",
    "revision",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationRow {
    /// Round label (a numeric round index is also accepted on import).
    pub round: String,
    pub dataset: String,
    pub element: String,
    pub standard: String,
    pub rater: String,
    pub rating: String,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub recorded_at: String,
    #[serde(default)]
    pub revision: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportSummary {
    pub rows: usize,
    /// Highest revision assigned while importing.
    pub max_revision: u32,
}

/// Writes every stored cell, ordered by round, then cell key, then rater.
pub fn export_evaluations<W: Write>(campaign: &Campaign, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    for round in &campaign.rounds {
        let mut cells: Vec<_> = campaign
            .evaluations()
            .filter(|c| round.has_dataset(&c.dataset))
            .collect();
        cells.sort_by(|a, b| {
            let ia = round.datasets.iter().position(|d| d.id == a.dataset);
            let ib = round.datasets.iter().position(|d| d.id == b.dataset);
            ia.cmp(&ib)
                .then_with(|| a.key().cmp(&b.key()))
                .then_with(|| a.rater.cmp(&b.rater))
        });
        for cell in cells {
            writer.serialize(EvaluationRow {
                round: round.label.clone(),
                dataset: cell.dataset.clone(),
                element: cell.element.clone(),
                standard: cell.standard.to_string(),
                rater: cell.rater.clone(),
                rating: cell.rating.to_string(),
                comment: cell.comment.clone(),
                recorded_at: cell.recorded_at.to_rfc3339(),
                revision: cell.revision.to_string(),
            })?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Upserts every row through [`Campaign::record_evaluation`]. Stops at the
/// first bad row; rows before it stay applied. The revision column is
/// informational: revisions are always assigned by the campaign.
pub fn import_evaluations<R: Read>(
    campaign: &mut Campaign,
    rubric: &RubricSpec,
    input: R,
) -> Result<ImportSummary, CampaignError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    {
        let headers = reader.headers().map_err(|e| CampaignError::Import {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.iter().collect::<Vec<_>>() != HEADER {
            return Err(CampaignError::Import {
                line: 1,
                message: format!("expected header {}", HEADER.join(",")),
            });
        }
    }
    let mut summary = ImportSummary {
        rows: 0,
        max_revision: 0,
    };
    for result in reader.deserialize::<EvaluationRow>() {
        let line = summary.rows as u64 + 2;
        let bad = |message: String| CampaignError::Import { line, message };
        let row = result.map_err(|e| bad(e.to_string()))?;
        let standard: Standard = row
            .standard
            .parse()
            .map_err(|e: crate::error::ParseLiteralError| bad(e.to_string()))?;
        let rating: Rating = row.rating.parse().map_err(|_| CampaignError::Import {
            line,
            message: format!("off-scale rating literal {:?}", row.rating),
        })?;
        let round = campaign
            .round_of_dataset(&row.dataset)
            .ok_or_else(|| CampaignError::UnknownDataset(row.dataset.clone()))?;
        if round.label != row.round && round.index.to_string() != row.round {
            return Err(bad(format!(
                "dataset {:?} belongs to round {:?}, not {:?}",
                row.dataset, round.label, row.round
            )));
        }
        let recorded_at = if row.recorded_at.is_empty() {
            None
        } else {
            Some(
                DateTime::parse_from_rfc3339(&row.recorded_at)
                    .map_err(|e| bad(format!("recorded_at: {e}")))?
                    .with_timezone(&Utc),
            )
        };
        let mut input =
            EvaluationInput::new(row.dataset, row.element, standard, row.rater, rating).with_comment(row.comment);
        input.recorded_at = recorded_at;
        let revision = campaign.record_evaluation(rubric, input)?;
        summary.max_revision = summary.max_revision.max(revision);
        summary.rows += 1;
    }
    Ok(summary)
}
