//! Count-based disagreement metrics. Percentages are derived from integer
//! counts in one division, so they carry no accumulated rounding.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::campaign::{Campaign, CellKey};
use crate::resolution::DisagreementStatus;
use crate::rubric::RubricSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementOptions {
    /// Whether cells closed as standing disagreements still count. On by
    /// default: closing a record does not make the ratings agree.
    pub count_standing: bool,
}

impl Default for DisagreementOptions {
    fn default() -> Self {
        Self { count_standing: true }
    }
}

/// `count` out of `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub count: usize,
    pub total: usize,
}

impl Rate {
    /// `count × 100 / total`, or 0 for an empty total.
    pub fn percent(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            (self.count * 100) as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRate {
    pub element: String,
    /// Datasets with at least one disagreeing cell on this element, out of
    /// all datasets considered.
    pub datasets: Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetDisagreements {
    pub dataset: String,
    pub disagreements: usize,
    pub cells: usize,
}

fn ensure_complete(campaign: &Campaign, rubric: &RubricSpec, round: u32) -> Result<(), StatsError> {
    let report = campaign.completeness_check(rubric, round)?;
    if report.is_complete() {
        Ok(())
    } else {
        Err(StatsError::IncompleteRound {
            round,
            missing: report.missing_count(),
        })
    }
}

fn is_disagreement(campaign: &Campaign, key: &CellKey, opts: DisagreementOptions) -> bool {
    if campaign.is_unanimous(key) {
        return false;
    }
    opts.count_standing
        || campaign
            .disagreement(key)
            .is_none_or(|r| r.status != DisagreementStatus::ResolvedStanding)
}

/// Non-unanimous cells of a complete round, in dataset then rubric order.
pub fn disagreement_cells(
    campaign: &Campaign,
    rubric: &RubricSpec,
    round: u32,
    opts: DisagreementOptions,
) -> Result<Vec<CellKey>, StatsError> {
    ensure_complete(campaign, rubric, round)?;
    let mut cells = Vec::new();
    for dataset in &campaign.round(round)?.datasets {
        for (element, standard) in rubric.subjects() {
            let key = CellKey::new(dataset.id.clone(), element, standard);
            if is_disagreement(campaign, &key, opts) {
                cells.push(key);
            }
        }
    }
    Ok(cells)
}

/// Disagreeing cells over datasets × elements × 2.
pub fn overall_disagreement_rate(
    campaign: &Campaign,
    rubric: &RubricSpec,
    round: u32,
    opts: DisagreementOptions,
) -> Result<Rate, StatsError> {
    let count = disagreement_cells(campaign, rubric, round, opts)?.len();
    let total = campaign.round(round)?.datasets.len() * rubric.subjects().count();
    Ok(Rate { count, total })
}

/// Per dataset of one round: number of disagreeing cells.
pub fn dataset_disagreement_counts(
    campaign: &Campaign,
    rubric: &RubricSpec,
    round: u32,
    opts: DisagreementOptions,
) -> Result<Vec<DatasetDisagreements>, StatsError> {
    let cells = disagreement_cells(campaign, rubric, round, opts)?;
    let per_dataset = rubric.subjects().count();
    Ok(campaign
        .round(round)?
        .datasets
        .iter()
        .map(|d| DatasetDisagreements {
            dataset: d.id.clone(),
            disagreements: cells.iter().filter(|c| c.dataset == d.id).count(),
            cells: per_dataset,
        })
        .collect())
}

/// For each rubric element (in rubric order), the share of datasets across
/// `rounds` where its minimum or excellence cell is a disagreement.
pub fn element_inconsistency_rates(
    campaign: &Campaign,
    rubric: &RubricSpec,
    rounds: &[u32],
    opts: DisagreementOptions,
) -> Result<Vec<ElementRate>, StatsError> {
    let mut cells = Vec::new();
    let mut datasets = 0;
    for &round in rounds {
        cells.extend(disagreement_cells(campaign, rubric, round, opts)?);
        datasets += campaign.round(round)?.datasets.len();
    }
    Ok(rubric
        .elements()
        .map(|element| {
            let mut hit: Vec<&str> = cells
                .iter()
                .filter(|c| c.element == element.id)
                .map(|c| c.dataset.as_str())
                .collect();
            hit.sort_unstable();
            hit.dedup();
            ElementRate {
                element: element.id.clone(),
                datasets: Rate {
                    count: hit.len(),
                    total: datasets,
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{CampaignOptions, DatasetEntry, EvaluationInput, Rater, RoundStatus};
    use crate::rubric::default_rubric;
    use crate::scale::{Rating, Standard};

    /// Three raters, five datasets; `split` lists (dataset, element, standard)
    /// cells where rater r2 departs from the others.
    fn campaign(split: &[(&str, &str, Standard)]) -> (Campaign, RubricSpec) {
        let rubric = default_rubric();
        let raters: Vec<_> = ["r1", "r2", "r3"].into_iter().map(Rater::new).collect();
        let mut c = Campaign::create("c", &rubric, raters, CampaignOptions::default()).unwrap();
        let ids = ["d1", "d2", "d3", "d4", "d5"];
        c.add_round("training", ids.iter().map(|d| DatasetEntry::new(*d)).collect())
            .unwrap();
        c.transition_round(0, RoundStatus::Collecting).unwrap();
        let subjects: Vec<_> = rubric.subjects().map(|(e, s)| (e.to_owned(), s)).collect();
        for d in ids {
            for (element, standard) in &subjects {
                for rater in ["r1", "r2", "r3"] {
                    let differs = rater == "r2" && split.contains(&(d, element.as_str(), *standard));
                    let rating = match (standard, differs) {
                        (Standard::Minimum, false) => Rating::Pass,
                        (Standard::Minimum, true) => Rating::Fail,
                        (Standard::Excellence, false) => Rating::None,
                        (Standard::Excellence, true) => Rating::Partial,
                    };
                    c.record_evaluation(
                        &rubric,
                        EvaluationInput::new(d, element.clone(), *standard, rater, rating),
                    )
                    .unwrap();
                }
            }
        }
        (c, rubric)
    }

    #[test]
    fn unanimous_round_is_zero() {
        let (c, rubric) = campaign(&[]);
        let rate = overall_disagreement_rate(&c, &rubric, 0, Default::default()).unwrap();
        assert_eq!(rate, Rate { count: 0, total: 190 });
        assert_eq!(rate.percent(), 0.0);
    }

    #[test]
    fn thirteen_of_190() {
        let mut split = Vec::new();
        let elements = ["ethicality", "reliability", "integrity", "findability"];
        for (i, d) in ["d1", "d2", "d3", "d4", "d5"].into_iter().enumerate() {
            split.push((d, elements[i % 4], Standard::Excellence));
            split.push((d, elements[(i + 1) % 4], Standard::Minimum));
        }
        split.push(("d1", "accessibility", Standard::Minimum));
        split.push(("d2", "accessibility", Standard::Minimum));
        split.push(("d3", "accessibility", Standard::Excellence));
        let (c, rubric) = campaign(&split);
        let rate = overall_disagreement_rate(&c, &rubric, 0, Default::default()).unwrap();
        assert_eq!(rate, Rate { count: 13, total: 190 });
        assert!((rate.percent() - 6.842105263157895).abs() < 1e-12);

        let per = dataset_disagreement_counts(&c, &rubric, 0, Default::default()).unwrap();
        assert_eq!(per.iter().map(|d| d.disagreements).sum::<usize>(), 13);
        assert_eq!(per[0].disagreements, 3);
    }

    #[test]
    fn element_rate_counts_datasets_once() {
        let split = [
            ("d2", "ethicality", Standard::Minimum),
            ("d2", "ethicality", Standard::Excellence),
        ];
        let (c, rubric) = campaign(&split);
        let rates = element_inconsistency_rates(&c, &rubric, &[0], Default::default()).unwrap();
        assert_eq!(rates.len(), 19);
        let eth = rates.iter().find(|r| r.element == "ethicality").unwrap();
        assert_eq!(eth.datasets, Rate { count: 1, total: 5 });
        assert_eq!(eth.datasets.percent(), 20.0);
        assert!(rates
            .iter()
            .filter(|r| r.element != "ethicality")
            .all(|r| r.datasets.count == 0));
    }

    #[test]
    fn incomplete_round_is_an_error() {
        let rubric = default_rubric();
        let raters: Vec<_> = ["r1", "r2"].into_iter().map(Rater::new).collect();
        let mut c = Campaign::create("c", &rubric, raters, CampaignOptions::default()).unwrap();
        c.add_round("r", vec![DatasetEntry::new("d1")]).unwrap();
        let err = overall_disagreement_rate(&c, &rubric, 0, Default::default()).unwrap_err();
        assert_eq!(err, StatsError::IncompleteRound { round: 0, missing: 76 });
    }

    #[test]
    fn standing_records_can_be_excluded() {
        let split = [("d1", "reliability", Standard::Excellence)];
        let (mut c, rubric) = campaign(&split);
        c.transition_round(0, RoundStatus::Resolving).unwrap();
        c.detect_disagreements(&rubric, 0).unwrap();
        let key = CellKey::new("d1", "reliability", Standard::Excellence);
        c.close_standing(&key, "r1", "different reading of the term", chrono::Utc::now())
            .unwrap();
        let with = overall_disagreement_rate(&c, &rubric, 0, DisagreementOptions { count_standing: true }).unwrap();
        let without = overall_disagreement_rate(&c, &rubric, 0, DisagreementOptions { count_standing: false }).unwrap();
        assert_eq!((with.count, without.count), (1, 0));
    }
}
