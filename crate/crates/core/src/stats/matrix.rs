use serde::{Deserialize, Serialize};

use super::{MissingCell, StatsError};
use crate::campaign::{Campaign, CellKey};
use crate::rubric::RubricSpec;
use crate::scale::{Rating, Standard};

/// Maps a rating onto [0, 1]. Both scales are normalised so minimum and
/// excellence rows can share one matrix: fail/none are 0, partial is 0.5,
/// pass/full are 1.
pub fn encode_rating(rating: Rating) -> f64 {
    match rating {
        Rating::Fail | Rating::None => 0.0,
        Rating::Partial => 0.5,
        Rating::Pass | Rating::Full => 1.0,
    }
}

/// Which rows go into a per-dataset matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixScope {
    /// Both standards of every element (38 rows with the default rubric).
    #[default]
    Combined,
    Minimum,
    Excellence,
}

impl MatrixScope {
    fn includes(self, standard: Standard) -> bool {
        match self {
            MatrixScope::Combined => true,
            MatrixScope::Minimum => standard == Standard::Minimum,
            MatrixScope::Excellence => standard == Standard::Excellence,
        }
    }
}

/// Fully crossed subjects × raters grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    subjects: Vec<String>,
    raters: Vec<String>,
    values: Vec<f64>,
}

impl RatingMatrix {
    /// Builds a matrix from labelled rows. Every row must have one finite
    /// value per rater.
    pub fn new(subjects: Vec<String>, raters: Vec<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let (n, k) = (subjects.len(), raters.len());
        if values.len() != n * k {
            return Err(StatsError::Shape(format!(
                "{} values for {n} subjects x {k} raters",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite {
                row: pos / k.max(1),
                col: pos % k.max(1),
            });
        }
        Ok(Self {
            subjects,
            raters,
            values,
        })
    }

    /// Convenience constructor with generated labels `s0..`, `r0..`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, StatsError> {
        let k = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != k {
                return Err(StatsError::Shape(format!(
                    "row {i} has {} values, expected {k}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(
            (0..rows.len()).map(|i| format!("s{i}")).collect(),
            (0..k).map(|j| format!("r{j}")).collect(),
            values,
        )
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    /// Number of subjects (rows).
    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    /// Number of raters (columns).
    pub fn k(&self) -> usize {
        self.raters.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.k() + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k().max(1))
    }
}

/// One row per `(element, standard)` in rubric order, one column per
/// campaign rater, values from [`encode_rating`]. Missing cells are an error;
/// nothing is imputed.
pub fn build_matrix(
    campaign: &Campaign,
    rubric: &RubricSpec,
    dataset: &str,
    scope: MatrixScope,
) -> Result<RatingMatrix, StatsError> {
    campaign.check_rubric(rubric)?;
    if campaign.round_of_dataset(dataset).is_none() {
        return Err(crate::campaign::CampaignError::UnknownDataset(dataset.to_owned()).into());
    }
    let mut subjects = Vec::new();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for (element, standard) in rubric.subjects().filter(|(_, s)| scope.includes(*s)) {
        let key = CellKey::new(dataset, element, standard);
        subjects.push(format!("{element}/{standard}"));
        for rater in &campaign.raters {
            match campaign.cell(&key, &rater.id) {
                Some(cell) => values.push(encode_rating(cell.rating)),
                None => missing.push(MissingCell {
                    element: element.to_owned(),
                    standard,
                    rater: rater.id.clone(),
                }),
            }
        }
    }
    if !missing.is_empty() {
        return Err(StatsError::Incomplete {
            dataset: dataset.to_owned(),
            missing,
        });
    }
    RatingMatrix::new(subjects, campaign.raters.iter().map(|r| r.id.clone()).collect(), values)
}
