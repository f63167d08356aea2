use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnovaDecomposition, StatsError};

pub const ICC_MODEL: &str = "ICC(C,k) two-way mixed, consistency, average measures";

/// Conventional agreement bands with cut points at 0.40, 0.60 and 0.75.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementBand {
    Poor,
    Fair,
    Good,
    Excellent,
}

impl AgreementBand {
    /// Lower bounds of fair, good and excellent.
    pub const THRESHOLDS: [f64; 3] = [0.40, 0.60, 0.75];

    pub fn as_str(self) -> &'static str {
        match self {
            AgreementBand::Poor => "poor",
            AgreementBand::Fair => "fair",
            AgreementBand::Good => "good",
            AgreementBand::Excellent => "excellent",
        }
    }
}

impl fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Total over all values: negatives (and NaN) are poor, anything at or above
/// 0.75 is excellent.
pub fn classify_band(value: f64) -> AgreementBand {
    let [fair, good, excellent] = AgreementBand::THRESHOLDS;
    if value >= excellent {
        AgreementBand::Excellent
    } else if value >= good {
        AgreementBand::Good
    } else if value >= fair {
        AgreementBand::Fair
    } else {
        AgreementBand::Poor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub model: String,
    /// At most 1; negative values signal systematic disagreement and are kept.
    pub value: f64,
    pub anova: AnovaDecomposition,
    pub band: AgreementBand,
}

/// ICC(C,k) = (MS_R − MS_E) / MS_R.
pub fn icc_consistency_avg(anova: &AnovaDecomposition) -> Result<IccResult, StatsError> {
    if anova.ms_rows <= 0.0 {
        return Err(StatsError::Degenerate);
    }
    let value = (anova.ms_rows - anova.ms_error) / anova.ms_rows;
    Ok(IccResult {
        model: ICC_MODEL.to_owned(),
        value,
        anova: *anova,
        band: classify_band(value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{anova_two_way, RatingMatrix};

    fn icc(rows: &[[f64; 3]]) -> Result<IccResult, StatsError> {
        icc_consistency_avg(&anova_two_way(&RatingMatrix::from_rows(rows).unwrap()).unwrap())
    }

    #[test]
    fn band_boundaries() {
        let cases = [
            (0.39, AgreementBand::Poor),
            (0.40, AgreementBand::Fair),
            (0.45, AgreementBand::Fair),
            (0.59, AgreementBand::Fair),
            (0.60, AgreementBand::Good),
            (0.74, AgreementBand::Good),
            (0.7499, AgreementBand::Good),
            (0.75, AgreementBand::Excellent),
            (0.89, AgreementBand::Excellent),
            (1.0, AgreementBand::Excellent),
            (-3.0, AgreementBand::Poor),
        ];
        for (value, band) in cases {
            assert_eq!(classify_band(value), band, "{value}");
        }
    }

    #[test]
    fn perfect_agreement_is_one() {
        let r = icc(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.band, AgreementBand::Excellent);
        assert_eq!(r.model, ICC_MODEL);
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        let err = icc(&[[1.0; 3]; 5]).unwrap_err();
        assert_eq!(err, StatsError::Degenerate);
        assert!(err.to_string().starts_with("degenerate: no subject variance"));
    }

    #[test]
    fn negative_values_preserved() {
        let r = icc(&[[0.0, 1.0, 0.5], [1.0, 0.0, 0.5], [0.5, 0.5, 0.0]]).unwrap();
        assert!(r.value < 0.0);
        assert_eq!(r.band, AgreementBand::Poor);
    }
}
