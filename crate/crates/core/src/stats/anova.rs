use serde::{Deserialize, Serialize};

use super::{RatingMatrix, StatsError};

/// Sums of squares, degrees of freedom and mean squares of the two-way
/// subjects × raters layout with one observation per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaDecomposition {
    pub n: usize,
    pub k: usize,
    pub grand_mean: f64,
    pub ss_rows: f64,
    pub ss_cols: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub df_rows: usize,
    pub df_cols: usize,
    pub df_error: usize,
    /// MS_R, between subjects.
    pub ms_rows: f64,
    /// MS_C, between raters.
    pub ms_cols: f64,
    /// MS_E, residual.
    pub ms_error: f64,
}

/// Residual sums below this are rounding noise and are clamped to zero.
const ERROR_CLAMP: f64 = 1e-12;

pub fn anova_two_way(m: &RatingMatrix) -> Result<AnovaDecomposition, StatsError> {
    let (n, k) = (m.n(), m.k());
    if n < 3 || k < 2 {
        return Err(StatsError::InsufficientDesign { n, k });
    }
    let cells = (n * k) as f64;
    let grand_mean = m.rows().flatten().sum::<f64>() / cells;

    let row_means: Vec<f64> = m.rows().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let mut col_means = vec![0.0; k];
    for row in m.rows() {
        for (acc, x) in col_means.iter_mut().zip(row) {
            *acc += x;
        }
    }
    for c in &mut col_means {
        *c /= n as f64;
    }

    let mut ss_rows = k as f64 * row_means.iter().map(|r| (r - grand_mean).powi(2)).sum::<f64>();
    let ss_cols = n as f64 * col_means.iter().map(|c| (c - grand_mean).powi(2)).sum::<f64>();
    let ss_total: f64 = m.rows().flatten().map(|x| (x - grand_mean).powi(2)).sum();

    // Row means that differ only through rounding in the grand mean would
    // otherwise turn a constant-subject matrix into a tiny positive MS_R.
    let scale = m.rows().flatten().fold(0.0_f64, |a, x| a.max(x.abs()));
    let noise = cells * (16.0 * f64::EPSILON * scale).powi(2);
    if ss_rows <= noise {
        ss_rows = 0.0;
    }

    let mut ss_error = ss_total - ss_rows - ss_cols;
    if (-ERROR_CLAMP..0.0).contains(&ss_error) {
        ss_error = 0.0;
    }

    let df_rows = n - 1;
    let df_cols = k - 1;
    let df_error = df_rows * df_cols;
    Ok(AnovaDecomposition {
        n,
        k,
        grand_mean,
        ss_rows,
        ss_cols,
        ss_error,
        ss_total,
        df_rows,
        df_cols,
        df_error,
        ms_rows: ss_rows / df_rows as f64,
        ms_cols: ss_cols / df_cols as f64,
        ms_error: ss_error / df_error as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anova(rows: &[[f64; 2]]) -> AnovaDecomposition {
        anova_two_way(&RatingMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn identical_raters_have_no_error() {
        let a = anova(&[[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]);
        assert_eq!(a.ss_error, 0.0);
        assert!((a.ss_rows - 1.0).abs() < 1e-15);
        assert_eq!((a.df_rows, a.df_cols, a.df_error), (2, 1, 2));
    }

    #[test]
    fn pure_column_effect() {
        let a = anova(&[[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]);
        assert_eq!(a.ss_rows, 0.0);
        assert!((a.ss_cols - 1.5).abs() < 1e-15);
        assert_eq!(a.ss_error, 0.0);
    }

    #[test]
    fn small_designs_rejected() {
        let m = RatingMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(
            anova_two_way(&m).unwrap_err(),
            StatsError::InsufficientDesign { n: 2, k: 2 }
        );
        let m = RatingMatrix::from_rows(&[[0.0], [1.0], [1.0]]).unwrap();
        assert!(matches!(
            anova_two_way(&m),
            Err(StatsError::InsufficientDesign { n: 3, k: 1 })
        ));
    }

    #[test]
    fn constant_matrix_has_zero_row_sum() {
        let rows = vec![[0.1, 0.1, 0.1]; 37];
        let a = anova_two_way(&RatingMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(a.ss_rows, 0.0);
        assert_eq!(a.ms_rows, 0.0);
    }

    #[test]
    fn sums_add_up() {
        let rows = [[0.0, 0.5, 0.5], [1.0, 1.0, 1.0], [0.0, 0.0, 0.5], [0.5, 1.0, 1.0]];
        let a = anova_two_way(&RatingMatrix::from_rows(&rows).unwrap()).unwrap();
        assert!((a.ss_rows + a.ss_cols + a.ss_error - a.ss_total).abs() < 1e-12);
        assert!((a.ms_rows - 17.0 / 36.0).abs() < 1e-12);
        assert!((a.ms_error - 5.0 / 144.0).abs() < 1e-12);
    }
}
