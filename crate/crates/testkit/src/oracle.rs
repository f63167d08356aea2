//! Exact reference for the two-way ANOVA and ICC(C,k).
//!
//! Works in arbitrary-precision rationals straight from the defining sums.
//! The residual sum is evaluated directly as Σ(x − row − col + grand)² instead
//! of by subtraction, so it does not share a code path with the library.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactAnova {
    pub n: usize,
    pub k: usize,
    pub grand_mean: BigRational,
    pub ss_rows: BigRational,
    pub ss_cols: BigRational,
    pub ss_error: BigRational,
    pub ss_total: BigRational,
    pub ms_rows: BigRational,
    pub ms_cols: BigRational,
    pub ms_error: BigRational,
}

impl ExactAnova {
    /// `None` when there is no subject variance.
    pub fn icc(&self) -> Option<BigRational> {
        if self.ms_rows.is_zero() {
            None
        } else {
            Some((&self.ms_rows - &self.ms_error) / &self.ms_rows)
        }
    }

    pub fn icc_f64(&self) -> Option<f64> {
        self.icc().map(|v| to_f64(&v))
    }
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().expect("finite rational")
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Panics on ragged or empty input; callers pass valid designs.
pub fn exact_anova(rows: &[Vec<f64>]) -> ExactAnova {
    let n = rows.len();
    let k = rows[0].len();
    assert!(rows.iter().all(|r| r.len() == k), "ragged matrix");
    let x: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|&v| exact(v)).collect()).collect();

    let mut grand = BigRational::zero();
    for row in &x {
        for v in row {
            grand += v;
        }
    }
    let grand = grand / int(n * k);

    let row_means: Vec<BigRational> = x
        .iter()
        .map(|row| row.iter().fold(BigRational::zero(), |a, v| a + v) / int(k))
        .collect();
    let col_means: Vec<BigRational> = (0..k)
        .map(|j| x.iter().fold(BigRational::zero(), |a, row| a + &row[j]) / int(n))
        .collect();

    let sq = |v: BigRational| &v * &v;
    let ss_rows = int(k) * row_means.iter().fold(BigRational::zero(), |a, m| a + sq(m - &grand));
    let ss_cols = int(n) * col_means.iter().fold(BigRational::zero(), |a, m| a + sq(m - &grand));
    let mut ss_total = BigRational::zero();
    let mut ss_error = BigRational::zero();
    for (i, row) in x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            ss_total += sq(v - &grand);
            ss_error += sq(v - &row_means[i] - &col_means[j] + &grand);
        }
    }

    let df_rows = int(n - 1);
    let df_cols = int(k - 1);
    let df_error = int((n - 1) * (k - 1));
    ExactAnova {
        n,
        k,
        ms_rows: &ss_rows / df_rows,
        ms_cols: &ss_cols / df_cols,
        ms_error: &ss_error / df_error,
        grand_mean: grand,
        ss_rows,
        ss_cols,
        ss_error,
        ss_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn worked_four_by_three() {
        let a = exact_anova(&[
            vec![0.0, 0.5, 0.5],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.5],
            vec![0.5, 1.0, 1.0],
        ]);
        assert_eq!(a.grand_mean, r(7, 12));
        assert_eq!(a.ss_rows, r(17, 12));
        assert_eq!(a.ss_cols, r(7, 24));
        assert_eq!(a.ss_error, r(5, 24));
        assert_eq!(a.ss_total, r(23, 12));
        assert_eq!(a.ms_rows, r(17, 36));
        assert_eq!(a.ms_error, r(5, 144));
        assert_eq!(a.icc().unwrap(), r(63, 68));
    }

    #[test]
    fn constant_matrix_has_no_icc() {
        assert_eq!(exact_anova(&vec![vec![0.5; 3]; 4]).icc(), None);
    }
}
