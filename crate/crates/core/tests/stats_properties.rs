use curalens_core::stats::{
    anova_two_way, classify_band, icc_consistency_avg, AgreementBand, RatingMatrix, StatsError,
};
use curalens_testkit::oracle::{exact_anova, to_f64};
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..=40, 2usize..=6).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), k), n)
    })
}

fn matrix(rows: &[Vec<f64>]) -> RatingMatrix {
    RatingMatrix::from_rows(rows).unwrap()
}

fn has_row_variance(rows: &[Vec<f64>]) -> bool {
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    sums.iter().any(|s| *s != sums[0])
}

#[test]
fn worked_example_matches_oracle() {
    let rows = vec![
        vec![0.0, 0.5, 0.5],
        vec![1.0, 1.0, 1.0],
        vec![0.0, 0.0, 0.5],
        vec![0.5, 1.0, 1.0],
    ];
    let a = anova_two_way(&matrix(&rows)).unwrap();
    let o = exact_anova(&rows);
    for (got, want) in [
        (a.grand_mean, &o.grand_mean),
        (a.ss_rows, &o.ss_rows),
        (a.ss_cols, &o.ss_cols),
        (a.ss_error, &o.ss_error),
        (a.ss_total, &o.ss_total),
        (a.ms_rows, &o.ms_rows),
        (a.ms_error, &o.ms_error),
    ] {
        assert!((got - to_f64(want)).abs() < 1e-12, "{got} vs {}", to_f64(want));
    }
    let icc = icc_consistency_avg(&a).unwrap();
    assert!((icc.value - 63.0 / 68.0).abs() < 1e-12);
    assert_eq!(icc.band, AgreementBand::Excellent);
}

#[test]
fn constant_matrix_is_degenerate_not_nan() {
    for value in [0.0, 0.5, 1.0, 0.1, 0.7] {
        for (n, k) in [(3, 2), (38, 3), (40, 6)] {
            let rows = vec![vec![value; k]; n];
            let a = anova_two_way(&matrix(&rows)).unwrap();
            assert_eq!(icc_consistency_avg(&a).unwrap_err(), StatsError::Degenerate);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn anova_and_icc_match_oracle(rows in matrix_strategy()) {
        let a = anova_two_way(&matrix(&rows)).unwrap();
        let o = exact_anova(&rows);
        prop_assert!((a.ss_rows - to_f64(&o.ss_rows)).abs() < 1e-9);
        prop_assert!((a.ss_cols - to_f64(&o.ss_cols)).abs() < 1e-9);
        prop_assert!((a.ss_error - to_f64(&o.ss_error)).abs() < 1e-9);
        prop_assert!((a.ss_total - to_f64(&o.ss_total)).abs() < 1e-9);
        match (icc_consistency_avg(&a), o.icc_f64()) {
            (Ok(icc), Some(want)) => prop_assert!((icc.value - want).abs() < 1e-9, "{} vs {}", icc.value, want),
            (Err(StatsError::Degenerate), None) => {}
            (got, want) => prop_assert!(false, "library {:?}, oracle {:?}", got, want),
        }
    }

    #[test]
    fn sums_of_squares_add_up(rows in matrix_strategy()) {
        let a = anova_two_way(&matrix(&rows)).unwrap();
        let parts = a.ss_rows + a.ss_cols + a.ss_error;
        prop_assert!((parts - a.ss_total).abs() <= 1e-9 * a.ss_total.max(1.0));
        prop_assert!(a.ss_rows >= 0.0 && a.ss_cols >= 0.0 && a.ss_error >= 0.0);
    }

    #[test]
    fn shifting_one_rater_keeps_icc(rows in matrix_strategy(), shift in -0.5f64..=0.5, col in 0usize..6) {
        prop_assume!(has_row_variance(&rows));
        let col = col % rows[0].len();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| if j == col { v + shift } else { *v }).collect())
            .collect();
        let before = icc_consistency_avg(&anova_two_way(&matrix(&rows)).unwrap()).unwrap().value;
        let after = icc_consistency_avg(&anova_two_way(&matrix(&shifted)).unwrap()).unwrap().value;
        prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
    }

    #[test]
    fn identical_raters_agree_perfectly(column in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), 3..=40), k in 2usize..=6) {
        prop_assume!(column.iter().any(|v| *v != column[0]));
        let rows: Vec<Vec<f64>> = column.iter().map(|v| vec![*v; k]).collect();
        let icc = icc_consistency_avg(&anova_two_way(&matrix(&rows)).unwrap()).unwrap();
        prop_assert!((icc.value - 1.0).abs() < 1e-12);
        prop_assert_eq!(icc.band, AgreementBand::Excellent);
    }

    #[test]
    fn permutations_change_nothing(rows in matrix_strategy(), seed in any::<u64>()) {
        let n = rows.len();
        let k = rows[0].len();
        let mut cols: Vec<usize> = (0..k).collect();
        cols.rotate_left(seed as usize % k);
        let mut permuted: Vec<Vec<f64>> = rows.clone();
        permuted.reverse();
        permuted.rotate_left(seed as usize % n);
        let permuted: Vec<Vec<f64>> = permuted.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
        let a = anova_two_way(&matrix(&rows)).unwrap();
        let b = anova_two_way(&matrix(&permuted)).unwrap();
        for (x, y) in [(a.ss_rows, b.ss_rows), (a.ss_cols, b.ss_cols), (a.ss_error, b.ss_error), (a.ss_total, b.ss_total)] {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        match (icc_consistency_avg(&a), icc_consistency_avg(&b)) {
            (Ok(x), Ok(y)) => prop_assert!((x.value - y.value).abs() < 1e-9),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn band_is_total_and_monotone(a in -1e6f64..=1.0, b in -1e6f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(classify_band(lo) <= classify_band(hi));
        let expected = if hi < 0.40 { AgreementBand::Poor } else if hi < 0.60 { AgreementBand::Fair } else if hi < 0.75 { AgreementBand::Good } else { AgreementBand::Excellent };
        prop_assert_eq!(classify_band(hi), expected);
    }
}
