use curalens_core::report::{disagreement_series, element_table, icc_stats, irr_series, RatingView};
use curalens_core::resolution::DisagreementStatus;
use curalens_core::stats::{
    anova_two_way, build_matrix, icc_consistency_avg, overall_disagreement_rate, AgreementBand, DisagreementOptions,
    MatrixScope,
};
use curalens_testkit::fixture::{planned_element_datasets, planned_matrix, target_counts, ROUND_SIZES, TARGET_PERCENT};
use curalens_testkit::oracle::exact_anova;
use curalens_testkit::{build_fixture, build_fixture_with, resolve_fixture, FixtureOptions};

#[test]
fn fixture_rounds_are_complete() {
    let f = build_fixture();
    for round in 0..4 {
        let report = f.campaign.completeness_check(&f.rubric, round).unwrap();
        assert!(report.is_complete(), "round {round}");
        assert_eq!(report.expected_cells, 3 * ROUND_SIZES[round as usize] * 40);
    }
}

#[test]
fn targets_are_whole_counts() {
    let f = build_fixture();
    assert_eq!(target_counts(&f.rubric), [64, 100, 46, 14]);
}

#[test]
fn disagreement_series_hits_targets() {
    let f = build_fixture();
    let series = disagreement_series(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        DisagreementOptions::default(),
    )
    .unwrap();
    assert_eq!(series.percentages(), TARGET_PERCENT.to_vec());
    assert_eq!(
        series.rounds.iter().map(|r| r.disagreements).collect::<Vec<_>>(),
        vec![64, 100, 46, 14]
    );
}

#[test]
fn resolution_follows_status_rules() {
    let mut f = build_fixture();
    let pre: Vec<_> = (0..4)
        .map(|r| overall_disagreement_rate(&f.campaign, &f.rubric, r, DisagreementOptions::default()).unwrap())
        .collect();
    let outcome = resolve_fixture(&mut f);
    assert_eq!(outcome.opened, 64 + 100 + 46 + 14);
    assert_eq!(outcome.converged + outcome.standing, outcome.opened);

    for record in f.campaign.all_disagreements() {
        let unanimous = f.campaign.is_unanimous(&record.key);
        match record.status {
            DisagreementStatus::ResolvedConverged => assert!(unanimous),
            DisagreementStatus::ResolvedStanding => {
                assert!(!unanimous);
                assert!(record.closure.is_some());
            }
            DisagreementStatus::Open => panic!("record {} left open", record.key),
        }
    }
    for round in 0..4u32 {
        let post = overall_disagreement_rate(&f.campaign, &f.rubric, round, DisagreementOptions::default()).unwrap();
        assert!(post.percent() <= pre[round as usize].percent());
        let summary = f.campaign.resolution_summary(round).unwrap();
        assert_eq!(summary.open, 0);
        assert_eq!(summary.total, pre[round as usize].count);
    }

    // The pre-resolution view still shows the engineered trajectory.
    let events = f.campaign.pending_events().to_vec();
    let view = RatingView::pre_resolution(&events).unwrap();
    let series = disagreement_series(&view, &f.rubric, DisagreementOptions::default()).unwrap();
    assert_eq!(series.percentages(), TARGET_PERCENT.to_vec());
    let latest = disagreement_series(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        DisagreementOptions::default(),
    )
    .unwrap();
    let standing_only = disagreement_series(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        DisagreementOptions { count_standing: false },
    )
    .unwrap();
    assert!(latest
        .rounds
        .iter()
        .zip(&series.rounds)
        .all(|(a, b)| a.percent <= b.percent));
    assert!(standing_only.rounds.iter().all(|r| r.disagreements == 0));
}

#[test]
fn element_table_matches_hand_count() {
    let f = build_fixture();
    let planned = planned_element_datasets(&f);
    let table = element_table(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        DisagreementOptions::default(),
    )
    .unwrap();
    assert_eq!(table.elements.len(), 20);
    for row in &table.elements {
        assert_eq!(row.datasets, 25);
        assert_eq!(
            row.datasets_with_disagreement,
            planned[&row.element].len(),
            "{}",
            row.element
        );
        assert_eq!(row.percent, planned[&row.element].len() as f64 * 4.0);
    }
    assert!(table.elements.windows(2).all(|w| w[0].percent >= w[1].percent));
}

#[test]
fn icc_values_match_oracle() {
    let f = build_fixture();
    let series = irr_series(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        MatrixScope::Combined,
    )
    .unwrap();
    assert_eq!(series.points.len(), 25);
    assert_eq!(series.rounds.len(), 4);
    for point in &series.points {
        let want = exact_anova(&planned_matrix(&f, &point.dataset)).icc_f64().unwrap();
        assert!(
            (point.icc - want).abs() < 1e-9,
            "{}: {} vs {want}",
            point.dataset,
            point.icc
        );
        let m = build_matrix(&f.campaign, &f.rubric, &point.dataset, MatrixScope::Combined).unwrap();
        let recomputed = icc_consistency_avg(&anova_two_way(&m).unwrap()).unwrap();
        assert_eq!(recomputed.value, point.icc);
    }
    let d21 = exact_anova(&planned_matrix(&f, "d21")).icc_f64().unwrap();
    assert!(d21 >= 0.75, "d21 oracle ICC {d21}");
    let stats = icc_stats(&f.campaign, &f.rubric, Some("d21"), MatrixScope::Combined).unwrap();
    assert_eq!(stats.datasets[0].band, AgreementBand::Excellent);
}

#[test]
fn degenerate_dataset_is_listed_separately() {
    let f = build_fixture_with(&FixtureOptions {
        degenerate_dataset: Some("d7".into()),
    });
    let series = irr_series(
        &RatingView::latest(f.campaign.clone()),
        &f.rubric,
        MatrixScope::Combined,
    )
    .unwrap();
    assert_eq!(series.points.len(), 24);
    assert_eq!(series.excluded.len(), 1);
    assert_eq!(series.excluded[0].dataset, "d7");
    assert_eq!(series.excluded[0].code, "degenerate");
    let err = icc_stats(&f.campaign, &f.rubric, Some("d7"), MatrixScope::Combined).unwrap_err();
    assert!(err.to_string().contains("no subject variance"));
}
