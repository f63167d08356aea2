//! Acceptance criteria for the workspace. Each criterion prints one
//! `PASS` or `FAIL` line; the binary exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use curalens_core::report::{disagreement_series, RatingView};
use curalens_core::resolution::DisagreementStatus;
use curalens_core::rubric::validate_rubric;
use curalens_core::service;
use curalens_core::stats::{
    anova_two_way, classify_band, icc_consistency_avg, overall_disagreement_rate, AgreementBand, DisagreementOptions,
    RatingMatrix, StatsError,
};
use curalens_core::{default_rubric, Store};
use curalens_testkit::fixture::TARGET_PERCENT;
use curalens_testkit::{build_fixture, exact_anova, random_campaign, resolve_fixture, FixtureOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_rows(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    const VALUES: [f64; 3] = [0.0, 0.5, 1.0];
    let n = rng.gen_range(3..=40);
    let k = rng.gen_range(2..=6);
    (0..n)
        .map(|_| (0..k).map(|_| VALUES[rng.gen_range(0..3)]).collect())
        .collect()
}

fn has_row_variance(rows: &[Vec<f64>]) -> bool {
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    sums.iter().any(|s| *s != sums[0])
}

fn module_icc(rows: &[Vec<f64>]) -> Result<f64, StatsError> {
    let m = RatingMatrix::from_rows(rows)?;
    Ok(icc_consistency_avg(&anova_two_way(&m)?)?.value)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1cc);
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut degenerate = 0;
    for i in 0..500 {
        let rows = random_rows(&mut rng);
        match (module_icc(&rows), exact_anova(&rows).icc_f64()) {
            (Ok(got), Some(want)) => {
                let diff = (got - want).abs();
                check(diff < 1e-9, || format!("matrix {i}: {got} vs oracle {want}"))?;
                worst = worst.max(diff);
            }
            (Err(StatsError::Degenerate), None) => degenerate += 1,
            (got, want) => return Err(format!("matrix {i}: module {got:?}, oracle {want:?}")),
        }
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "500 matrices, max |diff| {worst:.2e}, {degenerate} degenerate on both sides, {elapsed:.2?}"
    ))
}

fn perfect_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    let mut tested = 0;
    while tested < 500 {
        let n = rng.gen_range(3..=40);
        let k = rng.gen_range(2..=6);
        let column: Vec<f64> = if tested % 2 == 0 {
            (0..n).map(|_| [0.0, 0.5, 1.0][rng.gen_range(0..3)]).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
        };
        let rows: Vec<Vec<f64>> = column.iter().map(|v| vec![*v; k]).collect();
        if !has_row_variance(&rows) {
            continue;
        }
        let icc = module_icc(&rows).map_err(|e| format!("matrix {tested}: {e}"))?;
        check((icc - 1.0).abs() < 1e-12, || format!("matrix {tested}: icc {icc}"))?;
        tested += 1;
    }
    Ok(format!("{tested} identical-column matrices give 1 within 1e-12"))
}

fn consistency_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let mut tested = 0;
    let mut worst = 0.0f64;
    while tested < 100 {
        let rows = random_rows(&mut rng);
        if !has_row_variance(&rows) {
            continue;
        }
        let col = rng.gen_range(0..rows[0].len());
        let shift = rng.gen_range(-2.0..2.0);
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[col] += shift;
                r
            })
            .collect();
        let before = module_icc(&rows).map_err(|e| e.to_string())?;
        let after = module_icc(&shifted).map_err(|e| e.to_string())?;
        let diff = (before - after).abs();
        check(diff < 1e-9, || format!("matrix {tested}: {before} vs {after}"))?;
        worst = worst.max(diff);
        tested += 1;
    }
    Ok(format!("100 column-shifted matrices, max |diff| {worst:.2e}"))
}

fn band_boundaries() -> Outcome {
    let expected = [
        (0.39, AgreementBand::Poor),
        (0.40, AgreementBand::Fair),
        (0.59, AgreementBand::Fair),
        (0.60, AgreementBand::Good),
        (0.74, AgreementBand::Good),
        (0.75, AgreementBand::Excellent),
    ];
    for (value, band) in expected {
        let got = classify_band(value);
        check(got == band, || {
            format!("{value} classified as {got:?}, expected {band:?}")
        })?;
    }
    Ok("0.39 poor, 0.40 fair, 0.59 fair, 0.60 good, 0.74 good, 0.75 excellent".into())
}

fn degenerate_handling() -> Outcome {
    for value in [0.0, 0.5, 1.0] {
        for (n, k) in [(3, 2), (25, 3), (40, 6)] {
            let rows = vec![vec![value; k]; n];
            match module_icc(&rows) {
                Err(e @ StatsError::Degenerate) => {
                    check(e.to_string().contains("no subject variance"), || format!("message {e}"))?
                }
                other => return Err(format!("constant {value} ({n}x{k}) gave {other:?}")),
            }
        }
    }
    Ok("constant matrices report \"no subject variance\"".into())
}

fn default_rubric_audit() -> Outcome {
    let inventory: [(&str, &[&str]); 5] = [
        ("scope", &["context-purpose-motivation", "requirements"]),
        (
            "ethicality-and-reflexivity",
            &[
                "ethicality",
                "domain-knowledge-and-data-practices",
                "context-awareness",
                "environmental-footprint",
            ],
        ),
        (
            "ml-pipeline",
            &["data-collection", "data-processing", "data-annotation"],
        ),
        (
            "data-quality",
            &[
                "suitability",
                "representativeness",
                "authenticity",
                "reliability",
                "integrity",
                "structured-documentation",
            ],
        ),
        (
            "fair",
            &["findability", "accessibility", "interoperability", "reusability"],
        ),
    ];
    let spec = default_rubric();
    check(spec.groups.len() == 5, || format!("{} groups", spec.groups.len()))?;
    check(spec.element_count() == 19, || {
        format!("{} elements", spec.element_count())
    })?;
    for (group, (want_id, want_elements)) in spec.groups.iter().zip(inventory) {
        check(group.id == want_id, || {
            format!("group {} where {want_id} expected", group.id)
        })?;
        let ids: Vec<&str> = group.elements.iter().map(|e| e.id.as_str()).collect();
        check(ids == want_elements, || format!("group {want_id} has {ids:?}"))?;
    }
    for element in spec.elements() {
        check(element.minimum.is_some() && element.excellence.is_some(), || {
            format!("{} lacks a standard", element.id)
        })?;
    }
    let report = validate_rubric(&spec);
    check(report.is_clean(), || format!("findings: {report}"))?;
    Ok("19 elements in 5 groups, both standards everywhere, zero findings".into())
}

fn end_to_end_fixture() -> Outcome {
    let started = Instant::now();
    let mut f = build_fixture();
    for round in 0..4 {
        let report = f
            .campaign
            .completeness_check(&f.rubric, round)
            .map_err(|e| e.to_string())?;
        check(report.missing_count() == 0, || {
            format!("round {round}: {} missing", report.missing_count())
        })?;
    }
    let opts = DisagreementOptions::default();
    let series =
        disagreement_series(&RatingView::latest(f.campaign.clone()), &f.rubric, opts).map_err(|e| e.to_string())?;
    check(series.percentages() == TARGET_PERCENT, || {
        format!("series {:?}", series.percentages())
    })?;

    let pre: Vec<f64> = (0..4)
        .map(|r| overall_disagreement_rate(&f.campaign, &f.rubric, r, opts).map(|rate| rate.percent()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let outcome = resolve_fixture(&mut f);
    check(
        outcome.opened > 0 && outcome.converged > 0 && outcome.standing > 0,
        || format!("{outcome:?}"),
    )?;
    for record in f.campaign.all_disagreements() {
        let unanimous = f.campaign.is_unanimous(&record.key);
        let ok = match record.status {
            DisagreementStatus::ResolvedConverged => unanimous,
            DisagreementStatus::ResolvedStanding => !unanimous && record.closure.is_some(),
            DisagreementStatus::Open => false,
        };
        check(ok, || {
            format!("{} is {} (unanimous: {unanimous})", record.key, record.status)
        })?;
    }
    let mut post = Vec::new();
    for round in 0..4u32 {
        let rate = overall_disagreement_rate(&f.campaign, &f.rubric, round, opts).map_err(|e| e.to_string())?;
        let before = pre[round as usize];
        check(rate.percent() <= before, || {
            format!("round {round}: {} > {before}", rate.percent())
        })?;
        post.push(rate.percent());
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "series {pre:?}, {} records ({} converged, {} standing), post {post:?}, {elapsed:.2?}",
        outcome.opened, outcome.converged, outcome.standing
    ))
}

fn store_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    for seed in 0..50 {
        let (mut campaign, _) = random_campaign(seed);
        store.create_campaign(&mut campaign).map_err(|e| e.to_string())?;
        let loaded = store.load_campaign(&campaign.id).map_err(|e| e.to_string())?;
        check(loaded == campaign, || format!("seed {seed}: loaded campaign differs"))?;
    }

    let mut f = build_fixture();
    store.put_rubric(&f.rubric).map_err(|e| e.to_string())?;
    resolve_fixture(&mut f);
    store.create_campaign(&mut f.campaign).map_err(|e| e.to_string())?;
    let replayed = store
        .replay_to(&f.campaign.id, f.pre_resolution_sequence)
        .map_err(|e| e.to_string())?;
    let cells: Vec<_> = replayed.evaluations().cloned().collect();
    check(cells.len() == f.pre_resolution_cells.len(), || {
        format!(
            "{} cells replayed, {} expected",
            cells.len(),
            f.pre_resolution_cells.len()
        )
    })?;
    for (got, want) in cells.iter().zip(&f.pre_resolution_cells) {
        let bytes = |c| serde_json::to_vec(c).expect("cells serialize");
        check(got == want && bytes(got) == bytes(want), || {
            format!("cell {} differs after replay", want.key())
        })?;
    }
    Ok(format!(
        "50 campaigns load equal, {} pre-resolution cells replay exactly",
        cells.len()
    ))
}

fn cli_api_parity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (store, _) = common::seed_fixture(dir.path(), &FixtureOptions::default());
    let tokens = service::campaign_tokens(&store, "fixture").map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let app = curalens_server::router(store.clone());
    let mut compared = 0;
    for (args, uri) in [
        (&["stats", "icc"][..], "/campaigns/fixture/stats/icc"),
        (
            &["stats", "icc", "--dataset", "d21"][..],
            "/campaigns/fixture/stats/icc?dataset=d21",
        ),
    ] {
        let mut full = vec!["--campaign", "fixture", "--format", "doc"];
        full.extend_from_slice(args);
        let out = common::curalens(dir.path(), &full);
        check(out.status.success(), || format!("{args:?}: {}", common::stderr(&out)))?;

        let request = Request::get(uri)
            .header(header::AUTHORIZATION, format!("Bearer {}", tokens["rater1"]))
            .body(Body::empty())
            .map_err(|e| e.to_string())?;
        let (status, body) = runtime.block_on(async {
            let res = app.clone().oneshot(request).await.expect("router is infallible");
            let status = res.status();
            let body = axum::body::to_bytes(res.into_body(), usize::MAX)
                .await
                .map(|b| b.to_vec());
            (status, body)
        });
        let body = body.map_err(|e| e.to_string())?;
        check(status == StatusCode::OK, || format!("{uri}: status {status}"))?;
        check(out.stdout == body, || format!("{uri}: CLI and API bodies differ"))?;
        compared += 1;
    }
    Ok(format!("{compared} documents byte-equal"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("icc oracle equivalence", oracle_equivalence),
        ("perfect agreement", perfect_agreement),
        ("consistency invariance", consistency_invariance),
        ("band boundaries", band_boundaries),
        ("degenerate handling", degenerate_handling),
        ("default rubric audit", default_rubric_audit),
        ("end-to-end fixture campaign", end_to_end_fixture),
        ("store round-trip and replay", store_round_trip),
        ("cli/api parity", cli_api_parity),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
