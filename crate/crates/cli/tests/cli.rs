mod common;

use std::fs;

use common::{curalens, seed_fixture, stderr, stdout};
use curalens_testkit::FixtureOptions;
use serde_json::Value;

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn show_default_lists_nineteen_elements() {
    let dir = tempfile::tempdir().unwrap();
    let out = curalens(dir.path(), &["rubric", "show-default"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("data-curation-rubric@1.0.0: 19 elements in 5 groups"));

    let doc = curalens(dir.path(), &["--format", "doc", "rubric", "show-default"]);
    let rubric = json(&stdout(&doc));
    let count: usize = rubric["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["elements"].as_array().unwrap().len())
        .sum();
    assert_eq!(count, 19);

    let file = dir.path().join("rubric.json");
    fs::write(&file, stdout(&doc)).unwrap();
    let valid = curalens(dir.path(), &["rubric", "validate", file.to_str().unwrap()]);
    assert!(valid.status.success());
    assert_eq!(stdout(&valid), "rubric is valid\n");
}

#[test]
fn invalid_rubric_fails_with_findings() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"id": "bad", "version": "1.0.0", "groups": []}"#).unwrap();
    let out = curalens(dir.path(), &["rubric", "validate", file.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(json(&stderr(&out))["error"]["code"], "rubric_invalid");
    fs::write(&file, "not json").unwrap();
    let out = curalens(dir.path(), &["rubric", "validate", file.to_str().unwrap()]);
    assert_eq!(json(&stderr(&out))["error"]["code"], "rubric_parse");
}

#[test]
fn operator_workflow_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let run = |args: &[&str]| {
        let mut full = vec!["--campaign", "demo"];
        full.extend_from_slice(args);
        curalens(root, &full)
    };
    let created = run(&["--format", "doc", "campaign", "new", "--raters", "alice,bob"]);
    assert!(created.status.success(), "{}", stderr(&created));
    let tokens = json(&stdout(&created))["tokens"].clone();
    assert!(tokens["operator"].as_str().unwrap().starts_with("operator."));
    assert_eq!(
        stdout(&run(&["--format", "doc", "campaign", "tokens"])),
        render(&tokens)
    );

    let list = root.join("datasets.txt");
    fs::write(&list, "ds1\n# comment\nds2\n").unwrap();
    assert!(run(&[
        "round",
        "add",
        "--label",
        "training",
        "--datasets",
        list.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&["round", "transition", "--round", "0", "--to", "collecting"])
        .status
        .success());

    let bad = run(&[
        "eval",
        "record",
        "--dataset",
        "ds1",
        "--element",
        "integrity",
        "--standard",
        "minimum",
        "--rater",
        "alice",
        "--rating",
        "maybe",
    ]);
    assert!(!bad.status.success());
    assert!(bad.stdout.is_empty());
    assert_eq!(json(&stderr(&bad))["error"]["code"], "off_scale");

    // Build a CSV covering every cell; bob fails ds1/integrity.
    let rubric = curalens_core::default_rubric();
    let mut csv = String::from("round,dataset,element,standard,rater,rating,comment,recorded_at,revision\n");
    for ds in ["ds1", "ds2"] {
        for (element, standard) in rubric.subjects() {
            for rater in ["alice", "bob"] {
                let rating = match (standard.as_str(), ds, element, rater) {
                    ("minimum", "ds1", "integrity", "bob") => "fail",
                    ("minimum", _, _, _) => "pass",
                    (_, _, "reliability", "alice") => "full",
                    _ => "partial",
                };
                csv.push_str(&format!("training,{ds},{element},{standard},{rater},{rating},,,\n"));
            }
        }
    }
    let csv_path = root.join("ratings.csv");
    fs::write(&csv_path, &csv).unwrap();
    let imported = run(&["eval", "import", csv_path.to_str().unwrap()]);
    assert!(imported.status.success(), "{}", stderr(&imported));
    assert_eq!(stdout(&imported), "imported 152 rows\n");

    let exported = run(&["eval", "export"]);
    assert_eq!(stdout(&exported).lines().count(), 153);

    let complete = run(&["stats", "completeness"]);
    assert_eq!(stdout(&complete), "round 0: 152/152 cells recorded, 0 missing\n");

    let resolving = run(&["round", "transition", "--round", "0", "--to", "resolving"]);
    assert!(resolving.status.success(), "{}", stderr(&resolving));
    assert!(stdout(&resolving).contains("opened 3 disagreement records"));

    let listed = run(&["resolve", "list", "--status", "open"]);
    assert_eq!(stdout(&listed).lines().count(), 3);
    let key = "ds1:integrity:minimum";
    assert!(run(&[
        "resolve",
        "tag",
        "--key",
        key,
        "--kind",
        "false-friends",
        "--note",
        "integrity"
    ])
    .status
    .success());
    let tag = run(&["resolve", "tag", "--key", key, "--kind", "vibes"]);
    assert_eq!(json(&stderr(&tag))["error"]["code"], "unknown_challenge_kind");
    assert!(run(&[
        "resolve",
        "reference",
        "--key",
        key,
        "--author",
        "alice",
        "--text",
        "checksums are published",
        "--proposed-rating",
        "pass",
    ])
    .status
    .success());
    let act = run(&[
        "resolve",
        "act",
        "--key",
        key,
        "--rater",
        "bob",
        "--stance",
        "agree",
        "--new-rating",
        "pass",
    ]);
    assert!(stdout(&act).contains("resolved-converged"), "{}", stdout(&act));
    for ds in ["ds1", "ds2"] {
        let k = format!("{ds}:reliability:excellence");
        let no_reason = run(&["resolve", "close", "--key", &k, "--closer", "alice", "--rationale", " "]);
        assert_eq!(json(&stderr(&no_reason))["error"]["code"], "rationale_required");
        let closed = run(&[
            "resolve",
            "close",
            "--key",
            &k,
            "--closer",
            "alice",
            "--rationale",
            "depends on the domain",
        ]);
        assert!(stdout(&closed).contains("resolved-standing"));
    }
    let summary = run(&["resolve", "summary", "--round", "0"]);
    assert_eq!(
        stdout(&summary),
        "round 0: 3 records, 0 open, 1 converged, 2 standing\n  false-friends: 1\n"
    );
    assert!(run(&["round", "freeze", "--round", "0"]).status.success());

    let latest = run(&["--format", "doc", "report", "rounds"]);
    assert_eq!(json(&stdout(&latest))["rounds"][0]["disagreements"], 2);
    let before = run(&["--format", "doc", "report", "rounds", "--pre-resolution"]);
    assert_eq!(json(&stdout(&before))["rounds"][0]["disagreements"], 3);
    let without_standing = run(&["--format", "doc", "stats", "disagreements", "--exclude-standing"]);
    assert_eq!(json(&stdout(&without_standing))["rounds"][0]["disagreements"], 0);

    let out = root.join("elements.csv");
    let written = run(&["--format", "csv", "report", "elements", "--out", out.to_str().unwrap()]);
    assert!(written.status.success());
    assert!(written.stdout.is_empty());
    let table = fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("element,"), "{table}");
    assert_eq!(table.lines().count(), 20);

    let frozen = run(&[
        "eval",
        "record",
        "--dataset",
        "ds1",
        "--element",
        "integrity",
        "--standard",
        "minimum",
        "--rater",
        "alice",
        "--rating",
        "fail",
    ]);
    assert_eq!(json(&stderr(&frozen))["error"]["code"], "round_frozen");
}

fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).unwrap();
    s.push('\n');
    s
}

#[test]
fn missing_campaign_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = curalens(dir.path(), &["stats", "icc"]);
    assert!(!out.status.success());
    assert_eq!(json(&stderr(&out))["error"]["code"], "no_campaign");
    let out = curalens(dir.path(), &["--campaign", "ghost", "stats", "icc"]);
    assert_eq!(json(&stderr(&out))["error"]["code"], "unknown_campaign");
}

#[test]
fn fixture_icc_for_d21_is_excellent() {
    let dir = tempfile::tempdir().unwrap();
    seed_fixture(dir.path(), &FixtureOptions::default());
    let out = curalens(
        dir.path(),
        &["--campaign", "fixture", "stats", "icc", "--dataset", "d21"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("d21"), "{text}");
    assert!(text.trim_end().ends_with("excellent"), "{text}");

    let rounds = curalens(
        dir.path(),
        &["--campaign", "fixture", "stats", "disagreements", "--by-round"],
    );
    let lines: Vec<String> = stdout(&rounds).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 4);
    for (line, pct) in lines.iter().zip(["32.0%", "25.0%", "23.0%", "7.0%"]) {
        assert!(line.contains(pct), "{line}");
    }
}

#[test]
fn read_commands_are_replayable() {
    let dir = tempfile::tempdir().unwrap();
    seed_fixture(dir.path(), &FixtureOptions::default());
    for args in [
        &["--campaign", "fixture", "stats", "icc", "--all"][..],
        &["--campaign", "fixture", "--format", "doc", "report", "irr"],
        &["--campaign", "fixture", "--format", "csv", "report", "rounds"],
        &["--campaign", "fixture", "report", "plot-data", "--series", "rounds"],
        &[
            "--campaign",
            "fixture",
            "--format",
            "doc",
            "stats",
            "disagreements",
            "--by-element",
        ],
    ] {
        let first = curalens(dir.path(), args);
        let second = curalens(dir.path(), args);
        assert!(first.status.success(), "{args:?}: {}", stderr(&first));
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn degenerate_dataset_reports_no_subject_variance() {
    let dir = tempfile::tempdir().unwrap();
    seed_fixture(
        dir.path(),
        &FixtureOptions {
            degenerate_dataset: Some("d2".into()),
        },
    );
    let out = curalens(
        dir.path(),
        &["--campaign", "fixture", "stats", "icc", "--dataset", "d2"],
    );
    assert!(!out.status.success());
    let err = json(&stderr(&out));
    assert_eq!(err["error"]["code"], "degenerate");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("no subject variance"));
    let all = curalens(dir.path(), &["--campaign", "fixture", "stats", "icc"]);
    assert!(stdout(&all).contains("excluded d2 (training)"));
}
