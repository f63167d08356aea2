#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use curalens_core::Store;
use curalens_testkit::{build_fixture_with, Fixture, FixtureOptions};

/// Runs the `curalens` binary against a store root.
pub fn curalens(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curalens"))
        .env_remove("CURALENS_CAMPAIGN")
        .env("CURALENS_STORE", store)
        .args(args)
        .output()
        .expect("curalens runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Persists the engineered fixture campaign (id `fixture`) in `root`.
pub fn seed_fixture(root: &Path, options: &FixtureOptions) -> (Store, Fixture) {
    let store = Store::open(root).expect("store opens");
    let mut fixture = build_fixture_with(options);
    store.put_rubric(&fixture.rubric).expect("rubric stored");
    let mut campaign = fixture.campaign.clone();
    store.create_campaign(&mut campaign).expect("fixture stored");
    fixture.campaign = campaign;
    (store, fixture)
}
