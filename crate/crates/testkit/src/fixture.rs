//! Scripted three-rater campaign whose round disagreement rates are fixed by
//! counting.
//!
//! The fixture rubric has 20 elements (40 cells per dataset), so rounds of
//! 5/10/5/5 datasets hold 200/400/200/200 cells and the target percentages
//! 32/25/23/7 are whole cell counts: 64/100/46/14. Every planned
//! disagreement is one rater departing from the other two.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use curalens_core::campaign::{CampaignOptions, DatasetEntry, Rater};
use curalens_core::resolution::{ChallengeKind, ChallengeTag, ReferenceComment, ResolutionAction, Stance};
use curalens_core::rubric::{Criterion, ElementGroup, LevelText, RubricElement, RubricSpec, RubricVersion};
use curalens_core::scale::Scale;
use curalens_core::{Campaign, CellKey, EvaluationCell, EvaluationInput, Rating, RoundStatus, Standard};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATERS: [&str; 3] = ["rater1", "rater2", "rater3"];
pub const ROUND_LABELS: [&str; 4] = ["training", "round1", "round2", "round3"];
pub const ROUND_SIZES: [usize; 4] = [5, 10, 5, 5];
pub const TARGET_PERCENT: [f64; 4] = [32.0, 25.0, 23.0, 7.0];
pub const FIXTURE_CAMPAIGN_ID: &str = "fixture";

const SEED: u64 = 0x5eed_2024;

/// Five groups of four elements, both standards on every element.
pub fn fixture_rubric() -> RubricSpec {
    let groups = (1..=5)
        .map(|g| ElementGroup {
            id: format!("g{g}"),
            title: format!("Group {g}"),
            elements: (1..=4)
                .map(|e| RubricElement {
                    id: format!("g{g}-e{e}"),
                    title: format!("Element {g}.{e}"),
                    minimum: Some(Criterion {
                        scale: Scale::PassFail,
                        summary: format!("element {g}.{e} is documented"),
                        levels: vec![
                            LevelText {
                                rating: Rating::Fail,
                                text: "not documented".into(),
                            },
                            LevelText {
                                rating: Rating::Pass,
                                text: "documented".into(),
                            },
                        ],
                    }),
                    excellence: Some(Criterion {
                        scale: Scale::NonePartialFull,
                        summary: format!("element {g}.{e} is documented in depth"),
                        levels: Vec::new(),
                    }),
                    guidance_refs: Vec::new(),
                })
                .collect(),
        })
        .collect();
    RubricSpec {
        id: "fixture-rubric".into(),
        version: RubricVersion::new("1.0.0"),
        groups,
        guidance: Vec::new(),
    }
}

/// Cells per round implied by the rubric and round sizes.
pub fn round_cells(rubric: &RubricSpec) -> [usize; 4] {
    let per_dataset = rubric.subjects().count();
    ROUND_SIZES.map(|n| n * per_dataset)
}

/// Disagreeing cells needed for each target percentage. Panics if a target
/// is not a whole number of cells.
pub fn target_counts(rubric: &RubricSpec) -> [usize; 4] {
    let cells = round_cells(rubric);
    let mut out = [0; 4];
    for i in 0..4 {
        let exact = TARGET_PERCENT[i] * cells[i] as f64 / 100.0;
        assert_eq!(
            exact.fract(),
            0.0,
            "target {}% of {} cells",
            TARGET_PERCENT[i],
            cells[i]
        );
        out[i] = exact as usize;
    }
    out
}

/// What the script intends for one disagreeing cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedSplit {
    pub deviator: String,
    pub consensus: Rating,
    pub deviant: Rating,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureOptions {
    /// Gives this dataset identical maximal ratings everywhere, which makes
    /// its matrix constant. Its cells take no planned disagreements.
    pub degenerate_dataset: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub rubric: RubricSpec,
    /// Holds every event since creation as pending, ready for a store.
    pub campaign: Campaign,
    /// Last event before any resolution activity; all rounds are resolving.
    pub pre_resolution_sequence: u64,
    pub pre_resolution_cells: Vec<EvaluationCell>,
    pub consensus: BTreeMap<CellKey, Rating>,
    pub splits: BTreeMap<CellKey, PlannedSplit>,
}

fn timestamp(step: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap() + Duration::seconds(step)
}

pub fn dataset_ids() -> Vec<Vec<String>> {
    let mut next = 1;
    ROUND_SIZES
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    let id = format!("d{next}");
                    next += 1;
                    id
                })
                .collect()
        })
        .collect()
}

fn deviant(consensus: Rating, flip: bool) -> Rating {
    match consensus {
        Rating::Pass => Rating::Fail,
        Rating::Fail => Rating::Pass,
        Rating::None => Rating::Partial,
        Rating::Full => Rating::Partial,
        Rating::Partial if flip => Rating::Full,
        Rating::Partial => Rating::None,
    }
}

pub fn build_fixture() -> Fixture {
    build_fixture_with(&FixtureOptions::default())
}

pub fn build_fixture_with(options: &FixtureOptions) -> Fixture {
    let rubric = fixture_rubric();
    let targets = target_counts(&rubric);
    let subjects: Vec<(String, Standard)> = rubric.subjects().map(|(e, s)| (e.to_owned(), s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut campaign = Campaign::create_at(
        FIXTURE_CAMPAIGN_ID,
        &rubric,
        RATERS.iter().map(|r| Rater::new(*r)).collect(),
        CampaignOptions::default(),
        timestamp(0),
    )
    .expect("fixture campaign");

    let mut consensus = BTreeMap::new();
    let mut splits = BTreeMap::new();
    let mut step = 1;
    for (round, ids) in dataset_ids().into_iter().enumerate() {
        let round = round as u32;
        // Consensus ratings: varied within every dataset so no matrix is flat.
        let mut cells = Vec::new();
        for id in &ids {
            let degenerate = options.degenerate_dataset.as_deref() == Some(id.as_str());
            for (row, (element, standard)) in subjects.iter().enumerate() {
                let rating = match (degenerate, standard) {
                    (true, Standard::Minimum) => Rating::Pass,
                    (true, Standard::Excellence) => Rating::Full,
                    (false, Standard::Minimum) if row == 0 => Rating::Pass,
                    (false, Standard::Minimum) if row == 2 => Rating::Fail,
                    (false, Standard::Minimum) => {
                        if rng.gen_bool(0.6) {
                            Rating::Pass
                        } else {
                            Rating::Fail
                        }
                    }
                    (false, Standard::Excellence) => [Rating::None, Rating::Partial, Rating::Full][rng.gen_range(0..3)],
                };
                let key = CellKey::new(id.clone(), element.clone(), *standard);
                if !degenerate {
                    cells.push(key.clone());
                }
                consensus.insert(key, rating);
            }
        }
        cells.shuffle(&mut rng);
        for (i, key) in cells.into_iter().take(targets[round as usize]).enumerate() {
            let agreed = consensus[&key];
            splits.insert(
                key,
                PlannedSplit {
                    deviator: RATERS[i % 3].to_owned(),
                    consensus: agreed,
                    deviant: deviant(agreed, i % 2 == 0),
                },
            );
        }

        campaign
            .add_round(
                ROUND_LABELS[round as usize],
                ids.iter().map(|id| DatasetEntry::new(id.clone())).collect(),
            )
            .expect("add round");
        campaign
            .transition_round(round, RoundStatus::Collecting)
            .expect("collect");
        for rater in RATERS {
            for id in &ids {
                for (element, standard) in &subjects {
                    let key = CellKey::new(id.clone(), element.clone(), *standard);
                    let rating = match splits.get(&key) {
                        Some(split) if split.deviator == rater => split.deviant,
                        _ => consensus[&key],
                    };
                    campaign
                        .record_evaluation(
                            &rubric,
                            EvaluationInput::new(id.clone(), element.clone(), *standard, rater, rating)
                                .with_comment(format!("{rater} on {key}"))
                                .at(timestamp(step)),
                        )
                        .expect("record");
                    step += 1;
                }
            }
        }
        campaign
            .transition_round(round, RoundStatus::Resolving)
            .expect("resolve");
    }

    Fixture {
        pre_resolution_sequence: campaign.last_sequence,
        pre_resolution_cells: campaign.evaluations().cloned().collect(),
        rubric,
        campaign,
        consensus,
        splits,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolutionOutcome {
    pub opened: usize,
    pub converged: usize,
    pub standing: usize,
    pub tagged: usize,
}

/// Every sixth record (in key order per round) stays split and is closed as
/// standing; every other record converges when its deviator adopts the
/// reference rating. Some records first collect a non-committal response.
/// Rounds are frozen afterwards.
pub fn resolve_fixture(fixture: &mut Fixture) -> ResolutionOutcome {
    let mut outcome = ResolutionOutcome::default();
    let rubric = fixture.rubric.clone();
    for round in 0..ROUND_SIZES.len() as u32 {
        let open = fixture.campaign.detect_disagreements(&rubric, round).expect("detect");
        outcome.opened += open.len();
        for (i, record) in open.iter().enumerate() {
            let key = &record.key;
            let split = &fixture.splits[key];
            let reviewer = RATERS.iter().find(|r| **r != split.deviator).expect("another rater");
            fixture
                .campaign
                .set_reference_comment(ReferenceComment {
                    key: key.clone(),
                    author: reviewer.to_string(),
                    text: format!("documentation supports {}", split.consensus),
                    proposed_rating: split.consensus,
                })
                .expect("reference");
            if i % 3 == 1 {
                let kind = ChallengeKind::ALL[i % 4];
                fixture
                    .campaign
                    .tag_challenge(key, ChallengeTag::new(kind, "fixture"))
                    .expect("tag");
                outcome.tagged += 1;
            }
            let at = timestamp(1_000_000 + i as i64);
            if i % 4 == 2 {
                fixture
                    .campaign
                    .submit_resolution(
                        key,
                        ResolutionAction {
                            rater: reviewer.to_string(),
                            stance: Stance::Disagree,
                            comment: "keeping my rating".into(),
                            new_rating: None,
                            timestamp: at,
                        },
                    )
                    .expect("disagree");
            }
            if i % 6 == 5 {
                fixture
                    .campaign
                    .close_standing(key, RATERS[0], "criteria read differently after discussion", at)
                    .expect("close");
                outcome.standing += 1;
            } else {
                fixture
                    .campaign
                    .submit_resolution(
                        key,
                        ResolutionAction {
                            rater: split.deviator.clone(),
                            stance: Stance::Agree,
                            comment: "agree with the reference comment".into(),
                            new_rating: Some(split.consensus),
                            timestamp: at,
                        },
                    )
                    .expect("converge");
                outcome.converged += 1;
            }
        }
    }
    for round in 0..ROUND_SIZES.len() as u32 {
        fixture.campaign.freeze_round(round).expect("freeze");
    }
    outcome
}

/// Per element, the datasets where the script planned a disagreement.
pub fn planned_element_datasets(fixture: &Fixture) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = fixture
        .rubric
        .elements()
        .map(|e| (e.id.clone(), BTreeSet::new()))
        .collect();
    for key in fixture.splits.keys() {
        out.get_mut(&key.element)
            .expect("rubric element")
            .insert(key.dataset.clone());
    }
    out
}

/// Converts consensus and planned splits into the 40 × 3 matrix the library
/// should build for `dataset`, using the 0 / 0.5 / 1 encoding.
pub fn planned_matrix(fixture: &Fixture, dataset: &str) -> Vec<Vec<f64>> {
    let encode = |r: Rating| match r {
        Rating::Fail | Rating::None => 0.0,
        Rating::Partial => 0.5,
        Rating::Pass | Rating::Full => 1.0,
    };
    fixture
        .rubric
        .subjects()
        .map(|(element, standard)| {
            let key = CellKey::new(dataset, element, standard);
            RATERS
                .iter()
                .map(|rater| match fixture.splits.get(&key) {
                    Some(s) if s.deviator == *rater => encode(s.deviant),
                    _ => encode(fixture.consensus[&key]),
                })
                .collect()
        })
        .collect()
}
