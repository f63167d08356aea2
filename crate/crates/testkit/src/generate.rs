//! Seeded random campaigns in assorted lifecycle states, for persistence
//! and replay tests.

use chrono::{Duration, TimeZone, Utc};
use curalens_core::campaign::{CampaignOptions, DatasetEntry, Rater};
use curalens_core::resolution::{ChallengeKind, ChallengeTag, ReferenceComment, ResolutionAction, Stance};
use curalens_core::rubric::{default_rubric, RubricSpec};
use curalens_core::scale::Scale;
use curalens_core::{Campaign, EvaluationInput, Rating, RoundStatus, Standard};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rating(rng: &mut ChaCha8Rng, standard: Standard) -> Rating {
    let levels = match standard.scale() {
        Scale::PassFail => &[Rating::Fail, Rating::Pass][..],
        Scale::NonePartialFull => &[Rating::None, Rating::Partial, Rating::Full][..],
    };
    levels[rng.gen_range(0..levels.len())]
}

/// A campaign on the default rubric with 2 to 5 raters and up to three
/// rounds, driven to a random point of the lifecycle. All events stay
/// pending.
pub fn random_campaign(seed: u64) -> (Campaign, RubricSpec) {
    let rubric = default_rubric();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut clock = 0i64;
    let mut tick = || {
        clock += 1;
        base + Duration::seconds(clock)
    };

    let rater_ids: Vec<String> = (1..=rng.gen_range(2..=5)).map(|i| format!("r{i}")).collect();
    let mut campaign = Campaign::create_at(
        &format!("gen-{seed}"),
        &rubric,
        rater_ids.iter().map(Rater::new).collect(),
        CampaignOptions {
            blind: rng.gen_bool(0.7),
        },
        tick(),
    )
    .expect("generated campaign");
    let subjects: Vec<(String, Standard)> = rubric.subjects().map(|(e, s)| (e.to_owned(), s)).collect();

    let rounds = rng.gen_range(0..=3);
    for round in 0..rounds {
        let datasets: Vec<DatasetEntry> = (0..rng.gen_range(1..=3))
            .map(|d| {
                let mut entry = DatasetEntry::new(format!("s{seed}-r{round}-d{d}"));
                entry
                    .source_links
                    .push(format!("https://example.org/{seed}/{round}/{d}"));
                entry
            })
            .collect();
        let ids: Vec<String> = datasets.iter().map(|d| d.id.clone()).collect();
        let index = campaign
            .add_round(&format!("round{round}"), datasets)
            .expect("add round");
        if rng.gen_bool(0.15) {
            break;
        }
        campaign
            .transition_round(index, RoundStatus::Collecting)
            .expect("collect");
        let complete = rng.gen_bool(0.75);
        for id in &ids {
            for (element, standard) in &subjects {
                for rater in &rater_ids {
                    if !complete && rng.gen_bool(0.3) {
                        continue;
                    }
                    let rating = if rng.gen_bool(0.85) {
                        match standard {
                            Standard::Minimum => Rating::Pass,
                            Standard::Excellence => Rating::Partial,
                        }
                    } else {
                        random_rating(&mut rng, *standard)
                    };
                    campaign
                        .record_evaluation(
                            &rubric,
                            EvaluationInput::new(id.clone(), element.clone(), *standard, rater.clone(), rating)
                                .with_comment(if rng.gen_bool(0.2) {
                                    "see appendix, \"table 2\""
                                } else {
                                    ""
                                })
                                .at(tick()),
                        )
                        .expect("record");
                }
            }
        }
        if !complete {
            break;
        }
        campaign
            .transition_round(index, RoundStatus::Resolving)
            .expect("resolving");
        let open = campaign.detect_disagreements(&rubric, index).expect("detect");
        for record in open {
            let key = record.key.clone();
            let rater = rater_ids[rng.gen_range(0..rater_ids.len())].clone();
            match rng.gen_range(0..5) {
                0 => {
                    campaign
                        .close_standing(&key, &rater, "no consensus", tick())
                        .expect("close");
                }
                1 => {
                    campaign
                        .tag_challenge(&key, ChallengeTag::new(ChallengeKind::ALL[rng.gen_range(0..4)], "note"))
                        .expect("tag");
                }
                2 => {
                    let proposed = random_rating(&mut rng, key.standard);
                    campaign
                        .set_reference_comment(ReferenceComment {
                            key: key.clone(),
                            author: rater,
                            text: "reference".into(),
                            proposed_rating: proposed,
                        })
                        .expect("reference");
                }
                _ => {
                    let new_rating = rng.gen_bool(0.6).then(|| random_rating(&mut rng, key.standard));
                    campaign
                        .submit_resolution(
                            &key,
                            ResolutionAction {
                                rater,
                                stance: if rng.gen_bool(0.5) {
                                    Stance::Agree
                                } else {
                                    Stance::Disagree
                                },
                                comment: "response".into(),
                                new_rating,
                                timestamp: tick(),
                            },
                        )
                        .expect("act");
                }
            }
        }
        if rng.gen_bool(0.5) {
            campaign.freeze_round(index).expect("freeze");
        }
    }
    if rng.gen_bool(0.1) {
        campaign.archive().expect("archive");
    }
    (campaign, rubric)
}
