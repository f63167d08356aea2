//! Campaign events. Every state change is an event; a campaign is the left
//! fold of its event log.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    Campaign, CampaignError, CampaignStatus, CellKey, DatasetEntry, EvaluationCell, Rater, Round, RoundStatus,
};
use crate::resolution::{ChallengeTag, DisagreementRecord, ReferenceComment, ResolutionAction, StandingClosure};
use crate::rubric::RubricRef;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum EventKind {
    CampaignCreated {
        id: String,
        rubric: RubricRef,
        raters: Vec<Rater>,
        blind: bool,
    },
    RoundAdded {
        index: u32,
        label: String,
        datasets: Vec<DatasetEntry>,
    },
    RoundTransition {
        index: u32,
        from: RoundStatus,
        to: RoundStatus,
    },
    CellUpsert {
        cell: EvaluationCell,
    },
    DisagreementsOpened {
        records: Vec<DisagreementRecord>,
    },
    ReferenceComment {
        comment: ReferenceComment,
    },
    ResolutionAction {
        key: CellKey,
        action: ResolutionAction,
    },
    ClosedStanding {
        key: CellKey,
        closure: StandingClosure,
    },
    Tag {
        key: CellKey,
        tag: ChallengeTag,
    },
    CampaignArchived,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::CampaignCreated { .. } => "campaign-created",
            EventKind::RoundAdded { .. } => "round-added",
            EventKind::RoundTransition { .. } => "round-transition",
            EventKind::CellUpsert { .. } => "cell-upsert",
            EventKind::DisagreementsOpened { .. } => "disagreements-opened",
            EventKind::ReferenceComment { .. } => "reference-comment",
            EventKind::ResolutionAction { .. } => "resolution-action",
            EventKind::ClosedStanding { .. } => "closed-standing",
            EventKind::Tag { .. } => "tag",
            EventKind::CampaignArchived => "campaign-archived",
        }
    }
}

impl Campaign {
    /// Rebuilds a campaign from its log. The first record must be the
    /// `campaign-created` event with sequence 0 and sequences must be
    /// contiguous.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a EventRecord>) -> Result<Campaign, CampaignError> {
        let mut events = events.into_iter();
        let genesis = events
            .next()
            .ok_or_else(|| CampaignError::Replay("event log is empty".into()))?;
        let mut campaign = Campaign::from_genesis(genesis)?;
        for event in events {
            campaign.apply(event)?;
        }
        Ok(campaign)
    }

    fn from_genesis(event: &EventRecord) -> Result<Campaign, CampaignError> {
        match &event.kind {
            EventKind::CampaignCreated {
                id,
                rubric,
                raters,
                blind,
            } if event.sequence == 0 => Ok(Campaign {
                id: id.clone(),
                rubric: rubric.clone(),
                raters: raters.clone(),
                blind: *blind,
                status: CampaignStatus::Open,
                rounds: Vec::new(),
                evaluations: Default::default(),
                disagreements: Default::default(),
                last_sequence: 0,
                pending: Vec::new(),
                actor: None,
            }),
            _ => Err(CampaignError::Replay(format!(
                "log must start with campaign-created at sequence 0, found {} at {}",
                event.kind.name(),
                event.sequence
            ))),
        }
    }

    /// Applies one already-validated event.
    pub fn apply(&mut self, event: &EventRecord) -> Result<(), CampaignError> {
        if event.sequence != self.last_sequence + 1 {
            return Err(CampaignError::Replay(format!(
                "expected sequence {}, found {}",
                self.last_sequence + 1,
                event.sequence
            )));
        }
        let broken = |what: String| CampaignError::Replay(format!("event {}: {what}", event.sequence));
        match &event.kind {
            EventKind::CampaignCreated { .. } => return Err(broken("duplicate campaign-created".into())),
            EventKind::RoundAdded { index, label, datasets } => {
                if *index as usize != self.rounds.len() {
                    return Err(broken(format!("round index {index} out of order")));
                }
                self.rounds.push(Round {
                    index: *index,
                    label: label.clone(),
                    datasets: datasets.clone(),
                    status: RoundStatus::Draft,
                });
            }
            EventKind::RoundTransition { index, to, .. } => {
                let round = self
                    .rounds
                    .get_mut(*index as usize)
                    .ok_or_else(|| broken(format!("unknown round {index}")))?;
                round.status = *to;
            }
            EventKind::CellUpsert { cell } => {
                let key = cell.key();
                self.evaluations
                    .entry(key.clone())
                    .or_default()
                    .insert(cell.rater.clone(), cell.clone());
                self.refresh_record_status(&key);
            }
            EventKind::DisagreementsOpened { records } => {
                for record in records {
                    self.disagreements.insert(record.key.clone(), record.clone());
                }
            }
            EventKind::ReferenceComment { comment } => {
                let record = self
                    .disagreements
                    .get_mut(&comment.key)
                    .ok_or_else(|| broken(format!("no record {}", comment.key)))?;
                record.reference_comment = Some(comment.clone());
            }
            EventKind::ResolutionAction { key, action } => {
                if !self.disagreements.contains_key(key) {
                    return Err(broken(format!("no record {key}")));
                }
                if let Some(rating) = action.new_rating {
                    let cell = self
                        .evaluations
                        .get_mut(key)
                        .and_then(|by_rater| by_rater.get_mut(&action.rater))
                        .ok_or_else(|| broken(format!("no cell {key} for {}", action.rater)))?;
                    cell.rating = rating;
                    cell.revision += 1;
                    cell.recorded_at = action.timestamp;
                }
                if let Some(record) = self.disagreements.get_mut(key) {
                    record.actions.push(action.clone());
                }
                self.refresh_record_status(key);
            }
            EventKind::ClosedStanding { key, closure } => {
                let record = self
                    .disagreements
                    .get_mut(key)
                    .ok_or_else(|| broken(format!("no record {key}")))?;
                record.close_standing(closure.clone());
            }
            EventKind::Tag { key, tag } => {
                let record = self
                    .disagreements
                    .get_mut(key)
                    .ok_or_else(|| broken(format!("no record {key}")))?;
                record.tags.insert(tag.clone());
            }
            EventKind::CampaignArchived => self.status = CampaignStatus::Archived,
        }
        self.last_sequence = event.sequence;
        Ok(())
    }

    /// Validated mutations funnel through here: the event is applied and
    /// queued for the store.
    pub(crate) fn emit(&mut self, kind: EventKind, timestamp: DateTime<Utc>) -> Result<u64, CampaignError> {
        let record = EventRecord {
            sequence: self.last_sequence + 1,
            timestamp,
            actor: self.current_actor().to_owned(),
            kind,
        };
        self.apply(&record)?;
        self.pending.push(record);
        Ok(self.last_sequence)
    }
}

pub(crate) fn genesis(
    id: &str,
    rubric: RubricRef,
    raters: Vec<Rater>,
    blind: bool,
    actor: &str,
    timestamp: DateTime<Utc>,
) -> EventRecord {
    EventRecord {
        sequence: 0,
        timestamp,
        actor: actor.to_owned(),
        kind: EventKind::CampaignCreated {
            id: id.to_owned(),
            rubric,
            raters,
            blind,
        },
    }
}
