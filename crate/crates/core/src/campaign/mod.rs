//! Evaluation campaigns: raters, rounds of datasets, and the fully crossed
//! collection of ratings.

mod event;
pub mod exchange;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Coded, ErrorClass, ParseLiteralError};
use crate::resolution::DisagreementRecord;
use crate::rubric::{is_valid_identifier, RubricRef, RubricSpec};
use crate::scale::{Rating, Standard};

pub use event::{EventKind, EventRecord};

/// Actor recorded on events when no rater is acting.
pub const OPERATOR: &str = "operator";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CampaignStatus {
    Open,
    Archived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundStatus {
    Draft,
    Collecting,
    Resolving,
    Frozen,
}

impl RoundStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundStatus::Draft => "draft",
            RoundStatus::Collecting => "collecting",
            RoundStatus::Resolving => "resolving",
            RoundStatus::Frozen => "frozen",
        }
    }

    /// The only status this one may move to.
    pub fn successor(self) -> Option<RoundStatus> {
        match self {
            RoundStatus::Draft => Some(RoundStatus::Collecting),
            RoundStatus::Collecting => Some(RoundStatus::Resolving),
            RoundStatus::Resolving => Some(RoundStatus::Frozen),
            RoundStatus::Frozen => None,
        }
    }

    /// Collection is over: the round's ratings are final apart from
    /// resolution updates.
    pub fn is_closed(self) -> bool {
        matches!(self, RoundStatus::Resolving | RoundStatus::Frozen)
    }
}

impl fmt::Display for RoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoundStatus {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "draft" => Ok(RoundStatus::Draft),
            "collecting" => Ok(RoundStatus::Collecting),
            "resolving" => Ok(RoundStatus::Resolving),
            "frozen" => Ok(RoundStatus::Frozen),
            other => Err(ParseLiteralError::new("round status", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rater {
    pub id: String,
    pub display_name: String,
}

impl Rater {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            display_name: id.clone(),
            id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    #[serde(default)]
    pub title: String,
    /// Publication, appendix, website, repository...
    #[serde(default)]
    pub source_links: Vec<String>,
    #[serde(default)]
    pub notes: String,
}

impl DatasetEntry {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            title: id.clone(),
            id,
            source_links: Vec::new(),
            notes: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub index: u32,
    pub label: String,
    pub datasets: Vec<DatasetEntry>,
    pub status: RoundStatus,
}

impl Round {
    pub fn has_dataset(&self, id: &str) -> bool {
        self.datasets.iter().any(|d| d.id == id)
    }
}

/// One gradable cell of one dataset: `(dataset, element, standard)`.
///
/// Renders as `dataset:element:standard`. Element ids never contain `:`, so
/// parsing splits from the right and dataset ids stay opaque.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub element: String,
    pub standard: Standard,
}

impl CellKey {
    pub fn new(dataset: impl Into<String>, element: impl Into<String>, standard: Standard) -> Self {
        Self {
            dataset: dataset.into(),
            element: element.into(),
            standard,
        }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.dataset, self.element, self.standard)
    }
}

impl FromStr for CellKey {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.rsplitn(3, ':');
        let (Some(standard), Some(element), Some(dataset)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ParseLiteralError::new("cell key", s));
        };
        if dataset.is_empty() || element.is_empty() {
            return Err(ParseLiteralError::new("cell key", s));
        }
        Ok(CellKey::new(dataset, element, standard.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationCell {
    pub dataset: String,
    pub element: String,
    pub standard: Standard,
    pub rater: String,
    pub rating: Rating,
    #[serde(default)]
    pub comment: String,
    pub recorded_at: DateTime<Utc>,
    /// 1 on first write, incremented on every overwrite.
    pub revision: u32,
}

impl EvaluationCell {
    pub fn key(&self) -> CellKey {
        CellKey::new(self.dataset.clone(), self.element.clone(), self.standard)
    }
}

/// A rating submission; the campaign assigns the revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationInput {
    pub dataset: String,
    pub element: String,
    pub standard: Standard,
    pub rater: String,
    pub rating: Rating,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub recorded_at: Option<DateTime<Utc>>,
    /// Optimistic concurrency: when present, the write succeeds only if the
    /// stored revision equals this value (0 for a cell never written).
    #[serde(default)]
    pub expected_revision: Option<u32>,
}

impl EvaluationInput {
    pub fn new(
        dataset: impl Into<String>,
        element: impl Into<String>,
        standard: Standard,
        rater: impl Into<String>,
        rating: Rating,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            element: element.into(),
            standard,
            rater: rater.into(),
            rating,
            comment: String::new(),
            recorded_at: None,
            expected_revision: None,
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = comment.into();
        self
    }

    pub fn at(mut self, at: DateTime<Utc>) -> Self {
        self.recorded_at = Some(at);
        self
    }

    pub fn expecting(mut self, revision: u32) -> Self {
        self.expected_revision = Some(revision);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignOptions {
    /// Hide other raters' ratings until a round is resolving.
    pub blind: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self { blind: true }
    }
}

type CellMap = BTreeMap<CellKey, BTreeMap<String, EvaluationCell>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    pub rubric: RubricRef,
    pub raters: Vec<Rater>,
    pub blind: bool,
    pub status: CampaignStatus,
    pub rounds: Vec<Round>,
    #[serde(with = "cells_as_list")]
    evaluations: CellMap,
    #[serde(with = "records_as_list")]
    pub(crate) disagreements: BTreeMap<CellKey, DisagreementRecord>,
    /// Sequence number of the last event folded into this state.
    pub last_sequence: u64,
    #[serde(skip)]
    pending: Vec<EventRecord>,
    #[serde(skip)]
    actor: Option<String>,
}

impl PartialEq for Campaign {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.rubric == other.rubric
            && self.raters == other.raters
            && self.blind == other.blind
            && self.status == other.status
            && self.rounds == other.rounds
            && self.evaluations == other.evaluations
            && self.disagreements == other.disagreements
            && self.last_sequence == other.last_sequence
    }
}

impl Campaign {
    /// Creates a campaign with zero rounds. The returned campaign holds the
    /// `campaign-created` event as its first uncommitted event.
    pub fn create(
        id: &str,
        rubric: &RubricSpec,
        raters: Vec<Rater>,
        options: CampaignOptions,
    ) -> Result<Campaign, CampaignError> {
        Self::create_at(id, rubric, raters, options, Utc::now())
    }

    pub fn create_at(
        id: &str,
        rubric: &RubricSpec,
        raters: Vec<Rater>,
        options: CampaignOptions,
        at: DateTime<Utc>,
    ) -> Result<Campaign, CampaignError> {
        if !is_valid_identifier(id) {
            return Err(CampaignError::InvalidIdentifier {
                what: "campaign",
                id: id.to_owned(),
            });
        }
        if raters.len() < 2 {
            return Err(CampaignError::InsufficientRaters { found: raters.len() });
        }
        let mut seen = BTreeSet::new();
        for rater in &raters {
            if !is_valid_identifier(&rater.id) || rater.id == OPERATOR {
                return Err(CampaignError::InvalidIdentifier {
                    what: "rater",
                    id: rater.id.clone(),
                });
            }
            if !seen.insert(rater.id.as_str()) {
                return Err(CampaignError::DuplicateRater(rater.id.clone()));
            }
        }
        let genesis = event::genesis(id, rubric.reference(), raters, options.blind, OPERATOR, at);
        let mut campaign = Campaign::replay([&genesis])?;
        campaign.pending.push(genesis);
        Ok(campaign)
    }

    /// Sets the actor stamped on subsequently emitted events.
    pub fn set_actor(&mut self, actor: impl Into<String>) {
        self.actor = Some(actor.into());
    }

    pub(crate) fn swap_actor(&mut self, actor: Option<String>) -> Option<String> {
        std::mem::replace(&mut self.actor, actor)
    }

    pub(crate) fn current_actor(&self) -> &str {
        self.actor.as_deref().unwrap_or(OPERATOR)
    }

    /// Events emitted since the campaign was loaded or last committed.
    pub fn pending_events(&self) -> &[EventRecord] {
        &self.pending
    }

    pub fn take_pending_events(&mut self) -> Vec<EventRecord> {
        std::mem::take(&mut self.pending)
    }

    pub fn rater(&self, id: &str) -> Option<&Rater> {
        self.raters.iter().find(|r| r.id == id)
    }

    pub fn round(&self, index: u32) -> Result<&Round, CampaignError> {
        self.rounds
            .get(index as usize)
            .ok_or(CampaignError::UnknownRound(index))
    }

    pub fn round_by_label(&self, label: &str) -> Option<&Round> {
        self.rounds.iter().find(|r| r.label == label)
    }

    pub fn round_of_dataset(&self, dataset: &str) -> Option<&Round> {
        self.rounds.iter().find(|r| r.has_dataset(dataset))
    }

    pub fn collecting_round(&self) -> Option<&Round> {
        self.rounds.iter().find(|r| r.status == RoundStatus::Collecting)
    }

    /// All stored cells, ordered by cell key then rater.
    pub fn evaluations(&self) -> impl Iterator<Item = &EvaluationCell> {
        self.evaluations.values().flat_map(|by_rater| by_rater.values())
    }

    pub fn cell(&self, key: &CellKey, rater: &str) -> Option<&EvaluationCell> {
        self.evaluations.get(key).and_then(|by_rater| by_rater.get(rater))
    }

    /// Latest ratings for one cell keyed by rater.
    pub fn ratings_for(&self, key: &CellKey) -> BTreeMap<String, Rating> {
        self.evaluations
            .get(key)
            .map(|by_rater| by_rater.iter().map(|(r, c)| (r.clone(), c.rating)).collect())
            .unwrap_or_default()
    }

    /// True when every campaign rater has rated the cell and all gave the
    /// same literal.
    pub fn is_unanimous(&self, key: &CellKey) -> bool {
        let ratings = self.ratings_for(key);
        ratings.len() == self.raters.len() && ratings.values().collect::<BTreeSet<_>>().len() <= 1
    }

    pub(crate) fn replace_cells_of_datasets(&mut self, datasets: &BTreeSet<&str>, from: &Campaign) {
        self.evaluations.retain(|k, _| !datasets.contains(k.dataset.as_str()));
        for (k, v) in &from.evaluations {
            if datasets.contains(k.dataset.as_str()) {
                self.evaluations.insert(k.clone(), v.clone());
            }
        }
    }

    fn ensure_open(&self) -> Result<(), CampaignError> {
        match self.status {
            CampaignStatus::Open => Ok(()),
            CampaignStatus::Archived => Err(CampaignError::Archived(self.id.clone())),
        }
    }

    pub(crate) fn check_rubric(&self, rubric: &RubricSpec) -> Result<(), CampaignError> {
        if rubric.id == self.rubric.id && rubric.version == self.rubric.version {
            Ok(())
        } else {
            Err(CampaignError::RubricMismatch {
                expected: self.rubric.to_string(),
                found: rubric.reference().to_string(),
            })
        }
    }

    /// Appends a round in draft and returns its index.
    pub fn add_round(&mut self, label: &str, datasets: Vec<DatasetEntry>) -> Result<u32, CampaignError> {
        self.ensure_open()?;
        if let Some(r) = self.collecting_round() {
            return Err(CampaignError::RoundCollecting(r.index));
        }
        let mut fresh = BTreeSet::new();
        for d in &datasets {
            if d.id.is_empty() || d.id.chars().any(char::is_control) {
                return Err(CampaignError::InvalidIdentifier {
                    what: "dataset",
                    id: d.id.clone(),
                });
            }
            if !fresh.insert(d.id.as_str()) || self.round_of_dataset(&d.id).is_some() {
                return Err(CampaignError::DuplicateDataset(d.id.clone()));
            }
        }
        let index = self.rounds.len() as u32;
        self.emit(
            EventKind::RoundAdded {
                index,
                label: label.to_owned(),
                datasets,
            },
            Utc::now(),
        )?;
        Ok(index)
    }

    /// Moves a round one step along draft → collecting → resolving → frozen.
    pub fn transition_round(&mut self, index: u32, to: RoundStatus) -> Result<&Round, CampaignError> {
        self.ensure_open()?;
        let from = self.round(index)?.status;
        if to == RoundStatus::Frozen {
            return self.freeze_round(index);
        }
        if from.successor() != Some(to) {
            return Err(CampaignError::InvalidTransition { index, from, to });
        }
        if to == RoundStatus::Collecting {
            if let Some(r) = self.collecting_round() {
                return Err(CampaignError::RoundCollecting(r.index));
            }
        }
        self.emit(EventKind::RoundTransition { index, from, to }, Utc::now())?;
        self.round(index)
    }

    pub fn freeze_round(&mut self, index: u32) -> Result<&Round, CampaignError> {
        self.ensure_open()?;
        let from = self.round(index)?.status;
        match from {
            RoundStatus::Resolving => {}
            RoundStatus::Frozen => return Err(CampaignError::AlreadyFrozen(index)),
            RoundStatus::Draft | RoundStatus::Collecting => return Err(CampaignError::MustResolveFirst(index)),
        }
        self.emit(
            EventKind::RoundTransition {
                index,
                from,
                to: RoundStatus::Frozen,
            },
            Utc::now(),
        )?;
        self.round(index)
    }

    pub fn archive(&mut self) -> Result<(), CampaignError> {
        self.ensure_open()?;
        self.emit(EventKind::CampaignArchived, Utc::now())?;
        Ok(())
    }

    /// Upserts one rater's rating for one cell and returns the stored revision.
    pub fn record_evaluation(&mut self, rubric: &RubricSpec, input: EvaluationInput) -> Result<u32, CampaignError> {
        self.ensure_open()?;
        self.check_rubric(rubric)?;
        if self.rater(&input.rater).is_none() {
            return Err(CampaignError::UnknownRater(input.rater));
        }
        let round = self
            .round_of_dataset(&input.dataset)
            .ok_or_else(|| CampaignError::UnknownDataset(input.dataset.clone()))?;
        match round.status {
            RoundStatus::Collecting | RoundStatus::Resolving => {}
            RoundStatus::Frozen => return Err(CampaignError::RoundFrozen(round.index)),
            RoundStatus::Draft => return Err(CampaignError::RoundNotOpen(round.index)),
        }
        if rubric.element(&input.element).is_none() {
            return Err(CampaignError::UnknownElement(input.element));
        }
        if !input.rating.is_on_scale_for(input.standard) {
            return Err(CampaignError::OffScale {
                rating: input.rating,
                standard: input.standard,
            });
        }
        let key = CellKey::new(input.dataset.clone(), input.element.clone(), input.standard);
        let current = self.cell(&key, &input.rater).map_or(0, |c| c.revision);
        if let Some(expected) = input.expected_revision {
            if expected != current {
                return Err(CampaignError::StaleRevision { expected, current });
            }
        }
        let at = input.recorded_at.unwrap_or_else(Utc::now);
        let cell = EvaluationCell {
            dataset: input.dataset,
            element: input.element,
            standard: input.standard,
            rater: input.rater,
            rating: input.rating,
            comment: input.comment,
            recorded_at: at,
            revision: current + 1,
        };
        let previous_actor = self.actor.replace(cell.rater.clone());
        let emitted = self.emit(EventKind::CellUpsert { cell }, at);
        self.actor = previous_actor;
        emitted?;
        Ok(current + 1)
    }

    /// Lists, per rater, every cell of the round that has not been rated.
    pub fn completeness_check(&self, rubric: &RubricSpec, index: u32) -> Result<CompletenessReport, CampaignError> {
        self.check_rubric(rubric)?;
        let round = self.round(index)?;
        let subjects: Vec<_> = rubric.subjects().collect();
        let expected_per_rater = round.datasets.len() * subjects.len();
        let mut missing = BTreeMap::new();
        let mut recorded = 0;
        for rater in &self.raters {
            let mut gaps = Vec::new();
            for dataset in &round.datasets {
                for &(element, standard) in &subjects {
                    let key = CellKey::new(dataset.id.clone(), element, standard);
                    if self.cell(&key, &rater.id).is_some() {
                        recorded += 1;
                    } else {
                        gaps.push(key);
                    }
                }
            }
            missing.insert(rater.id.clone(), gaps);
        }
        Ok(CompletenessReport {
            round: index,
            expected_cells: expected_per_rater * self.raters.len(),
            recorded_cells: recorded,
            missing,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub round: u32,
    /// raters × datasets × elements × 2
    pub expected_cells: usize,
    pub recorded_cells: usize,
    pub missing: BTreeMap<String, Vec<CellKey>>,
}

impl CompletenessReport {
    pub fn missing_count(&self) -> usize {
        self.missing.values().map(Vec::len).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CampaignError {
    #[error("insufficient raters: a campaign needs at least 2, got {found}")]
    InsufficientRaters { found: usize },
    #[error("rater {0:?} listed twice")]
    DuplicateRater(String),
    #[error("invalid {what} identifier {id:?}")]
    InvalidIdentifier { what: &'static str, id: String },
    #[error("unknown rubric {0}")]
    UnknownRubric(String),
    #[error("campaign uses rubric {expected}, got {found}")]
    RubricMismatch { expected: String, found: String },
    #[error("dataset {0:?} already exists in this campaign")]
    DuplicateDataset(String),
    #[error("round {0} is still collecting")]
    RoundCollecting(u32),
    #[error("unknown round {0}")]
    UnknownRound(u32),
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unknown rater {0:?}")]
    UnknownRater(String),
    #[error("off-scale: {rating} is not a valid {standard} rating")]
    OffScale { rating: Rating, standard: Standard },
    #[error("round {0} frozen")]
    RoundFrozen(u32),
    #[error("round {0} is in draft and not accepting ratings")]
    RoundNotOpen(u32),
    #[error("round {index} cannot move from {from} to {to}")]
    InvalidTransition {
        index: u32,
        from: RoundStatus,
        to: RoundStatus,
    },
    #[error("round {0} must resolve first")]
    MustResolveFirst(u32),
    #[error("round {0} already frozen")]
    AlreadyFrozen(u32),
    #[error("stale revision: expected {expected}, stored revision is {current}")]
    StaleRevision { expected: u32, current: u32 },
    #[error("campaign {0:?} is archived")]
    Archived(String),
    #[error("event log replay failed: {0}")]
    Replay(String),
    #[error("import line {line}: {message}")]
    Import { line: u64, message: String },
}

impl Coded for CampaignError {
    fn code(&self) -> &'static str {
        match self {
            CampaignError::InsufficientRaters { .. } => "insufficient_raters",
            CampaignError::DuplicateRater(_) => "duplicate_rater",
            CampaignError::InvalidIdentifier { .. } => "invalid_identifier",
            CampaignError::UnknownRubric(_) => "unknown_rubric",
            CampaignError::RubricMismatch { .. } => "rubric_mismatch",
            CampaignError::DuplicateDataset(_) => "duplicate_dataset",
            CampaignError::RoundCollecting(_) => "round_collecting",
            CampaignError::UnknownRound(_) => "unknown_round",
            CampaignError::UnknownDataset(_) => "unknown_dataset",
            CampaignError::UnknownElement(_) => "unknown_element",
            CampaignError::UnknownRater(_) => "unknown_rater",
            CampaignError::OffScale { .. } => "off_scale",
            CampaignError::RoundFrozen(_) => "round_frozen",
            CampaignError::RoundNotOpen(_) => "round_not_open",
            CampaignError::InvalidTransition { .. } => "invalid_transition",
            CampaignError::MustResolveFirst(_) => "must_resolve_first",
            CampaignError::AlreadyFrozen(_) => "already_frozen",
            CampaignError::StaleRevision { .. } => "stale_revision",
            CampaignError::Archived(_) => "campaign_archived",
            CampaignError::Replay(_) => "replay_failed",
            CampaignError::Import { .. } => "import_failed",
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            CampaignError::UnknownRubric(_)
            | CampaignError::UnknownRound(_)
            | CampaignError::UnknownDataset(_)
            | CampaignError::UnknownElement(_)
            | CampaignError::UnknownRater(_) => ErrorClass::NotFound,
            CampaignError::RoundCollecting(_)
            | CampaignError::RoundFrozen(_)
            | CampaignError::RoundNotOpen(_)
            | CampaignError::InvalidTransition { .. }
            | CampaignError::MustResolveFirst(_)
            | CampaignError::AlreadyFrozen(_)
            | CampaignError::StaleRevision { .. }
            | CampaignError::Archived(_) => ErrorClass::Conflict,
            CampaignError::Replay(_) => ErrorClass::Internal,
            CampaignError::Import { .. } => ErrorClass::Malformed,
            _ => ErrorClass::Domain,
        }
    }
}

mod cells_as_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &CellMap, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.values().flat_map(|by_rater| by_rater.values()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CellMap, D::Error> {
        let cells = Vec::<EvaluationCell>::deserialize(d)?;
        let mut map = CellMap::new();
        for cell in cells {
            map.entry(cell.key()).or_default().insert(cell.rater.clone(), cell);
        }
        Ok(map)
    }
}

mod records_as_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<CellKey, DisagreementRecord>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<CellKey, DisagreementRecord>, D::Error> {
        let records = Vec::<DisagreementRecord>::deserialize(d)?;
        Ok(records.into_iter().map(|r| (r.key.clone(), r)).collect())
    }
}
