//! Disagreement records and their asynchronous resolution.
//!
//! A record is opened for every cell whose raters did not all give the same
//! literal. Raters respond with agree/disagree actions, optionally changing
//! their rating. A record converges when the latest ratings become unanimous;
//! otherwise it can be closed as standing with a rationale.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{Campaign, CampaignError, CellKey, EventKind, RoundStatus};
use crate::error::{Coded, ErrorClass, ParseLiteralError};
use crate::rubric::RubricSpec;
use crate::scale::Rating;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisagreementStatus {
    Open,
    ResolvedConverged,
    ResolvedStanding,
}

impl DisagreementStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DisagreementStatus::Open => "open",
            DisagreementStatus::ResolvedConverged => "resolved-converged",
            DisagreementStatus::ResolvedStanding => "resolved-standing",
        }
    }
}

impl fmt::Display for DisagreementStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Agree,
    Disagree,
}

impl FromStr for Stance {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "agree" => Ok(Stance::Agree),
            "disagree" => Ok(Stance::Disagree),
            other => Err(ParseLiteralError::new("stance", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionAction {
    pub rater: String,
    pub stance: Stance,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub new_rating: Option<Rating>,
    pub timestamp: DateTime<Utc>,
}

/// The four challenge kinds observed when data curation criteria are
/// applied to ML dataset documentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeKind {
    /// Shared term, different meaning across fields (e.g. reliability).
    FalseFriends,
    /// Open-ended criteria read differently by different raters.
    InterpretativeFlexibility,
    /// Raters' expertise sets how deep they look past surface documentation.
    DepthOfAnalysis,
    /// Unclear which pipeline stages the creators must document.
    Scoping,
}

impl ChallengeKind {
    pub const ALL: [ChallengeKind; 4] = [
        ChallengeKind::FalseFriends,
        ChallengeKind::InterpretativeFlexibility,
        ChallengeKind::DepthOfAnalysis,
        ChallengeKind::Scoping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChallengeKind::FalseFriends => "false-friends",
            ChallengeKind::InterpretativeFlexibility => "interpretative-flexibility",
            ChallengeKind::DepthOfAnalysis => "depth-of-analysis",
            ChallengeKind::Scoping => "scoping",
        }
    }
}

impl fmt::Display for ChallengeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChallengeKind {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChallengeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseLiteralError::new("challenge kind", s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChallengeTag {
    pub kind: ChallengeKind,
    #[serde(default)]
    pub note: String,
}

impl ChallengeTag {
    pub fn new(kind: ChallengeKind, note: impl Into<String>) -> Self {
        Self {
            kind,
            note: note.into(),
        }
    }
}

/// Canonical comment a rater's evaluation is compared against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceComment {
    pub key: CellKey,
    pub author: String,
    pub text: String,
    pub proposed_rating: Rating,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandingClosure {
    pub closer: String,
    pub rationale: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementRecord {
    pub key: CellKey,
    pub round: u32,
    /// Ratings at the moment the disagreement was detected.
    pub ratings: BTreeMap<String, Rating>,
    #[serde(default)]
    pub reference_comment: Option<ReferenceComment>,
    pub status: DisagreementStatus,
    #[serde(default)]
    pub actions: Vec<ResolutionAction>,
    #[serde(default)]
    pub tags: BTreeSet<ChallengeTag>,
    #[serde(default)]
    pub closure: Option<StandingClosure>,
}

impl DisagreementRecord {
    pub fn is_resolved(&self) -> bool {
        self.status != DisagreementStatus::Open
    }

    pub(crate) fn close_standing(&mut self, closure: StandingClosure) {
        self.status = DisagreementStatus::ResolvedStanding;
        self.closure = Some(closure);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionSummary {
    pub round: u32,
    pub total: usize,
    pub open: usize,
    pub converged: usize,
    pub standing: usize,
    /// Number of tags of each kind across the round's records.
    pub tags: BTreeMap<ChallengeKind, usize>,
}

impl Campaign {
    pub fn disagreement(&self, key: &CellKey) -> Option<&DisagreementRecord> {
        self.disagreements.get(key)
    }

    /// Records of one round in cell-key order.
    pub fn disagreements_in_round(&self, round: u32) -> impl Iterator<Item = &DisagreementRecord> {
        self.disagreements.values().filter(move |r| r.round == round)
    }

    pub fn all_disagreements(&self) -> impl Iterator<Item = &DisagreementRecord> {
        self.disagreements.values()
    }

    /// Keeps a record's status in line with the latest ratings: open records
    /// whose cell became unanimous converge, and converged records whose
    /// cell split again reopen. Standing records are terminal.
    pub(crate) fn refresh_record_status(&mut self, key: &CellKey) {
        let unanimous = self.is_unanimous(key);
        if let Some(record) = self.disagreements.get_mut(key) {
            record.status = match (record.status, unanimous) {
                (DisagreementStatus::Open, true) => DisagreementStatus::ResolvedConverged,
                (DisagreementStatus::ResolvedConverged, false) => DisagreementStatus::Open,
                (status, _) => status,
            };
        }
    }

    /// Opens a record for every non-unanimous cell of a resolving round and
    /// returns the round's open records.
    pub fn detect_disagreements(
        &mut self,
        rubric: &RubricSpec,
        round: u32,
    ) -> Result<Vec<DisagreementRecord>, ResolutionError> {
        let status = self.round(round)?.status;
        if status != RoundStatus::Resolving {
            return Err(ResolutionError::WrongPhase { round, status });
        }
        let report = self.completeness_check(rubric, round)?;
        if !report.is_complete() {
            return Err(ResolutionError::Incomplete {
                round,
                missing: report.missing_count(),
            });
        }
        let mut fresh = Vec::new();
        for dataset in &self.round(round)?.datasets {
            for (element, standard) in rubric.subjects() {
                let key = CellKey::new(dataset.id.clone(), element, standard);
                if self.disagreements.contains_key(&key) || self.is_unanimous(&key) {
                    continue;
                }
                fresh.push(DisagreementRecord {
                    ratings: self.ratings_for(&key),
                    key,
                    round,
                    reference_comment: None,
                    status: DisagreementStatus::Open,
                    actions: Vec::new(),
                    tags: BTreeSet::new(),
                    closure: None,
                });
            }
        }
        if !fresh.is_empty() {
            self.emit(EventKind::DisagreementsOpened { records: fresh }, Utc::now())?;
        }
        Ok(self
            .disagreements_in_round(round)
            .filter(|r| r.status == DisagreementStatus::Open)
            .cloned()
            .collect())
    }

    fn open_record(&self, key: &CellKey) -> Result<&DisagreementRecord, ResolutionError> {
        let record = self
            .disagreements
            .get(key)
            .ok_or_else(|| ResolutionError::NoSuchRecord(key.to_string()))?;
        if record.is_resolved() {
            return Err(ResolutionError::AlreadyResolved {
                key: key.to_string(),
                status: record.status,
            });
        }
        let status = self.round(record.round)?.status;
        if status != RoundStatus::Resolving {
            return Err(ResolutionError::WrongPhase {
                round: record.round,
                status,
            });
        }
        Ok(record)
    }

    /// Appends a rater's response; a rating change updates that rater's
    /// evaluation cell (bumping its revision) in the same event.
    pub fn submit_resolution(
        &mut self,
        key: &CellKey,
        action: ResolutionAction,
    ) -> Result<&DisagreementRecord, ResolutionError> {
        self.open_record(key)?;
        if self.rater(&action.rater).is_none() {
            return Err(ResolutionError::UnknownRater(action.rater));
        }
        if let Some(rating) = action.new_rating {
            if !rating.is_on_scale_for(key.standard) {
                return Err(CampaignError::OffScale {
                    rating,
                    standard: key.standard,
                }
                .into());
            }
        }
        let at = action.timestamp;
        self.with_actor(action.rater.clone(), |c| {
            c.emit(
                EventKind::ResolutionAction {
                    key: key.clone(),
                    action,
                },
                at,
            )
        })?;
        Ok(&self.disagreements[key])
    }

    /// Closes an open record whose ratings remain split after discussion.
    pub fn close_standing(
        &mut self,
        key: &CellKey,
        closer: &str,
        rationale: &str,
        at: DateTime<Utc>,
    ) -> Result<&DisagreementRecord, ResolutionError> {
        self.open_record(key)?;
        if self.rater(closer).is_none() {
            return Err(ResolutionError::UnknownRater(closer.to_owned()));
        }
        if rationale.trim().is_empty() {
            return Err(ResolutionError::RationaleRequired);
        }
        let closure = StandingClosure {
            closer: closer.to_owned(),
            rationale: rationale.to_owned(),
            timestamp: at,
        };
        self.with_actor(closer.to_owned(), |c| {
            c.emit(
                EventKind::ClosedStanding {
                    key: key.clone(),
                    closure,
                },
                at,
            )
        })?;
        Ok(&self.disagreements[key])
    }

    /// Adds a challenge tag. Adding the same kind and note twice is a no-op.
    pub fn tag_challenge(&mut self, key: &CellKey, tag: ChallengeTag) -> Result<&DisagreementRecord, ResolutionError> {
        let record = self
            .disagreements
            .get(key)
            .ok_or_else(|| ResolutionError::NoSuchRecord(key.to_string()))?;
        if !record.tags.contains(&tag) {
            self.emit(EventKind::Tag { key: key.clone(), tag }, Utc::now())?;
        }
        Ok(&self.disagreements[key])
    }

    pub fn set_reference_comment(&mut self, comment: ReferenceComment) -> Result<&DisagreementRecord, ResolutionError> {
        let key = comment.key.clone();
        if !self.disagreements.contains_key(&key) {
            return Err(ResolutionError::NoSuchRecord(key.to_string()));
        }
        if self.rater(&comment.author).is_none() {
            return Err(ResolutionError::UnknownRater(comment.author));
        }
        if !comment.proposed_rating.is_on_scale_for(key.standard) {
            return Err(CampaignError::OffScale {
                rating: comment.proposed_rating,
                standard: key.standard,
            }
            .into());
        }
        let author = comment.author.clone();
        self.with_actor(author, |c| c.emit(EventKind::ReferenceComment { comment }, Utc::now()))?;
        Ok(&self.disagreements[&key])
    }

    pub fn resolution_summary(&self, round: u32) -> Result<ResolutionSummary, ResolutionError> {
        self.round(round)?;
        let mut summary = ResolutionSummary {
            round,
            ..Default::default()
        };
        for record in self.disagreements_in_round(round) {
            summary.total += 1;
            match record.status {
                DisagreementStatus::Open => summary.open += 1,
                DisagreementStatus::ResolvedConverged => summary.converged += 1,
                DisagreementStatus::ResolvedStanding => summary.standing += 1,
            }
            for tag in &record.tags {
                *summary.tags.entry(tag.kind).or_default() += 1;
            }
        }
        Ok(summary)
    }

    fn with_actor<T>(&mut self, actor: String, f: impl FnOnce(&mut Campaign) -> T) -> T {
        let previous = self.swap_actor(Some(actor));
        let out = f(self);
        self.swap_actor(previous);
        out
    }
}

/// Writes the resolution table: cell key, status, tags, action count and
/// final ratings.
pub fn export_resolution_table<W: std::io::Write>(
    campaign: &Campaign,
    round: Option<u32>,
    out: W,
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["cell_key", "status", "tags", "action_count", "final_ratings"])?;
    for record in campaign
        .all_disagreements()
        .filter(|r| round.is_none_or(|ix| r.round == ix))
    {
        let tags: Vec<_> = record
            .tags
            .iter()
            .map(|t| t.kind.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let finals: Vec<_> = campaign
            .ratings_for(&record.key)
            .iter()
            .map(|(rater, rating)| format!("{rater}={rating}"))
            .collect();
        writer.write_record([
            record.key.to_string(),
            record.status.to_string(),
            tags.join(";"),
            record.actions.len().to_string(),
            finals.join(";"),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolutionError {
    #[error("no disagreement record for {0}")]
    NoSuchRecord(String),
    #[error("record {key} is already {status}")]
    AlreadyResolved { key: String, status: DisagreementStatus },
    #[error("wrong phase: round {round} is {status}, expected resolving")]
    WrongPhase { round: u32, status: RoundStatus },
    #[error("round {round} is incomplete: {missing} cells missing")]
    Incomplete { round: u32, missing: usize },
    #[error("unknown rater {0:?}")]
    UnknownRater(String),
    #[error("rationale required to close a standing disagreement")]
    RationaleRequired,
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

impl Coded for ResolutionError {
    fn code(&self) -> &'static str {
        match self {
            ResolutionError::NoSuchRecord(_) => "no_such_record",
            ResolutionError::AlreadyResolved { .. } => "already_resolved",
            ResolutionError::WrongPhase { .. } => "wrong_phase",
            ResolutionError::Incomplete { .. } => "incomplete",
            ResolutionError::UnknownRater(_) => "unknown_rater",
            ResolutionError::RationaleRequired => "rationale_required",
            ResolutionError::Campaign(e) => e.code(),
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            ResolutionError::NoSuchRecord(_) | ResolutionError::UnknownRater(_) => ErrorClass::NotFound,
            ResolutionError::AlreadyResolved { .. } | ResolutionError::WrongPhase { .. } => ErrorClass::Conflict,
            ResolutionError::Incomplete { .. } | ResolutionError::RationaleRequired => ErrorClass::Domain,
            ResolutionError::Campaign(e) => e.class(),
        }
    }
}
