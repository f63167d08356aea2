//! File-system store.
//!
//! ```text
//! <root>/rubrics/<id>@<version>.json     rubric document
//! <root>/campaigns/<id>/campaign.json    campaign snapshot document
//! <root>/campaigns/<id>/events.jsonl     append-only event log, one document per line
//! <root>/campaigns/<id>/secret           token signing key (hex)
//! <root>/campaigns/<id>/lock             advisory lock file
//! ```
//!
//! Every document is a compact envelope
//! `{"schema_version":1,"kind":"...","sha256":"<hex>","body":<json>}` where
//! the checksum covers the exact body bytes. Loading re-renders the envelope
//! around the parsed body and requires it to match the file byte for byte,
//! so any altered byte is reported as corruption.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::campaign::{Campaign, CampaignError, EventRecord};
use crate::error::{Coded, ErrorClass};
use crate::rubric::{
    default_rubric, is_valid_identifier, validate_rubric, RubricError, RubricRef, RubricSpec, RubricVersion,
};

/// Newest document schema this build reads and the one it writes.
pub const SCHEMA_VERSION: u32 = 1;

const KIND_RUBRIC: &str = "rubric";
const KIND_CAMPAIGN: &str = "campaign";
const KIND_EVENT: &str = "event";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unknown campaign {0:?}")]
    UnknownCampaign(String),
    #[error("unknown rubric {0}")]
    UnknownRubric(String),
    #[error("campaign {0:?} already exists")]
    CampaignExists(String),
    #[error("rubric {0} already stored with different content; publish a new version")]
    RubricExists(String),
    #[error("corrupted document {path}: {detail}")]
    Corrupted { path: PathBuf, detail: String },
    #[error("{path} has schema version {found}, newer than supported version {supported}")]
    UnsupportedSchema { path: PathBuf, found: u32, supported: u32 },
    #[error("event sequence conflict: log is at {log}, write starts at {write}")]
    SequenceConflict { log: u64, write: u64 },
    #[error("sequence {requested} is beyond the latest event {latest}")]
    SequenceOutOfRange { requested: u64, latest: u64 },
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

impl Coded for StoreError {
    fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "io_error",
            StoreError::UnknownCampaign(_) => "unknown_campaign",
            StoreError::UnknownRubric(_) => "unknown_rubric",
            StoreError::CampaignExists(_) => "campaign_exists",
            StoreError::RubricExists(_) => "rubric_exists",
            StoreError::Corrupted { .. } => "corrupted_document",
            StoreError::UnsupportedSchema { .. } => "unsupported_schema",
            StoreError::SequenceConflict { .. } => "sequence_conflict",
            StoreError::SequenceOutOfRange { .. } => "sequence_out_of_range",
            StoreError::Rubric(e) => e.code(),
            StoreError::Campaign(e) => e.code(),
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            StoreError::UnknownCampaign(_) | StoreError::UnknownRubric(_) | StoreError::SequenceOutOfRange { .. } => {
                ErrorClass::NotFound
            }
            StoreError::CampaignExists(_) | StoreError::RubricExists(_) | StoreError::SequenceConflict { .. } => {
                ErrorClass::Conflict
            }
            StoreError::Io { .. } | StoreError::Corrupted { .. } | StoreError::UnsupportedSchema { .. } => {
                ErrorClass::Internal
            }
            StoreError::Rubric(e) => e.class(),
            StoreError::Campaign(e) => e.class(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Identifies a persisted campaign state: the last event sequence and the
/// checksum of the snapshot body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionToken {
    pub sequence: u64,
    pub sha256: String,
}

#[derive(Deserialize)]
struct Envelope<'a> {
    schema_version: u32,
    kind: String,
    sha256: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn render_envelope(kind: &str, version: u32, sha256: &str, body: &str) -> String {
    let kind = serde_json::to_string(kind).expect("string serializes");
    format!("{{\"schema_version\":{version},\"kind\":{kind},\"sha256\":\"{sha256}\",\"body\":{body}}}")
}

fn encode<T: Serialize>(kind: &str, value: &T, pretty: bool) -> (String, String) {
    let body = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("store documents serialize");
    let sum = checksum(body.as_bytes());
    (render_envelope(kind, SCHEMA_VERSION, &sum, &body), sum)
}

/// Upgrades a body written under an older schema. Version 1 is the first
/// published schema, so there is nothing to upgrade from yet; later schema
/// bumps add a step per version here.
fn migrate(kind: &str, from: u32, body: serde_json::Value) -> Result<serde_json::Value, String> {
    match from {
        SCHEMA_VERSION => Ok(body),
        other => Err(format!("no migration for {kind} schema version {other}")),
    }
}

fn decode<T: DeserializeOwned>(path: &Path, kind: &str, text: &str) -> Result<T, StoreError> {
    let corrupted = |detail: String| StoreError::Corrupted {
        path: path.to_owned(),
        detail,
    };
    let env: Envelope<'_> = serde_json::from_str(text).map_err(|e| corrupted(format!("unreadable envelope: {e}")))?;
    let rendered = render_envelope(&env.kind, env.schema_version, &env.sha256, env.body.get());
    if rendered != text {
        return Err(corrupted("envelope is not in canonical form".into()));
    }
    if env.kind != kind {
        return Err(corrupted(format!("expected a {kind} document, found {}", env.kind)));
    }
    if checksum(env.body.get().as_bytes()) != env.sha256 {
        return Err(corrupted("checksum mismatch".into()));
    }
    if env.schema_version > SCHEMA_VERSION {
        return Err(StoreError::UnsupportedSchema {
            path: path.to_owned(),
            found: env.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    if env.schema_version == SCHEMA_VERSION {
        return serde_json::from_str(env.body.get()).map_err(|e| corrupted(format!("invalid {kind} body: {e}")));
    }
    let value = serde_json::from_str(env.body.get()).map_err(|e| corrupted(e.to_string()))?;
    let value = migrate(kind, env.schema_version, value).map_err(corrupted)?;
    serde_json::from_value(value).map_err(|e| corrupted(format!("invalid {kind} body after migration: {e}")))
}

fn read_text(path: &Path) -> Result<String, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| StoreError::Corrupted {
        path: path.to_owned(),
        detail: format!("not UTF-8: {e}"),
    })
}

/// Writes through a temporary file and a rename so readers never see a
/// half-written document.
fn write_atomic(path: &Path, contents: &str) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Held while a campaign is mutated (exclusive) or read (shared).
#[derive(Debug)]
pub struct CampaignLock {
    _file: File,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`. The built-in
    /// default rubric is always available.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let store = Store { root: root.into() };
        for dir in [store.rubrics_dir(), store.campaigns_dir()] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let default = default_rubric();
        if !store.rubric_path(&default.reference()).exists() {
            store.put_rubric(&default)?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn rubrics_dir(&self) -> PathBuf {
        self.root.join("rubrics")
    }

    fn campaigns_dir(&self) -> PathBuf {
        self.root.join("campaigns")
    }

    fn rubric_path(&self, r: &RubricRef) -> PathBuf {
        self.rubrics_dir().join(format!("{}@{}.json", r.id, r.version))
    }

    fn campaign_dir(&self, id: &str) -> PathBuf {
        self.campaigns_dir().join(id)
    }

    pub fn snapshot_path(&self, id: &str) -> PathBuf {
        self.campaign_dir(id).join("campaign.json")
    }

    pub fn events_path(&self, id: &str) -> PathBuf {
        self.campaign_dir(id).join("events.jsonl")
    }

    fn secret_path(&self, id: &str) -> PathBuf {
        self.campaign_dir(id).join("secret")
    }

    /// Stores a clean rubric. Rubrics are immutable per id and version:
    /// storing identical content again is a no-op, different content is a
    /// conflict.
    pub fn put_rubric(&self, spec: &RubricSpec) -> Result<RubricRef, StoreError> {
        let report = validate_rubric(spec);
        if !report.is_clean() {
            return Err(RubricError::Invalid(report).into());
        }
        let reference = spec.reference();
        let path = self.rubric_path(&reference);
        if path.exists() {
            let stored: RubricSpec = decode(&path, KIND_RUBRIC, &read_text(&path)?)?;
            return if &stored == spec {
                Ok(reference)
            } else {
                Err(StoreError::RubricExists(reference.to_string()))
            };
        }
        let (doc, _) = encode(KIND_RUBRIC, spec, true);
        write_atomic(&path, &doc)?;
        Ok(reference)
    }

    pub fn get_rubric(&self, reference: &RubricRef) -> Result<RubricSpec, StoreError> {
        let path = self.rubric_path(reference);
        if !path.exists() {
            return Err(StoreError::UnknownRubric(reference.to_string()));
        }
        decode(&path, KIND_RUBRIC, &read_text(&path)?)
    }

    /// All stored rubric references, sorted by id then version.
    pub fn rubric_refs(&self) -> Result<Vec<RubricRef>, StoreError> {
        let dir = self.rubrics_dir();
        let mut refs = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let name = entry.map_err(io_err(&dir))?.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if let Some((id, version)) = stem.split_once('@') {
                refs.push(RubricRef {
                    id: id.to_owned(),
                    version: RubricVersion::new(version),
                });
            }
        }
        refs.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.version.cmp(&b.version)));
        Ok(refs)
    }

    /// Resolves `id` or `id@version`; a bare id picks the highest version.
    pub fn find_rubric(&self, spec: &str) -> Result<RubricSpec, StoreError> {
        if let Some((id, version)) = spec.split_once('@') {
            return self.get_rubric(&RubricRef {
                id: id.to_owned(),
                version: RubricVersion::new(version),
            });
        }
        let latest = self
            .rubric_refs()?
            .into_iter()
            .rfind(|r| r.id == spec)
            .ok_or_else(|| StoreError::UnknownRubric(spec.to_owned()))?;
        self.get_rubric(&latest)
    }

    pub fn campaign_exists(&self, id: &str) -> bool {
        is_valid_identifier(id) && self.events_path(id).exists()
    }

    pub fn campaign_ids(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.campaigns_dir();
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            if let Some(name) = entry.map_err(io_err(&dir))?.file_name().to_str() {
                if self.campaign_exists(name) {
                    ids.push(name.to_owned());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn lock(&self, id: &str, exclusive: bool) -> Result<CampaignLock, StoreError> {
        let path = self.campaign_dir(id).join("lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_err(&path))?;
        if exclusive {
            file.lock().map_err(io_err(&path))?;
        } else {
            file.lock_shared().map_err(io_err(&path))?;
        }
        Ok(CampaignLock { _file: file })
    }

    /// Takes the single-writer lock for a campaign. Blocks until free.
    pub fn lock_campaign(&self, id: &str) -> Result<CampaignLock, StoreError> {
        self.ensure_campaign(id)?;
        self.lock(id, true)
    }

    fn ensure_campaign(&self, id: &str) -> Result<(), StoreError> {
        if self.campaign_exists(id) {
            Ok(())
        } else {
            Err(StoreError::UnknownCampaign(id.to_owned()))
        }
    }

    /// Persists a freshly created campaign: its rubric must be stored and
    /// the id unused. A signing secret is generated alongside.
    pub fn create_campaign(&self, campaign: &mut Campaign) -> Result<VersionToken, StoreError> {
        self.get_rubric(&campaign.rubric).map_err(|e| match e {
            StoreError::UnknownRubric(r) => StoreError::Campaign(CampaignError::UnknownRubric(r)),
            other => other,
        })?;
        let dir = self.campaign_dir(&campaign.id);
        if !is_valid_identifier(&campaign.id) {
            return Err(CampaignError::InvalidIdentifier {
                what: "campaign",
                id: campaign.id.clone(),
            }
            .into());
        }
        fs::create_dir_all(self.campaigns_dir()).map_err(io_err(&dir))?;
        if let Err(e) = fs::create_dir(&dir) {
            return Err(if e.kind() == io::ErrorKind::AlreadyExists {
                StoreError::CampaignExists(campaign.id.clone())
            } else {
                io_err(&dir)(e)
            });
        }
        let _guard = self.lock(&campaign.id, true)?;
        let mut secret = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut secret);
        write_atomic(&self.secret_path(&campaign.id), &hex::encode(secret))?;
        File::create(self.events_path(&campaign.id)).map_err(io_err(&dir))?;
        self.save_locked(campaign)
    }

    /// Appends the campaign's pending events to its log and rewrites the
    /// snapshot. Takes the writer lock for the duration.
    pub fn save_campaign(&self, campaign: &mut Campaign) -> Result<VersionToken, StoreError> {
        let _guard = self.lock_campaign(&campaign.id)?;
        self.save_locked(campaign)
    }

    /// As [`Store::save_campaign`], for callers already holding the lock.
    pub fn save_locked(&self, campaign: &mut Campaign) -> Result<VersionToken, StoreError> {
        let id = campaign.id.clone();
        let pending = campaign.pending_events().to_vec();
        if !pending.is_empty() {
            let log_last = self.read_events_unlocked(&id)?.last().map(|e| e.sequence);
            let expected = log_last.map_or(0, |s| s + 1);
            if pending[0].sequence != expected {
                return Err(StoreError::SequenceConflict {
                    log: log_last.unwrap_or(0),
                    write: pending[0].sequence,
                });
            }
            self.append_lines(&id, &pending)?;
        }
        campaign.take_pending_events();
        let (doc, sha256) = encode(KIND_CAMPAIGN, &*campaign, true);
        write_atomic(&self.snapshot_path(&id), &doc)?;
        Ok(VersionToken {
            sequence: campaign.last_sequence,
            sha256,
        })
    }

    fn append_lines(&self, id: &str, events: &[EventRecord]) -> Result<(), StoreError> {
        let path = self.events_path(id);
        let mut text = String::new();
        for event in events {
            text.push_str(&encode(KIND_EVENT, event, false).0);
            text.push('\n');
        }
        let mut f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    /// Appends one event after checking it continues the log and applies to
    /// the current state. Returns its sequence number.
    pub fn append_event(&self, id: &str, event: &EventRecord) -> Result<u64, StoreError> {
        let _guard = self.lock_campaign(id)?;
        let events = self.read_events_unlocked(id)?;
        let mut state = Campaign::replay(&events)?;
        if event.sequence != state.last_sequence + 1 {
            return Err(StoreError::SequenceConflict {
                log: state.last_sequence,
                write: event.sequence,
            });
        }
        state.apply(event)?;
        self.append_lines(id, std::slice::from_ref(event))?;
        let (doc, _) = encode(KIND_CAMPAIGN, &state, true);
        write_atomic(&self.snapshot_path(id), &doc)?;
        Ok(event.sequence)
    }

    /// Loads the snapshot and folds in any logged events newer than it. The
    /// result must agree with the log.
    pub fn load_campaign(&self, id: &str) -> Result<Campaign, StoreError> {
        self.ensure_campaign(id)?;
        let _guard = self.lock(id, false)?;
        self.load_unlocked(id)
    }

    /// As [`Store::load_campaign`], for callers already holding the lock.
    pub fn load_unlocked(&self, id: &str) -> Result<Campaign, StoreError> {
        let path = self.snapshot_path(id);
        let mut campaign: Campaign = decode(&path, KIND_CAMPAIGN, &read_text(&path)?)?;
        let events = self.read_events_unlocked(id)?;
        let latest = events.last().map_or(0, |e| e.sequence);
        if latest < campaign.last_sequence {
            return Err(StoreError::Corrupted {
                path,
                detail: format!(
                    "snapshot is at sequence {} but the event log ends at {latest}",
                    campaign.last_sequence
                ),
            });
        }
        let snapshot_at = campaign.last_sequence;
        for event in events.iter().filter(|e| e.sequence > snapshot_at) {
            campaign.apply(event)?;
        }
        Ok(campaign)
    }

    pub fn read_events(&self, id: &str) -> Result<Vec<EventRecord>, StoreError> {
        self.ensure_campaign(id)?;
        let _guard = self.lock(id, false)?;
        self.read_events_unlocked(id)
    }

    fn read_events_unlocked(&self, id: &str) -> Result<Vec<EventRecord>, StoreError> {
        let path = self.events_path(id);
        let text = read_text(&path)?;
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(StoreError::Corrupted {
                path,
                detail: "event log does not end with a newline".into(),
            });
        }
        let mut events: Vec<EventRecord> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let event: EventRecord = decode(&path, KIND_EVENT, line).map_err(|e| match e {
                StoreError::Corrupted { path, detail } => StoreError::Corrupted {
                    path,
                    detail: format!("line {}: {detail}", i + 1),
                },
                other => other,
            })?;
            let expected = events.last().map_or(0, |e| e.sequence + 1);
            if event.sequence != expected {
                return Err(StoreError::Corrupted {
                    path,
                    detail: format!(
                        "line {}: sequence {} where {expected} was expected",
                        i + 1,
                        event.sequence
                    ),
                });
            }
            events.push(event);
        }
        Ok(events)
    }

    /// Campaign state after applying every event with sequence ≤ `sequence`.
    pub fn replay_to(&self, id: &str, sequence: u64) -> Result<Campaign, StoreError> {
        let events = self.read_events(id)?;
        let latest = events.last().map_or(0, |e| e.sequence);
        if sequence > latest {
            return Err(StoreError::SequenceOutOfRange {
                requested: sequence,
                latest,
            });
        }
        Ok(Campaign::replay(events.iter().take_while(|e| e.sequence <= sequence))?)
    }

    /// The campaign's token signing key.
    pub fn campaign_secret(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        self.ensure_campaign(id)?;
        let path = self.secret_path(id);
        let text = read_text(&path)?;
        hex::decode(text.trim()).map_err(|e| StoreError::Corrupted {
            path,
            detail: format!("secret is not hex: {e}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{CampaignOptions, DatasetEntry, EvaluationInput, Rater, RoundStatus};
    use crate::scale::{Rating, Standard};

    fn sample(store: &Store) -> Campaign {
        let rubric = default_rubric();
        let mut c = Campaign::create(
            "c1",
            &rubric,
            vec![Rater::new("a"), Rater::new("b")],
            CampaignOptions::default(),
        )
        .unwrap();
        store.create_campaign(&mut c).unwrap();
        c.add_round("training", vec![DatasetEntry::new("d1")]).unwrap();
        c.transition_round(0, RoundStatus::Collecting).unwrap();
        c.record_evaluation(
            &rubric,
            EvaluationInput::new("d1", "integrity", Standard::Minimum, "a", Rating::Pass),
        )
        .unwrap();
        store.save_campaign(&mut c).unwrap();
        c
    }

    #[test]
    fn save_load_round_trip() {
        let root = tempfile::tempdir().unwrap();
        let store = Store::open(root.path()).unwrap();
        let c = sample(&store);
        assert_eq!(store.load_campaign("c1").unwrap(), c);
        assert_eq!(store.replay_to("c1", c.last_sequence).unwrap(), c);
        let genesis = store.replay_to("c1", 0).unwrap();
        assert_eq!(genesis.evaluations().count(), 0);
        assert_eq!(store.campaign_ids().unwrap(), vec!["c1".to_string()]);
    }

    #[test]
    fn unknown_ids() {
        let root = tempfile::tempdir().unwrap();
        let store = Store::open(root.path()).unwrap();
        assert_eq!(store.load_campaign("nope").unwrap_err().code(), "unknown_campaign");
        assert_eq!(store.find_rubric("nope").unwrap_err().code(), "unknown_rubric");
        assert_eq!(store.find_rubric("data-curation-rubric").unwrap(), default_rubric());
    }

    #[test]
    fn stale_writer_conflicts() {
        let root = tempfile::tempdir().unwrap();
        let store = Store::open(root.path()).unwrap();
        sample(&store);
        let rubric = default_rubric();
        let mut first = store.load_campaign("c1").unwrap();
        let mut second = store.load_campaign("c1").unwrap();
        first
            .record_evaluation(
                &rubric,
                EvaluationInput::new("d1", "integrity", Standard::Minimum, "b", Rating::Pass),
            )
            .unwrap();
        second
            .record_evaluation(
                &rubric,
                EvaluationInput::new("d1", "integrity", Standard::Minimum, "b", Rating::Fail),
            )
            .unwrap();
        store.save_campaign(&mut first).unwrap();
        assert_eq!(
            store.save_campaign(&mut second).unwrap_err().code(),
            "sequence_conflict"
        );
    }

    #[test]
    fn newer_schema_rejected() {
        let root = tempfile::tempdir().unwrap();
        let store = Store::open(root.path()).unwrap();
        sample(&store);
        let path = store.snapshot_path("c1");
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen("\"schema_version\":1", "\"schema_version\":2", 1)).unwrap();
        let err = store.load_campaign("c1").unwrap_err();
        assert_eq!(err.code(), "unsupported_schema");
    }

    #[test]
    fn rubric_versions_are_immutable() {
        let root = tempfile::tempdir().unwrap();
        let store = Store::open(root.path()).unwrap();
        let mut spec = default_rubric();
        store.put_rubric(&spec).unwrap();
        spec.groups[0].title.push_str(" (edited)");
        assert_eq!(store.put_rubric(&spec).unwrap_err().code(), "rubric_exists");
        spec.version = RubricVersion::new("1.1.0");
        store.put_rubric(&spec).unwrap();
        assert_eq!(store.find_rubric("data-curation-rubric").unwrap().version, spec.version);
    }
}
