//! File-backed record store.
//!
//! Layout under the data directory:
//!
//! ```text
//! records/<id>.json   one record document per file, replaced atomically
//! moderation.log      newline-delimited moderation events, append-only
//! pairs.idx           newline-delimited pairwise scores, derived from records
//! salt                secret used to derive anonymized record ids
//! ```
//!
//! All mutations go through one writer lock. Readers get immutable
//! [`PoolSnapshot`]s that only ever contain shared, approved records.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pool::{PoolMember, PoolSnapshot};
use crate::record::{random_token, Consent, ModerationStatus, RecordDocument, RecordId, SurvivorRecord};
use crate::schema::QuestionnaireSchema;
use crate::similarity::{pairwise_similarity, PairKey, SimilarityScore};

const RECORDS_DIR: &str = "records";
const MODERATION_LOG: &str = "moderation.log";
const PAIRS_INDEX: &str = "pairs.idx";
const SALT_FILE: &str = "salt";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown record `{0}`")]
    UnknownRecord(RecordId),
    #[error("record `{0}` is not pending moderation")]
    NotPending(RecordId),
    #[error("record `{0}` was not shared")]
    NotShared(RecordId),
    #[error("record `{0}` already exists")]
    Duplicate(RecordId),
    #[error("corrupt file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationDecision {
    pub record_id: RecordId,
    pub decision: Decision,
    pub note: String,
    pub decided_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ModerationEvent {
    Enqueued { record_id: RecordId, at: DateTime<Utc> },
    Decided(ModerationDecision),
    Deleted { record_id: RecordId, at: DateTime<Utc> },
}

/// Result of comparing the stored pair index against fresh computation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairAudit {
    pub checked: usize,
    pub mismatched: Vec<PairKey>,
    pub missing: Vec<PairKey>,
    pub stale: Vec<PairKey>,
}

impl PairAudit {
    pub fn is_consistent(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty() && self.stale.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct PairLine {
    a: RecordId,
    b: RecordId,
    score: f64,
}

struct State {
    records: BTreeMap<RecordId, SurvivorRecord>,
    pairs: BTreeMap<PairKey, SimilarityScore>,
    log: Vec<ModerationEvent>,
    snapshot: Arc<PoolSnapshot>,
}

pub struct Store {
    dir: PathBuf,
    schema: Arc<QuestionnaireSchema>,
    salt: String,
    state: RwLock<State>,
}

/// Pending and approved shared records carry pair scores.
fn is_indexed(record: &SurvivorRecord) -> bool {
    record.consent == Some(Consent::Shared) && record.moderation != ModerationStatus::Rejected
}

/// Writes through a temp file in the same directory and renames it over
/// `path`, so readers see either the old or the new content.
pub(crate) fn write_atomic_with<F>(path: &Path, write: F) -> io::Result<()>
where
    F: FnOnce(&mut File) -> io::Result<()>,
{
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::Builder::new().prefix(".tmp").tempfile_in(parent)?;
    write(tmp.as_file_mut())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    write_atomic_with(path, |f| f.write_all(bytes))
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>, schema: Arc<QuestionnaireSchema>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let records_dir = dir.join(RECORDS_DIR);
        fs::create_dir_all(&records_dir)?;

        let salt_path = dir.join(SALT_FILE);
        let salt = match fs::read_to_string(&salt_path) {
            Ok(s) if !s.trim().is_empty() => s.trim().to_string(),
            Ok(_) => return Err(corrupt(&salt_path, "empty salt")),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let s = random_token();
                write_atomic(&salt_path, s.as_bytes())?;
                s
            }
            Err(e) => return Err(e.into()),
        };

        let mut records = BTreeMap::new();
        for entry in fs::read_dir(&records_dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with(".tmp") {
                // leftover from an interrupted write
                fs::remove_file(&path)?;
                continue;
            }
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let doc: RecordDocument =
                serde_json::from_str(&text).map_err(|e| corrupt(&path, e.to_string()))?;
            let record = SurvivorRecord::from_document(doc, &schema)
                .map_err(|e| corrupt(&path, e.to_string()))?;
            records.insert(record.id.clone(), record);
        }

        let log = read_log(&dir.join(MODERATION_LOG))?;
        let pairs = read_pairs(&dir.join(PAIRS_INDEX))?;

        let store = Self {
            dir,
            schema,
            salt,
            state: RwLock::new(State {
                records,
                pairs,
                log,
                snapshot: Arc::new(PoolSnapshot::default()),
            }),
        };
        {
            let mut state = store.write_state();
            if !store.audit_locked(&state).is_consistent() {
                state.pairs = store.compute_all_pairs(&state.records);
                store.write_pairs(&state.pairs)?;
            }
            store.refresh_snapshot(&mut state);
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn schema(&self) -> &QuestionnaireSchema {
        &self.schema
    }

    /// Stable, non-reversible public id for a record.
    pub fn anonymize(&self, id: &RecordId) -> String {
        let digest = Sha256::digest(format!("{}:{}", self.salt, id).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn persist_record(&self, record: SurvivorRecord) -> Result<RecordId, StoreError> {
        self.persist_record_with(record, |f, bytes| f.write_all(bytes))
    }

    pub(crate) fn persist_record_with<F>(
        &self,
        record: SurvivorRecord,
        write: F,
    ) -> Result<RecordId, StoreError>
    where
        F: FnOnce(&mut File, &[u8]) -> io::Result<()>,
    {
        let mut state = self.write_state();
        if state.records.contains_key(&record.id) {
            return Err(StoreError::Duplicate(record.id));
        }
        let bytes = self.encode(&record)?;
        write_atomic_with(&self.record_path(&record.id), |f| write(f, &bytes))?;

        let id = record.id.clone();
        let new_pairs = if is_indexed(&record) { self.pairs_against(&record, &state.records) } else { vec![] };
        state.records.insert(id.clone(), record);
        if !new_pairs.is_empty() {
            state.pairs.extend(new_pairs);
            self.write_pairs(&state.pairs)?;
        }
        self.refresh_snapshot(&mut state);
        Ok(id)
    }

    /// Persists many records with a single pair-index rewrite.
    pub fn import_records(&self, records: Vec<SurvivorRecord>) -> Result<Vec<RecordId>, StoreError> {
        let mut state = self.write_state();
        for r in &records {
            if state.records.contains_key(&r.id) {
                return Err(StoreError::Duplicate(r.id.clone()));
            }
        }
        let mut ids = Vec::with_capacity(records.len());
        for record in records {
            let bytes = self.encode(&record)?;
            write_atomic(&self.record_path(&record.id), &bytes)?;
            if is_indexed(&record) {
                let pairs = self.pairs_against(&record, &state.records);
                state.pairs.extend(pairs);
            }
            ids.push(record.id.clone());
            state.records.insert(record.id.clone(), record);
        }
        self.write_pairs(&state.pairs)?;
        self.refresh_snapshot(&mut state);
        Ok(ids)
    }

    pub fn get(&self, id: &RecordId) -> Option<SurvivorRecord> {
        self.read_state().records.get(id).cloned()
    }

    pub fn records(&self) -> Vec<SurvivorRecord> {
        self.read_state().records.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.read_state().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot_pool(&self) -> Arc<PoolSnapshot> {
        Arc::clone(&self.read_state().snapshot)
    }

    /// Stored pairwise scores, including pending records.
    pub fn pair_scores(&self) -> BTreeMap<PairKey, SimilarityScore> {
        self.read_state().pairs.clone()
    }

    /// Shared records awaiting a decision, oldest first.
    pub fn pending_queue(&self) -> Vec<SurvivorRecord> {
        let mut pending: Vec<SurvivorRecord> = self
            .read_state()
            .records
            .values()
            .filter(|r| r.consent == Some(Consent::Shared) && r.moderation == ModerationStatus::Pending)
            .cloned()
            .collect();
        pending.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        pending
    }

    pub fn moderation_log(&self) -> Vec<ModerationEvent> {
        self.read_state().log.clone()
    }

    pub fn enqueue_moderation(&self, id: &RecordId) -> Result<(), StoreError> {
        let mut state = self.write_state();
        let record = state.records.get(id).ok_or_else(|| StoreError::UnknownRecord(id.clone()))?;
        if record.consent != Some(Consent::Shared) {
            return Err(StoreError::NotShared(id.clone()));
        }
        if record.moderation != ModerationStatus::Pending {
            return Err(StoreError::NotPending(id.clone()));
        }
        self.append_event(&mut state, ModerationEvent::Enqueued { record_id: id.clone(), at: Utc::now() })
    }

    pub fn decide_moderation(
        &self,
        id: &RecordId,
        decision: Decision,
        note: &str,
    ) -> Result<ModerationDecision, StoreError> {
        let mut state = self.write_state();
        let record = state.records.get(id).ok_or_else(|| StoreError::UnknownRecord(id.clone()))?;
        if record.consent != Some(Consent::Shared) {
            return Err(StoreError::NotShared(id.clone()));
        }
        if record.moderation != ModerationStatus::Pending {
            return Err(StoreError::NotPending(id.clone()));
        }
        let mut updated = record.clone();
        updated.moderation = match decision {
            Decision::Approved => ModerationStatus::Approved,
            Decision::Rejected => ModerationStatus::Rejected,
        };
        write_atomic(&self.record_path(id), &self.encode(&updated)?)?;
        state.records.insert(id.clone(), updated);

        let entry = ModerationDecision {
            record_id: id.clone(),
            decision,
            note: note.to_string(),
            decided_at: Utc::now(),
        };
        if decision == Decision::Rejected {
            state.pairs.retain(|k, _| !k.involves(id));
            self.write_pairs(&state.pairs)?;
        }
        self.append_event(&mut state, ModerationEvent::Decided(entry.clone()))?;
        self.refresh_snapshot(&mut state);
        Ok(entry)
    }

    /// Erases the record file and every pair score that mentions it.
    pub fn delete_record(&self, id: &RecordId) -> Result<(), StoreError> {
        let mut state = self.write_state();
        if !state.records.contains_key(id) {
            return Err(StoreError::UnknownRecord(id.clone()));
        }
        fs::remove_file(self.record_path(id))?;
        state.records.remove(id);
        let before = state.pairs.len();
        state.pairs.retain(|k, _| !k.involves(id));
        if state.pairs.len() != before {
            self.write_pairs(&state.pairs)?;
        }
        self.append_event(&mut state, ModerationEvent::Deleted { record_id: id.clone(), at: Utc::now() })?;
        self.refresh_snapshot(&mut state);
        Ok(())
    }

    pub fn audit_pairs(&self) -> PairAudit {
        self.audit_locked(&self.read_state())
    }

    /// Recomputes the pair index from records and rewrites it.
    pub fn rebuild_pairs(&self) -> Result<usize, StoreError> {
        let mut state = self.write_state();
        state.pairs = self.compute_all_pairs(&state.records);
        self.write_pairs(&state.pairs)?;
        self.refresh_snapshot(&mut state);
        Ok(state.pairs.len())
    }

    fn read_state(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_state(&self) -> RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    fn record_path(&self, id: &RecordId) -> PathBuf {
        self.dir.join(RECORDS_DIR).join(format!("{id}.json"))
    }

    fn encode(&self, record: &SurvivorRecord) -> Result<Vec<u8>, StoreError> {
        serde_json::to_vec_pretty(&record.to_document(&self.schema))
            .map_err(|e| StoreError::Storage(io::Error::other(e)))
    }

    fn score(&self, a: &SurvivorRecord, b: &SurvivorRecord) -> SimilarityScore {
        pairwise_similarity(&a.profile, &b.profile, &self.schema, None)
            .expect("stored profiles were validated against the store schema")
    }

    fn pairs_against(
        &self,
        record: &SurvivorRecord,
        records: &BTreeMap<RecordId, SurvivorRecord>,
    ) -> Vec<(PairKey, SimilarityScore)> {
        records
            .values()
            .filter(|other| other.id != record.id && is_indexed(other))
            .map(|other| (PairKey::new(record.id.clone(), other.id.clone()), self.score(record, other)))
            .collect()
    }

    fn compute_all_pairs(
        &self,
        records: &BTreeMap<RecordId, SurvivorRecord>,
    ) -> BTreeMap<PairKey, SimilarityScore> {
        let indexed: Vec<&SurvivorRecord> = records.values().filter(|r| is_indexed(r)).collect();
        let mut pairs = BTreeMap::new();
        for (i, a) in indexed.iter().enumerate() {
            for b in &indexed[i + 1..] {
                pairs.insert(PairKey::new(a.id.clone(), b.id.clone()), self.score(a, b));
            }
        }
        pairs
    }

    fn audit_locked(&self, state: &State) -> PairAudit {
        let expected = self.compute_all_pairs(&state.records);
        let mut audit = PairAudit { checked: expected.len(), ..PairAudit::default() };
        for (key, fresh) in &expected {
            match state.pairs.get(key) {
                None => audit.missing.push(key.clone()),
                Some(stored) if stored.value().to_bits() != fresh.value().to_bits() => {
                    audit.mismatched.push(key.clone())
                }
                Some(_) => {}
            }
        }
        audit.stale = state.pairs.keys().filter(|k| !expected.contains_key(k)).cloned().collect();
        audit
    }

    fn write_pairs(&self, pairs: &BTreeMap<PairKey, SimilarityScore>) -> Result<(), StoreError> {
        let mut out = Vec::new();
        for (PairKey(a, b), score) in pairs {
            let line = PairLine { a: a.clone(), b: b.clone(), score: score.value() };
            serde_json::to_writer(&mut out, &line).map_err(io::Error::other)?;
            out.push(b'\n');
        }
        write_atomic(&self.dir.join(PAIRS_INDEX), &out)?;
        Ok(())
    }

    fn append_event(&self, state: &mut State, event: ModerationEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(&event).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join(MODERATION_LOG))?;
        f.write_all(&line)?;
        f.sync_data()?;
        state.log.push(event);
        Ok(())
    }

    fn refresh_snapshot(&self, state: &mut State) {
        let members: Vec<PoolMember> = state
            .records
            .values()
            .filter(|r| r.is_recommendable())
            .map(|r| PoolMember::from_record(r, self.anonymize(&r.id)))
            .collect();
        let pairs = state
            .pairs
            .iter()
            .filter(|(k, _)| {
                state.records.get(&k.0).is_some_and(SurvivorRecord::is_recommendable)
                    && state.records.get(&k.1).is_some_and(SurvivorRecord::is_recommendable)
            })
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        state.snapshot = Arc::new(PoolSnapshot { members, pairs });
    }
}

fn corrupt(path: &Path, message: impl Into<String>) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), message: message.into() }
}

fn read_log(path: &Path) -> Result<Vec<ModerationEvent>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
    let last = lines.len().saturating_sub(1);
    let mut events = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(ev) => events.push(ev),
            // a torn final line is what an interrupted append leaves behind
            Err(_) if i == last => break,
            Err(e) => return Err(corrupt(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(events)
}

fn read_pairs(path: &Path) -> Result<BTreeMap<PairKey, SimilarityScore>, StoreError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(e.into()),
    };
    let mut pairs = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        // the index is derived data; anything unreadable is rebuilt on open
        let Ok(p) = serde_json::from_str::<PairLine>(line) else {
            return Ok(BTreeMap::new());
        };
        let Some(score) = SimilarityScore::new(p.score) else {
            return Ok(BTreeMap::new());
        };
        pairs.insert(PairKey::new(p.a, p.b), score);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::HarmProfile;
    use crate::record::{ActionItem, ItemId, ItemOrigin};
    use crate::schema::{HARM_TYPE, PLATFORM};

    fn schema() -> Arc<QuestionnaireSchema> {
        Arc::new(QuestionnaireSchema::default_schema())
    }

    fn record(schema: &QuestionnaireSchema, consent: Consent, harm: usize) -> SurvivorRecord {
        let profile = HarmProfile::empty(schema).with_answer(HARM_TYPE, [harm]).with_answer(PLATFORM, [0]);
        let mut r = SurvivorRecord::new(RecordId::random(), profile);
        r.reflection.narrative = format!("narrative {}", r.id);
        r.plan.items.push(ActionItem {
            id: ItemId::from("item-1"),
            stakeholder: "Offenders".into(),
            action: format!("apologize {}", r.id),
            origin: ItemOrigin::SelfAuthored,
            stakeholder_category: None,
            action_category: None,
        });
        r.plan.timeline = vec![ItemId::from("item-1")];
        r.consent = Some(consent);
        r
    }

    #[test]
    fn round_trip_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let a = record(&s, Consent::Shared, 0);
        let b = record(&s, Consent::Shared, 1);
        let ida = store.persist_record(a.clone()).unwrap();
        let idb = store.persist_record(b.clone()).unwrap();
        assert_ne!(ida, idb);
        assert_eq!(store.get(&ida).unwrap(), a);
        assert!(matches!(store.persist_record(a.clone()), Err(StoreError::Duplicate(_))));
        assert_eq!(store.pair_scores().len(), 1);

        let anon = store.anonymize(&ida);
        drop(store);
        let reopened = Store::open(dir.path(), s).unwrap();
        assert_eq!(reopened.get(&ida).unwrap(), a);
        assert_eq!(reopened.anonymize(&ida), anon);
        assert!(reopened.audit_pairs().is_consistent());
    }

    #[test]
    fn gating_through_moderation() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let shared = store.persist_record(record(&s, Consent::Shared, 0)).unwrap();
        let private = store.persist_record(record(&s, Consent::Private, 0)).unwrap();
        store.enqueue_moderation(&shared).unwrap();
        assert!(matches!(store.enqueue_moderation(&private), Err(StoreError::NotShared(_))));
        assert_eq!(store.snapshot_pool().len(), 0);
        assert_eq!(store.pending_queue().len(), 1);

        store.decide_moderation(&shared, Decision::Approved, "ok").unwrap();
        let snap = store.snapshot_pool();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap.members[0].record_id, shared);
        assert!(matches!(
            store.decide_moderation(&shared, Decision::Rejected, "late"),
            Err(StoreError::NotPending(_))
        ));
        assert!(matches!(
            store.decide_moderation(&RecordId::from("nope"), Decision::Approved, ""),
            Err(StoreError::UnknownRecord(_))
        ));
        // the snapshot handed out earlier does not change
        store.delete_record(&shared).unwrap();
        assert_eq!(snap.len(), 1);
        assert_eq!(store.snapshot_pool().len(), 0);
    }

    #[test]
    fn rejection_is_permanent_and_logged() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let keep = store.persist_record(record(&s, Consent::Shared, 1)).unwrap();
        let id = store.persist_record(record(&s, Consent::Shared, 0)).unwrap();
        assert_eq!(store.pair_scores().len(), 1);
        store.decide_moderation(&id, Decision::Rejected, "endorses violence").unwrap();
        assert_eq!(store.pair_scores().len(), 0);
        assert!(store.snapshot_pool().members.iter().all(|m| m.record_id != id));
        let log = store.moderation_log();
        assert!(log.iter().any(|e| matches!(e, ModerationEvent::Decided(d)
            if d.record_id == id && d.decision == Decision::Rejected)));
        drop(store);
        let reopened = Store::open(dir.path(), s).unwrap();
        assert_eq!(reopened.get(&id).unwrap().moderation, ModerationStatus::Rejected);
        assert_eq!(reopened.moderation_log().len(), log.len());
        assert!(reopened.get(&keep).is_some());
    }

    #[test]
    fn delete_erases_everything() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let other = store.persist_record(record(&s, Consent::Shared, 1)).unwrap();
        let id = store.persist_record(record(&s, Consent::Shared, 0)).unwrap();
        store.decide_moderation(&id, Decision::Approved, "").unwrap();
        store.delete_record(&id).unwrap();
        assert!(store.get(&id).is_none());
        assert!(store.pair_scores().keys().all(|k| !k.involves(&id)));
        assert!(!dir.path().join(RECORDS_DIR).join(format!("{id}.json")).exists());
        let pairs = fs::read_to_string(dir.path().join(PAIRS_INDEX)).unwrap();
        assert!(!pairs.contains(id.as_str()));
        assert!(matches!(store.delete_record(&id), Err(StoreError::UnknownRecord(_))));
        assert!(store.get(&other).is_some());
    }

    #[test]
    fn crash_mid_write_leaves_no_record() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let r = record(&s, Consent::Shared, 0);
        let id = r.id.clone();
        let err = store
            .persist_record_with(r, |f, bytes| {
                f.write_all(&bytes[..bytes.len() / 2])?;
                Err(io::Error::other("simulated crash"))
            })
            .unwrap_err();
        assert!(matches!(err, StoreError::Storage(_)));
        assert!(store.get(&id).is_none());
        assert!(!dir.path().join(RECORDS_DIR).join(format!("{id}.json")).exists());

        // a process that dies before rename leaves its temp file behind
        fs::write(dir.path().join(RECORDS_DIR).join(".tmpXYZ"), b"{\"id\":\"half").unwrap();
        drop(store);
        let reopened = Store::open(dir.path(), s).unwrap();
        assert!(reopened.is_empty());
        assert_eq!(fs::read_dir(dir.path().join(RECORDS_DIR)).unwrap().count(), 0);
    }

    #[test]
    fn corrupt_pair_index_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        store.persist_record(record(&s, Consent::Shared, 0)).unwrap();
        store.persist_record(record(&s, Consent::Shared, 2)).unwrap();
        let good = store.pair_scores();
        drop(store);
        fs::write(dir.path().join(PAIRS_INDEX), "garbage\n").unwrap();
        let reopened = Store::open(dir.path(), s).unwrap();
        assert_eq!(reopened.pair_scores(), good);
    }

    #[test]
    fn torn_log_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let s = schema();
        let store = Store::open(dir.path(), s.clone()).unwrap();
        let id = store.persist_record(record(&s, Consent::Shared, 0)).unwrap();
        store.enqueue_moderation(&id).unwrap();
        drop(store);
        let mut f = OpenOptions::new().append(true).open(dir.path().join(MODERATION_LOG)).unwrap();
        f.write_all(b"{\"event\":\"deci").unwrap();
        let reopened = Store::open(dir.path(), s).unwrap();
        assert_eq!(reopened.moderation_log().len(), 1);
    }
}
