//! The guided sensemaking session.
//!
//! A session walks forward through five states:
//!
//! ```text
//! Reflection -> ImpactsNeeds -> Drafting -> Timeline -> Finalized
//! ```
//!
//! Items can be added, edited and adopted from recommendations while
//! drafting and while arranging the timeline. Nothing moves backwards.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pool::PoolSnapshot;
use crate::profile::{validate_profile, HarmProfile, LabeledProfile, ProfileError};
use crate::record::{
    check_length, check_text, random_token, ActionItem, Consent, ItemId, ItemOrigin,
    ModerationStatus, PlanError, RecordId, SurvivorRecord, TextError,
};
use crate::schema::QuestionnaireSchema;
use crate::similarity::{
    assemble_recommendations, RecommendationCard, RecommendationPage, RecommendationQuery,
    SimilarityError,
};
use crate::store::{Store, StoreError};

/// Idle time after which a session is abandoned.
pub const IDLE_TIMEOUT_HOURS: i64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Reflection,
    ImpactsNeeds,
    Drafting,
    Timeline,
    Finalized,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionState::Reflection => "reflection",
            SessionState::ImpactsNeeds => "impacts_needs",
            SessionState::Drafting => "drafting",
            SessionState::Timeline => "timeline",
            SessionState::Finalized => "finalized",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    SubmitHarm,
    SubmitImpactsNeeds,
    AddItem,
    EditItem,
    RequestRecommendations,
    Adopt,
    SetTimeline,
    Finalize,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{operation:?} is not allowed in state {state}")]
    IllegalTransition { state: SessionState, operation: Operation },
    #[error("narrative must not be empty")]
    EmptyNarrative,
    #[error("`{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("`{field}` exceeds {limit} characters")]
    TextTooLong { field: &'static str, limit: usize },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("card `{0}` was not issued to this session")]
    UnknownCard(String),
    #[error("unknown item `{0}`")]
    UnknownItem(ItemId),
    #[error("item `{0}` listed twice")]
    DuplicateItem(ItemId),
    #[error("{} item(s) not placed on the timeline", .0.len())]
    UnplacedItems(Vec<ItemId>),
    #[error(transparent)]
    Recommendation(#[from] SimilarityError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("unknown session")]
    UnknownSession,
    #[error("session expired")]
    Expired,
}

impl From<TextError> for SessionError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::Empty("narrative") => SessionError::EmptyNarrative,
            TextError::Empty(field) => SessionError::EmptyField(field),
            TextError::TooLong { field, limit } => SessionError::TextTooLong { field, limit },
        }
    }
}

impl From<PlanError> for SessionError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::UnknownItem(id) => SessionError::UnknownItem(id),
            PlanError::DuplicateItem(id) => SessionError::DuplicateItem(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleItem {
    pub stakeholder: &'static str,
    pub action: &'static str,
}

/// Example plan shown once drafting starts.
pub const SAMPLE_PLAN: &[SampleItem] = &[
    SampleItem { stakeholder: "Platform moderators", action: "Remove the offensive content" },
    SampleItem { stakeholder: "Offenders", action: "Issue a public apology" },
    SampleItem { stakeholder: "Online community members", action: "Reassure me that this is not acceptable" },
    SampleItem { stakeholder: "Family and friends", action: "Offer reassurance that I am not at fault" },
    SampleItem { stakeholder: "Myself", action: "Engage in healthy coping strategies" },
];

#[derive(Debug, Clone)]
pub struct Session {
    id: SessionId,
    state: SessionState,
    record: SurvivorRecord,
    rng_seed: u64,
    issued: BTreeMap<String, RecommendationCard>,
    next_item: u64,
    last_active: DateTime<Utc>,
}

impl Session {
    pub fn start(rng_seed: u64, schema: &QuestionnaireSchema) -> Self {
        let now = Utc::now();
        let mut record = SurvivorRecord::new(RecordId::random(), HarmProfile::empty(schema));
        record.created_at = now;
        Self {
            id: SessionId(random_token()),
            state: SessionState::Reflection,
            record,
            rng_seed,
            issued: BTreeMap::new(),
            next_item: 1,
            last_active: now,
        }
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn record(&self) -> &SurvivorRecord {
        &self.record
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn last_active(&self) -> DateTime<Utc> {
        self.last_active
    }

    pub fn touch(&mut self, now: DateTime<Utc>) {
        self.last_active = now;
    }

    fn require(&self, operation: Operation, allowed: &[SessionState]) -> Result<(), SessionError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(SessionError::IllegalTransition { state: self.state, operation })
        }
    }

    /// Step 1: what happened, plus the four multiple-choice dimensions.
    pub fn submit_harm(
        &mut self,
        narrative: &str,
        feelings: &str,
        profile: HarmProfile,
        schema: &QuestionnaireSchema,
    ) -> Result<(), SessionError> {
        self.require(Operation::SubmitHarm, &[SessionState::Reflection])?;
        check_text("narrative", narrative)?;
        check_length("feelings", feelings)?;
        let profile = validate_profile(profile, schema)?;
        self.record.reflection.narrative = narrative.to_string();
        self.record.reflection.feelings = feelings.to_string();
        self.record.profile = profile;
        self.state = SessionState::ImpactsNeeds;
        Ok(())
    }

    /// Step 2: impacts of the harm and what the survivor needs.
    pub fn submit_impacts_needs(&mut self, impacts: &str, needs: &str) -> Result<(), SessionError> {
        self.require(Operation::SubmitImpactsNeeds, &[SessionState::ImpactsNeeds])?;
        check_text("impacts", impacts)?;
        check_text("needs", needs)?;
        self.record.reflection.impacts = impacts.to_string();
        self.record.reflection.needs = needs.to_string();
        self.state = SessionState::Drafting;
        Ok(())
    }

    fn next_item_id(&mut self) -> ItemId {
        let id = ItemId(format!("item-{}", self.next_item));
        self.next_item += 1;
        id
    }

    pub fn add_action_item(&mut self, stakeholder: &str, action: &str) -> Result<ItemId, SessionError> {
        self.require(Operation::AddItem, &[SessionState::Drafting, SessionState::Timeline])?;
        check_text("stakeholder", stakeholder)?;
        check_text("action", action)?;
        let id = self.next_item_id();
        self.record.plan.items.push(ActionItem {
            id: id.clone(),
            stakeholder: stakeholder.to_string(),
            action: action.to_string(),
            origin: ItemOrigin::SelfAuthored,
            stakeholder_category: None,
            action_category: None,
        });
        Ok(id)
    }

    /// Rewrites an item's text. Adopted items keep their origin.
    pub fn edit_action_item(
        &mut self,
        item: &ItemId,
        stakeholder: &str,
        action: &str,
    ) -> Result<(), SessionError> {
        self.require(Operation::EditItem, &[SessionState::Drafting, SessionState::Timeline])?;
        check_text("stakeholder", stakeholder)?;
        check_text("action", action)?;
        let target = self
            .record
            .plan
            .item_mut(item)
            .ok_or_else(|| SessionError::UnknownItem(item.clone()))?;
        target.stakeholder = stakeholder.to_string();
        target.action = action.to_string();
        Ok(())
    }

    pub fn request_recommendations(
        &mut self,
        active_dimensions: Vec<String>,
        page: usize,
        pool: &PoolSnapshot,
        schema: &QuestionnaireSchema,
    ) -> Result<RecommendationPage, SessionError> {
        self.require(
            Operation::RequestRecommendations,
            &[SessionState::Drafting, SessionState::Timeline],
        )?;
        let query = RecommendationQuery {
            requester_profile: self.record.profile.clone(),
            active_dimensions,
            page,
            rng_seed: self.rng_seed,
        };
        let result = assemble_recommendations(&query, pool.members(), schema)?;
        for card in &result.cards {
            self.issued.insert(card.card_id.clone(), card.clone());
        }
        Ok(result)
    }

    pub fn adopt_recommendation(&mut self, card_id: &str) -> Result<ItemId, SessionError> {
        self.require(Operation::Adopt, &[SessionState::Drafting, SessionState::Timeline])?;
        let card = self
            .issued
            .get(card_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownCard(card_id.to_string()))?;
        let id = self.next_item_id();
        self.record.plan.items.push(ActionItem {
            id: id.clone(),
            stakeholder: card.stakeholder,
            action: card.action,
            origin: ItemOrigin::Adopted { source: card.source_record },
            stakeholder_category: card.stakeholder_category,
            action_category: card.action_category,
        });
        Ok(id)
    }

    pub fn set_timeline(&mut self, ordering: Vec<ItemId>) -> Result<(), SessionError> {
        self.require(Operation::SetTimeline, &[SessionState::Drafting, SessionState::Timeline])?;
        self.record.plan.set_timeline(ordering)?;
        self.state = SessionState::Timeline;
        Ok(())
    }

    /// Closes the session and returns the record to persist. Shared
    /// records start out pending moderation.
    pub fn finalize(&mut self, share: bool) -> Result<SurvivorRecord, SessionError> {
        self.require(Operation::Finalize, &[SessionState::Timeline])?;
        let unplaced = self.record.plan.unplaced();
        if !unplaced.is_empty() {
            return Err(SessionError::UnplacedItems(unplaced));
        }
        debug_assert!(self.record.plan.is_bijective());
        self.record.consent = Some(if share { Consent::Shared } else { Consent::Private });
        self.record.moderation = ModerationStatus::Pending;
        self.state = SessionState::Finalized;
        Ok(self.record.clone())
    }

    /// Whether the survivor entered anything worth keeping.
    fn has_content(&self) -> bool {
        self.state != SessionState::Reflection || !self.record.plan.is_empty()
    }

    pub fn view(&self, schema: &QuestionnaireSchema) -> SessionView {
        let positions = self.record.plan.positions();
        let drafting = matches!(self.state, SessionState::Drafting | SessionState::Timeline);
        SessionView {
            session_id: self.id.clone(),
            state: self.state,
            narrative: self.record.reflection.narrative.clone(),
            feelings: self.record.reflection.feelings.clone(),
            impacts: self.record.reflection.impacts.clone(),
            needs: self.record.reflection.needs.clone(),
            profile: self.record.profile.to_labels(schema),
            items: self
                .record
                .plan
                .items
                .iter()
                .map(|i| ItemView {
                    item: i.clone(),
                    position: positions.get(&i.id).copied(),
                })
                .collect(),
            timeline: self.record.plan.timeline.clone(),
            unplaced: self.record.plan.unplaced(),
            sample_plan: if drafting { SAMPLE_PLAN.to_vec() } else { vec![] },
            consent: self.record.consent,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemView {
    #[serde(flatten)]
    pub item: ActionItem,
    pub position: Option<u32>,
}

/// What the survivor's own client sees of the session.
#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub session_id: SessionId,
    pub state: SessionState,
    pub narrative: String,
    pub feelings: String,
    pub impacts: String,
    pub needs: String,
    pub profile: LabeledProfile,
    pub items: Vec<ItemView>,
    pub timeline: Vec<ItemId>,
    pub unplaced: Vec<ItemId>,
    pub sample_plan: Vec<SampleItem>,
    pub consent: Option<Consent>,
}

/// Live sessions, each behind its own lock so one session's operations
/// run one at a time while different sessions proceed in parallel.
pub struct SessionManager {
    store: Arc<Store>,
    schema: Arc<QuestionnaireSchema>,
    sessions: RwLock<HashMap<SessionId, Arc<Mutex<Session>>>>,
    idle_timeout: Duration,
}

impl SessionManager {
    pub fn new(store: Arc<Store>, schema: Arc<QuestionnaireSchema>) -> Self {
        Self::with_idle_timeout(store, schema, Duration::hours(IDLE_TIMEOUT_HOURS))
    }

    pub fn with_idle_timeout(
        store: Arc<Store>,
        schema: Arc<QuestionnaireSchema>,
        idle_timeout: Duration,
    ) -> Self {
        Self { store, schema, sessions: RwLock::new(HashMap::new()), idle_timeout }
    }

    pub fn schema(&self) -> &QuestionnaireSchema {
        &self.schema
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn start_session(&self, rng_seed: u64) -> SessionView {
        let session = Session::start(rng_seed, &self.schema);
        let view = session.view(&self.schema);
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        view
    }

    fn slot(&self, id: &SessionId) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or(SessionError::UnknownSession)
    }

    /// Runs `op` with exclusive access to one session.
    fn with_session<R>(
        &self,
        id: &SessionId,
        op: impl FnOnce(&mut Session, &Self) -> Result<R, SessionError>,
    ) -> Result<R, SessionError> {
        let slot = self.slot(id)?;
        let mut session = slot.lock().unwrap_or_else(|e| e.into_inner());
        let now = Utc::now();
        if session.state != SessionState::Finalized && now - session.last_active > self.idle_timeout {
            drop(session);
            self.expire(id)?;
            return Err(SessionError::Expired);
        }
        let out = op(&mut session, self)?;
        session.touch(now);
        Ok(out)
    }

    pub fn view(&self, id: &SessionId) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| Ok(s.view(&m.schema)))
    }

    pub fn submit_harm(
        &self,
        id: &SessionId,
        narrative: &str,
        feelings: &str,
        profile: &LabeledProfile,
    ) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| {
            // state is checked before the answers are parsed
            s.require(Operation::SubmitHarm, &[SessionState::Reflection])?;
            let profile = HarmProfile::from_labels(profile, &m.schema)?;
            s.submit_harm(narrative, feelings, profile, &m.schema)?;
            Ok(s.view(&m.schema))
        })
    }

    pub fn submit_impacts_needs(
        &self,
        id: &SessionId,
        impacts: &str,
        needs: &str,
    ) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| {
            s.submit_impacts_needs(impacts, needs)?;
            Ok(s.view(&m.schema))
        })
    }

    pub fn add_action_item(
        &self,
        id: &SessionId,
        stakeholder: &str,
        action: &str,
    ) -> Result<(ItemId, SessionView), SessionError> {
        self.with_session(id, |s, m| {
            let item = s.add_action_item(stakeholder, action)?;
            Ok((item, s.view(&m.schema)))
        })
    }

    pub fn edit_action_item(
        &self,
        id: &SessionId,
        item: &ItemId,
        stakeholder: &str,
        action: &str,
    ) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| {
            s.edit_action_item(item, stakeholder, action)?;
            Ok(s.view(&m.schema))
        })
    }

    pub fn request_recommendations(
        &self,
        id: &SessionId,
        active_dimensions: Vec<String>,
        page: usize,
    ) -> Result<RecommendationPage, SessionError> {
        self.with_session(id, |s, m| {
            let pool = m.store.snapshot_pool();
            s.request_recommendations(active_dimensions, page, &pool, &m.schema)
        })
    }

    pub fn adopt_recommendation(
        &self,
        id: &SessionId,
        card_id: &str,
    ) -> Result<(ItemId, SessionView), SessionError> {
        self.with_session(id, |s, m| {
            let item = s.adopt_recommendation(card_id)?;
            Ok((item, s.view(&m.schema)))
        })
    }

    pub fn set_timeline(&self, id: &SessionId, ordering: Vec<ItemId>) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| {
            s.set_timeline(ordering)?;
            Ok(s.view(&m.schema))
        })
    }

    /// Persists the finished record; shared records join the moderation
    /// queue. The session only moves to `Finalized` once storage succeeds.
    pub fn finalize(&self, id: &SessionId, share: bool) -> Result<SessionView, SessionError> {
        self.with_session(id, |s, m| {
            let mut next = s.clone();
            let record = next.finalize(share)?;
            let record_id = m.store.persist_record(record)?;
            if share {
                m.store.enqueue_moderation(&record_id)?;
            }
            *s = next;
            Ok(s.view(&m.schema))
        })
    }

    fn expire(&self, id: &SessionId) -> Result<(), SessionError> {
        let removed = self.sessions.write().unwrap_or_else(|e| e.into_inner()).remove(id);
        if let Some(slot) = removed {
            let session = slot.lock().unwrap_or_else(|e| e.into_inner());
            if session.state != SessionState::Finalized && session.has_content() {
                let mut record = session.record.clone();
                record.consent = None;
                self.store.persist_record(record)?;
            }
        }
        Ok(())
    }

    /// Abandons every unfinished session idle longer than the timeout.
    /// Returns how many were expired.
    pub fn expire_idle(&self, now: DateTime<Utc>) -> Result<usize, SessionError> {
        let stale: Vec<SessionId> = {
            let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
            sessions
                .iter()
                .filter(|(_, slot)| {
                    let s = slot.lock().unwrap_or_else(|e| e.into_inner());
                    now - s.last_active > self.idle_timeout
                })
                .map(|(id, _)| id.clone())
                .collect()
        };
        for id in &stale {
            self.expire(id)?;
        }
        Ok(stale.len())
    }

    /// [`expire_idle`](Self::expire_idle) at the current time.
    pub fn sweep(&self) -> Result<usize, SessionError> {
        self.expire_idle(Utc::now())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[doc(hidden)]
    pub fn backdate(&self, id: &SessionId, by: Duration) -> Result<(), SessionError> {
        let slot = self.slot(id)?;
        let mut s = slot.lock().unwrap_or_else(|e| e.into_inner());
        s.last_active -= by;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::{PoolMember, SharedItem};
    use crate::schema::{HARM_TYPE, OFFENDER_COUNT};

    fn schema() -> QuestionnaireSchema {
        QuestionnaireSchema::default_schema()
    }

    fn drafting(schema: &QuestionnaireSchema) -> Session {
        let mut s = Session::start(1, schema);
        let p = HarmProfile::empty(schema).with_answer(HARM_TYPE, [0]);
        s.submit_harm("someone called me names", "", p, schema).unwrap();
        s.submit_impacts_needs("I felt unsafe", "an apology").unwrap();
        s
    }

    fn pool(schema: &QuestionnaireSchema) -> PoolSnapshot {
        PoolSnapshot {
            members: vec![PoolMember {
                record_id: "r1".into(),
                anonymized_id: "anon1".into(),
                profile: HarmProfile::empty(schema),
                items: vec![SharedItem {
                    stakeholder: "Offenders".into(),
                    action: "Apologize".into(),
                    stakeholder_category: Some("Offenders".into()),
                    action_category: Some("Apologize".into()),
                }],
            }],
            pairs: Default::default(),
        }
    }

    #[test]
    fn fresh_session() {
        let schema = schema();
        let a = Session::start(0, &schema);
        let b = Session::start(0, &schema);
        assert_eq!(a.state(), SessionState::Reflection);
        assert!(a.record().plan.is_empty());
        assert_eq!(a.record().consent, None);
        assert_eq!(a.record().moderation, ModerationStatus::Pending);
        assert_ne!(a.id(), b.id());
        assert_eq!(a.id().as_str().len(), 32);
    }

    #[test]
    fn finalize_too_early() {
        let schema = schema();
        let mut s = Session::start(0, &schema);
        assert!(matches!(
            s.finalize(true),
            Err(SessionError::IllegalTransition { state: SessionState::Reflection, operation: Operation::Finalize })
        ));
    }

    #[test]
    fn harm_step_validation() {
        let schema = schema();
        let mut s = Session::start(0, &schema);
        let p = HarmProfile::empty(&schema);
        assert!(matches!(s.submit_harm("  ", "", p.clone(), &schema), Err(SessionError::EmptyNarrative)));
        let bad = HarmProfile::empty(&schema).with_answer(OFFENDER_COUNT, [0, 1]);
        assert!(matches!(
            s.submit_harm("text", "", bad, &schema),
            Err(SessionError::Profile(ProfileError::TooManySelections { .. }))
        ));
        assert_eq!(s.state(), SessionState::Reflection);
        s.submit_harm("text", "", p.clone(), &schema).unwrap();
        assert_eq!(s.state(), SessionState::ImpactsNeeds);
        assert!(matches!(s.submit_harm("text", "", p, &schema), Err(SessionError::IllegalTransition { .. })));
    }

    #[test]
    fn impacts_step() {
        let schema = schema();
        let mut s = Session::start(0, &schema);
        s.submit_harm("text", "", HarmProfile::empty(&schema), &schema).unwrap();
        assert!(matches!(s.submit_impacts_needs("hurt", ""), Err(SessionError::EmptyField("needs"))));
        s.submit_impacts_needs("hurt", "support").unwrap();
        assert_eq!(s.state(), SessionState::Drafting);
        assert!(!s.view(&schema).sample_plan.is_empty());
        assert!(matches!(s.submit_impacts_needs("hurt", "support"), Err(SessionError::IllegalTransition { .. })));
    }

    #[test]
    fn items_allowed_while_drafting_and_arranging() {
        let schema = schema();
        let mut early = Session::start(0, &schema);
        assert!(matches!(early.add_action_item("a", "b"), Err(SessionError::IllegalTransition { .. })));

        let mut s = drafting(&schema);
        let a = s.add_action_item("Offenders", "Apologize").unwrap();
        assert_eq!(s.record().plan.len(), 1);
        s.set_timeline(vec![a.clone()]).unwrap();
        assert_eq!(s.state(), SessionState::Timeline);
        let b = s.add_action_item("Myself", "Take a break").unwrap();
        assert_eq!(s.record().plan.len(), 2);
        assert!(matches!(s.finalize(false), Err(SessionError::UnplacedItems(ref v)) if v == &vec![b.clone()]));
        s.set_timeline(vec![b, a]).unwrap();
        let record = s.finalize(false).unwrap();
        assert_eq!(record.consent, Some(Consent::Private));
        assert!(record.plan.is_bijective());
        assert_eq!(s.state(), SessionState::Finalized);
        assert!(matches!(s.add_action_item("x", "y"), Err(SessionError::IllegalTransition { .. })));
    }

    #[test]
    fn timeline_errors() {
        let schema = schema();
        let mut s = drafting(&schema);
        let a = s.add_action_item("Offenders", "Apologize").unwrap();
        assert!(matches!(s.set_timeline(vec![a.clone(), a.clone()]), Err(SessionError::DuplicateItem(_))));
        assert!(matches!(s.set_timeline(vec!["ghost".into()]), Err(SessionError::UnknownItem(_))));
        assert_eq!(s.state(), SessionState::Drafting);
    }

    #[test]
    fn adopt_issued_cards_only() {
        let schema = schema();
        let pool = pool(&schema);
        let mut s = drafting(&schema);
        let page = s.request_recommendations(vec![], 0, &pool, &schema).unwrap();
        assert_eq!(page.cards.len(), 1);
        let card = &page.cards[0];
        let first = s.adopt_recommendation(&card.card_id).unwrap();
        let second = s.adopt_recommendation(&card.card_id).unwrap();
        assert_ne!(first, second);
        let item = s.record().plan.item(&first).unwrap();
        assert_eq!(item.origin, ItemOrigin::Adopted { source: "anon1".into() });
        assert_eq!(item.action, "Apologize");
        s.edit_action_item(&first, "Offenders", "Apologize in private").unwrap();
        assert_eq!(s.record().plan.item(&first).unwrap().action, "Apologize in private");
        assert_eq!(s.record().plan.item(&second).unwrap().action, "Apologize");
        assert!(matches!(s.adopt_recommendation("forged-0"), Err(SessionError::UnknownCard(_))));
    }

    #[test]
    fn recommendations_need_drafting() {
        let schema = schema();
        let pool = pool(&schema);
        let mut s = Session::start(0, &schema);
        assert!(matches!(
            s.request_recommendations(vec![], 0, &pool, &schema),
            Err(SessionError::IllegalTransition { .. })
        ));
        let mut s = drafting(&schema);
        let empty = s.request_recommendations(vec![], 0, &PoolSnapshot::default(), &schema).unwrap();
        assert!(empty.cards.is_empty() && !empty.has_more);
        assert!(matches!(
            s.request_recommendations(vec![], 7, &pool, &schema),
            Err(SessionError::Recommendation(SimilarityError::PageOutOfRange { .. }))
        ));
    }

    #[test]
    fn manager_finalize_and_expiry() {
        let dir = tempfile::tempdir().unwrap();
        let schema = Arc::new(schema());
        let store = Arc::new(Store::open(dir.path(), schema.clone()).unwrap());
        let m = SessionManager::new(store.clone(), schema.clone());

        let v = m.start_session(3);
        let id = v.session_id;
        let mut profile = LabeledProfile::new();
        profile.insert(HARM_TYPE.into(), vec!["stalking".into()]);
        m.submit_harm(&id, "someone followed me", "", &profile).unwrap();
        m.submit_impacts_needs(&id, "fear", "safety").unwrap();
        let (item, _) = m.add_action_item(&id, "Platform moderators", "Ban the account").unwrap();
        m.set_timeline(&id, vec![item]).unwrap();
        let done = m.finalize(&id, true).unwrap();
        assert_eq!(done.state, SessionState::Finalized);
        assert_eq!(store.pending_queue().len(), 1);
        assert_eq!(store.snapshot_pool().len(), 0);

        // idle session with content is persisted as abandoned
        let idle = m.start_session(4).session_id;
        m.submit_harm(&idle, "draft", "", &LabeledProfile::new()).unwrap();
        m.backdate(&idle, Duration::hours(25)).unwrap();
        assert!(matches!(m.view(&idle), Err(SessionError::Expired)));
        assert!(matches!(m.view(&idle), Err(SessionError::UnknownSession)));
        let abandoned: Vec<_> = store.records().into_iter().filter(|r| r.consent.is_none()).collect();
        assert_eq!(abandoned.len(), 1);
        assert!(!abandoned[0].is_recommendable());

        let untouched = m.start_session(5).session_id;
        m.backdate(&untouched, Duration::hours(30)).unwrap();
        assert_eq!(m.expire_idle(Utc::now()).unwrap(), 1);
        assert_eq!(store.len(), 2);
    }
}
