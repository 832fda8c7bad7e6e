//! Guided sensemaking for survivors of online harm.
//!
//! A survivor reflects on an incident, answers four multiple-choice
//! questions about it, drafts stakeholder action items, receives action
//! items from consenting survivors with similar answers, orders the plan
//! on a timeline and chooses whether to share it.
//!
//! - [`schema`] and [`profile`]: the questionnaire and validated answers
//! - [`record`]: survivor records and action plans
//! - [`similarity`]: the questionnaire metric, neighbors and card pages
//! - [`session`]: the step-by-step state machine
//! - [`store`]: file-backed persistence with consent and moderation gating
//! - [`seed`] and [`analytics`]: seed corpus, tabulation and statistics

pub mod analytics;
pub mod pool;
pub mod profile;
pub mod record;
pub mod schema;
pub mod seed;
pub mod session;
pub mod similarity;
pub mod store;

pub use pool::{PoolMember, PoolSnapshot, SharedItem};
pub use profile::{validate_profile, HarmProfile, LabeledProfile, ProfileError};
pub use record::{
    ActionItem, ActionPlan, Consent, ItemId, ItemOrigin, ModerationStatus, RecordId,
    ReflectionRecord, SurvivorRecord,
};
pub use schema::{MaxSelections, Question, QuestionnaireSchema};
pub use session::{Session, SessionError, SessionId, SessionManager, SessionState, SessionView};
pub use similarity::{
    assemble_recommendations, pairwise_similarity, store_pairwise, top_k_neighbors,
    RecommendationCard, RecommendationPage, RecommendationQuery, SimilarityError, SimilarityScore,
};
pub use store::{Decision, ModerationDecision, ModerationEvent, Store, StoreError};
