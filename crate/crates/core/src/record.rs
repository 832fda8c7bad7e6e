//! Survivor records and the action plans they carry.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{HarmProfile, LabeledProfile, ProfileError};
use crate::schema::QuestionnaireSchema;

/// Upper bound on any free-text field, in characters.
pub const MAX_TEXT_CHARS: usize = 10_000;

/// 128 random bits, hex encoded.
pub fn random_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(RecordId);
string_id!(ItemId);

impl RecordId {
    pub fn random() -> Self {
        Self(random_token())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("`{0}` must not be empty")]
    Empty(&'static str),
    #[error("`{field}` exceeds {limit} characters")]
    TooLong { field: &'static str, limit: usize },
}

/// Rejects blank text and text over [`MAX_TEXT_CHARS`].
pub fn check_text(field: &'static str, text: &str) -> Result<(), TextError> {
    if text.trim().is_empty() {
        return Err(TextError::Empty(field));
    }
    check_length(field, text)
}

pub fn check_length(field: &'static str, text: &str) -> Result<(), TextError> {
    if text.chars().count() > MAX_TEXT_CHARS {
        return Err(TextError::TooLong { field, limit: MAX_TEXT_CHARS });
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionRecord {
    pub narrative: String,
    pub feelings: String,
    pub impacts: String,
    pub needs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemOrigin {
    SelfAuthored,
    /// `source` is the anonymized id of the record the item came from.
    Adopted { source: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionItem {
    pub id: ItemId,
    pub stakeholder: String,
    pub action: String,
    pub origin: ItemOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakeholder_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_category: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown item `{0}`")]
    UnknownItem(ItemId),
    #[error("item `{0}` listed twice")]
    DuplicateItem(ItemId),
}

/// Action items plus their chronological placement.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub items: Vec<ActionItem>,
    /// Item ids in timeline order; position `i` in this list is
    /// timeline position `i + 1`.
    pub timeline: Vec<ItemId>,
}

impl ActionPlan {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: &ItemId) -> Option<&ActionItem> {
        self.items.iter().find(|i| &i.id == id)
    }

    pub fn item_mut(&mut self, id: &ItemId) -> Option<&mut ActionItem> {
        self.items.iter_mut().find(|i| &i.id == id)
    }

    /// Replaces the timeline with `ordering`, which must name existing items
    /// at most once each. Items left out stay unplaced.
    pub fn set_timeline(&mut self, ordering: Vec<ItemId>) -> Result<(), PlanError> {
        let mut seen = BTreeSet::new();
        for id in &ordering {
            if self.item(id).is_none() {
                return Err(PlanError::UnknownItem(id.clone()));
            }
            if !seen.insert(id) {
                return Err(PlanError::DuplicateItem(id.clone()));
            }
        }
        self.timeline = ordering;
        Ok(())
    }

    /// Timeline position (1-based) for each placed item.
    pub fn positions(&self) -> HashMap<&ItemId, u32> {
        self.timeline.iter().zip(1u32..).collect()
    }

    pub fn unplaced(&self) -> Vec<ItemId> {
        let placed: BTreeSet<&ItemId> = self.timeline.iter().collect();
        self.items.iter().filter(|i| !placed.contains(&i.id)).map(|i| i.id.clone()).collect()
    }

    /// Every item appears on the timeline exactly once and nothing else does.
    pub fn is_bijective(&self) -> bool {
        let placed: BTreeSet<&ItemId> = self.timeline.iter().collect();
        let items: BTreeSet<&ItemId> = self.items.iter().map(|i| &i.id).collect();
        placed.len() == self.timeline.len() && placed == items && items.len() == self.items.len()
    }

    pub fn distinct_stakeholders(&self) -> usize {
        self.items
            .iter()
            .map(|i| i.stakeholder.trim().to_lowercase())
            .collect::<BTreeSet<_>>()
            .len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consent {
    Shared,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModerationStatus {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorRecord {
    pub id: RecordId,
    pub profile: HarmProfile,
    pub reflection: ReflectionRecord,
    pub plan: ActionPlan,
    /// `None` until the survivor decides; abandoned sessions persist as `None`.
    pub consent: Option<Consent>,
    pub moderation: ModerationStatus,
    pub created_at: DateTime<Utc>,
}

impl SurvivorRecord {
    pub fn new(id: RecordId, profile: HarmProfile) -> Self {
        Self {
            id,
            profile,
            reflection: ReflectionRecord::default(),
            plan: ActionPlan::default(),
            consent: None,
            moderation: ModerationStatus::Pending,
            created_at: Utc::now(),
        }
    }

    pub fn is_recommendable(&self) -> bool {
        self.consent == Some(Consent::Shared) && self.moderation == ModerationStatus::Approved
    }

    pub fn to_document(&self, schema: &QuestionnaireSchema) -> RecordDocument {
        RecordDocument {
            id: self.id.clone(),
            profile: self.profile.to_labels(schema),
            reflection: self.reflection.clone(),
            plan: self.plan.clone(),
            consent: self.consent,
            moderation: self.moderation,
            created_at: self.created_at,
        }
    }

    pub fn from_document(
        doc: RecordDocument,
        schema: &QuestionnaireSchema,
    ) -> Result<Self, ProfileError> {
        Ok(Self {
            id: doc.id,
            profile: HarmProfile::from_labels(&doc.profile, schema)?,
            reflection: doc.reflection,
            plan: doc.plan,
            consent: doc.consent,
            moderation: doc.moderation,
            created_at: doc.created_at,
        })
    }
}

/// Serialized form of [`SurvivorRecord`]; selections are option labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDocument {
    pub id: RecordId,
    pub profile: LabeledProfile,
    pub reflection: ReflectionRecord,
    pub plan: ActionPlan,
    pub consent: Option<Consent>,
    pub moderation: ModerationStatus,
    pub created_at: DateTime<Utc>,
}
