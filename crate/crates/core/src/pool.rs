//! The anonymized, read-only view of recommendable records.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::profile::HarmProfile;
use crate::record::{RecordId, SurvivorRecord};
use crate::similarity::{Neighbor, PairKey, SimilarityScore};

/// An action item stripped to what other survivors may see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharedItem {
    pub stakeholder: String,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stakeholder_category: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_category: Option<String>,
}

/// A recommendable record without narrative, reflections or timestamps.
/// `record_id` never leaves the process; cards carry `anonymized_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolMember {
    pub record_id: RecordId,
    pub anonymized_id: String,
    pub profile: HarmProfile,
    pub items: Vec<SharedItem>,
}

impl PoolMember {
    pub fn from_record(record: &SurvivorRecord, anonymized_id: String) -> Self {
        Self {
            record_id: record.id.clone(),
            anonymized_id,
            profile: record.profile.clone(),
            items: record
                .plan
                .items
                .iter()
                .map(|i| SharedItem {
                    stakeholder: i.stakeholder.clone(),
                    action: i.action.clone(),
                    stakeholder_category: i.stakeholder_category.clone(),
                    action_category: i.action_category.clone(),
                })
                .collect(),
        }
    }
}

impl Neighbor for PoolMember {
    fn record_id(&self) -> &RecordId {
        &self.record_id
    }

    fn profile(&self) -> &HarmProfile {
        &self.profile
    }
}

/// Frozen pool contents plus the stored pairwise scores at snapshot time.
#[derive(Debug, Clone, Default)]
pub struct PoolSnapshot {
    pub members: Vec<PoolMember>,
    pub pairs: BTreeMap<PairKey, SimilarityScore>,
}

impl PoolSnapshot {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[PoolMember] {
        &self.members
    }
}
