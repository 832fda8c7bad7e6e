//! Seed corpus: the stakeholder/action taxonomy, the newline-delimited
//! seed format, and the synthetic fixture bundled with the crate.
//!
//! Seed format, one survivor per line:
//!
//! ```json
//! {"profile": {"harm_type": ["stalking"], ...},
//!  "items": [{"stakeholder_category": "Offenders", "action_category": "Apologize",
//!             "stakeholder": "Offenders", "action": "Issue a public apology"}]}
//! ```

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{HarmProfile, LabeledProfile};
use crate::record::{
    check_text, ActionItem, Consent, ItemId, ItemOrigin, ModerationStatus, RecordId, SurvivorRecord,
};
use crate::schema::{QuestionnaireSchema, HARM_TYPE, OFFENDER_COUNT, PLATFORM, RELATIONSHIP};
use crate::store::{Store, StoreError};

pub struct ActionCategory {
    pub name: &'static str,
    pub examples: &'static [&'static str],
    /// Share of all action items in the original pilot corpus, in percent.
    pub published_share: f64,
}

pub struct StakeholderCategory {
    pub name: &'static str,
    pub published_share: f64,
    pub actions: &'static [ActionCategory],
}

const fn action(name: &'static str, published_share: f64, examples: &'static [&'static str]) -> ActionCategory {
    ActionCategory { name, examples, published_share }
}

pub const TAXONOMY: &[StakeholderCategory] = &[
    StakeholderCategory {
        name: "Platform moderators",
        published_share: 32.58,
        actions: &[
            action("Implement strategies to prevent future harm", 14.77, &["Enforce content filters", "Introduce identity verification measures"]),
            action("Content moderation", 9.09, &["Issue warnings or bans", "Remove offensive content"]),
            action("Give advice", 4.92, &["Offer online harm prevention tips", "Share resources for managing incidents"]),
            action("Help me understand the harm", 3.79, &["Investigate duplicate accounts", "Identify individuals responsible for harmful posts"]),
        ],
    },
    StakeholderCategory {
        name: "Offenders",
        published_share: 24.24,
        actions: &[
            action("Understand the impact of their actions", 7.58, &["Recognize the harm caused", "Understand consequences for both parties"]),
            action("Apologize", 6.44, &["Issue a public apology", "Acknowledge wrongdoing"]),
            action("Explain their motivation", 5.68, &["Disclose motivations behind harmful actions"]),
            action("Change their behavior", 3.41, &["Commit to avoiding future harm"]),
            action("Stop the continuation of harm", 1.14, &["Delete harmful posts"]),
        ],
    },
    StakeholderCategory {
        name: "Online community members",
        published_share: 21.21,
        actions: &[
            action("Give emotional support", 8.71, &["Reassure victims", "Affirm the unacceptability of online harm"]),
            action("Raise awareness", 6.82, &["Educate about cyberbullying"]),
            action("Report inappropriate comments", 3.41, &["Notify moderators"]),
            action("Give advice", 2.27, &["Offer coping strategies", "Provide perspectives on similar experiences"]),
        ],
    },
    StakeholderCategory {
        name: "Family and friends",
        published_share: 17.05,
        actions: &[
            action("Give emotional support", 10.98, &["Offer reassurance", "Affirm that the victim is not at fault"]),
            action("Give advice", 6.06, &["Suggest appropriate responses", "Provide guidance on handling the situation"]),
        ],
    },
    StakeholderCategory {
        name: "Myself",
        published_share: 4.92,
        actions: &[
            action("Be more cautious in the future", 2.27, &["Avoid harmful environments", "Be selective in online interactions"]),
            action("Communicate with offenders", 0.76, &["Address concerns directly with the offender"]),
            action("Ignore, block, delete, leave", 0.76, &["Disregard harmful remarks"]),
            action("Report", 0.38, &["File a report against the offender"]),
            action("Self-care", 0.38, &["Engage in healthy coping strategies"]),
            action("Communicate with people I trust", 0.38, &["Consult trusted individuals for guidance"]),
        ],
    },
];

pub fn in_taxonomy(stakeholder_category: &str, action_category: &str) -> bool {
    TAXONOMY
        .iter()
        .filter(|s| s.name == stakeholder_category)
        .any(|s| s.actions.iter().any(|a| a.name == action_category))
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: category ({stakeholder_category:?}, {action_category:?}) is outside the taxonomy")]
    TaxonomyViolation {
        line: usize,
        stakeholder_category: String,
        action_category: String,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakeholder_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_category: Option<String>,
    pub stakeholder: String,
    pub action: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedLine {
    profile: LabeledProfile,
    items: Vec<SeedItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedEntry {
    pub profile: HarmProfile,
    pub items: Vec<SeedItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedCorpus {
    pub entries: Vec<SeedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportSummary {
    pub survivors: usize,
    pub items: usize,
    /// Items per stakeholder category.
    pub categories: BTreeMap<String, usize>,
}

impl SeedCorpus {
    pub fn parse(
        text: &str,
        schema: &QuestionnaireSchema,
        allow_new_categories: bool,
    ) -> Result<Self, SeedError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let parsed: SeedLine = serde_json::from_str(raw)
                .map_err(|e| SeedError::Parse { line, message: e.to_string() })?;
            let profile = HarmProfile::from_labels(&parsed.profile, schema)
                .map_err(|e| SeedError::Parse { line, message: e.to_string() })?;
            for item in &parsed.items {
                check_text("stakeholder", &item.stakeholder)
                    .and_then(|_| check_text("action", &item.action))
                    .map_err(|e| SeedError::Parse { line, message: e.to_string() })?;
                if allow_new_categories {
                    continue;
                }
                match (&item.stakeholder_category, &item.action_category) {
                    (None, None) => {}
                    (s, a) => {
                        let s = s.clone().unwrap_or_default();
                        let a = a.clone().unwrap_or_default();
                        if !in_taxonomy(&s, &a) {
                            return Err(SeedError::TaxonomyViolation {
                                line,
                                stakeholder_category: s,
                                action_category: a,
                            });
                        }
                    }
                }
            }
            entries.push(SeedEntry { profile, items: parsed.items });
        }
        if entries.is_empty() {
            return Err(SeedError::Parse { line: 0, message: "seed file holds no records".into() });
        }
        Ok(Self { entries })
    }

    pub fn to_ndjson(&self, schema: &QuestionnaireSchema) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = SeedLine { profile: e.profile.to_labels(schema), items: e.items.clone() };
            out.push_str(&serde_json::to_string(&line).expect("seed lines serialize"));
            out.push('\n');
        }
        out
    }

    /// Seed view of existing records: profile and items only.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a SurvivorRecord>) -> Self {
        Self {
            entries: records
                .into_iter()
                .map(|r| SeedEntry {
                    profile: r.profile.clone(),
                    items: r
                        .plan
                        .items
                        .iter()
                        .map(|i| SeedItem {
                            stakeholder_category: i.stakeholder_category.clone(),
                            action_category: i.action_category.clone(),
                            stakeholder: i.stakeholder.clone(),
                            action: i.action.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Records ready to recommend: shared, approved, timeline in item order.
    pub fn to_records(&self) -> Vec<SurvivorRecord> {
        self.entries
            .iter()
            .map(|e| {
                let mut r = SurvivorRecord::new(RecordId::random(), e.profile.clone());
                r.plan.items = e
                    .items
                    .iter()
                    .enumerate()
                    .map(|(i, it)| ActionItem {
                        id: ItemId(format!("item-{}", i + 1)),
                        stakeholder: it.stakeholder.clone(),
                        action: it.action.clone(),
                        origin: ItemOrigin::SelfAuthored,
                        stakeholder_category: it.stakeholder_category.clone(),
                        action_category: it.action_category.clone(),
                    })
                    .collect();
                r.plan.timeline = r.plan.items.iter().map(|i| i.id.clone()).collect();
                r.consent = Some(Consent::Shared);
                r.moderation = ModerationStatus::Approved;
                r
            })
            .collect()
    }

    pub fn summary(&self) -> ImportSummary {
        let mut categories = BTreeMap::new();
        for item in self.entries.iter().flat_map(|e| &e.items) {
            let key = item.stakeholder_category.clone().unwrap_or_else(|| "Uncategorized".into());
            *categories.entry(key).or_insert(0) += 1;
        }
        ImportSummary {
            survivors: self.entries.len(),
            items: self.entries.iter().map(|e| e.items.len()).sum(),
            categories,
        }
    }
}

/// Parses `text` and persists every entry as a recommendable record.
pub fn import_seed(
    store: &Store,
    text: &str,
    allow_new_categories: bool,
) -> Result<ImportSummary, SeedError> {
    let corpus = SeedCorpus::parse(text, store.schema(), allow_new_categories)?;
    store.import_records(corpus.to_records())?;
    Ok(corpus.summary())
}

// ---------------------------------------------------------------------------
// bundled fixture

/// The synthetic seed corpus shipped with the crate.
pub const BUNDLED_SEED: &str = include_str!("../fixtures/seed_corpus.jsonl");

pub const FIXTURE_SURVIVORS: usize = 35;
pub const FIXTURE_ITEMS: usize = 264;
const FIXTURE_RNG_SEED: u64 = 0x5eed_c0de;

/// Profile marginals of the pilot corpus: (question, [(option, survivors)]).
const PROFILE_MARGINALS: &[(&str, &[(&str, usize)])] = &[
    (
        HARM_TYPE,
        &[
            ("offensive name-calling", 10),
            ("public shaming", 9),
            ("harassment", 9),
            ("sexual harassment", 6),
            ("physical threat", 1),
            ("other", 21),
        ],
    ),
    (
        PLATFORM,
        &[
            ("social media site", 31),
            ("messaging app", 8),
            ("in-person", 2),
            ("personal email", 2),
            ("online gaming", 1),
            ("forum site", 1),
            ("online dating app", 1),
            ("other", 4),
        ],
    ),
    (OFFENDER_COUNT, &[("1", 14), ("2-5", 10), ("6-10", 6), (">10", 5)]),
    (RELATIONSHIP, &[("strangers", 17), ("acquaintances", 12), ("friends", 8)]),
];

/// Builds the fixture corpus: 35 survivors whose profile marginals and
/// category counts follow the pilot data. Item text comes from the
/// taxonomy's example phrases, so no survivor text is invented.
pub fn synthesize_fixture(schema: &QuestionnaireSchema) -> SeedCorpus {
    let mut profiles: Vec<LabeledProfile> = vec![LabeledProfile::new(); FIXTURE_SURVIVORS];
    for (question, marginals) in PROFILE_MARGINALS {
        for p in profiles.iter_mut() {
            p.insert(question.to_string(), vec![]);
        }
        // walk the survivors round-robin so every survivor gets an answer
        // before anyone gets a second one
        let mut cursor = 0usize;
        for (label, count) in *marginals {
            for _ in 0..*count {
                while profiles[cursor % FIXTURE_SURVIVORS][*question].iter().any(|l| l == label) {
                    cursor += 1;
                }
                profiles[cursor % FIXTURE_SURVIVORS]
                    .get_mut(*question)
                    .expect("inserted above")
                    .push(label.to_string());
                cursor += 1;
            }
        }
    }

    let mut items = Vec::with_capacity(FIXTURE_ITEMS);
    for s in TAXONOMY {
        for a in s.actions {
            let count = (a.published_share * FIXTURE_ITEMS as f64 / 100.0).round() as usize;
            for k in 0..count {
                items.push(SeedItem {
                    stakeholder_category: Some(s.name.to_string()),
                    action_category: Some(a.name.to_string()),
                    stakeholder: s.name.to_string(),
                    action: a.examples[k % a.examples.len()].to_string(),
                });
            }
        }
    }
    assert_eq!(items.len(), FIXTURE_ITEMS, "taxonomy shares must round to the fixture size");
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_RNG_SEED);
    items.shuffle(&mut rng);

    let base = FIXTURE_ITEMS / FIXTURE_SURVIVORS;
    let extra = FIXTURE_ITEMS % FIXTURE_SURVIVORS;
    let mut rest = items.into_iter();
    let entries = profiles
        .into_iter()
        .enumerate()
        .map(|(i, labeled)| {
            let take = base + usize::from(i < extra);
            SeedEntry {
                profile: HarmProfile::from_labels(&labeled, schema)
                    .expect("fixture marginals use schema labels"),
                items: rest.by_ref().take(take).collect(),
            }
        })
        .collect();
    SeedCorpus { entries }
}
