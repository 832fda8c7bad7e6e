//! Questionnaire similarity and recommendation assembly.
//!
//! Two survivors earn `1/n_k` for every option of question `k` on which
//! they agree, where agreement means both selected the option or both
//! left it unselected. The per-question sums are averaged over the
//! questions in play, so a score always lies in `[0, 1]`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pool::PoolMember;
use crate::profile::HarmProfile;
use crate::record::RecordId;
use crate::schema::{Question, QuestionnaireSchema};

/// Neighbors consulted per request.
pub const DEFAULT_NEIGHBORS: usize = 3;
/// Cards per recommendation page.
pub const PAGE_SIZE: usize = 4;
/// Scores closer than this are ties. Equal sums of option fractions can
/// round differently depending on which options agree.
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("profile does not match the questionnaire schema")]
    SchemaMismatch,
    #[error("dimension subset must not be empty")]
    EmptyDimensions,
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("page {page} is past the last page ({pages} pages)")]
    PageOutOfRange { page: usize, pages: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Anything that can be ranked as a neighbor.
pub trait Neighbor {
    fn record_id(&self) -> &RecordId;
    fn profile(&self) -> &HarmProfile;
}

impl Neighbor for crate::record::SurvivorRecord {
    fn record_id(&self) -> &RecordId {
        &self.id
    }

    fn profile(&self) -> &HarmProfile {
        &self.profile
    }
}

/// Unordered record pair, stored as (smaller id, larger id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey(pub RecordId, pub RecordId);

impl PairKey {
    pub fn new(a: RecordId, b: RecordId) -> Self {
        if a <= b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }

    pub fn involves(&self, id: &RecordId) -> bool {
        &self.0 == id || &self.1 == id
    }
}

/// Resolves an optional dimension subset to schema questions, in schema order.
pub fn resolve_dimensions<'s>(
    schema: &'s QuestionnaireSchema,
    dims: Option<&[String]>,
) -> Result<Vec<&'s Question>, SimilarityError> {
    match dims {
        None => Ok(schema.questions().iter().collect()),
        Some([]) => Err(SimilarityError::EmptyDimensions),
        Some(dims) => {
            if let Some(unknown) = dims.iter().find(|d| schema.question(d).is_none()) {
                return Err(SimilarityError::UnknownDimension(unknown.clone()));
            }
            Ok(schema.questions().iter().filter(|q| dims.contains(&q.id)).collect())
        }
    }
}

fn conforms(profile: &HarmProfile, schema: &QuestionnaireSchema) -> bool {
    profile.answers().iter().all(|(qid, selected)| {
        schema
            .question(qid)
            .is_some_and(|q| selected.iter().all(|&i| i < q.option_count()))
    })
}

/// Number of options of `question` on which the two profiles agree.
fn agreeing_options(a: &HarmProfile, b: &HarmProfile, question: &Question) -> usize {
    (0..question.option_count())
        .filter(|&o| a.is_selected(&question.id, o) == b.is_selected(&question.id, o))
        .count()
}

/// True when both profiles made exactly the same selections on `question`.
pub fn agrees_on(a: &HarmProfile, b: &HarmProfile, question: &Question) -> bool {
    agreeing_options(a, b, question) == question.option_count()
}

fn score_over(a: &HarmProfile, b: &HarmProfile, questions: &[&Question]) -> SimilarityScore {
    let sum: f64 = questions
        .iter()
        .map(|q| agreeing_options(a, b, q) as f64 / q.option_count() as f64)
        .sum();
    SimilarityScore((sum / questions.len() as f64).clamp(0.0, 1.0))
}

pub fn pairwise_similarity(
    a: &HarmProfile,
    b: &HarmProfile,
    schema: &QuestionnaireSchema,
    dims: Option<&[String]>,
) -> Result<SimilarityScore, SimilarityError> {
    if !conforms(a, schema) || !conforms(b, schema) {
        return Err(SimilarityError::SchemaMismatch);
    }
    let questions = resolve_dimensions(schema, dims)?;
    Ok(score_over(a, b, &questions))
}

/// The `k` most similar pool members, best first. Equal scores are ordered
/// by ascending record id.
pub fn top_k_neighbors<N: Neighbor>(
    requester: &HarmProfile,
    pool: &[N],
    schema: &QuestionnaireSchema,
    k: usize,
    dims: Option<&[String]>,
) -> Result<Vec<(RecordId, SimilarityScore)>, SimilarityError> {
    let mut scored = pool
        .iter()
        .map(|n| {
            pairwise_similarity(requester, n.profile(), schema, dims)
                .map(|s| (n.record_id().clone(), s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    scored.sort_by(|(ia, sa), (ib, sb)| {
        let by_score = if (sa.0 - sb.0).abs() <= TIE_EPSILON { Ordering::Equal } else { sb.0.total_cmp(&sa.0) };
        by_score.then_with(|| ia.cmp(ib))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Scores for a newly stored record against every other pool member.
pub fn store_pairwise<N: Neighbor>(
    record_new: &N,
    pool: &[N],
    schema: &QuestionnaireSchema,
) -> Result<Vec<(PairKey, SimilarityScore)>, SimilarityError> {
    pool.iter()
        .filter(|other| other.record_id() != record_new.record_id())
        .map(|other| {
            let s = pairwise_similarity(record_new.profile(), other.profile(), schema, None)?;
            Ok((PairKey::new(record_new.record_id().clone(), other.record_id().clone()), s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationCard {
    pub card_id: String,
    pub source_record: String,
    pub stakeholder: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakeholder_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_category: Option<String>,
    pub dimension_agreement: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecommendationQuery {
    pub requester_profile: HarmProfile,
    /// Question ids of the ticked selection boxes. Empty means all.
    pub active_dimensions: Vec<String>,
    pub page: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecommendationPage {
    pub cards: Vec<RecommendationCard>,
    pub page: usize,
    pub has_more: bool,
    pub total: usize,
}

/// Every card the query's neighbors can offer, in seeded random order.
pub fn candidate_cards(
    query: &RecommendationQuery,
    pool: &[PoolMember],
    schema: &QuestionnaireSchema,
) -> Result<Vec<RecommendationCard>, SimilarityError> {
    let dims = (!query.active_dimensions.is_empty()).then_some(query.active_dimensions.as_slice());
    let neighbors =
        top_k_neighbors(&query.requester_profile, pool, schema, DEFAULT_NEIGHBORS, dims)?;

    let mut cards = Vec::new();
    for (id, _) in &neighbors {
        let member = pool.iter().find(|m| &m.record_id == id).expect("neighbor comes from pool");
        let agreement: BTreeMap<String, bool> = schema
            .questions()
            .iter()
            .map(|q| (q.id.clone(), agrees_on(&query.requester_profile, &member.profile, q)))
            .collect();
        for (idx, item) in member.items.iter().enumerate() {
            cards.push(RecommendationCard {
                card_id: format!("{}-{}", member.anonymized_id, idx),
                source_record: member.anonymized_id.clone(),
                stakeholder: item.stakeholder.clone(),
                action: item.action.clone(),
                stakeholder_category: item.stakeholder_category.clone(),
                action_category: item.action_category.clone(),
                dimension_agreement: agreement.clone(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(query.rng_seed);
    cards.shuffle(&mut rng);
    Ok(cards)
}

pub fn assemble_recommendations(
    query: &RecommendationQuery,
    pool: &[PoolMember],
    schema: &QuestionnaireSchema,
) -> Result<RecommendationPage, SimilarityError> {
    let cards = candidate_cards(query, pool, schema)?;
    let total = cards.len();
    let pages = total.div_ceil(PAGE_SIZE);
    if query.page > 0 && query.page >= pages {
        return Err(SimilarityError::PageOutOfRange { page: query.page, pages });
    }
    let start = query.page * PAGE_SIZE;
    let end = (start + PAGE_SIZE).min(total);
    Ok(RecommendationPage {
        cards: cards[start..end].to_vec(),
        page: query.page,
        has_more: end < total,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::SharedItem;
    use crate::schema::{MaxSelections, HARM_TYPE, OFFENDER_COUNT, PLATFORM, RELATIONSHIP};
    use proptest::prelude::*;

    /// Adds 1/n for each agreeing option, one option at a time.
    fn brute_force(a: &HarmProfile, b: &HarmProfile, schema: &QuestionnaireSchema) -> f64 {
        let mut total = 0.0;
        for q in schema.questions() {
            let n = q.options.len() as f64;
            for o in 0..q.options.len() {
                let sa = a.selected(&q.id).is_some_and(|s| s.contains(&o));
                let sb = b.selected(&q.id).is_some_and(|s| s.contains(&o));
                if sa == sb {
                    total += 1.0 / n;
                }
            }
        }
        total / schema.len() as f64
    }

    fn worked_pair(schema: &QuestionnaireSchema) -> (HarmProfile, HarmProfile) {
        let a = HarmProfile::empty(schema)
            .with_answer(HARM_TYPE, [0])
            .with_answer(PLATFORM, [0])
            .with_answer(OFFENDER_COUNT, [0])
            .with_answer(RELATIONSHIP, [0]);
        let b = HarmProfile::empty(schema)
            .with_answer(HARM_TYPE, [0, 1])
            .with_answer(PLATFORM, [0])
            .with_answer(OFFENDER_COUNT, [1])
            .with_answer(RELATIONSHIP, [0]);
        (a, b)
    }

    #[test]
    fn worked_example() {
        let schema = QuestionnaireSchema::default_schema();
        let (a, b) = worked_pair(&schema);
        // (6/7 + 8/8 + 2/4 + 4/4) / 4
        let expected = (6.0 / 7.0 + 1.0 + 0.5 + 1.0) / 4.0;
        assert!((brute_force(&a, &b, &schema) - 0.839_285_714).abs() < 1e-9);
        let s = pairwise_similarity(&a, &b, &schema, None).unwrap().value();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.839_285_714).abs() < 1e-9);
    }

    #[test]
    fn identical_and_opposite() {
        let schema = QuestionnaireSchema::default_schema();
        let (a, _) = worked_pair(&schema);
        assert_eq!(pairwise_similarity(&a, &a, &schema, None).unwrap().value(), 1.0);

        let mut all = HarmProfile::empty(&schema);
        for q in schema.questions() {
            all = all.with_answer(&q.id, 0..q.option_count());
        }
        // not a valid profile (offender count is single-select) but the metric is defined
        let none = HarmProfile::empty(&schema);
        assert_eq!(pairwise_similarity(&all, &none, &schema, None).unwrap().value(), 0.0);
    }

    #[test]
    fn dimension_errors_and_mismatch() {
        let schema = QuestionnaireSchema::default_schema();
        let (a, b) = worked_pair(&schema);
        assert_eq!(
            pairwise_similarity(&a, &b, &schema, Some(&[])),
            Err(SimilarityError::EmptyDimensions)
        );
        assert_eq!(
            pairwise_similarity(&a, &b, &schema, Some(&["age".to_string()])),
            Err(SimilarityError::UnknownDimension("age".into()))
        );
        let foreign = HarmProfile::default().with_answer("colour", [0]);
        assert_eq!(
            pairwise_similarity(&a, &foreign, &schema, None),
            Err(SimilarityError::SchemaMismatch)
        );
        let out_of_range = HarmProfile::empty(&schema).with_answer(HARM_TYPE, [7]);
        assert_eq!(
            pairwise_similarity(&a, &out_of_range, &schema, None),
            Err(SimilarityError::SchemaMismatch)
        );
        // restricted to offender count only: 2 of 4 options agree
        let s = pairwise_similarity(&a, &b, &schema, Some(&[OFFENDER_COUNT.to_string()])).unwrap();
        assert_eq!(s.value(), 0.5);
    }

    struct Stub(RecordId, HarmProfile);
    impl Neighbor for Stub {
        fn record_id(&self) -> &RecordId {
            &self.0
        }
        fn profile(&self) -> &HarmProfile {
            &self.1
        }
    }

    fn two_option_schema() -> QuestionnaireSchema {
        QuestionnaireSchema::new(vec![
            Question {
                id: "q1".into(),
                dimension: "Q1".into(),
                options: vec!["a".into(), "b".into()],
                max_selections: MaxSelections::Unlimited,
            },
            Question {
                id: "q2".into(),
                dimension: "Q2".into(),
                options: vec!["a".into(), "b".into()],
                max_selections: MaxSelections::Unlimited,
            },
        ])
        .unwrap()
    }

    #[test]
    fn top_k_ties_break_by_id() {
        // requester selects nothing; each selected option costs 1/4
        let schema = two_option_schema();
        let req = HarmProfile::empty(&schema);
        let p = |sel: &[(&str, usize)]| {
            let mut p = HarmProfile::empty(&schema);
            for (q, o) in sel {
                p.toggle(q, *o);
            }
            p
        };
        let pool = vec![
            Stub("e".into(), p(&[("q1", 0), ("q1", 1), ("q2", 0), ("q2", 1)])), // 0.0
            Stub("d".into(), p(&[("q1", 0), ("q2", 0), ("q2", 1)])),            // 0.25
            Stub("c".into(), p(&[("q1", 0), ("q2", 0)])),                       // 0.5
            Stub("b".into(), p(&[])),                                           // 1.0
            Stub("a".into(), p(&[])),                                           // 1.0
        ];
        let top = top_k_neighbors(&req, &pool, &schema, 3, None).unwrap();
        let ids: Vec<&str> = top.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        let scores: Vec<f64> = top.iter().map(|(_, s)| s.value()).collect();
        assert_eq!(scores, vec![1.0, 1.0, 0.5]);

        let single = vec![Stub("z".into(), p(&[("q1", 0), ("q1", 1), ("q2", 0), ("q2", 1)]))];
        assert_eq!(top_k_neighbors(&req, &single, &schema, 3, None).unwrap().len(), 1);
        let empty: Vec<Stub> = vec![];
        assert!(top_k_neighbors(&req, &empty, &schema, 3, None).unwrap().is_empty());
    }

    #[test]
    fn store_pairwise_normalizes_keys() {
        let schema = two_option_schema();
        let p = HarmProfile::empty(&schema);
        let new = Stub("m".into(), p.clone());
        let pool = vec![Stub("z".into(), p.clone()), Stub("a".into(), p.clone()), Stub("m".into(), p)];
        let pairs = store_pairwise(&new, &pool, &schema).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, PairKey("m".into(), "z".into()));
        assert_eq!(pairs[1].0, PairKey("a".into(), "m".into()));
        let empty: Vec<Stub> = vec![];
        assert!(store_pairwise(&new, &empty, &schema).unwrap().is_empty());
    }

    fn member(id: &str, profile: HarmProfile, items: usize) -> PoolMember {
        PoolMember {
            record_id: id.into(),
            anonymized_id: format!("anon{id}"),
            profile,
            items: (0..items)
                .map(|i| SharedItem {
                    stakeholder: format!("s{id}{i}"),
                    action: format!("a{id}{i}"),
                    stakeholder_category: None,
                    action_category: None,
                })
                .collect(),
        }
    }

    #[test]
    fn pagination() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema);
        let pool = vec![member("1", p.clone(), 3), member("2", p.clone(), 2), member("3", p.clone(), 1)];
        let mut q = RecommendationQuery {
            requester_profile: p,
            active_dimensions: vec![],
            page: 0,
            rng_seed: 7,
        };
        let first = assemble_recommendations(&q, &pool, &schema).unwrap();
        assert_eq!((first.cards.len(), first.has_more, first.total), (4, true, 6));
        q.page = 1;
        let second = assemble_recommendations(&q, &pool, &schema).unwrap();
        assert_eq!((second.cards.len(), second.has_more), (2, false));
        q.page = 2;
        assert_eq!(
            assemble_recommendations(&q, &pool, &schema),
            Err(SimilarityError::PageOutOfRange { page: 2, pages: 2 })
        );
        q.page = 0;
        let again = assemble_recommendations(&q, &pool, &schema).unwrap();
        assert_eq!(again, first);

        let empty = assemble_recommendations(&q, &[], &schema).unwrap();
        assert!(empty.cards.is_empty() && !empty.has_more);
    }

    #[test]
    fn cards_carry_no_record_id() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema);
        let pool = vec![member("secret-id", p.clone(), 2)];
        let q = RecommendationQuery { requester_profile: p, active_dimensions: vec![], page: 0, rng_seed: 1 };
        let page = assemble_recommendations(&q, &pool, &schema).unwrap();
        for card in &page.cards {
            assert_eq!(card.source_record, "anonsecret-id");
            assert!(card.dimension_agreement.values().all(|&v| v));
        }
    }

    fn arb_schema() -> impl Strategy<Value = QuestionnaireSchema> {
        proptest::collection::vec(2usize..=10, 2..=6).prop_map(|sizes| {
            QuestionnaireSchema::new(
                sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| Question {
                        id: format!("q{i}"),
                        dimension: format!("Q{i}"),
                        options: (0..n).map(|o| format!("o{o}")).collect(),
                        max_selections: MaxSelections::Unlimited,
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    fn arb_profile(schema: &QuestionnaireSchema) -> impl Strategy<Value = HarmProfile> {
        let shape: Vec<(String, usize)> =
            schema.questions().iter().map(|q| (q.id.clone(), q.option_count())).collect();
        let n: usize = shape.iter().map(|(_, n)| n).sum();
        proptest::collection::vec(any::<bool>(), n).prop_map(move |bits| {
            let mut p = HarmProfile::default();
            let mut it = bits.into_iter();
            for (qid, count) in &shape {
                let picked: Vec<usize> = (0..*count).filter(|_| it.next().unwrap()).collect();
                p = p.with_answer(qid, picked);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((schema, a, b) in arb_schema().prop_flat_map(|s| {
            let pa = arb_profile(&s);
            let pb = arb_profile(&s);
            (Just(s), pa, pb)
        })) {
            let s = pairwise_similarity(&a, &b, &schema, None).unwrap().value();
            prop_assert!((s - brute_force(&a, &b, &schema)).abs() < 1e-12);
            prop_assert_eq!(s, pairwise_similarity(&b, &a, &schema, None).unwrap().value());
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(pairwise_similarity(&a, &a, &schema, None).unwrap().value(), 1.0);
        }
    }
}
