use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::schema::QuestionnaireSchema;

/// Wire form of a profile: question id to selected option labels.
pub type LabeledProfile = BTreeMap<String, Vec<String>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("option index {index} out of range for question `{question}` ({options} options)")]
    IndexOutOfRange {
        question: String,
        index: usize,
        options: usize,
    },
    #[error("question `{question}` allows a single selection, got {selected}")]
    TooManySelections { question: String, selected: usize },
    #[error("question `{question}` has no option `{label}`")]
    UnknownOption { question: String, label: String },
}

/// One survivor's multiple-choice answers, stored as option indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarmProfile {
    answers: BTreeMap<String, BTreeSet<usize>>,
}

impl HarmProfile {
    /// A profile with an empty selection for every question.
    pub fn empty(schema: &QuestionnaireSchema) -> Self {
        Self {
            answers: schema.question_ids().map(|id| (id.to_string(), BTreeSet::new())).collect(),
        }
    }

    pub fn with_answer<I>(mut self, question: &str, indices: I) -> Self
    where
        I: IntoIterator<Item = usize>,
    {
        self.answers.insert(question.to_string(), indices.into_iter().collect());
        self
    }

    pub fn answers(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.answers
    }

    pub fn selected(&self, question: &str) -> Option<&BTreeSet<usize>> {
        self.answers.get(question)
    }

    /// Missing questions count as unanswered.
    pub fn is_selected(&self, question: &str, option: usize) -> bool {
        self.answers.get(question).is_some_and(|s| s.contains(&option))
    }

    /// Toggle one option. Does not validate.
    pub fn toggle(&mut self, question: &str, option: usize) {
        let set = self.answers.entry(question.to_string()).or_default();
        if !set.remove(&option) {
            set.insert(option);
        }
    }

    pub fn from_labels(
        labeled: &LabeledProfile,
        schema: &QuestionnaireSchema,
    ) -> Result<Self, ProfileError> {
        let mut profile = HarmProfile::empty(schema);
        for (qid, labels) in labeled {
            let question = schema
                .question(qid)
                .ok_or_else(|| ProfileError::UnknownQuestion(qid.clone()))?;
            let mut set = BTreeSet::new();
            for label in labels {
                let idx = question.option_index(label).ok_or_else(|| ProfileError::UnknownOption {
                    question: qid.clone(),
                    label: label.clone(),
                })?;
                set.insert(idx);
            }
            profile.answers.insert(qid.clone(), set);
        }
        validate_profile(profile, schema)
    }

    /// Labels in schema option order. Indices outside the schema are dropped.
    pub fn to_labels(&self, schema: &QuestionnaireSchema) -> LabeledProfile {
        schema
            .questions()
            .iter()
            .map(|q| {
                let labels = self
                    .answers
                    .get(&q.id)
                    .into_iter()
                    .flatten()
                    .filter_map(|&i| q.options.get(i).cloned())
                    .collect();
                (q.id.clone(), labels)
            })
            .collect()
    }
}

/// Checks a profile against the schema. Questions the profile leaves out
/// are filled in as empty selections, so the result always carries one
/// entry per schema question.
pub fn validate_profile(
    mut profile: HarmProfile,
    schema: &QuestionnaireSchema,
) -> Result<HarmProfile, ProfileError> {
    for (qid, selected) in &profile.answers {
        let question = schema
            .question(qid)
            .ok_or_else(|| ProfileError::UnknownQuestion(qid.clone()))?;
        if let Some(&index) = selected.iter().find(|&&i| i >= question.option_count()) {
            return Err(ProfileError::IndexOutOfRange {
                question: qid.clone(),
                index,
                options: question.option_count(),
            });
        }
        if !question.max_selections.allows(selected.len()) {
            return Err(ProfileError::TooManySelections {
                question: qid.clone(),
                selected: selected.len(),
            });
        }
    }
    for qid in schema.question_ids() {
        profile.answers.entry(qid.to_string()).or_default();
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{HARM_TYPE, OFFENDER_COUNT, PLATFORM};
    use proptest::prelude::*;

    #[test]
    fn empty_answers_are_valid() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema);
        assert_eq!(validate_profile(p.clone(), &schema).unwrap(), p);
        // entirely missing entries are normalized to empty sets
        assert_eq!(validate_profile(HarmProfile::default(), &schema).unwrap(), p);
    }

    #[test]
    fn index_out_of_range() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema).with_answer(HARM_TYPE, [9]);
        assert_eq!(
            validate_profile(p, &schema),
            Err(ProfileError::IndexOutOfRange { question: HARM_TYPE.into(), index: 9, options: 7 })
        );
    }

    #[test]
    fn single_select_enforced() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema).with_answer(OFFENDER_COUNT, [0, 1]);
        assert_eq!(
            validate_profile(p, &schema),
            Err(ProfileError::TooManySelections { question: OFFENDER_COUNT.into(), selected: 2 })
        );
        let multi = HarmProfile::empty(&schema).with_answer(PLATFORM, [0, 1, 2]);
        assert!(validate_profile(multi, &schema).is_ok());
    }

    #[test]
    fn unknown_question_and_label() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema).with_answer("age", [0]);
        assert_eq!(validate_profile(p, &schema), Err(ProfileError::UnknownQuestion("age".into())));

        let mut labeled = LabeledProfile::new();
        labeled.insert(PLATFORM.into(), vec!["carrier pigeon".into()]);
        assert!(matches!(
            HarmProfile::from_labels(&labeled, &schema),
            Err(ProfileError::UnknownOption { .. })
        ));
    }

    #[test]
    fn labels_round_trip() {
        let schema = QuestionnaireSchema::default_schema();
        let p = HarmProfile::empty(&schema)
            .with_answer(HARM_TYPE, [0, 3])
            .with_answer(OFFENDER_COUNT, [2]);
        let labels = p.to_labels(&schema);
        assert_eq!(labels[HARM_TYPE], vec!["offensive name-calling", "sexual harassment"]);
        assert_eq!(labels[OFFENDER_COUNT], vec!["6-10"]);
        assert_eq!(HarmProfile::from_labels(&labels, &schema).unwrap(), p);
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(picks in proptest::collection::vec((0usize..4, 0usize..10), 0..12)) {
            let schema = QuestionnaireSchema::default_schema();
            let mut p = HarmProfile::empty(&schema);
            for (q, o) in picks {
                let qid = &schema.questions()[q].id;
                p.toggle(qid, o);
            }
            if let Ok(valid) = validate_profile(p, &schema) {
                prop_assert_eq!(validate_profile(valid.clone(), &schema), Ok(valid));
            }
        }
    }
}
