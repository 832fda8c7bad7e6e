//! The questionnaire that describes a harm experience.
//!
//! Each question is one harm dimension with an ordered option list. The
//! number of questions and the option count of each question drive the
//! similarity metric, so the schema is shared by every profile that gets
//! compared.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HARM_TYPE: &str = "harm_type";
pub const PLATFORM: &str = "platform";
pub const OFFENDER_COUNT: &str = "offender_count";
pub const RELATIONSHIP: &str = "relationship";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxSelections {
    One,
    Unlimited,
}

impl MaxSelections {
    pub fn allows(self, count: usize) -> bool {
        match self {
            MaxSelections::One => count <= 1,
            MaxSelections::Unlimited => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub dimension: String,
    pub options: Vec<String>,
    pub max_selections: MaxSelections,
}

impl Question {
    pub fn option_count(&self) -> usize {
        self.options.len()
    }

    pub fn option_index(&self, label: &str) -> Option<usize> {
        self.options.iter().position(|o| o == label)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema has no questions")]
    Empty,
    #[error("duplicate question id `{0}`")]
    DuplicateQuestion(String),
    #[error("question `{question}` repeats option `{option}`")]
    DuplicateOption { question: String, option: String },
    #[error("question `{0}` needs at least two options")]
    TooFewOptions(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionnaireSchema {
    questions: Vec<Question>,
}

impl QuestionnaireSchema {
    pub fn new(questions: Vec<Question>) -> Result<Self, SchemaError> {
        if questions.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut ids = HashSet::new();
        for q in &questions {
            if !ids.insert(q.id.as_str()) {
                return Err(SchemaError::DuplicateQuestion(q.id.clone()));
            }
            if q.options.len() < 2 {
                return Err(SchemaError::TooFewOptions(q.id.clone()));
            }
            let mut seen = HashSet::new();
            for o in &q.options {
                if !seen.insert(o.as_str()) {
                    return Err(SchemaError::DuplicateOption {
                        question: q.id.clone(),
                        option: o.clone(),
                    });
                }
            }
        }
        Ok(Self { questions })
    }

    /// The four harm dimensions offered to survivors: type of harm,
    /// platform, number of offenders and relationship with the offender(s).
    pub fn default_schema() -> Self {
        fn q(id: &str, dimension: &str, options: &[&str], max: MaxSelections) -> Question {
            Question {
                id: id.to_string(),
                dimension: dimension.to_string(),
                options: options.iter().map(|s| s.to_string()).collect(),
                max_selections: max,
            }
        }
        Self::new(vec![
            q(
                HARM_TYPE,
                "Type of harm",
                &[
                    "offensive name-calling",
                    "public shaming",
                    "harassment",
                    "sexual harassment",
                    "stalking",
                    "physical threat",
                    "other",
                ],
                MaxSelections::Unlimited,
            ),
            q(
                PLATFORM,
                "Platform",
                &[
                    "social media site",
                    "forum site",
                    "messaging app",
                    "online gaming",
                    "online dating app",
                    "personal email",
                    "in-person",
                    "other",
                ],
                MaxSelections::Unlimited,
            ),
            q(
                OFFENDER_COUNT,
                "Number of offenders",
                &["1", "2-5", "6-10", ">10"],
                MaxSelections::One,
            ),
            q(
                RELATIONSHIP,
                "Relationship with offender(s)",
                &["strangers", "acquaintances", "friends", "other"],
                MaxSelections::Unlimited,
            ),
        ])
        .expect("default schema is well-formed")
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    /// Number of questions.
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &str> {
        self.questions.iter().map(|q| q.id.as_str())
    }
}

impl<'de> Deserialize<'de> for QuestionnaireSchema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            questions: Vec<Question>,
        }
        let raw = Raw::deserialize(deserializer)?;
        QuestionnaireSchema::new(raw.questions).map_err(serde::de::Error::custom)
    }
}
