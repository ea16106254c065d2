//! Per-post features of questions and answers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{AssociationMatrix, Dataset, FeatureMatrix, QualityVector};
use crate::pipeline::preprocess::Corpus;

pub const QUESTION_FEATURES: [&str; 7] = [
    "reputation",
    "previous_questions",
    "answers_in_window",
    "favorites_in_window",
    "comments_in_window",
    "body_length",
    "title_length",
];

pub const ANSWER_FEATURES: [&str; 4] = [
    "reputation",
    "previous_answers",
    "question_comments_in_window",
    "body_length",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Use reputation 0 for users whose account is newer than the post.
    pub zero_reputation_for_later_users: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractCounters {
    /// Posts whose owner has no user record; their reputation is 0.
    pub missing_users: u64,
    pub later_users_zeroed: u64,
}

/// Builds the dataset of raw scores and features from a preprocessed corpus.
///
/// Reputation is the user's reputation at dump time; the dump holds no
/// history.
pub fn extract_features(c: &Corpus, opts: &ExtractOptions) -> Result<(Dataset, ExtractCounters)> {
    let mut counters = ExtractCounters::default();
    let mut reputation = |owner: Option<u64>, created: i64| -> f64 {
        match owner.and_then(|o| c.users.get(&o)) {
            None => {
                counters.missing_users += 1;
                0.0
            }
            Some(u)
                if opts.zero_reputation_for_later_users
                    && u.created.is_some_and(|t| t > created) =>
            {
                counters.later_users_zeroed += 1;
                0.0
            }
            Some(u) => u.reputation as f64,
        }
    };
    let q_rows: Vec<Vec<f64>> = c
        .questions
        .iter()
        .map(|q| {
            vec![
                reputation(q.post.owner, q.post.created),
                q.previous_questions as f64,
                q.answers_in_window as f64,
                q.favorites_in_window as f64,
                q.comments_in_window as f64,
                q.post.body_length as f64,
                q.post.title_length.unwrap_or(0) as f64,
            ]
        })
        .collect();
    let a_rows: Vec<Vec<f64>> = c
        .answers
        .iter()
        .map(|a| {
            vec![
                reputation(a.post.owner, a.post.created),
                a.previous_answers as f64,
                c.questions[a.question].comments_in_window as f64,
                a.post.body_length as f64,
            ]
        })
        .collect();
    let names = |n: &[&str]| n.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let parents: Vec<usize> = c.answers.iter().map(|a| a.question).collect();
    let d = Dataset::new(
        FeatureMatrix::from_rows(names(&QUESTION_FEATURES), &q_rows)?,
        FeatureMatrix::from_rows(names(&ANSWER_FEATURES), &a_rows)?,
        QualityVector::labeled(c.questions.iter().map(|q| q.post.score as f64).collect()),
        QualityVector::labeled(c.answers.iter().map(|a| a.post.score as f64).collect()),
        AssociationMatrix::from_parents(c.questions.len(), &parents)?,
        c.questions.iter().map(|q| q.post.id).collect(),
        c.answers.iter().map(|a| a.post.id).collect(),
    )?;
    Ok((d, counters))
}
