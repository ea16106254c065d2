//! Answered-question filter and the early time window.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::dump::{day_of, PostKind, RawDump, RawPost, RawUser};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionRecord {
    pub post: RawPost,
    pub answers_in_window: usize,
    pub favorites_in_window: usize,
    pub comments_in_window: usize,
    /// Questions by the same user created strictly earlier.
    pub previous_questions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerRecord {
    pub post: RawPost,
    /// Index into [`Corpus::questions`].
    pub question: usize,
    /// Answers by the same user created strictly earlier.
    pub previous_answers: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessCounters {
    pub duplicate_posts: u64,
    /// Answers whose question is not among the parsed questions.
    pub orphan_answers: u64,
    pub answers_outside_window: u64,
    pub unanswered_questions: u64,
    pub comments_outside_window: u64,
    /// Comments on posts other than kept questions.
    pub comments_elsewhere: u64,
    pub favorites_outside_window: u64,
    pub favorites_elsewhere: u64,
}

/// Kept questions (each with at least one in-window answer) and their
/// in-window answers, in dump order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub questions: Vec<QuestionRecord>,
    pub answers: Vec<AnswerRecord>,
    pub users: HashMap<u64, RawUser>,
    pub window_seconds: i64,
    pub counters: PreprocessCounters,
}

/// Per-user sorted creation times, for counting earlier posts.
fn history(posts: &[&RawPost]) -> HashMap<u64, Vec<i64>> {
    let mut h: HashMap<u64, Vec<i64>> = HashMap::new();
    for p in posts {
        if let Some(owner) = p.owner {
            h.entry(owner).or_default().push(p.created);
        }
    }
    h.values_mut().for_each(|v| v.sort_unstable());
    h
}

fn earlier(h: &HashMap<u64, Vec<i64>>, p: &RawPost) -> usize {
    p.owner
        .and_then(|o| h.get(&o))
        .map_or(0, |times| times.partition_point(|&t| t < p.created))
}

pub fn preprocess(raw: &RawDump, window_hours: f64) -> Result<Corpus> {
    if !(window_hours > 0.0 && window_hours.is_finite()) {
        return Err(Error::invalid(format!(
            "window must be positive, got {window_hours} hours"
        )));
    }
    let window = (window_hours * 3600.0).round() as i64;
    let mut counters = PreprocessCounters::default();

    let mut seen = std::collections::HashSet::new();
    let mut all_questions = Vec::new();
    let mut all_answers = Vec::new();
    for p in &raw.posts {
        if !seen.insert(p.id) {
            counters.duplicate_posts += 1;
            continue;
        }
        match p.kind {
            PostKind::Question => all_questions.push(p),
            PostKind::Answer => all_answers.push(p),
        }
    }
    let question_history = history(&all_questions);
    let answer_history = history(&all_answers);
    let question_index: HashMap<u64, usize> = all_questions
        .iter()
        .enumerate()
        .map(|(k, q)| (q.id, k))
        .collect();

    // in-window answers per parsed question
    let mut answered: Vec<Vec<&RawPost>> = vec![Vec::new(); all_questions.len()];
    for a in &all_answers {
        let Some(&k) = a.parent_id.and_then(|id| question_index.get(&id)) else {
            counters.orphan_answers += 1;
            continue;
        };
        let delay = a.created - all_questions[k].created;
        if (0..=window).contains(&delay) {
            answered[k].push(a);
        } else {
            counters.answers_outside_window += 1;
        }
    }

    let mut questions = Vec::new();
    let mut answers = Vec::new();
    let mut kept_index = HashMap::new();
    for (k, q) in all_questions.iter().enumerate() {
        if answered[k].is_empty() {
            counters.unanswered_questions += 1;
            continue;
        }
        let qi = questions.len();
        kept_index.insert(q.id, qi);
        questions.push(QuestionRecord {
            post: (*q).clone(),
            answers_in_window: answered[k].len(),
            favorites_in_window: 0,
            comments_in_window: 0,
            previous_questions: earlier(&question_history, q),
        });
        for a in &answered[k] {
            answers.push(AnswerRecord {
                post: (*a).clone(),
                question: qi,
                previous_answers: earlier(&answer_history, a),
            });
        }
    }
    // answers follow dump order, not question order
    let dump_order: HashMap<u64, usize> = all_answers
        .iter()
        .enumerate()
        .map(|(k, a)| (a.id, k))
        .collect();
    answers.sort_by_key(|a| dump_order[&a.post.id]);

    for c in &raw.comments {
        let Some(&qi) = kept_index.get(&c.post_id) else {
            counters.comments_elsewhere += 1;
            continue;
        };
        let delay = c.time - questions[qi].post.created;
        if (0..=window).contains(&delay) {
            questions[qi].comments_in_window += 1;
        } else {
            counters.comments_outside_window += 1;
        }
    }
    for f in &raw.favorites {
        let Some(&qi) = kept_index.get(&f.post_id) else {
            counters.favorites_elsewhere += 1;
            continue;
        };
        // favorites carry only a date
        let created = questions[qi].post.created;
        let day = day_of(f.time);
        if (day_of(created)..=day_of(created + window)).contains(&day) {
            questions[qi].favorites_in_window += 1;
        } else {
            counters.favorites_outside_window += 1;
        }
    }

    Ok(Corpus {
        questions,
        answers,
        users: raw.users.iter().map(|u| (u.id, *u)).collect(),
        window_seconds: window,
        counters,
    })
}
