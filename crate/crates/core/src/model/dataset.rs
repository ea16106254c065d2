use std::collections::HashSet;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::model::association::AssociationMatrix;
use crate::model::features::FeatureMatrix;
use crate::model::quality::QualityVector;
use crate::rng::{derive_seed, seeded};

/// Questions, their answers, raw quality scores, and the question-answer link.
///
/// Scores are kept raw (vote differences); task-specific targets are derived
/// from them at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub question_features: FeatureMatrix,
    pub answer_features: FeatureMatrix,
    pub question_scores: QualityVector,
    pub answer_scores: QualityVector,
    pub association: AssociationMatrix,
    pub question_ids: Vec<u64>,
    pub answer_ids: Vec<u64>,
}

impl Dataset {
    pub fn new(
        question_features: FeatureMatrix,
        answer_features: FeatureMatrix,
        question_scores: QualityVector,
        answer_scores: QualityVector,
        association: AssociationMatrix,
        question_ids: Vec<u64>,
        answer_ids: Vec<u64>,
    ) -> Result<Self> {
        let n_q = association.n_questions();
        let n_a = association.n_answers();
        let checks = [
            ("question features", question_features.rows(), n_q),
            ("question scores", question_scores.len(), n_q),
            ("question ids", question_ids.len(), n_q),
            ("answer features", answer_features.rows(), n_a),
            ("answer scores", answer_scores.len(), n_a),
            ("answer ids", answer_ids.len(), n_a),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(Error::dim(format!("{what}: {got} rows, expected {want}")));
            }
        }
        check_unique(&question_ids, "question")?;
        check_unique(&answer_ids, "answer")?;
        Ok(Self {
            question_features,
            answer_features,
            question_scores,
            answer_scores,
            association,
            question_ids,
            answer_ids,
        })
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    pub fn n_answers(&self) -> usize {
        self.answer_ids.len()
    }

    /// Row-normalized association; an answerless question is reported by id.
    pub fn normalized_association(&self) -> Result<AssociationMatrix> {
        self.association.row_normalize().map_err(|e| match e {
            Error::EmptyQuestion { question } => Error::EmptyQuestion {
                question: self.question_ids[question as usize],
            },
            other => other,
        })
    }

    /// Sub-dataset holding the given questions (in the given order) and all
    /// of their answers.
    pub fn select_questions(&self, questions: &[usize]) -> Self {
        let mut answers = Vec::new();
        let mut parents = Vec::new();
        for (new_q, &q) in questions.iter().enumerate() {
            for &a in self.association.answers_of(q) {
                answers.push(a);
                parents.push(new_q);
            }
        }
        // keep answers in their original relative order
        let mut order: Vec<usize> = (0..answers.len()).collect();
        order.sort_by_key(|&k| answers[k]);
        let answers: Vec<usize> = order.iter().map(|&k| answers[k]).collect();
        let parents: Vec<usize> = order.iter().map(|&k| parents[k]).collect();
        Self {
            question_features: self.question_features.select_rows(questions),
            answer_features: self.answer_features.select_rows(&answers),
            question_scores: self.question_scores.select(questions),
            answer_scores: self.answer_scores.select(&answers),
            association: AssociationMatrix::from_parents(questions.len(), &parents)
                .expect("parents index the selected questions"),
            question_ids: questions.iter().map(|&q| self.question_ids[q]).collect(),
            answer_ids: answers.iter().map(|&a| self.answer_ids[a]).collect(),
        }
    }

    /// Keeps questions flagged in `keep_question` and answers flagged in
    /// `keep_answer` whose question is kept. Questions left without answers
    /// are dropped too. Original order is preserved on both sides.
    pub(crate) fn retain(&self, keep_question: &[bool], keep_answer: &[bool]) -> Self {
        let answer_kept = |a: usize| keep_answer[a] && keep_question[self.association.parent(a)];
        let questions: Vec<usize> = (0..self.n_questions())
            .filter(|&q| {
                keep_question[q]
                    && self
                        .association
                        .answers_of(q)
                        .iter()
                        .any(|&a| answer_kept(a))
            })
            .collect();
        let mut new_index = vec![usize::MAX; self.n_questions()];
        for (k, &q) in questions.iter().enumerate() {
            new_index[q] = k;
        }
        let answers: Vec<usize> = (0..self.n_answers()).filter(|&a| answer_kept(a)).collect();
        let parents: Vec<usize> = answers
            .iter()
            .map(|&a| new_index[self.association.parent(a)])
            .collect();
        Self {
            question_features: self.question_features.select_rows(&questions),
            answer_features: self.answer_features.select_rows(&answers),
            question_scores: self.question_scores.select(&questions),
            answer_scores: self.answer_scores.select(&answers),
            association: AssociationMatrix::from_parents(questions.len(), &parents)
                .expect("parents index retained questions"),
            question_ids: questions.iter().map(|&q| self.question_ids[q]).collect(),
            answer_ids: answers.iter().map(|&a| self.answer_ids[a]).collect(),
        }
    }

    pub fn split(&self, train_percent: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        split_dataset(self, train_percent, seed)
    }

    pub fn mask_labels(&self, keep_questions: f64, keep_answers: f64, seed: u64) -> Result<Self> {
        mask_labels(self, keep_questions, keep_answers, seed)
    }
}

fn check_unique(ids: &[u64], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invalid(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

/// Number of training questions for a `train_percent` split of `n` questions:
/// `ceil(train_percent / 100 * n)`.
pub fn train_question_count(train_percent: f64, n: usize) -> usize {
    // the epsilon absorbs representation error in e.g. 1% of 10_000
    ((train_percent * n as f64 / 100.0) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded random split by question. The training set takes
/// `ceil(K% * n_questions)` questions with all of their answers; the rest
/// form the test set. Both keep the original question order.
pub fn split_dataset(d: &Dataset, train_percent: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = d.n_questions();
    if !(train_percent > 0.0 && train_percent < 100.0) {
        return Err(Error::invalid(format!(
            "train percentage must lie in (0, 100), got {train_percent}"
        )));
    }
    let n_train = train_question_count(train_percent, n);
    if n_train == 0 || n_train >= n {
        return Err(Error::EmptySplit {
            percent: train_percent,
            questions: n,
        });
    }
    let mut rng = seeded(derive_seed(seed, 0x51_17));
    let mut in_train = vec![false; n];
    for i in index::sample(&mut rng, n, n_train) {
        in_train[i] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((d.select_questions(&train), d.select_questions(&test)))
}

/// Count retained when keeping `fraction` of `n` labels.
pub fn kept_label_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}

/// Drops known scores so that `round(fraction * labeled)` remain on each side,
/// chosen uniformly with a seeded generator. Features and association are
/// untouched.
pub fn mask_labels(
    d: &Dataset,
    keep_questions: f64,
    keep_answers: f64,
    seed: u64,
) -> Result<Dataset> {
    for f in [keep_questions, keep_answers] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid(format!("keep fraction {f} outside [0, 1]")));
        }
    }
    let mut out = d.clone();
    out.question_scores = thin(&d.question_scores, keep_questions, derive_seed(seed, 1));
    out.answer_scores = thin(&d.answer_scores, keep_answers, derive_seed(seed, 2));
    Ok(out)
}

fn thin(q: &QualityVector, fraction: f64, seed: u64) -> QualityVector {
    let labeled: Vec<usize> = q.labeled_indices().collect();
    let keep = kept_label_count(fraction, labeled.len());
    let mut mask = vec![false; q.len()];
    let mut rng = seeded(seed);
    for k in index::sample(&mut rng, labeled.len(), keep) {
        mask[labeled[k]] = true;
    }
    q.with_mask(mask)
}
