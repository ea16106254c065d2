//! Down-sampling of the low-score bins.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::model::{Dataset, QualityVector};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebalanceCounters {
    pub zero_questions_cut: u64,
    pub one_questions_cut: u64,
    pub zero_answers_cut: u64,
    pub one_answers_cut: u64,
    /// Surviving answers removed because their question was cut.
    pub orphaned_answers: u64,
    /// Surviving questions removed because all their answers were cut.
    pub emptied_questions: u64,
}

/// Marks `floor(numer / denom * count)` of the posts scoring `score` for
/// removal, chosen uniformly. Returns the number cut.
fn cut(
    scores: &QualityVector,
    score: f64,
    numer: usize,
    denom: usize,
    seed: u64,
    keep: &mut [bool],
) -> u64 {
    let pool: Vec<usize> = scores
        .labeled_indices()
        .filter(|&i| scores.value(i) == score)
        .collect();
    let n_cut = pool.len() * numer / denom;
    let mut rng = seeded(seed);
    for k in index::sample(&mut rng, pool.len(), n_cut) {
        keep[pool[k]] = false;
    }
    n_cut as u64
}

/// Cuts two thirds of the 0-score and half of the 1-score questions, then the
/// same fractions of the 0- and 1-score answers (drawn from all answers),
/// then removes answers whose question was cut.
///
/// Questions whose answers were all cut are removed as well, so every
/// question in the result keeps at least one answer.
pub fn rebalance(d: &Dataset, seed: u64) -> (Dataset, RebalanceCounters) {
    let mut keep_q = vec![true; d.n_questions()];
    let mut keep_a = vec![true; d.n_answers()];
    let mut c = RebalanceCounters {
        zero_questions_cut: cut(
            &d.question_scores,
            0.0,
            2,
            3,
            derive_seed(seed, 10),
            &mut keep_q,
        ),
        one_questions_cut: cut(
            &d.question_scores,
            1.0,
            1,
            2,
            derive_seed(seed, 11),
            &mut keep_q,
        ),
        zero_answers_cut: cut(
            &d.answer_scores,
            0.0,
            2,
            3,
            derive_seed(seed, 12),
            &mut keep_a,
        ),
        one_answers_cut: cut(
            &d.answer_scores,
            1.0,
            1,
            2,
            derive_seed(seed, 13),
            &mut keep_a,
        ),
        ..Default::default()
    };
    c.orphaned_answers = (0..d.n_answers())
        .filter(|&a| keep_a[a] && !keep_q[d.association.parent(a)])
        .count() as u64;
    let out = d.retain(&keep_q, &keep_a);
    let surviving_questions = keep_q.iter().filter(|&&k| k).count();
    c.emptied_questions = (surviving_questions - out.n_questions()) as u64;
    (out, c)
}
