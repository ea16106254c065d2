//! Error metrics, correlation and score-bin analyses.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::Dataset;

fn check_pair(a: &[f64], b: &[f64], what: &'static str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!(
            "{} predictions against {} targets",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty(what));
    }
    Ok(())
}

/// Root mean square error.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(predicted, actual, "rmse input")?;
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

/// Fraction of mismatched `±1` labels.
pub fn prediction_error(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(predicted, actual, "prediction error input")?;
    if let Some(v) = predicted.iter().chain(actual).find(|v| v.abs() != 1.0) {
        return Err(Error::invalid(format!("labels must be -1 or +1, got {v}")));
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / predicted.len() as f64)
}

/// `(1 - error) / seconds`.
pub fn utility_ratio(error: f64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0) {
        return Err(Error::invalid(format!(
            "wall-clock time must be positive, got {seconds}"
        )));
    }
    Ok((1.0 - error) / seconds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    pub n: usize,
    /// `r sqrt((n - 2) / (1 - r^2))`.
    pub t: f64,
    /// Two-sided p-value from Student's t with `n - 2` degrees of freedom.
    /// NaN when `n = 2`.
    pub p_value: f64,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::dim(format!(
            "{} values against {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "correlation needs at least 2 pairs, got {n}"
        )));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first variable"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second variable"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let rest = 1.0 - r * r;
    let t = if rest == 0.0 {
        r.signum() * f64::INFINITY
    } else {
        r * (df / rest).sqrt()
    };
    let p_value = if n == 2 {
        f64::NAN
    } else if t.is_infinite() {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * dist.cdf(-t.abs())
    };
    Ok(Pearson { r, n, t, p_value })
}

pub const BIN_COUNT: usize = 11;

/// Ranges of the score bins, in order.
pub const BIN_LABELS: [&str; BIN_COUNT] = [
    "s<0", "s=0", "s=1", "s=2", "s=3", "s=4", "s=5", "6..10", "11..50", "51..100", "s>100",
];

/// 1-based score bin.
pub fn bin_score(s: i64) -> usize {
    match s {
        i64::MIN..=-1 => 1,
        0..=5 => s as usize + 2,
        6..=10 => 8,
        11..=50 => 9,
        51..=100 => 10,
        _ => 11,
    }
}

fn bin_of(score: f64) -> usize {
    bin_score(score.round() as i64)
}

/// Per-bin counts of a score list, index 0 holding bin 1.
pub fn score_histogram(scores: &[f64]) -> [u64; BIN_COUNT] {
    let mut h = [0; BIN_COUNT];
    for &s in scores {
        h[bin_of(s) - 1] += 1;
    }
    h
}

/// Answer-bin counts grouped by the bin of each answer's question.
#[derive(Debug, Clone, PartialEq)]
pub struct BinTable {
    pub counts: [[u64; BIN_COUNT]; BIN_COUNT],
}

impl BinTable {
    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Row `i` as fractions; all zeros for an empty row.
    pub fn row(&self, i: usize) -> [f64; BIN_COUNT] {
        let total = self.row_total(i);
        let mut out = [0.0; BIN_COUNT];
        if total > 0 {
            for (o, &c) in out.iter_mut().zip(&self.counts[i]) {
                *o = c as f64 / total as f64;
            }
        }
        out
    }

    /// Zero-based indices of question bins with no answers.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..BIN_COUNT).filter(|&i| self.row_total(i) == 0).collect()
    }

    /// Mass-weighted mean of `|i - j|` over all counted pairs.
    pub fn mean_bin_distance(&self) -> f64 {
        let mut mass = 0u64;
        let mut weighted = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                mass += c;
                weighted += c as f64 * i.abs_diff(j) as f64;
            }
        }
        if mass == 0 {
            0.0
        } else {
            weighted / mass as f64
        }
    }
}

/// Distribution of answer bins per question bin over raw scores. Posts
/// without a known score are skipped.
pub fn bin_distribution(d: &Dataset) -> BinTable {
    let mut counts = [[0; BIN_COUNT]; BIN_COUNT];
    for j in 0..d.n_answers() {
        let q = d.association.parent(j);
        if !d.answer_scores.is_labeled(j) || !d.question_scores.is_labeled(q) {
            continue;
        }
        let qb = bin_of(d.question_scores.value(q)) - 1;
        let ab = bin_of(d.answer_scores.value(j)) - 1;
        counts[qb][ab] += 1;
    }
    BinTable { counts }
}

/// How a question's answers are summarized when pairing with the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerSummary {
    Average,
    Maximum,
}

/// `(question score, summarized answer score)` for every question with a known
/// score and at least one scored answer.
pub fn question_answer_pairs(d: &Dataset, summary: AnswerSummary) -> (Vec<f64>, Vec<f64>) {
    let mut qs = Vec::new();
    let mut agg = Vec::new();
    for i in 0..d.n_questions() {
        if !d.question_scores.is_labeled(i) {
            continue;
        }
        let scores: Vec<f64> = d
            .association
            .answers_of(i)
            .iter()
            .filter(|&&j| d.answer_scores.is_labeled(j))
            .map(|&j| d.answer_scores.value(j))
            .collect();
        if scores.is_empty() {
            continue;
        }
        qs.push(d.question_scores.value(i));
        agg.push(match summary {
            AnswerSummary::Average => scores.iter().sum::<f64>() / scores.len() as f64,
            AnswerSummary::Maximum => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    (qs, agg)
}
