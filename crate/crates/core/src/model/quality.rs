use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores at or below this value are low quality.
pub const LOW_QUALITY_MAX: f64 = 0.0;
/// Scores at or above this value are high quality.
pub const HIGH_QUALITY_MIN: f64 = 5.0;

/// Per-post quality values with a mask of which posts carry a known value.
///
/// Depending on context the values are raw vote scores, normalized scores in
/// `[0, 1]`, or class labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVector {
    values: Vec<f64>,
    labeled: Vec<bool>,
}

impl QualityVector {
    /// Values at unlabeled positions are replaced by 0.
    pub fn new(mut values: Vec<f64>, labeled: Vec<bool>) -> Result<Self> {
        if values.len() != labeled.len() {
            return Err(Error::dim(format!(
                "{} values with {} mask entries",
                values.len(),
                labeled.len()
            )));
        }
        if let Some(i) = (0..values.len()).find(|&i| labeled[i] && !values[i].is_finite()) {
            return Err(Error::NonFinite(format!("quality value {i}")));
        }
        for (v, &l) in values.iter_mut().zip(&labeled) {
            if !l {
                *v = 0.0;
            }
        }
        Ok(Self { values, labeled })
    }

    pub fn labeled(values: Vec<f64>) -> Self {
        let mask = vec![true; values.len()];
        Self::new(values, mask).expect("finite values")
    }

    pub fn unlabeled(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            labeled: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.labeled
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.labeled[i]
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.iter().filter(|&&b| b).count()
    }

    pub fn labeled_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.labeled[i])
    }

    /// Values at labeled positions, in order.
    pub fn labeled_values(&self) -> Vec<f64> {
        self.labeled_indices().map(|i| self.values[i]).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            labeled: indices.iter().map(|&i| self.labeled[i]).collect(),
        }
    }

    /// Same values under a narrower mask; newly hidden values become 0.
    pub(crate) fn with_mask(&self, labeled: Vec<bool>) -> Self {
        debug_assert_eq!(labeled.len(), self.len());
        Self::new(self.values.clone(), labeled).expect("values already checked")
    }
}

/// Affine map of raw scores onto `[0, 1]` using training extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreScaling {
    pub min: f64,
    pub max: f64,
}

impl ScoreScaling {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateScores { min, max });
        }
        Ok(Self { min, max })
    }

    /// Extremes of the labeled raw training scores.
    pub fn fit(raw: &QualityVector) -> Result<Self> {
        let values = raw.labeled_values();
        if values.is_empty() {
            return Err(Error::Empty("labeled training scores"));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(min, max)
    }

    pub fn normalize(&self, v: f64) -> f64 {
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, s: f64) -> f64 {
        self.min + s * (self.max - self.min)
    }
}

/// Maps raw scores to `[0, 1]` with `(v - min) / (max - min)`, clamping test
/// scores that fall outside the training range.
pub fn normalize_scores(raw: &QualityVector, min: f64, max: f64) -> Result<QualityVector> {
    let scaling = ScoreScaling::new(min, max)?;
    let values = raw
        .values()
        .iter()
        .zip(raw.mask())
        .map(|(&v, &l)| if l { scaling.normalize(v) } else { 0.0 })
        .collect();
    QualityVector::new(values, raw.mask().to_vec())
}

/// Class label for one raw score: `-1` at or below 0, `+1` at or above 5,
/// `None` in between.
pub fn score_label(score: f64) -> Option<f64> {
    if score <= LOW_QUALITY_MAX {
        Some(-1.0)
    } else if score >= HIGH_QUALITY_MIN {
        Some(1.0)
    } else {
        None
    }
}

/// Converts raw scores into `{-1, +1}` labels. Scores strictly between the
/// thresholds, and posts already unlabeled, come out unlabeled.
pub fn threshold_labels(raw: &QualityVector) -> QualityVector {
    let (values, labeled) = raw
        .values()
        .iter()
        .zip(raw.mask())
        .map(|(&v, &known)| match (known, score_label(v)) {
            (true, Some(label)) => (label, true),
            _ => (0.0, false),
        })
        .unzip();
    QualityVector { values, labeled }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_map_and_clamp() {
        let raw = QualityVector::labeled(vec![-2.0, 8.0, 3.0, 10.0, -7.0]);
        let n = normalize_scores(&raw, -2.0, 8.0).unwrap();
        assert_eq!(n.values(), &[0.0, 1.0, 0.5, 1.0, 0.0]);
    }

    #[test]
    fn degenerate_range_rejected() {
        let raw = QualityVector::labeled(vec![1.0]);
        assert!(matches!(
            normalize_scores(&raw, 4.0, 4.0),
            Err(Error::DegenerateScores { .. })
        ));
    }

    #[test]
    fn thresholds() {
        let raw = QualityVector::labeled(vec![0.0, 5.0, 3.0, -4.0, 1.0, 4.0, 12.0]);
        let l = threshold_labels(&raw);
        assert_eq!(l.mask(), &[true, true, false, true, false, false, true]);
        assert_eq!(l.value(0), -1.0);
        assert_eq!(l.value(1), 1.0);
        assert_eq!(l.value(6), 1.0);
    }

    #[test]
    fn unlabeled_stays_unlabeled() {
        let raw = QualityVector::new(vec![9.0, 9.0], vec![false, true]).unwrap();
        assert_eq!(threshold_labels(&raw).mask(), &[false, true]);
    }

    #[test]
    fn scaling_fit_uses_labeled_only() {
        let raw = QualityVector::new(vec![100.0, 1.0, 3.0], vec![false, true, true]).unwrap();
        let s = ScoreScaling::fit(&raw).unwrap();
        assert_eq!((s.min, s.max), (1.0, 3.0));
    }
}
