//! Synthetic question/answer data with a controllable quality correlation.
//!
//! Each question draws a latent quality `q ~ N(0, 1)`. Its answers draw
//! `a = (ρ q + (1 - ρ) ε) / sqrt(ρ² + (1 - ρ)²)` with `ε ~ N(0, 1)`, so answer
//! latents are unit-variance too. Raw scores are `round(2.5 + 4.5 z)` of each
//! latent `z`, which puts roughly a third of the posts at or below 0 and a
//! third at or above 5. Feature `k` of a post is `w_k z + noise · N(0, 1)` with
//! loadings `w_k` drawn once per dataset from `[0.3, 1.0]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssociationMatrix, Dataset, FeatureMatrix, QualityVector};
use crate::pipeline::csv_io::{ANSWER_FEATURE_PREFIX, QUESTION_FEATURE_PREFIX};
use crate::pipeline::extract::{ANSWER_FEATURES, QUESTION_FEATURES};
use crate::rng::{derive_seed, seeded};

pub const SCORE_CENTER: f64 = 2.5;
pub const SCORE_SPREAD: f64 = 4.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub questions: usize,
    pub answers_min: usize,
    pub answers_max: usize,
    pub rho: f64,
    pub noise: f64,
    pub question_features: usize,
    pub answer_features: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            questions: 1000,
            answers_min: 1,
            answers_max: 5,
            rho: 0.6,
            noise: 1.0,
            question_features: QUESTION_FEATURES.len(),
            answer_features: ANSWER_FEATURES.len(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.questions == 0 {
            return Err(Error::invalid("synthetic data needs at least one question"));
        }
        if self.answers_min == 0 || self.answers_min > self.answers_max {
            return Err(Error::invalid(format!(
                "answers per question must satisfy 1 <= min <= max, got {}..{}",
                self.answers_min, self.answers_max
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        if self.question_features == 0 || self.answer_features == 0 {
            return Err(Error::invalid("feature dimensions must be positive"));
        }
        Ok(())
    }
}

/// Canonical names when the dimension matches the standard feature set,
/// numbered generic names otherwise.
fn schema(d: usize, canonical: &[&str], prefix: &str) -> Vec<String> {
    if d == canonical.len() {
        canonical.iter().map(|s| s.to_string()).collect()
    } else {
        (0..d).map(|k| format!("{prefix}{k}")).collect()
    }
}

pub fn raw_score(latent: f64) -> f64 {
    (SCORE_CENTER + SCORE_SPREAD * latent).round()
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded(derive_seed(spec.seed, 0));
    let mut loading_rng = seeded(derive_seed(spec.seed, 1));
    let mut loadings = |d: usize| -> Vec<f64> {
        (0..d)
            .map(|_| loading_rng.random_range(0.3..=1.0))
            .collect()
    };
    let wq = loadings(spec.question_features);
    let wa = loadings(spec.answer_features);

    let rho = spec.rho;
    let norm = (rho * rho + (1.0 - rho) * (1.0 - rho)).sqrt();
    let mut q_latent = Vec::with_capacity(spec.questions);
    let mut a_latent = Vec::new();
    let mut parents = Vec::new();
    for i in 0..spec.questions {
        let q: f64 = rng.sample(StandardNormal);
        q_latent.push(q);
        let n = rng.random_range(spec.answers_min..=spec.answers_max);
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            a_latent.push((rho * q + (1.0 - rho) * e) / norm);
            parents.push(i);
        }
    }
    let mut features = |latent: &[f64], w: &[f64]| -> Vec<Vec<f64>> {
        latent
            .iter()
            .map(|&z| {
                w.iter()
                    .map(|&wk| {
                        let e: f64 = rng.sample(StandardNormal);
                        wk * z + spec.noise * e
                    })
                    .collect()
            })
            .collect()
    };
    let xq = features(&q_latent, &wq);
    let xa = features(&a_latent, &wa);
    let n_q = spec.questions as u64;
    Dataset::new(
        FeatureMatrix::from_rows(
            schema(
                spec.question_features,
                &QUESTION_FEATURES,
                QUESTION_FEATURE_PREFIX,
            ),
            &xq,
        )?,
        FeatureMatrix::from_rows(
            schema(
                spec.answer_features,
                &ANSWER_FEATURES,
                ANSWER_FEATURE_PREFIX,
            ),
            &xa,
        )?,
        QualityVector::labeled(q_latent.iter().copied().map(raw_score).collect()),
        QualityVector::labeled(a_latent.iter().copied().map(raw_score).collect()),
        AssociationMatrix::from_parents(spec.questions, &parents)?,
        (1..=n_q).collect(),
        (n_q + 1..=n_q + parents.len() as u64).collect(),
    )
}
