//! Independent question-only or answer-only linear predictors.
//!
//! The objective for one side is
//!
//! ```text
//! L(β) = Σ_{labeled i} g(X(i,:) β, y(i)) + λ ‖β‖²
//! ```
//!
//! With the square loss this is ridge regression and has the closed form
//! `β = (X'X + λI)⁻¹ X'y`, computed here over labeled rows only. The general
//! loss form is minimized by fixed-step batch gradient descent.

use crate::error::{Error, Result};
use crate::linalg::{l2_distance, solve_spd, squared_norm};
use crate::loss::LossKind;
use crate::model::{FeatureMatrix, QualityVector};

fn check_rows(x: &FeatureMatrix, y: &QualityVector) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::dim(format!(
            "{} feature rows with {} quality values",
            x.rows(),
            y.len()
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "regularization must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Ridge closed form over the labeled rows of `y`.
///
/// With no labeled rows and `lambda > 0` the solution is the zero vector.
pub fn fit_ridge(x: &FeatureMatrix, y: &QualityVector, lambda: f64) -> Result<Vec<f64>> {
    check_rows(x, y)?;
    check_lambda(lambda)?;
    let d = x.cols();
    let mut a = x.gram_where(|i| y.is_labeled(i));
    for k in 0..d {
        a[k * d + k] += lambda;
    }
    let r: Vec<f64> = (0..y.len())
        .map(|i| if y.is_labeled(i) { y.value(i) } else { 0.0 })
        .collect();
    let b = x.t_mul_vec(&r)?;
    solve_spd(&a, &b).ok_or(Error::Singular {
        advice: if lambda == 0.0 {
            "X'X is not invertible; use lambda > 0"
        } else {
            "increase lambda"
        },
    })
}

/// `Σ_{labeled} g(X(i,:)β, y(i)) + λ‖β‖²`.
pub fn separate_objective(
    x: &FeatureMatrix,
    y: &QualityVector,
    lambda: f64,
    kind: LossKind,
    beta: &[f64],
) -> Result<f64> {
    check_rows(x, y)?;
    let scores = x.mul_vec(beta)?;
    let data: f64 = y
        .labeled_indices()
        .map(|i| kind.value(scores[i], y.value(i)))
        .sum();
    Ok(data + lambda * squared_norm(beta))
}

pub fn separate_gradient(
    x: &FeatureMatrix,
    y: &QualityVector,
    lambda: f64,
    kind: LossKind,
    beta: &[f64],
) -> Result<Vec<f64>> {
    check_rows(x, y)?;
    let scores = x.mul_vec(beta)?;
    let r: Vec<f64> = (0..y.len())
        .map(|i| {
            if y.is_labeled(i) {
                kind.partial_u(scores[i], y.value(i))
            } else {
                0.0
            }
        })
        .collect();
    let mut g = x.t_mul_vec(&r)?;
    for (gk, bk) in g.iter_mut().zip(beta) {
        *gk += 2.0 * lambda * bk;
    }
    Ok(g)
}

/// Settings for fixed-step batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct GdOptions {
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the L2 move between successive iterates falls below this.
    pub tol: f64,
    /// Starting point; zero when absent.
    pub init: Option<Vec<f64>>,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            step: 1e-6,
            max_iter: 20,
            tol: 1e-9,
            init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdFit {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start point followed by one entry per step.
    pub objective_trace: Vec<f64>,
}

/// Batch gradient descent on the single-side objective.
pub fn fit_separate_gd(
    x: &FeatureMatrix,
    y: &QualityVector,
    lambda: f64,
    kind: LossKind,
    opts: &GdOptions,
) -> Result<GdFit> {
    check_rows(x, y)?;
    check_lambda(lambda)?;
    if y.labeled_count() == 0 {
        return Err(Error::Empty("labeled rows"));
    }
    if !(opts.step >= 0.0) {
        return Err(Error::invalid(format!(
            "step size {} must be >= 0",
            opts.step
        )));
    }
    let mut beta = match &opts.init {
        Some(b) if b.len() != x.cols() => {
            return Err(Error::dim(format!(
                "initial point has {} entries for {} columns",
                b.len(),
                x.cols()
            )))
        }
        Some(b) => b.clone(),
        None => vec![0.0; x.cols()],
    };
    let mut trace = vec![separate_objective(x, y, lambda, kind, &beta)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let g = separate_gradient(x, y, lambda, kind, &beta)?;
        let next: Vec<f64> = beta
            .iter()
            .zip(&g)
            .map(|(b, gk)| b - opts.step * gk)
            .collect();
        let obj = separate_objective(x, y, lambda, kind, &next)?;
        if !obj.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: iterations,
                step: opts.step,
            });
        }
        let moved = l2_distance(&next, &beta);
        beta = next;
        trace.push(obj);
        if moved < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(GdFit {
        beta,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Class label of a linear score: `+1` when positive, `-1` otherwise.
pub fn sign_label(score: f64) -> f64 {
    if score > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Linear scores `X β`.
pub fn predict(x: &FeatureMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    x.mul_vec(beta)
}

pub fn predict_labels(x: &FeatureMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    Ok(predict(x, beta)?.into_iter().map(sign_label).collect())
}
