//! Iterative co-prediction for the regression setting.
//!
//! Each side is fitted by ridge regression on its transferred features plus
//! one extra column carrying the other side's current estimate: questions get
//! the mean estimated score of their answers, answers get their question's
//! estimated score. The sides alternate until both coefficient vectors settle.

use crate::coefficients::{CoefficientPair, ColumnScaling, EstimateScaling};
use crate::error::{Error, Result};
use crate::linalg::l2_distance;
use crate::model::{AssociationMatrix, FeatureMatrix, QualityVector, Standardizer};
use crate::separate::fit_ridge;

pub const QUESTION_ESTIMATE_COLUMN: &str = "estimate.answer_mean";
pub const ANSWER_ESTIMATE_COLUMN: &str = "estimate.question";

/// Transferred training matrices and targets. `association` is row-normalized.
#[derive(Debug, Clone)]
pub struct IterProblem {
    pub questions: FeatureMatrix,
    pub answers: FeatureMatrix,
    pub question_targets: QualityVector,
    pub answer_targets: QualityVector,
    pub association: AssociationMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterSettings {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// z-score the estimate columns with training statistics.
    pub standardize_estimates: bool,
}

impl Default for IterSettings {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            max_iter: 20,
            tol: 1e-9,
            standardize_estimates: true,
        }
    }
}

/// Iterative model: coefficients (each with the estimate column last) and the
/// estimate-column scalings frozen at the final iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterModel {
    pub coefficients: CoefficientPair,
    pub scaling: EstimateScaling,
}

fn parent_values(m: &AssociationMatrix, question_values: &[f64]) -> Vec<f64> {
    m.parents().iter().map(|&q| question_values[q]).collect()
}

fn scaling_for(values: &[f64], standardize: bool) -> ColumnScaling {
    if standardize {
        let (mean, scale) = Standardizer::fit_values(values);
        ColumnScaling { mean, scale }
    } else {
        ColumnScaling::IDENTITY
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn fit_cops_iter(p: &IterProblem, settings: &IterSettings) -> Result<IterModel> {
    if !p.association.is_normalized() {
        return Err(Error::invalid(
            "iterative fit needs the row-normalized association",
        ));
    }
    let lambda = settings.lambda;
    let beta_a0 = fit_ridge(&p.answers, &p.answer_targets, lambda)?;
    let mut answer_estimate = p.answers.mul_vec(&beta_a0)?;

    // the first pass measures its move from zero / the initial answer fit
    let mut prev_q = vec![0.0; p.questions.cols() + 1];
    let mut prev_a = beta_a0.clone();
    prev_a.push(0.0);

    let mut beta_q = prev_q.clone();
    let mut beta_a = prev_a.clone();
    let mut scaling = EstimateScaling {
        question: ColumnScaling::IDENTITY,
        answer: ColumnScaling::IDENTITY,
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter {
        iterations += 1;

        let column = p.association.mul_vec(&answer_estimate)?;
        scaling.question = scaling_for(&column, settings.standardize_estimates);
        let design_q = p
            .questions
            .with_column(QUESTION_ESTIMATE_COLUMN, &scaling.question.apply(&column))?;
        beta_q = fit_ridge(&design_q, &p.question_targets, lambda)?;
        let question_estimate = design_q.mul_vec(&beta_q)?;
        check_finite(&question_estimate, "question estimates")?;

        let column = parent_values(&p.association, &question_estimate);
        scaling.answer = scaling_for(&column, settings.standardize_estimates);
        let design_a = p
            .answers
            .with_column(ANSWER_ESTIMATE_COLUMN, &scaling.answer.apply(&column))?;
        beta_a = fit_ridge(&design_a, &p.answer_targets, lambda)?;
        answer_estimate = design_a.mul_vec(&beta_a)?;
        check_finite(&answer_estimate, "answer estimates")?;

        let moved_q = l2_distance(&beta_q, &prev_q);
        let moved_a = l2_distance(&beta_a, &prev_a);
        prev_q.clone_from(&beta_q);
        prev_a.clone_from(&beta_a);
        if moved_q < settings.tol && moved_a < settings.tol {
            converged = true;
            break;
        }
    }
    Ok(IterModel {
        coefficients: CoefficientPair {
            beta_q,
            beta_a,
            beta_a0: Some(beta_a0),
            iterations,
            converged,
            objective_trace: Vec::new(),
        },
        scaling,
    })
}

/// Replays `rounds` alternations with fixed coefficients on new data:
/// `ŷ_a = Xa β_a0`, then per round `ŷ_q = [Xq, M~ ŷ_a] β_q`,
/// `ŷ_a = [Xa, M' ŷ_q] β_a`. Returns `(ŷ_q, ŷ_a)`.
pub fn predict_cops_iter(
    model: &IterModel,
    questions: &FeatureMatrix,
    answers: &FeatureMatrix,
    association: &AssociationMatrix,
    rounds: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rounds == 0 {
        return Err(Error::invalid(
            "at least one prediction round is needed to produce question estimates",
        ));
    }
    let averaging;
    let m = if association.is_normalized() {
        association
    } else {
        averaging = association.row_normalize()?;
        &averaging
    };
    let coef = &model.coefficients;
    let beta_a0 = coef
        .beta_a0
        .as_deref()
        .ok_or_else(|| Error::invalid("iterative model lacks initial answer coefficients"))?;
    let mut answer_estimate = answers.mul_vec(beta_a0)?;
    let mut question_estimate = Vec::new();
    for _ in 0..rounds {
        let column = model.scaling.question.apply(&m.mul_vec(&answer_estimate)?);
        question_estimate = questions
            .with_column(QUESTION_ESTIMATE_COLUMN, &column)?
            .mul_vec(&coef.beta_q)?;
        let column = model
            .scaling
            .answer
            .apply(&parent_values(m, &question_estimate));
        answer_estimate = answers
            .with_column(ANSWER_ESTIMATE_COLUMN, &column)?
            .mul_vec(&coef.beta_a)?;
    }
    Ok((question_estimate, answer_estimate))
}
