//! Coupled question/answer objective and its solvers.
//!
//! For transferred feature matrices `Xq` (questions) and `Xa` (answers), the
//! row-normalized association `M~` and coefficient vectors `bq`, `ba`:
//!
//! ```text
//! L(bq, ba) = Σ_{labeled i} g(Xq(i,:) bq, yq(i))
//!           + Σ_{labeled j} g(Xa(j,:) ba, ya(j))
//!           + η Σ_{all i}   h(Xq(i,:) bq, M~(i,:) Xa ba)
//!           + λ (‖bq‖² + ‖ba‖²)
//! ```
//!
//! The `h` term ties each question's predicted score to the mean predicted
//! score of its answers. It runs over every training question whether or not
//! it is labeled, which is what lets answer coefficients be learned when no
//! answer labels are available.
//!
//! `g` and `h` are each square or sigmoid, giving four variants (QQ, QG, GG,
//! GQ; first letter `g`, second `h`). Every variant is solved by fixed-step
//! batch gradient descent started from per-side ridge fits; QQ additionally
//! has a closed form from its block normal equations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientPair;
use crate::error::{Error, Result};
use crate::linalg::{l2_distance, solve_spd, squared_norm};
use crate::loss::LossKind;
use crate::model::{AssociationMatrix, FeatureMatrix, QualityVector};
use crate::separate::{fit_ridge, sign_label};

/// The four `(g, h)` loss combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JointVariant {
    #[serde(rename = "qq")]
    Qq,
    #[serde(rename = "qg")]
    Qg,
    #[serde(rename = "gg")]
    Gg,
    #[serde(rename = "gq")]
    Gq,
}

impl JointVariant {
    pub const ALL: [JointVariant; 4] = [
        JointVariant::Qq,
        JointVariant::Qg,
        JointVariant::Gg,
        JointVariant::Gq,
    ];

    pub fn new(g: LossKind, h: LossKind) -> Self {
        match (g, h) {
            (LossKind::Square, LossKind::Square) => JointVariant::Qq,
            (LossKind::Square, LossKind::Sigmoid) => JointVariant::Qg,
            (LossKind::Sigmoid, LossKind::Sigmoid) => JointVariant::Gg,
            (LossKind::Sigmoid, LossKind::Square) => JointVariant::Gq,
        }
    }

    /// Data-fit loss.
    pub fn g(self) -> LossKind {
        match self {
            JointVariant::Qq | JointVariant::Qg => LossKind::Square,
            JointVariant::Gg | JointVariant::Gq => LossKind::Sigmoid,
        }
    }

    /// Coupling loss.
    pub fn h(self) -> LossKind {
        match self {
            JointVariant::Qq | JointVariant::Gq => LossKind::Square,
            JointVariant::Qg | JointVariant::Gg => LossKind::Sigmoid,
        }
    }
}

impl fmt::Display for JointVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.g().letter(), self.h().letter())
    }
}

impl FromStr for JointVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qq" => Ok(JointVariant::Qq),
            "qg" => Ok(JointVariant::Qg),
            "gg" => Ok(JointVariant::Gg),
            "gq" => Ok(JointVariant::Gq),
            other => Err(Error::invalid(format!("unknown joint variant `{other}`"))),
        }
    }
}

/// Inputs of the coupled objective. `association` must be row-normalized.
#[derive(Debug, Clone)]
pub struct JointProblem {
    pub questions: FeatureMatrix,
    pub answers: FeatureMatrix,
    pub question_targets: QualityVector,
    pub answer_targets: QualityVector,
    pub association: AssociationMatrix,
    pub variant: JointVariant,
    pub eta: f64,
    pub lambda: f64,
}

impl JointProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        questions: FeatureMatrix,
        answers: FeatureMatrix,
        question_targets: QualityVector,
        answer_targets: QualityVector,
        association: AssociationMatrix,
        variant: JointVariant,
        eta: f64,
        lambda: f64,
    ) -> Result<Self> {
        let n_q = association.n_questions();
        let n_a = association.n_answers();
        if questions.rows() != n_q || question_targets.len() != n_q {
            return Err(Error::dim(format!(
                "{} question rows / {} targets for {n_q} questions",
                questions.rows(),
                question_targets.len()
            )));
        }
        if answers.rows() != n_a || answer_targets.len() != n_a {
            return Err(Error::dim(format!(
                "{} answer rows / {} targets for {n_a} answers",
                answers.rows(),
                answer_targets.len()
            )));
        }
        if !association.is_normalized() {
            return Err(Error::invalid(
                "joint problem needs the row-normalized association",
            ));
        }
        for (name, v) in [("eta", eta), ("lambda", lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self {
            questions,
            answers,
            question_targets,
            answer_targets,
            association,
            variant,
            eta,
            lambda,
        })
    }

    fn check(&self, beta_q: &[f64], beta_a: &[f64]) -> Result<()> {
        if beta_q.len() != self.questions.cols() || beta_a.len() != self.answers.cols() {
            return Err(Error::dim(format!(
                "coefficients ({}, {}) for feature columns ({}, {})",
                beta_q.len(),
                beta_a.len(),
                self.questions.cols(),
                self.answers.cols()
            )));
        }
        Ok(())
    }

    /// Question scores `u`, answer scores `w`, and mean answer score per
    /// question `v = M~ w`.
    fn scores(&self, beta_q: &[f64], beta_a: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.check(beta_q, beta_a)?;
        let u = self.questions.mul_vec(beta_q)?;
        let w = self.answers.mul_vec(beta_a)?;
        let v = self.association.mul_vec(&w)?;
        Ok((u, w, v))
    }

    pub fn objective(&self, beta_q: &[f64], beta_a: &[f64]) -> Result<f64> {
        let (g, h) = (self.variant.g(), self.variant.h());
        let (u, w, v) = self.scores(beta_q, beta_a)?;
        let yq = &self.question_targets;
        let ya = &self.answer_targets;
        let fit_q: f64 = yq
            .labeled_indices()
            .map(|i| g.value(u[i], yq.value(i)))
            .sum();
        let fit_a: f64 = ya
            .labeled_indices()
            .map(|j| g.value(w[j], ya.value(j)))
            .sum();
        let coupling: f64 = u.iter().zip(&v).map(|(&ui, &vi)| h.value(ui, vi)).sum();
        Ok(fit_q
            + fit_a
            + self.eta * coupling
            + self.lambda * (squared_norm(beta_q) + squared_norm(beta_a)))
    }

    /// `(∂L/∂bq, ∂L/∂ba)`.
    ///
    /// The coupling term reaches `ba` through `Xa' M~(i,:)'`, assembled here as
    /// `Xa' (M~' c)` with `c(i) = η ∂h/∂v` so the cost stays linear in the
    /// number of posts.
    pub fn gradient(&self, beta_q: &[f64], beta_a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (g, h) = (self.variant.g(), self.variant.h());
        let (u, w, v) = self.scores(beta_q, beta_a)?;
        let yq = &self.question_targets;
        let ya = &self.answer_targets;

        let mut rq = vec![0.0; u.len()];
        let mut c = vec![0.0; u.len()];
        for i in 0..u.len() {
            if yq.is_labeled(i) {
                rq[i] = g.partial_u(u[i], yq.value(i));
            }
            rq[i] += self.eta * h.partial_u(u[i], v[i]);
            c[i] = self.eta * h.partial_v(u[i], v[i]);
        }
        let mut ra = self.association.t_mul_vec(&c)?;
        for (j, r) in ra.iter_mut().enumerate() {
            if ya.is_labeled(j) {
                *r += g.partial_u(w[j], ya.value(j));
            }
        }

        let mut grad_q = self.questions.t_mul_vec(&rq)?;
        let mut grad_a = self.answers.t_mul_vec(&ra)?;
        for (gk, bk) in grad_q.iter_mut().zip(beta_q) {
            *gk += 2.0 * self.lambda * bk;
        }
        for (gk, bk) in grad_a.iter_mut().zip(beta_a) {
            *gk += 2.0 * self.lambda * bk;
        }
        Ok((grad_q, grad_a))
    }

    /// Per-side ridge fits used as the descent starting point.
    pub fn ridge_start(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            fit_ridge(&self.questions, &self.question_targets, self.lambda)?,
            fit_ridge(&self.answers, &self.answer_targets, self.lambda)?,
        ))
    }
}

/// Batch gradient descent on the coupled objective.
///
/// Starts from per-side ridge fits and applies simultaneous steps
/// `b ← b - step ∂L/∂b` to both sides, both partials taken at the iterate from
/// the start of the step. Stops once both sides move less than `tol` in L2, or
/// after `max_iter` steps.
pub fn fit_gd(p: &JointProblem, step: f64, max_iter: usize, tol: f64) -> Result<CoefficientPair> {
    let (beta_q, beta_a) = p.ridge_start()?;
    descend(p, beta_q, beta_a, step, max_iter, tol)
}

/// [`fit_gd`] from a caller-chosen starting point.
pub fn descend(
    p: &JointProblem,
    mut beta_q: Vec<f64>,
    mut beta_a: Vec<f64>,
    step: f64,
    max_iter: usize,
    tol: f64,
) -> Result<CoefficientPair> {
    if !(step >= 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be finite and >= 0, got {step}"
        )));
    }
    let mut trace = vec![p.objective(&beta_q, &beta_a)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let (gq, ga) = p.gradient(&beta_q, &beta_a)?;
        let next_q: Vec<f64> = beta_q.iter().zip(&gq).map(|(b, g)| b - step * g).collect();
        let next_a: Vec<f64> = beta_a.iter().zip(&ga).map(|(b, g)| b - step * g).collect();
        let obj = p.objective(&next_q, &next_a)?;
        if !obj.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
                step,
            });
        }
        let moved_q = l2_distance(&next_q, &beta_q);
        let moved_a = l2_distance(&next_a, &beta_a);
        beta_q = next_q;
        beta_a = next_a;
        trace.push(obj);
        if moved_q < tol && moved_a < tol {
            converged = true;
            break;
        }
    }
    Ok(CoefficientPair {
        beta_q,
        beta_a,
        beta_a0: None,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Closed-form minimizer of the square/square objective.
///
/// Solves the block system
///
/// ```text
/// [ Xq_l'Xq_l + η Xq'Xq + λI     -η Xq' Z                  ] [bq]   [Xq_l' yq]
/// [ -η Z' Xq                      Xa_l'Xa_l + η Z'Z + λI    ] [ba] = [Xa_l' ya]
/// ```
///
/// with `Z = M~ Xa` and `_l` restricting to labeled rows. When every row is
/// labeled the diagonal blocks reduce to `(η + 1) Xq'Xq + λI` and
/// `Xa'Xa + η Xa'M~'M~Xa + λI`.
pub fn fit_qq_closed_form(p: &JointProblem) -> Result<CoefficientPair> {
    if p.variant != JointVariant::Qq {
        return Err(Error::invalid(format!(
            "closed form needs square/square losses, got {}",
            p.variant
        )));
    }
    let dq = p.questions.cols();
    let da = p.answers.cols();
    let n = dq + da;
    let z = p.association.mul_dense(&p.answers)?;

    let mut a = vec![0.0; n * n];
    let gq_lab = p.questions.gram_where(|i| p.question_targets.is_labeled(i));
    let gq_all = p.questions.gram_where(|_| true);
    let ga_lab = p.answers.gram_where(|j| p.answer_targets.is_labeled(j));
    let gz = z.gram_where(|_| true);
    for r in 0..dq {
        for c in 0..dq {
            a[r * n + c] = gq_lab[r * dq + c] + p.eta * gq_all[r * dq + c];
        }
        a[r * n + r] += p.lambda;
    }
    for r in 0..da {
        for c in 0..da {
            a[(dq + r) * n + dq + c] = ga_lab[r * da + c] + p.eta * gz[r * da + c];
        }
        a[(dq + r) * n + dq + r] += p.lambda;
    }
    for i in 0..p.questions.rows() {
        let xq = p.questions.row(i);
        let zi = z.row(i);
        for (r, &xr) in xq.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, &zc) in zi.iter().enumerate() {
                let v = -p.eta * xr * zc;
                a[r * n + dq + c] += v;
                a[(dq + c) * n + r] += v;
            }
        }
    }

    let masked = |y: &QualityVector| -> Vec<f64> {
        (0..y.len())
            .map(|i| if y.is_labeled(i) { y.value(i) } else { 0.0 })
            .collect()
    };
    let mut b = p.questions.t_mul_vec(&masked(&p.question_targets))?;
    b.extend(p.answers.t_mul_vec(&masked(&p.answer_targets))?);

    let x = solve_spd(&a, &b).ok_or(Error::Singular {
        advice: "the block system is not positive definite; use a larger lambda",
    })?;
    let beta_q = x[..dq].to_vec();
    let beta_a = x[dq..].to_vec();
    let objective = p.objective(&beta_q, &beta_a)?;
    Ok(CoefficientPair {
        beta_q,
        beta_a,
        beta_a0: None,
        iterations: 0,
        converged: true,
        objective_trace: vec![objective],
    })
}

/// Linear scores and sign labels for one side of a fitted joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub labels: Vec<f64>,
}

pub fn predict_joint(x: &FeatureMatrix, beta: &[f64]) -> Result<Prediction> {
    let scores = x.mul_vec(beta)?;
    let labels = scores.iter().copied().map(sign_label).collect();
    Ok(Prediction { scores, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Random instance with `n_q` questions of 1..=4 answers each.
    pub(crate) fn random_problem(
        seed: u64,
        n_q: usize,
        variant: JointVariant,
        eta: f64,
        lambda: f64,
    ) -> JointProblem {
        let mut rng = seeded(seed);
        let mut parents = Vec::new();
        for q in 0..n_q {
            for _ in 0..rng.random_range(1..=4) {
                parents.push(q);
            }
        }
        let m = AssociationMatrix::from_parents(n_q, &parents)
            .unwrap()
            .row_normalize()
            .unwrap();
        let mut mat = |rows: usize, cols: usize| {
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            FeatureMatrix::from_unnamed_rows(&data).unwrap()
        };
        let xq = mat(n_q, 3);
        let xa = mat(parents.len(), 4);
        let label = |v: f64| {
            if variant.g() == LossKind::Sigmoid {
                sign_label(v)
            } else {
                v
            }
        };
        let yq: Vec<f64> = (0..n_q)
            .map(|_| label(rng.sample(StandardNormal)))
            .collect();
        let ya: Vec<f64> = (0..parents.len())
            .map(|_| label(rng.sample(StandardNormal)))
            .collect();
        JointProblem::new(
            xq,
            xa,
            QualityVector::labeled(yq),
            QualityVector::labeled(ya),
            m,
            variant,
            eta,
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_square() {
        let p = random_problem(1, 6, JointVariant::Qq, 1.0, 0.1);
        let zq = vec![0.0; 3];
        let za = vec![0.0; 4];
        let expect: f64 = p
            .question_targets
            .values()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            + p.answer_targets.values().iter().map(|v| v * v).sum::<f64>();
        assert!((p.objective(&zq, &za).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_sigmoid() {
        let p = random_problem(2, 6, JointVariant::Gg, 2.0, 0.1);
        let n_a = p.answers.rows() as f64;
        let obj = p.objective(&[0.0; 3], &[0.0; 4]).unwrap();
        assert!((obj - (0.5 * (6.0 + n_a) + 0.5 * 2.0 * 6.0)).abs() < 1e-12);
    }

    #[test]
    fn eta_zero_decouples() {
        let p = random_problem(3, 8, JointVariant::Gq, 0.0, 0.3);
        let bq = [0.1, -0.4, 0.7];
        let ba = [0.2, 0.0, -0.5, 1.0];
        let split = crate::separate::separate_objective(
            &p.questions,
            &p.question_targets,
            0.3,
            LossKind::Sigmoid,
            &bq,
        )
        .unwrap()
            + crate::separate::separate_objective(
                &p.answers,
                &p.answer_targets,
                0.3,
                LossKind::Sigmoid,
                &ba,
            )
            .unwrap();
        assert!((p.objective(&bq, &ba).unwrap() - split).abs() < 1e-12);
    }

    #[test]
    fn decoupled_ridge_is_stationary() {
        let p = random_problem(4, 12, JointVariant::Qq, 0.0, 0.0);
        let (bq, ba) = p.ridge_start().unwrap();
        let (gq, ga) = p.gradient(&bq, &ba).unwrap();
        assert!(gq.iter().chain(&ga).all(|g| g.abs() < 1e-9));
    }

    #[test]
    fn closed_form_is_stationary() {
        let p = random_problem(5, 15, JointVariant::Qq, 1.0, 0.01);
        let fit = fit_qq_closed_form(&p).unwrap();
        let (gq, ga) = p.gradient(&fit.beta_q, &fit.beta_a).unwrap();
        let mut xty = p.questions.t_mul_vec(p.question_targets.values()).unwrap();
        xty.extend(p.answers.t_mul_vec(p.answer_targets.values()).unwrap());
        let scale = 1.0 + xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = gq.iter().chain(&ga).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-6 * scale, "{worst}");
    }

    #[test]
    fn closed_form_decouples_at_eta_zero() {
        let p = random_problem(6, 10, JointVariant::Qq, 0.0, 0.05);
        let fit = fit_qq_closed_form(&p).unwrap();
        let (rq, ra) = p.ridge_start().unwrap();
        for (a, b) in fit
            .beta_q
            .iter()
            .chain(&fit.beta_a)
            .zip(rq.iter().chain(&ra))
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let p = random_problem(7, 10, JointVariant::Qq, 1.0, 1e6);
        let fit = fit_qq_closed_form(&p).unwrap();
        assert!(fit
            .beta_q
            .iter()
            .chain(&fit.beta_a)
            .all(|b| b.abs() <= 1e-3));
    }

    #[test]
    fn closed_form_rejects_sigmoid() {
        let p = random_problem(7, 5, JointVariant::Qg, 1.0, 0.1);
        assert!(fit_qq_closed_form(&p).is_err());
    }

    #[test]
    fn zero_step_returns_start() {
        let p = random_problem(8, 10, JointVariant::Gg, 1.0, 0.01);
        let fit = fit_gd(&p, 0.0, 20, 1e-9).unwrap();
        let (bq, ba) = p.ridge_start().unwrap();
        assert_eq!(fit.beta_q, bq);
        assert_eq!(fit.beta_a, ba);
    }

    #[test]
    fn divergence_names_step() {
        let p = random_problem(9, 10, JointVariant::Qq, 1.0, 0.01);
        let start_q = vec![5.0; 3];
        let start_a = vec![5.0; 4];
        match descend(&p, start_q, start_a, 50.0, 5000, 0.0) {
            Err(e @ Error::Diverged { .. }) => assert!(e.to_string().contains("step size 50")),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn descent_decreases_objective() {
        let p = random_problem(10, 20, JointVariant::Gq, 1.0, 0.01);
        let fit = descend(&p, vec![0.0; 3], vec![0.0; 4], 1e-3, 200, 0.0).unwrap();
        let trace = &fit.objective_trace;
        assert_eq!(trace.len(), 201);
        assert!(trace.last().unwrap() < &trace[0]);
    }

    #[test]
    fn closed_form_global_witness() {
        let p = random_problem(11, 10, JointVariant::Qq, 1.0, 0.01);
        let fit = fit_qq_closed_form(&p).unwrap();
        let best = p.objective(&fit.beta_q, &fit.beta_a).unwrap();
        let mut rng = seeded(1234);
        for _ in 0..1000 {
            let bq: Vec<f64> = (0..3)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let ba: Vec<f64> = (0..4)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            assert!(best <= p.objective(&bq, &ba).unwrap());
        }
        let gd = fit_gd(&p, 1e-3, 50, 1e-12).unwrap();
        assert!(best <= p.objective(&gd.beta_q, &gd.beta_a).unwrap());
    }

    #[test]
    fn variant_names() {
        assert_eq!(JointVariant::Gq.to_string(), "GQ");
        assert_eq!("qg".parse::<JointVariant>().unwrap(), JointVariant::Qg);
        for v in JointVariant::ALL {
            assert_eq!(JointVariant::new(v.g(), v.h()), v);
        }
    }

    #[test]
    fn prediction_labels() {
        let x = FeatureMatrix::from_unnamed_rows(&[vec![-1.0], vec![0.0], vec![2.0]]).unwrap();
        let p = predict_joint(&x, &[1.0]).unwrap();
        assert_eq!(p.labels, vec![-1.0, -1.0, 1.0]);
        assert_eq!(predict_joint(&x, &[0.0]).unwrap().labels, vec![-1.0; 3]);
    }
}
