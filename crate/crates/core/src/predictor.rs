//! End-to-end quality models: feature preparation, fitting by any method,
//! prediction, held-out evaluation and the model file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientPair, EstimateScaling};
use crate::error::{Error, Result};
use crate::eval::metrics::{prediction_error, rmse};
use crate::iterative::{fit_cops_iter, predict_cops_iter, IterModel, IterProblem, IterSettings};
use crate::joint::{fit_gd, fit_qq_closed_form, JointProblem, JointVariant};
use crate::loss::LossKind;
use crate::model::{
    threshold_labels, transfer_features, AssociationMatrix, Dataset, FeatureMatrix, QualityVector,
    ScoreScaling, Standardizer,
};
use crate::separate::{fit_ridge, fit_separate_gd, sign_label, GdOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Separate,
    CopsIter,
    Joint(JointVariant),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Separate,
        Method::CopsIter,
        Method::Joint(JointVariant::Qq),
        Method::Joint(JointVariant::Qg),
        Method::Joint(JointVariant::Gg),
        Method::Joint(JointVariant::Gq),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Separate => "separate",
            Method::CopsIter => "cops-iter",
            Method::Joint(JointVariant::Qq) => "cops-qq",
            Method::Joint(JointVariant::Qg) => "cops-qg",
            Method::Joint(JointVariant::Gg) => "cops-gg",
            Method::Joint(JointVariant::Gq) => "cops-gq",
        }
    }

    /// Whether the method can be fitted for `task`. The iterative method is
    /// regression only; sigmoid losses need `±1` targets.
    pub fn supports(self, task: Task) -> bool {
        match (self, task) {
            (Method::CopsIter, Task::Classification) => false,
            (Method::Joint(v), Task::Regression) => v == JointVariant::Qq,
            _ => true,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::invalid(format!(
                    "unknown method {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            _ => Err(Error::invalid(format!(
                "unknown task {s:?}; expected regression or classification"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Weight of the question/answer coupling term.
    pub eta: f64,
    pub lambda: f64,
    /// Gradient step size.
    pub gamma: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Alternation rounds replayed by the iterative method at prediction time.
    pub rounds: usize,
    /// z-score raw features with training statistics.
    pub standardize: bool,
    pub separate_loss: LossKind,
    /// Solve square/square by its closed form rather than gradient descent.
    pub qq_closed_form: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            eta: 1.0,
            lambda: 0.01,
            gamma: 1e-6,
            max_iter: 20,
            tol: 1e-9,
            rounds: 1,
            standardize: true,
            separate_loss: LossKind::Square,
            qq_closed_form: true,
        }
    }
}

/// Model inputs derived from a dataset: transferred (or plain, for the
/// separate method) feature matrices and the row-normalized association.
#[derive(Debug, Clone)]
pub struct Design {
    pub questions: FeatureMatrix,
    pub answers: FeatureMatrix,
    pub association: AssociationMatrix,
}

/// Per-post outputs of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub question_scores: Vec<f64>,
    pub answer_scores: Vec<f64>,
}

impl Predictions {
    pub fn question_labels(&self) -> Vec<f64> {
        self.question_scores
            .iter()
            .copied()
            .map(sign_label)
            .collect()
    }

    pub fn answer_labels(&self) -> Vec<f64> {
        self.answer_scores.iter().copied().map(sign_label).collect()
    }
}

/// Held-out metrics: RMSE on normalized scores for regression, prediction
/// error for classification. `None` when a side has no evaluable posts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub question_metric: Option<f64>,
    pub answer_metric: Option<f64>,
    pub questions_evaluated: usize,
    pub answers_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub method: Method,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub hyperparameters: Hyperparameters,
    pub question_schema: Vec<String>,
    pub answer_schema: Vec<String>,
    pub question_standardizer: Standardizer,
    pub answer_standardizer: Standardizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_scaling: Option<ScoreScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_scaling: Option<ScoreScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_scaling: Option<EstimateScaling>,
    pub coefficients: CoefficientPair,
}

fn regression_targets(raw: &QualityVector, scaling: Option<ScoreScaling>) -> Result<QualityVector> {
    match scaling {
        Some(s) => {
            let values = raw
                .values()
                .iter()
                .zip(raw.mask())
                .map(|(&v, &l)| if l { s.normalize(v) } else { 0.0 })
                .collect();
            QualityVector::new(values, raw.mask().to_vec())
        }
        None => Ok(QualityVector::unlabeled(raw.len())),
    }
}

fn fit_scaling(raw: &QualityVector) -> Result<Option<ScoreScaling>> {
    if raw.labeled_count() == 0 {
        Ok(None)
    } else {
        ScoreScaling::fit(raw).map(Some)
    }
}

fn schema_diff(side: &str, expected: &[String], found: &[String]) -> Option<String> {
    if expected == found {
        return None;
    }
    let missing: Vec<_> = expected.iter().filter(|c| !found.contains(c)).collect();
    let extra: Vec<_> = found.iter().filter(|c| !expected.contains(c)).collect();
    let mut msg = format!(
        "{side} features: model expects [{}], data has [{}]",
        expected.join(", "),
        found.join(", ")
    );
    if !missing.is_empty() {
        msg.push_str(&format!("; missing {missing:?}"));
    }
    if !extra.is_empty() {
        msg.push_str(&format!("; unexpected {extra:?}"));
    }
    if missing.is_empty() && extra.is_empty() {
        msg.push_str("; columns are reordered");
    }
    Some(msg)
}

/// A model with everything but its coefficients, plus the training inputs the
/// solvers consume.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: QualityModel,
    pub design: Design,
    pub question_targets: QualityVector,
    pub answer_targets: QualityVector,
}

impl Prepared {
    /// Coupled problem over the prepared training inputs.
    pub fn joint_problem(&self, variant: JointVariant) -> Result<JointProblem> {
        let h = &self.model.hyperparameters;
        JointProblem::new(
            self.design.questions.clone(),
            self.design.answers.clone(),
            self.question_targets.clone(),
            self.answer_targets.clone(),
            self.design.association.clone(),
            variant,
            h.eta,
            h.lambda,
        )
    }
}

/// Standardization statistics, score scaling, design matrices and targets
/// for fitting `method` on `train`.
pub fn prepare(
    train: &Dataset,
    method: Method,
    task: Task,
    hyper: &Hyperparameters,
    seed: Option<u64>,
) -> Result<Prepared> {
    if !method.supports(task) {
        return Err(Error::invalid(format!(
            "method {method} does not support {task}"
        )));
    }
    if matches!(method, Method::Separate)
        && task == Task::Regression
        && hyper.separate_loss == LossKind::Sigmoid
    {
        return Err(Error::invalid("sigmoid loss needs the classification task"));
    }
    let (question_standardizer, answer_standardizer) = if hyper.standardize {
        (
            Standardizer::fit(&train.question_features),
            Standardizer::fit(&train.answer_features),
        )
    } else {
        (
            Standardizer::identity(train.question_features.cols()),
            Standardizer::identity(train.answer_features.cols()),
        )
    };
    let (question_scaling, answer_scaling, yq, ya) = match task {
        Task::Classification => (
            None,
            None,
            threshold_labels(&train.question_scores),
            threshold_labels(&train.answer_scores),
        ),
        Task::Regression => {
            let qs = fit_scaling(&train.question_scores)?;
            let as_ = fit_scaling(&train.answer_scores)?;
            if qs.is_none() && as_.is_none() {
                return Err(Error::Empty("labeled training scores"));
            }
            // a side without labels borrows the other side's range
            let qs = qs.or(as_);
            let as_ = as_.or(qs);
            (
                qs,
                as_,
                regression_targets(&train.question_scores, qs)?,
                regression_targets(&train.answer_scores, as_)?,
            )
        }
    };
    let model = QualityModel {
        method,
        task,
        seed,
        hyperparameters: hyper.clone(),
        question_schema: train.question_features.schema().to_vec(),
        answer_schema: train.answer_features.schema().to_vec(),
        question_standardizer,
        answer_standardizer,
        question_scaling,
        answer_scaling,
        estimate_scaling: None,
        coefficients: CoefficientPair {
            beta_q: Vec::new(),
            beta_a: Vec::new(),
            beta_a0: None,
            iterations: 0,
            converged: false,
            objective_trace: Vec::new(),
        },
    };
    let design = model.design(train)?;
    Ok(Prepared {
        model,
        design,
        question_targets: yq,
        answer_targets: ya,
    })
}

impl QualityModel {
    /// Fits `method` on a training dataset with raw scores.
    pub fn fit(
        train: &Dataset,
        method: Method,
        task: Task,
        hyper: &Hyperparameters,
        seed: Option<u64>,
    ) -> Result<Self> {
        let Prepared {
            mut model,
            design,
            question_targets: yq,
            answer_targets: ya,
        } = prepare(train, method, task, hyper, seed)?;
        let h = hyper;
        model.coefficients = match method {
            Method::Separate => {
                let side = |x: &FeatureMatrix, y: &QualityVector| -> Result<Vec<f64>> {
                    match h.separate_loss {
                        LossKind::Square => fit_ridge(x, y, h.lambda),
                        LossKind::Sigmoid => {
                            let opts = GdOptions {
                                step: h.gamma,
                                max_iter: h.max_iter,
                                tol: h.tol,
                                init: None,
                            };
                            Ok(fit_separate_gd(x, y, h.lambda, LossKind::Sigmoid, &opts)?.beta)
                        }
                    }
                };
                CoefficientPair {
                    beta_q: side(&design.questions, &yq)?,
                    beta_a: side(&design.answers, &ya)?,
                    beta_a0: None,
                    iterations: 0,
                    converged: true,
                    objective_trace: Vec::new(),
                }
            }
            Method::CopsIter => {
                let problem = IterProblem {
                    questions: design.questions,
                    answers: design.answers,
                    question_targets: yq,
                    answer_targets: ya,
                    association: design.association,
                };
                let settings = IterSettings {
                    lambda: h.lambda,
                    max_iter: h.max_iter,
                    tol: h.tol,
                    standardize_estimates: h.standardize,
                };
                let fitted = fit_cops_iter(&problem, &settings)?;
                model.estimate_scaling = Some(fitted.scaling);
                fitted.coefficients
            }
            Method::Joint(variant) => {
                let problem = JointProblem::new(
                    design.questions,
                    design.answers,
                    yq,
                    ya,
                    design.association,
                    variant,
                    h.eta,
                    h.lambda,
                )?;
                if variant == JointVariant::Qq && h.qq_closed_form {
                    fit_qq_closed_form(&problem)?
                } else {
                    fit_gd(&problem, h.gamma, h.max_iter, h.tol)?
                }
            }
        };
        Ok(model)
    }

    /// Fails with a column-by-column description when `d` does not carry the
    /// feature schema the model was trained on.
    pub fn check_schema(&self, d: &Dataset) -> Result<()> {
        let diffs: Vec<String> = [
            schema_diff(
                "question",
                &self.question_schema,
                d.question_features.schema(),
            ),
            schema_diff("answer", &self.answer_schema, d.answer_features.schema()),
        ]
        .into_iter()
        .flatten()
        .collect();
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(diffs.join("\n")))
        }
    }

    /// Standardized features with a bias column, transferred across the
    /// association unless the method is separate.
    pub fn design(&self, d: &Dataset) -> Result<Design> {
        self.check_schema(d)?;
        let xq = self
            .question_standardizer
            .apply(&d.question_features)?
            .with_bias();
        let xa = self
            .answer_standardizer
            .apply(&d.answer_features)?
            .with_bias();
        let association = d.normalized_association()?;
        let (questions, answers) = match self.method {
            Method::Separate => (xq, xa),
            _ => transfer_features(&xq, &xa, &association)?,
        };
        Ok(Design {
            questions,
            answers,
            association,
        })
    }

    pub fn predict(&self, d: &Dataset) -> Result<Predictions> {
        let design = self.design(d)?;
        let c = &self.coefficients;
        let (question_scores, answer_scores) = match self.method {
            Method::CopsIter => {
                let scaling = self
                    .estimate_scaling
                    .ok_or_else(|| Error::invalid("iterative model lacks estimate scalings"))?;
                let model = IterModel {
                    coefficients: c.clone(),
                    scaling,
                };
                predict_cops_iter(
                    &model,
                    &design.questions,
                    &design.answers,
                    &design.association,
                    self.hyperparameters.rounds,
                )?
            }
            _ => (
                design.questions.mul_vec(&c.beta_q)?,
                design.answers.mul_vec(&c.beta_a)?,
            ),
        };
        Ok(Predictions {
            question_scores,
            answer_scores,
        })
    }

    /// Predicted scores mapped back to the raw vote scale (regression only).
    pub fn denormalize(&self, p: &Predictions) -> Option<(Vec<f64>, Vec<f64>)> {
        let qs = self.question_scaling?;
        let as_ = self.answer_scaling?;
        Some((
            p.question_scores
                .iter()
                .map(|&v| qs.denormalize(v))
                .collect(),
            p.answer_scores
                .iter()
                .map(|&v| as_.denormalize(v))
                .collect(),
        ))
    }

    /// Scores held-out posts against their known raw scores.
    pub fn evaluate(&self, test: &Dataset) -> Result<Evaluation> {
        let p = self.predict(test)?;
        let side = |raw: &QualityVector,
                    scores: &[f64],
                    scaling: Option<ScoreScaling>|
         -> Result<(Option<f64>, usize)> {
            match self.task {
                Task::Classification => {
                    let truth = threshold_labels(raw);
                    let idx: Vec<usize> = truth.labeled_indices().collect();
                    if idx.is_empty() {
                        return Ok((None, 0));
                    }
                    let pred: Vec<f64> = idx.iter().map(|&i| sign_label(scores[i])).collect();
                    let actual: Vec<f64> = idx.iter().map(|&i| truth.value(i)).collect();
                    Ok((Some(prediction_error(&pred, &actual)?), idx.len()))
                }
                Task::Regression => {
                    let Some(s) = scaling else {
                        return Ok((None, 0));
                    };
                    let idx: Vec<usize> = raw.labeled_indices().collect();
                    if idx.is_empty() {
                        return Ok((None, 0));
                    }
                    let pred: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
                    let actual: Vec<f64> = idx.iter().map(|&i| s.normalize(raw.value(i))).collect();
                    Ok((Some(rmse(&pred, &actual)?), idx.len()))
                }
            }
        };
        let (question_metric, questions_evaluated) = side(
            &test.question_scores,
            &p.question_scores,
            self.question_scaling,
        )?;
        let (answer_metric, answers_evaluated) =
            side(&test.answer_scores, &p.answer_scores, self.answer_scaling)?;
        Ok(Evaluation {
            question_metric,
            answer_metric,
            questions_evaluated,
            answers_evaluated,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            what: "model".into(),
            message: e.to_string(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let model: QualityModel = toml::from_str(text).map_err(|e| Error::Format {
            what: "model file".into(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Coefficient and statistic lengths agree with the schemas.
    fn validate(&self) -> Result<()> {
        let dq = self.question_schema.len();
        let da = self.answer_schema.len();
        if self.question_standardizer.cols() != dq || self.answer_standardizer.cols() != da {
            return Err(Error::dim("standardizer length differs from schema"));
        }
        let (bq, ba) = match self.method {
            Method::Separate => (dq + 1, da + 1),
            Method::CopsIter => (dq + da + 3, da + dq + 3),
            Method::Joint(_) => (dq + da + 2, da + dq + 2),
        };
        let c = &self.coefficients;
        if c.beta_q.len() != bq || c.beta_a.len() != ba {
            return Err(Error::dim(format!(
                "coefficient lengths {}/{} do not match schema ({bq}/{ba} expected)",
                c.beta_q.len(),
                c.beta_a.len()
            )));
        }
        if self.method == Method::CopsIter && c.beta_a0.as_ref().map(Vec::len) != Some(da + dq + 2)
        {
            return Err(Error::dim(
                "iterative model needs initial answer coefficients",
            ));
        }
        Ok(())
    }
}
