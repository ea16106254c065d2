//! Repeated split/fit/evaluate sweeps.
//!
//! A plan fans out into cells, one per `(sweep point, repeat, method)`. Repeat
//! `r` derives its seed from the plan seed; that seed drives the split and
//! the label masking, so every method at a given point and repeat sees the
//! same training and test data. Cells are independent and may run in
//! parallel; results are merged in cell order.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::utility_ratio;
use crate::model::{mask_labels, split_dataset, Dataset};
use crate::pipeline::{generate_synthetic, read_csv, SynthSpec};
use crate::predictor::{Hyperparameters, Method, QualityModel, Task};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Percentage of questions used for training.
    TrainPercent,
    QuestionLabelFraction,
    AnswerLabelFraction,
    Eta,
    Lambda,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::TrainPercent => "train-percent",
            Axis::QuestionLabelFraction => "question-label-fraction",
            Axis::AnswerLabelFraction => "answer-label-fraction",
            Axis::Eta => "eta",
            Axis::Lambda => "lambda",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Axis::TrainPercent,
            Axis::QuestionLabelFraction,
            Axis::AnswerLabelFraction,
            Axis::Eta,
            Axis::Lambda,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Where a plan's data comes from: a CSV dataset directory (relative paths
/// resolve against the plan file) or a synthetic specification.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthSpec>,
}

fn default_repeats() -> usize {
    10
}

fn default_train_percent() -> f64 {
    10.0
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub methods: Vec<Method>,
    pub task: Task,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    /// Training percentage when not swept.
    #[serde(default = "default_train_percent")]
    pub train_percent: f64,
    #[serde(default = "one")]
    pub question_label_fraction: f64,
    #[serde(default = "one")]
    pub answer_label_fraction: f64,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub params: Hyperparameters,
    #[serde(default)]
    pub data: DataSource,
}

impl Plan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Plan = toml::from_str(text).map_err(|e| Error::Format {
            what: "plan".into(),
            message: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut plan = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(dir), Some(base)) = (&plan.data.dir, path.parent()) {
            if dir.is_relative() {
                plan.data.dir = Some(base.join(dir));
            }
        }
        Ok(plan)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            what: "plan".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid("plan lists no methods"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("plan needs at least one repeat"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::invalid(format!(
                    "sweep over {} has no values",
                    s.axis
                )));
            }
        }
        Ok(())
    }

    pub fn load_data(&self) -> Result<Dataset> {
        match (&self.data.dir, &self.data.synthetic) {
            (Some(dir), None) => read_csv(dir),
            (None, Some(spec)) => generate_synthetic(spec),
            _ => Err(Error::invalid(
                "plan data needs exactly one of `dir` or `synthetic`",
            )),
        }
    }

    /// Sweep values, or a single point at the base configuration.
    pub fn points(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) => s.values.clone(),
            None => vec![f64::NAN],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.points().len() * self.repeats * self.methods.len()
    }

    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        derive_seed(self.seed, repeat as u64)
    }
}

/// Effective settings of one sweep point.
#[derive(Debug, Clone, PartialEq)]
struct Setting {
    train_percent: f64,
    question_fraction: f64,
    answer_fraction: f64,
    params: Hyperparameters,
}

fn setting(plan: &Plan, value: f64) -> Setting {
    let mut s = Setting {
        train_percent: plan.train_percent,
        question_fraction: plan.question_label_fraction,
        answer_fraction: plan.answer_label_fraction,
        params: plan.params.clone(),
    };
    if let Some(sweep) = &plan.sweep {
        match sweep.axis {
            Axis::TrainPercent => s.train_percent = value,
            Axis::QuestionLabelFraction => s.question_fraction = value,
            Axis::AnswerLabelFraction => s.answer_fraction = value,
            Axis::Eta => s.params.eta = value,
            Axis::Lambda => s.params.lambda = value,
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub method: Method,
    /// Sweep value, NaN without a sweep.
    pub value: f64,
    pub repeat: usize,
    pub seed: u64,
    pub question_metric: Option<f64>,
    pub answer_metric: Option<f64>,
    /// Wall-clock seconds spent fitting.
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

/// Means over the successful repeats of one `(point, method)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub value: f64,
    pub runs: usize,
    pub failures: usize,
    pub question_metric: Option<f64>,
    pub answer_metric: Option<f64>,
    pub seconds: Option<f64>,
    /// Mean `(1 - error) / seconds`, classification only.
    pub question_utility: Option<f64>,
    pub answer_utility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub plan: Plan,
    pub records: Vec<CellRecord>,
    pub summary: Vec<SummaryRow>,
}

fn run_cell(
    data: &Dataset,
    plan: &Plan,
    s: &Setting,
    method: Method,
    repeat: usize,
) -> std::result::Result<(Option<f64>, Option<f64>, f64), Error> {
    let seed = plan.repeat_seed(repeat);
    let (train, test) = split_dataset(data, s.train_percent, seed)?;
    let train = if s.question_fraction < 1.0 || s.answer_fraction < 1.0 {
        mask_labels(
            &train,
            s.question_fraction,
            s.answer_fraction,
            derive_seed(seed, 1),
        )?
    } else {
        train
    };
    let start = Instant::now();
    let model = QualityModel::fit(&train, method, plan.task, &s.params, Some(seed))?;
    let seconds = start.elapsed().as_secs_f64();
    let e = model.evaluate(&test)?;
    Ok((e.question_metric, e.answer_metric, seconds))
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(plan: &Plan, records: &[CellRecord]) -> Vec<SummaryRow> {
    let points = plan.points();
    let mut rows = Vec::new();
    for (p, &value) in points.iter().enumerate() {
        for (m, &method) in plan.methods.iter().enumerate() {
            let cell: Vec<&CellRecord> = (0..plan.repeats)
                .map(|r| &records[(p * plan.repeats + r) * plan.methods.len() + m])
                .collect();
            let ok: Vec<&&CellRecord> = cell.iter().filter(|c| c.error.is_none()).collect();
            let utility = |metric: fn(&CellRecord) -> Option<f64>| {
                if plan.task != Task::Classification {
                    return None;
                }
                mean(ok.iter().map(|c| {
                    let err = metric(c)?;
                    utility_ratio(err, c.seconds?).ok()
                }))
            };
            rows.push(SummaryRow {
                method,
                value,
                runs: ok.len(),
                failures: cell.len() - ok.len(),
                question_metric: mean(ok.iter().map(|c| c.question_metric)),
                answer_metric: mean(ok.iter().map(|c| c.answer_metric)),
                seconds: mean(ok.iter().map(|c| c.seconds)),
                question_utility: utility(|c| c.question_metric),
                answer_utility: utility(|c| c.answer_metric),
            });
        }
    }
    rows
}

/// Runs every cell of `plan` on `data`. Cell failures are recorded in the
/// report rather than aborting the sweep.
pub fn run_experiment(plan: &Plan, data: &Dataset) -> Result<ExperimentReport> {
    plan.validate()?;
    let points = plan.points();
    let mut cells = Vec::with_capacity(plan.cell_count());
    for &value in &points {
        let s = setting(plan, value);
        for repeat in 0..plan.repeats {
            for &method in &plan.methods {
                cells.push((value, s.clone(), repeat, method));
            }
        }
    }
    let run = |(value, s, repeat, method): &(f64, Setting, usize, Method)| {
        let outcome = run_cell(data, plan, s, *method, *repeat);
        let (question_metric, answer_metric, seconds, error) = match outcome {
            Ok((q, a, t)) => (q, a, Some(t), None),
            Err(e) => (None, None, None, Some(e.to_string())),
        };
        CellRecord {
            method: *method,
            value: *value,
            repeat: *repeat,
            seed: plan.repeat_seed(*repeat),
            question_metric,
            answer_metric,
            seconds,
            error,
        }
    };
    let records: Vec<CellRecord> = if plan.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };
    let summary = summarize(plan, &records);
    Ok(ExperimentReport {
        plan: plan.clone(),
        records,
        summary,
    })
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "method",
    "axis",
    "value",
    "repeat",
    "seed",
    "question_metric",
    "answer_metric",
    "seconds",
    "status",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn opt_fixed(v: Option<f64>, width: usize, digits: usize) -> String {
    v.map_or_else(
        || format!("{:>width$}", "-"),
        |x| format!("{x:>width$.digits$}"),
    )
}

impl ExperimentReport {
    pub fn metric_name(&self) -> &'static str {
        match self.plan.task {
            Task::Regression => "rmse",
            Task::Classification => "prediction_error",
        }
    }

    fn axis_name(&self) -> &'static str {
        self.plan.sweep.as_ref().map_or("none", |s| s.axis.name())
    }

    /// Header comments, one CSV record per cell, then the summary table as
    /// trailing comments.
    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# cops experiment report")?;
        writeln!(
            out,
            "# metric: {} (questions and answers, held-out posts)",
            self.metric_name()
        )?;
        writeln!(out, "# seconds: wall-clock time of the fitting step only")?;
        writeln!(out, "# columns: {}", REPORT_COLUMNS.join(","))?;
        for line in self.plan.to_toml()?.lines() {
            writeln!(out, "# plan | {line}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut *out);
            let to_io = |e: csv::Error| Error::Io(e.into());
            w.write_record(REPORT_COLUMNS).map_err(to_io)?;
            let axis = self.axis_name();
            for r in &self.records {
                let status = r
                    .error
                    .as_ref()
                    .map_or("ok".to_string(), |e| format!("error: {e}"));
                w.write_record([
                    r.method.name().to_string(),
                    axis.to_string(),
                    if r.value.is_nan() {
                        String::new()
                    } else {
                        r.value.to_string()
                    },
                    r.repeat.to_string(),
                    r.seed.to_string(),
                    opt(r.question_metric),
                    opt(r.answer_metric),
                    opt(r.seconds),
                    status,
                ])
                .map_err(to_io)?;
            }
            w.flush()?;
        }
        for line in self.summary_table().lines() {
            writeln!(out, "# {line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("report text is UTF-8"))
    }

    /// Fixed-width table of the per-point means.
    pub fn summary_table(&self) -> String {
        let metric = self.metric_name();
        let mut s = format!(
            "summary: mean {metric} over {} repeats\n{:<10} {:>14} {:>5} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
            self.plan.repeats,
            "method",
            self.axis_name(),
            "runs",
            "fail",
            "question",
            "answer",
            "seconds",
            "q_utility",
            "a_utility",
        );
        for r in &self.summary {
            let value = if r.value.is_nan() {
                "-".to_string()
            } else {
                r.value.to_string()
            };
            s.push_str(&format!(
                "{:<10} {:>14} {:>5} {:>5} {} {} {} {} {}\n",
                r.method.name(),
                value,
                r.runs,
                r.failures,
                opt_fixed(r.question_metric, 10, 4),
                opt_fixed(r.answer_metric, 10, 4),
                opt_fixed(r.seconds, 10, 4),
                opt_fixed(r.question_utility, 10, 1),
                opt_fixed(r.answer_utility, 10, 1),
            ));
        }
        s
    }
}
