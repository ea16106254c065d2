//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line with its
//! measured values; the run fails if any criterion fails.
//!
//! Run with `cargo test -p cops --test acceptance --release` for realistic
//! timings; the debug build checks the same tolerances.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cops::eval::experiment::{Axis, DataSource, Sweep};
use cops::eval::metrics::{
    bin_distribution, bin_score, pearson, prediction_error, rmse, utility_ratio, BIN_COUNT,
};
use cops::joint::{fit_gd, fit_qq_closed_form};
use cops::pipeline::{
    generate_synthetic, ingest, read_csv, rebalance, write_csv, DumpPaths, IngestOptions, SynthSpec,
};
use cops::rng::seeded;
use cops::separate::{fit_ridge, fit_separate_gd, GdOptions};
use cops::{
    prepare, run_experiment, AssociationMatrix, Dataset, FeatureMatrix, Hyperparameters,
    JointProblem, JointVariant, LossKind, Method, Plan, QualityVector, Task,
};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::beta::beta_reg;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------------------
// 1. ridge against a long-run gradient descent

/// Minimizes `Σ_labeled (x β - y)² + λ ‖β‖²` by plain gradient descent with
/// step `1 / L`, `L` the largest Hessian eigenvalue.
fn ridge_by_descent(x: &[Vec<f64>], y: &[f64], labeled: &[bool], lambda: f64) -> Vec<f64> {
    let d = x[0].len();
    let mut gram = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for ((row, &yi), &l) in x.iter().zip(y).zip(labeled) {
        if !l {
            continue;
        }
        for r in 0..d {
            xty[r] += row[r] * yi;
            for c in 0..d {
                gram[r][c] += row[r] * row[c];
            }
        }
    }
    let hess = |v: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|r| 2.0 * ((0..d).map(|c| gram[r][c] * v[c]).sum::<f64>() + lambda * v[r]))
            .collect()
    };
    let mut v = vec![1.0; d];
    let mut top = 0.0;
    for _ in 0..500 {
        let hv = hess(&v);
        let norm = hv.iter().map(|a| a * a).sum::<f64>().sqrt();
        top = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = hv.iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (1.01 * top);
    let mut beta = vec![0.0; d];
    for _ in 0..2_000_000 {
        let hb = hess(&beta);
        let grad: Vec<f64> = (0..d).map(|r| hb[r] - 2.0 * xty[r]).collect();
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
        for r in 0..d {
            beta[r] -= step * grad[r];
        }
    }
    beta
}

fn criterion_1() -> Outcome {
    let lambda = 0.01;
    let mut rng = seeded(101);
    let mut worst: f64 = 0.0;
    let mut library_time = Duration::ZERO;
    for _ in 0..20 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(2 * d + 2..=50);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| normal(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| 3.0 * normal(&mut rng)).collect();
        let labeled: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
        let fm = FeatureMatrix::from_unnamed_rows(&x).unwrap();
        let qv = QualityVector::new(y.clone(), labeled.clone()).unwrap();
        let start = Instant::now();
        let beta = fit_ridge(&fm, &qv, lambda).unwrap();
        library_time += start.elapsed();
        let oracle = ridge_by_descent(&x, &y, &labeled, lambda);
        for (a, b) in beta.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-6 && library_time < Duration::from_secs(1),
        format!(
            "max coefficient diff {worst:.2e} (<= 1e-6), fit_ridge total {:.3} s",
            library_time.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. gradient against finite differences

/// Direct transcription of the coupled objective over dense inputs.
fn naive_objective(p: &JointProblem, bq: &[f64], ba: &[f64]) -> f64 {
    let dot = |x: &[f64], b: &[f64]| x.iter().zip(b).map(|(a, c)| a * c).sum::<f64>();
    let loss = |k: LossKind, u: f64, v: f64| match k {
        LossKind::Square => (u - v).powi(2),
        LossKind::Sigmoid => 1.0 / (1.0 + (u * v).exp()),
    };
    let (g, h) = (p.variant.g(), p.variant.h());
    let m = p.association.to_dense();
    let mut total = 0.0;
    for i in 0..p.questions.rows() {
        let u = dot(p.questions.row(i), bq);
        if p.question_targets.is_labeled(i) {
            total += loss(g, u, p.question_targets.value(i));
        }
        let mut v = 0.0;
        for (j, w) in m[i].iter().enumerate() {
            v += w * dot(p.answers.row(j), ba);
        }
        total += p.eta * loss(h, u, v);
    }
    for j in 0..p.answers.rows() {
        if p.answer_targets.is_labeled(j) {
            total += loss(g, dot(p.answers.row(j), ba), p.answer_targets.value(j));
        }
    }
    total + p.lambda * (dot(bq, bq) + dot(ba, ba))
}

fn small_problem(variant: JointVariant) -> JointProblem {
    let mut rng = seeded(202);
    let (n_q, n_a) = (10, 25);
    let mut parents: Vec<usize> = (0..n_q).collect();
    parents.extend((n_q..n_a).map(|_| rng.random_range(0..n_q)));
    let rows = |n: usize, d: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| normal(rng)).collect())
            .collect()
    };
    let xq = rows(n_q, 4, &mut rng);
    let xa = rows(n_a, 3, &mut rng);
    let label = |rng: &mut rand_chacha::ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let yq: Vec<f64> = (0..n_q).map(|_| label(&mut rng)).collect();
    let ya: Vec<f64> = (0..n_a).map(|_| label(&mut rng)).collect();
    let mq: Vec<bool> = (0..n_q).map(|i| i % 3 != 0).collect();
    let ma: Vec<bool> = (0..n_a).map(|j| j % 4 != 1).collect();
    JointProblem::new(
        FeatureMatrix::from_unnamed_rows(&xq).unwrap(),
        FeatureMatrix::from_unnamed_rows(&xa).unwrap(),
        QualityVector::new(yq, mq).unwrap(),
        QualityVector::new(ya, ma).unwrap(),
        AssociationMatrix::from_parents(n_q, &parents)
            .unwrap()
            .row_normalize()
            .unwrap(),
        variant,
        0.7,
        0.05,
    )
    .unwrap()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst_grad: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    let mut rng = seeded(203);
    for variant in JointVariant::ALL {
        let p = small_problem(variant);
        let (dq, da) = (p.questions.cols(), p.answers.cols());
        for _ in 0..20 {
            let bq: Vec<f64> = (0..dq).map(|_| normal(&mut rng)).collect();
            let ba: Vec<f64> = (0..da).map(|_| normal(&mut rng)).collect();
            let (gq, ga) = p.gradient(&bq, &ba).unwrap();
            let analytic: Vec<f64> = gq.into_iter().chain(ga).collect();

            let h = 1e-6;
            let mut fd = Vec::with_capacity(dq + da);
            for k in 0..dq + da {
                let shifted = |delta: f64| {
                    let (mut q, mut a) = (bq.clone(), ba.clone());
                    if k < dq {
                        q[k] += delta;
                    } else {
                        a[k - dq] += delta;
                    }
                    p.objective(&q, &a).unwrap()
                };
                fd.push((shifted(h) - shifted(-h)) / (2.0 * h));
            }
            let diff = analytic
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst_grad = worst_grad.max(diff / norm);

            let lib = p.objective(&bq, &ba).unwrap();
            let naive = naive_objective(&p, &bq, &ba);
            worst_obj = worst_obj.max((lib - naive).abs() / naive.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_grad <= 1e-4 && worst_obj <= 1e-12 && secs < 5.0,
        format!(
            "max relative gradient error {worst_grad:.2e} (<= 1e-4), \
             objective vs direct transcription {worst_obj:.2e}, {secs:.2} s"
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. closed form against gradient descent

/// Synthetic data with exactly `n_q` questions and `n_a` answers, taking the
/// first seed that produces that many answers.
fn synthetic_exact(n_q: usize, n_a: usize, min: usize, max: usize) -> Dataset {
    (0..10_000)
        .map(|seed| {
            generate_synthetic(&SynthSpec {
                questions: n_q,
                answers_min: min,
                answers_max: max,
                seed,
                ..SynthSpec::default()
            })
            .unwrap()
        })
        .find(|d| d.n_answers() == n_a)
        .expect("some seed gives the requested answer count")
}

/// Largest eigenvalue of the square/square Hessian, built entrywise.
fn qq_hessian_top(p: &JointProblem) -> f64 {
    let (dq, da) = (p.questions.cols(), p.answers.cols());
    let n = dq + da;
    let m = p.association.to_dense();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..p.questions.rows() {
        let xq = p.questions.row(i);
        let mut z = vec![0.0; da];
        for (j, w) in m[i].iter().enumerate() {
            for c in 0..da {
                z[c] += w * p.answers.get(j, c);
            }
        }
        // coupling row of the stacked design: [xq, -z]
        let row: Vec<f64> = xq.iter().copied().chain(z.iter().map(|v| -v)).collect();
        let lab = if p.question_targets.is_labeled(i) {
            1.0
        } else {
            0.0
        };
        for r in 0..n {
            for c in 0..n {
                hess[r][c] += 2.0 * p.eta * row[r] * row[c];
            }
        }
        for r in 0..dq {
            for c in 0..dq {
                hess[r][c] += 2.0 * lab * xq[r] * xq[c];
            }
        }
    }
    for j in 0..p.answers.rows() {
        if !p.answer_targets.is_labeled(j) {
            continue;
        }
        let xa = p.answers.row(j);
        for r in 0..da {
            for c in 0..da {
                hess[dq + r][dq + c] += 2.0 * xa[r] * xa[c];
            }
        }
    }
    for (k, row) in hess.iter_mut().enumerate() {
        row[k] += 2.0 * p.lambda;
    }
    let mut v = vec![1.0; n];
    let mut top = 0.0;
    for _ in 0..2000 {
        let hv: Vec<f64> = hess
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let norm = hv.iter().map(|a| a * a).sum::<f64>().sqrt();
        top = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = hv.iter().map(|a| a / norm).collect();
    }
    top
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let data = synthetic_exact(50, 120, 2, 3);
    let hyper = Hyperparameters::default();
    let prepared = prepare(
        &data,
        Method::Joint(JointVariant::Qq),
        Task::Regression,
        &hyper,
        None,
    )
    .unwrap();
    let p = prepared.joint_problem(JointVariant::Qq).unwrap();
    let step = 1.0 / qq_hessian_top(&p);
    let closed = fit_qq_closed_form(&p).unwrap();
    let gd = fit_gd(&p, step, 10_000, 0.0).unwrap();
    let f_closed = p.objective(&closed.beta_q, &closed.beta_a).unwrap();
    let f_gd = p.objective(&gd.beta_q, &gd.beta_a).unwrap();
    let gap = (f_gd - f_closed) / f_closed.abs();
    let secs = start.elapsed().as_secs_f64();
    // a closed form can sit a rounding error above an iterate at the same
    // minimum, hence the 1e-12 relative slack on the ordering
    let ordered = f_closed <= f_gd * (1.0 + 1e-12);
    outcome(
        ordered && gap <= 1e-4 && secs < 30.0,
        format!(
            "closed form {f_closed:.12} vs descent {f_gd:.12} (step {step:.3e}), \
             relative gap {gap:.2e} (<= 1e-4), {secs:.2} s"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. decoupling at eta = 0

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let data = generate_synthetic(&SynthSpec {
        questions: 120,
        seed: 4,
        ..SynthSpec::default()
    })
    .unwrap();
    let hyper = Hyperparameters {
        eta: 0.0,
        ..Hyperparameters::default()
    };
    let max_diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for variant in JointVariant::ALL {
        let task = match variant {
            JointVariant::Qq => Task::Regression,
            _ => Task::Classification,
        };
        let prepared = prepare(&data, Method::Joint(variant), task, &hyper, None).unwrap();
        let p = prepared.joint_problem(variant).unwrap();
        let (joint, separate) = match variant.g() {
            LossKind::Square => {
                let joint = if variant == JointVariant::Qq {
                    fit_qq_closed_form(&p).unwrap()
                } else {
                    fit_gd(&p, 1.0 / qq_hessian_top(&p), 200, 0.0).unwrap()
                };
                let sep = (
                    fit_ridge(&p.questions, &p.question_targets, p.lambda).unwrap(),
                    fit_ridge(&p.answers, &p.answer_targets, p.lambda).unwrap(),
                );
                (joint, sep)
            }
            LossKind::Sigmoid => {
                let (step, iters) = (1e-2, 200);
                let joint = fit_gd(&p, step, iters, 0.0).unwrap();
                let side = |x: &FeatureMatrix, y: &QualityVector| {
                    let opts = GdOptions {
                        step,
                        max_iter: iters,
                        tol: 0.0,
                        init: Some(fit_ridge(x, y, p.lambda).unwrap()),
                    };
                    fit_separate_gd(x, y, p.lambda, LossKind::Sigmoid, &opts)
                        .unwrap()
                        .beta
                };
                let sep = (
                    side(&p.questions, &p.question_targets),
                    side(&p.answers, &p.answer_targets),
                );
                (joint, sep)
            }
        };
        let d = max_diff(&joint.beta_q, &separate.0).max(max_diff(&joint.beta_a, &separate.1));
        parts.push(format!("{variant} {d:.1e}"));
        worst = worst.max(d);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs < 5.0,
        format!(
            "max coefficient diff {} (<= 1e-8), {secs:.2} s",
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 5, 6, 10. synthetic experiments

/// Ten seeded repeats on 2,000 synthetic questions with rho = 0.6.
///
/// With 1% training data the transferred designs have 13 columns for about
/// 20 questions and 40 thresholded answers, so the 1% plans use lambda = 100
/// for every method; lambda = 0.01 leaves both fits nearly unregularized.
fn synthetic_plan(methods: Vec<Method>, train_percent: f64, lambda: f64) -> Plan {
    Plan {
        methods,
        task: Task::Classification,
        repeats: 10,
        seed: 2024,
        train_percent,
        question_label_fraction: 1.0,
        answer_label_fraction: 1.0,
        parallel: true,
        sweep: None,
        params: Hyperparameters {
            lambda,
            ..Hyperparameters::default()
        },
        data: DataSource {
            dir: None,
            synthetic: Some(SynthSpec {
                questions: 2000,
                rho: 0.6,
                seed: 2024,
                ..SynthSpec::default()
            }),
        },
    }
}

fn answer_errors(report: &cops::ExperimentReport, method: Method) -> Vec<Option<f64>> {
    report
        .records
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.answer_metric)
        .collect()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let qq = Method::Joint(JointVariant::Qq);
    let plan = synthetic_plan(vec![Method::Separate, qq], 1.0, 100.0);
    let data = plan.load_data().unwrap();
    let report = run_experiment(&plan, &data).unwrap();
    let sep = answer_errors(&report, Method::Separate);
    let cops = answer_errors(&report, qq);
    let mut wins = 0;
    let mut rel = Vec::new();
    for (s, c) in sep.iter().zip(&cops) {
        let (s, c) = (
            s.expect("separate answer error"),
            c.expect("cops answer error"),
        );
        if c <= s {
            wins += 1;
        }
        rel.push((s - c) / s);
    }
    let mean_rel = rel.iter().sum::<f64>() / rel.len() as f64;
    let mean = |v: &[Option<f64>]| v.iter().flatten().sum::<f64>() / v.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wins >= 9 && mean_rel >= 0.03 && secs < 120.0,
        format!(
            "CoPs-QQ <= Separate in {wins}/10 (>= 9), mean relative improvement {:.2}% (>= 3%), \
             mean answer error {:.4} vs {:.4}, {secs:.1} s",
            100.0 * mean_rel,
            mean(&cops),
            mean(&sep)
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let qq = Method::Joint(JointVariant::Qq);
    let mut plan = synthetic_plan(vec![Method::Separate, qq], 1.0, 100.0);
    plan.answer_label_fraction = 0.0;
    let data = plan.load_data().unwrap();
    let report = run_experiment(&plan, &data).unwrap();
    let cops = answer_errors(&report, qq);
    let below = cops.iter().filter(|e| e.is_some_and(|e| e < 0.5)).count();
    // with no answer labels the ridge fit is the zero vector, which labels
    // every answer low quality
    let sep = answer_errors(&report, Method::Separate);
    let sep_mean = sep.iter().flatten().sum::<f64>() / sep.len() as f64;
    let worst = cops.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        below == 10 && secs < 120.0,
        format!(
            "CoPs-QQ answer error < 0.5 in {below}/10 (worst {worst:.4}); \
             Separate falls back to a constant label, mean error {sep_mean:.4}, {secs:.1} s"
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let qq = Method::Joint(JointVariant::Qq);
    let mut plan = synthetic_plan(vec![qq], 10.0, 0.01);
    plan.sweep = Some(Sweep {
        axis: Axis::Lambda,
        values: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
    });
    let data = plan.load_data().unwrap();
    let report = run_experiment(&plan, &data).unwrap();
    let spread = |pick: fn(&cops::eval::experiment::SummaryRow) -> Option<f64>| {
        let v: Vec<f64> = report.summary.iter().map(|r| pick(r).unwrap()).collect();
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        (hi - lo, lo, hi)
    };
    let (sq, qlo, qhi) = spread(|r| r.question_metric);
    let (sa, alo, ahi) = spread(|r| r.answer_metric);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        sq <= 0.02 && sa <= 0.02 && secs < 120.0,
        format!(
            "error spread over lambda: questions {sq:.4} ({qlo:.4}..{qhi:.4}), \
             answers {sa:.4} ({alo:.4}..{ahi:.4}) (<= 0.02), {secs:.1} s"
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. descent time linear in the number of posts

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let hyper = Hyperparameters::default();
    let mut points = Vec::new();
    for n_q in [250, 2500, 25_000] {
        let data = generate_synthetic(&SynthSpec {
            questions: n_q,
            seed: 7,
            ..SynthSpec::default()
        })
        .unwrap();
        let posts = (data.n_questions() + data.n_answers()) as f64;
        let prepared = prepare(
            &data,
            Method::Joint(JointVariant::Qq),
            Task::Regression,
            &hyper,
            None,
        )
        .unwrap();
        let p = prepared.joint_problem(JointVariant::Qq).unwrap();
        let mut times: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                let fit = fit_gd(&p, hyper.gamma, 20, 0.0).unwrap();
                assert_eq!(fit.iterations, 20);
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        points.push((posts, times[2]));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let secs = start.elapsed().as_secs_f64();
    let shown: Vec<String> = points
        .iter()
        .map(|(x, t)| format!("{x:.0} posts {:.2} ms", 1e3 * t))
        .collect();
    outcome(
        r2 >= 0.95 && secs < 300.0,
        format!(
            "R² {r2:.4} (>= 0.95) over {}, {secs:.1} s",
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. pipeline golden files

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let dump = fixtures().join("dump");
    let paths = DumpPaths {
        posts: dump.join("Posts.xml"),
        votes: dump.join("Votes.xml"),
        comments: dump.join("Comments.xml"),
        users: dump.join("Users.xml"),
    };
    let (data, log) = ingest(&paths, &IngestOptions::default()).unwrap();
    let out = tempfile::tempdir().unwrap();
    write_csv(&data, out.path()).unwrap();
    let mut mismatches = Vec::new();
    for name in ["questions.csv", "answers.csv"] {
        let got = std::fs::read(out.path().join(name)).unwrap();
        let want = std::fs::read(dump.join("golden").join(name)).unwrap();
        if got != want {
            mismatches.push(name.to_string());
        }
    }
    let counters = log.to_toml().unwrap();
    let want_counters = std::fs::read_to_string(dump.join("golden").join("counters.toml")).unwrap();
    if counters != want_counters {
        mismatches.push(format!("counters.toml:\n{counters}"));
    }
    let reread = read_csv(out.path()).unwrap();
    if reread != data {
        mismatches.push("csv round trip".into());
    }

    // 300 zero-score questions with one score-3 answer each, and 20
    // score-7 questions with ten score-1 answers each
    let mut q_scores = vec![0.0; 300];
    q_scores.extend([7.0; 20]);
    let mut a_scores = vec![3.0; 300];
    a_scores.extend([1.0; 200]);
    let mut parents: Vec<usize> = (0..300).collect();
    parents.extend((0..200).map(|k| 300 + k / 10));
    let n_q = q_scores.len();
    let n_a = a_scores.len();
    let fixture = Dataset::new(
        FeatureMatrix::from_unnamed_rows(&vec![vec![1.0]; n_q]).unwrap(),
        FeatureMatrix::from_unnamed_rows(&vec![vec![1.0]; n_a]).unwrap(),
        QualityVector::labeled(q_scores),
        QualityVector::labeled(a_scores),
        AssociationMatrix::from_parents(n_q, &parents).unwrap(),
        (1..=n_q as u64).collect(),
        (1001..=1000 + n_a as u64).collect(),
    )
    .unwrap();
    let (kept, _) = rebalance(&fixture, 8);
    let count = |v: &QualityVector, s: f64| v.values().iter().filter(|&&x| x == s).count();
    let zero_q = count(&kept.question_scores, 0.0);
    let one_a = count(&kept.answer_scores, 1.0);
    let others_intact =
        count(&kept.question_scores, 7.0) == 20 && count(&kept.answer_scores, 3.0) == zero_q;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && zero_q == 100 && one_a == 100 && others_intact && secs < 1.0,
        format!(
            "golden mismatches: [{}]; rebalance kept {zero_q}/300 zero-score questions and \
             {one_a}/200 one-score answers (want 100/100), {secs:.3} s",
            mismatches.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. metric oracles

fn naive_bin(s: i64) -> usize {
    // bins in order: s<0, s=0 .. s=5, 6..10, 11..50, 51..100, s>100
    let ranges: [(i64, i64); 11] = [
        (i64::MIN, -1),
        (0, 0),
        (1, 1),
        (2, 2),
        (3, 3),
        (4, 4),
        (5, 5),
        (6, 10),
        (11, 50),
        (51, 100),
        (101, i64::MAX),
    ];
    ranges
        .iter()
        .position(|&(lo, hi)| lo <= s && s <= hi)
        .unwrap()
        + 1
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };
    let mut rng = seeded(909);
    for instance in 0..50 {
        let n = rng.random_range(1..=200);
        let p: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let a: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let mut sum = 0.0;
        for i in 0..n {
            sum += (p[i] - a[i]) * (p[i] - a[i]);
        }
        check(rmse(&p, &a).unwrap() == (sum / n as f64).sqrt(), "rmse");

        let lp: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let la: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let mut wrong = 0;
        for i in 0..n {
            if lp[i] != la[i] {
                wrong += 1;
            }
        }
        check(
            prediction_error(&lp, &la).unwrap() == wrong as f64 / n as f64,
            "prediction_error",
        );

        let err = rng.random::<f64>();
        let secs = rng.random_range(0.001..100.0);
        check(
            utility_ratio(err, secs).unwrap() == (1.0 - err) / secs,
            "utility_ratio",
        );

        // integer data over a power-of-four count keeps every intermediate
        // sum exact, so the integer oracle and the library must agree bitwise
        let m = [4usize, 16, 64, 256][instance % 4];
        let (x, y) = loop {
            let x: Vec<i64> = (0..m).map(|_| rng.random_range(-20..=20)).collect();
            let y: Vec<i64> = x
                .iter()
                .map(|&v| v * rng.random_range(-2..=2) + rng.random_range(-10..=10))
                .collect();
            let distinct = |v: &[i64]| v.iter().any(|&e| e != v[0]);
            if distinct(&x) && distinct(&y) {
                break (x, y);
            }
        };
        let mi = m as i128;
        let (sx, sy): (i128, i128) = (
            x.iter().map(|&v| v as i128).sum(),
            y.iter().map(|&v| v as i128).sum(),
        );
        let mut nxy = 0i128;
        let mut nxx = 0i128;
        let mut nyy = 0i128;
        for i in 0..m {
            let (a, b) = (x[i] as i128, y[i] as i128);
            nxy += a * b;
            nxx += a * a;
            nyy += b * b;
        }
        let nxy = mi * nxy - sx * sy;
        let nxx = mi * nxx - sx * sx;
        let nyy = mi * nyy - sy * sy;
        let r = (nxy as f64 / ((nxx as f64).sqrt() * (nyy as f64).sqrt())).clamp(-1.0, 1.0);
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let got = pearson(&xf, &yf).unwrap();
        check(got.r == r && got.n == m, "pearson r");
        let df = (m - 2) as f64;
        let t = if r.abs() == 1.0 {
            r.signum() * f64::INFINITY
        } else {
            r * (df / (1.0 - r * r)).sqrt()
        };
        check(got.t == t, "pearson t");
        // two-sided Student-t tail through the regularized incomplete beta
        let p_value = if t.is_infinite() {
            0.0
        } else {
            beta_reg(df / 2.0, 0.5, df / (df + t * t))
        };
        check(
            (got.p_value - p_value).abs() <= 1e-12 * p_value.max(1e-300) + 1e-15,
            "pearson p",
        );

        let n_q = rng.random_range(1..=30);
        let parents: Vec<usize> = (0..n_q)
            .chain((0..rng.random_range(0..=60)).map(|_| rng.random_range(0..n_q)))
            .collect();
        let score = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(-30..=150) as f64;
        let qs: Vec<f64> = (0..n_q).map(|_| score(&mut rng)).collect();
        let as_: Vec<f64> = (0..parents.len()).map(|_| score(&mut rng)).collect();
        let qm: Vec<bool> = (0..n_q).map(|_| rng.random_bool(0.9)).collect();
        let am: Vec<bool> = (0..parents.len()).map(|_| rng.random_bool(0.9)).collect();
        let d = Dataset::new(
            FeatureMatrix::from_unnamed_rows(&vec![vec![0.0]; n_q]).unwrap(),
            FeatureMatrix::from_unnamed_rows(&vec![vec![0.0]; parents.len()]).unwrap(),
            QualityVector::new(qs.clone(), qm.clone()).unwrap(),
            QualityVector::new(as_.clone(), am.clone()).unwrap(),
            AssociationMatrix::from_parents(n_q, &parents).unwrap(),
            (0..n_q as u64).collect(),
            (0..parents.len() as u64).map(|j| 1000 + j).collect(),
        )
        .unwrap();
        let mut counts = [[0u64; BIN_COUNT]; BIN_COUNT];
        for (j, &q) in parents.iter().enumerate() {
            if qm[q] && am[j] {
                counts[naive_bin(qs[q] as i64) - 1][naive_bin(as_[j] as i64) - 1] += 1;
            }
        }
        let table = bin_distribution(&d);
        check(table.counts == counts, "bin_distribution counts");
        for (i, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            let want: Vec<f64> = row
                .iter()
                .map(|&c| {
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    }
                })
                .collect();
            check(table.row(i).to_vec() == want, "bin_distribution fractions");
        }
    }
    for s in -200..=200 {
        check(bin_score(s) == naive_bin(s), "bin_score");
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 1.0,
        format!(
            "50 instances, scores -200..=200; mismatches: [{}], {secs:.3} s",
            failures.join(", ")
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "ridge closed form matches long-run descent", criterion_1),
        (2, "joint gradients match finite differences", criterion_2),
        (3, "square/square closed form vs descent", criterion_3),
        (4, "eta = 0 decouples into separate fits", criterion_4),
        (5, "CoPs-QQ beats Separate at 1% training", criterion_5),
        (
            6,
            "CoPs-QQ predicts answers without answer labels",
            criterion_6,
        ),
        (7, "descent time is linear in posts", criterion_7),
        (
            8,
            "pipeline golden files and rebalance fixture",
            criterion_8,
        ),
        (9, "metrics match naive oracles", criterion_9),
        (10, "CoPs-QQ error is flat across lambda", criterion_10),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let line = match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(o) => {
                if !o.pass {
                    failed += 1;
                }
                format!(
                    "{} criterion {n}: {name}: {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                )
            }
            Err(_) => {
                failed += 1;
                format!("FAIL criterion {n}: {name}: panicked")
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
