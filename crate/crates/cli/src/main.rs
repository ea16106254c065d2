//! `cops` command-line tool: ingest dumps, synthesize data, analyze score
//! correlations, train and apply models, and run experiment plans.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cops::eval::metrics::{
    bin_distribution, pearson, question_answer_pairs, score_histogram, AnswerSummary, BIN_COUNT,
    BIN_LABELS,
};
use cops::pipeline::{
    generate_synthetic, ingest, read_csv, write_csv_with_header, DumpPaths, IngestOptions,
    SynthSpec,
};
use cops::{run_experiment, Dataset, Hyperparameters, Method, Plan, QualityModel, Task};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "cops",
    version,
    about = "Joint question/answer quality prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a CSV dataset from data-dump XML files.
    Ingest(IngestArgs),
    /// Generate a synthetic dataset with correlated question/answer quality.
    Synth(SynthArgs),
    /// Correlation, score-bin table and histograms of a dataset.
    Analyze(AnalyzeArgs),
    /// Fit a model on a random split and report held-out metrics.
    Train(TrainArgs),
    /// Score every post of a dataset with a saved model.
    Predict(PredictArgs),
    /// Run an experiment plan.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    posts: PathBuf,
    #[arg(long)]
    votes: PathBuf,
    #[arg(long)]
    comments: PathBuf,
    #[arg(long)]
    users: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24.0)]
    window_hours: f64,
    /// Down-sample the 0- and 1-score posts.
    #[arg(long)]
    rebalance: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use reputation 0 for users created after the post.
    #[arg(long)]
    zero_later_reputation: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    questions: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    answers_min: usize,
    #[arg(long, default_value_t = 5)]
    answers_max: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// separate, cops-iter, cops-qq, cops-qg, cops-gg or cops-gq.
    #[arg(long)]
    method: Method,
    #[arg(long)]
    task: Task,
    /// Percentage of questions used for training, in (0, 100).
    #[arg(long)]
    train_frac: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    gamma: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// `# cops <command>` followed by `# key = value` lines.
fn echo(command: &str, settings: &[(&str, String)]) -> Vec<String> {
    let mut lines = vec![format!("cops {} {command}", env!("CARGO_PKG_VERSION"))];
    lines.extend(settings.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_commented(w: &mut impl Write, lines: &[String]) -> std::io::Result<()> {
    for l in lines {
        writeln!(w, "# {l}")?;
    }
    Ok(())
}

fn run_ingest(a: IngestArgs) -> CliResult {
    let mut opts = IngestOptions {
        window_hours: a.window_hours,
        rebalance: a.rebalance,
        seed: a.seed,
        ..IngestOptions::default()
    };
    opts.extract.zero_reputation_for_later_users = a.zero_later_reputation;
    let paths = DumpPaths {
        posts: a.posts,
        votes: a.votes,
        comments: a.comments,
        users: a.users,
    };
    let (data, log) = ingest(&paths, &opts)?;
    let header = echo(
        "ingest",
        &[
            ("posts", paths.posts.display().to_string()),
            ("votes", paths.votes.display().to_string()),
            ("comments", paths.comments.display().to_string()),
            ("users", paths.users.display().to_string()),
            ("window_hours", a.window_hours.to_string()),
            ("rebalance", a.rebalance.to_string()),
            ("seed", a.seed.to_string()),
            ("zero_later_reputation", a.zero_later_reputation.to_string()),
        ],
    );
    write_csv_with_header(&data, &a.out, &header)?;
    let mut w = create(&a.out.join("ingest_log.toml"))?;
    write_commented(&mut w, &header)?;
    w.write_all(log.to_toml()?.as_bytes())?;
    w.flush()?;
    println!(
        "{} questions, {} answers -> {}",
        data.n_questions(),
        data.n_answers(),
        a.out.display()
    );
    Ok(())
}

fn run_synth(a: SynthArgs) -> CliResult {
    let spec = SynthSpec {
        questions: a.questions,
        answers_min: a.answers_min,
        answers_max: a.answers_max,
        rho: a.rho,
        noise: a.noise,
        seed: a.seed,
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec)?;
    let spec_toml = toml::to_string(&spec)?;
    let settings: Vec<(&str, String)> = spec_toml
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k, v.to_string()))
        .collect();
    write_csv_with_header(&data, &a.out, &echo("synth", &settings))?;
    println!(
        "{} questions, {} answers -> {}",
        data.n_questions(),
        data.n_answers(),
        a.out.display()
    );
    Ok(())
}

fn analysis_text(d: &Dataset) -> CliResult<String> {
    let mut s = String::new();
    writeln!(s, "questions = {}", d.n_questions())?;
    writeln!(s, "answers = {}", d.n_answers())?;
    for (name, summary) in [
        ("average", AnswerSummary::Average),
        ("maximum", AnswerSummary::Maximum),
    ] {
        let (q, a) = question_answer_pairs(d, summary);
        match pearson(&q, &a) {
            Ok(p) => writeln!(
                s,
                "pearson_{name}: r = {:.6}, n = {}, t = {:.4}, p = {:.4e}",
                p.r, p.n, p.t, p.p_value
            )?,
            Err(e) => writeln!(s, "pearson_{name}: undefined ({e})")?,
        }
    }

    let table = bin_distribution(d);
    writeln!(s)?;
    writeln!(
        s,
        "answer bin distribution per question bin (rows sum to 1; count = answers)"
    )?;
    write!(s, "{:>10} {:>7}", "question", "count")?;
    for l in BIN_LABELS {
        write!(s, " {l:>7}")?;
    }
    writeln!(s)?;
    for (i, label) in BIN_LABELS.iter().enumerate() {
        write!(s, "{label:>10} {:>7}", table.row_total(i))?;
        for v in table.row(i) {
            write!(s, " {v:>7.4}")?;
        }
        writeln!(s)?;
    }
    let empty: Vec<&str> = table.empty_rows().iter().map(|&i| BIN_LABELS[i]).collect();
    if !empty.is_empty() {
        writeln!(s, "empty question bins: {}", empty.join(", "))?;
    }
    writeln!(s, "mean bin distance = {:.4}", table.mean_bin_distance())?;

    let hq = score_histogram(&d.question_scores.labeled_values());
    let ha = score_histogram(&d.answer_scores.labeled_values());
    writeln!(s)?;
    writeln!(s, "{:>10} {:>10} {:>10}", "bin", "questions", "answers")?;
    for k in 0..BIN_COUNT {
        writeln!(s, "{:>10} {:>10} {:>10}", BIN_LABELS[k], hq[k], ha[k])?;
    }
    Ok(s)
}

fn run_analyze(a: AnalyzeArgs) -> CliResult {
    let data = read_csv(&a.data)?;
    let text = analysis_text(&data)?;
    let mut w = create(&a.out)?;
    write_commented(
        &mut w,
        &echo("analyze", &[("data", a.data.display().to_string())]),
    )?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    print!("{text}");
    Ok(())
}

fn run_train(a: TrainArgs) -> CliResult {
    let hyper = Hyperparameters {
        eta: a.eta,
        lambda: a.lambda,
        gamma: a.gamma,
        max_iter: a.max_iter,
        tol: a.tol,
        ..Hyperparameters::default()
    };
    let data = read_csv(&a.data)?;
    let (train, test) = data.split(a.train_frac, a.seed)?;
    let model = QualityModel::fit(&train, a.method, a.task, &hyper, Some(a.seed))?;
    let eval = model.evaluate(&test)?;

    let mut w = create(&a.model_out)?;
    write_commented(
        &mut w,
        &echo(
            "train",
            &[
                ("data", a.data.display().to_string()),
                ("train_frac", a.train_frac.to_string()),
                ("train_questions", train.n_questions().to_string()),
            ],
        ),
    )?;
    w.write_all(model.to_toml()?.as_bytes())?;
    w.flush()?;

    let metric = match a.task {
        Task::Regression => "rmse",
        Task::Classification => "prediction_error",
    };
    let show = |m: Option<f64>| m.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    println!(
        "method = {}, task = {}, train questions = {}, test questions = {}",
        a.method,
        a.task,
        train.n_questions(),
        test.n_questions()
    );
    println!(
        "question {metric} = {} ({} posts)",
        show(eval.question_metric),
        eval.questions_evaluated
    );
    println!(
        "answer {metric} = {} ({} posts)",
        show(eval.answer_metric),
        eval.answers_evaluated
    );
    println!("model -> {}", a.model_out.display());
    Ok(())
}

fn run_predict(a: PredictArgs) -> CliResult {
    let model = QualityModel::load(&a.model)?;
    let data = read_csv(&a.data)?;
    model.check_schema(&data)?;
    let p = model.predict(&data)?;
    let raw = model.denormalize(&p);

    let mut w = create(&a.out)?;
    write_commented(
        &mut w,
        &echo(
            "predict",
            &[
                ("model", a.model.display().to_string()),
                ("data", a.data.display().to_string()),
                ("method", model.method.to_string()),
                ("task", model.task.to_string()),
            ],
        ),
    )?;
    let last = match model.task {
        Task::Classification => "label",
        Task::Regression => "raw_score",
    };
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["kind", "id", "qid", "score", last])?;
    let q_labels = p.question_labels();
    let a_labels = p.answer_labels();
    let extra = |side: usize, k: usize| -> String {
        match &raw {
            Some((rq, ra)) => [rq, ra][side][k].to_string(),
            None => [&q_labels, &a_labels][side][k].to_string(),
        }
    };
    for i in 0..data.n_questions() {
        let id = data.question_ids[i].to_string();
        csv.write_record([
            "question".to_string(),
            id.clone(),
            id,
            p.question_scores[i].to_string(),
            extra(0, i),
        ])?;
    }
    for j in 0..data.n_answers() {
        csv.write_record([
            "answer".to_string(),
            data.answer_ids[j].to_string(),
            data.question_ids[data.association.parent(j)].to_string(),
            p.answer_scores[j].to_string(),
            extra(1, j),
        ])?;
    }
    csv.flush()?;
    println!(
        "{} questions, {} answers scored -> {}",
        data.n_questions(),
        data.n_answers(),
        a.out.display()
    );
    Ok(())
}

fn run_experiment_cmd(a: ExperimentArgs) -> CliResult {
    let plan = Plan::load(&a.plan)?;
    let data = plan.load_data()?;
    let report = run_experiment(&plan, &data)?;
    let mut w = create(&a.out)?;
    report.write(&mut w)?;
    w.flush()?;
    print!("{}", report.summary_table());
    let failed = report.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", report.records.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => run_ingest(a),
        Command::Synth(a) => run_synth(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Train(a) => run_train(a),
        Command::Predict(a) => run_predict(a),
        Command::Experiment(a) => run_experiment_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
