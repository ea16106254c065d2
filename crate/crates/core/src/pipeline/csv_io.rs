//! Canonical two-file CSV dataset layout.
//!
//! `questions.csv` has columns `qid,score,<question features>` and
//! `answers.csv` has `aid,qid,score,<answer features>`. An empty score marks an
//! unknown label. Lines starting with `#` are comments; writers use them to
//! echo the configuration that produced the files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{AssociationMatrix, Dataset, FeatureMatrix, QualityVector};
use crate::pipeline::extract::{ANSWER_FEATURES, QUESTION_FEATURES};

pub const QUESTIONS_FILE: &str = "questions.csv";
pub const ANSWERS_FILE: &str = "answers.csv";
pub const QUESTION_FEATURE_PREFIX: &str = "q_feature_";
pub const ANSWER_FEATURE_PREFIX: &str = "a_feature_";

fn known_feature(name: &str, canonical: &[&str], prefix: &str) -> bool {
    canonical.contains(&name)
        || name
            .strip_prefix(prefix)
            .is_some_and(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()))
}

fn csv_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn format_score(q: &QualityVector, i: usize) -> String {
    if q.is_labeled(i) {
        q.value(i).to_string()
    } else {
        String::new()
    }
}

fn write_file(
    path: &Path,
    header_lines: &[String],
    columns: Vec<String>,
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::Io(e.into());
    w.write_record(&columns).map_err(to_io)?;
    for r in rows {
        w.write_record(&r).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(d: &Dataset, dir: &Path) -> Result<()> {
    write_csv_with_header(d, dir, &[])
}

/// Writes both files, each starting with `header_lines` as `#` comments.
pub fn write_csv_with_header(d: &Dataset, dir: &Path, header_lines: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut q_cols = vec!["qid".to_string(), "score".to_string()];
    q_cols.extend(d.question_features.schema().iter().cloned());
    write_file(
        &dir.join(QUESTIONS_FILE),
        header_lines,
        q_cols,
        (0..d.n_questions()).map(|i| {
            let mut r = vec![
                d.question_ids[i].to_string(),
                format_score(&d.question_scores, i),
            ];
            r.extend(d.question_features.row(i).iter().map(f64::to_string));
            r
        }),
    )?;
    let mut a_cols = vec!["aid".to_string(), "qid".to_string(), "score".to_string()];
    a_cols.extend(d.answer_features.schema().iter().cloned());
    write_file(
        &dir.join(ANSWERS_FILE),
        header_lines,
        a_cols,
        (0..d.n_answers()).map(|j| {
            let q = d.association.parent(j);
            let mut r = vec![
                d.answer_ids[j].to_string(),
                d.question_ids[q].to_string(),
                format_score(&d.answer_scores, j),
            ];
            r.extend(d.answer_features.row(j).iter().map(f64::to_string));
            r
        }),
    )
}

struct Table {
    path: PathBuf,
    features: Vec<String>,
    /// `(line, id columns, score, features)` per record.
    rows: Vec<(u64, Vec<u64>, Option<f64>, Vec<f64>)>,
}

fn read_table(
    path: PathBuf,
    id_columns: &[&str],
    canonical: &[&str],
    prefix: &str,
) -> Result<Table> {
    let file = File::open(&path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(&path, 1, e.to_string()))?
        .clone();
    let header_line = headers.position().map_or(1, |p| p.line());
    let n_fixed = id_columns.len() + 1;
    let expected_fixed: Vec<&str> = id_columns.iter().copied().chain(["score"]).collect();
    let got_fixed: Vec<&str> = headers.iter().take(n_fixed).collect();
    if got_fixed != expected_fixed {
        return Err(csv_error(
            &path,
            header_line,
            format!("header must start with {}", expected_fixed.join(",")),
        ));
    }
    let features: Vec<String> = headers.iter().skip(n_fixed).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for f in &features {
        if !known_feature(f, canonical, prefix) {
            return Err(csv_error(
                &path,
                header_line,
                format!("unknown column {f:?}"),
            ));
        }
        if !seen.insert(f) {
            return Err(csv_error(
                &path,
                header_line,
                format!("duplicate column {f:?}"),
            ));
        }
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(&path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut ids = Vec::with_capacity(id_columns.len());
        for (k, name) in id_columns.iter().enumerate() {
            let v = rec[k].trim();
            ids.push(
                v.parse::<u64>()
                    .map_err(|_| csv_error(&path, line, format!("bad {name} {v:?}")))?,
            );
        }
        let s = rec[id_columns.len()].trim();
        let score = if s.is_empty() {
            None
        } else {
            Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| csv_error(&path, line, format!("bad score {s:?}")))?,
            )
        };
        let mut values = Vec::with_capacity(features.len());
        for (k, name) in features.iter().enumerate() {
            let v = rec[n_fixed + k].trim();
            values.push(
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| csv_error(&path, line, format!("bad value {v:?} for {name}")))?,
            );
        }
        rows.push((line, ids, score, values));
    }
    Ok(Table {
        path,
        features,
        rows,
    })
}

fn scores(rows: &[(u64, Vec<u64>, Option<f64>, Vec<f64>)]) -> QualityVector {
    let values = rows.iter().map(|r| r.2.unwrap_or(0.0)).collect();
    let mask = rows.iter().map(|r| r.2.is_some()).collect();
    QualityVector::new(values, mask).expect("finite scores")
}

pub fn read_csv(dir: &Path) -> Result<Dataset> {
    let qt = read_table(
        dir.join(QUESTIONS_FILE),
        &["qid"],
        &QUESTION_FEATURES,
        QUESTION_FEATURE_PREFIX,
    )?;
    let at = read_table(
        dir.join(ANSWERS_FILE),
        &["aid", "qid"],
        &ANSWER_FEATURES,
        ANSWER_FEATURE_PREFIX,
    )?;

    let mut q_index = HashMap::new();
    let mut q_line = Vec::new();
    for (k, (line, ids, _, _)) in qt.rows.iter().enumerate() {
        if q_index.insert(ids[0], k).is_some() {
            return Err(csv_error(
                &qt.path,
                *line,
                format!("duplicate qid {}", ids[0]),
            ));
        }
        q_line.push(*line);
    }
    let mut seen = HashSet::new();
    let mut parents = Vec::with_capacity(at.rows.len());
    for (line, ids, _, _) in &at.rows {
        if !seen.insert(ids[0]) {
            return Err(csv_error(
                &at.path,
                *line,
                format!("duplicate aid {}", ids[0]),
            ));
        }
        let q = q_index.get(&ids[1]).ok_or_else(|| {
            csv_error(
                &at.path,
                *line,
                format!("qid {} not in {QUESTIONS_FILE}", ids[1]),
            )
        })?;
        parents.push(*q);
    }
    let association = AssociationMatrix::from_parents(qt.rows.len(), &parents)?;
    if let Some(i) = (0..qt.rows.len()).find(|&i| association.degree(i) == 0) {
        return Err(csv_error(
            &qt.path,
            q_line[i],
            format!("question {} has no answers", qt.rows[i].1[0]),
        ));
    }
    let q_values: Vec<Vec<f64>> = qt.rows.iter().map(|r| r.3.clone()).collect();
    let a_values: Vec<Vec<f64>> = at.rows.iter().map(|r| r.3.clone()).collect();
    Dataset::new(
        FeatureMatrix::from_rows(qt.features.clone(), &q_values)?,
        FeatureMatrix::from_rows(at.features.clone(), &a_values)?,
        scores(&qt.rows),
        scores(&at.rows),
        association,
        qt.rows.iter().map(|r| r.1[0]).collect(),
        at.rows.iter().map(|r| r.1[0]).collect(),
    )
}
