//! Dump files to dataset, with a log of every counter along the way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::pipeline::dump::{parse_dump, DumpPaths, ParseCounters, RawDump};
use crate::pipeline::extract::{extract_features, ExtractCounters, ExtractOptions};
use crate::pipeline::preprocess::{preprocess, PreprocessCounters};
use crate::pipeline::rebalance::{rebalance, RebalanceCounters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub window_hours: f64,
    pub rebalance: bool,
    pub seed: u64,
    pub extract: ExtractOptions,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            window_hours: 24.0,
            rebalance: false,
            seed: 0,
            extract: ExtractOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestLog {
    pub options: IngestOptions,
    pub parse: ParseCounters,
    pub preprocess: PreprocessCounters,
    pub extract: ExtractCounters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rebalance: Option<RebalanceCounters>,
    pub questions: u64,
    pub answers: u64,
}

impl IngestLog {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            what: "ingest log".into(),
            message: e.to_string(),
        })
    }
}

/// Preprocessing, feature extraction and optional rebalancing of parsed
/// records.
pub fn build_dataset(raw: &RawDump, opts: &IngestOptions) -> Result<(Dataset, IngestLog)> {
    let corpus = preprocess(raw, opts.window_hours)?;
    let (mut d, extract) = extract_features(&corpus, &opts.extract)?;
    let mut rebalanced = None;
    if opts.rebalance {
        let (r, counters) = rebalance(&d, opts.seed);
        d = r;
        rebalanced = Some(counters);
    }
    let log = IngestLog {
        options: opts.clone(),
        parse: raw.counters.clone(),
        preprocess: corpus.counters,
        extract,
        rebalance: rebalanced,
        questions: d.n_questions() as u64,
        answers: d.n_answers() as u64,
    };
    Ok((d, log))
}

pub fn ingest(paths: &DumpPaths, opts: &IngestOptions) -> Result<(Dataset, IngestLog)> {
    build_dataset(&parse_dump(paths)?, opts)
}
