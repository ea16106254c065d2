//! Dump ingestion, preprocessing, feature extraction, the CSV dataset format
//! and synthetic data.

pub mod csv_io;
pub mod dump;
pub mod extract;
pub mod ingest;
pub mod preprocess;
pub mod rebalance;
pub mod synth;

pub use csv_io::{read_csv, write_csv, write_csv_with_header};
pub use dump::{parse_dump, DumpPaths, RawDump, RawEvent, RawPost, RawUser};
pub use extract::{extract_features, ExtractOptions, ANSWER_FEATURES, QUESTION_FEATURES};
pub use ingest::{build_dataset, ingest, IngestLog, IngestOptions};
pub use preprocess::{preprocess, Corpus};
pub use rebalance::rebalance;
pub use synth::{generate_synthetic, SynthSpec};
