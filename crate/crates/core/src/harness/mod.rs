//! Synthetic corpora and scoring against ground truth.

pub mod corpus;
pub mod eval;
pub mod synth;

pub use corpus::{run_corpus, CorpusReport, PageOutcome};
pub use eval::{match_regions, ClassCounts, EvalReport};
pub use synth::{parse_page_specs, synth_page, FracBox, GroundTruth, PageSpec, TruthRegion};
