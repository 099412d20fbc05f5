//! Unsupervised claim debunking with evidence-grounded language models.
//!
//! The pipeline retrieves TF-IDF evidence for each claim, filters it with a
//! fixed set of rules, grounds a language model on the aggregated evidence,
//! and labels a claim `False` when its perplexity exceeds a threshold
//! calibrated by stratified k-fold cross-validation.

pub mod config;
pub mod data;
pub mod debunker;
pub mod error;
pub mod eval;
pub mod filter;
pub mod lm;
pub mod retrieval;
pub mod text;

pub use config::{Objective, RunConfig};
pub use data::{Claim, Label, SentenceUnit, SourceDocument};
pub use debunker::{classify, cross_validate, run_pipeline, search_threshold, CalibrationResult, Verdict};
pub use error::{Error, Result};
pub use filter::{aggregate_evidence, filter_candidates, EvidenceSet, FilterConfig};
pub use lm::{perplexity, tokenize, GroundingConfig, Scorer, ScorerHandle};
pub use retrieval::{build_index, top_candidates, ScoredCandidate, TfIdfIndex};
