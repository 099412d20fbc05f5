//! Language-model scoring.
//!
//! A sequence is scored by the chain rule, `ln p(X) = Σ ln p(x_i | x_<i)`,
//! and perplexity is `exp(-ln p(X) / n)` where `n` counts real tokens only
//! (sentence-start padding is conditioned on, never counted).

mod external;
mod ngram;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_keep_punct;

pub use external::{BridgeEndpoint, BridgeRequest, BridgeResponse, ExternalScorer};
pub use ngram::{NgramModel, NgramScorer};

/// Epoch counts the grounding step is tuned over.
pub const EPOCH_GRID: [u32; 6] = [1, 2, 3, 5, 10, 20];

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]").expect("token regex")
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("token sequence is empty".into()));
        }
        Ok(TokenSequence { tokens })
    }
}

/// Lowercased word and punctuation tokens. Hyphens and apostrophes inside a
/// word stay attached.
pub fn tokenize(text: &str) -> Result<TokenSequence> {
    let normalized = normalize_keep_punct(text);
    let tokens: Vec<String> = TOKEN_RE
        .find_iter(&normalized)
        .map(|m| m.as_str().to_string())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyInput(format!("text {text:?} has no tokens")));
    }
    Ok(TokenSequence { tokens })
}

/// A model exposing per-token conditional probabilities.
pub trait TokenModel {
    /// Size of the predictable vocabulary, including the unknown-word type.
    fn vocabulary_size(&self) -> usize;

    /// Natural-log probability of `token` following `history`.
    fn log_prob(&self, history: &[String], token: &str) -> f64;
}

pub fn model_sequence_log_prob<M: TokenModel + ?Sized>(model: &M, seq: &TokenSequence) -> f64 {
    let tokens = seq.tokens();
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| model.log_prob(&tokens[..i], t))
        .sum()
}

pub fn perplexity_from_log_prob(log_prob: f64, token_count: usize) -> f64 {
    (-log_prob / token_count as f64).exp()
}

/// Perplexity of a sequence with the given per-token probabilities.
pub fn perplexity_from_probs(probs: &[f64]) -> f64 {
    let log_prob: f64 = probs.iter().map(|p| p.ln()).sum();
    perplexity_from_log_prob(log_prob, probs.len())
}

pub fn model_perplexity<M: TokenModel + ?Sized>(model: &M, text: &str) -> Result<f64> {
    let seq = tokenize(text)?;
    Ok(perplexity_from_log_prob(model_sequence_log_prob(model, &seq), seq.len()))
}

/// Uniform distribution over a fixed number of types.
#[derive(Debug, Clone, Copy)]
pub struct UniformModel {
    size: usize,
}

impl UniformModel {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "uniform model needs a non-empty vocabulary");
        UniformModel { size }
    }
}

impl TokenModel for UniformModel {
    fn vocabulary_size(&self) -> usize {
        self.size
    }

    fn log_prob(&self, _history: &[String], _token: &str) -> f64 {
        -(self.size as f64).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    AddK,
    KneserNey,
}

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().replace('-', "_").as_str() {
            "add_k" => Ok(Smoothing::AddK),
            "kneser_ney" | "kn" => Ok(Smoothing::KneserNey),
            other => Err(format!("unknown smoothing {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingConfig {
    pub epochs: u32,
    /// Forwarded to external scorers only.
    pub learning_rate: f64,
    pub ngram_order: usize,
    pub smoothing: Smoothing,
    pub add_k: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            epochs: 5,
            learning_rate: 5e-5,
            ngram_order: 3,
            smoothing: Smoothing::KneserNey,
            add_k: 0.1,
        }
    }
}

impl GroundingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.ngram_order == 0 {
            return Err(Error::InvalidConfig("ngram_order must be at least 1".into()));
        }
        if !(self.add_k > 0.0 && self.add_k.is_finite()) {
            return Err(Error::InvalidConfig("add_k must be positive".into()));
        }
        if !EPOCH_GRID.contains(&self.epochs) {
            log::info!(
                "epochs = {} is outside the explored grid {:?}",
                self.epochs,
                EPOCH_GRID
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Ngram,
    External,
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerKind::Ngram => f.write_str("ngram"),
            ScorerKind::External => f.write_str("external"),
        }
    }
}

impl FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "ngram" => Ok(ScorerKind::Ngram),
            "external" => Ok(ScorerKind::External),
            other => Err(format!("unknown scorer kind {other:?}")),
        }
    }
}

/// A language model that can be grounded on evidence and then queried for
/// perplexity. Grounding takes evidence texts only.
pub trait Scorer: Send + Sync {
    fn kind(&self) -> ScorerKind;

    fn is_grounded(&self) -> bool;

    /// Replaces any previous grounding with one built from `evidence`.
    fn ground(&mut self, evidence: &[String], cfg: &GroundingConfig) -> Result<()>;

    fn perplexity(&self, text: &str) -> Result<f64>;

    fn sequence_log_prob(&self, seq: &TokenSequence) -> Result<f64>;

    /// Drops grounding state.
    fn reset(&mut self) -> Result<()>;

    /// Token unit perplexity is normalized over ("word", "subword", ...).
    fn perplexity_unit(&self) -> String;
}

pub type ScorerHandle = Box<dyn Scorer>;

/// Validates inputs and grounds `scorer` on the aggregated evidence.
pub fn ground(scorer: &mut dyn Scorer, evidence: &[String], cfg: &GroundingConfig) -> Result<()> {
    if evidence.is_empty() {
        return Err(Error::EmptyInput("grounding evidence is empty".into()));
    }
    cfg.validate()?;
    scorer.ground(evidence, cfg)
}

pub fn perplexity(scorer: &dyn Scorer, text: &str) -> Result<f64> {
    if !scorer.is_grounded() {
        return Err(Error::NotGrounded);
    }
    scorer.perplexity(text)
}

pub fn sequence_log_prob(scorer: &dyn Scorer, seq: &TokenSequence) -> Result<f64> {
    if !scorer.is_grounded() {
        return Err(Error::NotGrounded);
    }
    scorer.sequence_log_prob(seq)
}
