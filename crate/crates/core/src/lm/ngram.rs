//! Interpolated Kneser-Ney and add-k n-gram models.

use std::collections::{HashMap, HashSet};

use super::{
    model_sequence_log_prob, perplexity_from_log_prob, tokenize, GroundingConfig, Scorer,
    ScorerKind, Smoothing, TokenModel, TokenSequence,
};
use crate::error::{Error, Result};

const UNK: u32 = 0;
const BOS: u32 = u32::MAX;
/// Used when count-of-counts cannot estimate a discount (no singletons or
/// no doubletons at an order).
const FALLBACK_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, Copy, Default)]
struct ContextStats {
    total: u64,
    distinct: u64,
}

#[derive(Debug, Clone, Default)]
struct OrderTable {
    /// Raw counts at the highest order, continuation counts below it.
    counts: HashMap<Vec<u32>, u64>,
    contexts: HashMap<Vec<u32>, ContextStats>,
    discount: f64,
}

impl OrderTable {
    fn from_counts(counts: HashMap<Vec<u32>, u64>) -> Self {
        let mut contexts: HashMap<Vec<u32>, ContextStats> = HashMap::new();
        let (mut n1, mut n2) = (0u64, 0u64);
        for (gram, &c) in &counts {
            let stats = contexts.entry(gram[..gram.len() - 1].to_vec()).or_default();
            stats.total += c;
            stats.distinct += 1;
            match c {
                1 => n1 += 1,
                2 => n2 += 1,
                _ => {}
            }
        }
        let discount = if n1 > 0 && n2 > 0 {
            n1 as f64 / (n1 as f64 + 2.0 * n2 as f64)
        } else {
            FALLBACK_DISCOUNT
        };
        OrderTable {
            counts,
            contexts,
            discount,
        }
    }
}

/// Word-level n-gram model with a vocabulary fixed at training time.
///
/// Tokens outside the vocabulary map to a reserved unknown type that only
/// receives smoothing mass, so every probability is strictly positive.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    smoothing: Smoothing,
    add_k: f64,
    /// Index 0 is the unknown type.
    vocabulary: Vec<String>,
    ids: HashMap<String, u32>,
    /// `tables[m - 1]` holds m-grams.
    tables: Vec<OrderTable>,
}

impl NgramModel {
    pub fn train(sequences: &[TokenSequence], order: usize, smoothing: Smoothing, add_k: f64) -> Self {
        assert!(order >= 1, "n-gram order must be at least 1");
        let mut types: Vec<String> = sequences
            .iter()
            .flat_map(|s| s.tokens().iter().cloned())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        types.sort_unstable();
        let mut vocabulary = Vec::with_capacity(types.len() + 1);
        vocabulary.push("<unk>".to_string());
        vocabulary.extend(types);
        let ids: HashMap<String, u32> = vocabulary
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();

        let mut raw: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
        for seq in sequences {
            let mut padded = vec![BOS; order - 1];
            padded.extend(seq.tokens().iter().map(|t| ids[t]));
            for end in (order - 1)..padded.len() {
                for m in 1..=order {
                    let gram = padded[end + 1 - m..=end].to_vec();
                    *raw[m - 1].entry(gram).or_insert(0) += 1;
                }
            }
        }

        let mut tables = Vec::with_capacity(order);
        for m in 1..=order {
            let counts = if m == order || smoothing == Smoothing::AddK {
                raw[m - 1].clone()
            } else {
                let mut continuation: HashMap<Vec<u32>, u64> = HashMap::new();
                for gram in raw[m].keys() {
                    *continuation.entry(gram[1..].to_vec()).or_insert(0) += 1;
                }
                continuation
            };
            tables.push(OrderTable::from_counts(counts));
        }

        NgramModel {
            order,
            smoothing,
            add_k,
            vocabulary,
            ids,
            tables,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Known types, excluding the unknown type.
    pub fn known_types(&self) -> &[String] {
        &self.vocabulary[1..]
    }

    pub fn unknown_token(&self) -> &str {
        &self.vocabulary[0]
    }

    /// Discount used at order `m` (1-based) under Kneser-Ney.
    pub fn discount(&self, m: usize) -> f64 {
        self.tables[m - 1].discount
    }

    fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    fn context_ids(&self, history: &[String]) -> Vec<u32> {
        let width = self.order - 1;
        let mut ctx = vec![BOS; width.saturating_sub(history.len())];
        let start = history.len().saturating_sub(width);
        ctx.extend(history[start..].iter().map(|t| self.id(t)));
        ctx
    }

    fn prob_ids(&self, context: &[u32], word: u32) -> f64 {
        match self.smoothing {
            Smoothing::KneserNey => self.kneser_ney(context, word),
            Smoothing::AddK => self.add_k_prob(context, word),
        }
    }

    fn kneser_ney(&self, context: &[u32], word: u32) -> f64 {
        let uniform = 1.0 / self.vocabulary.len() as f64;
        let mut prob = uniform;
        // lowest order first; context shrinks from the left
        for m in 1..=self.order {
            let history = &context[context.len() + 1 - m..];
            let table = &self.tables[m - 1];
            let Some(stats) = table.contexts.get(history) else {
                continue;
            };
            let mut gram = history.to_vec();
            gram.push(word);
            let count = table.counts.get(&gram).copied().unwrap_or(0) as f64;
            let total = stats.total as f64;
            let d = table.discount;
            prob = (count - d).max(0.0) / total + d * stats.distinct as f64 / total * prob;
        }
        prob
    }

    fn add_k_prob(&self, context: &[u32], word: u32) -> f64 {
        let table = &self.tables[self.order - 1];
        let v = self.vocabulary.len() as f64;
        let k = self.add_k;
        let total = table
            .contexts
            .get(context)
            .map_or(0.0, |s| s.total as f64);
        let mut gram = context.to_vec();
        gram.push(word);
        let count = table.counts.get(&gram).copied().unwrap_or(0) as f64;
        (count + k) / (total + k * v)
    }
}

impl TokenModel for NgramModel {
    fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn log_prob(&self, history: &[String], token: &str) -> f64 {
        let context = self.context_ids(history);
        self.prob_ids(&context, self.id(token)).ln()
    }
}

/// Built-in scorer. Grounding trains a fresh [`NgramModel`] on the evidence;
/// `epochs` and `learning_rate` are recorded but have no effect on counting.
#[derive(Debug, Clone, Default)]
pub struct NgramScorer {
    model: Option<NgramModel>,
    config: Option<GroundingConfig>,
}

impl NgramScorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn model(&self) -> Option<&NgramModel> {
        self.model.as_ref()
    }

    pub fn grounding_config(&self) -> Option<&GroundingConfig> {
        self.config.as_ref()
    }
}

impl Scorer for NgramScorer {
    fn kind(&self) -> ScorerKind {
        ScorerKind::Ngram
    }

    fn is_grounded(&self) -> bool {
        self.model.is_some()
    }

    fn ground(&mut self, evidence: &[String], cfg: &GroundingConfig) -> Result<()> {
        let sequences: Vec<TokenSequence> = evidence.iter().filter_map(|e| tokenize(e).ok()).collect();
        if sequences.is_empty() {
            return Err(Error::EmptyInput("evidence contains no tokens".into()));
        }
        self.model = Some(NgramModel::train(&sequences, cfg.ngram_order, cfg.smoothing, cfg.add_k));
        self.config = Some(cfg.clone());
        Ok(())
    }

    fn perplexity(&self, text: &str) -> Result<f64> {
        let seq = tokenize(text)?;
        let log_prob = self.sequence_log_prob(&seq)?;
        Ok(perplexity_from_log_prob(log_prob, seq.len()))
    }

    fn sequence_log_prob(&self, seq: &TokenSequence) -> Result<f64> {
        let model = self.model.as_ref().ok_or(Error::NotGrounded)?;
        Ok(model_sequence_log_prob(model, seq))
    }

    fn reset(&mut self) -> Result<()> {
        self.model = None;
        self.config = None;
        Ok(())
    }

    fn perplexity_unit(&self) -> String {
        "word".to_string()
    }
}
