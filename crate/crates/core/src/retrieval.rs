//! TF-IDF candidate retrieval over corpus sentences.
//!
//! Statistics are computed with sentences as the retrieval unit:
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, raw term counts for tf, and
//! cosine similarity between L2-normalized tf-idf vectors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::data::{Claim, SentenceUnit};
use crate::error::{Error, Result};
use crate::text::alnum_terms;

pub const INDEX_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TOP_K: usize = 10;

const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "for", "from", "had",
    "has", "have", "he", "her", "his", "i", "if", "in", "into", "is", "it", "its", "of", "on",
    "or", "our", "she", "so", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "to", "was", "we", "were", "which", "while", "who", "will",
    "with", "you", "your",
];

/// Term extraction switches. Both are off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermOptions {
    #[serde(default)]
    pub stem: bool,
    #[serde(default)]
    pub remove_stop_words: bool,
}

impl TermOptions {
    pub fn terms(&self, text: &str) -> Vec<String> {
        let stemmer = self.stem.then(|| Stemmer::create(Algorithm::English));
        alnum_terms(text)
            .into_iter()
            .filter(|t| !self.remove_stop_words || !STOP_WORDS.contains(&t.as_str()))
            .map(|t| match &stemmer {
                Some(s) => s.stem(&t).into_owned(),
                None => t,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub sentence: SentenceUnit,
    pub score: f64,
}

/// Anything that can rank corpus sentences against a claim.
pub trait EvidenceExtractor: Sync {
    fn top_candidates(&self, claim: &Claim, k: usize) -> Vec<ScoredCandidate>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub sentence: u32,
    pub tf: u32,
}

/// Inverted TF-IDF index.
///
/// Serialized field order: `format_version`, `options`, `sentences`,
/// `vocabulary` (sorted; a term's id is its position), `idf`, `postings`
/// (per term id, ascending sentence), `sentence_norms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfIdfIndex {
    format_version: u32,
    options: TermOptions,
    sentences: Vec<SentenceUnit>,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    postings: Vec<Vec<Posting>>,
    sentence_norms: Vec<f64>,
    #[serde(skip)]
    term_ids: HashMap<String, u32>,
}

pub fn smoothed_idf(sentence_count: usize, document_frequency: usize) -> f64 {
    ((1.0 + sentence_count as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

impl TfIdfIndex {
    pub fn build(sentences: Vec<SentenceUnit>, options: TermOptions) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty sentence list".into()));
        }

        let per_sentence: Vec<BTreeMap<String, u32>> = sentences
            .iter()
            .map(|s| {
                let mut counts = BTreeMap::new();
                for term in options.terms(&s.text) {
                    *counts.entry(term).or_insert(0) += 1;
                }
                counts
            })
            .collect();

        let mut vocabulary: Vec<String> = per_sentence
            .iter()
            .flat_map(|m| m.keys().cloned())
            .collect();
        vocabulary.sort_unstable();
        vocabulary.dedup();
        if vocabulary.is_empty() {
            return Err(Error::EmptyInput("no indexable terms in any sentence".into()));
        }
        let term_ids: HashMap<String, u32> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();

        let mut postings = vec![Vec::new(); vocabulary.len()];
        for (sid, counts) in per_sentence.iter().enumerate() {
            for (term, &tf) in counts {
                postings[term_ids[term] as usize].push(Posting {
                    sentence: sid as u32,
                    tf,
                });
            }
        }

        let n = sentences.len();
        let idf: Vec<f64> = postings.iter().map(|p| smoothed_idf(n, p.len())).collect();

        let mut squared = vec![0.0f64; n];
        for (tid, list) in postings.iter().enumerate() {
            for p in list {
                let w = p.tf as f64 * idf[tid];
                squared[p.sentence as usize] += w * w;
            }
        }
        let sentence_norms = squared.into_iter().map(f64::sqrt).collect();

        Ok(TfIdfIndex {
            format_version: INDEX_FORMAT_VERSION,
            options,
            sentences,
            vocabulary,
            idf,
            postings,
            sentence_norms,
            term_ids,
        })
    }

    pub fn options(&self) -> TermOptions {
        self.options
    }

    pub fn sentences(&self) -> &[SentenceUnit] {
        &self.sentences
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.term_ids.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_id(term).map(|id| self.idf[id as usize])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_id(term)
            .map_or(&[][..], |id| &self.postings[id as usize])
    }

    pub fn sentence_norm(&self, sentence: usize) -> f64 {
        self.sentence_norms[sentence]
    }

    /// Ranks sentences for arbitrary query text.
    pub fn query(&self, text: &str, k: usize) -> Vec<ScoredCandidate> {
        let mut query_tf: BTreeMap<u32, u32> = BTreeMap::new();
        for term in self.options.terms(text) {
            if let Some(id) = self.term_id(&term) {
                *query_tf.entry(id).or_insert(0) += 1;
            }
        }
        if query_tf.is_empty() || k == 0 {
            return Vec::new();
        }

        let weights: Vec<(u32, f64)> = query_tf
            .iter()
            .map(|(&id, &tf)| (id, tf as f64 * self.idf[id as usize]))
            .collect();
        let query_norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();

        let mut dots: BTreeMap<u32, f64> = BTreeMap::new();
        for &(id, qw) in &weights {
            let idf = self.idf[id as usize];
            for p in &self.postings[id as usize] {
                *dots.entry(p.sentence).or_insert(0.0) += qw * p.tf as f64 * idf;
            }
        }

        let mut scored: Vec<(u32, f64)> = dots
            .into_iter()
            .filter(|&(_, dot)| dot > 0.0)
            .map(|(sid, dot)| {
                let cos = dot / (query_norm * self.sentence_norms[sid as usize]);
                (sid, cos.min(1.0))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.tie_key(a.0).cmp(&self.tie_key(b.0)))
        });
        scored.truncate(k);
        scored
            .into_iter()
            .map(|(sid, score)| ScoredCandidate {
                sentence: self.sentences[sid as usize].clone(),
                score,
            })
            .collect()
    }

    fn tie_key(&self, sid: u32) -> (&str, usize) {
        let s = &self.sentences[sid as usize];
        (s.doc_id.as_str(), s.sent_index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).expect("index serialization");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut index: TfIdfIndex =
            serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: index.format_version,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let consistent = index.idf.len() == index.vocabulary.len()
            && index.postings.len() == index.vocabulary.len()
            && index.sentence_norms.len() == index.sentences.len();
        if !consistent {
            return Err(Error::parse(path, 1, "index arrays have inconsistent lengths"));
        }
        index.term_ids = index
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(index)
    }
}

impl EvidenceExtractor for TfIdfIndex {
    fn top_candidates(&self, claim: &Claim, k: usize) -> Vec<ScoredCandidate> {
        self.query(&claim.text, k)
    }
}

pub fn build_index(sentences: Vec<SentenceUnit>) -> Result<TfIdfIndex> {
    TfIdfIndex::build(sentences, TermOptions::default())
}

pub fn top_candidates(index: &TfIdfIndex, claim: &Claim, k: usize) -> Vec<ScoredCandidate> {
    index.top_candidates(claim, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(doc: &str, idx: usize, text: &str) -> SentenceUnit {
        SentenceUnit {
            doc_id: doc.into(),
            sent_index: idx,
            text: text.into(),
            speaker: None,
        }
    }

    #[test]
    fn single_sentence_symmetry() {
        let index = build_index(vec![unit("d", 0, "a b")]).unwrap();
        assert_eq!(index.vocabulary(), &["a".to_string(), "b".to_string()]);
        assert_eq!(index.idf("a"), index.idf("b"));
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let index = build_index(vec![
            unit("d", 0, "virus spreads"),
            unit("d", 1, "virus mutates"),
            unit("d", 2, "the virus"),
        ])
        .unwrap();
        assert!((index.idf("virus").unwrap() - 1.0).abs() < 1e-15);
        assert!(index.idf("spreads").unwrap() > 1.0);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(matches!(build_index(vec![]), Err(Error::EmptyInput(_))));
        assert!(matches!(build_index(vec![unit("d", 0, "...")]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn identical_claim_ranks_first() {
        let index = build_index(vec![
            unit("a", 0, "Masks reduce transmission of respiratory droplets."),
            unit("b", 0, "Droplets travel far."),
            unit("c", 0, "Completely unrelated sentence here."),
        ])
        .unwrap();
        let claim = Claim::new("c1", "Masks reduce transmission of respiratory droplets.");
        let top = top_candidates(&index, &claim, 10);
        assert_eq!(top[0].sentence.doc_id, "a");
        assert!((top[0].score - 1.0).abs() < 1e-9);
        assert_eq!(top.len(), 2);
    }

    #[test]
    fn out_of_vocabulary_claim_is_empty() {
        let index = build_index(vec![unit("a", 0, "alpha beta")]).unwrap();
        assert!(top_candidates(&index, &Claim::new("c", "gamma delta"), 10).is_empty());
    }

    #[test]
    fn ties_break_by_provenance() {
        let index = build_index(vec![
            unit("b", 1, "same words"),
            unit("a", 2, "same words"),
            unit("a", 1, "same words"),
        ])
        .unwrap();
        let top = index.query("same words", 10);
        let keys: Vec<_> = top.iter().map(|c| (c.sentence.doc_id.as_str(), c.sentence.sent_index)).collect();
        assert_eq!(keys, vec![("a", 1), ("a", 2), ("b", 1)]);
    }

    #[test]
    fn stemming_and_stop_words() {
        let opts = TermOptions { stem: true, remove_stop_words: true };
        assert_eq!(opts.terms("The viruses are spreading"), vec!["virus", "spread"]);
        let index = TfIdfIndex::build(vec![unit("a", 0, "the virus spreads")], opts).unwrap();
        assert_eq!(index.query("viruses spreading", 5).len(), 1);
    }

    #[test]
    fn save_and_load() {
        let index = build_index(vec![unit("a", 0, "alpha beta"), unit("b", 0, "beta gamma")]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        index.save(&path).unwrap();
        let loaded = TfIdfIndex::load(&path).unwrap();
        assert_eq!(loaded.query("beta gamma", 10), index.query("beta gamma", 10));

        let mut raw: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        raw["format_version"] = 99.into();
        fs::write(&path, raw.to_string()).unwrap();
        assert!(matches!(TfIdfIndex::load(&path), Err(Error::FormatVersion { found: 99, .. })));
    }
}
