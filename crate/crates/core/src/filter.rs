//! Rule-based evidence filtering and batch aggregation.
//!
//! Rules are applied in a fixed order and a rejected candidate records only
//! the first rule that matched:
//!
//! * `R1` low-credibility source: the candidate mentions a configured pattern
//!   such as "social media post".
//! * `R2` speaker self-quote: the candidate is attributed to the claim's own
//!   speaker.
//! * `R3` identical evidence: the candidate restates the claim.
//! * `R4` reciprocal question: the candidate is itself a question.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Claim;
use crate::error::{Error, Result};
use crate::retrieval::ScoredCandidate;
use crate::text::{alnum_terms, normalize, normalize_keep_punct};

pub const EVIDENCE_PER_CLAIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub const DEFAULT_LOW_CREDIBILITY_PATTERNS: &[&str] = &[
    "social media post",
    "facebook post",
    "internet meme",
    "viral post",
    "forwarded message",
    "whatsapp message",
    "tweet claims",
];

const ATTRIBUTION_VERBS: &[&str] = &["said", "says", "stated", "claimed", "tweeted"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub low_credibility_patterns: Vec<String>,
    pub identical_similarity_threshold: f64,
    pub enable_rules: BTreeSet<Rule>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            low_credibility_patterns: DEFAULT_LOW_CREDIBILITY_PATTERNS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            identical_similarity_threshold: 1.0,
            enable_rules: Rule::ALL.into_iter().collect(),
        }
    }
}

impl FilterConfig {
    /// Every rule off: the plain top-3 path.
    pub fn disabled() -> Self {
        FilterConfig {
            enable_rules: BTreeSet::new(),
            ..FilterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let th = self.identical_similarity_threshold;
        if !(th > 0.0 && th <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "identical_similarity_threshold must be in (0, 1], got {th}"
            )));
        }
        if self.enable_rules.contains(&Rule::R1)
            && self.low_credibility_patterns.iter().all(|p| normalize(p).is_empty())
        {
            return Err(Error::InvalidConfig(
                "low_credibility_patterns must be non-empty when R1 is enabled".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: FilterConfig =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub candidate: ScoredCandidate,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub claim_id: String,
    pub evidence: Vec<ScoredCandidate>,
    pub rejected: Vec<Rejection>,
}

impl EvidenceSet {
    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty()
    }
}

/// One line of the filtering audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub claim_id: String,
    pub evidence_text: String,
    pub rejected_by: Option<Rule>,
}

/// Audit lines for a set: kept evidence (`rejected_by: null`) then rejections.
pub fn audit_records(set: &EvidenceSet) -> Vec<AuditRecord> {
    let kept = set.evidence.iter().map(|c| AuditRecord {
        claim_id: set.claim_id.clone(),
        evidence_text: c.sentence.text.clone(),
        rejected_by: None,
    });
    let rejected = set.rejected.iter().map(|r| AuditRecord {
        claim_id: set.claim_id.clone(),
        evidence_text: r.candidate.sentence.text.clone(),
        rejected_by: Some(r.rule),
    });
    kept.chain(rejected).collect()
}

struct PreparedClaim {
    normalized: String,
    terms: HashSet<String>,
    speaker: Option<String>,
}

fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    let padded_hay = format!(" {} ", haystack);
    let padded_phrase = format!(" {} ", phrase);
    padded_hay.contains(&padded_phrase)
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

/// Spaced, punctuation-free form used for phrase matching.
fn phrase_form(text: &str) -> String {
    alnum_terms(text).join(" ")
}

fn matches_rule(rule: Rule, claim: &PreparedClaim, candidate: &ScoredCandidate, cfg: &FilterConfig) -> bool {
    let text = &candidate.sentence.text;
    match rule {
        Rule::R1 => {
            let form = phrase_form(text);
            cfg.low_credibility_patterns
                .iter()
                .any(|p| contains_phrase(&form, &phrase_form(p)))
        }
        Rule::R2 => {
            let Some(speaker) = &claim.speaker else {
                return false;
            };
            if candidate
                .sentence
                .speaker
                .as_deref()
                .is_some_and(|s| normalize(s) == *speaker)
            {
                return true;
            }
            let form = phrase_form(text);
            let speaker_form = phrase_form(speaker);
            ATTRIBUTION_VERBS
                .iter()
                .any(|verb| contains_phrase(&form, &format!("{speaker_form} {verb}")))
        }
        Rule::R3 => {
            if cfg.identical_similarity_threshold >= 1.0 {
                normalize(text) == claim.normalized
            } else {
                let terms: HashSet<String> = alnum_terms(text).into_iter().collect();
                jaccard(&terms, &claim.terms) >= cfg.identical_similarity_threshold
            }
        }
        Rule::R4 => normalize_keep_punct(text)
            .trim_end_matches(['"', '\'', '”', '’', ')', ']'])
            .ends_with('?'),
    }
}

/// Applies the enabled rules and keeps the top three survivors by score.
pub fn filter_candidates(claim: &Claim, candidates: &[ScoredCandidate], cfg: &FilterConfig) -> EvidenceSet {
    let prepared = PreparedClaim {
        normalized: normalize(&claim.text),
        terms: alnum_terms(&claim.text).into_iter().collect(),
        speaker: claim
            .speaker
            .as_deref()
            .map(normalize)
            .filter(|s| !s.is_empty()),
    };

    let mut survivors = Vec::new();
    let mut rejected = Vec::new();
    for candidate in candidates {
        let hit = Rule::ALL
            .into_iter()
            .filter(|r| cfg.enable_rules.contains(r))
            .find(|&r| matches_rule(r, &prepared, candidate, cfg));
        match hit {
            Some(rule) => rejected.push(Rejection {
                candidate: candidate.clone(),
                rule,
            }),
            None => survivors.push(candidate.clone()),
        }
    }
    // stable sort keeps retrieval tie order
    survivors.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    survivors.truncate(EVIDENCE_PER_CLAIM);

    EvidenceSet {
        claim_id: claim.id.clone(),
        evidence: survivors,
        rejected,
    }
}

/// Concatenates evidence texts in claim order then rank order, keeping the
/// first occurrence of exact duplicates.
pub fn aggregate_evidence(sets: &[EvidenceSet]) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for set in sets {
        for candidate in &set.evidence {
            if seen.insert(candidate.sentence.text.as_str()) {
                out.push(candidate.sentence.text.clone());
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(
            "no evidence survived selection for any claim; nothing to ground on".into(),
        ));
    }
    Ok(out)
}
