//! Claim classification by perplexity threshold, threshold calibration with
//! stratified k-fold cross-validation, and the end-to-end pipeline.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Objective, RunConfig};
use crate::data::{segment_corpus, Claim, Label, SourceDocument};
use crate::error::{Error, Result};
use crate::eval::metrics::{compute_metrics, metrics_for_threshold, MetricBundle, MetricSummary};
use crate::filter::{aggregate_evidence, filter_candidates, EvidenceSet};
use crate::lm::{self, Scorer};
use crate::retrieval::{EvidenceExtractor, TfIdfIndex};

/// Per-fold thresholds reported for the scientific claim set.
pub const SCIENTIFIC_REFERENCE_THRESHOLDS: [f64; 4] = [15.0, 24.0, 17.0, 20.0];
/// Per-fold thresholds reported for the political claim set.
pub const POLITIFACT_REFERENCE_THRESHOLDS: [f64; 4] = [18.0, 19.0, 17.0, 22.0];

/// `False` iff `ppl > threshold`; a tie is `True`.
pub fn classify(ppl: f64, threshold: f64) -> Label {
    if ppl > threshold {
        Label::False
    } else {
        Label::True
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim_id: String,
    pub ppl: f64,
    pub threshold: f64,
    pub predicted: Label,
    pub gold: Option<Label>,
    pub fold: Option<usize>,
    pub no_evidence: bool,
}

/// Perplexity of one claim before thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimScore {
    pub claim_id: String,
    pub ppl: f64,
    pub gold: Option<Label>,
    pub no_evidence: bool,
}

fn objective_value(metrics: &MetricBundle, objective: Objective) -> f64 {
    match objective {
        Objective::Accuracy => metrics.accuracy,
        Objective::F1Macro => metrics.f1_macro,
    }
}

/// Threshold maximizing `objective` over midpoints between consecutive
/// distinct perplexities, plus one candidate below the minimum and one above
/// the maximum. Ties go to the smaller threshold.
pub fn search_threshold(scored: &[(f64, Label)], objective: Objective) -> Result<f64> {
    for label in [Label::False, Label::True] {
        if !scored.iter().any(|s| s.1 == label) {
            return Err(Error::MissingClass(label));
        }
    }
    if let Some(bad) = scored.iter().find(|s| !(s.0 > 0.0 && s.0.is_finite())) {
        return Err(Error::InvalidConfig(format!("perplexity must be positive and finite, got {}", bad.0)));
    }

    let mut values: Vec<f64> = scored.iter().map(|s| s.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() == 1 {
        log::warn!("all perplexities equal {}; every claim classifies True", values[0]);
        return Ok(values[0]);
    }

    let mut candidates = Vec::with_capacity(values.len() + 1);
    candidates.push(values[0] / 2.0);
    candidates.extend(values.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(values[values.len() - 1] + 1.0);

    let mut best = candidates[0];
    let mut best_value = objective_value(&metrics_for_threshold(scored, best), objective);
    for &th in &candidates[1..] {
        let value = objective_value(&metrics_for_threshold(scored, th), objective);
        if value > best_value {
            best = th;
            best_value = value;
        }
    }
    Ok(best)
}

/// Stratified fold assignment. Within each class, items are ordered by id,
/// shuffled with the seed, and dealt round-robin; the deal continues across
/// classes so fold sizes differ by at most one.
pub fn stratified_folds(items: &[(&str, Label)], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; items.len()];
    let mut next = 0usize;
    for label in [Label::False, Label::True] {
        let mut members: Vec<usize> = (0..items.len()).filter(|&i| items[i].1 == label).collect();
        members.sort_by(|&a, &b| items[a].0.cmp(items[b].0));
        members.shuffle(&mut rng);
        for idx in members {
            folds[idx] = next % k;
            next += 1;
        }
    }
    folds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    Search(Objective),
    Preset(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub claim_id: String,
    pub ppl: f64,
    pub gold: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub k: usize,
    pub seed: u64,
    pub policy: ThresholdPolicy,
    pub fold_assignments: BTreeMap<String, usize>,
    pub per_fold_threshold: Vec<f64>,
    pub per_fold_metrics: Vec<MetricBundle>,
    /// Unweighted mean of the per-fold metrics.
    pub averaged_metrics: MetricSummary,
}

impl CalibrationResult {
    pub fn threshold_for(&self, claim_id: &str) -> Option<(usize, f64)> {
        self.fold_assignments
            .get(claim_id)
            .map(|&f| (f, self.per_fold_threshold[f]))
    }
}

fn check_fold_inputs(scored: &[LabeledScore], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k = {k} leaves no training split; use k >= 2"
        )));
    }
    if scored.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} scored claims cannot fill {k} folds",
            scored.len()
        )));
    }
    for label in [Label::False, Label::True] {
        if !scored.iter().any(|s| s.gold == label) {
            return Err(Error::MissingClass(label));
        }
    }
    Ok(())
}

pub fn assign_folds(scored: &[LabeledScore], k: usize, seed: u64) -> Result<Vec<usize>> {
    check_fold_inputs(scored, k)?;
    let keyed: Vec<(&str, Label)> = scored.iter().map(|s| (s.claim_id.as_str(), s.gold)).collect();
    Ok(stratified_folds(&keyed, k, seed))
}

/// k-fold calibration: each fold is classified with a threshold chosen on
/// the remaining folds (or taken from presets).
pub fn cross_validate(scored: &[LabeledScore], k: usize, seed: u64, policy: &ThresholdPolicy) -> Result<CalibrationResult> {
    let folds = assign_folds(scored, k, seed)?;
    if let ThresholdPolicy::Preset(presets) = policy {
        if presets.len() != k {
            return Err(Error::InvalidConfig(format!("{} preset thresholds for k = {k}", presets.len())));
        }
    }

    let mut per_fold_threshold = Vec::with_capacity(k);
    let mut per_fold_metrics = Vec::with_capacity(k);
    for fold in 0..k {
        let (test, train): (Vec<_>, Vec<_>) = scored
            .iter()
            .zip(&folds)
            .partition(|(_, &f)| f == fold);
        let train: Vec<(f64, Label)> = train.iter().map(|(s, _)| (s.ppl, s.gold)).collect();
        let test: Vec<(f64, Label)> = test.iter().map(|(s, _)| (s.ppl, s.gold)).collect();
        if test.is_empty() {
            return Err(Error::InsufficientData(format!("fold {fold} is empty; try a smaller k")));
        }

        let threshold = match policy {
            ThresholdPolicy::Preset(presets) => presets[fold],
            ThresholdPolicy::Search(objective) => search_threshold(&train, *objective).map_err(|e| match e {
                Error::MissingClass(label) => Error::InsufficientData(format!(
                    "training split for fold {fold} has no {label} claims; try a smaller k"
                )),
                other => other,
            })?,
        };
        per_fold_threshold.push(threshold);
        per_fold_metrics.push(metrics_for_threshold(&test, threshold));
    }

    Ok(CalibrationResult {
        k,
        seed,
        policy: policy.clone(),
        fold_assignments: scored
            .iter()
            .zip(&folds)
            .map(|(s, &f)| (s.claim_id.clone(), f))
            .collect(),
        averaged_metrics: MetricSummary::mean(&per_fold_metrics),
        per_fold_threshold,
        per_fold_metrics,
    })
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub evidence_sets: Vec<EvidenceSet>,
    /// Aggregated grounding evidence; one entry per grounding call.
    pub grounding_batches: Vec<Vec<String>>,
    pub scores: Vec<ClaimScore>,
    pub calibration: Option<CalibrationResult>,
    pub verdicts: Vec<Verdict>,
    pub perplexity_unit: String,
}

impl PipelineRun {
    /// Fold-averaged metrics under cross-validation, otherwise metrics over
    /// all labeled verdicts.
    pub fn summary(&self) -> Result<MetricSummary> {
        if let Some(cal) = &self.calibration {
            return Ok(cal.averaged_metrics);
        }
        let pairs: Vec<(Label, Option<Label>)> = self
            .verdicts
            .iter()
            .filter(|v| v.gold.is_some())
            .map(|v| (v.predicted, v.gold))
            .collect();
        Ok(compute_metrics(&pairs)?.summary())
    }

    pub fn labeled_scores(&self) -> Vec<(f64, Label)> {
        self.scores
            .iter()
            .filter_map(|s| s.gold.map(|g| (s.ppl, g)))
            .collect()
    }
}

/// Retrieval followed by rule filtering, in parallel across claims.
pub fn select_evidence(
    claims: &[Claim],
    extractor: &dyn EvidenceExtractor,
    cfg: &RunConfig,
) -> Vec<EvidenceSet> {
    claims
        .par_iter()
        .map(|claim| {
            let candidates = extractor.top_candidates(claim, cfg.retrieval.k);
            filter_candidates(claim, &candidates, &cfg.filter)
        })
        .collect()
}

/// Scores claims against a grounded scorer, in parallel.
pub fn score_claims(claims: &[Claim], sets: &[EvidenceSet], scorer: &dyn Scorer) -> Result<Vec<ClaimScore>> {
    let no_evidence: HashMap<&str, bool> = sets
        .iter()
        .map(|s| (s.claim_id.as_str(), s.is_empty()))
        .collect();
    claims
        .par_iter()
        .map(|claim| {
            Ok(ClaimScore {
                claim_id: claim.id.clone(),
                ppl: lm::perplexity(scorer, &claim.text)?,
                gold: claim.label,
                no_evidence: no_evidence.get(claim.id.as_str()).copied().unwrap_or(true),
            })
        })
        .collect()
}

fn labeled(scores: &[ClaimScore]) -> Result<Vec<LabeledScore>> {
    scores
        .iter()
        .map(|s| {
            s.gold
                .map(|gold| LabeledScore {
                    claim_id: s.claim_id.clone(),
                    ppl: s.ppl,
                    gold,
                })
                .ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "claim {:?} has no gold label; cross-validation needs labels (or set a fixed threshold)",
                        s.claim_id
                    ))
                })
        })
        .collect()
}

fn threshold_policy(cfg: &RunConfig) -> ThresholdPolicy {
    match &cfg.calibration.preset_thresholds {
        Some(presets) => ThresholdPolicy::Preset(presets.clone()),
        None => ThresholdPolicy::Search(cfg.calibration.objective),
    }
}

/// Turns scores into verdicts using a fixed threshold or cross-validation.
pub fn calibrate_and_classify(
    scores: &[ClaimScore],
    cfg: &RunConfig,
) -> Result<(Option<CalibrationResult>, Vec<Verdict>)> {
    if let Some(th) = cfg.calibration.fixed_threshold {
        let verdicts = scores
            .iter()
            .map(|s| Verdict {
                claim_id: s.claim_id.clone(),
                ppl: s.ppl,
                threshold: th,
                predicted: classify(s.ppl, th),
                gold: s.gold,
                fold: None,
                no_evidence: s.no_evidence,
            })
            .collect();
        return Ok((None, verdicts));
    }

    let seed = cfg
        .calibration
        .seed
        .ok_or_else(|| Error::InvalidConfig("a seed is required for cross-validation".into()))?;
    let labeled = labeled(scores)?;
    let calibration = cross_validate(&labeled, cfg.calibration.k, seed, &threshold_policy(cfg))?;
    let verdicts = scores
        .iter()
        .map(|s| {
            let (fold, th) = calibration
                .threshold_for(&s.claim_id)
                .expect("every scored claim has a fold");
            Verdict {
                claim_id: s.claim_id.clone(),
                ppl: s.ppl,
                threshold: th,
                predicted: classify(s.ppl, th),
                gold: s.gold,
                fold: Some(fold),
                no_evidence: s.no_evidence,
            }
        })
        .collect();
    Ok((Some(calibration), verdicts))
}

/// Evidence selection, aggregation, grounding, scoring and classification.
///
/// Grounding receives only aggregated evidence texts. By default it happens
/// once over the whole batch; with `ground_per_fold` each fold's claims are
/// scored by a model grounded on that fold's evidence alone.
pub fn run_pipeline(
    claims: &[Claim],
    corpus: &[SourceDocument],
    cfg: &RunConfig,
    scorer: &mut dyn Scorer,
) -> Result<PipelineRun> {
    if claims.is_empty() {
        return Err(Error::EmptyInput("no claims to debunk".into()));
    }
    cfg.validate()?;

    let sentences = segment_corpus(corpus);
    let index = TfIdfIndex::build(sentences, cfg.retrieval.term_options())?;
    let evidence_sets = select_evidence(claims, &index, cfg);
    let without = evidence_sets.iter().filter(|s| s.is_empty()).count();
    if without > 0 {
        log::warn!("{without} claim(s) have no surviving evidence; they are scored anyway");
    }

    let mut grounding_batches = Vec::new();
    let scores = if cfg.calibration.ground_per_fold && cfg.calibration.fixed_threshold.is_none() {
        let seed = cfg
            .calibration
            .seed
            .ok_or_else(|| Error::InvalidConfig("a seed is required for cross-validation".into()))?;
        let provisional: Vec<ClaimScore> = claims
            .iter()
            .map(|c| ClaimScore {
                claim_id: c.id.clone(),
                ppl: 1.0,
                gold: c.label,
                no_evidence: false,
            })
            .collect();
        let folds = assign_folds(&labeled(&provisional)?, cfg.calibration.k, seed)?;

        let mut scores: Vec<Option<ClaimScore>> = vec![None; claims.len()];
        for fold in 0..cfg.calibration.k {
            let members: Vec<usize> = (0..claims.len()).filter(|&i| folds[i] == fold).collect();
            let fold_claims: Vec<Claim> = members.iter().map(|&i| claims[i].clone()).collect();
            let fold_sets: Vec<EvidenceSet> = members.iter().map(|&i| evidence_sets[i].clone()).collect();
            let evidence = aggregate_evidence(&fold_sets)?;
            lm::ground(scorer, &evidence, &cfg.grounding)?;
            grounding_batches.push(evidence);
            for (slot, score) in members.iter().zip(score_claims(&fold_claims, &fold_sets, scorer)?) {
                scores[*slot] = Some(score);
            }
        }
        scores.into_iter().map(|s| s.expect("every claim is in a fold")).collect()
    } else {
        let evidence = aggregate_evidence(&evidence_sets)?;
        lm::ground(scorer, &evidence, &cfg.grounding)?;
        grounding_batches.push(evidence);
        score_claims(claims, &evidence_sets, scorer)?
    };

    let (calibration, verdicts) = calibrate_and_classify(&scores, cfg)?;
    Ok(PipelineRun {
        evidence_sets,
        grounding_batches,
        scores,
        calibration,
        verdicts,
        perplexity_unit: scorer.perplexity_unit(),
    })
}
