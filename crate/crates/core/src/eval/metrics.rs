use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::debunker::classify;
use crate::error::{Error, Result};

/// Confusion counts with `False` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, predicted: Label, gold: Label) {
        match (predicted, gold) {
            (Label::False, Label::False) => self.tp += 1,
            (Label::False, Label::True) => self.fp += 1,
            (Label::True, Label::True) => self.tn += 1,
            (Label::True, Label::False) => self.fn_ += 1,
        }
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        log::info!("F1 denominator is zero; defining F1 = 0");
        return 0.0;
    }
    (2 * tp) as f64 / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub accuracy: f64,
    pub f1_macro: f64,
    /// F1 of the `False` class.
    pub f1_binary_false: f64,
    pub f1_true: f64,
    pub confusion: Confusion,
}

impl MetricBundle {
    pub fn from_confusion(confusion: Confusion) -> Self {
        let total = confusion.total();
        let accuracy = if total == 0 {
            0.0
        } else {
            (confusion.tp + confusion.tn) as f64 / total as f64
        };
        let f1_false = f1(confusion.tp, confusion.fp, confusion.fn_);
        let f1_true = f1(confusion.tn, confusion.fn_, confusion.fp);
        MetricBundle {
            accuracy,
            f1_macro: (f1_false + f1_true) / 2.0,
            f1_binary_false: f1_false,
            f1_true,
            confusion,
        }
    }

    pub fn summary(&self) -> MetricSummary {
        MetricSummary {
            accuracy: self.accuracy,
            f1_macro: self.f1_macro,
            f1_binary_false: self.f1_binary_false,
            f1_true: self.f1_true,
        }
    }
}

/// Scores without counts, e.g. an average over folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_binary_false: f64,
    pub f1_true: f64,
}

impl MetricSummary {
    /// Unweighted mean.
    pub fn mean(bundles: &[MetricBundle]) -> Self {
        let n = bundles.len() as f64;
        let sum = |f: fn(&MetricBundle) -> f64| bundles.iter().map(f).sum::<f64>() / n;
        MetricSummary {
            accuracy: sum(|m| m.accuracy),
            f1_macro: sum(|m| m.f1_macro),
            f1_binary_false: sum(|m| m.f1_binary_false),
            f1_true: sum(|m| m.f1_true),
        }
    }

    pub fn delta(&self, before: &MetricSummary) -> MetricSummary {
        MetricSummary {
            accuracy: self.accuracy - before.accuracy,
            f1_macro: self.f1_macro - before.f1_macro,
            f1_binary_false: self.f1_binary_false - before.f1_binary_false,
            f1_true: self.f1_true - before.f1_true,
        }
    }
}

/// Metrics over `(predicted, gold)` pairs. Every pair needs a gold label.
pub fn compute_metrics(verdicts: &[(Label, Option<Label>)]) -> Result<MetricBundle> {
    if verdicts.is_empty() {
        return Err(Error::EmptyInput("no verdicts to evaluate".into()));
    }
    let mut confusion = Confusion::default();
    for (idx, (predicted, gold)) in verdicts.iter().enumerate() {
        let gold = gold.ok_or_else(|| {
            Error::InsufficientData(format!("verdict {idx} has no gold label"))
        })?;
        confusion.record(*predicted, gold);
    }
    Ok(MetricBundle::from_confusion(confusion))
}

pub(crate) fn metrics_for_threshold(scored: &[(f64, Label)], threshold: f64) -> MetricBundle {
    let mut confusion = Confusion::default();
    for &(ppl, gold) in scored {
        confusion.record(classify(ppl, threshold), gold);
    }
    MetricBundle::from_confusion(confusion)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub fn_count: usize,
    pub fp_count: usize,
    pub metrics: MetricBundle,
}

/// Classifies every item at each grid threshold.
pub fn threshold_sweep(scored: &[(f64, Label)], grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if scored.is_empty() {
        return Err(Error::EmptyInput("no scored items to sweep".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("sweep grid must be sorted ascending".into()));
    }
    Ok(grid
        .iter()
        .map(|&threshold| {
            let metrics = metrics_for_threshold(scored, threshold);
            SweepPoint {
                threshold,
                fn_count: metrics.confusion.fn_,
                fp_count: metrics.confusion.fp,
                metrics,
            }
        })
        .collect())
}

pub const MAX_SWEEP_POINTS: usize = 200;

/// Integers `1..=floor(max ppl) + 1`; when that exceeds
/// [`MAX_SWEEP_POINTS`], that many evenly spaced integers over the same range.
pub fn default_grid(scored: &[(f64, Label)]) -> Vec<f64> {
    let max = scored.iter().map(|s| s.0).fold(0.0f64, f64::max);
    let upper = max.floor() as usize + 1;
    if upper <= MAX_SWEEP_POINTS {
        return (1..=upper).map(|t| t as f64).collect();
    }
    let span = (upper - 1) as f64;
    let mut grid: Vec<f64> = (0..MAX_SWEEP_POINTS)
        .map(|i| (1.0 + span * i as f64 / (MAX_SWEEP_POINTS - 1) as f64).round())
        .collect();
    grid.dedup();
    grid
}
