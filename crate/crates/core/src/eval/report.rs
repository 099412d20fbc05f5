use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{default_grid, threshold_sweep, MetricSummary, SweepPoint};
use crate::config::RunConfig;
use crate::data::{write_jsonl, Claim, SourceDocument};
use crate::debunker::{run_pipeline, PipelineRun};
use crate::error::{Error, Result};
use crate::filter::{audit_records, FilterConfig};
use crate::lm::Scorer;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
    pub records: usize,
}

pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// All filtering rules disabled.
    pub before: MetricSummary,
    pub after: MetricSummary,
    pub delta: MetricSummary,
    pub filter: FilterConfig,
}

/// Runs the pipeline with every rule disabled and then with `cfg.filter`,
/// leaving all other settings untouched.
pub fn ablation_filtering(
    claims: &[Claim],
    corpus: &[SourceDocument],
    cfg: &RunConfig,
    scorer: &mut dyn Scorer,
) -> Result<(AblationReport, PipelineRun, PipelineRun)> {
    let mut unfiltered = cfg.clone();
    unfiltered.filter = FilterConfig::disabled();
    let before_run = run_pipeline(claims, corpus, &unfiltered, scorer)?;
    let after_run = run_pipeline(claims, corpus, cfg, scorer)?;
    let before = before_run.summary()?;
    let after = after_run.summary()?;
    Ok((
        AblationReport {
            before,
            after,
            delta: after.delta(&before),
            filter: cfg.filter.clone(),
        },
        before_run,
        after_run,
    ))
}

pub struct ReportInputs<'a> {
    pub config: &'a RunConfig,
    pub run: &'a PipelineRun,
    pub datasets: Vec<DatasetInfo>,
    pub ablation: Option<&'a AblationReport>,
}

#[derive(Serialize)]
struct FoldEntry<'a> {
    fold: usize,
    threshold: f64,
    metrics: &'a super::metrics::MetricBundle,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    datasets: &'a [DatasetInfo],
    perplexity_unit: &'a str,
    claims: usize,
    no_evidence_claims: usize,
    metrics: MetricSummary,
    per_fold_thresholds: Vec<f64>,
    per_fold: Vec<FoldEntry<'a>>,
    sweep: &'a [SweepPoint],
    #[serde(skip_serializing_if = "Option::is_none")]
    ablation: Option<&'a AblationReport>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

/// Stage artifacts: evidence sets, audit trail, scores, verdicts, calibration.
pub fn write_run_artifacts(dir: &Path, run: &PipelineRun) -> Result<()> {
    ensure_dir(dir)?;
    write_jsonl(&dir.join("evidence.jsonl"), &run.evidence_sets)?;
    let audit: Vec<_> = run.evidence_sets.iter().flat_map(audit_records).collect();
    write_jsonl(&dir.join("audit.jsonl"), &audit)?;
    write_jsonl(&dir.join("scores.jsonl"), &run.scores)?;
    write_jsonl(&dir.join("verdicts.jsonl"), &run.verdicts)?;
    if let Some(cal) = &run.calibration {
        let json = serde_json::to_string_pretty(cal).expect("calibration serialization");
        write_text(&dir.join("calibration.json"), &(json + "\n"))?;
    }
    Ok(())
}

/// Writes `report.json`, `report.md` and `sweep.csv` into `dir`. The output
/// contains no timestamps, so identical runs produce identical bytes.
pub fn emit_report(dir: &Path, inputs: &ReportInputs<'_>) -> Result<Vec<SweepPoint>> {
    ensure_dir(dir)?;
    let run = inputs.run;
    let labeled = run.labeled_scores();
    let sweep = if labeled.is_empty() {
        Vec::new()
    } else {
        threshold_sweep(&labeled, &default_grid(&labeled))?
    };
    let metrics = if labeled.is_empty() {
        MetricSummary::default()
    } else {
        run.summary()?
    };
    let (per_fold_thresholds, per_fold) = match &run.calibration {
        Some(cal) => (
            cal.per_fold_threshold.clone(),
            cal.per_fold_threshold
                .iter()
                .zip(&cal.per_fold_metrics)
                .enumerate()
                .map(|(fold, (&threshold, metrics))| FoldEntry { fold, threshold, metrics })
                .collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let no_evidence_claims = run.scores.iter().filter(|s| s.no_evidence).count();

    let report = ReportJson {
        schema_version: REPORT_SCHEMA_VERSION,
        config: inputs.config,
        datasets: &inputs.datasets,
        perplexity_unit: &run.perplexity_unit,
        claims: run.scores.len(),
        no_evidence_claims,
        metrics,
        per_fold_thresholds: per_fold_thresholds.clone(),
        per_fold,
        sweep: &sweep,
        ablation: inputs.ablation,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    write_text(&dir.join("report.json"), &(json + "\n"))?;

    let mut csv = String::from("threshold,fn,fp,accuracy,f1_macro,f1_binary\n");
    for p in &sweep {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.threshold, p.fn_count, p.fp_count, p.metrics.accuracy, p.metrics.f1_macro, p.metrics.f1_binary_false
        )
        .unwrap();
    }
    write_text(&dir.join("sweep.csv"), &csv)?;

    let mut md = String::new();
    writeln!(md, "# Debunking report\n").unwrap();
    writeln!(md, "Scorer: `{}` (perplexity unit: {})\n", inputs.config.scorer.kind, run.perplexity_unit).unwrap();
    for d in &inputs.datasets {
        writeln!(md, "- {}: `{}` ({} records, sha256 `{}`)", d.name, d.path.display(), d.records, d.sha256).unwrap();
    }
    writeln!(md, "- claims scored: {} ({} without evidence)\n", run.scores.len(), no_evidence_claims).unwrap();
    writeln!(md, "| Model | Accuracy | F1-Macro | F1-Binary |").unwrap();
    writeln!(md, "|---|---|---|---|").unwrap();
    writeln!(
        md,
        "| LM debunker | {} | {} | {} |\n",
        pct(metrics.accuracy),
        pct(metrics.f1_macro),
        pct(metrics.f1_binary_false)
    )
    .unwrap();
    if let Some(cal) = &run.calibration {
        let list: Vec<String> = per_fold_thresholds.iter().map(|t| format!("{t}")).collect();
        writeln!(md, "Per-fold thresholds (k = {}, seed = {}): {{{}}}\n", cal.k, cal.seed, list.join(", ")).unwrap();
        writeln!(md, "| Fold | Threshold | Accuracy | F1-Macro | F1-Binary | FN | FP |").unwrap();
        writeln!(md, "|---|---|---|---|---|---|---|").unwrap();
        for (fold, (th, m)) in cal.per_fold_threshold.iter().zip(&cal.per_fold_metrics).enumerate() {
            writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                fold,
                th,
                pct(m.accuracy),
                pct(m.f1_macro),
                pct(m.f1_binary_false),
                m.confusion.fn_,
                m.confusion.fp
            )
            .unwrap();
        }
        md.push('\n');
    } else if let Some(v) = run.verdicts.first() {
        writeln!(md, "Fixed threshold: {}\n", v.threshold).unwrap();
    }
    if let Some(ablation) = inputs.ablation {
        md.push_str(&ablation_table(ablation));
    }
    writeln!(md, "Threshold sweep: {} points in `sweep.csv`.", sweep.len()).unwrap();
    write_text(&dir.join("report.md"), &md)?;

    Ok(sweep)
}

fn ablation_table(ablation: &AblationReport) -> String {
    let mut md = String::new();
    writeln!(md, "| Filtering | Accuracy | F1-Macro | F1-Binary |").unwrap();
    writeln!(md, "|---|---|---|---|").unwrap();
    for (name, m) in [("Before", &ablation.before), ("After", &ablation.after)] {
        writeln!(md, "| {name} | {} | {} | {} |", pct(m.accuracy), pct(m.f1_macro), pct(m.f1_binary_false)).unwrap();
    }
    let d = &ablation.delta;
    writeln!(
        md,
        "| Delta | {:+.1} pts | {:+.1} pts | {:+.1} pts |\n",
        d.accuracy * 100.0,
        d.f1_macro * 100.0,
        d.f1_binary_false * 100.0
    )
    .unwrap();
    md
}

/// Writes `ablation.json` and `ablation.md`.
pub fn emit_ablation_report(dir: &Path, config: &RunConfig, ablation: &AblationReport) -> Result<()> {
    ensure_dir(dir)?;
    let mut doc = BTreeMap::new();
    doc.insert("schema_version", serde_json::json!(REPORT_SCHEMA_VERSION));
    doc.insert("config", serde_json::to_value(config).expect("config serialization"));
    doc.insert("ablation", serde_json::to_value(ablation).expect("ablation serialization"));
    let json = serde_json::to_string_pretty(&doc).expect("ablation serialization");
    write_text(&dir.join("ablation.json"), &(json + "\n"))?;
    let md = format!("# Evidence filtering ablation\n\n{}", ablation_table(ablation));
    write_text(&dir.join("ablation.md"), &md)
}
