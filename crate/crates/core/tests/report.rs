mod common;

use std::fs;
use std::path::Path;

use debunk_core::data::segment_corpus;
use debunk_core::eval::{ablation_filtering, emit_ablation_report, emit_report, write_run_artifacts, ReportInputs};
use debunk_core::lm::NgramScorer;
use debunk_core::retrieval::TfIdfIndex;
use debunk_core::{run_pipeline, top_candidates, RunConfig};

fn cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.calibration.seed = Some(11);
    cfg
}

fn write_all(dir: &Path, cfg: &RunConfig) {
    let claims = common::claims(10);
    let corpus = common::corpus_with_false_quotes(10);
    let run = run_pipeline(&claims, &corpus, cfg, &mut NgramScorer::new()).unwrap();
    write_run_artifacts(dir, &run).unwrap();
    emit_report(
        dir,
        &ReportInputs {
            config: cfg,
            run: &run,
            datasets: Vec::new(),
            ablation: None,
        },
    )
    .unwrap();
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_all(a.path(), &cfg());
    write_all(b.path(), &cfg());
    let (fa, fb) = (read_dir_bytes(a.path()), read_dir_bytes(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["audit.jsonl", "calibration.json", "evidence.jsonl", "report.json", "report.md", "scores.jsonl", "sweep.csv", "verdicts.jsonl"]
    );
    assert_eq!(fa, fb);
}

#[test]
fn echoed_config_replays_the_run() {
    let a = tempfile::tempdir().unwrap();
    write_all(a.path(), &cfg());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("report.json")).unwrap()).unwrap();
    let echoed: RunConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(echoed, cfg());
    let b = tempfile::tempdir().unwrap();
    write_all(b.path(), &echoed);
    assert_eq!(read_dir_bytes(a.path()), read_dir_bytes(b.path()));
}

#[test]
fn sweep_csv_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    write_all(dir.path(), &cfg());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("threshold,fn,fp,accuracy,f1_macro,f1_binary"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), report["sweep"].as_array().unwrap().len());
    for w in rows.windows(2) {
        assert!(w[0][0] < w[1][0]);
        assert!(w[1][1] >= w[0][1], "FN must not drop as the threshold rises");
        assert!(w[1][2] <= w[0][2], "FP must not rise as the threshold rises");
    }
    let md = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("| LM debunker |"));
    assert!(md.contains("Per-fold thresholds (k = 4, seed = 11)"));
}

#[test]
fn disabled_filter_is_plain_top_three() {
    let claims = common::claims(10);
    let corpus = common::corpus_with_false_quotes(10);
    let (_, before, _) = ablation_filtering(&claims, &corpus, &cfg(), &mut NgramScorer::new()).unwrap();
    let index = TfIdfIndex::build(segment_corpus(&corpus), Default::default()).unwrap();
    for (claim, set) in claims.iter().zip(&before.evidence_sets) {
        let mut top = top_candidates(&index, claim, 10);
        top.truncate(3);
        assert_eq!(set.evidence, top);
        assert!(set.rejected.is_empty());
    }
}

#[test]
fn filtering_removes_quoted_false_claims() {
    let claims = common::claims(10);
    let corpus = common::corpus_with_false_quotes(10);
    let (ablation, before, after) = ablation_filtering(&claims, &corpus, &cfg(), &mut NgramScorer::new()).unwrap();
    assert!(ablation.after.f1_binary_false >= ablation.before.f1_binary_false);
    assert_eq!(ablation.delta.accuracy, ablation.after.accuracy - ablation.before.accuracy);
    // unfiltered, each false claim is grounded on its own quotation
    for (claim, set) in claims.iter().zip(&before.evidence_sets) {
        if claim.id.starts_with('f') {
            assert!(set.evidence.iter().any(|c| c.sentence.text == claim.text));
        }
    }
    for (claim, set) in claims.iter().zip(&after.evidence_sets) {
        assert!(set.evidence.iter().all(|c| c.sentence.text != claim.text));
    }

    let dir = tempfile::tempdir().unwrap();
    emit_ablation_report(dir.path(), &cfg(), &ablation).unwrap();
    let md = fs::read_to_string(dir.path().join("ablation.md")).unwrap();
    assert!(md.contains("| Before |") && md.contains("| After |") && md.contains("| Delta |"));
}

#[test]
fn filtering_viral_posts_improves_detection() {
    let claims = common::claims(10);
    let corpus = common::corpus_with_viral_posts(10);
    let (ablation, _, after) = ablation_filtering(&claims, &corpus, &cfg(), &mut NgramScorer::new()).unwrap();
    assert!(ablation.after.f1_binary_false > ablation.before.f1_binary_false);
    assert!(ablation.after.accuracy > ablation.before.accuracy);
    assert!(after.grounding_batches[0].iter().all(|t| !t.contains("social media")));
}

#[test]
fn all_rules_disabled_changes_nothing_but_filtering() {
    let claims = common::claims(6);
    let corpus = common::corpus(6);
    let mut off = cfg();
    off.filter = debunk_core::FilterConfig::disabled();
    let (_, before, _) = ablation_filtering(&claims, &corpus, &cfg(), &mut NgramScorer::new()).unwrap();
    let direct = run_pipeline(&claims, &corpus, &off, &mut NgramScorer::new()).unwrap();
    assert_eq!(before, direct);
}
