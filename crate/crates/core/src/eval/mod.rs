//! Metrics, threshold sweeps, the filtering ablation, and report output.

pub mod metrics;
mod report;

pub use metrics::{
    compute_metrics, default_grid, threshold_sweep, Confusion, MetricBundle, MetricSummary, SweepPoint,
};
pub use report::{
    ablation_filtering, emit_ablation_report, emit_report, file_checksum, write_run_artifacts,
    AblationReport, DatasetInfo, ReportInputs, REPORT_SCHEMA_VERSION,
};
