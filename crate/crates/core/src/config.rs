//! Run configuration. Every field is serializable so a run can be replayed
//! from the copy echoed into its report.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::lm::{BridgeEndpoint, GroundingConfig, ScorerKind};
use crate::retrieval::{TermOptions, DEFAULT_TOP_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k: usize,
    pub stem: bool,
    pub remove_stop_words: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            k: DEFAULT_TOP_K,
            stem: false,
            remove_stop_words: false,
        }
    }
}

impl RetrievalConfig {
    pub fn term_options(&self) -> TermOptions {
        TermOptions {
            stem: self.stem,
            remove_stop_words: self.remove_stop_words,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    pub bridge: Option<BridgeEndpoint>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: ScorerKind::Ngram,
            bridge: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Accuracy,
    F1Macro,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().replace('-', "_").as_str() {
            "accuracy" => Ok(Objective::Accuracy),
            "f1_macro" => Ok(Objective::F1Macro),
            other => Err(format!("unknown objective {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub k: usize,
    pub seed: Option<u64>,
    pub objective: Objective,
    /// One threshold per fold; bypasses the search when set.
    pub preset_thresholds: Option<Vec<f64>>,
    /// Classify every claim against this threshold instead of cross-validating.
    pub fixed_threshold: Option<f64>,
    pub ground_per_fold: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            k: 4,
            seed: None,
            objective: Objective::Accuracy,
            preset_thresholds: None,
            fixed_threshold: None,
            ground_per_fold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub claims: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub retrieval: RetrievalConfig,
    pub filter: FilterConfig,
    pub grounding: GroundingConfig,
    pub scorer: ScorerConfig,
    pub calibration: CalibrationConfig,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serialization");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.retrieval.k == 0 {
            return Err(Error::InvalidConfig("retrieval k must be positive".into()));
        }
        self.filter.validate()?;
        self.grounding.validate()?;
        let cal = &self.calibration;
        if let Some(th) = cal.fixed_threshold {
            if !(th > 0.0 && th.is_finite()) {
                return Err(Error::InvalidConfig(format!("threshold must be positive, got {th}")));
            }
        }
        if let Some(presets) = &cal.preset_thresholds {
            if presets.len() != cal.k {
                return Err(Error::InvalidConfig(format!(
                    "{} preset thresholds given for k = {}",
                    presets.len(),
                    cal.k
                )));
            }
            if presets.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidConfig("preset thresholds must be positive".into()));
            }
        }
        if self.scorer.kind == ScorerKind::External && self.scorer.bridge.is_none() {
            return Err(Error::InvalidConfig("external scorer needs a bridge address".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        Ok(())
    }
}
