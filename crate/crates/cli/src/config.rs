//! Run configuration, read from JSON. Relative paths resolve against the
//! configuration file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use t2m_core::contact::ContactConfig;
use t2m_core::finegrained::DEFAULT_WINDOW;
use t2m_core::physical::MAX_DEGENERATE_FRACTION;
use t2m_core::semantic::{DEFAULT_ASR_THRESHOLD, DEFAULT_POOL_SIZE};
use t2m_core::stats::DEFAULT_REPLICATES;
use t2m_judge::JudgeConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsPaths {
    pub mean: PathBuf,
    pub std: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticConfig {
    pub pool_size: usize,
    pub asr_threshold: f64,
    /// Random output pairs drawn per prompt for multimodality.
    pub multimodality_pairs: usize,
    /// Pairs drawn for diversity.
    pub diversity_pairs: usize,
    /// Frame count of flattened joint vectors, used when a clip has no motion embedding.
    pub motion_frames: usize,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            asr_threshold: DEFAULT_ASR_THRESHOLD,
            multimodality_pairs: 10,
            diversity_pairs: 300,
            motion_frames: 196,
        }
    }
}

/// Attribute score that decides the best output per prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectBy {
    Physical,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub targets: Vec<PathBuf>,
    pub feature_stats: Option<StatsPaths>,
    pub embeddings: Option<PathBuf>,
    /// Per-clip metric reports merged by `score-select`.
    pub metric_reports: Vec<PathBuf>,
    pub contact: ContactConfig,
    pub strict_ground: bool,
    pub max_degenerate_fraction: f64,
    pub window: usize,
    pub seed: u64,
    pub replicates: usize,
    pub semantic: SemanticConfig,
    pub select_by: SelectBy,
    pub judge: JudgeConfig,
    pub output_dir: PathBuf,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            targets: Vec::new(),
            feature_stats: None,
            embeddings: None,
            metric_reports: Vec::new(),
            contact: ContactConfig::default(),
            strict_ground: false,
            max_degenerate_fraction: MAX_DEGENERATE_FRACTION,
            window: DEFAULT_WINDOW,
            seed: 0,
            replicates: DEFAULT_REPLICATES,
            semantic: SemanticConfig::default(),
            select_by: SelectBy::Physical,
            judge: JudgeConfig::default(),
            output_dir: PathBuf::from("out"),
            strict: false,
        }
    }
}

fn absolutize(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    /// Reads `path` and resolves every relative path against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &mut self.corpus {
            absolutize(base, p);
        }
        if let Some(p) = &mut self.embeddings {
            absolutize(base, p);
        }
        if let Some(s) = &mut self.feature_stats {
            absolutize(base, &mut s.mean);
            absolutize(base, &mut s.std);
        }
        self.targets.iter_mut().for_each(|p| absolutize(base, p));
        self.metric_reports.iter_mut().for_each(|p| absolutize(base, p));
        absolutize(base, &mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.contact.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.max_degenerate_fraction) {
            return Err(CliError::Config("max_degenerate_fraction must lie in [0, 1]".into()));
        }
        if self.window == 0 {
            return Err(CliError::Config("window must be at least 1".into()));
        }
        if self.replicates < t2m_core::stats::MIN_REPLICATES {
            return Err(CliError::Config(format!(
                "replicates must be at least {}",
                t2m_core::stats::MIN_REPLICATES
            )));
        }
        let s = &self.semantic;
        if s.pool_size < 2 || s.multimodality_pairs == 0 || s.diversity_pairs == 0 || s.motion_frames == 0 {
            return Err(CliError::Config("semantic sampling sizes must be positive (pool at least 2)".into()));
        }
        if !(s.asr_threshold > 0.0 && s.asr_threshold < 1.0) {
            return Err(CliError::Config("asr_threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn require_corpus(&self) -> Result<&Path, CliError> {
        let p = self
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::Config("no corpus manifest configured".into()))?;
        require_file(p)?;
        Ok(p)
    }
}

pub fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{} does not exist", p.display())))
    }
}
