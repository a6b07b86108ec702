//! Run configuration: a TOML file with command-line overrides on top.

use iris_core::analysis::OutcomeCriterion;
use iris_core::dataset::{ContextBudget, Origin};
use iris_core::toolchain::ToolchainConfig;
use iris_core::translate::BackendConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workdir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
    /// Fraction of failed items above which a command exits with status 4.
    pub failure_threshold: f64,
    pub toolchain: ToolchainConfig,
    pub backend: BackendConfig,
    pub ingest: IngestSection,
    pub select: SelectSection,
    pub translate: TranslateSection,
    pub eval: EvalSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("iris-work"),
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            failure_threshold: 0.5,
            toolchain: ToolchainConfig::discover(),
            backend: BackendConfig::default(),
            ingest: IngestSection::default(),
            select: SelectSection::default(),
            translate: TranslateSection::default(),
            eval: EvalSection::default(),
            report: ReportSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub origin: Origin,
    pub context_filter: bool,
    pub max_tokens: u64,
    pub chars_per_token: f64,
    pub output_factor: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        let b = ContextBudget::default();
        Self {
            origin: Origin::Local,
            context_filter: true,
            max_tokens: b.max_tokens,
            chars_per_token: b.chars_per_token,
            output_factor: b.output_factor,
        }
    }
}

impl IngestSection {
    pub fn budget(&self) -> ContextBudget {
        ContextBudget { max_tokens: self.max_tokens, chars_per_token: self.chars_per_token, output_factor: self.output_factor }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    pub k: usize,
}

impl Default for SelectSection {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateSection {
    pub n_candidates: usize,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl Default for TranslateSection {
    fn default() -> Self {
        Self { n_candidates: 3, max_output_tokens: 8192, temperature: 0.2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k_values: Vec<u64>,
    /// Drop samples whose own IR fails their tests.
    pub validate_ground_truth: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { k_values: vec![1, 2, 3], validate_ground_truth: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub criterion: OutcomeCriterion,
    pub metrics: Vec<String>,
    /// Fixed bin count instead of Freedman-Diaconis.
    pub bins: Option<usize>,
    pub threshold_metric: String,
    pub threshold: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            criterion: OutcomeCriterion::Compile,
            metrics: ["lines_of_code", "loops", "nesting_depth", "conditionals"].map(String::from).to_vec(),
            bins: None,
            threshold_metric: "lines_of_code".into(),
            threshold: 50.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn check(&self) -> Result<(), String> {
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return Err("failure_threshold must be within [0, 1]".into());
        }
        if self.translate.n_candidates == 0 {
            return Err("translate.n_candidates must be at least 1".into());
        }
        if self.select.k == 0 {
            return Err("select.k must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_keep_defaults() {
        let c: RunConfig = toml::from_str("seed = 7\n[translate]\nn_candidates = 5\n[backend]\nkind = \"oracle\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.translate.n_candidates, 5);
        assert_eq!(c.translate.max_output_tokens, 8192);
        assert_eq!(c.select.k, 3);
        assert_eq!(c.backend.kind, iris_core::translate::BackendKind::Oracle);
        assert!(toml::from_str::<RunConfig>("sede = 7").is_err());
    }
}
