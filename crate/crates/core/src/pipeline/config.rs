use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SplitRatios;
use crate::error::{Error, Result};
use crate::grammar::{CoverageMode, SeverityProfile};
use crate::model::{EnsembleMode, Hyperparameters, DEFAULT_TOP_PER_COMPONENT, DEFAULT_VARIANCE_TARGET};
use crate::par::Parallelism;
use crate::semantics::{CheatThresholds, ContextConfig, Weighting};
use crate::spelling::{Damping, DEFAULT_THRESHOLD};

pub const DEFAULT_SEED: u64 = 42;

/// File locations. Relative paths resolve against the config file's directory;
/// unset resources fall back to the bundled ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub whitelist: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhitelistConfig {
    pub threshold: u64,
    /// Add unknown-token counts to the store during `extract`.
    pub tally: bool,
}

impl Default for WhitelistConfig {
    fn default() -> Self {
        WhitelistConfig {
            threshold: DEFAULT_THRESHOLD,
            tally: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsaConfig {
    /// Defaults to min(50, docs - 1).
    pub k: Option<usize>,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub coverage_mode: CoverageMode,
    pub damping: Damping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub enabled: bool,
    pub variance_target: f64,
    pub top_per_component: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            enabled: true,
            variance_target: DEFAULT_VARIANCE_TARGET,
            top_per_component: DEFAULT_TOP_PER_COMPONENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: EnsembleMode,
    pub trees: usize,
    pub m: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: Option<bool>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        let h = Hyperparameters::default();
        EnsembleConfig {
            mode: EnsembleMode::default(),
            trees: h.trees,
            m: h.m,
            min_leaf: h.min_leaf,
            max_depth: h.max_depth,
            bootstrap: h.bootstrap,
        }
    }
}

impl EnsembleConfig {
    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            trees: self.trees,
            m: self.m,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            bootstrap: self.bootstrap,
        }
    }
}

/// Every tunable of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub lenient: bool,
    pub parallelism: Parallelism,
    pub paths: Paths,
    pub split: SplitRatios,
    pub lsa: LsaConfig,
    pub context: ContextConfig,
    pub cheat: CheatThresholds,
    pub whitelist: WhitelistConfig,
    pub features: FeatureConfig,
    pub pca: PcaConfig,
    pub ensemble: EnsembleConfig,
    pub severity: SeverityProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            lenient: false,
            parallelism: Parallelism::default(),
            paths: Paths::default(),
            split: SplitRatios::default(),
            lsa: LsaConfig::default(),
            context: ContextConfig::default(),
            cheat: CheatThresholds::default(),
            whitelist: WhitelistConfig::default(),
            features: FeatureConfig::default(),
            pca: PcaConfig::default(),
            ensemble: EnsembleConfig::default(),
            severity: SeverityProfile::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parses TOML, resolving relative paths against `base`, then validates.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        for p in [
            &mut cfg.paths.corpus,
            &mut cfg.paths.dictionary,
            &mut cfg.paths.lexicon,
            &mut cfg.paths.rules,
            &mut cfg.paths.abbreviations,
            &mut cfg.paths.whitelist,
            &mut cfg.paths.index,
            &mut cfg.paths.model,
        ] {
            resolve(base, p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml_str(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, p) in [
            ("paths.corpus", &self.paths.corpus),
            ("paths.dictionary", &self.paths.dictionary),
            ("paths.lexicon", &self.paths.lexicon),
            ("paths.rules", &self.paths.rules),
            ("paths.abbreviations", &self.paths.abbreviations),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return bad(format!("{name}: {} does not exist", p.display()));
                }
            }
        }
        self.split.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(-1.0..=1.0).contains(&self.context.threshold)
            || self.context.topic_thresholds.values().any(|t| !(-1.0..=1.0).contains(t))
        {
            return bad("context thresholds must lie in [-1, 1]".into());
        }
        for (name, v) in [("cheat.repetition", self.cheat.repetition), ("cheat.off_vocabulary", self.cheat.off_vocabulary)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.whitelist.threshold < 1 {
            return bad("whitelist.threshold must be at least 1".into());
        }
        if self.lsa.k == Some(0) {
            return bad("lsa.k must be at least 1".into());
        }
        if !(self.pca.variance_target > 0.0 && self.pca.variance_target <= 1.0) {
            return bad("pca.variance_target must lie in (0, 1]".into());
        }
        if self.pca.top_per_component < 1 {
            return bad("pca.top_per_component must be at least 1".into());
        }
        self.ensemble
            .hyperparameters()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.severity.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = RunConfig::from_toml_str("", Path::new(".")).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.seed = 7;
        cfg.ensemble.mode = EnsembleMode::Bagging;
        cfg.ensemble.m = Some(3);
        cfg.context.topic_thresholds.insert("t1".into(), 0.25);
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text, Path::new(".")).unwrap(), cfg);
    }

    #[test]
    fn parses_sections_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("dict.txt"), "word\n").unwrap();
        let text = r#"
            seed = 9
            [paths]
            dictionary = "dict.txt"
            model = "out/model.json"
            [ensemble]
            mode = "random_subspace"
            trees = 10
            [context]
            threshold = 0.4
            scope = "corpus"
        "#;
        let cfg = RunConfig::from_toml_str(text, dir.path()).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.paths.dictionary.as_deref(), Some(dir.path().join("dict.txt").as_path()));
        assert_eq!(cfg.paths.model.as_deref(), Some(dir.path().join("out/model.json").as_path()));
        assert_eq!(cfg.ensemble.mode, EnsembleMode::RandomSubspace);
        assert_eq!(cfg.ensemble.trees, 10);
        assert_eq!(cfg.ensemble.min_leaf, 5);
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        assert!(matches!(RunConfig::from_toml_str("bogus = 1", base), Err(Error::Toml(_))));
        assert!(RunConfig::from_toml_str("[pca]\nvariance_target = 1.5", base).is_err());
        assert!(RunConfig::from_toml_str("[ensemble]\ntrees = 0", base).is_err());
        assert!(RunConfig::from_toml_str("[paths]\nrules = \"/nonexistent/rules.txt\"", base).is_err());
        assert!(RunConfig::from_toml_str("[severity]\nmajor = -1.0", base).is_err());
        assert!(RunConfig::from_toml_str("[split]\ntrain = 0.5\nvalidation = 0.2\ntest = 0.2", base).is_err());
    }
}
