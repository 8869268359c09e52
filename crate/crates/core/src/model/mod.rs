//! Feature vectors, PCA feature selection, bagged regression-tree ensembles
//! and evaluation against manual scores.

mod ensemble;
mod pca;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::semantics::TRANSITION_NAMES;
use crate::spelling::write_atomic;

pub use ensemble::{train_ensemble, train_ensemble_with, Ensemble, EnsembleMode, Hyperparameters, Prediction};
pub use pca::{pca_select, PcaSelection, DEFAULT_TOP_PER_COMPONENT, DEFAULT_VARIANCE_TARGET};
pub use tree::{Node, RegressionTree, TreeParams};

pub const SCORE_MIN: f64 = 1.0;
pub const SCORE_MAX: f64 = 10.0;
pub const SIGNIFICANCE_ALPHA: f64 = 0.01;

/// Leading features in declared order; the 16 coherence transitions follow.
pub const BASE_FEATURES: [&str; 8] = [
    "grammar_error_density",
    "grammar_error_density_weighted",
    "grammar_error_coverage",
    "spelling_error_density",
    "spelling_error_coverage",
    "readability",
    "lexical_density",
    "context_max_cosine",
];

pub const FEATURE_COUNT: usize = BASE_FEATURES.len() + TRANSITION_NAMES.len();

pub fn feature_names() -> Vec<String> {
    BASE_FEATURES
        .iter()
        .chain(TRANSITION_NAMES.iter())
        .map(|s| s.to_string())
        .collect()
}

/// Named feature values for one essay, in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let names = feature_names();
        if values.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                actual: values.len(),
            });
        }
        Ok(FeatureVector { names, values })
    }

    /// Appends an extension feature after the declared ones.
    pub fn push_extension(&mut self, name: &str, value: f64) {
        self.names.push(name.to_string());
        self.values.push(value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

pub fn clamp_score(raw: f64) -> f64 {
    raw.clamp(SCORE_MIN, SCORE_MAX)
}

/// Product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("pearson needs at least 2 pairs"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if a.iter().all(|&x| x == a[0]) || saa == 0.0 {
        return Err(Error::ConstantInput("first series"));
    }
    if b.iter().all(|&y| y == b[0]) || sbb == 0.0 {
        return Err(Error::ConstantInput("second series"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Two-tailed t-test of a correlation coefficient on `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("significance needs at least 3 pairs"));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!("correlation {r} outside [-1, 1]")));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

pub fn correlation_significant(r: f64, n: usize, alpha: f64) -> Result<bool> {
    Ok(correlation_p_value(r, n)? < alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pearson_r: f64,
    pub mae: f64,
    pub n: usize,
    pub significant_at_0_01: bool,
}

/// Pearson on raw predictions, MAE on clamped ones.
pub fn report_from_predictions(raw: &[f64], targets: &[f64]) -> Result<EvaluationReport> {
    if raw.is_empty() {
        return Err(Error::invalid("evaluation partition is empty"));
    }
    let r = pearson(raw, targets)?;
    let mae = raw
        .iter()
        .zip(targets)
        .map(|(p, y)| (clamp_score(*p) - y).abs())
        .sum::<f64>()
        / raw.len() as f64;
    let significant = raw.len() >= 3 && correlation_significant(r, raw.len(), SIGNIFICANCE_ALPHA)?;
    Ok(EvaluationReport {
        pearson_r: r,
        mae,
        n: raw.len(),
        significant_at_0_01: significant,
    })
}

pub fn evaluate(ensemble: &Ensemble, x: &[Vec<f64>], y: &[f64]) -> Result<EvaluationReport> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let raw = x
        .iter()
        .map(|row| ensemble.predict(row).map(|p| p.raw))
        .collect::<Result<Vec<_>>>()?;
    report_from_predictions(&raw, y)
}

const MODEL_VERSION: u32 = 1;

/// A trained ensemble together with the feature layout it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    /// Indices into `feature_names` fed to the ensemble, ascending.
    pub selected: Vec<usize>,
    pub ensemble: Ensemble,
}

impl ScoringModel {
    pub fn new(feature_names: Vec<String>, selected: Vec<usize>, ensemble: Ensemble) -> Result<Self> {
        if selected.iter().any(|&i| i >= feature_names.len()) {
            return Err(Error::invalid("selected feature index out of range"));
        }
        if ensemble.dims != selected.len() {
            return Err(Error::DimensionMismatch {
                expected: selected.len(),
                actual: ensemble.dims,
            });
        }
        Ok(ScoringModel {
            format_version: MODEL_VERSION,
            feature_names,
            selected,
            ensemble,
        })
    }

    /// Picks the selected columns out of a full feature row.
    pub fn project_row(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                actual: full.len(),
            });
        }
        Ok(self.selected.iter().map(|&i| full[i]).collect())
    }

    pub fn predict(&self, full: &[f64]) -> Result<Prediction> {
        self.ensemble.predict(&self.project_row(full)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ScoringModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_VERSION {
            return Err(Error::FormatVersion {
                what: "model",
                found: model.format_version,
                expected: MODEL_VERSION,
            });
        }
        model.ensemble.validate()?;
        ScoringModel::new(model.feature_names, model.selected, model.ensemble)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ScoringModel::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
        // raw-sum formula, independent of the centred two-pass version
        let n = a.len() as f64;
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let saa: f64 = a.iter().map(|x| x * x).sum();
        let sbb: f64 = b.iter().map(|x| x * x).sum();
        (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
    }

    #[test]
    fn feature_layout() {
        let names = feature_names();
        assert_eq!(names.len(), 24);
        assert_eq!(names[0], "grammar_error_density");
        assert_eq!(names[7], "context_max_cosine");
        assert_eq!(names[8], "coh_s_s");
        assert!(FeatureVector::new(vec![0.0; 3]).is_err());
        let mut fv = FeatureVector::new(vec![0.5; 24]).unwrap();
        fv.push_extension("extra", 2.0);
        assert_eq!(fv.get("extra"), Some(2.0));
    }

    #[test]
    fn pearson_basics() {
        let a = [1.0, 2.0, 3.0, 4.0, 7.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(pearson(&a, &[2.0; 5]), Err(Error::ConstantInput(_))));
        assert!(pearson(&a, &a[..3]).is_err());
        let b = [2.0, 1.0, 4.0, 3.0, 5.0];
        assert!((pearson(&a, &b).unwrap() - oracle_pearson(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn significance_examples() {
        assert!(!correlation_significant(0.0, 50, 0.01).unwrap());
        // two-tailed 0.01 critical t for 178 df is about 2.60
        let t = 0.75 * (178.0f64 / (1.0 - 0.5625)).sqrt();
        assert!(t > 2.61);
        assert!(correlation_significant(0.750, 180, 0.01).unwrap());
        // t ≈ 2.065 on 1 df; critical value 63.66
        let p = correlation_p_value(0.9, 3).unwrap();
        assert!(p > 0.2 && p < 0.4, "{p}");
        assert!(!correlation_significant(0.9, 3, 0.01).unwrap());
        assert!(correlation_significant(0.9, 2, 0.01).is_err());
    }

    #[test]
    fn p_value_matches_table() {
        // df = 10: two-tailed p = 0.05 at t = 2.228, 0.01 at t = 3.169
        for (t, p) in [(2.228f64, 0.05), (3.169, 0.01)] {
            let df = 10.0;
            let r = t / (t * t + df).sqrt();
            let got = correlation_p_value(r, 12).unwrap();
            assert!((got - p).abs() < 2e-4, "{got} vs {p}");
        }
    }

    #[test]
    fn report_examples() {
        let y = [2.0, 4.0, 5.0, 7.0, 9.0];
        let r = report_from_predictions(&y, &y).unwrap();
        assert_eq!((r.pearson_r, r.mae, r.n), (1.0, 0.0, 5));
        let shifted: Vec<f64> = y.iter().map(|v| v + 0.5).collect();
        let r = report_from_predictions(&shifted, &y).unwrap();
        assert!((r.pearson_r - 1.0).abs() < 1e-12);
        assert!((r.mae - 0.5).abs() < 1e-12);
        assert_eq!(clamp_score(11.3), 10.0);
        assert_eq!(clamp_score(-2.0), 1.0);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            alpha in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
            beta in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(pearson(&a, &b).is_ok());
            let r = pearson(&a, &b).unwrap();
            prop_assert!((r - oracle_pearson(&a, &b)).abs() < 1e-9);
            let scaled: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
            let r2 = pearson(&a, &scaled).unwrap();
            prop_assert!((r2 - alpha.signum() * r).abs() < 1e-12);
        }
    }
}
