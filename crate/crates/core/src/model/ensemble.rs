use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use super::clamp_score;
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    #[default]
    RandomForest,
    Bagging,
    RandomSubspace,
}

impl std::str::FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "random_forest" | "rf" => Ok(EnsembleMode::RandomForest),
            "bagging" => Ok(EnsembleMode::Bagging),
            "random_subspace" | "subspace" => Ok(EnsembleMode::RandomSubspace),
            other => Err(Error::invalid(format!(
                "unknown ensemble mode `{other}` (expected random_forest, bagging or random_subspace)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub trees: usize,
    /// Features sampled per node (random forest) or per tree (random
    /// subspace). `None` picks ⌈dims/3⌉ and ⌈dims/2⌉ respectively.
    pub m: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Overrides the mode's row resampling: bootstrap for random forest and
    /// bagging, all rows for random subspace.
    pub bootstrap: Option<bool>,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            trees: 300,
            m: None,
            min_leaf: 5,
            max_depth: None,
            bootstrap: None,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if self.trees < 1 {
            return Err(Error::invalid("ensemble needs at least one tree"));
        }
        if self.min_leaf < 1 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if self.m == Some(0) {
            return Err(Error::invalid("m must be at least 1"));
        }
        Ok(())
    }

    /// Effective feature sample size for `dims` columns.
    pub fn effective_m(&self, mode: EnsembleMode, dims: usize) -> Result<usize> {
        let m = match (mode, self.m) {
            (EnsembleMode::Bagging, _) => dims,
            (_, Some(m)) => m,
            (EnsembleMode::RandomForest, None) => dims.div_ceil(3),
            (EnsembleMode::RandomSubspace, None) => dims.div_ceil(2),
        };
        if m > dims {
            return Err(Error::invalid(format!("m = {m} exceeds the {dims} available features")));
        }
        Ok(m.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw: f64,
    pub clamped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub mode: EnsembleMode,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub dims: usize,
    pub trees: Vec<RegressionTree>,
    /// Per-tree feature subsets (random subspace); empty elsewhere.
    pub subsets: Vec<Vec<usize>>,
}

/// Stream of random numbers for tree `index`, independent of scheduling.
fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn train_ensemble(
    x: &[Vec<f64>],
    y: &[f64],
    mode: EnsembleMode,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<Ensemble> {
    train_ensemble_with(x, y, mode, hyper, seed, Parallelism::default())
}

pub fn train_ensemble_with(
    x: &[Vec<f64>],
    y: &[f64],
    mode: EnsembleMode,
    hyper: &Hyperparameters,
    seed: u64,
    parallelism: Parallelism,
) -> Result<Ensemble> {
    hyper.validate()?;
    if x.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::invalid("training needs at least 2 rows"));
    }
    let dims = x[0].len();
    if dims == 0 {
        return Err(Error::invalid("training rows have no features"));
    }
    if let Some(bad) = x.iter().position(|r| r.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: x[bad].len(),
        });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    let m = hyper.effective_m(mode, dims)?;
    let bootstrap = hyper.bootstrap.unwrap_or(mode != EnsembleMode::RandomSubspace);
    let n = x.len();
    let all: Vec<usize> = (0..dims).collect();
    let grown = par::map_range(parallelism, hyper.trees, |t| {
        let mut rng = tree_rng(seed, t);
        let rows: Vec<usize> = if bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let (features, per_node, subset) = match mode {
            EnsembleMode::RandomForest => (all.clone(), m, Vec::new()),
            EnsembleMode::Bagging => (all.clone(), dims, Vec::new()),
            EnsembleMode::RandomSubspace => {
                let subset = if m >= dims {
                    all.clone()
                } else {
                    let mut s = rand::seq::index::sample(&mut rng, dims, m).into_vec();
                    s.sort_unstable();
                    s
                };
                (subset.clone(), dims, subset)
            }
        };
        let params = TreeParams {
            min_leaf: hyper.min_leaf,
            max_depth: hyper.max_depth,
            features: &features,
            per_node,
        };
        (RegressionTree::fit(x, y, &rows, &params, &mut rng), subset)
    });
    let (trees, subsets): (Vec<_>, Vec<_>) = grown.into_iter().unzip();
    let subsets = if mode == EnsembleMode::RandomSubspace { subsets } else { Vec::new() };
    Ok(Ensemble {
        mode,
        hyperparameters: *hyper,
        seed,
        dims,
        trees,
        subsets,
    })
}

impl Ensemble {
    /// Mean of the tree predictions, plus the value clamped to the score scale.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: x.len(),
            });
        }
        let mut values = self.trees.iter().map(|t| t.predict(x));
        let v0 = values.next().ok_or_else(|| Error::invalid("ensemble has no trees"))?;
        let (mut lo, mut hi, mut dev) = (v0, v0, 0.0);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
            dev += v - v0;
        }
        let raw = (v0 + dev / self.trees.len() as f64).clamp(lo, hi);
        Ok(Prediction {
            raw,
            clamped: clamp_score(raw),
        })
    }

    pub fn predict_many(&self, rows: &[Vec<f64>], parallelism: Parallelism) -> Result<Vec<Prediction>> {
        par::map(parallelism, rows, |r| self.predict(r)).into_iter().collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.hyperparameters.validate()?;
        if self.trees.is_empty() {
            return Err(Error::invalid("ensemble has no trees"));
        }
        for t in &self.trees {
            t.validate(self.dims)?;
        }
        Ok(())
    }
}
