use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;
pub const DEFAULT_TOP_PER_COMPONENT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSelection {
    /// Selected column indices, ascending.
    pub selected: Vec<usize>,
    /// Zero-variance columns removed before decomposition.
    pub dropped_constant: Vec<usize>,
    pub components_kept: usize,
    /// Explained-variance ratio of every component, non-increasing.
    pub explained: Vec<f64>,
}

/// Picks the strongest-loading features of the leading principal components
/// of the standardized data.
pub fn pca_select(features: &[Vec<f64>], variance_target: f64, top_per_component: usize) -> Result<PcaSelection> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::invalid("variance_target must lie in (0, 1]"));
    }
    if top_per_component < 1 {
        return Err(Error::invalid("top_per_component must be at least 1"));
    }
    if features.len() < 2 {
        return Err(Error::invalid("PCA needs at least 2 essays"));
    }
    let dims = features[0].len();
    if dims == 0 {
        return Err(Error::invalid("PCA needs at least one feature"));
    }
    if let Some(bad) = features.iter().position(|r| r.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: features[bad].len(),
        });
    }
    let n = features.len() as f64;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in 0..dims {
        let col: Vec<f64> = features.iter().map(|r| r[j]).collect();
        if col.iter().all(|&v| v == col[0]) {
            dropped.push(j);
            continue;
        }
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd == 0.0 || !sd.is_finite() {
            dropped.push(j);
            continue;
        }
        kept.push(j);
        columns.push(col.iter().map(|v| (v - mean) / sd).collect());
    }
    if kept.is_empty() {
        return Err(Error::ConstantInput("every feature column"));
    }
    let p = kept.len();
    let mut cov = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let c = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum::<f64>() / (n - 1.0);
            cov.set(a, b, c);
            cov.set(b, a, c);
        }
    }
    let eig = symmetric_eigen(&cov);
    let values: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    let explained: Vec<f64> = values.iter().map(|v| v / total).collect();
    let mut cumulative = 0.0;
    let mut components = 0;
    for e in &explained {
        cumulative += e;
        components += 1;
        if cumulative >= variance_target - 1e-12 {
            break;
        }
    }
    let mut selected = BTreeSet::new();
    for vector in eig.vectors.iter().take(components) {
        let mut order: Vec<usize> = (0..p).filter(|&i| vector[i].abs() > 1e-12).collect();
        order.sort_by(|&a, &b| vector[b].abs().total_cmp(&vector[a].abs()).then(a.cmp(&b)));
        selected.extend(order.into_iter().take(top_per_component).map(|i| kept[i]));
    }
    Ok(PcaSelection {
        selected: selected.into_iter().collect(),
        dropped_constant: dropped,
        components_kept: components,
        explained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn constant_column_never_selected() {
        let mut x = random(30, 4, 1);
        for r in &mut x {
            r[2] = 5.0;
        }
        let s = pca_select(&x, 1.0, 4).unwrap();
        assert_eq!(s.dropped_constant, vec![2]);
        assert!(!s.selected.contains(&2));
        assert_eq!(s.selected, vec![0, 1, 3]);
    }

    #[test]
    fn collinear_pair_has_one_component() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let s = pca_select(&x, 0.95, 2).unwrap();
        assert_eq!(s.components_kept, 1);
        assert!((s.explained[0] - 1.0).abs() < 1e-12);
        assert_eq!(s.selected, vec![0, 1]);
    }

    #[test]
    fn identity_covariance_selects_everything() {
        // ±1 Hadamard-style columns: orthogonal, unit variance, zero mean
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i: u32| (0..3).map(|b| if (i >> b) & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let s = pca_select(&rows, 1.0, 1).unwrap();
        assert_eq!(s.components_kept, 3);
        assert_eq!(s.selected, vec![0, 1, 2]);
        for e in &s.explained {
            assert!((e - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_constant_is_an_error() {
        let x = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(pca_select(&x, 0.95, 2), Err(Error::ConstantInput(_))));
        assert!(pca_select(&x[..1], 0.95, 2).is_err());
    }

    #[test]
    fn eigenvalues_match_brute_force_covariance() {
        let x = random(25, 5, 9);
        let s = pca_select(&x, 1.0, 1).unwrap();
        let n = x.len();
        let mut z = nalgebra::DMatrix::<f64>::zeros(n, 5);
        for j in 0..5 {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            for i in 0..n {
                z[(i, j)] = (col[i] - m) / sd;
            }
        }
        let cov = z.transpose() * &z / (n - 1) as f64;
        let mut ev: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = ev.iter().sum();
        for (a, b) in s.explained.iter().zip(&ev) {
            assert!((a - b / total).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn selection_is_scale_invariant(seed in 0u64..1000, col in 0usize..4, scale in 0.01f64..100.0) {
            let x = random(20, 4, seed);
            let a = pca_select(&x, 0.8, 2).unwrap();
            let mut y = x.clone();
            for r in &mut y {
                r[col] *= scale;
            }
            let b = pca_select(&y, 0.8, 2).unwrap();
            prop_assert_eq!(a.selected, b.selected);
        }
    }
}
