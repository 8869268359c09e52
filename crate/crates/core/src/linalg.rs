//! Small dense linear algebra: cyclic Jacobi eigen-decomposition of symmetric
//! matrices and a Gram-matrix truncated SVD built on it.

use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing.
/// `vectors[j]` is the unit eigenvector for `values[j]`, with its
/// largest-magnitude component positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Flips `v` so its largest-magnitude component (first on ties) is positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Cyclic Jacobi rotations on a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> SymmetricEigen {
    assert_eq!(a.rows, a.cols, "matrix must be square");
    let n = a.rows;
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| m[p * n + q] * m[p * n + q])
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[p * n + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = m[p * n + p];
                    let aqq = m[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = m[k * n + p];
                        let akq = m[k * n + q];
                        m[k * n + p] = c * akp - s * akq;
                        m[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = m[p * n + k];
                        let aqk = m[q * n + k];
                        m[p * n + k] = c * apk - s * aqk;
                        m[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + j]).collect();
            canonicalize_sign(&mut col);
            col
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Relative cutoff below which Gram eigenvalues count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Rank-truncated SVD `M ≈ U diag(s) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// rows × k
    pub u: Matrix,
    pub s: Vec<f64>,
    /// cols × k
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for r in 0..us.rows {
            for (j, s) in self.s.iter().enumerate() {
                us.data[r * us.cols + j] *= s;
            }
        }
        us.matmul(&self.v.transpose())
    }
}

/// Truncated SVD through the eigen-decomposition of the smaller Gram matrix.
/// Keeps at most `k` singular values, and only those above the rank cutoff.
pub fn truncated_svd(m: &Matrix, k: usize) -> Svd {
    let transpose = m.rows < m.cols;
    let a = if transpose { m.transpose() } else { m.clone() };
    // a is tall: rows >= cols; Gram is cols × cols
    let gram = a.transpose().matmul(&a);
    let eig = symmetric_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&j| top > 0.0 && eig.values[j] > top * RANK_TOLERANCE)
        .take(k)
        .collect();
    let r = keep.len();
    let s: Vec<f64> = keep.iter().map(|&j| eig.values[j].sqrt()).collect();
    let mut small = Matrix::zeros(a.cols, r);
    for (jj, &j) in keep.iter().enumerate() {
        for i in 0..a.cols {
            small.set(i, jj, eig.vectors[j][i]);
        }
    }
    let mut big = a.matmul(&small);
    for i in 0..big.rows {
        for j in 0..r {
            big.data[i * r + j] /= s[j];
        }
    }
    if transpose {
        Svd { u: small, s, v: big }
    } else {
        Svd { u: big, s, v: small }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_and_2x2() {
        let e = symmetric_eigen(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]));
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0]);
        let e = symmetric_eigen(&Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]));
        assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - h).abs() < 1e-12 && (e.vectors[0][1] - h).abs() < 1e-12);
    }

    #[test]
    fn eigen_matches_nalgebra() {
        let n = 7;
        let mut a = Matrix::zeros(n, n);
        let mut x = 0.37f64;
        for i in 0..n {
            for j in i..n {
                x = (x * 3.7 + 0.11).fract();
                a.set(i, j, x - 0.5);
                a.set(j, i, x - 0.5);
            }
        }
        let ours = symmetric_eigen(&a);
        let na = nalgebra::DMatrix::from_row_slice(n, n, &a.data);
        let mut theirs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (o, t) in ours.values.iter().zip(&theirs) {
            assert!((o - t).abs() < 1e-10, "{o} vs {t}");
        }
        // A v = λ v
        for (val, vec) in ours.values.iter().zip(&ours.vectors) {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a.get(i, j) * vec[j]).sum();
                assert!((av - val * vec[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_of_rank_one() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        let svd = truncated_svd(&m, 5);
        assert_eq!(svd.s.len(), 1);
        let rec = svd.reconstruct();
        for (a, b) in rec.data.iter().zip(&m.data) {
            assert!((a - b).abs() < 1e-12);
        }
        let wide = truncated_svd(&m.transpose(), 5);
        assert_eq!(wide.s.len(), 1);
        assert!((wide.s[0] - svd.s[0]).abs() < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix_is_empty() {
        let svd = truncated_svd(&Matrix::zeros(3, 2), 2);
        assert!(svd.s.is_empty());
    }
}
