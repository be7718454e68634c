//! Small dense linear algebra: row-major matrices, Gaussian elimination and
//! null-space extraction for the affine fixed-point oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Pivots below this magnitude (relative to the matrix scale) count as zero.
const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `c1 * self + c2 * I`.
    pub fn shifted(&self, c1: f64, c2: f64) -> Matrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= c1);
        for i in 0..self.rows.min(self.cols) {
            let d = m.get(i, i);
            m.set(i, i, d + c2);
        }
        m
    }

    fn scale(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0)
    }

    /// Solves the square system `self · x = rhs` with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        if self.cols != n || rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let eps = PIVOT_EPS * self.scale();
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap_or(col);
            if a[pivot * n + col].abs() <= eps {
                return Err(Error::Singular);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                b.swap(pivot, col);
            }
            for row in col + 1..n {
                let f = a[row * n + col] / a[col * n + col];
                if f != 0.0 {
                    for k in col..n {
                        a[row * n + k] -= f * a[col * n + k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
            x[row] = (b[row] - tail) / a[row * n + row];
        }
        Ok(x)
    }

    /// Solution set of `self · x = rhs`: a particular solution plus a basis of
    /// the null space, via reduced row echelon form. Returns `None` when the
    /// system is inconsistent.
    pub fn affine_solution_set(&self, rhs: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let (m, n) = (self.rows, self.cols);
        let eps = PIVOT_EPS * self.scale();
        let w = n + 1;
        let mut aug: Vec<f64> = Vec::with_capacity(m * w);
        for (row, r) in self.data.chunks(n.max(1)).zip(rhs) {
            aug.extend_from_slice(row);
            aug.push(*r);
        }
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for c in 0..n {
            if r == m {
                break;
            }
            let p = (r..m)
                .max_by(|&i, &j| aug[i * w + c].abs().total_cmp(&aug[j * w + c].abs()))
                .unwrap_or(r);
            if aug[p * w + c].abs() <= eps {
                continue;
            }
            for k in 0..w {
                aug.swap(p * w + k, r * w + k);
            }
            let piv = aug[r * w + c];
            for k in 0..w {
                aug[r * w + k] /= piv;
            }
            for i in 0..m {
                if i != r {
                    let f = aug[i * w + c];
                    if f != 0.0 {
                        for k in 0..w {
                            aug[i * w + k] -= f * aug[r * w + k];
                        }
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }
        // rows without pivots must have zero right-hand side
        if (r..m).any(|i| aug[i * w + n].abs() > eps.max(PIVOT_EPS * rhs_scale(rhs))) {
            return None;
        }
        let mut particular = vec![0.0; n];
        for (i, &c) in pivot_cols.iter().enumerate() {
            particular[c] = aug[i * w + n];
        }
        let basis = (0..n)
            .filter(|c| !pivot_cols.contains(c))
            .map(|free| {
                let mut v = vec![0.0; n];
                v[free] = 1.0;
                for (i, &c) in pivot_cols.iter().enumerate() {
                    v[c] = -aug[i * w + free];
                }
                v
            })
            .collect();
        Some((particular, basis))
    }
}

fn rhs_scale(rhs: &[f64]) -> f64 {
    rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0)
}
