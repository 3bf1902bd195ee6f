//! Small dense linear algebra for the Gaussian-linear posteriors.
//!
//! Matrices are square, row-major, and tiny (d <= 16 in every experiment),
//! so everything here is straightforward O(d^3) loops.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = s;
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self = scale * self + x x^T`
    pub fn scale_add_outer(&mut self, scale: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let v = &mut self.data[i * d + j];
                *v = scale * *v + x[i] * x[j];
            }
        }
    }

    pub fn add_diagonal(&mut self, s: f64) {
        for i in 0..self.dim {
            self[(i, i)] += s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| dot(&self.data[i * d..(i + 1) * d], x))
            .collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                for j in 0..d {
                    out.data[i * d + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn norm_inf(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| self.data[i * d..(i + 1) * d].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of `self - self^T`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Lower-triangular Cholesky factor together with its smallest pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Matrix,
    min_pivot: f64,
}

impl Cholesky {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Smallest diagonal pivot before the square root, i.e. `min L_ii^2`.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `A x = b` with `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = forward_substitute(&self.lower, b);
        back_substitute_transposed(&self.lower, &y)
    }

    /// Solves `L^T y = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        back_substitute_transposed(&self.lower, z)
    }
}

/// Factors a symmetric positive-definite matrix as `L L^T`.
///
/// Only the lower triangle of `a` is read. A non-positive pivot is reported
/// with its index.
pub fn cholesky(a: &Matrix) -> Result<Cholesky> {
    let d = a.dim();
    let mut l = Matrix::zeros(d);
    let mut min_pivot = f64::INFINITY;
    for j in 0..d {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot.is_nan() || pivot <= 0.0 || pivot.is_infinite() {
            return Err(Error::NotPositiveDefinite {
                index: j,
                value: pivot,
            });
        }
        min_pivot = min_pivot.min(pivot);
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(Cholesky { lower: l, min_pivot })
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.len(),
        });
    }
    Ok(cholesky(a)?.solve(b))
}

/// Draws from `N(mu, v^2 B^{-1})` given the Cholesky factor of `B`.
pub fn mvn_sample_factored<R: Rng + ?Sized>(
    mu: &[f64],
    scale: f64,
    chol: &Cholesky,
    rng: &mut R,
) -> Vec<f64> {
    let z: Vec<f64> = (0..mu.len()).map(|_| rng.sample(StandardNormal)).collect();
    let y = chol.solve_upper(&z);
    mu.iter().zip(y).map(|(m, y)| m + scale * y).collect()
}

/// Draws from `N(mu, v^2 B^{-1})`: returns `mu + v (L^T)^{-1} z`.
pub fn mvn_sample<R: Rng + ?Sized>(mu: &[f64], scale: f64, b: &Matrix, rng: &mut R) -> Result<Vec<f64>> {
    if mu.len() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            actual: mu.len(),
        });
    }
    Ok(mvn_sample_factored(mu, scale, &cholesky(b)?, rng))
}

fn forward_substitute(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let d = l.dim();
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

fn back_substitute_transposed(l: &Matrix, y: &[f64]) -> Vec<f64> {
    let d = l.dim();
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
