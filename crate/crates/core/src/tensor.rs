//! Dense rank-3 and rank-4 tensor storage.
//!
//! nalgebra covers vectors and matrices; these two flat-buffer types cover the
//! remaining shapes (connection coefficients, torsion, Nijenhuis tensors,
//! curvature). Index order is documented at each use site; storage is plain
//! row-major over the index tuple.

use nalgebra::DMatrix;

/// Rank-3 tensor `T[i][j][k]` over a single dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] += v;
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Raw row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// Matrix view `M[j][k] = T[i][j][k]` for fixed first index.
    pub fn slice_first(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |j, k| self.get(i, j, k))
    }

    /// Pointwise linear combination `self + c * other`.
    pub fn axpy(&mut self, c: f64, other: &Tensor3) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dim, other.dim);
        Tensor3 {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Rank-4 tensor `T[i][j][k][l]` over a single dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn sub(&self, other: &Tensor4) -> Tensor4 {
        assert_eq!(self.dim, other.dim);
        Tensor4 {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Max-abs deviation between two matrices.
pub fn mat_max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max-abs entry of a matrix.
pub fn mat_max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
