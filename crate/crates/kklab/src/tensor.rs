//! Small dense rank-3 and rank-4 arrays used for Christoffel symbols,
//! curvature tensors, field strengths and second fundamental forms.
//!
//! Chart dimensions here are tiny (at most 5 or 6), so flat `Vec<f64>`
//! storage with row-major indexing is all that is needed.

/// Dense rank-3 array with independent extents per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n0: usize, n1: usize, n2: usize) -> Self {
        Self {
            n0,
            n1,
            n2,
            data: vec![0.0; n0 * n1 * n2],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n1 + j) * self.n2 + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n1 + j) * self.n2 + k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n1 + j) * self.n2 + k] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Dense rank-4 array with a single extent on every axis (curvature tensors).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.n + j) * self.n + k) * self.n + l] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
