//! Dense real linear algebra on coordinate tensors.
//!
//! Vectors carry an upper index, covectors a lower one; a `Bilinear` is a
//! (0,2)-tensor stored as the matrix B_{ij} = B(e_i, e_j). A `Trilinear` is
//! a (0,3)-tensor stored flat in row-major index order (i, j, k).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number ceiling above which a metric is rejected as singular.
pub const METRIC_COND_LIMIT: f64 = 1e12;

/// Relative symmetry slack accepted when ingesting a metric.
const METRIC_SYM_TOL: f64 = 1e-10;

/// Multiply-back residual bound for a freshly computed inverse.
const INVERSE_RESIDUAL_TOL: f64 = 1e-12;

pub type CoordVector = DVector<f64>;
pub type CoordCovector = DVector<f64>;
pub type Bilinear = DMatrix<f64>;

/// Symmetric positive definite metric together with its cached inverse.
#[derive(Debug, Clone)]
pub struct Metric {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl Metric {
    /// Validates symmetry and positive definiteness, then inverts.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "metric must be square, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        let asym = (&g - g.transpose()).norm();
        if asym > METRIC_SYM_TOL * g.norm().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        // symmetrize to kill roundoff before the eigendecomposition
        let gs = (&g + g.transpose()) * 0.5;
        let eig = gs.clone().symmetric_eigen();
        let min_ev = eig.eigenvalues.min();
        let max_ev = eig.eigenvalues.max();
        if min_ev <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_ev,
            });
        }
        let cond = max_ev / min_ev;
        if cond > METRIC_COND_LIMIT {
            return Err(Error::SingularMatrix { cond });
        }
        let g_inv = gs
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix { cond })?;
        let residual = (&gs * &g_inv - DMatrix::identity(gs.nrows(), gs.ncols())).norm();
        if residual > INVERSE_RESIDUAL_TOL * cond.max(1.0) {
            return Err(Error::SingularMatrix { cond });
        }
        Ok(Metric { g: gs, g_inv })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    /// g(x, y)
    pub fn inner(&self, x: &CoordVector, y: &CoordVector) -> f64 {
        (x.transpose() * &self.g * y)[(0, 0)]
    }

    /// Index raise: covector a_i -> vector a^i = g^{ij} a_j.
    pub fn raise(&self, a: &CoordCovector) -> CoordVector {
        &self.g_inv * a
    }

    /// Index lower: vector x^i -> covector x_i = g_{ij} x^j.
    pub fn lower(&self, x: &CoordVector) -> CoordCovector {
        &self.g * x
    }

    /// Metric inner product on (0,2)-tensors: <A, B> = g^{ip} g^{jq} A_{ij} B_{pq},
    /// computed as tr(g^{-1} A g^{-1} B^T).
    pub fn tensor2_inner(&self, a: &Bilinear, b: &Bilinear) -> f64 {
        (&self.g_inv * a * &self.g_inv * b.transpose()).trace()
    }

    pub fn tensor2_norm(&self, a: &Bilinear) -> f64 {
        self.tensor2_inner(a, a).max(0.0).sqrt()
    }

    /// Metric inner product on (0,3)-tensors.
    pub fn tensor3_inner(&self, a: &Trilinear, b: &Trilinear) -> f64 {
        let n = self.dim();
        assert_eq!(a.dim(), n, "trilinear dimension mismatch");
        assert_eq!(b.dim(), n, "trilinear dimension mismatch");
        let gi = &self.g_inv;
        let mut acc = 0.0;
        for i in 0..n {
            for p in 0..n {
                let gip = gi[(i, p)];
                if gip == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for q in 0..n {
                        let gjq = gi[(j, q)];
                        if gjq == 0.0 {
                            continue;
                        }
                        for k in 0..n {
                            for r in 0..n {
                                acc += gip
                                    * gjq
                                    * gi[(k, r)]
                                    * a.get(i, j, k)
                                    * b.get(p, q, r);
                            }
                        }
                    }
                }
            }
        }
        acc
    }

    pub fn tensor3_norm(&self, a: &Trilinear) -> f64 {
        self.tensor3_inner(a, a).max(0.0).sqrt()
    }
}

/// (0,3)-tensor, dense, row-major over (i, j, k).
#[derive(Debug, Clone, PartialEq)]
pub struct Trilinear {
    dim: usize,
    data: Vec<f64>,
}

impl Trilinear {
    pub fn zeros(dim: usize) -> Self {
        Trilinear {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Trilinear::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.set(i, j, k, f(i, j, k));
                }
            }
        }
        t
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

    /// T(x, y, z) by full contraction.
    pub fn apply(&self, x: &CoordVector, y: &CoordVector, z: &CoordVector) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += x[i] * y[j] * z[k] * self.get(i, j, k);
                }
            }
        }
        acc
    }

    /// Slot-wise slice: fix the first argument to the basis vector e_i.
    pub fn slice_first(&self, i: usize) -> Bilinear {
        DMatrix::from_fn(self.dim, self.dim, |j, k| self.get(i, j, k))
    }

    /// Frobenius norm over raw entries (coordinate, not metric, norm).
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> Trilinear {
        Trilinear {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Trilinear) -> Trilinear {
        assert_eq!(self.dim, other.dim, "trilinear dimension mismatch");
        Trilinear {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Trilinear) -> Trilinear {
        self.add(&other.scale(-1.0))
    }
}

/// Symmetric part of a (0,2)-tensor.
pub fn sym_part(a: &Bilinear) -> Bilinear {
    (a + a.transpose()) * 0.5
}

/// Antisymmetric part of a (0,2)-tensor.
pub fn antisym_part(a: &Bilinear) -> Bilinear {
    (a - a.transpose()) * 0.5
}

/// Wedge of two covectors: (a ^ b)(x, y) = a(x) b(y) - a(y) b(x).
pub fn wedge(a: &CoordCovector, b: &CoordCovector) -> Bilinear {
    a * b.transpose() - b * a.transpose()
}
