//! Almost contact metric structures on a (2n+1)-dimensional coordinate space.
//!
//! A structure is a quadruple (φ, ξ, η, g) subject to the compatibility
//! axioms checked by [`AcmStructure::validate`]. Random structures are
//! produced only by conjugating the canonical model, which keeps the axioms
//! exact up to roundoff.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Bilinear, CoordCovector, CoordVector, Metric};

/// Residual ceiling for conjugation matrices: cond(P) must stay below this.
const CONJUGATION_COND_LIMIT: f64 = 1e8;

/// Axiom acceptance threshold used by `ValidationReport::is_valid`.
pub const AXIOM_TOL: f64 = 1e-10;

/// Numerical rank floor during adapted-basis orthonormalization.
const BASIS_BREAKDOWN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AcmStructure {
    n: usize,
    phi: DMatrix<f64>,
    xi: CoordVector,
    eta: CoordCovector,
    g: Metric,
}

/// Per-axiom max-entry residuals from [`AcmStructure::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// ‖φ² + I − ξ⊗η‖
    pub phi_square: f64,
    /// ‖φξ‖
    pub phi_annihilates_xi: f64,
    /// ‖η∘φ‖
    pub eta_after_phi: f64,
    /// |η(ξ) − 1|
    pub eta_of_xi: f64,
    /// |g(ξ,ξ) − 1|
    pub xi_unit_norm: f64,
    /// ‖φᵀgφ − (g − η⊗η)‖
    pub phi_metric_compat: f64,
    /// ‖η − g(ξ,·)‖
    pub eta_metric_duality: f64,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.phi_square,
            self.phi_annihilates_xi,
            self.eta_after_phi,
            self.eta_of_xi,
            self.xi_unit_norm,
            self.phi_metric_compat,
            self.eta_metric_duality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    /// (axiom name, residual) pairs in a fixed report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("phi_square", self.phi_square),
            ("phi_annihilates_xi", self.phi_annihilates_xi),
            ("eta_after_phi", self.eta_after_phi),
            ("eta_of_xi", self.eta_of_xi),
            ("xi_unit_norm", self.xi_unit_norm),
            ("phi_metric_compat", self.phi_metric_compat),
            ("eta_metric_duality", self.eta_metric_duality),
        ]
    }
}

impl AcmStructure {
    /// Shape-checked constructor. Axioms are *not* enforced here; call
    /// [`validate`](Self::validate) to measure them.
    pub fn new(
        n: usize,
        phi: DMatrix<f64>,
        xi: CoordVector,
        eta: CoordCovector,
        g: Metric,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension(n));
        }
        let dim = 2 * n + 1;
        if phi.nrows() != dim || phi.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "phi must be {dim}x{dim}, got {}x{}",
                phi.nrows(),
                phi.ncols()
            )));
        }
        for (name, len) in [("xi", xi.len()), ("eta", eta.len())] {
            if len != dim {
                return Err(Error::ShapeMismatch(format!(
                    "{name} must have length {dim}, got {len}"
                )));
            }
        }
        if g.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "metric must be {dim}x{dim}, got {0}x{0}",
                g.dim()
            )));
        }
        Ok(AcmStructure { n, phi, xi, eta, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn xi(&self) -> &CoordVector {
        &self.xi
    }

    pub fn eta(&self) -> &CoordCovector {
        &self.eta
    }

    pub fn metric(&self) -> &Metric {
        &self.g
    }

    /// Max-entry residual of every structure axiom.
    pub fn validate(&self) -> ValidationReport {
        let dim = self.dim();
        let id = DMatrix::identity(dim, dim);
        let phi2 = &self.phi * &self.phi;
        let xi_eta = &self.xi * self.eta.transpose();
        let g = self.g.matrix();
        let eta_eta = &self.eta * self.eta.transpose();
        ValidationReport {
            phi_square: (&phi2 + &id - &xi_eta).amax(),
            phi_annihilates_xi: (&self.phi * &self.xi).amax(),
            eta_after_phi: (self.eta.transpose() * &self.phi).amax(),
            eta_of_xi: (self.eta.dot(&self.xi) - 1.0).abs(),
            xi_unit_norm: (self.g.inner(&self.xi, &self.xi) - 1.0).abs(),
            phi_metric_compat: (self.phi.transpose() * g * &self.phi - (g - &eta_eta)).amax(),
            eta_metric_duality: (&self.eta - self.g.lower(&self.xi)).amax(),
        }
    }

    /// Horizontal part of a vector: x − η(x)ξ.
    pub fn h_vec(&self, x: &CoordVector) -> CoordVector {
        x - &self.xi * self.eta.dot(x)
    }

    /// Vertical part of a vector: η(x)ξ.
    pub fn v_vec(&self, x: &CoordVector) -> CoordVector {
        &self.xi * self.eta.dot(x)
    }

    /// Matrix of the horizontal projector, H = I − ξ⊗η.
    pub fn h_projector(&self) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::identity(dim, dim) - &self.xi * self.eta.transpose()
    }

    /// Horizontal restriction of the metric as a (0,2)-tensor:
    /// (hg)(x,y) = g(hx, hy).
    pub fn hg(&self) -> Bilinear {
        let h = self.h_projector();
        h.transpose() * self.g.matrix() * h
    }

    /// g-orthonormal basis (a₁..aₙ, φa₁..φaₙ, ξ), returned as the columns of
    /// a (2n+1)×(2n+1) matrix. The middle block is φ applied to the first
    /// block entry for entry, with no renormalization.
    pub fn adapted_basis(&self) -> Result<DMatrix<f64>> {
        let n = self.n;
        let dim = self.dim();
        let mut alphas: Vec<CoordVector> = Vec::with_capacity(n);
        let mut betas: Vec<CoordVector> = Vec::with_capacity(n);
        for j in 0..dim {
            if alphas.len() == n {
                break;
            }
            let mut w = self.h_vec(&DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 }));
            for prev in alphas.iter().chain(betas.iter()) {
                w -= prev * self.g.inner(prev, &w);
            }
            // re-orthogonalize once; plain Gram-Schmidt leaks for near-dependent inputs
            for prev in alphas.iter().chain(betas.iter()) {
                w -= prev * self.g.inner(prev, &w);
            }
            let norm = self.g.inner(&w, &w).max(0.0).sqrt();
            if norm < BASIS_BREAKDOWN_TOL {
                continue;
            }
            let a = w / norm;
            let b = &self.phi * &a;
            alphas.push(a);
            betas.push(b);
        }
        if alphas.len() < n {
            return Err(Error::DegenerateStructure);
        }
        let mut basis = DMatrix::zeros(dim, dim);
        for (i, a) in alphas.iter().enumerate() {
            basis.set_column(i, a);
        }
        for (i, b) in betas.iter().enumerate() {
            basis.set_column(n + i, b);
        }
        basis.set_column(2 * n, &self.xi);
        Ok(basis)
    }
}

/// The reference structure on coordinates (x₁..xₙ, y₁..yₙ, z):
/// φ sends the xᵢ-axis to the yᵢ-axis and the yᵢ-axis to −xᵢ, ξ is the
/// z-axis, η = dz, g is the identity.
pub fn canonical_structure(n: usize) -> Result<AcmStructure> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    let dim = 2 * n + 1;
    let mut phi = DMatrix::zeros(dim, dim);
    for i in 0..n {
        phi[(n + i, i)] = 1.0;
        phi[(i, n + i)] = -1.0;
    }
    let mut xi = DVector::zeros(dim);
    xi[dim - 1] = 1.0;
    let eta = xi.clone();
    let g = Metric::new(DMatrix::identity(dim, dim))?;
    AcmStructure::new(n, phi, xi, eta, g)
}

/// Pushes a structure through an invertible change of coordinates P:
/// φ' = PφP⁻¹, ξ' = Pξ, η' = η∘P⁻¹, g'(x,y) = g(P⁻¹x, P⁻¹y).
pub fn conjugate_structure(s: &AcmStructure, p: &DMatrix<f64>) -> Result<AcmStructure> {
    let dim = s.dim();
    if p.nrows() != dim || p.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "conjugation matrix must be {dim}x{dim}, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let svd = p.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond >= CONJUGATION_COND_LIMIT {
        return Err(Error::SingularMatrix { cond });
    }
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { cond })?;
    let phi = p * &s.phi * &p_inv;
    let xi = p * &s.xi;
    let eta = p_inv.transpose() * &s.eta;
    let g_mat = p_inv.transpose() * s.g.matrix() * &p_inv;
    // symmetrize: P⁻ᵀgP⁻¹ is symmetric in exact arithmetic
    let g = Metric::new((&g_mat + g_mat.transpose()) * 0.5)?;
    AcmStructure::new(s.n, phi, xi, eta, g)
}

/// Seeded well-conditioned random structure: conjugates the canonical model
/// by Q·diag(1 + δᵢ) with Q orthogonal and |δᵢ| ≤ 1/2.
pub fn random_structure(n: usize, seed: u64) -> Result<AcmStructure> {
    let s = canonical_structure(n)?;
    let p = random_conjugation(2 * n + 1, seed);
    conjugate_structure(&s, &p)
}

/// Well-conditioned random invertible matrix (cond ≤ 3) from a seed.
pub fn random_conjugation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let qr = a.qr();
    let q = qr.q();
    let d = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            1.0 + rng.gen_range(-0.5..0.5)
        } else {
            0.0
        }
    });
    q * d
}

/// Isometry of the structure: fixes ξ, preserves g, commutes with φ.
#[derive(Debug, Clone)]
pub struct StructureGroupElement {
    u: DMatrix<f64>,
    u_inv: DMatrix<f64>,
}

impl StructureGroupElement {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.u_inv
    }

    /// Pulls a (0,2)-tensor back along the inverse:
    /// (U·L)(x,y) = L(U⁻¹x, U⁻¹y).
    pub fn act_on_bilinear(&self, l: &Bilinear) -> Result<Bilinear> {
        let dim = self.u.nrows();
        if l.nrows() != dim || l.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: l.nrows(),
            });
        }
        Ok(self.u_inv.transpose() * l * &self.u_inv)
    }
}

/// Samples an element of the structure group's identity component.
///
/// In an adapted basis, the horizontal block of the generator is
/// [[P, Q], [−Q, P]] with P antisymmetric and Q symmetric; such matrices
/// are antisymmetric and commute with the φ-block, so their exponential is
/// orthogonal, commutes with φ, and extends by 1 on the ξ-line.
pub fn random_group_element(s: &AcmStructure, seed: u64) -> Result<StructureGroupElement> {
    let n = s.n();
    let dim = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        q[(i, i)] = rng.gen_range(-1.0..1.0);
        for j in (i + 1)..n {
            let v = rng.gen_range(-1.0..1.0);
            p[(i, j)] = v;
            p[(j, i)] = -v;
            let w = rng.gen_range(-1.0..1.0);
            q[(i, j)] = w;
            q[(j, i)] = w;
        }
    }
    let mut gen = DMatrix::zeros(dim, dim);
    gen.view_mut((0, 0), (n, n)).copy_from(&p);
    gen.view_mut((0, n), (n, n)).copy_from(&q);
    gen.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    gen.view_mut((n, n), (n, n)).copy_from(&p);
    let block = gen.exp();
    let basis = s.adapted_basis()?;
    let basis_inv = basis
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateStructure)?;
    let u = &basis * block * &basis_inv;
    let u_inv = u.clone().try_inverse().ok_or(Error::DegenerateStructure)?;
    Ok(StructureGroupElement { u, u_inv })
}
