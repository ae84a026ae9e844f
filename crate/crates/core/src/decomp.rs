//! Nine-fold orthogonal decomposition of (0,2)-tensors over an almost
//! contact metric structure.
//!
//! The splitting first separates a tensor into horizontal, mixed, and
//! vertical parts (h, v, w), then refines the horizontal part by symmetry
//! and by behaviour under composition with φ, using the traces α and β to
//! peel off the two one-dimensional pieces.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{antisym_part, sym_part, Bilinear, CoordCovector};
use crate::structure::{canonical_structure, AcmStructure};

/// Default relative threshold deciding whether a component is "present".
pub const DEFAULT_SIGNATURE_TOL: f64 = 1e-9;

/// Eigenvalue cutoff when ranking projector matrices.
const RANK_EIGEN_TOL: f64 = 1e-8;

/// Trace pair of the horizontal part: α contracts hL with the inverse
/// metric, β does the same after composing the second slot with φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceData {
    pub alpha: f64,
    pub beta: f64,
}

/// Full decomposition of one tensor: the nine components, their
/// metric-induced norms, the reconstruction residual ‖ΣLᵢ − L‖, and the
/// signature (indices whose component exceeds tol·max(1,‖L‖)).
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub components: [Bilinear; 9],
    pub norms: [f64; 9],
    pub reconstruction_residual: f64,
    pub signature: BTreeSet<usize>,
    pub input_norm: f64,
}

fn check_dims(s: &AcmStructure, l: &Bilinear) -> Result<()> {
    let dim = s.dim();
    if l.nrows() != dim || l.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: l.nrows().max(l.ncols()),
        });
    }
    Ok(())
}

/// Horizontal part: (hL)(x,y) = L(hx, hy).
pub fn op_h(s: &AcmStructure, l: &Bilinear) -> Result<Bilinear> {
    check_dims(s, l)?;
    let h = s.h_projector();
    Ok(h.transpose() * l * h)
}

/// Mixed part: (vL)(x,y) = η(x)L(ξ,y) + η(y)L(x,ξ) − 2η(x)η(y)L(ξ,ξ).
pub fn op_v(s: &AcmStructure, l: &Bilinear) -> Result<Bilinear> {
    check_dims(s, l)?;
    let eta = s.eta();
    let xi = s.xi();
    let l_xi = l * xi;
    let lt_xi = l.transpose() * xi;
    let lxx = (xi.transpose() * l * xi)[(0, 0)];
    Ok(eta * lt_xi.transpose() + &l_xi * eta.transpose() - (eta * eta.transpose()) * (2.0 * lxx))
}

/// Vertical part: (wL)(x,y) = η(x)η(y)L(ξ,ξ).
pub fn op_w(s: &AcmStructure, l: &Bilinear) -> Result<Bilinear> {
    check_dims(s, l)?;
    let eta = s.eta();
    let xi = s.xi();
    let lxx = (xi.transpose() * l * xi)[(0, 0)];
    Ok((eta * eta.transpose()) * lxx)
}

/// Composes both slots with φ: (L∘φ)(x,y) = L(φx, φy).
pub fn phi_compose(s: &AcmStructure, l: &Bilinear) -> Bilinear {
    s.phi().transpose() * l * s.phi()
}

/// Fundamental form restricted to the contact distribution:
/// Φ_h(x,y) = g(hx, φy).
pub fn phi_h_form(s: &AcmStructure) -> Bilinear {
    s.hg() * s.phi()
}

/// Traces of the horizontal part under the inverse metric.
pub fn traces(s: &AcmStructure, l: &Bilinear) -> Result<TraceData> {
    let hl = op_h(s, l)?;
    let gi = s.metric().inverse();
    let alpha = (gi * &hl).trace();
    let beta = (gi * hl * s.phi()).trace();
    Ok(TraceData { alpha, beta })
}

/// One projection Lᵢ(L), i ∈ 1..=9.
pub fn project(s: &AcmStructure, l: &Bilinear, i: usize) -> Result<Bilinear> {
    if !(1..=9).contains(&i) {
        return Err(Error::BadIndex(i));
    }
    check_dims(s, l)?;
    let two_n = 2.0 * s.n() as f64;
    Ok(match i {
        1 | 2 => {
            let shl = sym_part(&op_h(s, l)?);
            let t = traces(s, l)?;
            let l1 = s.hg() * (t.alpha / two_n);
            if i == 1 {
                l1
            } else {
                (&shl + phi_compose(s, &shl)) * 0.5 - l1
            }
        }
        3 => {
            let shl = sym_part(&op_h(s, l)?);
            (&shl - phi_compose(s, &shl)) * 0.5
        }
        4 | 5 => {
            let ahl = antisym_part(&op_h(s, l)?);
            let t = traces(s, l)?;
            let l4 = phi_h_form(s) * (-t.beta / two_n);
            if i == 4 {
                l4
            } else {
                (&ahl + phi_compose(s, &ahl)) * 0.5 - l4
            }
        }
        6 => {
            let ahl = antisym_part(&op_h(s, l)?);
            (&ahl - phi_compose(s, &ahl)) * 0.5
        }
        7 => sym_part(&op_v(s, l)?),
        8 => antisym_part(&op_v(s, l)?),
        _ => op_w(s, l)?,
    })
}

/// All nine projections plus norms, residual, and signature.
pub fn decompose(s: &AcmStructure, l: &Bilinear, tol: f64) -> Result<DecompositionReport> {
    check_dims(s, l)?;
    let dim = s.dim();
    let mut components: Vec<Bilinear> = Vec::with_capacity(9);
    for i in 1..=9 {
        components.push(project(s, l, i)?);
    }
    let mut sum = DMatrix::zeros(dim, dim);
    for c in &components {
        sum += c;
    }
    let g = s.metric();
    let norms: [f64; 9] = core::array::from_fn(|k| g.tensor2_norm(&components[k]));
    let input_norm = g.tensor2_norm(l);
    let reconstruction_residual = g.tensor2_norm(&(&sum - l));
    let threshold = tol * input_norm.max(1.0);
    let signature: BTreeSet<usize> = (1..=9).filter(|&i| norms[i - 1] > threshold).collect();
    let components: [Bilinear; 9] = components
        .try_into()
        .expect("exactly nine components were pushed");
    Ok(DecompositionReport {
        components,
        norms,
        reconstruction_residual,
        signature,
        input_norm,
    })
}

/// Signature of a covector-derivative tensor: the pointwise membership test
/// for the derived subspace classes (empty set = derivative vanishes; {i} =
/// pure class i).
pub fn classify_covector_derivative(
    s: &AcmStructure,
    ltheta: &Bilinear,
    tol: f64,
) -> Result<BTreeSet<usize>> {
    Ok(decompose(s, ltheta, tol)?.signature)
}

/// Dimensions of the nine subspaces inside the (2n+1)²-dimensional tensor
/// space, computed as numerical ranks of the projectors over the canonical
/// structure (the dimensions are basis-independent).
pub fn subspace_dims(n: usize) -> Result<[usize; 9]> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    let s = canonical_structure(n)?;
    let d = s.dim();
    let d2 = d * d;
    let mut dims = [0usize; 9];
    for (slot, dim_out) in dims.iter_mut().enumerate() {
        let i = slot + 1;
        let mut p = DMatrix::zeros(d2, d2);
        for a in 0..d {
            for b in 0..d {
                let mut e = DMatrix::zeros(d, d);
                e[(a, b)] = 1.0;
                let pe = project(&s, &e, i)?;
                let col = a * d + b;
                for r in 0..d {
                    for c in 0..d {
                        p[(r * d + c, col)] = pe[(r, c)];
                    }
                }
            }
        }
        // canonical metric is the identity, so the projector is symmetric
        let sym = (&p + p.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        *dim_out = eig.eigenvalues.iter().filter(|&&ev| ev > RANK_EIGEN_TOL).count();
    }
    Ok(dims)
}

/// Horizontal covector: a − a(ξ)η. Useful when constructing mixed-type
/// test tensors.
pub fn horizontal_covector(s: &AcmStructure, a: &CoordCovector) -> CoordCovector {
    a - s.eta() * a.dot(s.xi())
}
