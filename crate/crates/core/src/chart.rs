//! Finite-difference differential geometry on a single coordinate chart of
//! R^{2n+1}: Christoffel symbols, the F-tensor, covariant and exterior
//! derivatives of 1-form fields, cosymplectic baselines, conformal
//! deformations of fields, and per-point class labels.
//!
//! All derivative operators use central differences and recompute at half
//! step; if the two results disagree beyond a fixed relative bound the
//! step is rejected as roundoff-dominated.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::{
    lee_forms, transform_structure, w1_residual, ConformalParams, ConnectionCoeffs, FTensor,
};
use crate::decomp::decompose;
use crate::error::{Error, Result};
use crate::linalg::{Bilinear, CoordCovector, Trilinear};
use crate::structure::{canonical_structure, AcmStructure};

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Default chart-level classification threshold; looser than the algebraic
/// tolerance to absorb O(step²) noise.
pub const DEFAULT_CHART_TOL: f64 = 1e-4;

/// Relative disagreement between full-step and half-step results above
/// which the step is rejected.
const STEP_CHECK_REL: f64 = 0.02;

pub type ChartPoint = DVector<f64>;

/// Almost contact metric structure varying over a chart.
#[derive(Clone)]
pub struct StructureField {
    n: usize,
    fd_step: f64,
    eval: Arc<dyn Fn(&ChartPoint) -> Result<AcmStructure> + Send + Sync>,
}

impl StructureField {
    pub fn new(
        n: usize,
        fd_step: f64,
        eval: impl Fn(&ChartPoint) -> Result<AcmStructure> + Send + Sync + 'static,
    ) -> Self {
        StructureField {
            n,
            fd_step,
            eval: Arc::new(eval),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<AcmStructure> {
        (self.eval)(p)
    }

    /// The metric component of the field.
    pub fn metric_field(&self) -> MetricField {
        let eval = self.eval.clone();
        MetricField {
            eval: Arc::new(move |p| Ok(eval(p)?.metric().matrix().clone())),
        }
    }
}

/// Scalar function on the chart.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>,
}

impl ScalarField {
    pub fn new(eval: impl Fn(&ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(eval),
        }
    }

    pub fn zero() -> Self {
        ScalarField {
            eval: Arc::new(|_| 0.0),
        }
    }

    pub fn eval(&self, p: &ChartPoint) -> f64 {
        (self.eval)(p)
    }
}

/// Covector-valued function on the chart.
#[derive(Clone)]
pub struct CovectorField {
    eval: Arc<dyn Fn(&ChartPoint) -> Result<CoordCovector> + Send + Sync>,
}

impl CovectorField {
    pub fn new(
        eval: impl Fn(&ChartPoint) -> Result<CoordCovector> + Send + Sync + 'static,
    ) -> Self {
        CovectorField {
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<CoordCovector> {
        (self.eval)(p)
    }
}

/// Matrix-valued (metric) function on the chart.
#[derive(Clone)]
pub struct MetricField {
    eval: Arc<dyn Fn(&ChartPoint) -> Result<DMatrix<f64>> + Send + Sync>,
}

impl MetricField {
    pub fn new(
        eval: impl Fn(&ChartPoint) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        MetricField {
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        (self.eval)(p)
    }
}

fn shifted(p: &ChartPoint, dir: usize, amount: f64) -> ChartPoint {
    let mut q = p.clone();
    q[dir] += amount;
    q
}

/// Levi-Civita coefficients of a metric field at one step, no self-check.
fn christoffel_raw(gf: &MetricField, p: &ChartPoint, step: f64) -> Result<Trilinear> {
    let g = gf.eval(p)?;
    let dim = g.nrows();
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { cond: f64::INFINITY })?;
    let mut dg: Vec<DMatrix<f64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let plus = gf.eval(&shifted(p, i, step))?;
        let minus = gf.eval(&shifted(p, i, -step))?;
        dg.push((plus - minus) / (2.0 * step));
    }
    let mut out = Trilinear::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut acc = 0.0;
                for l in 0..dim {
                    acc += g_inv[(k, l)]
                        * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out.set(i, j, k, 0.5 * acc);
            }
        }
    }
    Ok(out)
}

fn trilinear_rel_disagreement(a: &Trilinear, b: &Trilinear) -> f64 {
    let diff = a.sub(b).frobenius();
    diff / a.frobenius().max(1.0)
}

/// Γ^k_{ij} = ½ g^{kl}(∂ᵢg_{jl} + ∂ⱼg_{il} − ∂ₗg_{ij}) by central
/// differences, cross-checked at half step.
pub fn christoffel(gf: &MetricField, p: &ChartPoint, step: f64) -> Result<ConnectionCoeffs> {
    let full = christoffel_raw(gf, p, step)?;
    let half = christoffel_raw(gf, p, step / 2.0)?;
    let rel = trilinear_rel_disagreement(&full, &half);
    if rel > STEP_CHECK_REL {
        return Err(Error::StepTooSmall(rel));
    }
    Ok(ConnectionCoeffs::new(full))
}

fn nabla_covector_raw(
    thetaf: &CovectorField,
    gamma: &ConnectionCoeffs,
    p: &ChartPoint,
    step: f64,
) -> Result<Bilinear> {
    let dim = gamma.dim();
    let theta_p = thetaf.eval(p)?;
    if theta_p.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: theta_p.len(),
        });
    }
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let plus = thetaf.eval(&shifted(p, i, step))?;
        let minus = thetaf.eval(&shifted(p, i, -step))?;
        let dtheta_i = (plus - minus) / (2.0 * step);
        for j in 0..dim {
            let mut acc = dtheta_i[j];
            for k in 0..dim {
                acc -= gamma.coeff(i, j, k) * theta_p[k];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// (∇θ)_{ij} = ∂ᵢθⱼ − Γ^k_{ij}θₖ by central differences, cross-checked at
/// half step.
pub fn nabla_covector(
    thetaf: &CovectorField,
    gamma: &ConnectionCoeffs,
    p: &ChartPoint,
    step: f64,
) -> Result<Bilinear> {
    let full = nabla_covector_raw(thetaf, gamma, p, step)?;
    let half = nabla_covector_raw(thetaf, gamma, p, step / 2.0)?;
    let rel = (&full - &half).amax() / full.amax().max(1.0);
    if rel > STEP_CHECK_REL {
        return Err(Error::StepTooSmall(rel));
    }
    Ok(full)
}

fn compute_f_raw(sf: &StructureField, p: &ChartPoint, step: f64) -> Result<Trilinear> {
    let dim = sf.dim();
    let phi_form = |q: &ChartPoint| -> Result<DMatrix<f64>> {
        let s = sf.eval(q)?;
        Ok(s.metric().matrix() * s.phi())
    };
    let gamma = christoffel_raw(&sf.metric_field(), p, step)?;
    let phi_p = phi_form(p)?;
    let mut out = Trilinear::zeros(dim);
    for i in 0..dim {
        let plus = phi_form(&shifted(p, i, step))?;
        let minus = phi_form(&shifted(p, i, -step))?;
        let dphi_i = (plus - minus) / (2.0 * step);
        for j in 0..dim {
            for k in 0..dim {
                let mut acc = dphi_i[(j, k)];
                for m in 0..dim {
                    acc -= gamma.get(i, j, m) * phi_p[(m, k)];
                    acc -= gamma.get(i, k, m) * phi_p[(j, m)];
                }
                // F = −∇Φ
                out.set(i, j, k, -acc);
            }
        }
    }
    Ok(out)
}

/// F(x,y,z) = −(∇ₓΦ)(y,z) assembled from ∂Φ and the Levi-Civita
/// coefficients of the field's metric.
pub fn compute_f(sf: &StructureField, p: &ChartPoint, step: f64) -> Result<FTensor> {
    let full = compute_f_raw(sf, p, step)?;
    let half = compute_f_raw(sf, p, step / 2.0)?;
    let rel = trilinear_rel_disagreement(&full, &half);
    if rel > STEP_CHECK_REL {
        return Err(Error::StepTooSmall(rel));
    }
    FTensor::new(full)
}

/// Exterior derivative of a covector field at a point, with its
/// restriction to the contact distribution.
#[derive(Debug, Clone)]
pub struct ExteriorData {
    pub dtheta: Bilinear,
    pub h_dtheta: Bilinear,
    pub dtheta_norm: f64,
    pub hdtheta_norm: f64,
}

fn dtheta_raw(thetaf: &CovectorField, p: &ChartPoint, step: f64, dim: usize) -> Result<Bilinear> {
    let mut partials = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let plus = thetaf.eval(&shifted(p, i, step))?;
        let minus = thetaf.eval(&shifted(p, i, -step))?;
        let d = (plus - minus) / (2.0 * step);
        for j in 0..dim {
            partials[(i, j)] = d[j];
        }
    }
    Ok(&partials - partials.transpose())
}

/// (dθ)_{ij} = ∂ᵢθⱼ − ∂ⱼθᵢ and its h-restriction dθ(h·, h·), with norms
/// taken in the structure's metric.
pub fn exterior_derivative(
    thetaf: &CovectorField,
    s: &AcmStructure,
    p: &ChartPoint,
    step: f64,
) -> Result<ExteriorData> {
    let dim = s.dim();
    let full = dtheta_raw(thetaf, p, step, dim)?;
    let half = dtheta_raw(thetaf, p, step / 2.0, dim)?;
    let rel = (&full - &half).amax() / full.amax().max(1.0);
    if rel > STEP_CHECK_REL {
        return Err(Error::StepTooSmall(rel));
    }
    let h = s.h_projector();
    let h_dtheta = h.transpose() * &full * h;
    let dtheta_norm = s.metric().tensor2_norm(&full);
    let hdtheta_norm = s.metric().tensor2_norm(&h_dtheta);
    Ok(ExteriorData {
        dtheta: full,
        h_dtheta,
        dtheta_norm,
        hdtheta_norm,
    })
}

/// Constant canonical structure on the whole chart (flat baseline with
/// F = 0 and zero Lee forms).
pub fn cosymplectic_chart(n: usize) -> Result<StructureField> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    canonical_structure(n)?; // validate n eagerly
    Ok(StructureField::new(n, DEFAULT_FD_STEP, move |_p| {
        canonical_structure(n)
    }))
}

/// Applies c(u, v) pointwise to a structure field.
pub fn conformal_deform_field(
    sf: &StructureField,
    uf: &ScalarField,
    vf: &ScalarField,
) -> StructureField {
    let base = sf.eval.clone();
    let uf = uf.clone();
    let vf = vf.clone();
    let dim = sf.dim();
    StructureField::new(sf.n(), sf.fd_step(), move |p| {
        let s = base(p)?;
        let params = ConformalParams::new(
            uf.eval(p),
            vf.eval(p),
            DVector::zeros(dim),
            DVector::zeros(dim),
        )?;
        transform_structure(&s, &params)
    })
}

/// The Lee form of the field as a covector field (F recomputed at each
/// evaluation point by finite differences).
pub fn theta_field(sf: &StructureField, step: f64) -> CovectorField {
    let sf = sf.clone();
    CovectorField::new(move |p| {
        let s = sf.eval(p)?;
        let f = compute_f(&sf, p, step)?;
        let data = lee_forms(&s, &f)?;
        data.theta.ok_or(Error::DimensionTooSmall(s.n()))
    })
}

/// Point label in the conformal hierarchy. `W1Closed` is the
/// closed-Lee-form subclass printed as "W1_0".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointLabel {
    NotW1,
    W1,
    W1Closed,
    W1Class(usize),
}

impl std::fmt::Display for PointLabel {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointLabel::NotW1 => write!(fm, "not-W1"),
            PointLabel::W1 => write!(fm, "W1"),
            PointLabel::W1Closed => write!(fm, "W1_0"),
            PointLabel::W1Class(j) => write!(fm, "W1_{j}"),
        }
    }
}

/// Everything measured while classifying one chart point.
#[derive(Debug, Clone)]
pub struct PointClassification {
    pub f_norm: f64,
    pub w1_residual: f64,
    pub theta: CoordCovector,
    pub dtheta_norm: f64,
    pub hdtheta_norm: f64,
    pub ltheta: Bilinear,
    pub signature: BTreeSet<usize>,
    pub component_norms: [f64; 9],
    pub label: PointLabel,
}

/// Classifies one point of a structure field.
///
/// Label ladder: outside the basic class when the F-tensor is far from
/// η⊗(η∧ω); inside it, a closed Lee form lands in the closed subclass and
/// a pure signature refines to W1_j. The vertical component (index 9) is
/// ignored when testing purity: the conformal change itself deposits an
/// η⊗η term there (the trailing term of the transformation law), so at a
/// generic point every deformed chart carries it.
pub fn classify_point(
    sf: &StructureField,
    p: &ChartPoint,
    step: f64,
    tol: f64,
) -> Result<PointClassification> {
    if sf.n() < 2 {
        return Err(Error::DimensionTooSmall(sf.n()));
    }
    let s = sf.eval(p)?;
    let f = compute_f(sf, p, step)?;
    let f_norm = s.metric().tensor3_norm(f.entries());
    let w1_res = w1_residual(&s, &f)?;
    let lee = lee_forms(&s, &f)?;
    let theta = lee.theta.clone().ok_or(Error::DimensionTooSmall(s.n()))?;

    let thetaf = theta_field(sf, step);
    let gamma = christoffel(&sf.metric_field(), p, step)?;
    let ltheta = nabla_covector(&thetaf, &gamma, p, step)?;
    let ext = exterior_derivative(&thetaf, &s, p, step)?;

    let report = decompose(&s, &ltheta, tol)?;
    let signature = report.signature.clone();
    let component_norms = report.norms;

    let deriv_scale = s.metric().tensor2_norm(&ltheta).max(1.0);
    let in_w1 = w1_res <= tol * f_norm.max(1.0);
    let dtheta_ok = ext.dtheta_norm <= tol * deriv_scale;
    let hdtheta_ok = ext.hdtheta_norm <= tol * deriv_scale;

    let mut horizontal_sig = signature.clone();
    horizontal_sig.remove(&9);

    let label = if !in_w1 {
        PointLabel::NotW1
    } else if dtheta_ok {
        if signature.is_empty() {
            PointLabel::W1Closed
        } else if horizontal_sig.is_empty() {
            PointLabel::W1Class(9)
        } else if horizontal_sig.len() == 1 {
            let j = *horizontal_sig.iter().next().unwrap();
            if matches!(j, 1 | 2 | 3 | 7) {
                PointLabel::W1Class(j)
            } else {
                PointLabel::W1Closed
            }
        } else {
            PointLabel::W1Closed
        }
    } else if hdtheta_ok && horizontal_sig == BTreeSet::from([8]) {
        PointLabel::W1Class(8)
    } else {
        PointLabel::W1
    };

    Ok(PointClassification {
        f_norm,
        w1_residual: w1_res,
        theta,
        dtheta_norm: ext.dtheta_norm,
        hdtheta_norm: ext.hdtheta_norm,
        ltheta,
        signature,
        component_norms,
        label,
    })
}

/// Quadratic potential ½ pᵀHp + b·p with an exact gradient, used to drive
/// conformal deformations whose class content is known in advance.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    h: DMatrix<f64>,
    lin: DVector<f64>,
}

impl QuadraticForm {
    pub fn new(h: DMatrix<f64>, lin: DVector<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != lin.len() {
            return Err(Error::ShapeMismatch(format!(
                "quadratic form needs square H matching b, got {}x{} and {}",
                h.nrows(),
                h.ncols(),
                lin.len()
            )));
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-12 * h.amax().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(QuadraticForm { h, lin })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn value(&self, p: &ChartPoint) -> f64 {
        0.5 * (p.transpose() * &self.h * p)[(0, 0)] + self.lin.dot(p)
    }

    pub fn gradient(&self, p: &ChartPoint) -> CoordCovector {
        &self.h * p + &self.lin
    }

    pub fn scalar_field(&self) -> ScalarField {
        let q = self.clone();
        ScalarField::new(move |p| q.value(p))
    }

    pub fn gradient_field(&self) -> CovectorField {
        let q = self.clone();
        CovectorField::new(move |p| Ok(q.gradient(p)))
    }
}

/// Seeded quadratic potential whose flat-chart Hessian is pure of the
/// requested class: 1 (radial), 2 (symmetric traceless, invariant under
/// two-slot φ-composition), 3 (symmetric, anti-invariant), or 9 (linear,
/// zero Hessian). The ξ-coordinate never appears, so dv(ξ) = 0 exactly.
pub fn class_quadratic(n: usize, class: usize, seed: u64) -> Result<QuadraticForm> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let dim = 2 * n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::zeros(dim, dim);
    let mut lin = DVector::zeros(dim);
    match class {
        1 => {
            let c = rng.gen_range(0.5..1.5);
            for i in 0..2 * n {
                h[(i, i)] = c;
            }
        }
        2 => {
            // blocks [[A, B], [-B, A]] with A symmetric traceless, B antisymmetric
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let val = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = val;
                    a[(j, i)] = val;
                }
            }
            let tr = a.trace() / n as f64;
            for i in 0..n {
                a[(i, i)] -= tr;
            }
            let mut b = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let val = rng.gen_range(-1.0..1.0);
                    b[(i, j)] = val;
                    b[(j, i)] = -val;
                }
            }
            h.view_mut((0, 0), (n, n)).copy_from(&a);
            h.view_mut((0, n), (n, n)).copy_from(&b);
            h.view_mut((n, 0), (n, n)).copy_from(&(-&b));
            h.view_mut((n, n), (n, n)).copy_from(&a);
        }
        3 => {
            // blocks [[A, B], [B, -A]] with A, B symmetric
            let mut a = DMatrix::zeros(n, n);
            let mut b = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let va = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = va;
                    a[(j, i)] = va;
                    let vb = rng.gen_range(-1.0..1.0);
                    b[(i, j)] = vb;
                    b[(j, i)] = vb;
                }
            }
            h.view_mut((0, 0), (n, n)).copy_from(&a);
            h.view_mut((0, n), (n, n)).copy_from(&b);
            h.view_mut((n, 0), (n, n)).copy_from(&b);
            h.view_mut((n, n), (n, n)).copy_from(&(-&a));
        }
        9 => {
            for i in 0..2 * n {
                lin[i] = rng.gen_range(-1.0..1.0);
            }
        }
        other => return Err(Error::BadIndex(other)),
    }
    QuadraticForm::new(h, lin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::compose_phi;
    use crate::decomp::DEFAULT_SIGNATURE_TOL;
    use crate::linalg::{antisym_part, sym_part};

    fn flat_metric_field(dim: usize) -> MetricField {
        MetricField::new(move |_| Ok(DMatrix::identity(dim, dim)))
    }

    fn pt(coords: &[f64]) -> ChartPoint {
        DVector::from_column_slice(coords)
    }

    #[test]
    fn christoffel_of_constant_metric_vanishes() {
        let gf = flat_metric_field(5);
        let gamma = christoffel(&gf, &pt(&[0.1, 0.2, -0.3, 0.4, 0.0]), DEFAULT_FD_STEP).unwrap();
        assert!(gamma.max_abs() < 1e-12);
        assert!(gamma.torsion_residual() < 1e-12);
    }

    // Closed-form oracle: for g = e^{2ψ}I with ψ linear,
    // Γ^k_{ij} = δ^k_i ψ_j + δ^k_j ψ_i − δ_{ij} ψ_k.
    #[test]
    fn christoffel_conformally_flat_closed_form() {
        let psi = [0.3, -0.2, 0.15];
        let gf = MetricField::new(move |p: &ChartPoint| {
            let v = psi[0] * p[0] + psi[1] * p[1] + psi[2] * p[2];
            Ok(DMatrix::identity(3, 3) * (2.0 * v).exp())
        });
        let p = pt(&[0.4, -0.1, 0.2]);
        let gamma = christoffel(&gf, &p, DEFAULT_FD_STEP).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = if i == k { psi[j] } else { 0.0 }
                        + if j == k { psi[i] } else { 0.0 }
                        - if i == j { psi[k] } else { 0.0 };
                    assert!(
                        (gamma.coeff(i, j, k) - want).abs() < 1e-6,
                        "({i},{j},{k})"
                    );
                }
            }
        }
        assert!(gamma.torsion_residual() < 1e-9);
    }

    // Richardson oracle: central differences converge at second order.
    #[test]
    fn christoffel_step_halving_ratio_is_quadratic() {
        let gf = MetricField::new(|p: &ChartPoint| {
            let v = (p[0]).sin() * (p[1]).cos();
            Ok(DMatrix::identity(3, 3) * (2.0 * v).exp())
        });
        let p = pt(&[0.35, -0.6, 0.1]);
        // closed form at the point: ψ = sin(x)cos(y)
        let dpsi = [
            p[0].cos() * p[1].cos(),
            -p[0].sin() * p[1].sin(),
            0.0,
        ];
        let exact = |i: usize, j: usize, k: usize| {
            (if i == k { dpsi[j] } else { 0.0 }) + (if j == k { dpsi[i] } else { 0.0 })
                - (if i == j { dpsi[k] } else { 0.0 })
        };
        let err_at = |h: f64| {
            let gamma = christoffel(&gf, &p, h).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        worst = worst.max((gamma.coeff(i, j, k) - exact(i, j, k)).abs());
                    }
                }
            }
            worst
        };
        let ratio = err_at(1e-2) / err_at(5e-3);
        assert!(
            (3.5..=4.5).contains(&ratio),
            "convergence ratio {ratio} not second-order"
        );
    }

    #[test]
    fn christoffel_rejects_roundoff_dominated_step() {
        let gf = MetricField::new(|p: &ChartPoint| {
            let v = (p[0]).sin() * (p[1]).cos();
            Ok(DMatrix::identity(3, 3) * (2.0 * v).exp())
        });
        let p = pt(&[0.35, -0.6, 0.1]);
        assert!(matches!(
            christoffel(&gf, &p, 1e-15),
            Err(Error::StepTooSmall(_))
        ));
    }

    #[test]
    fn nabla_of_constant_covector_on_flat_chart() {
        let thetaf = CovectorField::new(|_| Ok(DVector::from_vec(vec![1.0, -2.0, 0.5])));
        let gamma = ConnectionCoeffs::zeros(3);
        let out = nabla_covector(&thetaf, &gamma, &pt(&[0.0, 0.3, 0.1]), DEFAULT_FD_STEP).unwrap();
        assert!(out.amax() < 1e-12);
    }

    // Analytic Hessian oracle: θ = dv for quadratic v on the flat chart.
    #[test]
    fn nabla_of_exact_gradient_is_hessian() {
        let q = class_quadratic(2, 3, 11).unwrap();
        let thetaf = q.gradient_field();
        let gamma = ConnectionCoeffs::zeros(5);
        let p = pt(&[0.2, -0.4, 0.3, 0.1, 0.5]);
        let out = nabla_covector(&thetaf, &gamma, &p, DEFAULT_FD_STEP).unwrap();
        assert!((&out - q.hessian()).amax() < 1e-6);
        assert!((&out - out.transpose()).amax() < 1e-8);
    }

    // Killing-dual oracle: the rotational form has antisymmetric ∇θ.
    #[test]
    fn nabla_of_rotational_form_is_antisymmetric() {
        let thetaf = CovectorField::new(|p: &ChartPoint| {
            let mut theta = DVector::zeros(5);
            theta[0] = p[1];
            theta[1] = -p[0];
            Ok(theta)
        });
        let gamma = ConnectionCoeffs::zeros(5);
        let p = pt(&[0.3, 0.7, -0.2, 0.0, 0.4]);
        let out = nabla_covector(&thetaf, &gamma, &p, DEFAULT_FD_STEP).unwrap();
        assert!((out.transpose() + &out).amax() < 1e-8);
        assert!((out[(0, 1)] + 1.0).abs() < 1e-8);
        assert!((out[(1, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cosymplectic_chart_is_flat_and_f_free() {
        let sf = cosymplectic_chart(2).unwrap();
        let p = pt(&[0.3, -0.2, 0.5, 0.1, 0.7]);
        let f = compute_f(&sf, &p, DEFAULT_FD_STEP).unwrap();
        let s = sf.eval(&p).unwrap();
        assert!(s.metric().tensor3_norm(f.entries()) < 1e-10);
        let gamma = christoffel(&sf.metric_field(), &p, DEFAULT_FD_STEP).unwrap();
        assert!(gamma.max_abs() < 1e-12);
        let lee = lee_forms(&s, &f).unwrap();
        assert!(lee.f.amax() < 1e-10);
        assert!(lee.fstar.amax() < 1e-10);
        assert!(lee.omega.amax() < 1e-10);
        assert!(matches!(cosymplectic_chart(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn deformed_chart_is_basic_class_with_expected_omega() {
        let base = cosymplectic_chart(2).unwrap();
        let v = ScalarField::new(|p: &ChartPoint| p[0]);
        let deformed = conformal_deform_field(&base, &ScalarField::zero(), &v);
        let p = pt(&[0.4, 0.1, -0.3, 0.2, 0.6]);
        let s = deformed.eval(&p).unwrap();
        assert!(s.validate().max_residual() < 1e-10);
        let f = compute_f(&deformed, &p, DEFAULT_FD_STEP).unwrap();
        assert!(w1_residual(&s, &f).unwrap() < 1e-5);
        // ω̄ = −dv∘φ for a cosymplectic source
        let lee = lee_forms(&s, &f).unwrap();
        let dv = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let want = -compose_phi(&s, &dv);
        assert!((&lee.omega - &want).amax() < 1e-5);
    }

    #[test]
    fn deform_field_identity_and_metric_formula() {
        let base = cosymplectic_chart(2).unwrap();
        let same = conformal_deform_field(&base, &ScalarField::zero(), &ScalarField::zero());
        let p = pt(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let s0 = base.eval(&p).unwrap();
        let s1 = same.eval(&p).unwrap();
        assert!((s1.metric().matrix() - s0.metric().matrix()).amax() < 1e-12);
        assert!((s1.xi() - s0.xi()).amax() < 1e-12);

        let uf = ScalarField::new(|p: &ChartPoint| 0.3 * p[1]);
        let vf = ScalarField::new(|p: &ChartPoint| -0.2 * p[0]);
        let deformed = conformal_deform_field(&base, &uf, &vf);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let q = DVector::from_fn(5, |_, _| rng.gen_range(-0.5..0.5));
            let s = deformed.eval(&q).unwrap();
            assert!(s.validate().max_residual() < 1e-10);
            let base_s = base.eval(&q).unwrap();
            let e2u = (2.0 * uf.eval(&q)).exp();
            let e2v = (2.0 * vf.eval(&q)).exp();
            let want = base_s.hg() * e2u
                + (base_s.eta() * base_s.eta().transpose()) * e2v;
            assert!((s.metric().matrix() - want).amax() < 1e-12);
        }
    }

    #[test]
    fn exterior_derivative_of_exact_and_rotational_forms() {
        let s = canonical_structure(2).unwrap();
        let q = class_quadratic(2, 2, 7).unwrap();
        let thetaf = q.gradient_field();
        let p = pt(&[0.3, -0.5, 0.2, 0.4, 0.1]);
        let ext = exterior_derivative(&thetaf, &s, &p, DEFAULT_FD_STEP).unwrap();
        assert!(ext.dtheta_norm < 1e-8);

        let rot = CovectorField::new(|p: &ChartPoint| {
            let mut theta = DVector::zeros(5);
            theta[0] = p[1];
            theta[1] = -p[0];
            Ok(theta)
        });
        let ext = exterior_derivative(&rot, &s, &p, DEFAULT_FD_STEP).unwrap();
        let gamma = ConnectionCoeffs::zeros(5);
        let nab = nabla_covector(&rot, &gamma, &p, DEFAULT_FD_STEP).unwrap();
        let anti = antisym_part(&nab);
        assert!(
            (ext.dtheta_norm - 2.0 * s.metric().tensor2_norm(&anti)).abs() < 1e-8
        );
        // torsion-freeness ties dθ to the antisymmetric part of ∇θ
        assert!((&ext.dtheta - anti * 2.0).amax() < 1e-8);
    }

    // Closed forms only ever hit the symmetric-and-mixed components.
    #[test]
    fn closed_forms_have_symmetric_class_signature() {
        let s = canonical_structure(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let mut h = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
            h = (&h + h.transpose()) * 0.5;
            let q = QuadraticForm::new(h, DVector::zeros(5)).unwrap();
            let thetaf = q.gradient_field();
            let p = DVector::from_fn(5, |_, _| rng.gen_range(-0.5..0.5));
            let gamma = ConnectionCoeffs::zeros(5);
            let nab = nabla_covector(&thetaf, &gamma, &p, DEFAULT_FD_STEP).unwrap();
            let ext = exterior_derivative(&thetaf, &s, &p, DEFAULT_FD_STEP).unwrap();
            assert!(ext.dtheta_norm < 1e-8);
            assert!(sym_part(&nab).amax() > 1e-3);
            let sig = decompose(&s, &nab, DEFAULT_SIGNATURE_TOL.max(1e-6)).unwrap().signature;
            for j in [4usize, 5, 6, 8] {
                assert!(!sig.contains(&j), "closed form produced component {j}");
            }
        }
    }

    #[test]
    fn classify_cosymplectic_point() {
        let sf = cosymplectic_chart(2).unwrap();
        let p = pt(&[0.2, 0.3, -0.1, 0.4, 0.5]);
        let c = classify_point(&sf, &p, DEFAULT_FD_STEP, DEFAULT_CHART_TOL).unwrap();
        assert_eq!(c.label, PointLabel::W1Closed);
        assert!(c.signature.is_empty());
        assert!(c.f_norm < 1e-8);
        assert!(c.w1_residual < 1e-8);
        assert!(c.dtheta_norm < 1e-8);
    }

    #[test]
    fn classify_pure_class3_deformation() {
        let q = class_quadratic(2, 3, 41).unwrap();
        let base = cosymplectic_chart(2).unwrap();
        let deformed = conformal_deform_field(&base, &ScalarField::zero(), &q.scalar_field());
        let p = pt(&[0.3, -0.2, 0.4, 0.1, 0.25]);
        let c = classify_point(&deformed, &p, DEFAULT_FD_STEP, DEFAULT_CHART_TOL).unwrap();
        assert_eq!(c.label, PointLabel::W1Class(3), "signature {:?}", c.signature);

        // With a flat source, dv(ξ) = 0 and u = 0 the derivative of the
        // Lee form is ½Hess(v) plus a vertical term whose coefficient is
        // e^{2v}·θ̄(grad v); the source η carries the vertical direction.
        let src = base.eval(&p).unwrap();
        let dv = q.gradient(&p);
        let coef = (2.0 * q.value(&p)).exp() * c.theta.dot(&dv);
        let want = q.hessian() * 0.5 + (src.eta() * src.eta().transpose()) * coef;
        assert!(
            (&c.ltheta - &want).amax() < 1e-4,
            "ltheta mismatch {}",
            (&c.ltheta - &want).amax()
        );
        // the vertical component really is present at a generic point
        assert!(c.signature.contains(&9), "signature {:?}", c.signature);
    }

    #[test]
    fn classify_xi_dependent_potential_stays_unclosed() {
        // v = x₁·z has dv(ξ) ≠ 0 away from x₁ = 0: still basic class, but
        // the Lee form is no longer closed
        let base = cosymplectic_chart(2).unwrap();
        let v = ScalarField::new(|p: &ChartPoint| p[0] * p[4]);
        let deformed = conformal_deform_field(&base, &ScalarField::zero(), &v);
        let p = pt(&[0.5, -0.3, 0.2, 0.1, 0.3]);
        let c = classify_point(&deformed, &p, DEFAULT_FD_STEP, DEFAULT_CHART_TOL).unwrap();
        assert_eq!(c.label, PointLabel::W1, "dθ = {}", c.dtheta_norm);
        assert!(c.dtheta_norm > 1e-3);
        assert!(c.hdtheta_norm < 1e-6);
    }

    #[test]
    fn class_quadratic_families_have_expected_hessian_signatures() {
        let s = canonical_structure(2).unwrap();
        for (class, want) in [(1usize, vec![1]), (2, vec![2]), (3, vec![3]), (9, vec![])] {
            let q = class_quadratic(2, class, 13).unwrap();
            let sig = decompose(&s, q.hessian(), DEFAULT_SIGNATURE_TOL)
                .unwrap()
                .signature;
            let want: BTreeSet<usize> = want.into_iter().collect();
            assert_eq!(sig, want, "class {class}");
        }
        assert!(matches!(class_quadratic(2, 5, 1), Err(Error::BadIndex(5))));
        assert!(matches!(class_quadratic(1, 3, 1), Err(Error::DimensionTooSmall(1))));
    }

    // One-slot φ-composition swaps the trace classes: the signature of
    // ∇(dv∘φ) is the image of the Hessian signature under 1↔4, 2↔5, 3↦3.
    #[test]
    fn dvphi_derivative_signature_twist() {
        let s = canonical_structure(2).unwrap();
        for (class, want) in [(1usize, vec![4]), (2, vec![5]), (3, vec![3])] {
            let q = class_quadratic(2, class, 29).unwrap();
            let twisted = q.hessian() * s.phi();
            let sig = decompose(&s, &twisted, DEFAULT_SIGNATURE_TOL)
                .unwrap()
                .signature;
            let want: BTreeSet<usize> = want.into_iter().collect();
            assert_eq!(sig, want, "class {class}");
        }
    }
}
