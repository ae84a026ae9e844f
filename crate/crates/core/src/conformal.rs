//! Pointwise manifold-level algebra: the fundamental form, the F-tensor
//! and its associated 1-forms, the Lee form, contact conformal
//! transformations, the two connection-transformation laws, and subgroup
//! membership predicates.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::decomp::{decompose, DEFAULT_SIGNATURE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Bilinear, CoordCovector, Metric, Trilinear};
use crate::structure::AcmStructure;

/// Default tolerance for subgroup membership predicates.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Relative antisymmetry slack accepted when ingesting an F-tensor.
const F_ANTISYM_TOL: f64 = 1e-10;

/// (0,3)-tensor antisymmetric in its last two slots.
#[derive(Debug, Clone)]
pub struct FTensor {
    entries: Trilinear,
}

impl FTensor {
    /// Checks the slot antisymmetry F(x,y,z) = −F(x,z,y) before accepting.
    pub fn new(entries: Trilinear) -> Result<Self> {
        let dim = entries.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    worst = worst.max((entries.get(i, j, k) + entries.get(i, k, j)).abs());
                }
            }
        }
        let scale = entries.frobenius().max(1.0);
        if worst > F_ANTISYM_TOL * scale {
            return Err(Error::NotAntisymmetric(worst));
        }
        Ok(FTensor { entries })
    }

    pub fn zero(dim: usize) -> Self {
        FTensor {
            entries: Trilinear::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Trilinear {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries.get(i, j, k)
    }

    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.entries.apply(x, y, z)
    }
}

/// The 1-forms extracted from an F-tensor by frame contraction, plus the
/// Lee form (defined only when n ≥ 2).
#[derive(Debug, Clone)]
pub struct LeeData {
    pub f: CoordCovector,
    pub fstar: CoordCovector,
    pub omega: CoordCovector,
    pub theta: Option<CoordCovector>,
    pub fstar_xi: f64,
}

/// Pointwise data of a contact conformal transformation c(u, v): the scalar
/// values and differentials of u and v at the working point.
#[derive(Debug, Clone)]
pub struct ConformalParams {
    pub u_val: f64,
    pub v_val: f64,
    pub du: CoordCovector,
    pub dv: CoordCovector,
}

impl ConformalParams {
    pub fn new(u_val: f64, v_val: f64, du: CoordCovector, dv: CoordCovector) -> Result<Self> {
        if du.len() != dv.len() {
            return Err(Error::ShapeMismatch(format!(
                "du and dv lengths differ: {} vs {}",
                du.len(),
                dv.len()
            )));
        }
        let all_finite = u_val.is_finite()
            && v_val.is_finite()
            && du.iter().all(|x| x.is_finite())
            && dv.iter().all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::ShapeMismatch(
                "conformal parameters must be finite".into(),
            ));
        }
        Ok(ConformalParams { u_val, v_val, du, dv })
    }

    /// Identity transformation in the given ambient dimension.
    pub fn identity(dim: usize) -> Self {
        ConformalParams {
            u_val: 0.0,
            v_val: 0.0,
            du: DVector::zeros(dim),
            dv: DVector::zeros(dim),
        }
    }

    /// c(u₂,v₂)∘c(u₁,v₁) = c(u₁+u₂, v₁+v₂); differentials add.
    pub fn compose(&self, other: &ConformalParams) -> Result<ConformalParams> {
        if self.du.len() != other.du.len() {
            return Err(Error::DimensionMismatch {
                expected: self.du.len(),
                got: other.du.len(),
            });
        }
        ConformalParams::new(
            self.u_val + other.u_val,
            self.v_val + other.v_val,
            &self.du + &other.du,
            &self.dv + &other.dv,
        )
    }

    /// c(−u, −v).
    pub fn inverse(&self) -> ConformalParams {
        ConformalParams {
            u_val: -self.u_val,
            v_val: -self.v_val,
            du: -&self.du,
            dv: -&self.dv,
        }
    }
}

/// Christoffel coefficients Γ^k_{ij}, stored with (i, j) the derivative and
/// argument slots and k the output component.
#[derive(Debug, Clone)]
pub struct ConnectionCoeffs {
    gamma: Trilinear,
}

impl ConnectionCoeffs {
    pub fn new(gamma: Trilinear) -> Self {
        ConnectionCoeffs { gamma }
    }

    pub fn zeros(dim: usize) -> Self {
        ConnectionCoeffs {
            gamma: Trilinear::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// Γ^k_{ij}
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma.get(i, j, k)
    }

    pub fn as_trilinear(&self) -> &Trilinear {
        &self.gamma
    }

    /// max |Γ^k_{ij} − Γ^k_{ji}|
    pub fn torsion_residual(&self) -> f64 {
        let d = self.gamma.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.gamma.get(i, j, k) - self.gamma.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// ∇_x y for constant coordinate vectors x, y (pure Christoffel term).
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.gamma.dim();
        DVector::from_fn(d, |k, _| {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += x[i] * y[j] * self.gamma.get(i, j, k);
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.gamma.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max(self.gamma.get(i, j, k).abs());
                }
            }
        }
        worst
    }
}

/// Fundamental 2-form Φ(x,y) = g(x, φy) as a matrix.
pub fn fundamental_form(s: &AcmStructure) -> Bilinear {
    s.metric().matrix() * s.phi()
}

/// Covector z ↦ a(φz), i.e. a composed with φ.
pub fn compose_phi(s: &AcmStructure, a: &CoordCovector) -> CoordCovector {
    s.phi().transpose() * a
}

/// The 1-forms f, f*, ω of an F-tensor, summed over the adapted frame, and
/// the Lee form for n ≥ 2.
pub fn lee_forms(s: &AcmStructure, f: &FTensor) -> Result<LeeData> {
    let dim = s.dim();
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.dim(),
        });
    }
    let basis = s.adapted_basis()?;
    let mut form_f = DVector::zeros(dim);
    let mut form_fstar = DVector::zeros(dim);
    for c in 0..dim {
        let b = basis.column(c).into_owned();
        let phib = s.phi() * &b;
        for z in 0..dim {
            let mut acc_f = 0.0;
            let mut acc_fs = 0.0;
            for p in 0..dim {
                if b[p] == 0.0 {
                    continue;
                }
                for q in 0..dim {
                    acc_f += b[p] * b[q] * f.get(p, q, z);
                    acc_fs += b[p] * phib[q] * f.get(p, q, z);
                }
            }
            form_f[z] += acc_f;
            form_fstar[z] += acc_fs;
        }
    }
    let omega = DVector::from_fn(dim, |z, _| f.apply(s.xi(), s.xi(), &unit(dim, z)));
    let fstar_xi = form_fstar.dot(s.xi());
    let n = s.n();
    let theta = if n >= 2 {
        let coef = 1.0 / (2.0 * (n as f64 - 1.0));
        Some(s.eta() * (fstar_xi / (2.0 * n as f64)) + compose_phi(s, &form_f) * coef)
    } else {
        None
    };
    Ok(LeeData {
        f: form_f,
        fstar: form_fstar,
        omega,
        theta,
        fstar_xi,
    })
}

/// Lee form, erroring in the dimension where it is undefined.
pub fn lee_theta(s: &AcmStructure, f: &FTensor) -> Result<CoordCovector> {
    let data = lee_forms(s, f)?;
    data.theta.ok_or(Error::DimensionTooSmall(s.n()))
}

fn unit(dim: usize, k: usize) -> DVector<f64> {
    DVector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 })
}

/// Builds the F-tensor η⊗(η∧ω₀) of the basic conformal class.
pub fn synth_w1_f(s: &AcmStructure, omega0: &CoordCovector) -> Result<FTensor> {
    let dim = s.dim();
    if omega0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: omega0.len(),
        });
    }
    let against_xi = omega0.dot(s.xi());
    if against_xi.abs() > 1e-10 {
        return Err(Error::OmegaNotHorizontal(against_xi));
    }
    let eta = s.eta();
    let t = Trilinear::from_fn(dim, |i, j, k| {
        eta[i] * (eta[j] * omega0[k] - omega0[j] * eta[k])
    });
    FTensor::new(t)
}

/// Distance of F from the basic conformal class: ‖F − η⊗(η∧ω)‖ with
/// ω(z) = F(ξ,ξ,z), in the metric-induced tensor norm.
pub fn w1_residual(s: &AcmStructure, f: &FTensor) -> Result<f64> {
    let dim = s.dim();
    let omega = DVector::from_fn(dim, |z, _| f.apply(s.xi(), s.xi(), &unit(dim, z)));
    let eta = s.eta();
    let model = Trilinear::from_fn(dim, |i, j, k| {
        eta[i] * (eta[j] * omega[k] - omega[j] * eta[k])
    });
    let diff = f.entries().sub(&model);
    Ok(s.metric().tensor3_norm(&diff))
}

/// Applies c(u, v): φ̄ = φ, ξ̄ = e^{−v}ξ, η̄ = e^{v}η,
/// ḡ = e^{2u}·hg + e^{2v}·η⊗η. Only the scalar values of u, v enter.
pub fn transform_structure(s: &AcmStructure, p: &ConformalParams) -> Result<AcmStructure> {
    let e2u = (2.0 * p.u_val).exp();
    let e2v = (2.0 * p.v_val).exp();
    let ev = p.v_val.exp();
    let eta = s.eta();
    let g_bar = s.hg() * e2u + (eta * eta.transpose()) * e2v;
    let metric = Metric::new(g_bar).map_err(|_| Error::SingularTransformedMetric)?;
    AcmStructure::new(
        s.n(),
        s.phi().clone(),
        s.xi() / ev,
        eta * ev,
        metric,
    )
}

fn check_params(s: &AcmStructure, p: &ConformalParams) -> Result<()> {
    if p.du.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: p.du.len(),
        });
    }
    Ok(())
}

fn du_metric_norm(s: &AcmStructure, p: &ConformalParams) -> f64 {
    p.du.dot(&s.metric().raise(&p.du)).max(0.0).sqrt()
}

/// Transforms Levi-Civita coefficients through c(u, v) by assembling the
/// pairing 2ḡ(∇̄_i ∂_j, ∂_k) on all basis triples and raising with ḡ⁻¹.
///
/// The pairing consists of a conformal-scaling block in du, a vertical
/// block in (e^{2v}dv − e^{2u}du), and six F-terms weighted by
/// (e^{2v} − e^{2u}).
pub fn transform_connection(
    s: &AcmStructure,
    gamma: &ConnectionCoeffs,
    p: &ConformalParams,
    f: &FTensor,
) -> Result<ConnectionCoeffs> {
    let dim = s.dim();
    check_params(s, p)?;
    if gamma.dim() != dim || f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: gamma.dim().min(f.dim()),
        });
    }
    let e2u = (2.0 * p.u_val).exp();
    let e2v = (2.0 * p.v_val).exp();
    let lambda = e2v - e2u;
    let g = s.metric().matrix();
    let eta = s.eta();
    let xi = s.xi();
    let phi = s.phi();

    // g(∇_i ∂_j, ∂_k) and η(∇_i ∂_j)
    let mut g_nabla = Trilinear::zeros(dim);
    let mut eta_nabla = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let col = DVector::from_fn(dim, |m, _| gamma.coeff(i, j, m));
            let lowered = g * &col;
            for k in 0..dim {
                g_nabla.set(i, j, k, lowered[k]);
            }
            eta_nabla[(i, j)] = eta.dot(&col);
        }
    }

    // a_m = e^{2v} dv_m − e^{2u} du_m
    let a = &p.dv * e2v - &p.du * e2u;

    // fx[(i, j)] = F(e_i, ξ, φ e_j)
    let mut fx = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for pidx in 0..dim {
                if xi[pidx] == 0.0 {
                    continue;
                }
                for q in 0..dim {
                    acc += xi[pidx] * phi[(q, j)] * f.get(i, pidx, q);
                }
            }
            fx[(i, j)] = acc;
        }
    }

    let transformed = transform_structure(s, p)?;
    let gbar_inv = transformed.metric().inverse();

    let mut out = Trilinear::zeros(dim);
    let mut rhs = DVector::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let scaling = 2.0 * e2u
                    * (p.du[i] * g[(j, k)] + p.du[j] * g[(i, k)] - p.du[k] * g[(i, j)]);
                let vertical = 2.0
                    * (a[i] * eta[j] * eta[k] + a[j] * eta[i] * eta[k]
                        - a[k] * eta[i] * eta[j]);
                let f_block = 2.0 * eta_nabla[(i, j)] * eta[k]
                    - eta[k] * fx[(i, j)]
                    - eta[j] * fx[(i, k)]
                    - eta[i] * fx[(j, k)]
                    - eta[k] * fx[(j, i)]
                    + eta[j] * fx[(k, i)]
                    + eta[i] * fx[(k, j)];
                rhs[k] = 2.0 * e2u * g_nabla.get(i, j, k) + scaling + vertical
                    + lambda * f_block;
            }
            let raised = gbar_inv * &rhs * 0.5;
            for m in 0..dim {
                out.set(i, j, m, raised[m]);
            }
        }
    }
    Ok(ConnectionCoeffs::new(out))
}

/// The short connection law valid inside G₁ (du = 0):
/// ∇̄_x y = ∇_x y − e^{2v−2u} η(x)η(y) h(grad v)
///          + [dv(x)η(y) + dv(y)η(x) − dv(ξ)η(x)η(y)] ξ.
pub fn transform_connection_short(
    s: &AcmStructure,
    gamma: &ConnectionCoeffs,
    p: &ConformalParams,
) -> Result<ConnectionCoeffs> {
    let dim = s.dim();
    check_params(s, p)?;
    if gamma.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: gamma.dim(),
        });
    }
    let du_norm = du_metric_norm(s, p);
    if du_norm > DEFAULT_MEMBERSHIP_TOL {
        return Err(Error::NotInG1(du_norm));
    }
    let scale = (2.0 * (p.v_val - p.u_val)).exp();
    let eta = s.eta();
    let xi = s.xi();
    let hgrad = s.h_vec(&s.metric().raise(&p.dv));
    let dv_xi = p.dv.dot(xi);
    let mut out = Trilinear::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let coef_xi = p.dv[i] * eta[j] + p.dv[j] * eta[i] - dv_xi * eta[i] * eta[j];
            for k in 0..dim {
                out.set(
                    i,
                    j,
                    k,
                    gamma.coeff(i, j, k) - scale * eta[i] * eta[j] * hgrad[k]
                        + coef_xi * xi[k],
                );
            }
        }
    }
    Ok(ConnectionCoeffs::new(out))
}

/// Transported covariant derivative of the Lee form along c(u, v) ∈ G₁:
/// L̄(θ̄) = L(θ) − L(dv∘φ) + e^{2v−2u}·θ(grad v)·η⊗η. The tensor L(dv∘φ)
/// is first-derivative data of dv and must be supplied by the caller.
pub fn transport_lee_derivative(
    s: &AcmStructure,
    ltheta: &Bilinear,
    l_dvphi: &Bilinear,
    p: &ConformalParams,
    theta: &CoordCovector,
) -> Result<Bilinear> {
    let dim = s.dim();
    check_params(s, p)?;
    if ltheta.nrows() != dim || l_dvphi.nrows() != dim || theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ltheta.nrows(),
        });
    }
    let du_norm = du_metric_norm(s, p);
    if du_norm > DEFAULT_MEMBERSHIP_TOL {
        return Err(Error::NotInG1(du_norm));
    }
    let scale = (2.0 * (p.v_val - p.u_val)).exp();
    let theta_grad_v = theta.dot(&s.metric().raise(&p.dv));
    let eta = s.eta();
    Ok(ltheta - l_dvphi + (eta * eta.transpose()) * (scale * theta_grad_v))
}

/// Membership record for the conformal subgroups: G₁ (du = 0), G₁⁰
/// (additionally dv(ξ) = 0), and the pure-class subgroups indexed by
/// {1, 2, 3, 7, 9} (additionally L(dv∘φ) concentrated in one component).
#[derive(Debug, Clone)]
pub struct SubgroupMembership {
    pub in_g1: bool,
    pub in_g1_0: bool,
    pub g1i_indices: BTreeSet<usize>,
    pub du_norm: f64,
    pub dv_xi: f64,
    pub dvphi_signature: BTreeSet<usize>,
}

pub fn subgroup_membership(
    s: &AcmStructure,
    p: &ConformalParams,
    l_dvphi: &Bilinear,
    tol: f64,
) -> Result<SubgroupMembership> {
    check_params(s, p)?;
    let du_norm = du_metric_norm(s, p);
    let dv_xi = p.dv.dot(s.xi());
    let in_g1 = du_norm <= tol;
    let in_g1_0 = in_g1 && dv_xi.abs() <= tol;
    let report = decompose(s, l_dvphi, if tol > 0.0 { tol } else { DEFAULT_SIGNATURE_TOL })?;
    let signature = report.signature;
    let mut g1i_indices = BTreeSet::new();
    if in_g1_0 {
        for i in [1usize, 2, 3, 7, 9] {
            if signature.iter().all(|&j| j == i) {
                g1i_indices.insert(i);
            }
        }
    }
    Ok(SubgroupMembership {
        in_g1,
        in_g1_0,
        g1i_indices,
        du_norm,
        dv_xi,
        dvphi_signature: signature,
    })
}
