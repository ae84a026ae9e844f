//! Self-contained verification suites: one seeded run exercises the
//! invariants of the decomposition, the Lee/conformal layer, and the
//! chart operators, reporting a residual per check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{
    christoffel, class_quadratic, classify_point, compute_f, conformal_deform_field,
    cosymplectic_chart, ChartPoint, MetricField, PointLabel, ScalarField, DEFAULT_FD_STEP,
};
use crate::conformal::{
    lee_forms, transform_connection_short, transport_lee_derivative, subgroup_membership, synth_w1_f,
    transform_connection, transform_structure, ConformalParams, ConnectionCoeffs, FTensor,
    DEFAULT_MEMBERSHIP_TOL,
};
use crate::decomp::{decompose, project, subspace_dims, traces, DEFAULT_SIGNATURE_TOL};
use crate::error::Result;
use crate::linalg::Trilinear;
use crate::structure::{
    canonical_structure, random_group_element, random_structure, AcmStructure,
};

/// One named residual check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of a full verification run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub n: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn random_bilinear(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_covector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_f_tensor(s: &AcmStructure, rng: &mut ChaCha8Rng) -> Result<FTensor> {
    let dim = s.dim();
    let mut t = Trilinear::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in (j + 1)..dim {
                let val = rng.gen_range(-1.0..1.0);
                t.set(i, j, k, val);
                t.set(i, k, j, -val);
            }
        }
    }
    FTensor::new(t)
}

fn structure_axioms(n: usize, seed: u64) -> Result<f64> {
    let mut worst = canonical_structure(n)?.validate().max_residual();
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(k))?;
        worst = worst.max(s.validate().max_residual());
    }
    Ok(worst)
}

fn split_completeness(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let s = random_structure(n, seed.wrapping_add(100 + k))?;
        let l = random_bilinear(s.dim(), &mut rng);
        let rep = decompose(&s, &l, DEFAULT_SIGNATURE_TOL)?;
        worst = worst.max(rep.reconstruction_residual / rep.input_norm.max(1.0));
    }
    Ok(worst)
}

fn split_idempotence(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(200 + k))?;
        let l = random_bilinear(s.dim(), &mut rng);
        for i in 1..=9 {
            let once = project(&s, &l, i)?;
            let twice = project(&s, &once, i)?;
            let scale = s.metric().tensor2_norm(&l).max(1.0);
            worst = worst.max(s.metric().tensor2_norm(&(&twice - &once)) / scale);
        }
    }
    Ok(worst)
}

fn split_orthogonality(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0e7a);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let s = random_structure(n, seed.wrapping_add(300 + k))?;
        let l = random_bilinear(s.dim(), &mut rng);
        let m = random_bilinear(s.dim(), &mut rng);
        let scale = s.metric().tensor2_norm(&l) * s.metric().tensor2_norm(&m);
        for i in 1..=9 {
            let li = project(&s, &l, i)?;
            for j in (i + 1)..=9 {
                let mj = project(&s, &m, j)?;
                worst = worst.max(s.metric().tensor2_inner(&li, &mj).abs() / scale.max(1.0));
            }
        }
    }
    Ok(worst)
}

fn split_equivariance(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xac71);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(400 + k))?;
        let u = random_group_element(&s, seed.wrapping_add(500 + k))?;
        let l = random_bilinear(s.dim(), &mut rng);
        let ul = u.act_on_bilinear(&l)?;
        let scale = s.metric().tensor2_norm(&l).max(1.0);
        for i in 1..=9 {
            let lhs = project(&s, &ul, i)?;
            let rhs = u.act_on_bilinear(&project(&s, &l, i)?)?;
            worst = worst.max(s.metric().tensor2_norm(&(lhs - rhs)) / scale);
        }
    }
    Ok(worst)
}

fn split_dimensions(n: usize) -> Result<f64> {
    let dims = subspace_dims(n)?;
    let want = [
        1,
        n * n - 1,
        n * n + n,
        1,
        n * n - 1,
        n * n - n,
        2 * n,
        2 * n,
        1,
    ];
    let mut worst = 0.0f64;
    for (got, expect) in dims.iter().zip(want.iter()) {
        worst = worst.max((*got as f64 - *expect as f64).abs());
    }
    let total: usize = dims.iter().sum();
    worst = worst.max((total as f64 - ((2 * n + 1) * (2 * n + 1)) as f64).abs());
    Ok(worst)
}

fn trace_consistency(n: usize, seed: u64) -> Result<f64> {
    // α and β of the projected components must reproduce the component
    // normalisations: α(L₁-part) = α(L), β(L₄-part) = β(L).
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ace);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(600 + k))?;
        let l = random_bilinear(s.dim(), &mut rng);
        let t = traces(&s, &l)?;
        let t1 = traces(&s, &project(&s, &l, 1)?)?;
        let t4 = traces(&s, &project(&s, &l, 4)?)?;
        worst = worst.max((t1.alpha - t.alpha).abs());
        worst = worst.max((t4.beta - t.beta).abs());
    }
    Ok(worst)
}

fn lee_w1_forms(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1ee);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(700 + k))?;
        let raw = random_covector(s.dim(), &mut rng);
        let omega0 = &raw - s.eta() * raw.dot(s.xi());
        let f = synth_w1_f(&s, &omega0)?;
        let lee = lee_forms(&s, &f)?;
        worst = worst.max((&lee.f - &omega0).amax());
        worst = worst.max(lee.fstar.amax());
        worst = worst.max((&lee.omega - &omega0).amax());
    }
    Ok(worst)
}

fn conformal_group_law(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9209);
    let s = random_structure(n, seed.wrapping_add(800))?;
    let dim = s.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p1 = ConformalParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            random_covector(dim, &mut rng),
            random_covector(dim, &mut rng),
        )?;
        let p2 = ConformalParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            random_covector(dim, &mut rng),
            random_covector(dim, &mut rng),
        )?;
        let step1 = transform_structure(&s, &p1)?;
        let step2 = transform_structure(&step1, &p2)?;
        let joint = transform_structure(&s, &p1.compose(&p2)?)?;
        worst = worst.max((step2.metric().matrix() - joint.metric().matrix()).amax());
        worst = worst.max((step2.eta() - joint.eta()).amax());
        let undone = transform_structure(&step1, &p1.inverse())?;
        worst = worst.max((undone.metric().matrix() - s.metric().matrix()).amax());
    }
    Ok(worst)
}

fn conformal_validate(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11d);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let s = random_structure(n, seed.wrapping_add(900 + k))?;
        let p = ConformalParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            random_covector(s.dim(), &mut rng),
            random_covector(s.dim(), &mut rng),
        )?;
        worst = worst.max(transform_structure(&s, &p)?.validate().max_residual());
    }
    Ok(worst)
}

fn connection_f_independence(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe6f1);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(1000 + k))?;
        let w = rng.gen_range(-1.0..1.0);
        let p = ConformalParams::new(
            w,
            w,
            random_covector(s.dim(), &mut rng),
            random_covector(s.dim(), &mut rng),
        )?;
        let gamma = ConnectionCoeffs::zeros(s.dim());
        let f1 = random_f_tensor(&s, &mut rng)?;
        let f2 = random_f_tensor(&s, &mut rng)?;
        let c1 = transform_connection(&s, &gamma, &p, &f1)?;
        let c2 = transform_connection(&s, &gamma, &p, &f2)?;
        worst = worst.max(c1.as_trilinear().sub(c2.as_trilinear()).frobenius());
    }
    Ok(worst)
}

fn short_law_agreement(n: usize, seed: u64) -> Result<f64> {
    // The short law reproduces the full law on its native domain: equal
    // conformal weights, or a vanishing vertical Lee form.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7e6);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let s = random_structure(n, seed.wrapping_add(1100 + k))?;
        let dim = s.dim();
        let equal_weights = k % 2 == 0;
        let (u_val, v_val) = if equal_weights {
            let w = rng.gen_range(-1.0..1.0);
            (w, w)
        } else {
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        let p = ConformalParams::new(
            u_val,
            v_val,
            DVector::zeros(dim),
            random_covector(dim, &mut rng),
        )?;
        let omega0 = if equal_weights {
            let raw = random_covector(dim, &mut rng);
            &raw - s.eta() * raw.dot(s.xi())
        } else {
            DVector::zeros(dim)
        };
        let f = synth_w1_f(&s, &omega0)?;
        let gamma = ConnectionCoeffs::zeros(dim);
        let full = transform_connection(&s, &gamma, &p, &f)?;
        let short = transform_connection_short(&s, &gamma, &p)?;
        worst = worst.max(full.as_trilinear().sub(short.as_trilinear()).frobenius());
    }
    Ok(worst)
}

fn lee_transport_projection_residual(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe8);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let s = random_structure(n, seed.wrapping_add(1200 + k))?;
        let dim = s.dim();
        let p = ConformalParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            DVector::zeros(dim),
            random_covector(dim, &mut rng),
        )?;
        let ltheta = random_bilinear(dim, &mut rng);
        let l_dvphi = random_bilinear(dim, &mut rng);
        let theta = random_covector(dim, &mut rng);
        let out = transport_lee_derivative(&s, &ltheta, &l_dvphi, &p, &theta)?;
        let tail = out - (&ltheta - &l_dvphi);
        for i in 1..=8 {
            worst = worst.max(s.metric().tensor2_norm(&project(&s, &tail, i)?));
        }
    }
    Ok(worst)
}

fn subgroup_ladder(n: usize, seed: u64) -> Result<f64> {
    let s = canonical_structure(n)?;
    let dim = s.dim();
    let q = class_quadratic(n, 3, seed.wrapping_add(1300))?;
    let mut point = DVector::zeros(dim);
    for (i, entry) in point.iter_mut().enumerate() {
        *entry = 0.1 + 0.07 * i as f64;
    }
    let dv = q.gradient(&point);
    let p = ConformalParams::new(0.0, 0.4, DVector::zeros(dim), dv)?;
    let l_dvphi = q.hessian() * s.phi();
    let m = subgroup_membership(&s, &p, &l_dvphi, DEFAULT_MEMBERSHIP_TOL)?;
    let mut failures = 0.0;
    if !m.in_g1 || !m.in_g1_0 {
        failures += 1.0;
    }
    if m.g1i_indices.iter().copied().collect::<Vec<_>>() != vec![3] {
        failures += 1.0;
    }
    let mut du = DVector::zeros(dim);
    du[0] = 0.5;
    let p_bad = ConformalParams::new(0.1, 0.4, du, DVector::zeros(dim))?;
    let m_bad = subgroup_membership(&s, &p_bad, &DMatrix::zeros(dim, dim), DEFAULT_MEMBERSHIP_TOL)?;
    if m_bad.in_g1 {
        failures += 1.0;
    }
    Ok(failures)
}

fn chart_flat_christoffel(n: usize) -> Result<f64> {
    let sf = cosymplectic_chart(n)?;
    let dim = sf.dim();
    let p = ChartPoint::from_fn(dim, |i, _| 0.1 + 0.05 * i as f64);
    Ok(christoffel(&sf.metric_field(), &p, DEFAULT_FD_STEP)?.max_abs())
}

fn chart_cosymplectic_f(n: usize) -> Result<f64> {
    let sf = cosymplectic_chart(n)?;
    let dim = sf.dim();
    let p = ChartPoint::from_fn(dim, |i, _| 0.2 - 0.04 * i as f64);
    let f = compute_f(&sf, &p, DEFAULT_FD_STEP)?;
    let s = sf.eval(&p)?;
    Ok(s.metric().tensor3_norm(f.entries()))
}

fn chart_fd_convergence() -> Result<f64> {
    let gf = MetricField::new(|p: &ChartPoint| {
        let psi = (p[0]).sin() * (p[1]).cos();
        Ok(DMatrix::identity(3, 3) * (2.0 * psi).exp())
    });
    let p = ChartPoint::from_column_slice(&[0.4, -0.3, 0.2]);
    let dpsi = [p[0].cos() * p[1].cos(), -p[0].sin() * p[1].sin(), 0.0];
    let exact = |i: usize, j: usize, k: usize| {
        (if i == k { dpsi[j] } else { 0.0 }) + (if j == k { dpsi[i] } else { 0.0 })
            - (if i == j { dpsi[k] } else { 0.0 })
    };
    let err_at = |h: f64| -> Result<f64> {
        let gamma = christoffel(&gf, &p, h)?;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((gamma.coeff(i, j, k) - exact(i, j, k)).abs());
                }
            }
        }
        Ok(worst)
    };
    let ratio = err_at(1e-2)? / err_at(5e-3)?;
    Ok((ratio - 4.0).abs())
}

fn chart_deform_w1(n: usize, seed: u64) -> Result<f64> {
    let base = cosymplectic_chart(n)?;
    let q = class_quadratic(n, 3, seed.wrapping_add(1400))?;
    let deformed = conformal_deform_field(&base, &ScalarField::zero(), &q.scalar_field());
    let dim = base.dim();
    let p = ChartPoint::from_fn(dim, |i, _| 0.15 + 0.06 * i as f64);
    let s = deformed.eval(&p)?;
    let f = compute_f(&deformed, &p, DEFAULT_FD_STEP)?;
    crate::conformal::w1_residual(&s, &f)
}

fn chart_labels(n: usize, seed: u64, class_tol: f64) -> Result<f64> {
    let base = cosymplectic_chart(n)?;
    let dim = base.dim();
    let p = ChartPoint::from_fn(dim, |i, _| 0.2 + 0.05 * i as f64);
    let mut failures = 0.0;
    let c = classify_point(&base, &p, DEFAULT_FD_STEP, class_tol)?;
    if c.label != PointLabel::W1Closed || !c.signature.is_empty() {
        failures += 1.0;
    }
    let q = class_quadratic(n, 3, seed.wrapping_add(1500))?;
    let deformed = conformal_deform_field(&base, &ScalarField::zero(), &q.scalar_field());
    let c = classify_point(&deformed, &p, DEFAULT_FD_STEP, class_tol)?;
    if c.label != PointLabel::W1Class(3) {
        failures += 1.0;
    }
    Ok(failures)
}

/// Runs every suite at size n with the given seed. `class_tol` is the
/// chart classification threshold (see chart::DEFAULT_CHART_TOL).
pub fn run_all(n: usize, seed: u64, class_tol: f64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, residual: f64, tolerance: f64| {
        checks.push(CheckResult {
            name,
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    };

    push("structure-axioms", structure_axioms(n, seed)?, 1e-9);
    push("split-completeness", split_completeness(n, seed)?, 1e-10);
    push("split-idempotence", split_idempotence(n, seed)?, 1e-10);
    push("split-orthogonality", split_orthogonality(n, seed)?, 1e-9);
    push("split-equivariance", split_equivariance(n, seed)?, 1e-9);
    push("split-dimensions", split_dimensions(n)?, 0.5);
    push("split-trace-consistency", trace_consistency(n, seed)?, 1e-9);
    push("lee-w1-forms", lee_w1_forms(n, seed)?, 1e-9);
    push("conformal-group-law", conformal_group_law(n, seed)?, 1e-11);
    push("conformal-validate", conformal_validate(n, seed)?, 1e-9);
    push("connection-f-independence", connection_f_independence(n, seed)?, 1e-12);
    push(
        "connection-short-law-agreement",
        short_law_agreement(n, seed)?,
        1e-9,
    );
    push("lee-transport-projection", lee_transport_projection_residual(n, seed)?, 1e-10);
    push("chart-flat-christoffel", chart_flat_christoffel(n)?, 1e-10);
    push("chart-cosymplectic-f", chart_cosymplectic_f(n)?, 1e-8);
    push("chart-fd-convergence", chart_fd_convergence()?, 0.5);
    if n >= 2 {
        push("subgroup-ladder", subgroup_ladder(n, seed)?, 0.5);
        push("chart-deform-w1", chart_deform_w1(n, seed)?, 1e-5);
        push("chart-labels", chart_labels(n, seed, class_tol)?, 0.5);
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        n,
        seed,
        checks,
        passed,
    })
}
