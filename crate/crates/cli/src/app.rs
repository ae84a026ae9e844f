//! Subcommand implementations. Every command renders a JSON report and
//! an exit code: 0 success, 1 check failure, 2 input error.

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use acmc_core::chart::{
    class_quadratic, classify_point, conformal_deform_field, cosymplectic_chart, ScalarField,
    DEFAULT_CHART_TOL, DEFAULT_FD_STEP,
};
use acmc_core::conformal::{subgroup_membership, transform_structure, DEFAULT_MEMBERSHIP_TOL};
use acmc_core::decomp::{decompose, subspace_dims, traces, DEFAULT_SIGNATURE_TOL};
use acmc_core::structure::canonical_structure;
use acmc_core::verify::run_all;

use crate::io;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "acmc",
    about = "Decomposition, classification and conformal tooling for almost contact metric structures",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the structural axioms of a serialized structure
    Validate {
        /// Structure document (JSON)
        #[arg(long)]
        structure: String,
        /// Residual tolerance (default 1e-9, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Split a bilinear tensor into its nine components
    Decompose {
        /// Bilinear tensor document (JSON)
        #[arg(long)]
        input: String,
        /// Structure document (JSON)
        #[arg(long)]
        structure: String,
        /// Signature threshold (default 1e-9, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Classify a covector-derivative tensor by component signature
    Classify {
        /// Bilinear tensor document (JSON)
        #[arg(long)]
        input: String,
        /// Structure document (JSON)
        #[arg(long)]
        structure: String,
        /// Signature threshold (default 1e-9, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Print component dimensions for a given n
    Dims {
        #[arg(long)]
        n: usize,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Apply a conformal transformation to a structure
    Transform {
        /// Parameter document (JSON)
        #[arg(long)]
        input: String,
        /// Structure document (JSON)
        #[arg(long)]
        structure: String,
        /// Output structure file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Test membership of a transformation in the conformal subgroups
    Subgroup {
        /// Parameter document (JSON)
        #[arg(long)]
        input: String,
        /// Structure document (JSON)
        #[arg(long)]
        structure: String,
        /// Membership tolerance (default 1e-9, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Deform a flat chart by a pure-class potential and classify points
    ChartDemo {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Pure class index of the deforming potential: 1, 2, 3 or 9
        #[arg(long)]
        i: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Finite-difference step
        #[arg(long = "fd-step")]
        fd_step: Option<f64>,
        /// Classification threshold (default 1e-4, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
    /// Run the full verification suites
    Verify {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Chart classification threshold (default 1e-4, env ACMC_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<String>,
    },
}

pub struct Outcome {
    pub report: String,
    pub output: Option<String>,
    pub code: i32,
}

fn resolve_tol(flag: Option<f64>, default: f64) -> Result<f64, CliError> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("ACMC_TOL") {
            Ok(text) => text
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("ACMC_TOL is not a number: {text}")))?,
            Err(_) => default,
        },
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::input(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

fn resolve_step(flag: Option<f64>) -> Result<f64, CliError> {
    let step = flag.unwrap_or(DEFAULT_FD_STEP);
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::input(format!("fd-step must be positive, got {step}")));
    }
    Ok(step)
}

#[derive(Serialize)]
struct ResidualEntry {
    check: String,
    residual: f64,
}

#[derive(Serialize)]
struct ValidateReport {
    n: usize,
    tolerance: f64,
    valid: bool,
    max_residual: f64,
    residuals: Vec<ResidualEntry>,
}

#[derive(Serialize)]
struct DecomposeReport {
    tolerance: f64,
    input_norm: f64,
    reconstruction_residual: f64,
    alpha: f64,
    beta: f64,
    component_norms: [f64; 9],
    signature: Vec<usize>,
}

#[derive(Serialize)]
struct ClassifyReport {
    tolerance: f64,
    input_norm: f64,
    component_norms: [f64; 9],
    signature: Vec<usize>,
    symmetric_norm: f64,
    antisymmetric_norm: f64,
}

#[derive(Serialize)]
struct DimsReport {
    n: usize,
    dims: [usize; 9],
    total: usize,
}

#[derive(Serialize)]
struct SubgroupReport {
    tolerance: f64,
    in_g1: bool,
    in_g1_0: bool,
    du_norm: f64,
    dv_xi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pure_class_indices: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dvphi_signature: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct ChartPointReport {
    point: Vec<f64>,
    label: String,
    signature: Vec<usize>,
    f_norm: f64,
    w1_residual: f64,
    dtheta_norm: f64,
    hdtheta_norm: f64,
}

#[derive(Serialize)]
struct ChartDemoReport {
    n: usize,
    class: usize,
    seed: u64,
    fd_step: f64,
    tolerance: f64,
    expected_label: String,
    hessian_signature: Vec<usize>,
    dvphi_derivative_signature: Vec<usize>,
    all_points_match: bool,
    points: Vec<ChartPointReport>,
}

#[derive(Serialize)]
struct VerifyCheck {
    name: String,
    residual: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReportDoc {
    n: usize,
    seed: u64,
    classification_tolerance: f64,
    passed: bool,
    checks: Vec<VerifyCheck>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Validate {
            structure,
            tol,
            output,
        } => {
            let tol = resolve_tol(tol, 1e-9)?;
            let doc: io::StructureDoc = io::load_json(&structure)?;
            let s = io::structure_from_doc(&doc)?;
            let report = s.validate();
            let residuals = report
                .entries()
                .into_iter()
                .map(|(check, residual)| ResidualEntry {
                    check: check.to_string(),
                    residual,
                })
                .collect();
            let valid = report.max_residual() <= tol;
            let rendered = io::render(&ValidateReport {
                n: s.n(),
                tolerance: tol,
                valid,
                max_residual: report.max_residual(),
                residuals,
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: if valid { 0 } else { 1 },
            })
        }
        Command::Decompose {
            input,
            structure,
            tol,
            output,
        } => {
            let tol = resolve_tol(tol, DEFAULT_SIGNATURE_TOL)?;
            let sdoc: io::StructureDoc = io::load_json(&structure)?;
            let s = io::structure_from_doc(&sdoc)?;
            let ldoc: io::BilinearDoc = io::load_json(&input)?;
            let l = io::bilinear_from_doc(&ldoc, s.dim())?;
            let rep = decompose(&s, &l, tol).map_err(CliError::failure_from)?;
            let t = traces(&s, &l).map_err(CliError::failure_from)?;
            let rendered = io::render(&DecomposeReport {
                tolerance: tol,
                input_norm: rep.input_norm,
                reconstruction_residual: rep.reconstruction_residual,
                alpha: t.alpha,
                beta: t.beta,
                component_norms: rep.norms,
                signature: rep.signature.iter().copied().collect(),
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: 0,
            })
        }
        Command::Classify {
            input,
            structure,
            tol,
            output,
        } => {
            let tol = resolve_tol(tol, DEFAULT_SIGNATURE_TOL)?;
            let sdoc: io::StructureDoc = io::load_json(&structure)?;
            let s = io::structure_from_doc(&sdoc)?;
            let ldoc: io::BilinearDoc = io::load_json(&input)?;
            let l = io::bilinear_from_doc(&ldoc, s.dim())?;
            let rep = decompose(&s, &l, tol).map_err(CliError::failure_from)?;
            let sym = (&l + l.transpose()) * 0.5;
            let asym = (&l - l.transpose()) * 0.5;
            let rendered = io::render(&ClassifyReport {
                tolerance: tol,
                input_norm: rep.input_norm,
                component_norms: rep.norms,
                signature: rep.signature.iter().copied().collect(),
                symmetric_norm: s.metric().tensor2_norm(&sym),
                antisymmetric_norm: s.metric().tensor2_norm(&asym),
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: 0,
            })
        }
        Command::Dims { n, output } => {
            let dims = subspace_dims(n)
                .map_err(|e| CliError::input(format!("--n rejected: {e}")))?;
            let rendered = io::render(&DimsReport {
                n,
                dims,
                total: dims.iter().sum(),
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: 0,
            })
        }
        Command::Transform {
            input,
            structure,
            output,
        } => {
            let sdoc: io::StructureDoc = io::load_json(&structure)?;
            let s = io::structure_from_doc(&sdoc)?;
            let pdoc: io::ParamsDoc = io::load_json(&input)?;
            let params = io::params_from_doc(&pdoc, s.dim())?;
            let transformed = transform_structure(&s, &params).map_err(CliError::failure_from)?;
            let rendered = io::render(&io::structure_to_doc(&transformed))?;
            Ok(Outcome {
                report: rendered,
                output,
                code: 0,
            })
        }
        Command::Subgroup {
            input,
            structure,
            tol,
            output,
        } => {
            let tol = resolve_tol(tol, DEFAULT_MEMBERSHIP_TOL)?;
            let sdoc: io::StructureDoc = io::load_json(&structure)?;
            let s = io::structure_from_doc(&sdoc)?;
            let pdoc: io::ParamsDoc = io::load_json(&input)?;
            let params = io::params_from_doc(&pdoc, s.dim())?;
            let l_dvphi = io::optional_l_dvphi(&pdoc, s.dim())?;
            let placeholder = DMatrix::zeros(s.dim(), s.dim());
            let m = subgroup_membership(
                &s,
                &params,
                l_dvphi.as_ref().unwrap_or(&placeholder),
                tol,
            )
            .map_err(CliError::failure_from)?;
            let (pure_class_indices, dvphi_signature) = if l_dvphi.is_some() {
                (
                    Some(m.g1i_indices.iter().copied().collect()),
                    Some(m.dvphi_signature.iter().copied().collect()),
                )
            } else {
                (None, None)
            };
            let rendered = io::render(&SubgroupReport {
                tolerance: tol,
                in_g1: m.in_g1,
                in_g1_0: m.in_g1_0,
                du_norm: m.du_norm,
                dv_xi: m.dv_xi,
                pure_class_indices,
                dvphi_signature,
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: 0,
            })
        }
        Command::ChartDemo {
            n,
            i,
            seed,
            fd_step,
            tol,
            output,
        } => {
            if n < 2 {
                return Err(CliError::input(format!(
                    "--n must be at least 2 for chart classification, got {n}"
                )));
            }
            if !matches!(i, 1 | 2 | 3 | 9) {
                return Err(CliError::input(format!(
                    "--i must be one of 1, 2, 3, 9, got {i}"
                )));
            }
            let tol = resolve_tol(tol, DEFAULT_CHART_TOL)?;
            let step = resolve_step(fd_step)?;
            let q = class_quadratic(n, i, seed).map_err(CliError::failure_from)?;
            let base = cosymplectic_chart(n).map_err(CliError::failure_from)?;
            let deformed =
                conformal_deform_field(&base, &ScalarField::zero(), &q.scalar_field());
            let s0 = canonical_structure(n).map_err(CliError::failure_from)?;
            let hessian_signature: Vec<usize> =
                decompose(&s0, q.hessian(), DEFAULT_SIGNATURE_TOL)
                    .map_err(CliError::failure_from)?
                    .signature
                    .into_iter()
                    .collect();
            let twisted = q.hessian() * s0.phi();
            let dvphi_derivative_signature: Vec<usize> =
                decompose(&s0, &twisted, DEFAULT_SIGNATURE_TOL)
                    .map_err(CliError::failure_from)?
                    .signature
                    .into_iter()
                    .collect();

            let expected_label = format!("W1_{i}");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 2 * n + 1;
            let mut points = Vec::new();
            let mut all_match = true;
            for _ in 0..4 {
                let p = DVector::from_fn(dim, |_, _| rng.gen_range(-0.4..0.4));
                let c = classify_point(&deformed, &p, step, tol)
                    .map_err(CliError::failure_from)?;
                let label = c.label.to_string();
                if label != expected_label {
                    all_match = false;
                }
                points.push(ChartPointReport {
                    point: p.iter().copied().collect(),
                    label,
                    signature: c.signature.iter().copied().collect(),
                    f_norm: c.f_norm,
                    w1_residual: c.w1_residual,
                    dtheta_norm: c.dtheta_norm,
                    hdtheta_norm: c.hdtheta_norm,
                });
            }
            let rendered = io::render(&ChartDemoReport {
                n,
                class: i,
                seed,
                fd_step: step,
                tolerance: tol,
                expected_label,
                hessian_signature,
                dvphi_derivative_signature,
                all_points_match: all_match,
                points,
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: if all_match { 0 } else { 1 },
            })
        }
        Command::Verify {
            n,
            seed,
            tol,
            output,
        } => {
            let tol = resolve_tol(tol, DEFAULT_CHART_TOL)?;
            if n < 1 {
                return Err(CliError::input("--n must be at least 1".to_string()));
            }
            let report = run_all(n, seed, tol).map_err(CliError::failure_from)?;
            let checks = report
                .checks
                .iter()
                .map(|c| VerifyCheck {
                    name: c.name.to_string(),
                    residual: c.residual,
                    tolerance: c.tolerance,
                    passed: c.passed,
                })
                .collect();
            let rendered = io::render(&VerifyReportDoc {
                n: report.n,
                seed: report.seed,
                classification_tolerance: tol,
                passed: report.passed,
                checks,
            })?;
            Ok(Outcome {
                report: rendered,
                output,
                code: if report.passed { 0 } else { 1 },
            })
        }
    }
}
