use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd_warm, threshold_factors, Matrix, SvdFactors};
use crate::model::SampleView;
use crate::solver::cg::conjugate_gradient;
use crate::solver::kernel::KernelSystem;
use crate::solver::{objective, SolverConfig};

#[derive(Clone, Debug)]
pub struct SolverResult {
    /// The thresholded iterate `B` from the final iteration.
    pub m_nuc: Matrix,
    pub iterations: usize,
    pub objective: f64,
    /// `‖A − B‖_F / max(‖A‖_F, ‖B‖_F, 1)`, compared against `tol_primal`.
    pub primal_residual: f64,
    /// `ρ‖B − B_prev‖_F / (1 + ρ‖W‖_F)`, compared against `tol_dual`.
    pub dual_residual: f64,
    pub converged: bool,
    /// Total inner CG steps over all A-updates; zero on the kernel path.
    pub cg_iterations: usize,
}

/// Per-iteration diagnostics from [`solve_nuclear_traced`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Augmented Lagrangian `(1/n)‖y − 𝒳A‖² + λ‖B‖⋆ + (ρ/2)‖A − B + W‖² − (ρ/2)‖W‖²`
    /// at the iterate after the W-update.
    pub merit: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub cg_iterations: usize,
}

/// Minimizes `(1/n)Σ(y_i − ⟨X_i, A⟩)² + λ‖A‖⋆` by ADMM on the split `A = B`.
///
/// The A-update solves `((2/n)𝒳*𝒳 + ρI)A = (2/n)𝒳*y + ρ(B − W)`, either
/// exactly through the `n x n` sample kernel or by CG warm-started from the
/// previous `A` (see [`AUpdate`](crate::solver::AUpdate)); the B-update thresholds the singular
/// values of `A + W` at `λ/ρ`. Hitting `max_iter` is not an error: the
/// result carries `converged = false`.
pub fn solve_nuclear(half: &SampleView<'_>, config: &SolverConfig) -> Result<SolverResult> {
    run(half, config, None)
}

/// As [`solve_nuclear`], also recording one [`IterationTrace`] per iteration.
pub fn solve_nuclear_traced(
    half: &SampleView<'_>,
    config: &SolverConfig,
) -> Result<(SolverResult, Vec<IterationTrace>)> {
    let mut trace = Vec::new();
    let result = run(half, config, Some(&mut trace))?;
    Ok((result, trace))
}

fn run(
    half: &SampleView<'_>,
    config: &SolverConfig,
    mut trace: Option<&mut Vec<IterationTrace>>,
) -> Result<SolverResult> {
    config.validate()?;
    if half.is_empty() {
        return Err(Error::arg("cannot fit on an empty sample"));
    }
    let (m1, m2) = (half.m1(), half.m2());
    let n = half.len() as f64;
    let rho = config.rho;
    let tau = config.lambda_reg / rho;

    let kernel = if config.a_update.use_kernel(half.len(), m1 * m2) {
        Some(KernelSystem::new(half, n * rho / 2.0)?)
    } else {
        None
    };

    let mut g0 = half.adjoint(half.responses());
    g0.scale_mut(2.0 / n);

    let mut a = Matrix::zeros(m1, m2);
    let mut b = Matrix::zeros(m1, m2);
    let mut w = Matrix::zeros(m1, m2);
    let mut rhs = vec![0.0; m1 * m2];
    let mut scratch = Matrix::zeros(m1, m2);
    let mut cg_total = 0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_factors: Option<SvdFactors> = None;

    for k in 1..=config.max_iter {
        iterations = k;
        for (((r, g), bi), wi) in rhs
            .iter_mut()
            .zip(g0.as_slice())
            .zip(b.as_slice())
            .zip(w.as_slice())
        {
            *r = g + rho * (bi - wi);
        }
        let cg_steps = if let Some(sys) = &kernel {
            sys.solve(half, &rhs, rho, a.as_mut_slice());
            0
        } else {
            let apply = |p: &[f64], out: &mut [f64]| {
                let pm = Matrix::from_raw(m1, m2, p.to_vec());
                half.gram_apply(&pm, &mut scratch);
                for ((o, s), pi) in out.iter_mut().zip(scratch.as_slice()).zip(p) {
                    *o = 2.0 / n * s + rho * pi;
                }
            };
            let outcome = conjugate_gradient(
                apply,
                &rhs,
                a.as_mut_slice(),
                config.cg_tol,
                config.cg_max_iter,
            )
            .map_err(|e| match e {
                Error::CgBreakdown {
                    iteration,
                    curvature,
                    trace,
                    ..
                } => Error::CgBreakdown {
                    outer: k,
                    iteration,
                    curvature,
                    trace,
                },
                other => other,
            })?;
            outcome.iterations
        };
        cg_total += cg_steps;

        let shifted = a.add(&w);
        let f = svd_warm(&shifted, prev_factors.as_ref())?;
        let b_next = threshold_factors(&f, tau, m1, m2);
        let db = rho * b_next.sub(&b).frobenius_norm();
        b = b_next;
        let gap = a.sub(&b);
        w.axpy(1.0, &gap);
        let scale = a.frobenius_norm().max(b.frobenius_norm()).max(1.0);
        primal = gap.frobenius_norm() / scale;
        dual = db / (1.0 + rho * w.frobenius_norm());

        let nuc: f64 = f.s.iter().map(|s| (s - tau).max(0.0)).sum();
        prev_factors = Some(f);
        if let Some(t) = trace.as_deref_mut() {
            let loss: f64 = half.residuals(&a).iter().map(|r| r * r).sum::<f64>() / n;
            let merit = loss + config.lambda_reg * nuc + 0.5 * rho * w.add(&gap).frobenius_norm2()
                - 0.5 * rho * w.frobenius_norm2();
            t.push(IterationTrace {
                merit,
                primal_residual: primal,
                dual_residual: dual,
                cg_iterations: cg_steps,
            });
        }

        if primal <= config.tol_primal && dual <= config.tol_dual {
            converged = true;
            break;
        }
    }

    Ok(SolverResult {
        objective: objective(&b, half, config.lambda_reg)?,
        m_nuc: b,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        cg_iterations: cg_total,
    })
}
