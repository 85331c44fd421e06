//! Nuclear-norm penalized least squares on one data half.

mod admm;
mod cg;
mod kernel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, Matrix};
use crate::model::{ProblemDims, SampleView};

pub use admm::{solve_nuclear, solve_nuclear_traced, IterationTrace, SolverResult};
pub use cg::{conjugate_gradient, CgOutcome};

/// Default multiplier `c` in `λ = c·σ·√(m̄/n)`.
pub const DEFAULT_LAMBDA_C: f64 = 2.0;

/// How the A-update linear system is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AUpdate {
    /// Kernel factorization when `n ≤ m1·m2`, CG otherwise.
    #[default]
    Auto,
    /// Warm-started matrix-free CG on the `m1·m2` unknowns.
    Cg,
    /// Cholesky factorization of the `n x n` sample kernel, reused across
    /// iterations.
    Kernel,
}

impl AUpdate {
    pub(crate) fn use_kernel(self, n: usize, d: usize) -> bool {
        match self {
            AUpdate::Auto => n <= d,
            AUpdate::Cg => false,
            AUpdate::Kernel => true,
        }
    }
}

/// Fully resolved ADMM settings for one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda_reg: f64,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    #[serde(default)]
    pub a_update: AUpdate,
}

impl SolverConfig {
    pub fn with_lambda(lambda_reg: f64) -> Self {
        let d = SolverOptions::default();
        Self {
            lambda_reg,
            rho: d.rho,
            max_iter: d.max_iter,
            tol_primal: d.tol_primal,
            tol_dual: d.tol_dual,
            cg_tol: d.cg_tol,
            cg_max_iter: d.cg_max_iter,
            a_update: d.a_update,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_reg", self.lambda_reg),
            ("rho", self.rho),
            ("tol_primal", self.tol_primal),
            ("tol_dual", self.tol_dual),
            ("cg_tol", self.cg_tol),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config {
                    key: key.into(),
                    message: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        for (key, v) in [
            ("max_iter", self.max_iter),
            ("cg_max_iter", self.cg_max_iter),
        ] {
            if v == 0 {
                return Err(Error::Config {
                    key: key.into(),
                    message: "must be >= 1".into(),
                });
            }
        }
        Ok(())
    }
}

/// Solver settings as they appear in config files: everything optional
/// except through defaults, with `λ` either fixed or derived from `σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub lambda_reg: Option<f64>,
    pub lambda_c: f64,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub a_update: AUpdate,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            lambda_reg: None,
            lambda_c: DEFAULT_LAMBDA_C,
            rho: 1.0,
            max_iter: 500,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            cg_tol: 1e-8,
            cg_max_iter: 200,
            a_update: AUpdate::Auto,
        }
    }
}

impl SolverOptions {
    /// Config for a problem of size `dims` with noise level `sigma`; a fixed
    /// `lambda_reg` takes precedence over the `σ`-based default.
    pub fn resolve(&self, dims: &ProblemDims, sigma: Option<f64>) -> Result<SolverConfig> {
        let lambda_reg = match (self.lambda_reg, sigma) {
            (Some(l), _) => l,
            (None, Some(s)) => default_lambda(s, dims.m1, dims.m2, dims.n, self.lambda_c)?,
            (None, None) => {
                return Err(Error::Config {
                    key: "lambda_reg".into(),
                    message: "no penalty given and no noise level to derive one".into(),
                })
            }
        };
        let config = SolverConfig {
            lambda_reg,
            rho: self.rho,
            max_iter: self.max_iter,
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
            a_update: self.a_update,
        };
        config.validate()?;
        Ok(config)
    }
}

/// `c·σ·√(max(m1, m2)/n)`.
pub fn default_lambda(sigma: f64, m1: usize, m2: usize, n: usize, c: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "default penalty needs a positive noise level, got {sigma}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("default penalty needs n >= 1".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "penalty multiplier must be > 0, got {c}"
        )));
    }
    Ok(c * sigma * (m1.max(m2) as f64 / n as f64).sqrt())
}

/// `(1/n)Σ(y_i − ⟨X_i, A⟩)² + λ‖A‖⋆`.
pub fn objective(a: &Matrix, half: &SampleView<'_>, lambda_reg: f64) -> Result<f64> {
    half.check_shape(a)?;
    if half.is_empty() {
        return Err(Error::arg("objective over an empty sample"));
    }
    let loss: f64 = half.residuals(a).iter().map(|r| r * r).sum::<f64>() / half.len() as f64;
    Ok(loss + lambda_reg * nuclear_norm(a)?)
}
