//! Seeded Monte Carlo experiments over a grid of sample sizes.

mod output;
mod stats;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{center, infer_from_fit, scale};
use crate::linalg::projection_distance2;
use crate::model::{
    make_model, replication_stream, sample_dataset, stream_rng, LambdaSpec, LowRankModel,
    ProblemDims, MODEL_STREAM,
};
use crate::solver::{solve_nuclear, SolverOptions};

pub use output::{histogram_svg, records_csv, write_artifacts, RECORD_COLUMNS};
pub use stats::{e1_matrix_check, e1_mixture_draw, e1_oracle, ks_statistic, mean_std, skewness};

pub const DEFAULT_N_GRID: [usize; 4] = [1500, 2500, 3500, 4500];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Loss,
    NormalityOracle,
    NormalityPlugin,
    Coverage,
    E1Oracle,
}

/// Matrix shape and rank of an experiment; sample sizes come from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Shape,
    #[serde(default)]
    pub lambda_spec: LambdaSpec,
    pub sigma: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    pub mode: Mode,
}

fn default_n_grid() -> Vec<usize> {
    DEFAULT_N_GRID.to_vec()
}

fn default_alpha() -> f64 {
    0.05
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(
                if path == "." { "<root>" } else { &path },
                e.inner().to_string(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(config_error("reps", "must be >= 1"));
        }
        if self.n_grid.is_empty() {
            return Err(config_error("n_grid", "must not be empty"));
        }
        if self.n_grid.contains(&0) {
            return Err(config_error("n_grid", "sample sizes must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_error(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(config_error("sigma", "must be finite and >= 0"));
        }
        ProblemDims::new(self.dims.m1, self.dims.m2, self.dims.r, 1)
            .map_err(|e| config_error("dims", e.to_string()))?;
        self.lambda_spec
            .resolve(self.dims.r)
            .map_err(|e| config_error("lambda_spec", e.to_string()))?;
        if self.mode != Mode::E1Oracle {
            for &n in &self.n_grid {
                self.solver
                    .resolve(&self.dims_at(n), Some(self.sigma))
                    .map_err(|e| match e {
                        Error::Config { key, message } => {
                            config_error(&format!("solver.{key}"), message)
                        }
                        other => config_error("solver", other.to_string()),
                    })?;
            }
        }
        Ok(())
    }

    pub fn dims_at(&self, n: usize) -> ProblemDims {
        ProblemDims {
            m1: self.dims.m1,
            m2: self.dims.m2,
            r: self.dims.r,
            n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub n: usize,
    pub dist2: f64,
    pub t_oracle: Option<f64>,
    pub t_plugin: Option<f64>,
    pub covered: Option<bool>,
    pub sigma2_hat: f64,
    pub solver_iters: usize,
    pub clamp_fired: bool,
    /// False when the solver hit its iteration cap or failed outright; such
    /// records are left out of the KS and coverage aggregates.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub reps: usize,
    /// Records left out of the aggregates because the solver did not converge.
    pub excluded: usize,
    pub clamp_count: usize,
    pub mean_dist2: f64,
    pub mean_sigma2_hat: f64,
    /// `σ²‖Λ⁻¹‖_F²·2m⋆/n`.
    pub theory_first_order: f64,
    /// `mean(σ̂²)·‖Λ⁻¹‖_F²·2m⋆/n`.
    pub theory_empirical: f64,
    /// `mean_dist2 / theory_empirical`.
    pub ratio_empirical: f64,
    pub ks_oracle: Option<f64>,
    pub ks_plugin: Option<f64>,
    pub skew_oracle: Option<f64>,
    pub skew_plugin: Option<f64>,
    pub coverage_rate: Option<f64>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub mode: Mode,
    pub master_seed: u64,
    pub m_star: usize,
    pub inv_frob2: f64,
    pub inv2_frob: f64,
    pub rows: Vec<SummaryRow>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ReplicationRecord>,
    pub summary: SummaryReport,
}

/// The ground-truth model of an experiment at sample size `n`.
pub fn experiment_model(config: &ExperimentConfig, n: usize) -> Result<LowRankModel> {
    let mut rng = stream_rng(config.master_seed, MODEL_STREAM);
    make_model(
        config.dims_at(n),
        &config.lambda_spec,
        config.sigma,
        &mut rng,
    )
}

/// Runs every replication at every grid size on `workers` threads.
///
/// The model is drawn once from the reserved model stream; replication
/// `rep` at size `n` draws its data from its own stream, so records do not
/// depend on `workers` or on scheduling.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
    let base = experiment_model(config, config.n_grid[0])?;
    let m_star = base.dims.m_star();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let start = Instant::now();
        let model = LowRankModel {
            dims: base.dims.with_n(n),
            ..base.clone()
        };
        let mut batch: Vec<ReplicationRecord> = pool.install(|| {
            (0..config.reps)
                .into_par_iter()
                .map(|rep| replicate(config, &model, rep))
                .collect::<Result<Vec<_>>>()
        })?;
        if config.mode != Mode::E1Oracle {
            standardize_oracle(&mut batch, &model);
        }
        rows.push(summarize(&batch, &model, start.elapsed().as_secs_f64()));
        records.extend(batch);
    }
    Ok(ExperimentOutput {
        records,
        summary: SummaryReport {
            mode: config.mode,
            master_seed: config.master_seed,
            m_star,
            inv_frob2: base.inv_frob2(),
            inv2_frob: base.inv2_frob(),
            rows,
        },
    })
}

fn replicate(
    config: &ExperimentConfig,
    model: &LowRankModel,
    rep: usize,
) -> Result<ReplicationRecord> {
    let dims = model.dims;
    let mut rng = stream_rng(config.master_seed, replication_stream(dims.n, rep));
    if config.mode == Mode::E1Oracle {
        let draw = e1_mixture_draw(dims.m_star(), &model.lambdas, model.sigma, dims.n, &mut rng);
        let dist2 = 2.0 * draw;
        let sigma2 = model.sigma * model.sigma;
        let t = (sigma2 > 0.0).then(|| {
            (dist2 - center(model.inv_frob2(), sigma2, dims.m_star(), dims.n))
                / scale(model.inv2_frob().powi(2), sigma2, dims.m_star(), dims.n)
        });
        return Ok(ReplicationRecord {
            rep,
            n: dims.n,
            dist2,
            t_oracle: t,
            t_plugin: None,
            covered: None,
            sigma2_hat: sigma2,
            solver_iters: 0,
            clamp_fired: false,
            converged: true,
        });
    }
    let data = sample_dataset(model, &mut rng);
    let solver_config = config.solver.resolve(&dims, Some(config.sigma))?;
    let failed = |iters: usize| ReplicationRecord {
        rep,
        n: dims.n,
        dist2: f64::NAN,
        t_oracle: None,
        t_plugin: None,
        covered: None,
        sigma2_hat: f64::NAN,
        solver_iters: iters,
        clamp_fired: false,
        converged: false,
    };
    let fit = match solve_nuclear(&data.first_half(), &solver_config) {
        Ok(fit) => fit,
        Err(Error::CgBreakdown { outer, .. }) => return Ok(failed(outer)),
        Err(e) => return Err(e),
    };
    let iterations = fit.iterations;
    let converged = fit.converged;
    let inf = match infer_from_fit(&data, fit, dims.r, config.alpha) {
        Ok(inf) => inf,
        Err(Error::Domain(_)) => return Ok(failed(iterations)),
        Err(e) => return Err(e),
    };
    let dist2 = projection_distance2(&model.u, &model.v, &inf.estimate.u_hat, &inf.estimate.v_hat)?;
    Ok(ReplicationRecord {
        rep,
        n: dims.n,
        dist2,
        t_oracle: None,
        t_plugin: inf.summary.t_statistic(dist2).ok(),
        covered: Some(inf.summary.contains_distance(dist2)),
        sigma2_hat: inf.summary.sigma2_hat,
        solver_iters: iterations,
        clamp_fired: inf.summary.clamp_fired,
        converged,
    })
}

/// Second pass: centers `dist²` at its Monte Carlo mean over the converged
/// records and scales by `√8·σ̂²·‖Λ⁻²‖_F·√m⋆/n`.
fn standardize_oracle(batch: &mut [ReplicationRecord], model: &LowRankModel) {
    let kept: Vec<f64> = batch
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.dist2)
        .collect();
    if kept.is_empty() {
        return;
    }
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    let dims = model.dims;
    let inv2 = model.inv2_frob().powi(2);
    for r in batch.iter_mut().filter(|r| r.converged) {
        let s = scale(inv2, r.sigma2_hat, dims.m_star(), dims.n);
        let t = (r.dist2 - mean) / s;
        r.t_oracle = t.is_finite().then_some(t);
    }
}

fn summarize(batch: &[ReplicationRecord], model: &LowRankModel, wall: f64) -> SummaryRow {
    let dims = model.dims;
    let kept: Vec<&ReplicationRecord> = batch.iter().filter(|r| r.converged).collect();
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| {
        kept.iter().map(|r| f(r)).sum::<f64>() / kept.len() as f64
    };
    let mean_dist2 = mean(&|r| r.dist2);
    let mean_sigma2_hat = mean(&|r| r.sigma2_hat);
    let theory_first_order = center(
        model.inv_frob2(),
        model.sigma * model.sigma,
        dims.m_star(),
        dims.n,
    );
    let theory_empirical = center(model.inv_frob2(), mean_sigma2_hat, dims.m_star(), dims.n);
    let collect = |f: &dyn Fn(&ReplicationRecord) -> Option<f64>| -> Vec<f64> {
        kept.iter().filter_map(|r| f(r)).collect()
    };
    let oracle = collect(&|r| r.t_oracle);
    let plugin = collect(&|r| r.t_plugin);
    let covered: Vec<bool> = kept.iter().filter_map(|r| r.covered).collect();
    let nonempty = |v: &[f64], f: fn(&[f64]) -> f64| (!v.is_empty()).then(|| f(v));
    SummaryRow {
        n: dims.n,
        reps: batch.len(),
        excluded: batch.len() - kept.len(),
        clamp_count: batch.iter().filter(|r| r.clamp_fired).count(),
        mean_dist2,
        mean_sigma2_hat,
        theory_first_order,
        theory_empirical,
        ratio_empirical: mean_dist2 / theory_empirical,
        ks_oracle: ks_statistic(&oracle).ok(),
        ks_plugin: ks_statistic(&plugin).ok(),
        // undefined for a constant sample
        skew_oracle: nonempty(&oracle, skewness).filter(|s| s.is_finite()),
        skew_plugin: nonempty(&plugin, skewness).filter(|s| s.is_finite()),
        coverage_rate: (!covered.is_empty())
            .then(|| covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64),
        wall_time_secs: wall,
    }
}
