//! The `subspace-infer` command line: data generation, fitting, inference,
//! region checks, rank estimation and Monte Carlo sweeps.

mod format;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{run_experiment, write_artifacts, ExperimentConfig, Mode};
use crate::inference::{
    debias, estimate_rank, infer_from_fit, rank_threshold, read_estimate, region_check, sigma_hat2,
    write_estimate, EstimateDocument, SolverDiagnostics, DEFAULT_RANK_C,
};
use crate::linalg::{singular_values, Matrix};
use crate::model::io::{
    read_dataset, read_dataset_csv, read_matrix, write_dataset, write_dataset_csv, write_matrix,
};
use crate::model::{
    make_model, replication_stream, sample_dataset, stream_rng, Dataset, LambdaSpec, ProblemDims,
    MODEL_STREAM,
};
use crate::solver::{solve_nuclear, AUpdate, SolverConfig, SolverOptions, SolverResult};

pub use format::{sig9, sig9_list};

/// Exit status for a fit that stopped at the iteration limit.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Exit status for any error.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "subspace-infer",
    version,
    about = "Inference on low-rank subspaces in trace regression"
)]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for `sim` (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a model and a dataset of 2n samples.
    GenData(GenDataArgs),
    /// Fit the nuclear-norm estimator on the first half of a dataset.
    Fit(FitArgs),
    /// Estimate the subspaces and build the confidence region.
    Infer(InferArgs),
    /// Test whether a candidate (U, V) lies in a confidence region.
    Check(CheckArgs),
    /// Run a Monte Carlo experiment from a config file.
    Sim(SimArgs),
    /// Estimate the rank by thresholding de-biased singular values.
    EstimateRank(EstimateRankArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Trds,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub m1: usize,
    #[arg(long)]
    pub m2: usize,
    #[arg(long)]
    pub r: usize,
    /// Samples per half; the file holds 2n.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub sigma: f64,
    /// Comma-separated singular values (default 2^r, ..., 2).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Also write the model factors next to the dataset.
    #[arg(long)]
    pub with_truth: bool,
    #[arg(long, value_enum, default_value_t = DataFormat::Trds)]
    pub format: DataFormat,
}

#[derive(Debug, Default, Args)]
pub struct SolverFlags {
    /// Noise level used to derive the penalty.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fixed penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_c: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol_primal: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    #[arg(long, value_enum)]
    pub a_update: Option<AUpdateArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AUpdateArg {
    Auto,
    Cg,
    Kernel,
}

impl From<AUpdateArg> for AUpdate {
    fn from(a: AUpdateArg) -> Self {
        match a {
            AUpdateArg::Auto => AUpdate::Auto,
            AUpdateArg::Cg => AUpdate::Cg,
            AUpdateArg::Kernel => AUpdate::Kernel,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset (TRDS, or CSV when the name ends in `.csv`).
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Previously fitted `M̂^nuc` (TRMX); skips the solver.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long, conflicts_with = "estimate_rank")]
    pub rank: Option<usize>,
    /// Choose the rank with the thresholding rule.
    #[arg(long)]
    pub estimate_rank: bool,
    #[arg(long)]
    pub rank_c: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Directory written by `infer`.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Candidate left factor (TRMX).
    #[arg(long)]
    pub u: PathBuf,
    /// Candidate right factor (TRMX).
    #[arg(long)]
    pub v: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Skip the SVG histograms.
    #[arg(long)]
    pub no_histograms: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Loss,
    NormalityOracle,
    NormalityPlugin,
    Coverage,
    E1Oracle,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Loss => Mode::Loss,
            ModeArg::NormalityOracle => Mode::NormalityOracle,
            ModeArg::NormalityPlugin => Mode::NormalityPlugin,
            ModeArg::Coverage => Mode::Coverage,
            ModeArg::E1Oracle => Mode::E1Oracle,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateRankArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Threshold multiplier.
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

/// Settings shared by `fit`, `infer` and `estimate-rank` when read from a
/// config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub rank: Option<usize>,
    pub alpha: Option<f64>,
    pub rank_c: Option<f64>,
    pub seed: Option<u64>,
    pub solver: SolverOptions,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(
                if path == "." { "<root>" } else { &path },
                e.inner().to_string(),
            )
        })
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_json(&read_text(p)?),
            None => Ok(Self::default()),
        }
    }

    /// Applies command-line flags on top of the file values.
    fn merge(&mut self, flags: &SolverFlags) {
        let s = &mut self.solver;
        if flags.sigma.is_some() {
            self.sigma = flags.sigma;
        }
        if flags.lambda.is_some() {
            self.lambda = flags.lambda;
        }
        if let Some(v) = flags.lambda_c {
            s.lambda_c = v;
        }
        if let Some(v) = flags.rho {
            s.rho = v;
        }
        if let Some(v) = flags.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = flags.tol_primal {
            s.tol_primal = v;
        }
        if let Some(v) = flags.tol_dual {
            s.tol_dual = v;
        }
        if let Some(v) = flags.cg_tol {
            s.cg_tol = v;
        }
        if let Some(v) = flags.cg_max_iter {
            s.cg_max_iter = v;
        }
        if let Some(v) = flags.a_update {
            s.a_update = v.into();
        }
    }

    /// Solver settings for a fit on `n` samples, requiring exactly one of
    /// `sigma` and `lambda`.
    fn solver_config(&self, m1: usize, m2: usize, n: usize) -> Result<(SolverConfig, f64)> {
        let lambda = self.lambda.or(self.solver.lambda_reg);
        match (self.sigma, lambda) {
            (Some(_), Some(_)) => Err(config_error(
                "sigma",
                "give exactly one of --sigma or --lambda, not both",
            )),
            (None, None) => Err(config_error("sigma", "give one of --sigma or --lambda")),
            (sigma, lambda) => {
                let options = SolverOptions {
                    lambda_reg: lambda,
                    ..self.solver.clone()
                };
                let dims = ProblemDims { m1, m2, r: 1, n };
                let config = options.resolve(&dims, sigma)?;
                let lambda = config.lambda_reg;
                Ok((config, lambda))
            }
        }
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_dataset_csv(path)
    } else {
        read_dataset(path)
    }
}

fn require_out(out: Option<&PathBuf>) -> Result<&Path> {
    out.map(PathBuf::as_path)
        .ok_or_else(|| Error::arg("--out is required for this command"))
}

/// Sidecar path `<out><suffix>`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Ground truth written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthDocument {
    pub dims: ProblemDims,
    pub lambdas: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

/// A solver result with its diagnostics; a fit read from disk has none.
struct Fit {
    result: SolverResult,
    diagnostics: Option<SolverDiagnostics>,
}

fn fit_or_load(data: &Dataset, fit_path: Option<&Path>, config: &RunConfig) -> Result<Fit> {
    if let Some(path) = fit_path {
        let m = read_matrix(path)?;
        if m.shape() != (data.m1(), data.m2()) {
            return Err(Error::dim(format!(
                "fit is {}x{} but the data are {}x{}",
                m.rows(),
                m.cols(),
                data.m1(),
                data.m2()
            )));
        }
        return Ok(Fit {
            result: SolverResult {
                m_nuc: m,
                iterations: 0,
                objective: f64::NAN,
                primal_residual: 0.0,
                dual_residual: 0.0,
                converged: true,
                cg_iterations: 0,
            },
            diagnostics: None,
        });
    }
    let (solver, lambda) = config.solver_config(data.m1(), data.m2(), data.split())?;
    let result = solve_nuclear(&data.first_half(), &solver)?;
    let diagnostics = Some(SolverDiagnostics::new(&result, lambda));
    Ok(Fit {
        result,
        diagnostics,
    })
}

fn print_diagnostics(out: &mut dyn Write, d: &SolverDiagnostics) -> std::io::Result<()> {
    writeln!(out, "lambda_reg={}", sig9(d.lambda_reg))?;
    writeln!(out, "iterations={}", d.iterations)?;
    writeln!(out, "converged={}", d.converged)?;
    writeln!(out, "objective={}", sig9(d.objective))?;
    writeln!(out, "primal_residual={}", sig9(d.primal_residual))?;
    writeln!(out, "dual_residual={}", sig9(d.dual_residual))
}

fn not_converged(err: &mut dyn Write, d: &SolverDiagnostics) -> i32 {
    let _ = writeln!(
        err,
        "error: solver did not converge in {} iterations (primal {}, dual {})",
        d.iterations,
        sig9(d.primal_residual),
        sig9(d.dual_residual)
    );
    EXIT_NOT_CONVERGED
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Entry point for the binary.
pub fn main_exit_code() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::GenData(a) => gen_data(cli, a, out),
        Command::Fit(a) => fit(cli, a, out, err),
        Command::Infer(a) => infer(cli, a, out, err),
        Command::Check(a) => check(a, out),
        Command::Sim(a) => sim(cli, a, out),
        Command::EstimateRank(a) => rank(cli, a, out, err),
    }
}

fn gen_data(cli: &Cli, a: &GenDataArgs, out: &mut dyn Write) -> Result<i32> {
    let path = require_out(cli.out.as_ref())?;
    let seed = cli.seed.unwrap_or(0);
    let dims = ProblemDims::new(a.m1, a.m2, a.r, a.n)?;
    let spec = match &a.lambdas {
        Some(l) => LambdaSpec::Explicit(l.clone()),
        None => LambdaSpec::Geometric,
    };
    let model = make_model(dims, &spec, a.sigma, &mut stream_rng(seed, MODEL_STREAM))?;
    // Same stream as replication 0 of a simulation at this n.
    let data = sample_dataset(&model, &mut stream_rng(seed, replication_stream(a.n, 0)));
    match a.format {
        DataFormat::Trds => write_dataset(&data, path)?,
        DataFormat::Csv => write_dataset_csv(&data, path)?,
    }
    writeln!(out, "records={}", data.len()).map_err(io_out)?;
    if a.with_truth {
        let doc = TruthDocument {
            dims,
            lambdas: model.lambdas.clone(),
            sigma: a.sigma,
            seed,
        };
        let json = sidecar(path, ".truth.json");
        let text = serde_json::to_string_pretty(&doc).expect("truth serializes") + "\n";
        fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        write_matrix(&model.u, &sidecar(path, ".truth.u.trmx"))?;
        write_matrix(&model.v, &sidecar(path, ".truth.v.trmx"))?;
        writeln!(out, "truth={}", json.display()).map_err(io_out)?;
    }
    Ok(0)
}

fn fit(cli: &Cli, a: &FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let path = require_out(cli.out.as_ref())?;
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.merge(&a.solver);
    let data = load_dataset(&a.data)?;
    let fit = fit_or_load(&data, None, &config)?;
    write_matrix(&fit.result.m_nuc, path)?;
    let d = fit.diagnostics.expect("computed fit has diagnostics");
    print_diagnostics(out, &d).map_err(io_out)?;
    Ok(if d.converged {
        0
    } else {
        not_converged(err, &d)
    })
}

fn infer(cli: &Cli, a: &InferArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let dir = require_out(cli.out.as_ref())?;
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.merge(&a.solver);
    if a.rank.is_some() {
        config.rank = a.rank;
    }
    if a.alpha.is_some() {
        config.alpha = a.alpha;
    }
    if a.rank_c.is_some() {
        config.rank_c = a.rank_c;
    }
    let alpha = config.alpha.unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(config_error(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    let data = load_dataset(&a.data)?;
    let fit = fit_or_load(&data, a.fit.as_deref(), &config)?;
    let (r, estimated) = if a.estimate_rank {
        (rank_of(&data, &fit.result.m_nuc, config.rank_c)?.0, true)
    } else if let Some(r) = config.rank {
        (r, false)
    } else {
        return Err(Error::arg("give --rank or --estimate-rank"));
    };
    if r == 0 {
        return Err(Error::Domain(
            "estimated rank is 0: no singular value clears the threshold".into(),
        ));
    }
    let inf = infer_from_fit(&data, fit.result, r, alpha)?;
    let doc = EstimateDocument::new(&inf, fit.diagnostics.clone(), estimated);
    write_estimate(dir, &doc, &inf.estimate)?;
    let s = &doc.summary;
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "rank={r}")?;
        writeln!(out, "rank_estimated={estimated}")?;
        writeln!(out, "lambda_hat={}", sig9_list(&doc.lambda_hat))?;
        writeln!(out, "sigma2_hat={}", sig9(s.sigma2_hat))?;
        writeln!(out, "lambda_tilde2={}", sig9_list(&s.lambda_tilde2))?;
        writeln!(out, "clamp_fired={}", s.clamp_fired)?;
        writeln!(out, "b_n={}", sig9(s.b_n))?;
        writeln!(out, "v_n={}", sig9(s.v_n))?;
        writeln!(out, "center={}", sig9(s.center))?;
        writeln!(out, "half_width={}", sig9(s.half_width))?;
        if let Some(b) = s.beta_diag {
            writeln!(out, "beta_diag={}", sig9(b))?;
        }
        if let Some(d) = &doc.solver {
            print_diagnostics(out, d)?;
        }
        writeln!(out, "estimate={}", dir.display())
    };
    w().map_err(io_out)?;
    Ok(match &doc.solver {
        Some(d) if !d.converged => not_converged(err, d),
        _ => 0,
    })
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let (doc, est) = read_estimate(&a.estimate)?;
    let u = read_matrix(&a.u)?;
    let v = read_matrix(&a.v)?;
    let c = region_check(&est, &u, &v, &doc.summary)?;
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "contained={}", c.contained)?;
        writeln!(out, "dist2={}", sig9(c.dist2))?;
        writeln!(out, "center={}", sig9(doc.summary.center))?;
        writeln!(out, "half_width={}", sig9(doc.summary.half_width))
    };
    w().map_err(io_out)?;
    Ok(if c.contained { 0 } else { 1 })
}

fn sim(cli: &Cli, a: &SimArgs, out: &mut dyn Write) -> Result<i32> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::arg("sim needs --config"))?;
    let mut config = ExperimentConfig::from_json(&read_text(path)?)?;
    if let Some(s) = cli.seed {
        config.master_seed = s;
    }
    if let Some(r) = a.reps {
        config.reps = r;
    }
    if let Some(m) = a.mode {
        config.mode = m.into();
    }
    if let Some(g) = &a.n_grid {
        config.n_grid = g.clone();
    }
    if let Some(al) = a.alpha {
        config.alpha = al;
    }
    config.validate()?;
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let output = run_experiment(&config, threads)?;
    if let Some(dir) = &cli.out {
        write_artifacts(dir, &output, !a.no_histograms)?;
    }
    let rep = &output.summary;
    let mut w = || -> std::io::Result<()> {
        writeln!(
            out,
            "mode={} master_seed={} m_star={} inv_frob2={} inv2_frob={}",
            serde_json::to_value(rep.mode)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            rep.master_seed,
            rep.m_star,
            sig9(rep.inv_frob2),
            sig9(rep.inv2_frob)
        )?;
        for row in &rep.rows {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), sig9);
            writeln!(
                out,
                "n={} reps={} excluded={} clamp={} mean_dist2={} mean_sigma2_hat={} \
                 theory_first_order={} theory_empirical={} ratio={} ks_oracle={} \
                 ks_plugin={} skew_oracle={} skew_plugin={} coverage={} wall_time_secs={}",
                row.n,
                row.reps,
                row.excluded,
                row.clamp_count,
                sig9(row.mean_dist2),
                sig9(row.mean_sigma2_hat),
                sig9(row.theory_first_order),
                sig9(row.theory_empirical),
                sig9(row.ratio_empirical),
                opt(row.ks_oracle),
                opt(row.ks_plugin),
                opt(row.skew_oracle),
                opt(row.skew_plugin),
                opt(row.coverage_rate),
                sig9(row.wall_time_secs)
            )?;
        }
        Ok(())
    };
    w().map_err(io_out)?;
    Ok(0)
}

/// Rank from the de-biased fit: returns `(r̂, threshold, σ̂, singular values)`.
fn rank_of(data: &Dataset, m_nuc: &Matrix, c: Option<f64>) -> Result<(usize, f64, f64, Vec<f64>)> {
    let half2 = data.second_half();
    let m_hat = debias(m_nuc, &half2)?;
    let sigma_hat = sigma_hat2(m_nuc, &half2)?.sqrt();
    let c = c.unwrap_or(DEFAULT_RANK_C);
    let n = data.split();
    let sv = singular_values(&m_hat)?;
    let t = rank_threshold(sigma_hat, data.m1(), data.m2(), n, c)?;
    let r = estimate_rank(&sv, sigma_hat, data.m1(), data.m2(), n, c)?;
    Ok((r, t, sigma_hat, sv))
}

fn rank(cli: &Cli, a: &EstimateRankArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.merge(&a.solver);
    if a.c.is_some() {
        config.rank_c = a.c;
    }
    let data = load_dataset(&a.data)?;
    let fit = fit_or_load(&data, a.fit.as_deref(), &config)?;
    let (r, t, sigma_hat, sv) = rank_of(&data, &fit.result.m_nuc, config.rank_c)?;
    let shown = &sv[..sv.len().min(r + 3)];
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "rank={r}")?;
        writeln!(out, "threshold={}", sig9(t))?;
        writeln!(out, "sigma_hat={}", sig9(sigma_hat))?;
        writeln!(out, "singular_values={}", sig9_list(shown))
    };
    w().map_err(io_out)?;
    if let Some(path) = &cli.out {
        fs::write(path, format!("{r}\n")).map_err(|e| Error::io(path, e))?;
    }
    Ok(match &fit.diagnostics {
        Some(d) if !d.converged => not_converged(err, d),
        _ => 0,
    })
}
