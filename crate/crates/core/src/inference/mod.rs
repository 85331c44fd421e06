//! De-biasing, subspace extraction, plug-in estimators and confidence
//! regions for the joint singular subspace.

mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{normal_quantile, projection_distance2, svd, Matrix};
use crate::model::{Dataset, ProblemDims, SampleView};
use crate::solver::{solve_nuclear, SolverConfig, SolverResult};

pub use report::{
    read_estimate, write_estimate, EstimateDocument, EstimatePaths, SolverDiagnostics,
};

/// Default multiplier `c` in the rank threshold `2c·σ̂·√(m̄/n)`.
pub const DEFAULT_RANK_C: f64 = 2.0;

/// Relative floor applied to the shrunken squared singular values.
pub const SHRINK_FLOOR: f64 = 1e-4;

/// Top-`r` singular structure of the de-biased estimate.
#[derive(Clone, Debug)]
pub struct SubspaceEstimate {
    pub m_hat: Matrix,
    pub u_hat: Matrix,
    pub v_hat: Matrix,
    pub lambda_hat: Vec<f64>,
    pub dims: ProblemDims,
}

/// Shrunken squared singular values and which of them hit the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shrinkage {
    pub lambda_tilde2: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl Shrinkage {
    pub fn clamp_fired(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }
}

/// Plug-in quantities and the resulting band on `dist²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub sigma2_hat: f64,
    pub lambda_tilde2: Vec<f64>,
    pub clamped: Vec<bool>,
    pub clamp_fired: bool,
    pub b_n: f64,
    pub v_n: f64,
    pub m_star: usize,
    pub n: usize,
    pub alpha: f64,
    pub center: f64,
    pub half_width: f64,
    /// `σ̂ / λ̃_r`.
    pub beta_diag: Option<f64>,
}

/// `M̂^nuc + (1/n)Σ(y_i − ⟨X_i, M̂^nuc⟩)X_i` over the second half.
pub fn debias(m_nuc: &Matrix, half2: &SampleView<'_>) -> Result<Matrix> {
    half2.check_shape(m_nuc)?;
    if half2.is_empty() {
        return Err(Error::arg("de-biasing needs a nonempty sample"));
    }
    let mut resid = half2.residuals(m_nuc);
    let n = half2.len() as f64;
    resid.iter_mut().for_each(|r| *r /= n);
    let mut out = half2.adjoint(&resid);
    out.axpy(1.0, m_nuc);
    Ok(out)
}

/// Top-`r` singular triplets of `m_hat`; `n` is recorded in the dims.
pub fn extract_subspace(m_hat: &Matrix, r: usize, n: usize) -> Result<SubspaceEstimate> {
    let (m1, m2) = m_hat.shape();
    let dims = ProblemDims::new(m1, m2, r, n)?;
    let f = svd(m_hat, Some(r))?;
    Ok(SubspaceEstimate {
        m_hat: m_hat.clone(),
        u_hat: f.u,
        v_hat: f.v,
        lambda_hat: f.s,
        dims,
    })
}

/// `(1/n)Σ(y_i − ⟨X_i, M̂^nuc⟩)²` over the second half.
pub fn sigma_hat2(m_nuc: &Matrix, half2: &SampleView<'_>) -> Result<f64> {
    half2.check_shape(m_nuc)?;
    if half2.is_empty() {
        return Err(Error::arg("noise estimate needs a nonempty sample"));
    }
    let resid = half2.residuals(m_nuc);
    Ok(resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64)
}

/// `λ̃_k² = max(λ̂_k² − (2m⋆/n)σ̂², 1e-4·λ̂_k²)`.
pub fn shrink_singular(
    lambda_hat: &[f64],
    sigma2_hat: f64,
    m_star: usize,
    n: usize,
) -> Result<Shrinkage> {
    if lambda_hat.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::arg(
            "singular values must be finite and non-negative",
        ));
    }
    if lambda_hat.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("singular values must be non-increasing"));
    }
    if !(sigma2_hat >= 0.0) || n == 0 {
        return Err(Error::arg("need sigma2_hat >= 0 and n >= 1"));
    }
    let shift = 2.0 * m_star as f64 / n as f64 * sigma2_hat;
    let mut lambda_tilde2 = Vec::with_capacity(lambda_hat.len());
    let mut clamped = Vec::with_capacity(lambda_hat.len());
    for &l in lambda_hat {
        let l2 = l * l;
        let floor = SHRINK_FLOOR * l2;
        let v = l2 - shift;
        clamped.push(v < floor);
        lambda_tilde2.push(v.max(floor));
    }
    Ok(Shrinkage {
        lambda_tilde2,
        clamped,
    })
}

fn check_positive(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::arg("empty spectrum"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!(
            "squared singular values must be > 0, got {v}"
        )));
    }
    Ok(())
}

/// `B̂_n = Σ λ̃_k⁻²`.
pub fn b_n(lambda_tilde2: &[f64]) -> Result<f64> {
    check_positive(lambda_tilde2)?;
    Ok(lambda_tilde2.iter().map(|l| 1.0 / l).sum())
}

/// `V̂_n = Σ λ̃_k⁻⁴`.
pub fn v_n(lambda_tilde2: &[f64]) -> Result<f64> {
    check_positive(lambda_tilde2)?;
    Ok(lambda_tilde2.iter().map(|l| 1.0 / (l * l)).sum())
}

/// `2(m⋆/n)·B·σ²`.
pub fn center(b_n: f64, sigma2: f64, m_star: usize, n: usize) -> f64 {
    2.0 * m_star as f64 / n as f64 * b_n * sigma2
}

/// `√8·V^{1/2}·σ²·√m⋆/n`.
pub fn scale(v_n: f64, sigma2: f64, m_star: usize, n: usize) -> f64 {
    8f64.sqrt() * v_n.sqrt() * sigma2 * (m_star as f64).sqrt() / n as f64
}

/// `(dist² − 2(m⋆/n)Bσ²) / (√8·V^{1/2}·σ²·√m⋆/n)`.
pub fn t_statistic(
    dist2: f64,
    b_n: f64,
    v_n: f64,
    sigma2: f64,
    m_star: usize,
    n: usize,
) -> Result<f64> {
    if !(v_n > 0.0 && sigma2 > 0.0 && m_star > 0 && n > 0) {
        return Err(Error::Domain(format!(
            "statistic needs v_n > 0, sigma2 > 0, m_star > 0, n > 0 (got {v_n}, {sigma2}, {m_star}, {n})"
        )));
    }
    let s = scale(v_n, sigma2, m_star, n);
    let t = (dist2 - center(b_n, sigma2, m_star, n)) / s;
    if !t.is_finite() {
        return Err(Error::Domain("statistic is not finite".into()));
    }
    Ok(t)
}

/// The band `|dist² − center| ≤ half_width` at miscoverage `alpha`.
///
/// With `σ̂² = 0` the band degenerates to the single point `dist² = 0`.
pub fn confidence_region(
    shrink: &Shrinkage,
    sigma2_hat: f64,
    m_star: usize,
    n: usize,
    alpha: f64,
) -> Result<InferenceSummary> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(sigma2_hat >= 0.0 && sigma2_hat.is_finite()) || n == 0 {
        return Err(Error::arg("need finite sigma2_hat >= 0 and n >= 1"));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let b = b_n(&shrink.lambda_tilde2)?;
    let v = v_n(&shrink.lambda_tilde2)?;
    let last = *shrink.lambda_tilde2.last().expect("nonempty after b_n");
    Ok(InferenceSummary {
        sigma2_hat,
        lambda_tilde2: shrink.lambda_tilde2.clone(),
        clamped: shrink.clamped.clone(),
        clamp_fired: shrink.clamp_fired(),
        b_n: b,
        v_n: v,
        m_star,
        n,
        alpha,
        center: center(b, sigma2_hat, m_star, n),
        half_width: z * scale(v, sigma2_hat, m_star, n),
        beta_diag: Some((sigma2_hat / last).sqrt()),
    })
}

impl InferenceSummary {
    /// Plug-in statistic for an observed `dist²`.
    pub fn t_statistic(&self, dist2: f64) -> Result<f64> {
        t_statistic(
            dist2,
            self.b_n,
            self.v_n,
            self.sigma2_hat,
            self.m_star,
            self.n,
        )
    }

    pub fn contains_distance(&self, dist2: f64) -> bool {
        (dist2 - self.center).abs() <= self.half_width
    }
}

/// `dist²` between a candidate pair and the estimate, and whether it falls in
/// the band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub dist2: f64,
    pub contained: bool,
}

pub fn region_check(
    est: &SubspaceEstimate,
    candidate_u: &Matrix,
    candidate_v: &Matrix,
    summary: &InferenceSummary,
) -> Result<RegionCheck> {
    let dist2 = projection_distance2(candidate_u, candidate_v, &est.u_hat, &est.v_hat)?;
    Ok(RegionCheck {
        dist2,
        contained: summary.contains_distance(dist2),
    })
}

pub fn region_contains(
    est: &SubspaceEstimate,
    candidate_u: &Matrix,
    candidate_v: &Matrix,
    summary: &InferenceSummary,
) -> Result<bool> {
    Ok(region_check(est, candidate_u, candidate_v, summary)?.contained)
}

/// Threshold `2c·σ̂·√(max(m1, m2)/n)` of the rank rule.
pub fn rank_threshold(sigma_hat: f64, m1: usize, m2: usize, n: usize, c: f64) -> Result<f64> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::Domain(format!(
            "rank rule needs sigma_hat > 0, got {sigma_hat}"
        )));
    }
    if !(c > 0.0) || n == 0 {
        return Err(Error::Domain("rank rule needs c > 0 and n >= 1".into()));
    }
    Ok(2.0 * c * sigma_hat * (m1.max(m2) as f64 / n as f64).sqrt())
}

/// Number of singular values at or above [`rank_threshold`].
pub fn estimate_rank(
    singular_values: &[f64],
    sigma_hat: f64,
    m1: usize,
    m2: usize,
    n: usize,
    c: f64,
) -> Result<usize> {
    let t = rank_threshold(sigma_hat, m1, m2, n, c)?;
    Ok(singular_values.iter().filter(|&&s| s >= t).count())
}

/// Average of the two de-biased estimates obtained by fitting on each half
/// and de-biasing with the other.
pub fn double_split_estimate(data: &Dataset, config: &SolverConfig) -> Result<Matrix> {
    let first = solve_nuclear(&data.first_half(), config)?;
    let forward = debias(&first.m_nuc, &data.second_half())?;
    let second = solve_nuclear(&data.second_half(), config)?;
    let backward = debias(&second.m_nuc, &data.first_half())?;
    let mut out = forward.add(&backward);
    out.scale_mut(0.5);
    Ok(out)
}

/// Everything produced by one pass of the fit → de-bias → extract →
/// plug-in pipeline.
#[derive(Clone, Debug)]
pub struct Inference {
    pub solver: SolverResult,
    pub estimate: SubspaceEstimate,
    pub summary: InferenceSummary,
}

/// Fits on the first half, de-biases and estimates `σ²` on the second, and
/// builds the confidence region for rank `r`.
pub fn run_inference(
    data: &Dataset,
    config: &SolverConfig,
    r: usize,
    alpha: f64,
) -> Result<Inference> {
    let solver = solve_nuclear(&data.first_half(), config)?;
    infer_from_fit(data, solver, r, alpha)
}

/// The post-fit part of [`run_inference`] for an already computed `M̂^nuc`.
pub fn infer_from_fit(
    data: &Dataset,
    solver: SolverResult,
    r: usize,
    alpha: f64,
) -> Result<Inference> {
    let half2 = data.second_half();
    let m_hat = debias(&solver.m_nuc, &half2)?;
    let estimate = extract_subspace(&m_hat, r, data.split())?;
    let s2 = sigma_hat2(&solver.m_nuc, &half2)?;
    let dims = estimate.dims;
    let shrink = shrink_singular(&estimate.lambda_hat, s2, dims.m_star(), dims.n)?;
    let summary = confidence_region(&shrink, s2, dims.m_star(), dims.n, alpha)?;
    Ok(Inference {
        solver,
        estimate,
        summary,
    })
}
