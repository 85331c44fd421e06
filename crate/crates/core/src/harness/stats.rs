use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{linear_term_norm2, normal_cdf, Matrix, SvdFactors};
use crate::model::{random_orthonormal, ProblemDims, StreamRng};

/// Kolmogorov–Smirnov distance `sup_x |F̂(x) − Φ(x)|`, evaluated on both
/// sides of every order statistic.
pub fn ks_statistic(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::arg("KS statistic of an empty sample"));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("KS statistic of a sample containing NaN"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Mean and sample standard deviation (divisor `N − 1`; zero for one point).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Moment skewness `m3 / m2^{3/2}`.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

fn check_lambdas(dims: &ProblemDims, lambdas: &[f64]) -> Result<()> {
    dims.validate()?;
    if lambdas.len() != dims.r || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::arg("need r finite positive singular values"));
    }
    Ok(())
}

/// One draw of `(Σξ²/n²)·Σ_k z_k²/λ_k²` with `Σξ² ~ σ²χ²(n)` and
/// `z_k² ~ χ²(m⋆)` independent.
pub fn e1_mixture_draw(
    m_star: usize,
    lambdas: &[f64],
    sigma: f64,
    n: usize,
    rng: &mut StreamRng,
) -> f64 {
    let noise = ChiSquared::new(n as f64).expect("n >= 1");
    let coord = ChiSquared::new(m_star as f64).expect("m_star >= 1");
    let s = sigma * sigma * noise.sample(rng);
    let mix: f64 = lambdas.iter().map(|l| coord.sample(rng) / (l * l)).sum();
    s / (n as f64 * n as f64) * mix
}

/// Moments of the chi-square mixture that the squared linear term follows,
/// simulated directly without any matrices.
pub fn e1_oracle(
    dims: &ProblemDims,
    lambdas: &[f64],
    sigma: f64,
    n: usize,
    reps: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64)> {
    check_lambdas(dims, lambdas)?;
    if reps == 0 || n == 0 {
        return Err(Error::arg("need reps >= 1 and n >= 1"));
    }
    let draws: Vec<f64> = (0..reps)
        .map(|_| e1_mixture_draw(dims.m_star(), lambdas, sigma, n, rng))
        .collect();
    Ok(mean_std(&draws))
}

/// Moments of `‖P⊥E₁C‖_F²` computed from explicit designs: each replicate
/// forms `Z = (1/n)Σ ξ_i X_i` and evaluates half the squared linear term.
pub fn e1_matrix_check(
    dims: &ProblemDims,
    lambdas: &[f64],
    sigma: f64,
    n: usize,
    reps: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64)> {
    check_lambdas(dims, lambdas)?;
    if reps == 0 || n == 0 {
        return Err(Error::arg("need reps >= 1 and n >= 1"));
    }
    let model = SvdFactors {
        u: random_orthonormal(dims.m1, dims.r, rng)?,
        s: lambdas.to_vec(),
        v: random_orthonormal(dims.m2, dims.r, rng)?,
    };
    let d = dims.m1 * dims.m2;
    let mut x = vec![0.0; d];
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut z = vec![0.0; d];
        for _ in 0..n {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let xi: f64 = StandardNormal.sample(rng);
            crate::linalg::axpy(sigma * xi / n as f64, &x, &mut z);
        }
        let zm = Matrix::new(dims.m1, dims.m2, z)?;
        values.push(linear_term_norm2(&model, &zm)? / 2.0);
    }
    Ok(mean_std(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::normal_quantile;
    use crate::model::stream_rng;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.0]).unwrap(), 0.5);
        let n = 1000;
        let exact: Vec<f64> = (1..=n)
            .map(|i| normal_quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        assert!(ks_statistic(&exact).unwrap() <= 0.0005 + 1e-12);
        let far = ks_statistic(&[10.0; 5]).unwrap();
        assert!((far - 1.0).abs() < 1e-15);
        assert!(ks_statistic(&[]).is_err());
    }

    #[test]
    fn moments() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
        assert!(skewness(&[1.0, 2.0, 3.0]).abs() < 1e-15);
        assert!(skewness(&[0.0, 0.0, 0.0, 10.0]) > 0.0);
    }

    #[test]
    fn e1_zero_noise() {
        let dims = ProblemDims::new(6, 5, 2, 10).unwrap();
        let (m, s) = e1_oracle(&dims, &[2.0, 1.0], 0.0, 10, 50, &mut stream_rng(1, 0)).unwrap();
        assert_eq!((m, s), (0.0, 0.0));
        let (m, _) =
            e1_matrix_check(&dims, &[2.0, 1.0], 0.0, 10, 5, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(m, 0.0);
    }
}
