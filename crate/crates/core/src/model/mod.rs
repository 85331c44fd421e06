//! Ground-truth models, Gaussian-design sampling and dataset storage.

mod dataset;
pub mod io;
pub mod rng;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_columns, Matrix, SvdFactors};

pub use dataset::{sample_dataset, Dataset, SampleView};
pub use rng::{replication_stream, stream_rng, StreamRng, StreamState, MODEL_STREAM};

/// Problem sizes: `m1 x m2` matrix of rank `r`, `n` samples per half.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDims {
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
    pub n: usize,
}

impl ProblemDims {
    pub fn new(m1: usize, m2: usize, r: usize, n: usize) -> Result<Self> {
        let dims = Self { m1, m2, r, n };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::arg("matrix dimensions must be positive"));
        }
        if self.r == 0 || self.r >= self.m1.min(self.m2) {
            return Err(Error::arg(format!(
                "rank must satisfy 1 <= r < min(m1, m2) = {}, got {}",
                self.m1.min(self.m2),
                self.r
            )));
        }
        if self.n == 0 {
            return Err(Error::arg("per-half sample size n must be >= 1"));
        }
        Ok(())
    }

    /// `max(m1, m2)`.
    pub fn m_bar(&self) -> usize {
        self.m1.max(self.m2)
    }

    /// Effective dimension `m1 + m2 − 2r`.
    pub fn m_star(&self) -> usize {
        self.m1 + self.m2 - 2 * self.r
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }
}

/// How the model singular values are chosen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    /// `λ_k = 2^(r−k+1)`.
    #[default]
    Geometric,
    Explicit(Vec<f64>),
}

impl LambdaSpec {
    pub fn resolve(&self, r: usize) -> Result<Vec<f64>> {
        match self {
            LambdaSpec::Geometric => Ok((1..=r).map(|k| 2f64.powi((r - k + 1) as i32)).collect()),
            LambdaSpec::Explicit(values) => {
                if values.len() != r {
                    return Err(Error::arg(format!(
                        "{} singular values given for rank {r}",
                        values.len()
                    )));
                }
                check_spectrum(values)?;
                Ok(values.clone())
            }
        }
    }
}

fn check_spectrum(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::arg("singular values must be finite and positive"));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("singular values must be non-increasing"));
    }
    Ok(())
}

/// `M = UΛVᵀ` with noise level `σ`.
#[derive(Clone, Debug)]
pub struct LowRankModel {
    pub dims: ProblemDims,
    pub u: Matrix,
    pub v: Matrix,
    pub lambdas: Vec<f64>,
    pub sigma: f64,
}

impl LowRankModel {
    pub fn new(
        dims: ProblemDims,
        u: Matrix,
        v: Matrix,
        lambdas: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        dims.validate()?;
        if u.shape() != (dims.m1, dims.r) || v.shape() != (dims.m2, dims.r) {
            return Err(Error::dim("factor shapes do not match dims"));
        }
        if lambdas.len() != dims.r {
            return Err(Error::dim("number of singular values differs from rank"));
        }
        check_spectrum(&lambdas)?;
        for (name, q) in [("U", &u), ("V", &v)] {
            if q.gram_deviation() > 1e-10 {
                return Err(Error::arg(format!("{name} is not orthonormal")));
            }
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::arg("noise level must be finite and >= 0"));
        }
        Ok(Self {
            dims,
            u,
            v,
            lambdas,
            sigma,
        })
    }

    /// The matrix `UΛVᵀ`.
    pub fn matrix(&self) -> Matrix {
        self.u.scale_columns(&self.lambdas).matmul_t(&self.v)
    }

    pub fn factors(&self) -> SvdFactors {
        SvdFactors {
            u: self.u.clone(),
            s: self.lambdas.clone(),
            v: self.v.clone(),
        }
    }

    /// `‖Λ⁻¹‖_F²`.
    pub fn inv_frob2(&self) -> f64 {
        self.lambdas.iter().map(|l| l.powi(-2)).sum()
    }

    /// `‖Λ⁻²‖_F`.
    pub fn inv2_frob(&self) -> f64 {
        self.lambdas.iter().map(|l| l.powi(-4)).sum::<f64>().sqrt()
    }

    /// Signal-to-noise diagnostic `σ / λ_r`.
    pub fn beta(&self) -> f64 {
        self.sigma / self.lambdas[self.dims.r - 1]
    }
}

/// An `m x r` matrix with orthonormal columns: the Q factor of a standard
/// Gaussian draw, normalized so R has a positive diagonal.
pub fn random_orthonormal(m: usize, r: usize, rng: &mut StreamRng) -> Result<Matrix> {
    if r > m || r == 0 {
        return Err(Error::dim(format!(
            "cannot draw {r} orthonormal columns in R^{m}"
        )));
    }
    let g = Matrix::from_fn(m, r, |_, _| StandardNormal.sample(rng));
    orthonormalize_columns(&g)
}

pub fn make_model(
    dims: ProblemDims,
    spec: &LambdaSpec,
    sigma: f64,
    rng: &mut StreamRng,
) -> Result<LowRankModel> {
    dims.validate()?;
    let lambdas = spec.resolve(dims.r)?;
    let u = random_orthonormal(dims.m1, dims.r, rng)?;
    let v = random_orthonormal(dims.m2, dims.r, rng)?;
    LowRankModel::new(dims, u, v, lambdas, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_validation() {
        assert!(ProblemDims::new(50, 50, 4, 100).is_ok());
        assert!(ProblemDims::new(50, 50, 50, 100).is_err());
        assert!(ProblemDims::new(5, 3, 0, 1).is_err());
        assert!(ProblemDims::new(5, 3, 1, 0).is_err());
        let d = ProblemDims::new(100, 80, 4, 10).unwrap();
        assert_eq!(d.m_star(), 172);
        assert_eq!(d.m_bar(), 100);
    }

    #[test]
    fn geometric_spectrum() {
        assert_eq!(
            LambdaSpec::Geometric.resolve(4).unwrap(),
            vec![16.0, 8.0, 4.0, 2.0]
        );
        assert_eq!(LambdaSpec::Geometric.resolve(1).unwrap(), vec![2.0]);
    }

    #[test]
    fn explicit_spectrum_ordering() {
        assert!(LambdaSpec::Explicit(vec![5.0, 5.0, 1.0]).resolve(3).is_ok());
        assert!(LambdaSpec::Explicit(vec![1.0, 5.0]).resolve(2).is_err());
        assert!(LambdaSpec::Explicit(vec![1.0, 0.0]).resolve(2).is_err());
        assert!(LambdaSpec::Explicit(vec![1.0]).resolve(2).is_err());
    }

    #[test]
    fn orthonormal_draws() {
        let mut rng = stream_rng(5, 0);
        let q = random_orthonormal(2, 2, &mut rng).unwrap();
        assert!(q.gram_deviation() < 1e-12);
        let a = random_orthonormal(6, 3, &mut stream_rng(9, 1)).unwrap();
        let b = random_orthonormal(6, 3, &mut stream_rng(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(random_orthonormal(2, 3, &mut rng).is_err());
    }

    #[test]
    fn model_matrix_has_requested_spectrum() {
        let dims = ProblemDims::new(8, 6, 3, 10).unwrap();
        let model = make_model(
            dims,
            &LambdaSpec::Geometric,
            0.1,
            &mut stream_rng(1, MODEL_STREAM),
        )
        .unwrap();
        let s = crate::linalg::singular_values(&model.matrix()).unwrap();
        for (got, want) in s.iter().zip([8.0, 4.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(s[3] < 1e-12);
        assert!((model.inv_frob2() - (1.0 / 64.0 + 1.0 / 16.0 + 0.25)).abs() < 1e-15);
    }
}
