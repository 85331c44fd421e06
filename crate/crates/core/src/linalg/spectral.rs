//! Spectral-projector algebra on the symmetric dilation of an
//! `m1 x m2` matrix.

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::linalg::svd::{svd, SvdFactors};

/// Tolerance on `‖QᵀQ − I‖_F` for factor matrices handed to the projector
/// builders.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Proximal map of `tau · ‖·‖⋆`: soft-thresholds the singular values.
pub fn soft_threshold_sv(a: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {tau}")));
    }
    let f = svd(a, None)?;
    Ok(threshold_factors(&f, tau, a.rows(), a.cols()))
}

pub(crate) fn threshold_factors(f: &SvdFactors, tau: f64, rows: usize, cols: usize) -> Matrix {
    let kept = f.s.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Matrix::zeros(rows, cols);
    }
    let shrunk: Vec<f64> = f.s[..kept].iter().map(|s| s - tau).collect();
    f.u.leading_columns(kept)
        .scale_columns(&shrunk)
        .matmul_t(&f.v.leading_columns(kept))
}

/// `[[0, A], [Aᵀ, 0]]`.
pub fn dilation(a: &Matrix) -> Matrix {
    let (m1, m2) = a.shape();
    let mut out = Matrix::zeros(m1 + m2, m1 + m2);
    out.set_block(0, m1, a);
    out.set_block(m1, 0, &a.transpose());
    out
}

/// Projectors onto the joint singular subspace of `M = UΛVᵀ` and the
/// pseudo-inverse-like operator `C_UV`, all as explicit
/// `(m1+m2) x (m1+m2)` matrices.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    /// `blockdiag(UUᵀ, VVᵀ)`.
    pub p_uv: Matrix,
    /// `I − p_uv`.
    pub p_perp: Matrix,
    /// Off-diagonal blocks `UΛ⁻¹Vᵀ` and `VΛ⁻¹Uᵀ`.
    pub c_uv: Matrix,
}

pub fn projector_set(u: &Matrix, v: &Matrix, lambdas: &[f64]) -> Result<ProjectorSet> {
    let r = lambdas.len();
    check_factor_pair(u, v, r)?;
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::Domain(format!(
            "singular values must be positive, got {l}"
        )));
    }
    let (m1, m2) = (u.rows(), v.rows());
    let size = m1 + m2;

    let mut p_uv = Matrix::zeros(size, size);
    p_uv.set_block(0, 0, &u.matmul_t(u));
    p_uv.set_block(m1, m1, &v.matmul_t(v));
    let p_perp = Matrix::identity(size).sub(&p_uv);

    let inv: Vec<f64> = lambdas.iter().map(|l| 1.0 / l).collect();
    let upper = u.scale_columns(&inv).matmul_t(v);
    let mut c_uv = Matrix::zeros(size, size);
    c_uv.set_block(0, m1, &upper);
    c_uv.set_block(m1, 0, &upper.transpose());

    Ok(ProjectorSet { p_uv, p_perp, c_uv })
}

fn check_orthonormal(q: &Matrix, name: &str) -> Result<()> {
    let dev = q.gram_deviation();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::arg(format!(
            "{name} columns are not orthonormal (Gram deviation {dev:e})"
        )));
    }
    Ok(())
}

fn check_factor_pair(u: &Matrix, v: &Matrix, r: usize) -> Result<()> {
    if u.cols() != r || v.cols() != r {
        return Err(Error::dim(format!(
            "factor ranks {} and {} do not match {r} singular values",
            u.cols(),
            v.cols()
        )));
    }
    check_orthonormal(u, "U")?;
    check_orthonormal(v, "V")
}

/// Squared joint projection distance
/// `‖U₁U₁ᵀ − U₂U₂ᵀ‖_F² + ‖V₁V₁ᵀ − V₂V₂ᵀ‖_F²`, evaluated as
/// `2‖U₂ − U₁U₁ᵀU₂‖_F² + 2‖V₂ − V₁V₁ᵀV₂‖_F²` (no cancellation for nearby
/// subspaces) and clamped to `[0, 4r]`.
pub fn projection_distance2(u1: &Matrix, v1: &Matrix, u2: &Matrix, v2: &Matrix) -> Result<f64> {
    if u1.shape() != u2.shape() || v1.shape() != v2.shape() || u1.cols() != v1.cols() {
        return Err(Error::dim(format!(
            "subspace pairs ({:?}, {:?}) and ({:?}, {:?}) are incompatible",
            u1.shape(),
            v1.shape(),
            u2.shape(),
            v2.shape()
        )));
    }
    let r = u1.cols() as f64;
    let off =
        |q1: &Matrix, q2: &Matrix| 2.0 * q2.sub(&q1.matmul(&q1.t_matmul(q2))).frobenius_norm2();
    Ok((off(u1, u2) + off(v1, v2)).min(4.0 * r))
}

/// `‖L_N(E)‖_F²` for `E = dilation(z)`, i.e.
/// `2(‖(I−UUᵀ) Z V Λ⁻¹‖_F² + ‖(I−VVᵀ) Zᵀ U Λ⁻¹‖_F²)`, without forming any
/// orthogonal complement.
pub fn linear_term_norm2(model: &SvdFactors, z: &Matrix) -> Result<f64> {
    let (u, v) = (&model.u, &model.v);
    if z.rows() != u.rows() || z.cols() != v.rows() {
        return Err(Error::dim(format!(
            "perturbation is {:?} but factors are {}x{} and {}x{}",
            z.shape(),
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    if model.s.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Domain("singular values must be positive".into()));
    }
    let inv: Vec<f64> = model.s.iter().map(|l| 1.0 / l).collect();

    let zv = z.matmul(v);
    let left = zv.sub(&u.matmul(&u.t_matmul(&zv))).scale_columns(&inv);

    let ztu = z.t_matmul(u);
    let right = ztu.sub(&v.matmul(&v.t_matmul(&ztu))).scale_columns(&inv);

    Ok(2.0 * (left.frobenius_norm2() + right.frobenius_norm2()))
}
