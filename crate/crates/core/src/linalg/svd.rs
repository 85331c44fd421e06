//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The working matrix is held column-major so each rotation touches two
//! contiguous vectors. Singular values come out accurate to a few ulps
//! relative to the largest one, and the factors are orthonormal to working
//! precision.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, Matrix};

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;

/// Thin SVD `a = u · diag(s) · vᵀ` with `s` non-increasing.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u · diag(s) · vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_columns(&self.s).matmul_t(&self.v)
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        if k < self.s.len() {
            self.u = self.u.leading_columns(k);
            self.v = self.v.leading_columns(k);
            self.s.truncate(k);
        }
        self
    }
}

/// Computes the SVD of `a`; with `k` set, only the top-`k` triplets are
/// returned.
pub fn svd(a: &Matrix, k: Option<usize>) -> Result<SvdFactors> {
    svd_impl(a, k, None)
}

/// Full SVD started from the factors of a nearby matrix of the same shape,
/// which saves sweeps when the singular vectors move little.
pub(crate) fn svd_warm(a: &Matrix, prev: Option<&SvdFactors>) -> Result<SvdFactors> {
    svd_impl(a, None, prev)
}

fn svd_impl(a: &Matrix, k: Option<usize>, prev: Option<&SvdFactors>) -> Result<SvdFactors> {
    let min_dim = a.rows().min(a.cols());
    if let Some(k) = k {
        if k == 0 || k > min_dim {
            return Err(Error::dim(format!(
                "requested {k} singular triplets from a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
    }
    if min_dim == 0 {
        return Err(Error::dim("SVD of an empty matrix"));
    }
    let full = if a.rows() >= a.cols() {
        let start = prev
            .map(|f| &f.v)
            .filter(|v| v.shape() == (a.cols(), a.cols()));
        jacobi_tall(a, start)?
    } else {
        let start = prev
            .map(|f| &f.u)
            .filter(|u| u.shape() == (a.rows(), a.rows()));
        let t = jacobi_tall(&a.transpose(), start)?;
        SvdFactors {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    };
    let mut out = normalize_signs(full);
    if let Some(k) = k {
        out = out.truncate(k);
    }
    Ok(out)
}

/// Singular values only.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a, None)?.s)
}

/// Largest singular value.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn nuclear_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// One-sided Jacobi on an `m x n` matrix with `m >= n`.
fn jacobi_tall(a: &Matrix, start: Option<&Matrix>) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let (mut work, mut right): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match start {
        Some(v0) => {
            let av = a.matmul(v0);
            (
                (0..n).map(|j| av.column(j)).collect(),
                (0..n).map(|j| v0.column(j)).collect(),
            )
        }
        None => (
            (0..n).map(|j| a.column(j)).collect(),
            (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    e
                })
                .collect(),
        ),
    };
    let mut norms: Vec<f64> = vec![0.0; n];

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::SvdNonConvergence { sweeps });
        }
        sweeps += 1;
        // within a sweep the norms are updated in closed form; refresh them
        // here so rounding does not accumulate across sweeps
        for (nv, c) in norms.iter_mut().zip(&work) {
            *nv = dot(c, c);
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&work[p], &work[q]);
                if gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = work.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = right.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        converged = !rotated;
    }

    for (nv, c) in norms.iter_mut().zip(&work) {
        *nv = dot(c, c);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let sv: Vec<f64> = norms.iter().map(|v| v.sqrt()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap().then(i.cmp(&j)));

    let s_max = sv[order[0]];
    let zero_tol = s_max * (m as f64) * f64::EPSILON;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if sv[j] > zero_tol && sv[j] > 0.0 {
            u_cols.push(work[j].iter().map(|x| x / sv[j]).collect());
        } else {
            u_cols.push(vec![0.0; m]);
            pending.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &pending, m);

    let s: Vec<f64> = order.iter().map(|&j| sv[j]).collect();
    let u = Matrix::from_columns(m, &u_cols);
    let v_cols: Vec<Vec<f64>> = order.iter().map(|&j| right[j].clone()).collect();
    let v = Matrix::from_columns(n, &v_cols);
    Ok(SvdFactors { u, s, v })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Fills the columns listed in `pending` with unit vectors orthogonal to all
/// other columns (Gram-Schmidt against the standard basis, two passes).
fn complete_orthonormal(cols: &mut [Vec<f64>], pending: &[usize], m: usize) {
    if pending.is_empty() {
        return;
    }
    let mut filled: Vec<bool> = vec![true; cols.len()];
    for &p in pending {
        filled[p] = false;
    }
    let mut basis = 0;
    for &slot in pending {
        while basis < m {
            let mut cand = vec![0.0; m];
            cand[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for (k, col) in cols.iter().enumerate() {
                    if filled[k] {
                        let proj = dot(col, &cand);
                        for (c, x) in cand.iter_mut().zip(col) {
                            *c -= proj * x;
                        }
                    }
                }
            }
            let norm = dot(&cand, &cand).sqrt();
            if norm > 1e-8 {
                cand.iter_mut().for_each(|c| *c /= norm);
                cols[slot] = cand;
                filled[slot] = true;
                break;
            }
        }
    }
}

/// Flips each pair so the first non-negligible entry of the left vector is
/// non-negative.
fn normalize_signs(mut f: SvdFactors) -> SvdFactors {
    for j in 0..f.s.len() {
        let col = f.u.column(j);
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col.iter().copied().find(|x| x.abs() > 1e-12 * scale);
        if matches!(lead, Some(x) if x < 0.0) {
            for i in 0..f.u.rows() {
                f.u[(i, j)] = -f.u[(i, j)];
            }
            for i in 0..f.v.rows() {
                f.v[(i, j)] = -f.v[(i, j)];
            }
        }
    }
    f
}

/// Orthonormalizes the columns of `a` by modified Gram-Schmidt with one
/// re-orthogonalization pass. The implied R factor has a positive diagonal.
pub fn orthonormalize_columns(a: &Matrix) -> Result<Matrix> {
    let (m, r) = a.shape();
    if r > m {
        return Err(Error::dim(format!(
            "cannot orthonormalize {r} columns in R^{m}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..r).map(|j| a.column(j)).collect();
    for j in 0..r {
        let original = dot(&cols[j], &cols[j]).sqrt();
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = dot(&done[k], &rest[0]);
                for (c, x) in rest[0].iter_mut().zip(&done[k]) {
                    *c -= proj * x;
                }
            }
        }
        let norm = dot(&cols[j], &cols[j]).sqrt();
        if norm <= 1e-12 * original.max(f64::MIN_POSITIVE) || norm == 0.0 {
            return Err(Error::arg("columns are linearly dependent"));
        }
        cols[j].iter_mut().for_each(|c| *c /= norm);
    }
    Ok(Matrix::from_columns(m, &cols))
}
