//! Exact A-update through the `n x n` sample kernel.
//!
//! With `K = XXᵀ` (rows of `X` are the vectorized designs), the system
//! `((2/n)XᵀX + ρI)A = c` has solution `A = (c − Xᵀu)/ρ` where
//! `(K + (nρ/2)I)u = Xc`. When `n` is below `m1·m2` this trades the
//! per-step design passes of CG for one Cholesky factorization per solve.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::model::SampleView;

pub(crate) struct KernelSystem {
    n: usize,
    /// Lower Cholesky factor of `K + shift·I`, row-major.
    chol: Vec<f64>,
}

impl KernelSystem {
    pub(crate) fn new(half: &SampleView<'_>, shift: f64) -> Result<Self> {
        let n = half.len();
        let mut k = gram_rows(half);
        for i in 0..n {
            k[i * n + i] += shift;
        }
        cholesky_in_place(&mut k, n)?;
        Ok(Self { n, chol: k })
    }

    /// Overwrites `a` with the solution of `((2/n)XᵀX + ρI)a = c`.
    pub(crate) fn solve(&self, half: &SampleView<'_>, c: &[f64], rho: f64, a: &mut [f64]) {
        let mut u: Vec<f64> = half.designs().map(|x| dot(x, c)).collect();
        self.solve_factored(&mut u);
        a.copy_from_slice(c);
        for (x, &ui) in half.designs().zip(&u) {
            axpy(-ui, x, a);
        }
        a.iter_mut().for_each(|v| *v /= rho);
    }

    fn solve_factored(&self, b: &mut [f64]) {
        let n = self.n;
        let l = &self.chol;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / l[i * n + i];
        }
        for i in (0..n).rev() {
            b[i] /= l[i * n + i];
            let xi = b[i];
            let row = &l[i * n..i * n + i];
            axpy(-xi, row, &mut b[..i]);
        }
    }
}

/// `XXᵀ` as a dense row-major `n x n` matrix, computed in 4x4 tiles of
/// rows so each loaded design entry feeds several products.
pub(crate) fn gram_rows(half: &SampleView<'_>) -> Vec<f64> {
    let n = half.len();
    let rows: Vec<&[f64]> = half.designs().collect();
    let mut k = vec![0.0; n * n];
    const T: usize = 4;
    let mut i0 = 0;
    while i0 < n {
        let ih = (i0 + T).min(n);
        let mut j0 = 0;
        while j0 <= i0 {
            let jh = (j0 + T).min(n);
            if ih - i0 == T && jh - j0 == T {
                let tile = tile4(&rows[i0..ih], &rows[j0..jh]);
                for (a, trow) in tile.iter().enumerate() {
                    for (b, &v) in trow.iter().enumerate() {
                        k[(i0 + a) * n + j0 + b] = v;
                    }
                }
            } else {
                for i in i0..ih {
                    for j in j0..jh {
                        k[i * n + j] = dot(rows[i], rows[j]);
                    }
                }
            }
            j0 += T;
        }
        i0 += T;
    }
    for i in 0..n {
        for j in i + 1..n {
            k[i * n + j] = k[j * n + i];
        }
    }
    k
}

#[inline]
fn tile4(a: &[&[f64]], b: &[&[f64]]) -> [[f64; 4]; 4] {
    let d = a[0].len();
    let (a0, a1, a2, a3) = (&a[0][..d], &a[1][..d], &a[2][..d], &a[3][..d]);
    let (b0, b1, b2, b3) = (&b[0][..d], &b[1][..d], &b[2][..d], &b[3][..d]);
    // two lanes per product so the compiler can keep sums in vector registers
    let mut acc = [[[0.0f64; 2]; 4]; 4];
    let pairs = d / 2;
    for p in 0..pairs {
        let o = 2 * p;
        let av = [
            [a0[o], a0[o + 1]],
            [a1[o], a1[o + 1]],
            [a2[o], a2[o + 1]],
            [a3[o], a3[o + 1]],
        ];
        let bv = [
            [b0[o], b0[o + 1]],
            [b1[o], b1[o + 1]],
            [b2[o], b2[o + 1]],
            [b3[o], b3[o + 1]],
        ];
        for r in 0..4 {
            for c in 0..4 {
                acc[r][c][0] += av[r][0] * bv[c][0];
                acc[r][c][1] += av[r][1] * bv[c][1];
            }
        }
    }
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let mut s = acc[r][c][0] + acc[r][c][1];
            if d % 2 == 1 {
                s += a[r][d - 1] * b[c][d - 1];
            }
            out[r][c] = s;
        }
    }
    out
}

/// Replaces the lower triangle of the symmetric positive definite `a` with
/// its Cholesky factor; the strict upper triangle is zeroed.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    for i in 0..n {
        for j in 0..=i {
            let (head, tail) = a.split_at_mut(i * n);
            let row_i = &tail[..n];
            let s = if j == i {
                row_i[i] - dot(&row_i[..i], &row_i[..i])
            } else {
                let row_j = &head[j * n..j * n + j];
                row_i[j] - dot(&row_i[..j], row_j)
            };
            if j == i {
                if !(s > 0.0) {
                    return Err(Error::Domain(format!(
                        "kernel system is not positive definite at pivot {i} ({s:e})"
                    )));
                }
                tail[i] = s.sqrt();
            } else {
                tail[j] = s / head[j * n + j];
            }
        }
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::Dataset;

    fn dataset(n2: usize, m1: usize, m2: usize) -> Dataset {
        let d = m1 * m2;
        let x: Vec<f64> = (0..n2 * d)
            .map(|i| ((i * 7919 % 113) as f64 - 56.0) / 17.0)
            .collect();
        let y: Vec<f64> = (0..n2).map(|i| (i as f64).sin()).collect();
        Dataset::new(m1, m2, x, y).unwrap()
    }

    #[test]
    fn gram_matches_pairwise_dots() {
        for (n2, m1, m2) in [(10, 3, 3), (18, 2, 5), (4, 1, 1)] {
            let data = dataset(n2, m1, m2);
            let half = data.first_half();
            let k = gram_rows(&half);
            let n = half.len();
            for i in 0..n {
                for j in 0..n {
                    let want = dot(half.design(i), half.design(j));
                    assert!((k[i * n + j] - want).abs() < 1e-10 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let n = 5;
        let mut a: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 }
            })
            .collect();
        let orig = a.clone();
        cholesky_in_place(&mut a, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
                assert!((s - orig[i * n + j]).abs() < 1e-12);
            }
        }
        let mut bad = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_in_place(&mut bad, 2).is_err());
    }

    #[test]
    fn solves_the_regularized_normal_equations() {
        let data = dataset(12, 3, 4);
        let half = data.first_half();
        let n = half.len() as f64;
        let rho = 0.7;
        let sys = KernelSystem::new(&half, n * rho / 2.0).unwrap();
        let c: Vec<f64> = (0..12).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut a = vec![0.0; 12];
        sys.solve(&half, &c, rho, &mut a);
        let am = Matrix::new(3, 4, a.clone()).unwrap();
        let mut g = Matrix::zeros(3, 4);
        half.gram_apply(&am, &mut g);
        for i in 0..12 {
            let lhs = 2.0 / n * g.as_slice()[i] + rho * a[i];
            assert!((lhs - c[i]).abs() < 1e-10, "{lhs} vs {}", c[i]);
        }
    }
}
