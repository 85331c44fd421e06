//! Independent reference implementations used as test oracles. None of
//! these call into the library's decompositions or solvers.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use subspace_infer::linalg::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut s: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        let total: f64 = s.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if s[p][r] == 0.0 {
                    continue;
                }
                let theta = (s[r][r] - s[p][p]) / (2.0 * s[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (skp, skr) = (s[k][p], s[k][r]);
                    s[k][p] = c * skp - sn * skr;
                    s[k][r] = sn * skp + c * skr;
                }
                for k in 0..n {
                    let (spk, srk) = (s[p][k], s[r][k]);
                    s[p][k] = c * spk - sn * srk;
                    s[r][k] = sn * spk + c * srk;
                }
                for row in q.iter_mut() {
                    let (qp, qr) = (row[p], row[r]);
                    row[p] = c * qp - sn * qr;
                    row[r] = sn * qp + c * qr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j][j].total_cmp(&s[i][i]));
    let values = order.iter().map(|&i| s[i][i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| q[i][order[k]]);
    (values, vectors)
}

/// Singular values from the eigenvalues of `AᵀA`, descending.
pub fn oracle_singular_values(a: &Matrix) -> Vec<f64> {
    let (vals, _) = jacobi_eigen(&a.t_matmul(a));
    let mut s: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    s.truncate(a.rows().min(a.cols()));
    s
}

pub fn oracle_nuclear_norm(a: &Matrix) -> f64 {
    oracle_singular_values(a).iter().sum()
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn oracle_sym_norm(a: &Matrix) -> f64 {
    jacobi_eigen(a).0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Singular value soft-thresholding written as `A·V·diag(max(0, 1 − τ/s))·Vᵀ`
/// with `V` from the eigenvectors of `AᵀA`.
pub fn oracle_svt(a: &Matrix, tau: f64) -> Matrix {
    let (vals, v) = jacobi_eigen(&a.t_matmul(a));
    let w: Vec<f64> = vals
        .iter()
        .map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > tau {
                1.0 - tau / s
            } else {
                0.0
            }
        })
        .collect();
    a.matmul(&v.scale_columns(&w)).matmul_t(&v)
}

/// `(1/n)Σ(y_i − ⟨X_i, A⟩)² + λ‖A‖⋆` computed term by term.
pub fn oracle_objective(x: &[Matrix], y: &[f64], a: &Matrix, lambda: f64) -> f64 {
    let mut loss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let mut ip = 0.0;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                ip += xi.row(i)[j] * a.row(i)[j];
            }
        }
        loss += (yi - ip).powi(2);
    }
    loss / y.len() as f64 + lambda * oracle_nuclear_norm(a)
}

/// Accelerated proximal gradient (FISTA) on the penalized least squares
/// problem, run for a fixed number of iterations.
pub fn prox_gradient(x: &[Matrix], y: &[f64], lambda: f64, iters: usize) -> Matrix {
    let (m1, m2) = x[0].shape();
    let n = y.len() as f64;
    let d = m1 * m2;
    // Lipschitz constant of the loss gradient: (2/n)·λ_max(Σ vec(X_i)vec(X_i)ᵀ).
    let mut gram = Matrix::zeros(d, d);
    for xi in x {
        let v = xi.as_slice();
        let g = gram.as_mut_slice();
        for p in 0..d {
            for q in 0..d {
                g[p * d + q] += v[p] * v[q];
            }
        }
    }
    let lip = 2.0 / n * jacobi_eigen(&gram).0[0];
    let step = 1.0 / lip;
    let grad = |a: &Matrix| -> Matrix {
        let mut g = Matrix::zeros(m1, m2);
        for (xi, yi) in x.iter().zip(y) {
            let ip: f64 = xi
                .as_slice()
                .iter()
                .zip(a.as_slice())
                .map(|(p, q)| p * q)
                .sum();
            g.axpy(-2.0 / n * (yi - ip), xi);
        }
        g
    };
    let mut a = Matrix::zeros(m1, m2);
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let mut w = z.clone();
        w.axpy(-step, &grad(&z));
        let next = oracle_svt(&w, step * lambda);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mut zn = next.clone();
        zn.axpy((t - 1.0) / t_next, &next.sub(&a));
        a = next;
        z = zn;
        t = t_next;
    }
    a
}

/// `∥B∥⋆` of a 2x2 matrix in closed form: `sqrt(∥B∥_F² + 2|det B|)`.
pub fn nuclear_norm_2x2(b: [f64; 4]) -> f64 {
    let f2 = b.iter().map(|v| v * v).sum::<f64>();
    let det = b[0] * b[3] - b[1] * b[2];
    (f2 + 2.0 * det.abs()).sqrt()
}

/// Minimizer of `½∥A − B∥_F² + τ∥B∥⋆` over 2x2 `B` by coarse-to-fine grid
/// search.
pub fn grid_prox_2x2(a: [f64; 4], tau: f64) -> [f64; 4] {
    let f = |b: [f64; 4]| {
        let d: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum();
        0.5 * d + tau * nuclear_norm_2x2(b)
    };
    let mut center = a;
    let mut half = a.iter().fold(0.0f64, |m, v| m.max(v.abs())) + tau;
    const K: i32 = 10;
    while half > 1e-6 {
        let h = half / K as f64;
        let mut best = (f(center), center);
        for i in -K..=K {
            for j in -K..=K {
                for k in -K..=K {
                    for l in -K..=K {
                        let b = [
                            center[0] + i as f64 * h,
                            center[1] + j as f64 * h,
                            center[2] + k as f64 * h,
                            center[3] + l as f64 * h,
                        ];
                        let v = f(b);
                        if v < best.0 {
                            best = (v, b);
                        }
                    }
                }
            }
        }
        center = best.1;
        half = 3.0 * h;
    }
    center
}

/// Standard error of the mean.
pub fn std_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `m x r` matrix with orthonormal columns: leading eigenvectors of a random
/// symmetric matrix.
pub fn orthonormal(m: usize, r: usize, rng: &mut impl Rng) -> Matrix {
    let g = gaussian(m, m, rng);
    let sym = g.add(&g.transpose());
    jacobi_eigen(&sym).1.leading_columns(r)
}

/// Random `r x r` orthogonal matrix.
pub fn rotation(r: usize, rng: &mut impl Rng) -> Matrix {
    orthonormal(r, r, rng)
}

/// A seeded model and a dataset of `2n` samples drawn from it.
pub fn instance(
    m1: usize,
    m2: usize,
    r: usize,
    n: usize,
    sigma: f64,
    spec: &subspace_infer::model::LambdaSpec,
    seed: u64,
) -> (
    subspace_infer::model::LowRankModel,
    subspace_infer::model::Dataset,
) {
    use subspace_infer::model::*;
    let dims = ProblemDims::new(m1, m2, r, n).unwrap();
    let model = make_model(dims, spec, sigma, &mut stream_rng(seed, MODEL_STREAM)).unwrap();
    let data = sample_dataset(&model, &mut stream_rng(seed, 0));
    (model, data)
}

/// Designs and responses of a sample view as owned matrices.
pub fn unpack(view: &subspace_infer::model::SampleView<'_>) -> (Vec<Matrix>, Vec<f64>) {
    let x = view
        .designs()
        .map(|d| Matrix::new(view.m1(), view.m2(), d.to_vec()).unwrap())
        .collect();
    (x, view.responses().to_vec())
}

/// `n` Gaussian-design samples `y = ⟨X, M⟩ + σξ` drawn from the test RNG,
/// flattened row-major like the library's datasets.
pub fn gaussian_samples(
    m: &Matrix,
    n: usize,
    sigma: f64,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let d = m.rows() * m.cols();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = x.len();
        x.extend((0..d).map(|_| {
            let v: f64 = StandardNormal.sample(&mut *rng);
            v
        }));
        let ip: f64 = x[start..]
            .iter()
            .zip(m.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        let xi: f64 = StandardNormal.sample(&mut *rng);
        y.push(ip + sigma * xi);
    }
    (x, y)
}

/// Top-`r` left and right singular vectors from the eigenvectors of `AAᵀ`
/// and `AᵀA`.
pub fn oracle_top_singular_vectors(a: &Matrix, r: usize) -> (Matrix, Matrix) {
    let u = jacobi_eigen(&a.matmul_t(a)).1.leading_columns(r);
    let v = jacobi_eigen(&a.t_matmul(a)).1.leading_columns(r);
    (u, v)
}

/// `blockdiag(UUᵀ, VVᵀ)`.
pub fn joint_projector(u: &Matrix, v: &Matrix) -> Matrix {
    let (m1, m2) = (u.rows(), v.rows());
    Matrix::from_fn(m1 + m2, m1 + m2, |i, j| {
        let dot = |q: &Matrix, a: usize, b: usize| -> f64 {
            q.row(a).iter().zip(q.row(b)).map(|(x, y)| x * y).sum()
        };
        if i < m1 && j < m1 {
            dot(u, i, j)
        } else if i >= m1 && j >= m1 {
            dot(v, i - m1, j - m1)
        } else {
            0.0
        }
    })
}

/// One random instance of the first-order expansion of the joint spectral
/// projector: returns `(‖P̂ − P − L(E)‖, ‖E‖/λ_r)` with every projector and
/// operator formed as an explicit matrix. The perturbation is scaled so that
/// `‖E‖ = ratio·λ_r`.
pub fn representation_residual(
    m1: usize,
    m2: usize,
    lambdas: &[f64],
    ratio: f64,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let r = lambdas.len();
    let u = orthonormal(m1, r, rng);
    let v = orthonormal(m2, r, rng);
    let m = u.scale_columns(lambdas).matmul_t(&v);
    let mut z = gaussian(m1, m2, rng);
    let lambda_r = lambdas[r - 1];
    z.scale_mut(ratio * lambda_r / oracle_singular_values(&z)[0]);
    let e_norm = oracle_singular_values(&z)[0];

    let size = m1 + m2;
    let mut e = Matrix::zeros(size, size);
    e.set_block(0, m1, &z);
    e.set_block(m1, 0, &z.transpose());
    let p = joint_projector(&u, &v);
    let p_perp = Matrix::identity(size).sub(&p);
    let inv: Vec<f64> = lambdas.iter().map(|l| 1.0 / l).collect();
    let mut c = Matrix::zeros(size, size);
    let upper = u.scale_columns(&inv).matmul_t(&v);
    c.set_block(0, m1, &upper);
    c.set_block(m1, 0, &upper.transpose());
    let linear = p_perp
        .matmul(&e)
        .matmul(&c)
        .add(&c.matmul(&e).matmul(&p_perp));

    let (uh, vh) = oracle_top_singular_vectors(&m.add(&z), r);
    let residual = joint_projector(&uh, &vh).sub(&p).sub(&linear);
    (oracle_sym_norm(&residual), e_norm / lambda_r)
}

/// Monte Carlo check that de-biasing is conditionally unbiased: averages
/// `debias(m_nuc, fresh half) − M` over `draws` second halves of size `n`.
/// Returns the Frobenius norm of that average and the aggregate standard
/// error `sqrt(m1·m2·(σ² + ‖M − m_nuc‖²)/(n·draws))`.
pub fn debias_mean_error(
    m: &Matrix,
    m_nuc: &Matrix,
    sigma: f64,
    n: usize,
    draws: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    use subspace_infer::inference::debias;
    use subspace_infer::model::SampleView;
    let (m1, m2) = m.shape();
    let mut acc = Matrix::zeros(m1, m2);
    for _ in 0..draws {
        let (x, y) = gaussian_samples(m, n, sigma, rng);
        let half = SampleView::new(m1, m2, &x, &y).unwrap();
        acc.axpy(1.0, &debias(m_nuc, &half).unwrap());
    }
    acc.scale_mut(1.0 / draws as f64);
    let err = acc.sub(m).frobenius_norm();
    let delta2 = m.sub(m_nuc).frobenius_norm2();
    let se = ((m1 * m2) as f64 * (sigma * sigma + delta2) / (n * draws) as f64).sqrt();
    (err, se)
}
