use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `Ax = b` for symmetric positive definite `A`, given only
/// `apply(p, out)` computing `out = A p`. `x` holds the starting point on
/// entry and the solution on exit.
///
/// Stops once `‖b − Ax‖ ≤ tol·‖b‖`. A direction with non-positive
/// curvature is reported as [`Error::CgBreakdown`] with the residual-norm
/// history.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    assert_eq!(
        b.len(),
        x.len(),
        "right-hand side and iterate differ in length"
    );
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let mut ap = vec![0.0; b.len()];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut rr = dot(&r, &r);
    let mut trace = vec![rr.sqrt() / b_norm];
    if rr.sqrt() <= tol * b_norm {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: trace[0],
            converged: true,
        });
    }
    let mut p = r.clone();
    for k in 1..=max_iter {
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::CgBreakdown {
                outer: 0,
                iteration: k,
                curvature,
                trace,
            });
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let rel = rr_next.sqrt() / b_norm;
        trace.push(rel);
        if rel <= tol {
            return Ok(CgOutcome {
                iterations: k,
                relative_residual: rel,
                converged: true,
            });
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Ok(CgOutcome {
        iterations: max_iter,
        relative_residual: *trace.last().unwrap(),
        converged: false,
    })
}
