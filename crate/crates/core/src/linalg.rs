//! Small dense linear-algebra helpers: power iteration, least squares and
//! nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::SmoothOracle;

pub const POWER_RTOL: f64 = 1e-8;
pub const POWER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
}

/// Dominant eigenpair of a symmetric matrix by power iteration.
///
/// Stops when the Rayleigh quotient changes by at most `rtol` (relative) and
/// the eigen-residual `‖Av − ρv‖` is at most `√rtol·|ρ|`.
pub fn power_iteration(a: &DMatrix<f64>, rtol: f64, max_iters: usize) -> Result<Eigenpair> {
    let n = a.nrows();
    if n == 0 || !a.is_square() {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: "power iteration needs a nonempty square matrix".into(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("power iteration matrix"));
    }
    // Deterministic start with no special symmetry.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 1e-2);
    v /= v.norm();
    let mut rho = v.dot(&(a * &v));
    for it in 1..=max_iters {
        let av = a * &v;
        let norm = av.norm();
        if norm == 0.0 {
            return Ok(Eigenpair {
                value: 0.0,
                vector: v,
                iterations: it,
            });
        }
        let next = av / norm;
        let a_next = a * &next;
        let rho_next = next.dot(&a_next);
        let residual = (&a_next - &next * rho_next).norm();
        let converged = (rho_next - rho).abs() <= rtol * rho_next.abs()
            && residual <= rtol.sqrt() * rho_next.abs();
        v = next;
        rho = rho_next;
        if converged {
            return Ok(Eigenpair {
                value: rho,
                vector: v,
                iterations: it,
            });
        }
    }
    Err(Error::PowerIterationNotConverged {
        iterations: max_iters,
        bound: rho,
    })
}

/// Lipschitz constant of `∇f`: the declared constant if present, otherwise the
/// largest eigenvalue magnitude of a quadratic oracle's Hessian.
pub fn estimate_lipschitz(oracle: &dyn SmoothOracle) -> Result<f64> {
    if let Some(l) = oracle.lipschitz() {
        return Ok(l);
    }
    match oracle.hessian() {
        Some(h) => estimate_lipschitz_matrix(h),
        None => Err(Error::InvalidParameter {
            name: "oracle",
            reason: "no declared Lipschitz constant and no Hessian to estimate it from".into(),
        }),
    }
}

/// Largest eigenvalue magnitude of a symmetric matrix.
pub fn estimate_lipschitz_matrix(h: &DMatrix<f64>) -> Result<f64> {
    power_iteration(h, POWER_RTOL, POWER_MAX_ITERS).map(|e| e.value.abs())
}

/// Minimum-norm least-squares solution of `Ax ≈ b` and the numerical rank.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), 0);
    }
    if a.nrows() == 0 {
        return (DVector::zeros(a.ncols()), 0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-12 * a.nrows().max(a.ncols()) as f64;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let x = svd
        .solve(b, cutoff.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (x, rank)
}

/// Smallest-to-largest singular value ratio of `a` (0 when rank deficient in
/// shape).
pub(crate) fn singular_ratio(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 1.0;
    }
    if a.nrows() > a.ncols() {
        return 0.0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0.0;
    }
    sv.min() / smax
}

/// Lawson–Hanson nonnegative least squares: `min ‖Ax − b‖₂` over `x ≥ 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0) * b.amax().max(1.0);
    let tol = 1e-13 * scale * (a.nrows().max(n) as f64);
    let mut passive = vec![false; n];

    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let entering = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = entering else { break };
        passive[j] = true;

        for _ in 0..3 * n + 10 {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(&idx);
            let (sol, _) = lstsq(&sub, b);
            let mut s = DVector::zeros(n);
            for (k, &i) in idx.iter().enumerate() {
                s[i] = sol[k];
            }
            if idx.iter().all(|&i| s[i] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = 1.0f64;
            for &i in &idx {
                if s[i] <= 0.0 {
                    let denom = x[i] - s[i];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            x = &x + (s - &x) * alpha;
            for &i in &idx {
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|p| *p) {
                break;
            }
        }
    }
    x
}
