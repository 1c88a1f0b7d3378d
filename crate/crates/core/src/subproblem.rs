//! Exact solvers for the weighted-ℓ1 subproblem
//!
//! ```text
//! minimize  ⟨g, x⟩ + (β/2)‖x − xᵏ‖² + λ Σᵢ wᵢ|xᵢ|   over x ∈ Γ
//! ```
//!
//! specialized per feasible-set kind. Every solution carries a stationarity
//! certificate: an ℓ1 subgradient `y` and a normal-cone element `z` of `Γ` with
//! `g + β(x − xᵏ) + λ·diag(w)·y + z = 0`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::problem::{check_finite, norm_inf, ConstraintKind, FeasibleSet};

/// Maximal stationarity residual accepted from a subproblem solution, relative
/// to `1 + ‖g‖∞`.
pub const STATIONARITY_RTOL: f64 = 1e-10;

/// Maximal feasibility violation accepted from a subproblem solution, relative
/// to `1 + ‖x‖∞`.
pub const FEASIBILITY_RTOL: f64 = 1e-12;

/// Euclidean projection onto `{x ≥ 0, Σ xᵢ = s}`.
///
/// Returns the projection together with the threshold `ν` for which
/// `xᵢ = max(zᵢ − ν, 0)`.
pub fn project_simplex(z: &[f64], s: f64) -> Result<(Vec<f64>, f64)> {
    if z.is_empty() {
        return Err(Error::Empty("simplex projection input"));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "scale",
            reason: format!("simplex scale must be positive, got {s}"),
        });
    }
    check_finite(z, "simplex projection input")?;

    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = 0.0;
    let mut nu = sorted[0] - s;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - s) / (k + 1) as f64;
        if u - candidate > 0.0 {
            nu = candidate;
        } else {
            break;
        }
    }
    let x = z.iter().map(|&zi| (zi - nu).max(0.0)).collect();
    Ok((x, nu))
}

/// Data of one subproblem instance.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemInput<'a> {
    /// Current iterate `xᵏ`.
    pub xk: &'a [f64],
    /// `∇f(xᵏ)`.
    pub grad: &'a [f64],
    pub beta: f64,
    pub lambda: f64,
    pub weights: &'a [f64],
    pub set: &'a FeasibleSet,
}

impl SubproblemInput<'_> {
    /// The proximal center `xᵏ − g/β`.
    pub fn center(&self) -> Vec<f64> {
        self.xk
            .iter()
            .zip(self.grad)
            .map(|(x, g)| x - g / self.beta)
            .collect()
    }

    /// Subproblem objective at `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        let mut l1 = 0.0;
        for i in 0..x.len() {
            lin += self.grad[i] * x[i];
            let d = x[i] - self.xk[i];
            quad += d * d;
            l1 += self.weights[i] * x[i].abs();
        }
        lin + 0.5 * self.beta * quad + self.lambda * l1
    }

    fn validate(&self) -> Result<()> {
        let n = self.xk.len();
        for (len, _) in [(self.grad.len(), "grad"), (self.weights.len(), "weights")] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be positive, got {}", self.beta),
            });
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be nonnegative, got {}", self.lambda),
            });
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "must be positive and finite".into(),
            });
        }
        check_finite(self.xk, "subproblem iterate")?;
        check_finite(self.grad, "subproblem gradient")?;
        self.set.validate(n)
    }
}

/// Primal solution plus the multipliers certifying its optimality.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// Multiplier `ν` of the simplex equality; enters stationarity as `+ν·e`.
    pub equality_dual: Option<f64>,
    /// Nonnegative multipliers of active bounds (nonnegativity or box).
    pub bound_duals: Option<Vec<f64>>,
    /// Multipliers of the constraints of a general smooth set, in list order.
    pub constraint_duals: Option<Vec<f64>>,
    /// `y ∈ ∂‖x‖₁` implied by stationarity.
    pub l1_subgradient: Vec<f64>,
    /// Normal-cone element `z ∈ N_Γ(x)` implied by stationarity.
    pub normal: Vec<f64>,
}

impl SubproblemSolution {
    /// A bare primal point; multipliers are recovered by [`certify`].
    pub fn primal(x: Vec<f64>) -> Self {
        let n = x.len();
        Self {
            x,
            equality_dual: None,
            bound_duals: None,
            constraint_duals: None,
            l1_subgradient: vec![0.0; n],
            normal: vec![0.0; n],
        }
    }
}

/// Solver for the subproblem, pluggable into the outer loop.
///
/// Implementations must return exact minimizers; the outer loop verifies the
/// stationarity certificate of every returned solution and aborts otherwise.
pub trait SubproblemOracle: Send + Sync {
    fn solve(&self, input: &SubproblemInput<'_>) -> Result<SubproblemSolution>;
}

/// Closed-form solver for the structured feasible sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSubproblem;

impl SubproblemOracle for ExactSubproblem {
    fn solve(&self, input: &SubproblemInput<'_>) -> Result<SubproblemSolution> {
        solve_subproblem(input)
    }
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Minimizer of `½(x − z)² + t|x|` over `[lower, upper]`.
pub(crate) fn box_coordinate(z: f64, t: f64, lower: f64, upper: f64) -> f64 {
    if lower <= 0.0 && 0.0 <= upper {
        return soft_threshold(z, t).clamp(lower, upper);
    }
    // The interval lies in one sign region, where |x| is linear.
    let f = |x: f64| 0.5 * (x - z) * (x - z) + t * x.abs();
    let mut candidates = Vec::with_capacity(2);
    if upper >= 0.0 {
        candidates.push((z - t).clamp(lower.max(0.0), upper));
    }
    if lower <= 0.0 {
        candidates.push((z + t).clamp(lower, upper.min(0.0)));
    }
    candidates
        .into_iter()
        .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap_or(Ordering::Equal))
        .unwrap_or(lower)
}

/// Exact minimizer over the structured feasible sets.
pub fn solve_subproblem(input: &SubproblemInput<'_>) -> Result<SubproblemSolution> {
    input.validate()?;
    let center = input.center();
    let thresholds: Vec<f64> = input
        .weights
        .iter()
        .map(|w| input.lambda * w / input.beta)
        .collect();

    let (x, nu) = match input.set {
        FeasibleSet::Unconstrained => (
            center
                .iter()
                .zip(&thresholds)
                .map(|(&z, &t)| soft_threshold(z, t))
                .collect(),
            None,
        ),
        FeasibleSet::Nonnegative => (
            center
                .iter()
                .zip(&thresholds)
                .map(|(&z, &t)| (z - t).max(0.0))
                .collect(),
            None,
        ),
        FeasibleSet::Box { lower, upper } => (
            (0..center.len())
                .map(|i| box_coordinate(center[i], thresholds[i], lower[i], upper[i]))
                .collect(),
            None,
        ),
        FeasibleSet::Simplex { scale } => {
            // On the simplex |xᵢ| = xᵢ, so the ℓ1 term is a linear shift.
            let shifted: Vec<f64> = center.iter().zip(&thresholds).map(|(z, t)| z - t).collect();
            let (x, threshold) = project_simplex(&shifted, *scale)?;
            (x, Some(input.beta * threshold))
        }
        FeasibleSet::GeneralSmooth(_) => return Err(Error::UnsupportedExactSubproblem),
    };

    let mut sol = SubproblemSolution::primal(x);
    sol.equality_dual = nu;
    let cert = certify(input, &sol)?;
    sol.l1_subgradient = cert.l1_subgradient;
    sol.normal = cert.normal;
    sol.bound_duals = cert.bound_duals;
    Ok(sol)
}

/// Normal cone of a separable set at one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CoordinateCone {
    Zero,
    NonPositive,
    NonNegative,
}

impl CoordinateCone {
    pub(crate) fn project(self, v: f64) -> f64 {
        match self {
            CoordinateCone::Zero => 0.0,
            CoordinateCone::NonPositive => v.min(0.0),
            CoordinateCone::NonNegative => v.max(0.0),
        }
    }
}

/// Best `(y, z)` with `y ∈ ∂|xᵢ|`, `z` in the coordinate cone, for the scalar
/// equation `r + lw·y + z = 0`. Returns `(y, z, |residual|)`.
pub(crate) fn certify_coordinate(xi: f64, r: f64, lw: f64, cone: CoordinateCone) -> (f64, f64, f64) {
    let y = if xi != 0.0 {
        xi.signum()
    } else if lw > 0.0 {
        (-r / lw).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let z = cone.project(-r - lw * y);
    (y, z, (r + lw * y + z).abs())
}

/// Stationarity certificate recovered from a primal point and its set duals.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityCertificate {
    pub l1_subgradient: Vec<f64>,
    pub normal: Vec<f64>,
    pub bound_duals: Option<Vec<f64>>,
    /// `‖g + β(x − xᵏ) + λ·diag(w)·y + z‖∞`, including complementarity of
    /// general constraints.
    pub residual: f64,
    /// Feasibility violation of `x`.
    pub violation: f64,
}

/// Recovers the best stationarity certificate for `sol.x`, using the set
/// multipliers carried by `sol` where the set is not separable.
pub fn certify(input: &SubproblemInput<'_>, sol: &SubproblemSolution) -> Result<StationarityCertificate> {
    let n = input.xk.len();
    let x = &sol.x;
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("subproblem solution"));
    }
    let violation = input.set.violation(x);
    let r: Vec<f64> = (0..n)
        .map(|i| input.grad[i] + input.beta * (x[i] - input.xk[i]))
        .collect();
    let lw: Vec<f64> = input.weights.iter().map(|w| input.lambda * w).collect();

    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut residual = 0.0f64;
    let mut bound_duals = None;

    let mut separable = |shift: f64, cone_at: &dyn Fn(usize) -> CoordinateCone| {
        for i in 0..n {
            let (yi, zi, res) = certify_coordinate(x[i], r[i] + shift, lw[i], cone_at(i));
            y[i] = yi;
            z[i] = zi + shift;
            residual = residual.max(res);
        }
    };

    match input.set {
        FeasibleSet::Unconstrained => separable(0.0, &|_| CoordinateCone::Zero),
        FeasibleSet::Nonnegative => {
            separable(0.0, &|i| {
                if x[i] == 0.0 {
                    CoordinateCone::NonPositive
                } else {
                    CoordinateCone::Zero
                }
            });
            bound_duals = Some(z.iter().map(|v| -v).collect());
        }
        FeasibleSet::Box { lower, upper } => {
            separable(0.0, &|i| {
                if x[i] == lower[i] {
                    CoordinateCone::NonPositive
                } else if x[i] == upper[i] {
                    CoordinateCone::NonNegative
                } else {
                    CoordinateCone::Zero
                }
            });
            bound_duals = Some(z.iter().map(|v| v.abs()).collect());
        }
        FeasibleSet::Simplex { .. } => {
            let nu = sol.equality_dual.ok_or(Error::InvalidParameter {
                name: "equality_dual",
                reason: "simplex solutions must carry the equality multiplier".into(),
            })?;
            separable(nu, &|i| {
                if x[i] == 0.0 {
                    CoordinateCone::NonPositive
                } else {
                    CoordinateCone::Zero
                }
            });
            bound_duals = Some(z.iter().map(|v| nu - v).collect());
        }
        FeasibleSet::GeneralSmooth(cons) => {
            let duals = sol.constraint_duals.as_deref().unwrap_or(&[]);
            if duals.len() != cons.len() {
                return Err(Error::DimensionMismatch {
                    expected: cons.len(),
                    got: duals.len(),
                });
            }
            let mut normal = vec![0.0; n];
            for (c, &yj) in cons.iter().zip(duals) {
                if c.kind == ConstraintKind::Inequality {
                    if yj < 0.0 {
                        residual = residual.max(-yj);
                    }
                    residual = residual.max((yj * c.oracle.value(x)).abs());
                }
                if yj != 0.0 {
                    for (ni, gi) in normal.iter_mut().zip(c.oracle.gradient(x)) {
                        *ni += yj * gi;
                    }
                }
            }
            for i in 0..n {
                let (yi, _, res) = certify_coordinate(x[i], r[i] + normal[i], lw[i], CoordinateCone::Zero);
                y[i] = yi;
                z[i] = normal[i];
                residual = residual.max(res);
            }
        }
    }

    Ok(StationarityCertificate {
        l1_subgradient: y,
        normal: z,
        bound_duals,
        residual,
        violation,
    })
}

/// Tolerance for [`certify`] residuals, `1e−10·(1 + ‖g‖∞)`.
pub fn stationarity_tolerance(grad: &[f64]) -> f64 {
    STATIONARITY_RTOL * (1.0 + norm_inf(grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn input<'a>(
        xk: &'a [f64],
        grad: &'a [f64],
        beta: f64,
        lambda: f64,
        w: &'a [f64],
        set: &'a FeasibleSet,
    ) -> SubproblemInput<'a> {
        SubproblemInput {
            xk,
            grad,
            beta,
            lambda,
            weights: w,
            set,
        }
    }

    /// Brute force over all supports: solve the equality-constrained least
    /// squares on each support and keep the best feasible one.
    fn simplex_enumeration(z: &[f64], s: f64) -> Vec<f64> {
        let n = z.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let shift = (idx.iter().map(|&i| z[i]).sum::<f64>() - s) / idx.len() as f64;
            let mut x = vec![0.0; n];
            let mut feasible = true;
            for &i in &idx {
                x[i] = z[i] - shift;
                if x[i] < 0.0 {
                    feasible = false;
                }
            }
            if !feasible {
                continue;
            }
            let d: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn simplex_examples() {
        let (x, nu) = project_simplex(&[0.5, 0.5], 1.0).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
        assert_eq!(nu, 0.0);

        let (x, nu) = project_simplex(&[2.0, 0.0], 1.0).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(nu, 1.0);

        let z = [0.9, 0.5, 0.1];
        let (x, _) = project_simplex(&z, 1.0).unwrap();
        let oracle = simplex_enumeration(&z, 1.0);
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        // Frozen from the enumeration: the full support would need x₃ < 0, the
        // best support is {1, 2} with shift 0.2.
        let expected = [0.7, 0.3, 0.0];
        for (a, b) in x.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert!(matches!(project_simplex(&[], 1.0), Err(Error::Empty(_))));
        assert!(project_simplex(&[1.0], 0.0).is_err());
    }

    #[test]
    fn simplex_matches_enumeration_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.random_range(1..=6);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = rng.random_range(0.1..3.0);
            let (x, nu) = project_simplex(&z, s).unwrap();
            let oracle = simplex_enumeration(&z, s);
            for i in 0..n {
                assert!((x[i] - oracle[i]).abs() < 1e-10);
                assert_eq!(x[i], (z[i] - nu).max(0.0));
            }
            assert!((x.iter().sum::<f64>() - s).abs() <= 1e-12 * s.max(1.0) * n as f64);
        }
    }

    #[test]
    fn unconstrained_examples() {
        let set = FeasibleSet::Unconstrained;
        let sol = solve_subproblem(&input(&[1.0], &[0.0], 1.0, 0.3, &[1.0], &set)).unwrap();
        assert!((sol.x[0] - 0.7).abs() < 1e-15);
        let sol = solve_subproblem(&input(&[0.2], &[0.0], 1.0, 1.0, &[1.0], &set)).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        assert!((sol.l1_subgradient[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn tie_resolves_to_zero() {
        let set = FeasibleSet::Unconstrained;
        let sol = solve_subproblem(&input(&[0.5], &[0.0], 1.0, 0.5, &[1.0], &set)).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        let nn = FeasibleSet::Nonnegative;
        let sol = solve_subproblem(&input(&[0.5], &[0.0], 1.0, 0.5, &[1.0], &nn)).unwrap();
        assert_eq!(sol.x, vec![0.0]);
    }

    #[test]
    fn simplex_subproblem_matches_grid() {
        let set = FeasibleSet::simplex(1.0).unwrap();
        let inp = input(&[1.0, 0.0], &[0.5, -0.2], 2.0, 0.5, &[1.0, 1.0], &set);
        let sol = solve_subproblem(&inp).unwrap();
        let mut best = f64::INFINITY;
        for k in 0..=10_000 {
            let a = k as f64 * 1e-4;
            best = best.min(inp.objective(&[a, 1.0 - a]));
        }
        let value = inp.objective(&sol.x);
        assert!(value <= best + 1e-6, "{value} vs grid {best}");
        assert!((best - value).abs() <= 1e-6);
    }

    #[test]
    fn general_smooth_is_rejected() {
        let set = FeasibleSet::GeneralSmooth(vec![]);
        let err = solve_subproblem(&input(&[1.0], &[0.0], 1.0, 0.1, &[1.0], &set)).unwrap_err();
        assert_eq!(err, Error::UnsupportedExactSubproblem);
        assert!(err.to_string().contains("unsupported-exact-subproblem"));
    }

    #[test]
    fn box_not_containing_zero() {
        // ½(x - 3)² + |x| on [1, 2]: unconstrained positive minimizer 2 is feasible.
        assert_eq!(box_coordinate(3.0, 1.0, 1.0, 2.0), 2.0);
        assert_eq!(box_coordinate(-0.5, 1.0, 1.0, 2.0), 1.0);
        assert_eq!(box_coordinate(-5.0, 1.0, -3.0, -1.0), -3.0);
        assert_eq!(box_coordinate(0.5, 1.0, -3.0, -1.0), -1.0);
    }

    fn scalar_grid(z: f64, t: f64, lower: f64, upper: f64) -> f64 {
        let f = |x: f64| 0.5 * (x - z) * (x - z) + t * x.abs();
        let steps = ((upper - lower) / 1e-6).round() as usize;
        let mut best = (f64::INFINITY, lower);
        for k in 0..=steps {
            let x = (lower + k as f64 * 1e-6).min(upper);
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn coordinate_solvers_match_scalar_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let z = rng.random_range(-2.0..2.0);
            let t = rng.random_range(0.0..1.0);
            let (lower, upper) = if rng.random_bool(0.5) {
                (rng.random_range(-1.5..0.0), rng.random_range(0.0..1.5))
            } else {
                let a: f64 = rng.random_range(-1.5..1.5);
                (a, a + rng.random_range(0.05..0.5))
            };
            let x = box_coordinate(z, t, lower, upper);
            assert!((x - scalar_grid(z, t, lower, upper)).abs() < 1e-5);
        }
    }

    fn random_feasible(set: &FeasibleSet, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match set {
            FeasibleSet::Unconstrained => (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
            FeasibleSet::Nonnegative => (0..n).map(|_| rng.random_range(0.0..3.0)).collect(),
            FeasibleSet::Box { lower, upper } => (0..n)
                .map(|i| rng.random_range(lower[i]..upper[i]))
                .collect(),
            FeasibleSet::Simplex { scale } => {
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s * scale).collect()
            }
            FeasibleSet::GeneralSmooth(_) => unreachable!(),
        }
    }

    #[test]
    fn solutions_are_certified_and_beat_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let n = rng.random_range(1..8);
            let set = match trial % 4 {
                0 => FeasibleSet::Unconstrained,
                1 => FeasibleSet::Nonnegative,
                2 => {
                    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.5)).collect();
                    let upper = lower.iter().map(|l| l + rng.random_range(0.1..1.5)).collect();
                    FeasibleSet::boxed(lower, upper).unwrap()
                }
                _ => FeasibleSet::simplex(rng.random_range(0.5..2.0)).unwrap(),
            };
            let xk = random_feasible(&set, n, &mut rng);
            let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
            let beta = rng.random_range(0.1..5.0);
            let lambda = rng.random_range(0.0..1.0);
            let inp = input(&xk, &grad, beta, lambda, &w, &set);
            let sol = solve_subproblem(&inp).unwrap();
            let cert = certify(&inp, &sol).unwrap();
            assert!(cert.residual <= stationarity_tolerance(&grad), "{}", cert.residual);
            assert!(cert.violation <= 1e-12 * (1.0 + norm_inf(&sol.x)) * n as f64);
            for (i, &yi) in sol.l1_subgradient.iter().enumerate() {
                assert!(yi.abs() <= 1.0);
                if sol.x[i] != 0.0 {
                    assert_eq!(yi, sol.x[i].signum());
                }
            }
            let value = inp.objective(&sol.x);
            for _ in 0..20 {
                let other = random_feasible(&set, n, &mut rng);
                assert!(value <= inp.objective(&other) + 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_point_fails_certificate() {
        let set = FeasibleSet::Nonnegative;
        let inp = input(&[1.0, 0.3], &[0.2, 0.4], 1.5, 0.2, &[1.0, 2.0], &set);
        let mut sol = solve_subproblem(&inp).unwrap();
        sol.x.iter_mut().for_each(|v| *v += 1e-3);
        let cert = certify(&inp, &sol).unwrap();
        assert!(cert.residual > stationarity_tolerance(inp.grad));
    }

    #[test]
    fn projection_is_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let n = rng.random_range(1..10);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (pa, _) = project_simplex(&a, 1.0).unwrap();
            let (pb, _) = project_simplex(&b, 1.0).unwrap();
            let d = |u: &[f64], v: &[f64]| {
                u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            };
            assert!(d(&pa, &pb) <= d(&a, &b) + 1e-12);
        }
    }
}
