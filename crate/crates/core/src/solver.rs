//! Iteratively reweighted l1 outer loop.
//!
//! Each iteration linearizes `f₀` at `xᵏ`, adds the proximal term
//! `(β/2)‖x − xᵏ‖²`, replaces `‖x‖ₚᵖ` by the weighted l1 norm with weights
//! `wᵢ = p(|xᵢᵏ| + εᵢᵏ)^{p−1}` and solves the resulting convex subproblem
//! exactly. Every step is checked against the sufficient-decrease inequality;
//! violations abort the run.
//!
//! Level-set boundedness of the smoothed objective is the caller's
//! responsibility and is not checked.

use std::sync::Arc;

use crate::calculus::{smoothed_objective, weight_unchecked};
use crate::error::{Error, Result};
use crate::linalg::estimate_lipschitz;
use crate::optimality::{multipliers_from_duals, penalized_support_residual};
use crate::problem::{
    check_finite, dist2, norm_inf, FeasibleSet, LpRegularizer, MultiplierSet, SmoothOracle,
};
use crate::subproblem::{certify, ExactSubproblem, SubproblemInput, SubproblemOracle, SubproblemSolution};

/// Feasibility tolerance for `x⁰` and every iterate.
pub const ITERATE_FEASIBILITY_TOL: f64 = 1e-10;

/// Relative tolerance of the descent check, `1e−10·(1 + |F|)`.
pub const DESCENT_RTOL: f64 = 1e-10;

/// Relative tolerance applied to subproblem certificates.
pub const SUBPROBLEM_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Smoothing decay, `εᵏ⁺¹ = α·εᵏ`.
    pub alpha: f64,
    /// `β = beta_factor·L_f`; must exceed 1/2.
    pub beta_factor: f64,
    pub eps0: f64,
    pub max_iters: usize,
    pub tol_step: f64,
    pub tol_residual: f64,
    /// Lower bound on each `εᵢ`, keeping weights finite.
    pub eps_floor: f64,
    /// Overrides the Lipschitz constant reported by the oracle.
    pub lipschitz: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            alpha: 0.998,
            beta_factor: 1.1,
            eps0: 1e-3,
            max_iters: 100_000,
            tol_step: 1e-10,
            tol_residual: 1e-8,
            eps_floor: 1e-14,
            lipschitz: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", "must lie in (0, 1)");
        }
        if !(self.beta_factor.is_finite() && self.beta_factor > 0.5) {
            return bad("beta_factor", "must exceed 1/2");
        }
        if !(self.eps0.is_finite() && self.eps0 > 0.0) {
            return bad("eps0", "must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be positive");
        }
        if !(self.tol_step >= 0.0) || !(self.tol_residual >= 0.0) {
            return bad("tolerance", "must be nonnegative");
        }
        if !(self.eps_floor >= 0.0 && self.eps_floor.is_finite()) {
            return bad("eps_floor", "must be nonnegative");
        }
        if let Some(l) = self.lipschitz {
            if !(l.is_finite() && l >= 0.0) {
                return bad("lipschitz", "must be nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Full history of a run. Index `k` of `iterates` and `objective_trace` is
/// `xᵏ`; index `k` of `step_norms`, `descent_slack`, `residuals` and `duals`
/// describes the step from `xᵏ` to `xᵏ⁺¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterates: Vec<Iterate>,
    /// `F(xᵏ; εᵏ)`.
    pub objective_trace: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub descent_slack: Vec<f64>,
    /// Support stationarity residual at `xᵏ⁺¹` with the subproblem multipliers.
    pub residuals: Vec<f64>,
    /// Multipliers of subproblem `k`, which certify `xᵏ⁺¹`.
    pub duals: Vec<MultiplierSet>,
    pub termination: Termination,
    pub lipschitz: f64,
    pub beta: f64,
}

impl SolveReport {
    pub fn x(&self) -> &[f64] {
        &self.iterates.last().expect("report has at least x⁰").x
    }

    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }

    /// `(xᵏ⁺¹, yᵏ)` pairs for sequential certification.
    pub fn certified_sequence(&self) -> Vec<(Vec<f64>, MultiplierSet)> {
        self.iterates[1..]
            .iter()
            .zip(&self.duals)
            .map(|(it, m)| (it.x.clone(), m.clone()))
            .collect()
    }
}

/// Sufficient-decrease slack
/// `[F(prev) − F(next)] − (m − L_f/2)‖x_next − x_prev‖²`.
pub fn assert_descent(prev: (&[f64], f64), next: (&[f64], f64), m: f64, lf: f64) -> f64 {
    let d = dist2(prev.0, next.0);
    (prev.1 - next.1) - (m - 0.5 * lf) * d * d
}

#[derive(Clone)]
pub struct Irl1Solver {
    params: SolverParams,
    oracle: Arc<dyn SubproblemOracle>,
}

impl Default for Irl1Solver {
    fn default() -> Self {
        Self::new(SolverParams::default())
    }
}

impl Irl1Solver {
    pub fn new(params: SolverParams) -> Self {
        Self {
            params,
            oracle: Arc::new(ExactSubproblem),
        }
    }

    /// Replaces the built-in subproblem solver for this instance.
    pub fn with_subproblem_oracle(mut self, oracle: Arc<dyn SubproblemOracle>) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn solve(
        &self,
        f: &dyn SmoothOracle,
        reg: &LpRegularizer,
        set: &FeasibleSet,
        x0: &[f64],
    ) -> Result<SolveReport> {
        let params = &self.params;
        params.validate()?;
        // λ = 0 is admitted: the loop is then projected gradient with step 1/β.
        let lambda = reg.lambda().ok_or(Error::InvalidParameter {
            name: "regularizer",
            reason: "the solver handles the penalized form only".into(),
        })?;
        let n = x0.len();
        if n == 0 {
            return Err(Error::Empty("x0"));
        }
        check_finite(x0, "x0")?;
        set.validate(n)?;
        let violation = set.violation(x0);
        if violation > ITERATE_FEASIBILITY_TOL {
            return Err(Error::Infeasible { violation });
        }
        let lf = match params.lipschitz {
            Some(l) => l,
            None => estimate_lipschitz(f)?,
        };
        // With a vanishing Lipschitz constant any β > 0 works; keep the factor.
        let beta = if lf > 0.0 { params.beta_factor * lf } else { params.beta_factor };
        let p = reg.p();

        let mut x = x0.to_vec();
        let mut eps = vec![params.eps0; n];
        let mut big_f = smoothed_objective(f, reg, &x, &eps)?;
        check_finite(&[big_f], "objective")?;

        let mut report = SolveReport {
            iterates: vec![Iterate { x: x.clone(), eps: eps.clone() }],
            objective_trace: vec![big_f],
            step_norms: Vec::new(),
            descent_slack: Vec::new(),
            residuals: Vec::new(),
            duals: Vec::new(),
            termination: Termination::MaxIterations,
            lipschitz: lf,
            beta,
        };
        let mut grad = f.gradient(&x);
        check_finite(&grad, "gradient")?;

        for k in 0..params.max_iters {
            let weights: Vec<f64> = x.iter().zip(&eps).map(|(xi, e)| weight_unchecked(*xi, *e, p)).collect();
            let input = SubproblemInput {
                xk: &x,
                grad: &grad,
                beta,
                lambda,
                weights: &weights,
                set,
            };
            let sol = self.oracle.solve(&input)?;
            verify_subproblem(&input, &sol, k)?;
            let x_next = sol.x.clone();
            let violation = set.violation(&x_next);
            if violation > ITERATE_FEASIBILITY_TOL {
                return Err(Error::Infeasible { violation });
            }

            let eps_next: Vec<f64> = eps.iter().map(|e| (params.alpha * e).max(params.eps_floor)).collect();
            let f_next = smoothed_objective(f, reg, &x_next, &eps_next)?;
            if !f_next.is_finite() {
                return Err(Error::NonFinite("objective"));
            }
            let slack = assert_descent((&x, big_f), (&x_next, f_next), beta, lf);
            let tolerance = DESCENT_RTOL * (1.0 + big_f.abs());
            if slack < -tolerance {
                return Err(Error::DescentViolation {
                    iteration: k,
                    slack,
                    tolerance,
                });
            }

            let grad_next = f.gradient(&x_next);
            check_finite(&grad_next, "gradient")?;
            let mult = multipliers_of(&sol, set);
            let residual = penalized_support_residual(&x_next, &grad_next, &mult, reg, set)?;
            let step = dist2(&x, &x_next);

            report.step_norms.push(step);
            report.descent_slack.push(slack);
            report.residuals.push(residual);
            report.duals.push(mult);
            report.objective_trace.push(f_next);
            report.iterates.push(Iterate {
                x: x_next.clone(),
                eps: eps_next.clone(),
            });

            x = x_next;
            eps = eps_next;
            grad = grad_next;
            big_f = f_next;

            if step <= params.tol_step && residual <= params.tol_residual {
                report.termination = Termination::Converged;
                break;
            }
        }
        log::debug!(
            "irl1: {:?} after {} iterations, F = {big_f:e}",
            report.termination,
            report.iterations()
        );
        Ok(report)
    }
}

/// Runs [`Irl1Solver`] with the built-in subproblem solver.
pub fn solve(
    f: &dyn SmoothOracle,
    reg: &LpRegularizer,
    set: &FeasibleSet,
    x0: &[f64],
    params: &SolverParams,
) -> Result<SolveReport> {
    Irl1Solver::new(params.clone()).solve(f, reg, set, x0)
}

fn verify_subproblem(input: &SubproblemInput<'_>, sol: &SubproblemSolution, iteration: usize) -> Result<()> {
    let cert = certify(input, sol)?;
    let scale = 1.0 + norm_inf(input.grad) + input.beta * (norm_inf(input.xk) + norm_inf(&sol.x));
    let tolerance = SUBPROBLEM_RTOL * scale;
    let residual = cert.residual.max(cert.violation);
    if residual > tolerance {
        return Err(Error::StationarityViolation {
            iteration,
            residual,
            tolerance,
        });
    }
    Ok(())
}

fn multipliers_of(sol: &SubproblemSolution, set: &FeasibleSet) -> MultiplierSet {
    match set {
        FeasibleSet::GeneralSmooth(cons) => {
            multipliers_from_duals(cons, sol.constraint_duals.as_deref().unwrap_or(&[]))
        }
        _ => MultiplierSet {
            set_dual: sol.equality_dual,
            ..MultiplierSet::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Affine, Constraint, FnOracle, Quadratic};
    use crate::subproblem::solve_subproblem;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d(a: f64) -> Quadratic {
        Quadratic::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, -2.0 * a))
            .unwrap()
            .with_constant(a * a)
    }

    /// Global minimizer of `(x − 1)² + λ√|x|` on a 1e−6 grid over [−2, 2].
    fn grid_minimizer(lambda: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=4_000_000 {
            let x = -2.0 + k as f64 * 1e-6;
            let v = (x - 1.0) * (x - 1.0) + lambda * x.abs().sqrt();
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn one_dimensional_matches_grid() {
        let f = one_d(1.0);
        let reg = LpRegularizer::penalty(0.5, 0.1).unwrap();
        let rep = solve(&f, &reg, &FeasibleSet::Unconstrained, &[1.0], &SolverParams::default()).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        assert!((rep.x()[0] - grid_minimizer(0.1)).abs() < 1e-4);
        assert!(rep.descent_slack.iter().all(|s| *s >= -1e-12));
    }

    #[test]
    fn zero_smooth_part_converges_to_origin() {
        let reg = LpRegularizer::penalty(0.5, 1.0).unwrap();
        let rep = solve(&Affine::zero(2), &reg, &FeasibleSet::Nonnegative, &[1.0, 1.0], &SolverParams::default())
            .unwrap();
        assert_eq!(rep.x(), &[0.0, 0.0]);
        assert_eq!(rep.termination, Termination::Converged);
    }

    fn random_portfolio(n: usize, seed: u64) -> Quadratic {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let r = &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
        let mu = DVector::from_fn(n, |_, _| rng.random_range(-0.5..1.0));
        Quadratic::new(r, -mu * 0.1).unwrap()
    }

    #[test]
    fn simplex_iterates_stay_feasible_and_descend() {
        let f = random_portfolio(5, 3);
        let reg = LpRegularizer::penalty(0.5, 0.01).unwrap();
        let set = FeasibleSet::simplex(1.0).unwrap();
        let rep = solve(&f, &reg, &set, &[0.2; 5], &SolverParams::default()).unwrap();
        for it in &rep.iterates {
            assert!(set.contains(&it.x, ITERATE_FEASIBILITY_TOL));
        }
        for (k, w) in rep.objective_trace.windows(2).enumerate() {
            assert!(w[1] <= w[0] + DESCENT_RTOL * (1.0 + w[0].abs()), "iteration {k}");
        }
        assert_eq!(rep.termination, Termination::Converged);
    }

    #[test]
    fn telescoped_bound_and_eps_trajectory() {
        let f = random_portfolio(8, 11);
        let reg = LpRegularizer::penalty(0.5, 0.02).unwrap();
        let params = SolverParams::default();
        let rep = solve(&f, &reg, &FeasibleSet::simplex(1.0).unwrap(), &[0.125; 8], &params).unwrap();
        let m = rep.beta - rep.lipschitz / 2.0;
        let mut sum = 0.0;
        for k in 0..rep.iterations() {
            sum += rep.step_norms[k] * rep.step_norms[k];
            let bound = (rep.objective_trace[0] - rep.objective_trace[k + 1]) / m + (k + 1) as f64 * 1e-10;
            assert!(sum <= bound, "iteration {k}");
        }
        let mut expected = params.eps0;
        for it in &rep.iterates {
            assert!(it.eps.iter().all(|e| e.to_bits() == expected.to_bits()));
            expected = (params.alpha * expected).max(params.eps_floor);
        }
        let again = solve(&f, &reg, &FeasibleSet::simplex(1.0).unwrap(), &[0.125; 8], &params).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn descent_slack_examples() {
        let x = [0.3, 0.4];
        assert_eq!(assert_descent((&x, 1.0), (&x, 1.0), 2.2, 2.0), 0.0);
        assert!(assert_descent((&x, 1.0), (&x, 0.9), 2.2, 2.0) > 0.0);
        let y = [0.5, 0.4];
        let forward = assert_descent((&x, 1.0), (&y, 0.9), 2.2, 2.0);
        let swapped = assert_descent((&y, 0.9), (&x, 1.0), 2.2, 2.0);
        assert!(forward > 0.0 && swapped < 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let reg = LpRegularizer::penalty(0.5, 0.1).unwrap();
        let set = FeasibleSet::simplex(1.0).unwrap();
        let f = random_portfolio(3, 1);
        let err = solve(&f, &reg, &set, &[0.5, 0.5, 0.5], &SolverParams::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        let bad = SolverParams {
            beta_factor: 0.5,
            ..SolverParams::default()
        };
        assert!(solve(&f, &reg, &set, &[1.0 / 3.0; 3], &bad).is_err());
        let ball = LpRegularizer::ball(0.5, 1.0).unwrap();
        assert!(solve(&f, &ball, &set, &[1.0 / 3.0; 3], &SolverParams::default()).is_err());
    }

    #[test]
    fn underestimated_lipschitz_aborts() {
        let f = Quadratic::new(DMatrix::from_element(1, 1, 20.0), DVector::from_element(1, -20.0)).unwrap();
        let reg = LpRegularizer::penalty(0.5, 0.1).unwrap();
        let params = SolverParams {
            lipschitz: Some(1.0),
            ..SolverParams::default()
        };
        let err = solve(&f, &reg, &FeasibleSet::Unconstrained, &[0.0001], &params).unwrap_err();
        assert!(matches!(err, Error::DescentViolation { iteration: 0, .. }), "{err:?}");
    }

    struct Builtin;
    impl SubproblemOracle for Builtin {
        fn solve(&self, input: &SubproblemInput<'_>) -> Result<SubproblemSolution> {
            solve_subproblem(input)
        }
    }

    struct Perturbed;
    impl SubproblemOracle for Perturbed {
        fn solve(&self, input: &SubproblemInput<'_>) -> Result<SubproblemSolution> {
            let mut sol = solve_subproblem(input)?;
            sol.x[0] += 1e-3;
            Ok(sol)
        }
    }

    #[test]
    fn hook_with_builtin_solver_is_identical() {
        let f = random_portfolio(6, 5);
        let reg = LpRegularizer::penalty(0.5, 0.01).unwrap();
        let set = FeasibleSet::simplex(1.0).unwrap();
        let x0 = [1.0 / 6.0; 6];
        let a = solve(&f, &reg, &set, &x0, &SolverParams::default()).unwrap();
        let b = Irl1Solver::default()
            .with_subproblem_oracle(Arc::new(Builtin))
            .solve(&f, &reg, &set, &x0)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inexact_hook_aborts() {
        let f = one_d(1.0);
        let reg = LpRegularizer::penalty(0.5, 0.1).unwrap();
        let err = Irl1Solver::default()
            .with_subproblem_oracle(Arc::new(Perturbed))
            .solve(&f, &reg, &FeasibleSet::Unconstrained, &[1.0])
            .unwrap_err();
        assert!(matches!(err, Error::StationarityViolation { iteration: 0, .. }));
    }

    /// Exact solver for `{x : x₁ + x₂ ≤ 1}` by bisection on the multiplier.
    struct HalfPlane;
    impl SubproblemOracle for HalfPlane {
        fn solve(&self, input: &SubproblemInput<'_>) -> Result<SubproblemSolution> {
            let z = input.center();
            let t: Vec<f64> = input.weights.iter().map(|w| input.lambda * w / input.beta).collect();
            let at = |y: f64| -> Vec<f64> {
                z.iter()
                    .zip(&t)
                    .map(|(zi, ti)| {
                        let v = zi - y / input.beta;
                        v.signum() * (v.abs() - ti).max(0.0)
                    })
                    .collect()
            };
            let sum = |x: &[f64]| x.iter().sum::<f64>();
            let mut y = 0.0;
            if sum(&at(0.0)) > 1.0 {
                let (mut lo, mut hi) = (0.0, 1.0);
                while sum(&at(hi)) > 1.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if sum(&at(mid)) > 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                y = hi;
            }
            let mut x = at(y);
            if y > 0.0 {
                // Put the residual sum error on the largest coordinate.
                let s = sum(&x);
                let i = (0..x.len()).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
                x[i] += 1.0 - s;
            }
            let mut sol = SubproblemSolution::primal(x);
            sol.constraint_duals = Some(vec![y]);
            Ok(sol)
        }
    }

    #[test]
    fn general_set_through_hook_matches_grid() {
        let cons = vec![Constraint::inequality(Arc::new(Affine::new(vec![1.0, 1.0], -1.0))).convex()];
        let set = FeasibleSet::GeneralSmooth(cons);
        // f = (x₁ − 1)² + (x₂ − 1)²
        let f = FnOracle::new(
            |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2),
            |x: &[f64]| vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0)],
        )
        .with_lipschitz(2.0);
        let reg = LpRegularizer::penalty(0.5, 0.05).unwrap();
        let rep = Irl1Solver::default()
            .with_subproblem_oracle(Arc::new(HalfPlane))
            .solve(&f, &reg, &set, &[0.0, 0.0])
            .unwrap();
        let x = rep.x();
        // By symmetry the minimizer is (½, ½) on the line x₁ + x₂ = 1 or a
        // sparse corner; scan the boundary line.
        let obj = |a: f64, b: f64| (a - 1.0).powi(2) + (b - 1.0).powi(2) + 0.05 * (a.abs().sqrt() + b.abs().sqrt());
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=2_000_000 {
            let a = -0.5 + k as f64 * 1e-6;
            let v = obj(a, 1.0 - a);
            if v < best.0 {
                best = (v, a);
            }
        }
        assert!((obj(x[0], x[1]) - best.0).abs() < 1e-6, "{x:?} vs {best:?}");
    }
}
