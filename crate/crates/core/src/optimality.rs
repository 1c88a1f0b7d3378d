//! Numerical certification of first-order optimality conditions for
//! lp-regularized and lp-ball-constrained problems.
//!
//! All stationarity residuals live on the support `𝒩(x)`: coordinates where
//! `x` vanishes carry an unrestricted component of `∂φ` and impose nothing
//! (for `p < 1`).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};

use crate::calculus::{boundary_tolerance, lp_derivative, phi_unchecked, Support};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, nnls, singular_ratio};
use crate::lp::{LinearProgram, Relation};
use crate::problem::{
    check_finite, dist2, norm_inf, Constraint, ConstraintKind, FeasibleSet, LpRegularizer,
    MultiplierSet, ProblemKind, SmoothOracle,
};
use crate::subproblem::{certify_coordinate, CoordinateCone};

/// Feasibility slack accepted by the KKT checkers.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Activity band for inequality constraints, relative to `1 + ‖∇fⱼ(x)‖∞`.
pub const ACTIVITY_TOL: f64 = 1e-8;

/// Threshold on the optimal slack of the strict-direction program.
pub const EMFCQ_SIGMA_TOL: f64 = 1e-10;

/// Threshold on `σ_min/σ_max` for linear independence.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

/// Maximal distance between the last iterate and the claimed limit.
pub const AKKT_LIMIT_TOL: f64 = 1e-6;

/// Number of trailing residuals inspected by [`akkt_certify`].
pub const AKKT_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    KktPenalized,
    KktBall,
    Akkt,
    Emfcq,
    HorizonObstruction,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::KktPenalized => "KKT-P1",
            Condition::KktBall => "KKT-P2",
            Condition::Akkt => "AKKT",
            Condition::Emfcq => "EMFCQ",
            Condition::HorizonObstruction => "HORIZON",
        })
    }
}

/// Verdict record for one optimality condition at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCertificate {
    pub condition: Condition,
    /// `max |detail|`.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub support: Support,
    pub multipliers: MultiplierSet,
    /// Stationarity residual per support index (in support order), followed by
    /// complementarity residuals `|yⱼ fⱼ(x)|` of the inequality multipliers.
    pub detail: Vec<f64>,
    pub remarks: Vec<String>,
}

impl OptimalityCertificate {
    fn new(
        condition: Condition,
        support: Support,
        multipliers: MultiplierSet,
        detail: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        let residual = detail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            condition,
            residual,
            tolerance,
            passed: residual <= tolerance,
            support,
            multipliers,
            detail,
            remarks: Vec::new(),
        }
    }

    /// One-line record with 17-significant-digit decimals.
    pub fn to_record(&self) -> String {
        let mut line = format!(
            "condition={} verdict={} residual={} tolerance={} support={}",
            self.condition,
            if self.passed { "pass" } else { "fail" },
            fmt17(self.residual),
            fmt17(self.tolerance),
            join_indices(self.support.nonzero()),
        );
        let m = &self.multipliers;
        if let Some(nu) = m.set_dual {
            let _ = write!(line, " set_dual={}", fmt17(nu));
        }
        if let Some(y0) = m.ball {
            let _ = write!(line, " ball={}", fmt17(y0));
        }
        for (j, y) in &m.equality {
            let _ = write!(line, " eq[{j}]={}", fmt17(*y));
        }
        for (j, y) in &m.active_inequality {
            let _ = write!(line, " ineq[{j}]={}", fmt17(*y));
        }
        line
    }
}

/// Renders certificates one record per line.
pub fn write_records(certs: &[OptimalityCertificate]) -> String {
    certs.iter().map(|c| c.to_record() + "\n").collect()
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_indices(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

/// How the lp term enters stationarity: `coef·sign(xᵢ)p|xᵢ|^{p−1}`.
#[derive(Debug, Clone, Copy)]
struct LpTerm {
    coef: f64,
    p: f64,
}

fn cone_residual(v: f64, cone: CoordinateCone) -> f64 {
    (v + cone.project(-v)).abs()
}

fn coordinate_cone(set: &FeasibleSet, x: &[f64], i: usize) -> CoordinateCone {
    match set {
        FeasibleSet::Nonnegative | FeasibleSet::Simplex { .. } if x[i] == 0.0 => {
            CoordinateCone::NonPositive
        }
        FeasibleSet::Box { lower, upper } if x[i] == lower[i] => CoordinateCone::NonPositive,
        FeasibleSet::Box { upper, .. } if x[i] == upper[i] => CoordinateCone::NonNegative,
        _ => CoordinateCone::Zero,
    }
}

/// `Σⱼ yⱼ ∇fⱼ(x)` over the multipliers whose index passes `keep`.
fn constraint_combination(
    cons: &[Constraint],
    x: &[f64],
    mult: &MultiplierSet,
    keep: &dyn Fn(usize) -> bool,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    for (&j, &y) in mult.equality.iter().chain(&mult.active_inequality) {
        let c = cons.get(j).ok_or(Error::InvalidParameter {
            name: "multipliers",
            reason: format!("constraint index {j} out of range"),
        })?;
        if !keep(j) || y == 0.0 {
            continue;
        }
        for (o, g) in out.iter_mut().zip(c.oracle.gradient(x)) {
            *o += y * g;
        }
    }
    Ok(out)
}

/// Stationarity residual per index of `indices`:
/// `|∇ᵢf₀ + coef·sign(xᵢ)p|xᵢ|^{p−1} + (normal-cone element)ᵢ|`, where the
/// normal-cone element is assembled from the multipliers for general sets and
/// chosen optimally per coordinate for separable sets.
fn stationarity_detail(
    x: &[f64],
    grad: &[f64],
    term: LpTerm,
    set: &FeasibleSet,
    mult: &MultiplierSet,
    combination: &[f64],
    indices: &[usize],
) -> Result<Vec<f64>> {
    let shift = match set {
        FeasibleSet::Simplex { .. } => mult.set_dual.ok_or(Error::InvalidParameter {
            name: "multipliers",
            reason: "simplex sets need the equality multiplier `set_dual`".into(),
        })?,
        _ => 0.0,
    };
    Ok(indices
        .iter()
        .map(|&i| {
            let cone = coordinate_cone(set, x, i);
            let v = grad[i] + combination[i] + shift;
            if x[i] != 0.0 {
                cone_residual(v + term.coef * lp_derivative(x[i], term.p), cone)
            } else if term.p == 1.0 {
                certify_coordinate(0.0, v, term.coef, cone).2
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

fn general_constraints(set: &FeasibleSet) -> &[Constraint] {
    match set {
        FeasibleSet::GeneralSmooth(c) => c,
        _ => &[],
    }
}

fn check_feasible(set: &FeasibleSet, x: &[f64]) -> Result<()> {
    let violation = set.violation(x);
    if violation > FEASIBILITY_TOL {
        Err(Error::Infeasible { violation })
    } else {
        Ok(())
    }
}

fn complementarity(cons: &[Constraint], x: &[f64], mult: &MultiplierSet) -> Vec<f64> {
    mult.active_inequality
        .iter()
        .filter_map(|(&j, &y)| cons.get(j).map(|c| (y * c.oracle.value(x)).abs()))
        .collect()
}

/// Zero coordinates of an l1 (p = 1) point still constrain the gradient to an
/// interval; appended to the detail for that case only.
fn l1_zero_detail(
    x: &[f64],
    grad: &[f64],
    term: LpTerm,
    set: &FeasibleSet,
    mult: &MultiplierSet,
    combination: &[f64],
    support: &Support,
) -> Result<Vec<f64>> {
    if term.p != 1.0 {
        return Ok(Vec::new());
    }
    stationarity_detail(x, grad, term, set, mult, combination, support.zero())
}

/// KKT residual for `min f₀ + λ‖x‖ₚᵖ` over `Γ`.
pub fn kkt_residual_p1(
    x: &[f64],
    mult: &MultiplierSet,
    oracle: &dyn SmoothOracle,
    reg: &LpRegularizer,
    set: &FeasibleSet,
    tolerance: f64,
) -> Result<OptimalityCertificate> {
    let lambda = reg.lambda().ok_or(Error::InvalidParameter {
        name: "regularizer",
        reason: "penalized KKT needs a penalty weight".into(),
    })?;
    check_finite(x, "KKT point")?;
    mult.validate()?;
    check_feasible(set, x)?;
    let grad = oracle.gradient(x);
    check_finite(&grad, "gradient")?;
    let support = Support::of(x);
    let cons = general_constraints(set);
    let comb = constraint_combination(cons, x, mult, &|_| true)?;
    let term = LpTerm { coef: lambda, p: reg.p() };
    let mut detail = stationarity_detail(x, &grad, term, set, mult, &comb, support.nonzero())?;
    detail.extend(l1_zero_detail(x, &grad, term, set, mult, &comb, &support)?);
    detail.extend(complementarity(cons, x, mult));
    Ok(OptimalityCertificate::new(
        Condition::KktPenalized,
        support,
        mult.clone(),
        detail,
        tolerance,
    ))
}

/// Support residual used by the solver loop, with a precomputed gradient.
pub(crate) fn penalized_support_residual(
    x: &[f64],
    grad: &[f64],
    mult: &MultiplierSet,
    reg: &LpRegularizer,
    set: &FeasibleSet,
) -> Result<f64> {
    let support = Support::of(x);
    let comb = constraint_combination(general_constraints(set), x, mult, &|_| true)?;
    let term = LpTerm {
        coef: reg.lambda().unwrap_or(0.0),
        p: reg.p(),
    };
    let detail = stationarity_detail(x, grad, term, set, mult, &comb, support.nonzero())?;
    Ok(norm_inf(&detail))
}

/// KKT residual for `min f₀` over `Γ ∩ {‖x‖ₚᵖ ≤ θ}` at a point on the sphere
/// `‖x‖ₚᵖ = θ`.
pub fn kkt_residual_p2(
    x: &[f64],
    mult: &MultiplierSet,
    oracle: &dyn SmoothOracle,
    reg: &LpRegularizer,
    set: &FeasibleSet,
    tolerance: f64,
) -> Result<OptimalityCertificate> {
    let theta = reg.theta().ok_or(Error::InvalidParameter {
        name: "regularizer",
        reason: "ball-constrained KKT needs a radius".into(),
    })?;
    check_finite(x, "KKT point")?;
    mult.validate()?;
    check_on_sphere(x, reg.p(), theta)?;
    check_feasible(set, x)?;
    let grad = oracle.gradient(x);
    check_finite(&grad, "gradient")?;
    let support = Support::of(x);
    let cons = general_constraints(set);
    let comb = constraint_combination(cons, x, mult, &|_| true)?;
    let term = LpTerm {
        coef: mult.ball.unwrap_or(0.0),
        p: reg.p(),
    };
    let mut detail = stationarity_detail(x, &grad, term, set, mult, &comb, support.nonzero())?;
    detail.extend(l1_zero_detail(x, &grad, term, set, mult, &comb, &support)?);
    detail.extend(complementarity(cons, x, mult));
    let mut cert =
        OptimalityCertificate::new(Condition::KktBall, support, mult.clone(), detail, tolerance);
    if matches!(set, FeasibleSet::Unconstrained) {
        cert.remarks
            .push("unconstrained case: a nonnegative ball multiplier alone certifies".into());
    }
    Ok(cert)
}

fn check_on_sphere(x: &[f64], p: f64, theta: f64) -> Result<()> {
    let value = phi_unchecked(x, p);
    let tol = boundary_tolerance(theta);
    if value > theta + tol {
        Err(Error::OutsideLpBall { phi: value, theta })
    } else if value < theta - tol {
        Err(Error::InteriorOfLpBall { phi: value, theta })
    } else {
        Ok(())
    }
}

/// Inequality constraints active at `x`.
pub fn active_inequalities(cons: &[Constraint], x: &[f64]) -> Vec<usize> {
    cons.iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ConstraintKind::Inequality)
        .filter(|(_, c)| {
            let scale = 1.0 + norm_inf(&c.oracle.gradient(x));
            c.oracle.value(x).abs() <= ACTIVITY_TOL * scale
        })
        .map(|(j, _)| j)
        .collect()
}

/// Multipliers recovered by least squares, with a rank diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierFit {
    pub multipliers: MultiplierSet,
    /// The support-restricted multiplier columns are linearly dependent; the
    /// minimum-norm multipliers are returned.
    pub rank_deficient: bool,
}

enum Column {
    Equality(usize),
    Inequality(usize),
    Ball,
    SetDual,
}

/// Multipliers minimizing the support stationarity residual, subject to sign
/// constraints on inequality and ball multipliers.
pub fn fit_multipliers(
    x: &[f64],
    oracle: &dyn SmoothOracle,
    reg: &LpRegularizer,
    set: &FeasibleSet,
) -> Result<MultiplierFit> {
    check_finite(x, "fit point")?;
    let support = Support::of(x);
    if support.is_empty() {
        return Err(Error::Empty("support of the point"));
    }
    let idx = support.nonzero();
    let grad = oracle.gradient(x);
    check_finite(&grad, "gradient")?;
    let p = reg.p();

    let mut rhs: Vec<f64> = idx.iter().map(|&i| -grad[i]).collect();
    let mut free: Vec<(Column, Vec<f64>)> = Vec::new();
    let mut signed: Vec<(Column, Vec<f64>)> = Vec::new();
    match reg.kind() {
        ProblemKind::Penalized => {
            let lambda = reg.lambda().unwrap_or(0.0);
            for (r, &i) in rhs.iter_mut().zip(idx) {
                *r -= lambda * lp_derivative(x[i], p);
            }
        }
        ProblemKind::BallConstrained => {
            signed.push((Column::Ball, idx.iter().map(|&i| lp_derivative(x[i], p)).collect()));
        }
    }
    match set {
        FeasibleSet::Simplex { .. } => free.push((Column::SetDual, vec![1.0; idx.len()])),
        FeasibleSet::GeneralSmooth(cons) => {
            let active = active_inequalities(cons, x);
            for (j, c) in cons.iter().enumerate() {
                let g = c.oracle.gradient(x);
                let col = idx.iter().map(|&i| g[i]).collect();
                match c.kind {
                    ConstraintKind::Equality => free.push((Column::Equality(j), col)),
                    ConstraintKind::Inequality if active.contains(&j) => {
                        signed.push((Column::Inequality(j), col))
                    }
                    ConstraintKind::Inequality => {}
                }
            }
        }
        _ => {}
    }

    let m = idx.len();
    let to_matrix = |cols: &[(Column, Vec<f64>)]| {
        DMatrix::from_fn(m, cols.len(), |r, c| cols[c].1[r])
    };
    let a_free = to_matrix(&free);
    let a_signed = to_matrix(&signed);
    let b = DVector::from_vec(rhs);

    let (y_free, y_signed) = if free.is_empty() {
        (DVector::zeros(0), nnls(&a_signed, &b))
    } else {
        // Project out the free block, solve the signed block, back-substitute.
        let pinv = a_free
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::InvalidParameter {
                name: "multipliers",
                reason: e.to_string(),
            })?;
        let proj = DMatrix::identity(m, m) - &a_free * &pinv;
        let y_signed = nnls(&(&proj * &a_signed), &(&proj * &b));
        let y_free = &pinv * (&b - &a_signed * &y_signed);
        (y_free, y_signed)
    };

    let full = DMatrix::from_fn(m, free.len() + signed.len(), |r, c| {
        if c < free.len() {
            a_free[(r, c)]
        } else {
            a_signed[(r, c - free.len())]
        }
    });
    let (_, rank) = lstsq(&full, &DVector::zeros(m));
    let rank_deficient = rank < full.ncols();

    let mut multipliers = MultiplierSet::empty();
    for ((col, _), y) in free.iter().zip(y_free.iter()).chain(signed.iter().zip(y_signed.iter())) {
        match col {
            Column::Equality(j) => {
                multipliers.equality.insert(*j, *y);
            }
            Column::Inequality(j) => {
                multipliers.active_inequality.insert(*j, y.max(0.0));
            }
            Column::Ball => multipliers.ball = Some(y.max(0.0)),
            Column::SetDual => multipliers.set_dual = Some(*y),
        }
    }
    if rank_deficient {
        log::warn!("multiplier fit: support-restricted gradient block is rank deficient");
    }
    Ok(MultiplierFit {
        multipliers,
        rank_deficient,
    })
}

/// Residual sequence of an AKKT certification.
#[derive(Debug, Clone, PartialEq)]
pub struct AkktReport {
    /// Support of the limit point; residuals are restricted to it.
    pub support: Support,
    pub residuals: Vec<f64>,
    pub tail_max: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub warning: Option<String>,
}

/// Evaluates the KKT residual of each `(xᵏ, yᵏ)` on the support of `limit`,
/// keeping only the multipliers of equalities and of inequalities active at
/// `limit`. Passes when the largest of the last [`AKKT_TAIL`] residuals is
/// below `tolerance`.
pub fn akkt_certify(
    iterates: &[(Vec<f64>, MultiplierSet)],
    limit: &[f64],
    oracle: &dyn SmoothOracle,
    reg: &LpRegularizer,
    set: &FeasibleSet,
    tolerance: f64,
) -> Result<AkktReport> {
    let (last, _) = iterates.last().ok_or(Error::Empty("iterate sequence"))?;
    check_finite(limit, "limit point")?;
    let distance = dist2(last, limit);
    if !(distance < AKKT_LIMIT_TOL) {
        return Err(Error::NotConverged { distance });
    }
    let support = Support::of(limit);
    if support.is_empty() {
        return Ok(AkktReport {
            support,
            residuals: vec![0.0; iterates.len()],
            tail_max: 0.0,
            tolerance,
            passed: true,
            warning: Some("limit has empty support; the AKKT condition holds vacuously".into()),
        });
    }
    let cons = general_constraints(set);
    let active = active_inequalities(cons, limit);
    let keep = |j: usize| cons[j].kind == ConstraintKind::Equality || active.contains(&j);

    let mut residuals = Vec::with_capacity(iterates.len());
    for (x, mult) in iterates {
        let grad = oracle.gradient(x);
        let comb = constraint_combination(cons, x, mult, &keep)?;
        let term = LpTerm {
            coef: match reg.kind() {
                ProblemKind::Penalized => reg.lambda().unwrap_or(0.0),
                ProblemKind::BallConstrained => mult.ball.unwrap_or(0.0),
            },
            p: reg.p(),
        };
        let detail = stationarity_detail(x, &grad, term, set, mult, &comb, support.nonzero())?;
        residuals.push(norm_inf(&detail));
    }
    let tail_start = residuals.len().saturating_sub(AKKT_TAIL);
    let tail_max = residuals[tail_start..].iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(AkktReport {
        support,
        residuals,
        tail_max,
        tolerance,
        passed: tail_max < tolerance,
        warning: None,
    })
}

/// Outcome of the extended Mangasarian–Fromovitz check.
#[derive(Debug, Clone, PartialEq)]
pub struct EmfcqOutcome {
    pub passed: bool,
    pub linearly_independent: bool,
    /// Optimal slack of the strict-direction program (`None` when not solved).
    pub sigma: Option<f64>,
    /// Direction `d` on the support (support order) witnessing a pass.
    pub witness: Option<Vec<f64>>,
    pub support: Support,
    pub active: Vec<usize>,
    pub diagnostic: Option<String>,
}

/// Extended MFCQ at `x` for the smooth constraints `cons`, restricted to the
/// support of `x`. For ball-constrained problems the lp-ball row
/// `p·sign(x)|x|^{p−1}` joins the strict inequalities.
pub fn emfcq_check(x: &[f64], cons: &[Constraint], reg: &LpRegularizer) -> Result<EmfcqOutcome> {
    check_finite(x, "EMFCQ point")?;
    let set = FeasibleSet::GeneralSmooth(cons.to_vec());
    check_feasible(&set, x)?;
    let support = Support::of(x);
    let active = active_inequalities(cons, x);
    if support.is_empty() {
        return Ok(EmfcqOutcome {
            passed: false,
            linearly_independent: false,
            sigma: None,
            witness: None,
            support,
            active,
            diagnostic: Some("empty support: the condition lives on the support subspace".into()),
        });
    }
    let idx = support.nonzero();
    let restrict = |g: Vec<f64>| -> Vec<f64> { idx.iter().map(|&i| g[i]).collect() };

    let equalities: Vec<Vec<f64>> = cons
        .iter()
        .filter(|c| c.kind == ConstraintKind::Equality)
        .map(|c| restrict(c.oracle.gradient(x)))
        .collect();
    let mut strict: Vec<Vec<f64>> = active
        .iter()
        .map(|&j| restrict(cons[j].oracle.gradient(x)))
        .collect();
    if reg.kind() == ProblemKind::BallConstrained {
        strict.push(idx.iter().map(|&i| lp_derivative(x[i], reg.p())).collect());
    }

    let rows: Vec<&Vec<f64>> = equalities.iter().chain(&strict).collect();
    let block = DMatrix::from_fn(rows.len(), idx.len(), |r, c| rows[r][c]);
    let linearly_independent = rows.is_empty() || singular_ratio(&block) > INDEPENDENCE_TOL;

    // Variables u = d + 1 ∈ [0, 2]ⁿ and σ ∈ [0, 1]; maximize σ.
    let m = idx.len();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for i in 0..m {
        let mut row = vec![0.0; m + 1];
        row[i] = 1.0;
        lp.add_row(row, Relation::Le, 2.0);
    }
    let mut sigma_cap = vec![0.0; m + 1];
    sigma_cap[m] = 1.0;
    lp.add_row(sigma_cap, Relation::Le, 1.0);
    for g in &equalities {
        let mut row = g.clone();
        row.push(0.0);
        lp.add_row(row, Relation::Eq, g.iter().sum());
    }
    for g in &strict {
        let mut row = g.clone();
        row.push(1.0);
        lp.add_row(row, Relation::Le, g.iter().sum());
    }
    let (sigma, witness) = match lp.maximize() {
        Ok(sol) => {
            let d: Vec<f64> = sol.x[..m].iter().map(|u| u - 1.0).collect();
            (sol.x[m], Some(d))
        }
        Err(Error::LpInfeasible) => (0.0, None),
        Err(e) => return Err(e),
    };
    let direction_exists = sigma > EMFCQ_SIGMA_TOL;
    let passed = linearly_independent && direction_exists;
    let diagnostic = if !linearly_independent {
        Some("support-restricted constraint gradients are linearly dependent".into())
    } else if !direction_exists {
        Some("no direction strictly decreases all active constraints".into())
    } else {
        None
    };
    Ok(EmfcqOutcome {
        passed,
        linearly_independent,
        sigma: Some(sigma),
        witness: if passed { witness } else { None },
        support,
        active,
        diagnostic,
    })
}

/// Searches for `v ≠ 0` in the horizon subdifferential of `‖·‖ₚᵖ` at `x`
/// (i.e. supported on the zero set) with `−v` normal to `Γ` at `x`.
///
/// Such a `v` invalidates the stationarity condition `0 ∈ ∇f₀ + λ∂φ + N_Γ` as a
/// necessary condition. The witness is normalized to unit max-norm.
pub fn horizon_obstruction(
    x: &[f64],
    reg: &LpRegularizer,
    set: &FeasibleSet,
) -> Result<Option<Vec<f64>>> {
    check_finite(x, "horizon point")?;
    let n = x.len();
    let support = Support::of(x);
    if reg.p() == 1.0 || support.zero().is_empty() {
        return Ok(None);
    }
    let unit = |i: usize, s: f64| {
        let mut v = vec![0.0; n];
        v[i] = s;
        Some(v)
    };
    Ok(match set {
        FeasibleSet::Unconstrained => None,
        // The normal cone of x ≥ 0 at a zero coordinate is (−∞, 0].
        FeasibleSet::Nonnegative => unit(support.zero()[0], 1.0),
        // On the simplex the support is nonempty, forcing ν = 0, and every zero
        // coordinate carries a free nonnegative bound multiplier.
        FeasibleSet::Simplex { .. } => unit(support.zero()[0], 1.0),
        FeasibleSet::Box { lower, upper } => support.zero().iter().find_map(|&i| {
            if lower[i] == 0.0 {
                unit(i, 1.0)
            } else if upper[i] == 0.0 {
                unit(i, -1.0)
            } else {
                None
            }
        }),
        FeasibleSet::GeneralSmooth(cons) => general_horizon_witness(x, cons, &support)?,
    })
}

/// Finds multipliers `y` (sign-constrained on active inequalities, `|yⱼ| ≤ 1`)
/// with `Σ yⱼ∇fⱼ` vanishing on the support and nonzero on the zero set.
fn general_horizon_witness(
    x: &[f64],
    cons: &[Constraint],
    support: &Support,
) -> Result<Option<Vec<f64>>> {
    let n = x.len();
    let active = active_inequalities(cons, x);
    // (gradient, free sign?)
    let columns: Vec<(Vec<f64>, bool)> = cons
        .iter()
        .enumerate()
        .filter_map(|(j, c)| match c.kind {
            ConstraintKind::Equality => Some((c.oracle.gradient(x), true)),
            ConstraintKind::Inequality if active.contains(&j) => {
                Some((c.oracle.gradient(x), false))
            }
            ConstraintKind::Inequality => None,
        })
        .collect();
    if columns.is_empty() {
        return Ok(None);
    }
    // Free multipliers are split as y⁺ − y⁻; every variable lies in [0, 1].
    let mut var_cols: Vec<Vec<f64>> = Vec::new();
    for (g, free) in &columns {
        var_cols.push(g.clone());
        if *free {
            var_cols.push(g.iter().map(|v| -v).collect());
        }
    }
    let nv = var_cols.len();
    for &zi in support.zero() {
        for sign in [1.0, -1.0] {
            let objective: Vec<f64> = var_cols.iter().map(|g| sign * g[zi]).collect();
            let mut lp = LinearProgram::new(objective);
            for k in 0..nv {
                let mut row = vec![0.0; nv];
                row[k] = 1.0;
                lp.add_row(row, Relation::Le, 1.0);
            }
            for &i in support.nonzero() {
                lp.add_row(var_cols.iter().map(|g| g[i]).collect(), Relation::Eq, 0.0);
            }
            let sol = match lp.maximize() {
                Ok(s) => s,
                Err(Error::LpInfeasible) => continue,
                Err(e) => return Err(e),
            };
            if sol.value > EMFCQ_SIGMA_TOL {
                let mut v = vec![0.0; n];
                for (g, y) in var_cols.iter().zip(&sol.x) {
                    for &i in support.zero() {
                        v[i] -= y * g[i];
                    }
                }
                let scale = norm_inf(&v);
                v.iter_mut().for_each(|c| *c /= scale);
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

/// Which sufficient condition for the extended cone-continuity property
/// applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EccpCase {
    /// `Γ` is closed and convex and no horizon obstruction exists.
    ConvexSet,
    /// The EMFCQ holds.
    Emfcq,
}

/// Reports a sufficient condition under which AKKT points are KKT points, or
/// `None` when none of the checkable conditions applies.
pub fn eccp_sufficient_condition(
    x: &[f64],
    reg: &LpRegularizer,
    set: &FeasibleSet,
) -> Result<Option<EccpCase>> {
    if set.is_convex() && horizon_obstruction(x, reg, set)?.is_none() {
        return Ok(Some(EccpCase::ConvexSet));
    }
    if let FeasibleSet::GeneralSmooth(cons) = set {
        if emfcq_check(x, cons, reg)?.passed {
            return Ok(Some(EccpCase::Emfcq));
        }
    }
    Ok(None)
}

/// Portfolio optimality residual
/// `Σ_{i∈𝒩(x)} |(Rx)ᵢ − cᵢ + λp·xᵢ^{p−1} + ν|` for `x ≥ 0`.
pub fn alpha_residual(
    x: &[f64],
    nu: f64,
    r: &DMatrix<f64>,
    c: &[f64],
    reg: &LpRegularizer,
) -> Result<f64> {
    let n = x.len();
    if r.nrows() != n || r.ncols() != n || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.nrows().min(c.len()),
        });
    }
    check_finite(x, "alpha residual point")?;
    if let Some(i) = x.iter().position(|v| *v < 0.0) {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("component {i} is negative"),
        });
    }
    let support = Support::of(x);
    if support.is_empty() {
        return Err(Error::Empty("support of the portfolio"));
    }
    let lambda = reg.lambda().unwrap_or(0.0);
    let p = reg.p();
    let rx = r * DVector::from_column_slice(x);
    Ok(support
        .nonzero()
        .iter()
        .map(|&i| (rx[i] - c[i] + lambda * p * x[i].powf(p - 1.0) + nu).abs())
        .sum())
}

/// Multipliers keyed by constraint index, from a dense dual vector.
pub fn multipliers_from_duals(cons: &[Constraint], duals: &[f64]) -> MultiplierSet {
    let mut m = MultiplierSet::empty();
    let mut eq = BTreeMap::new();
    let mut ineq = BTreeMap::new();
    for (j, (c, &y)) in cons.iter().zip(duals).enumerate() {
        match c.kind {
            ConstraintKind::Equality => {
                eq.insert(j, y);
            }
            ConstraintKind::Inequality if y != 0.0 => {
                ineq.insert(j, y);
            }
            ConstraintKind::Inequality => {}
        }
    }
    m.equality = eq;
    m.active_inequality = ineq;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Affine, FnOracle, Quadratic};
    use std::sync::Arc;

    fn reg(p: f64, lambda: f64) -> LpRegularizer {
        LpRegularizer::penalty(p, lambda).unwrap()
    }

    fn disk() -> Constraint {
        Constraint::inequality(Arc::new(FnOracle::new(
            |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2) - 1.0,
            |x: &[f64]| vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0)],
        )))
        .convex()
    }

    #[test]
    fn constructed_p1_point_has_zero_residual() {
        let (p, lambda, x1): (f64, f64, f64) = (0.5, 0.7, 2.0);
        let g1 = -lambda * p * x1.powf(p - 1.0);
        let f = Affine::new(vec![g1, 3.0], 0.0);
        let cert = kkt_residual_p1(
            &[x1, 0.0],
            &MultiplierSet::empty(),
            &f,
            &reg(p, lambda),
            &FeasibleSet::Unconstrained,
            1e-12,
        )
        .unwrap();
        assert_eq!(cert.residual, 0.0);
        assert!(cert.passed);
        assert_eq!(cert.support.nonzero(), &[0]);
    }

    #[test]
    fn zero_coordinates_do_not_change_residuals() {
        let f = Quadratic::new(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, 0.5]))
            .unwrap();
        let r = reg(0.5, 0.1);
        let a = kkt_residual_p1(&[0.9, 0.3], &MultiplierSet::empty(), &f, &r, &FeasibleSet::Unconstrained, 1e-6)
            .unwrap();
        let g = Quadratic::new(DMatrix::identity(3, 3), DVector::from_vec(vec![-1.0, 0.0, 0.5]))
            .unwrap();
        let b = kkt_residual_p1(
            &[0.9, 0.0, 0.3],
            &MultiplierSet::empty(),
            &g,
            &r,
            &FeasibleSet::Unconstrained,
            1e-6,
        )
        .unwrap();
        assert_eq!(a.residual, b.residual);
        assert_eq!(a.detail, b.detail);
    }

    #[test]
    fn negative_inequality_multiplier_rejected() {
        let mut m = MultiplierSet::empty();
        m.active_inequality.insert(0, -1.0);
        let err = kkt_residual_p1(
            &[0.0, 1.0],
            &m,
            &Affine::zero(2),
            &reg(0.5, 1.0),
            &FeasibleSet::GeneralSmooth(vec![disk()]),
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NegativeMultiplier { .. }));
    }

    #[test]
    fn p2_unconstrained_by_construction() {
        let (p, x) = (0.5, [4.0, 0.0, -1.0]);
        let theta = phi_unchecked(&x, p);
        let c: Vec<f64> = x
            .iter()
            .map(|&v| if v != 0.0 { -lp_derivative(v, p) } else { 0.0 })
            .collect();
        let f = Affine::new(c, 0.0);
        let r = LpRegularizer::ball(p, theta).unwrap();
        let cert = kkt_residual_p2(&x, &MultiplierSet::with_ball(1.0), &f, &r, &FeasibleSet::Unconstrained, 1e-12)
            .unwrap();
        assert!(cert.residual < 1e-15);
        assert_eq!(cert.remarks.len(), 1);
    }

    #[test]
    fn p2_sign_constraint_on_ball_multiplier() {
        let f = Affine::new(vec![1.0, 0.0], 0.0);
        let r = LpRegularizer::ball(0.5, 1.0).unwrap();
        let x = [1.0, 0.0];
        let fit = fit_multipliers(&x, &f, &r, &FeasibleSet::Unconstrained).unwrap();
        assert_eq!(fit.multipliers.ball, Some(0.0));
        let cert = kkt_residual_p2(&x, &fit.multipliers, &f, &r, &FeasibleSet::Unconstrained, 1e-8).unwrap();
        assert!((cert.residual - 1.0).abs() < 1e-15);
        assert!(!cert.passed);
    }

    #[test]
    fn p2_rejects_interior_points() {
        let r = LpRegularizer::ball(0.5, 4.0).unwrap();
        let err = kkt_residual_p2(&[1.0, 0.0], &MultiplierSet::empty(), &Affine::zero(2), &r, &FeasibleSet::Unconstrained, 1e-8)
            .unwrap_err();
        assert!(matches!(err, Error::InteriorOfLpBall { .. }));
    }

    #[test]
    fn fit_recovers_simplex_multiplier() {
        // ∇f = (1, 2), λ = 0: stationarity on the support {0, 1} cannot hold
        // with one ν; least squares gives ν = -1.5.
        let f = Affine::new(vec![1.0, 2.0], 0.0);
        let fit = fit_multipliers(&[0.5, 0.5], &f, &reg(0.5, 0.0), &FeasibleSet::simplex(1.0).unwrap()).unwrap();
        assert!((fit.multipliers.set_dual.unwrap() + 1.5).abs() < 1e-12);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn fit_recovers_equality_multiplier() {
        // Σx = 1 as a general equality; ∇f = (3, 3) → y = -3 exactly.
        let sum = Constraint::equality(Arc::new(Affine::new(vec![1.0, 1.0], -1.0)));
        let f = Affine::new(vec![3.0, 3.0], 0.0);
        let fit = fit_multipliers(&[0.25, 0.75], &f, &reg(1.0, 0.0), &FeasibleSet::GeneralSmooth(vec![sum])).unwrap();
        assert!((fit.multipliers.equality[&0] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_without_constraints_is_empty() {
        let f = Affine::new(vec![3.0, -1.0], 0.0);
        let r = reg(0.5, 0.0);
        let fit = fit_multipliers(&[1.0, 0.5], &f, &r, &FeasibleSet::Unconstrained).unwrap();
        assert_eq!(fit.multipliers, MultiplierSet::empty());
        let cert = kkt_residual_p1(&[1.0, 0.5], &fit.multipliers, &f, &r, &FeasibleSet::Unconstrained, 1e-8).unwrap();
        assert_eq!(cert.residual, 3.0);
    }

    #[test]
    fn fit_reports_rank_deficiency() {
        let a = Constraint::equality(Arc::new(Affine::new(vec![1.0, 1.0], -1.0)));
        let b = Constraint::equality(Arc::new(Affine::new(vec![2.0, 2.0], -2.0)));
        let fit = fit_multipliers(&[0.5, 0.5], &Affine::zero(2), &reg(0.5, 0.1), &FeasibleSet::GeneralSmooth(vec![a, b]))
            .unwrap();
        assert!(fit.rank_deficient);
    }

    #[test]
    fn figure_one_counterexample() {
        let f = Quadratic::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]),
            DVector::from_vec(vec![2.0, 0.0]),
        )
        .unwrap()
        .with_constant(1.0);
        let r = reg(0.5, 1.0);
        let set = FeasibleSet::GeneralSmooth(vec![disk()]);
        let x = [0.0, 1.0];
        let v = horizon_obstruction(&x, &r, &set).unwrap().expect("witness");
        assert_eq!(v, vec![1.0, 0.0]);

        let fit = fit_multipliers(&x, &f, &r, &set).unwrap();
        let cert = kkt_residual_p1(&x, &fit.multipliers, &f, &r, &set, 1e-6).unwrap();
        assert!(!cert.passed);
        assert!((cert.residual - 0.5).abs() < 1e-12);

        let em = emfcq_check(&x, &[disk()], &r).unwrap();
        assert!(!em.passed);
        assert!(!em.linearly_independent);
        assert_eq!(eccp_sufficient_condition(&x, &r, &set).unwrap(), None);
    }

    #[test]
    fn structured_horizon_cases() {
        let r = reg(0.5, 1.0);
        assert_eq!(horizon_obstruction(&[1.0, 2.0], &r, &FeasibleSet::Nonnegative).unwrap(), None);
        assert_eq!(horizon_obstruction(&[1.0, 0.0], &r, &FeasibleSet::Unconstrained).unwrap(), None);
        assert_eq!(
            horizon_obstruction(&[1.0, 0.0], &r, &FeasibleSet::simplex(1.0).unwrap()).unwrap(),
            Some(vec![0.0, 1.0])
        );
        let b = FeasibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(horizon_obstruction(&[0.5, 0.0], &r, &b).unwrap(), Some(vec![0.0, -1.0]));
        let b = FeasibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(horizon_obstruction(&[0.5, 0.0], &r, &b).unwrap(), None);
        assert_eq!(horizon_obstruction(&[1.0, 0.0], &reg(1.0, 1.0), &FeasibleSet::Nonnegative).unwrap(), None);
    }

    #[test]
    fn emfcq_examples() {
        let r = reg(0.5, 1.0);
        let x1 = Constraint::inequality(Arc::new(Affine::new(vec![1.0, 0.0], -1.0)));
        let out = emfcq_check(&[1.0, 1.0], &[x1.clone()], &r).unwrap();
        assert!(out.passed);
        let d = out.witness.unwrap();
        assert!(d[0] < 0.0);

        let neg = Constraint::inequality(Arc::new(Affine::new(vec![-1.0, 0.0], 1.0)));
        let out = emfcq_check(&[1.0, 1.0], &[x1, neg], &r).unwrap();
        assert!(!out.passed);

        let out = emfcq_check(&[0.0, 0.0], &[], &r).unwrap();
        assert!(!out.passed);
        assert!(out.diagnostic.unwrap().contains("empty support"));
    }

    #[test]
    fn alpha_residual_by_construction() {
        let rm = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let x: [f64; 2] = [0.3, 0.7];
        let (lambda, p, nu) = (0.01, 0.5, -0.2);
        let rx = &rm * DVector::from_column_slice(&x);
        let c: Vec<f64> = (0..2).map(|i| rx[i] + lambda * p * x[i].powf(p - 1.0) + nu).collect();
        let v = alpha_residual(&x, nu, &rm, &c, &reg(p, lambda)).unwrap();
        assert!(v < 1e-15);
        assert!(alpha_residual(&[-0.1, 1.1], nu, &rm, &c, &reg(p, lambda)).is_err());
    }

    #[test]
    fn record_format() {
        let f = Affine::new(vec![1.0, 2.0], 0.0);
        let mut m = MultiplierSet::with_set_dual(-1.5);
        m.ball = None;
        let cert = kkt_residual_p1(&[0.5, 0.5], &m, &f, &reg(0.5, 0.0), &FeasibleSet::simplex(1.0).unwrap(), 1e-6)
            .unwrap();
        assert_eq!(
            cert.to_record(),
            "condition=KKT-P1 verdict=fail residual=5.0000000000000000e-1 \
             tolerance=9.9999999999999995e-7 support=0;1 set_dual=-1.5000000000000000e0"
        );
    }
}
