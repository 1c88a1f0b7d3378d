//! Problem data: smooth function oracles, the lp regularizer, feasible sets and
//! multipliers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Evaluation bundle for a continuously differentiable function.
///
/// Implementations must be free of side effects so that independent solver
/// runs can share one oracle across threads.
pub trait SmoothOracle: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Lipschitz constant of the gradient, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// The constant Hessian, for quadratic oracles.
    fn hessian(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

/// `f(x) = ½ xᵀHx + cᵀx + k` with a symmetric `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
    lipschitz: Option<f64>,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        if !hessian.is_square() {
            return Err(Error::InvalidParameter {
                name: "hessian",
                reason: format!("not square ({}x{})", hessian.nrows(), hessian.ncols()),
            });
        }
        if hessian.nrows() != linear.len() {
            return Err(Error::DimensionMismatch {
                expected: hessian.nrows(),
                got: linear.len(),
            });
        }
        if hessian.iter().chain(linear.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic data"));
        }
        Ok(Self {
            hessian,
            linear,
            constant: 0.0,
            lipschitz: None,
        })
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    /// Declares the gradient Lipschitz constant instead of estimating it.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }
}

impl SmoothOracle for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let hx = &self.hessian * &x;
        0.5 * x.dot(&hx) + self.linear.dot(&x) + self.constant
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let g = &self.hessian * &x + &self.linear;
        g.as_slice().to_vec()
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn hessian(&self) -> Option<&DMatrix<f64>> {
        Some(&self.hessian)
    }
}

/// `f(x) = aᵀx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0.0; n], 0.0)
    }
}

impl SmoothOracle for Affine {
    fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + self.constant
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coeffs.clone()
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Oracle assembled from closures.
pub struct FnOracle<V, G> {
    value: V,
    gradient: G,
    lipschitz: Option<f64>,
}

impl<V, G> FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: V, gradient: G) -> Self {
        Self {
            value,
            gradient,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }
}

impl<V, G> SmoothOracle for FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// How the regularizer enters the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    /// Penalized form, `f₀(x) + λ‖x‖ₚᵖ`.
    Penalty(f64),
    /// Ball-constrained form, `‖x‖ₚᵖ ≤ θ`.
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Penalized,
    BallConstrained,
}

/// The exponent `p ∈ (0, 1]` together with either the penalty weight or the
/// ball radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRegularizer {
    p: f64,
    strength: Strength,
}

impl LpRegularizer {
    /// Penalized regularizer. `lambda = 0` is admitted as the smooth baseline.
    pub fn penalty(p: f64, lambda: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and nonnegative, got {lambda}"),
            });
        }
        Ok(Self {
            p,
            strength: Strength::Penalty(lambda),
        })
    }

    pub fn ball(p: f64, theta: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must be finite and positive, got {theta}"),
            });
        }
        Ok(Self {
            p,
            strength: Strength::Radius(theta),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn strength(&self) -> Strength {
        self.strength
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.strength {
            Strength::Penalty(l) => Some(l),
            Strength::Radius(_) => None,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self.strength {
            Strength::Radius(t) => Some(t),
            Strength::Penalty(_) => None,
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self.strength {
            Strength::Penalty(_) => ProblemKind::Penalized,
            Strength::Radius(_) => ProblemKind::BallConstrained,
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie in (0, 1], got {p}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `f(x) ≤ 0`
    Inequality,
    /// `f(x) = 0`
    Equality,
}

/// One smooth constraint `f(x) ≤ 0` or `f(x) = 0`.
#[derive(Clone)]
pub struct Constraint {
    pub oracle: Arc<dyn SmoothOracle>,
    pub kind: ConstraintKind,
    /// Caller's declaration that the constraint defines a convex set
    /// (convex inequality or affine equality).
    pub convex: bool,
}

impl Constraint {
    pub fn inequality(oracle: Arc<dyn SmoothOracle>) -> Self {
        Self {
            oracle,
            kind: ConstraintKind::Inequality,
            convex: false,
        }
    }

    pub fn equality(oracle: Arc<dyn SmoothOracle>) -> Self {
        Self {
            oracle,
            kind: ConstraintKind::Equality,
            convex: false,
        }
    }

    pub fn convex(mut self) -> Self {
        self.convex = true;
        self
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint")
            .field("kind", &self.kind)
            .field("convex", &self.convex)
            .finish_non_exhaustive()
    }
}

/// The constraint set `Γ`.
#[derive(Debug, Clone)]
pub enum FeasibleSet {
    Unconstrained,
    Nonnegative,
    /// `lower ≤ x ≤ upper`, with `lower < upper` componentwise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x ≥ 0, Σ xᵢ = scale}`.
    Simplex { scale: f64 },
    GeneralSmooth(Vec<Constraint>),
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(i) = lower.iter().zip(&upper).position(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: format!("lower[{i}] must be strictly below upper[{i}]"),
            });
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn simplex(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: format!("simplex scale must be positive, got {scale}"),
            });
        }
        Ok(FeasibleSet::Simplex { scale })
    }

    /// Checks structural consistency against a dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: lower.len().min(upper.len()),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(Error::InvalidParameter {
                        name: "box",
                        reason: "lower must be strictly below upper".into(),
                    });
                }
                Ok(())
            }
            FeasibleSet::Simplex { scale } if !(*scale > 0.0) => Err(Error::InvalidParameter {
                name: "scale",
                reason: format!("simplex scale must be positive, got {scale}"),
            }),
            _ => Ok(()),
        }
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            FeasibleSet::Unconstrained => 0.0,
            FeasibleSet::Nonnegative => x.iter().fold(0.0, |m, &v| m.max(-v)),
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .fold(0.0, |m, (&v, (&l, &u))| m.max(l - v).max(v - u)),
            FeasibleSet::Simplex { scale } => {
                let sum: f64 = x.iter().sum();
                x.iter().fold((sum - scale).abs(), |m, &v| m.max(-v))
            }
            FeasibleSet::GeneralSmooth(cons) => cons.iter().fold(0.0, |m, c| {
                let v = c.oracle.value(x);
                match c.kind {
                    ConstraintKind::Inequality => m.max(v),
                    ConstraintKind::Equality => m.max(v.abs()),
                }
            }),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|v| v.is_finite()) && self.violation(x) <= tol
    }

    /// Whether the set is known to be convex.
    pub fn is_convex(&self) -> bool {
        match self {
            FeasibleSet::GeneralSmooth(cons) => cons.iter().all(|c| c.convex),
            _ => true,
        }
    }
}

/// Lagrange multipliers for the stationarity conditions.
///
/// Keys index into the constraint list of a [`FeasibleSet::GeneralSmooth`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiplierSet {
    pub equality: BTreeMap<usize, f64>,
    pub active_inequality: BTreeMap<usize, f64>,
    /// Multiplier of the lp-ball constraint (ball-constrained problems only).
    pub ball: Option<f64>,
    /// Multiplier of the simplex equality `Σ xᵢ = s`.
    pub set_dual: Option<f64>,
}

impl MultiplierSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_set_dual(nu: f64) -> Self {
        Self {
            set_dual: Some(nu),
            ..Self::default()
        }
    }

    pub fn with_ball(y0: f64) -> Self {
        Self {
            ball: Some(y0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (&j, &y) in &self.active_inequality {
            if !(y >= 0.0) {
                return Err(Error::NegativeMultiplier { index: j, value: y });
            }
        }
        if let Some(y0) = self.ball {
            if !(y0 >= 0.0) {
                return Err(Error::NegativeMultiplier {
                    index: usize::MAX,
                    value: y0,
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
