//! Closed-form variational calculus of `φ(x) = ‖x‖ₚᵖ` and of the lp ball
//! `Θ = {x : φ(x) ≤ θ}`.
//!
//! Subdifferentials and normal cones are returned symbolically as
//! [`ConeDescription`]s: components on the support are pinned (or pinned up to
//! a common nonnegative scale), components on the zero set are free. Free
//! components are never materialized as numbers.

use crate::error::{Error, Result};
use crate::problem::{check_finite, LpRegularizer, SmoothOracle};

/// Relative tolerance used to classify a point as lying on the boundary of the
/// lp ball: `|φ(x) − θ| ≤ 1e−10·(1 + θ)`.
pub const BOUNDARY_RTOL: f64 = 1e-10;

pub fn boundary_tolerance(theta: f64) -> f64 {
    BOUNDARY_RTOL * (1.0 + theta)
}

/// Partition of the coordinates of a point into nonzeros `𝒩(x)` and zeros
/// `𝒵(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    nonzero: Vec<usize>,
    zero: Vec<usize>,
    threshold: f64,
}

impl Support {
    /// Exact support: `|xᵢ| > 0`.
    pub fn of(x: &[f64]) -> Self {
        Self::with_threshold(x, 0.0)
    }

    /// Coordinates with `|xᵢ| ≤ threshold` are classified as zero.
    pub fn with_threshold(x: &[f64], threshold: f64) -> Self {
        let threshold = threshold.max(0.0);
        let (nonzero, zero) = (0..x.len()).partition(|&i| x[i].abs() > threshold);
        Self {
            nonzero,
            zero,
            threshold,
        }
    }

    pub fn nonzero(&self) -> &[usize] {
        &self.nonzero
    }

    pub fn zero(&self) -> &[usize] {
        &self.zero
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.nonzero.len() + self.zero.len()
    }

    pub fn len(&self) -> usize {
        self.nonzero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nonzero.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.nonzero.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// `{0}`
    PointZero,
    /// `vⱼ = fixed_valuesⱼ` on the support, free on the zero set.
    FixedOnSupport,
    /// `vⱼ = t·generatorⱼ` on the support for some `t ≥ 0`, free on the zero set.
    RayOnSupport,
}

/// Symbolic description of a subdifferential or normal cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescription {
    pub kind: ConeKind,
    pub support: Support,
    /// Values pinned on `support.nonzero()`, in the same order.
    pub fixed_values: Vec<f64>,
    /// Indices where the component is unrestricted (or interval-bounded, see
    /// `free_bound`).
    pub free_indices: Vec<usize>,
    /// Generator on `support.nonzero()` for [`ConeKind::RayOnSupport`].
    pub ray_generator: Option<Vec<f64>>,
    /// `Some(b)` when free components are confined to `|vᵢ| ≤ b` rather than
    /// all of ℝ. Only arises for `p = 1`, where `∂|0| = [−1, 1]`; for a ray the
    /// bound scales with the ray parameter.
    pub free_bound: Option<f64>,
}

impl ConeDescription {
    fn point_zero(support: Support) -> Self {
        Self {
            kind: ConeKind::PointZero,
            support,
            fixed_values: Vec::new(),
            free_indices: Vec::new(),
            ray_generator: None,
            free_bound: None,
        }
    }

    /// Membership test for a concrete vector.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.support.dim() {
            return false;
        }
        match self.kind {
            ConeKind::PointZero => v.iter().all(|c| c.abs() <= tol),
            ConeKind::FixedOnSupport => {
                let pinned = self
                    .support
                    .nonzero()
                    .iter()
                    .zip(&self.fixed_values)
                    .all(|(&i, &f)| (v[i] - f).abs() <= tol);
                pinned && self.free_ok(v, 1.0, tol)
            }
            ConeKind::RayOnSupport => {
                let g = self.ray_generator.as_deref().unwrap_or(&[]);
                let idx = self.support.nonzero();
                let gg: f64 = g.iter().map(|a| a * a).sum();
                let vg: f64 = idx.iter().zip(g).map(|(&i, a)| v[i] * a).sum();
                let t = if gg > 0.0 { (vg / gg).max(0.0) } else { 0.0 };
                let pinned = idx.iter().zip(g).all(|(&i, a)| (v[i] - t * a).abs() <= tol);
                pinned && self.free_ok(v, t, tol)
            }
        }
    }

    fn free_ok(&self, v: &[f64], scale: f64, tol: f64) -> bool {
        match self.free_bound {
            None => true,
            Some(b) => self
                .free_indices
                .iter()
                .all(|&i| v[i].abs() <= scale * b + tol),
        }
    }
}

/// `φ(x) = Σᵢ |xᵢ|ᵖ`.
pub fn phi(x: &[f64], p: f64) -> Result<f64> {
    check_finite(x, "phi argument")?;
    Ok(phi_unchecked(x, p))
}

pub(crate) fn phi_unchecked(x: &[f64], p: f64) -> f64 {
    x.iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().powf(p))
        .sum()
}

/// `sign(xᵢ)·p·|xᵢ|^{p−1}` for `xᵢ ≠ 0`.
#[inline]
pub fn lp_derivative(xi: f64, p: f64) -> f64 {
    xi.signum() * p * xi.abs().powf(p - 1.0)
}

/// Regular (= limiting) subdifferential of `φ` at `x`, with exact support.
pub fn regular_subdifferential(x: &[f64], p: f64) -> Result<ConeDescription> {
    regular_subdifferential_at(x, p, &Support::of(x))
}

pub fn regular_subdifferential_at(x: &[f64], p: f64, support: &Support) -> Result<ConeDescription> {
    check_finite(x, "subdifferential argument")?;
    let fixed_values = support
        .nonzero()
        .iter()
        .map(|&i| lp_derivative(x[i], p))
        .collect();
    Ok(ConeDescription {
        kind: ConeKind::FixedOnSupport,
        support: support.clone(),
        fixed_values,
        free_indices: support.zero().to_vec(),
        ray_generator: None,
        free_bound: (p == 1.0).then_some(1.0),
    })
}

/// Horizon subdifferential of `φ` at `x`, with exact support.
pub fn horizon_subdifferential(x: &[f64], p: f64) -> Result<ConeDescription> {
    horizon_subdifferential_at(x, p, &Support::of(x))
}

pub fn horizon_subdifferential_at(x: &[f64], p: f64, support: &Support) -> Result<ConeDescription> {
    check_finite(x, "subdifferential argument")?;
    if p == 1.0 {
        // ‖·‖₁ is Lipschitz, so its horizon subdifferential is trivial.
        return Ok(ConeDescription::point_zero(support.clone()));
    }
    Ok(ConeDescription {
        kind: ConeKind::FixedOnSupport,
        support: support.clone(),
        fixed_values: vec![0.0; support.len()],
        free_indices: support.zero().to_vec(),
        ray_generator: None,
        free_bound: None,
    })
}

/// Normal cone of `Θ = {φ ≤ θ}` at a feasible `x`.
pub fn normal_cone_lp_ball(x: &[f64], p: f64, theta: f64) -> Result<ConeDescription> {
    check_finite(x, "normal cone argument")?;
    let value = phi_unchecked(x, p);
    let tol = boundary_tolerance(theta);
    let support = Support::of(x);
    if value > theta + tol {
        return Err(Error::OutsideLpBall { phi: value, theta });
    }
    if (value - theta).abs() > tol {
        return Ok(ConeDescription::point_zero(support));
    }
    let generator = support
        .nonzero()
        .iter()
        .map(|&i| lp_derivative(x[i], p))
        .collect();
    Ok(ConeDescription {
        kind: ConeKind::RayOnSupport,
        free_indices: support.zero().to_vec(),
        support,
        fixed_values: Vec::new(),
        ray_generator: Some(generator),
        free_bound: (p == 1.0).then_some(1.0),
    })
}

/// `f₀(x) + λ·Σᵢ (|xᵢ| + εᵢ)ᵖ`.
pub fn smoothed_objective(
    oracle: &dyn SmoothOracle,
    reg: &LpRegularizer,
    x: &[f64],
    eps: &[f64],
) -> Result<f64> {
    let lambda = reg.lambda().ok_or(Error::InvalidParameter {
        name: "regularizer",
        reason: "smoothed objective needs a penalty weight".into(),
    })?;
    check_finite(x, "smoothed objective argument")?;
    check_eps(eps, x.len())?;
    Ok(oracle.value(x) + lambda * smoothed_penalty(x, eps, reg.p()))
}

pub(crate) fn smoothed_penalty(x: &[f64], eps: &[f64], p: f64) -> f64 {
    x.iter()
        .zip(eps)
        .map(|(xi, e)| (xi.abs() + e).powf(p))
        .sum()
}

pub(crate) fn check_eps(eps: &[f64], n: usize) -> Result<()> {
    if eps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: eps.len(),
        });
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "smoothing parameters must be positive and finite".into(),
        });
    }
    Ok(())
}

/// Reweighting coefficient `p·(|xᵢ| + εᵢ)^{p−1}`.
pub fn weight(xi: f64, eps_i: f64, p: f64) -> Result<f64> {
    if !(eps_i.is_finite() && eps_i > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be positive, got {eps_i}"),
        });
    }
    if !xi.is_finite() {
        return Err(Error::NonFinite("weight argument"));
    }
    Ok(weight_unchecked(xi, eps_i, p))
}

#[inline]
pub(crate) fn weight_unchecked(xi: f64, eps_i: f64, p: f64) -> f64 {
    p * (xi.abs() + eps_i).powf(p - 1.0)
}
