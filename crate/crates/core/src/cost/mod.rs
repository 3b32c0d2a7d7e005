//! Tenant energy-reduction cost functions.
//!
//! Every cost is zero for `s <= 0`, convex and nondecreasing on
//! `[0, capacity]`, and unbounded beyond the capacity.

mod assumptions;
mod modified;
mod queueing;
mod worst_case;

pub use assumptions::{validate_cost_assumptions, AssumptionCheck, ConvexityViolation, CostAssumptionReport};
pub use modified::{
    inverse_modified_marginal, modified_cost_between, modified_cost_value, modified_marginal, ModifiedCostContext,
};
pub use queueing::QueueingCostParams;
pub use worst_case::{continuity_constants, make_worst_case_instance, WorstCaseSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Extended;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Closed interval of energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(s: f64) -> Self {
        Interval { lo: s, hi: s }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64, tol: f64) -> bool {
        s >= self.lo - tol && s <= self.hi + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `linear*s + coef*s^2`.
    Quadratic {
        #[serde(default)]
        linear: f64,
        coef: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<f64>,
    },
    /// Slopes on `[0, b_1), [b_1, b_2), ...`; `slopes.len() == breakpoints.len() + 1`.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<f64>,
    },
    Queueing(QueueingCostParams),
    /// Linear interpolation through `(s, c)` samples starting at `(0, 0)`;
    /// the last sample is the capacity.
    CustomSampled { points: Vec<(f64, f64)> },
    /// A tenant with no room to shed: capacity zero.
    Unavailable,
}

impl CostFunction {
    pub fn quadratic(coef: f64) -> Self {
        CostFunction::Quadratic {
            linear: 0.0,
            coef,
            capacity: None,
        }
    }

    pub fn linear_quadratic(linear: f64, coef: f64) -> Self {
        CostFunction::Quadratic {
            linear,
            coef,
            capacity: None,
        }
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, slopes: Vec<f64>, capacity: Option<f64>) -> Result<Self> {
        let c = CostFunction::PiecewiseLinear {
            breakpoints,
            slopes,
            capacity,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn sampled(points: Vec<(f64, f64)>) -> Result<Self> {
        let c = CostFunction::CustomSampled { points };
        c.validate()?;
        Ok(c)
    }

    /// Checks the parameters are well formed. Convexity of sampled costs is
    /// reported by [`validate_cost_assumptions`] and enforced by [`Self::ensure_convex`].
    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Quadratic { linear, coef, capacity } => {
                if !(linear.is_finite() && *linear >= 0.0 && coef.is_finite() && *coef >= 0.0) {
                    return Err(Error::InvalidCost(format!(
                        "quadratic coefficients must be finite and nonnegative, got linear={linear} coef={coef}"
                    )));
                }
                if *linear == 0.0 && *coef == 0.0 {
                    return Err(Error::InvalidCost("quadratic cost is identically zero".into()));
                }
                check_capacity(*capacity)
            }
            CostFunction::PiecewiseLinear {
                breakpoints,
                slopes,
                capacity,
            } => {
                if slopes.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidCost(format!(
                        "piecewise_linear needs {} slopes for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        slopes.len()
                    )));
                }
                let mut prev = 0.0;
                for &b in breakpoints {
                    if !(b.is_finite() && b > prev) {
                        return Err(Error::InvalidCost(
                            "piecewise_linear breakpoints must be positive and strictly increasing".into(),
                        ));
                    }
                    prev = b;
                }
                if slopes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(Error::InvalidCost("piecewise_linear slopes must be positive".into()));
                }
                if slopes.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidCost(
                        "piecewise_linear slopes must be nondecreasing (convexity)".into(),
                    ));
                }
                check_capacity(*capacity)
            }
            CostFunction::Queueing(q) => q.validate(),
            CostFunction::CustomSampled { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidCost("custom_sampled needs at least two points".into()));
                }
                if points[0] != (0.0, 0.0) {
                    return Err(Error::InvalidCost("custom_sampled must start at (0, 0)".into()));
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].0.is_finite() && w[1].1.is_finite()) {
                        return Err(Error::InvalidCost(
                            "custom_sampled abscissae must be finite and strictly increasing".into(),
                        ));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::InvalidCost("custom_sampled cost must be nondecreasing".into()));
                    }
                }
                Ok(())
            }
            CostFunction::Unavailable => Ok(()),
        }
    }

    /// Rejects costs whose sampled marginals decrease.
    pub fn ensure_convex(&self) -> Result<()> {
        if let CostFunction::CustomSampled { points } = self {
            let slopes = sampled_slopes(points);
            if slopes.windows(2).any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)) {
                return Err(Error::InvalidCost("custom_sampled cost is not convex".into()));
            }
        }
        Ok(())
    }

    /// Largest reduction with finite cost; `None` when unbounded.
    pub fn capacity(&self) -> Option<f64> {
        match self {
            CostFunction::Quadratic { capacity, .. } | CostFunction::PiecewiseLinear { capacity, .. } => *capacity,
            CostFunction::Queueing(q) => Some(q.capacity()),
            CostFunction::CustomSampled { points } => points.last().map(|p| p.0),
            CostFunction::Unavailable => Some(0.0),
        }
    }

    /// Upper end of the usable domain given an outside limit such as the
    /// reduction target.
    pub fn domain_limit(&self, limit: f64) -> f64 {
        match self.capacity() {
            Some(k) => k.min(limit),
            None => limit,
        }
    }

    /// Points in `(0, capacity)` where the marginal cost jumps.
    pub fn kinks(&self) -> Vec<f64> {
        let cap = self.capacity().unwrap_or(f64::INFINITY);
        match self {
            CostFunction::PiecewiseLinear { breakpoints, .. } => {
                breakpoints.iter().copied().filter(|&b| b < cap).collect()
            }
            CostFunction::CustomSampled { points } => {
                points[1..points.len() - 1].iter().map(|p| p.0).collect()
            }
            _ => Vec::new(),
        }
    }

    fn in_domain(&self, s: f64) -> bool {
        match self.capacity() {
            Some(k) => s <= k,
            None => true,
        }
    }

    /// `c(s)`: zero for `s <= 0`, unbounded beyond the capacity.
    pub fn eval(&self, s: f64) -> Extended {
        if s <= 0.0 {
            return Extended::Finite(0.0);
        }
        if !self.in_domain(s) {
            return Extended::Infinite;
        }
        let v = match self {
            CostFunction::Quadratic { linear, coef, .. } => linear * s + coef * s * s,
            CostFunction::PiecewiseLinear {
                breakpoints, slopes, ..
            } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                for (i, &slope) in slopes.iter().enumerate() {
                    let hi = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    if s <= hi {
                        acc += slope * (s - lo);
                        break;
                    }
                    acc += slope * (hi - lo);
                    lo = hi;
                }
                acc
            }
            CostFunction::Queueing(q) => q.cost(s),
            CostFunction::CustomSampled { points } => {
                let i = points.partition_point(|p| p.0 < s).max(1);
                let (a, b) = (points[i - 1], points[i]);
                a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
            }
            CostFunction::Unavailable => unreachable!("zero capacity handled above"),
        };
        Extended::Finite(v)
    }

    /// Finite cost, treating anything past the capacity as a caller bug.
    pub fn cost(&self, s: f64) -> f64 {
        self.eval(s).expect_finite("cost beyond capacity")
    }

    /// One-sided derivative. The left marginal at `s <= 0` is 0; the right
    /// marginal at or beyond the capacity is unbounded.
    pub fn marginal(&self, s: f64, side: Side) -> Extended {
        if s < 0.0 || (s == 0.0 && side == Side::Left) {
            return Extended::Finite(0.0);
        }
        let cap = self.capacity();
        if let Some(k) = cap {
            if s > k || (s == k && side == Side::Right) {
                return Extended::Infinite;
            }
        }
        let v = match self {
            CostFunction::Quadratic { linear, coef, .. } => linear + 2.0 * coef * s,
            CostFunction::PiecewiseLinear {
                breakpoints, slopes, ..
            } => {
                let idx = match side {
                    Side::Right => breakpoints.partition_point(|&b| b <= s),
                    Side::Left => breakpoints.partition_point(|&b| b < s),
                };
                slopes[idx]
            }
            CostFunction::Queueing(q) => q.slope(s),
            CostFunction::CustomSampled { points } => {
                let slopes = sampled_slopes(points);
                let xs: Vec<f64> = points[1..].iter().map(|p| p.0).collect();
                let idx = match side {
                    Side::Right => xs.partition_point(|&b| b <= s),
                    Side::Left => xs.partition_point(|&b| b < s),
                };
                slopes[idx.min(slopes.len() - 1)]
            }
            CostFunction::Unavailable => unreachable!("zero capacity handled above"),
        };
        Extended::Finite(v)
    }

    /// Maximal interval of `s` in `[0, capacity]` with
    /// `left(s) <= p <= right(s)`.
    pub fn inverse_marginal(&self, p: f64) -> Interval {
        self.inverse_marginal_within(p, f64::INFINITY)
    }

    /// As [`Self::inverse_marginal`], intersected with `[0, limit]`.
    pub fn inverse_marginal_within(&self, p: f64, limit: f64) -> Interval {
        let top = self.domain_limit(limit);
        if top <= 0.0 {
            return Interval::point(0.0);
        }
        let clamp = |s: f64| s.clamp(0.0, top);
        match self {
            CostFunction::Quadratic { linear, coef, .. } => {
                if *coef > 0.0 {
                    Interval::point(clamp((p - linear) / (2.0 * coef)))
                } else if p < *linear {
                    Interval::point(0.0)
                } else if p > *linear {
                    Interval::point(top)
                } else {
                    Interval { lo: 0.0, hi: top }
                }
            }
            CostFunction::PiecewiseLinear {
                breakpoints, slopes, ..
            } => piecewise_inverse(breakpoints, slopes, p, top),
            CostFunction::CustomSampled { points } => {
                let xs: Vec<f64> = points[1..points.len() - 1].iter().map(|q| q.0).collect();
                piecewise_inverse(&xs, &sampled_slopes(points), p, top)
            }
            CostFunction::Queueing(q) => {
                if p <= q.slope(0.0) {
                    Interval::point(0.0)
                } else {
                    Interval::point(clamp(q.slope_inverse(p)))
                }
            }
            CostFunction::Unavailable => Interval::point(0.0),
        }
    }
}

fn check_capacity(capacity: Option<f64>) -> Result<()> {
    match capacity {
        Some(k) if !(k.is_finite() && k >= 0.0) => {
            Err(Error::InvalidCost(format!("capacity must be finite and nonnegative, got {k}")))
        }
        _ => Ok(()),
    }
}

fn sampled_slopes(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

fn piecewise_inverse(breakpoints: &[f64], slopes: &[f64], p: f64, top: f64) -> Interval {
    let start = |i: usize| if i == 0 { 0.0 } else { breakpoints[i - 1] };
    let end = |i: usize| breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
    // lowest s whose right slope reaches p
    let lo = match slopes.iter().position(|&sl| sl >= p) {
        Some(i) => start(i),
        None => top,
    };
    // highest s whose left slope stays at or below p
    let hi = match slopes.iter().rposition(|&sl| sl <= p) {
        Some(i) => end(i),
        None => 0.0,
    };
    Interval {
        lo: lo.clamp(0.0, top),
        hi: hi.clamp(0.0, top),
    }
}
