//! Modified cost whose price-taking optimum is the price-anticipating
//! equilibrium.
//!
//! With markup `a` and coupling `k` the marginal is
//! `m(s) = (c'(s) + a)/2 + sqrt((c'(s) - a)^2 + 2 c'(s) s k)/2`.
//! For mandatory events `a = alpha/2N`, `k = alpha/(N delta)`; for voluntary
//! events `a = gamma_n u/2`, `k = u/sum(D)`.

use serde::{Deserialize, Serialize};

use super::{CostFunction, Interval, Side};
use crate::extended::Extended;
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedCostContext {
    /// Additive markup `a`; also the lower bound on the marginal cost at zero.
    pub markup: f64,
    /// Coupling `k` of the square-root term.
    pub coupling: f64,
    /// Largest reduction the tenant can be asked for.
    pub horizon: f64,
}

impl ModifiedCostContext {
    pub fn mandatory(alpha: f64, n: usize, delta: f64) -> Self {
        let n = n as f64;
        ModifiedCostContext {
            markup: alpha / (2.0 * n),
            coupling: alpha / (n * delta),
            horizon: delta,
        }
    }

    pub fn voluntary(u: f64, gamma_n: f64, total_capacity: f64, capacity_n: f64) -> Self {
        ModifiedCostContext {
            markup: gamma_n * u / 2.0,
            coupling: u / total_capacity,
            horizon: capacity_n,
        }
    }

    fn apply(&self, cm: f64, s: f64) -> f64 {
        let a = self.markup;
        let d = cm - a;
        0.5 * (cm + a) + 0.5 * (d * d + 2.0 * cm * s * self.coupling).max(0.0).sqrt()
    }

    fn root_term(&self, cm: f64, s: f64) -> f64 {
        let d = cm - self.markup;
        (d * d + 2.0 * cm * s * self.coupling).max(0.0).sqrt()
    }
}

/// One-sided marginal of the modified cost. Both terms use the marginal of
/// `c` from the requested side.
pub fn modified_marginal(c: &CostFunction, s: f64, ctx: &ModifiedCostContext, side: Side) -> Extended {
    let s = s.max(0.0);
    match c.marginal(s, side) {
        Extended::Finite(cm) => Extended::Finite(ctx.apply(cm, s)),
        Extended::Infinite => Extended::Infinite,
    }
}

/// `c_hat(s) = (c(s) + a s)/2 + (1/2) * integral_0^s sqrt((c' - a)^2 + 2 c' z k) dz`.
pub fn modified_cost_value(c: &CostFunction, s: f64, ctx: &ModifiedCostContext) -> Extended {
    modified_cost_between(c, 0.0, s, ctx)
}

/// `c_hat(b) - c_hat(a)`, integrating only over `[a, b]`.
pub fn modified_cost_between(c: &CostFunction, a: f64, b: f64, ctx: &ModifiedCostContext) -> Extended {
    let a = a.max(0.0);
    if b <= a {
        return Extended::Finite(0.0);
    }
    let (ca, cb) = match (c.eval(a), c.eval(b)) {
        (Extended::Finite(x), Extended::Finite(y)) => (x, y),
        _ => return Extended::Infinite,
    };
    // within each smooth piece the upper end takes the left marginal, so
    // jumps at kinks never leak into the neighbouring piece
    let mut knots: Vec<f64> = c.kinks().into_iter().filter(|&k| k > a && k < b).collect();
    knots.push(b);
    let quad = Quadrature {
        abs_tol: Quadrature::default().abs_tol / knots.len() as f64,
        max_panels: Quadrature::default().max_panels / knots.len(),
    };
    let mut lo = a;
    let mut integral = 0.0;
    for hi in knots {
        let integrand = |z: f64| {
            let side = if z >= hi { Side::Left } else { Side::Right };
            let cm = c.marginal(z, side).expect_finite("marginal inside domain");
            ctx.root_term(cm, z)
        };
        integral += quad.integrate(integrand, lo, hi);
        lo = hi;
    }
    Extended::Finite(0.5 * (cb - ca + (b - a) * ctx.markup) + 0.5 * integral)
}

/// Reduction at which the modified marginal brackets `p`, within
/// `[0, min(capacity, horizon)]`. The modified marginal is strictly
/// increasing for positive marginal costs, so the result is a single point.
pub fn inverse_modified_marginal(c: &CostFunction, p: f64, ctx: &ModifiedCostContext) -> Interval {
    let top = c.domain_limit(ctx.horizon);
    if top <= 0.0 || modified_marginal(c, 0.0, ctx, Side::Right).ge(p) {
        return Interval::point(0.0);
    }
    let left = |s: f64| modified_marginal(c, s, ctx, Side::Left);
    let right = |s: f64| modified_marginal(c, s, ctx, Side::Right);
    if left(top).le(p) {
        return Interval::point(top);
    }
    let mut lo = 0.0;
    let mut hi = top;
    for k in c.kinks().into_iter().filter(|&k| k > 0.0 && k < top) {
        let (l, r) = (left(k), right(k));
        if l.le(p) && r.ge(p) {
            return Interval::point(k);
        }
        if r.le(p) {
            lo = k;
        } else if hi == top {
            hi = k;
        }
    }
    let tol = 1e-12 * top;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if right(mid).le(p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Interval::point(0.5 * (lo + hi))
}
