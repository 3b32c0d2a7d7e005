use serde::{Deserialize, Serialize};

use super::{CostFunction, ModifiedCostContext, Side};
use crate::extended::Extended;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityViolation {
    pub at_kwh: f64,
    pub previous_marginal: f64,
    pub marginal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub holds: bool,
    pub observed: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAssumptionReport {
    pub convexity_violations: Vec<ConvexityViolation>,
    /// Marginal cost at zero against the anticipating markup.
    pub marginal_at_zero: AssumptionCheck,
    pub notes: Vec<String>,
}

impl CostAssumptionReport {
    pub fn is_convex(&self) -> bool {
        self.convexity_violations.is_empty()
    }
}

/// Samples marginals on `grid` points of `[0, min(capacity, horizon)]`.
pub fn validate_cost_assumptions(c: &CostFunction, ctx: &ModifiedCostContext, grid: usize) -> CostAssumptionReport {
    let grid = grid.max(2);
    let top = c.domain_limit(ctx.horizon);
    let mut violations = Vec::new();
    let mut prev: Option<f64> = None;
    let mut sample = |s: f64, m: Extended| {
        if let Extended::Finite(m) = m {
            if let Some(p) = prev {
                if m < p - 1e-12 * p.abs().max(1.0) {
                    violations.push(ConvexityViolation {
                        at_kwh: s,
                        previous_marginal: p,
                        marginal: m,
                    });
                }
            }
            prev = Some(m);
        }
    };
    for i in 0..grid {
        let s = top * i as f64 / (grid - 1) as f64;
        sample(s, c.marginal(s, Side::Left));
        sample(s, c.marginal(s, Side::Right));
    }
    let observed = c.marginal(0.0, Side::Right);
    let marginal_at_zero = AssumptionCheck {
        holds: observed.ge(ctx.markup),
        observed: observed.finite().unwrap_or(f64::INFINITY),
        required: ctx.markup,
    };
    let mut notes = Vec::new();
    if !marginal_at_zero.holds {
        notes.push(format!(
            "marginal cost at zero {} is below {}; the anticipating outcome is still computed but is not guaranteed to be an equilibrium",
            marginal_at_zero.observed, ctx.markup
        ));
    }
    notes.push("interior diesel use depends on the solved bids and is checked on each outcome".into());
    CostAssumptionReport {
        convexity_violations: violations,
        marginal_at_zero,
        notes,
    }
}
