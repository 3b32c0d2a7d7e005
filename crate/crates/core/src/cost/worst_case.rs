//! Cost profile on which price-anticipating tenants leave almost the whole
//! target to diesel.
//!
//! Tenant 1 has slope `alpha/2N` up to `eps/2`, then
//! `alpha (1 - 3 eps/(4 N delta))` up to `delta - eps/2`, then `2 alpha`.
//! Every other tenant pays `2 alpha` per kWh.

use serde::{Deserialize, Serialize};

use super::CostFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub n: usize,
}

impl WorstCaseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.alpha > 0.0) {
            return Err(Error::InvalidScenario("delta and alpha must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.delta) {
            return Err(Error::InvalidScenario(format!(
                "epsilon must lie in (0, delta), got {} with delta {}",
                self.epsilon, self.delta
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidScenario("at least one tenant required".into()));
        }
        Ok(())
    }

    fn half_epsilon(&self) -> f64 {
        self.epsilon / 2.0
    }

    /// Slopes of tenant 1's three segments.
    pub fn slopes(&self) -> [f64; 3] {
        let n = self.n as f64;
        let e = self.half_epsilon();
        [
            self.alpha / (2.0 * n),
            self.alpha * (1.0 - 3.0 * e / (2.0 * n * self.delta)),
            2.0 * self.alpha,
        ]
    }

    pub fn breakpoints(&self) -> [f64; 2] {
        let e = self.half_epsilon();
        [e, self.delta - e]
    }
}

/// Offsets making tenant 1's cost continuous when its segments are written
/// as `slope * s + C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityConstants {
    pub c1: f64,
    pub c2: f64,
}

pub fn continuity_constants(spec: &WorstCaseSpec) -> ContinuityConstants {
    let [s1, s2, s3] = spec.slopes();
    let [k1, k2] = spec.breakpoints();
    let c1 = (s1 - s2) * k1;
    let c2 = s2 * k2 + c1 - s3 * k2;
    ContinuityConstants { c1, c2 }
}

pub fn make_worst_case_instance(spec: &WorstCaseSpec) -> Result<Vec<CostFunction>> {
    spec.validate()?;
    let first = CostFunction::piecewise_linear(spec.breakpoints().to_vec(), spec.slopes().to_vec(), None)?;
    let mut costs = vec![first];
    costs.extend((1..spec.n).map(|_| CostFunction::linear_quadratic(2.0 * spec.alpha, 0.0)));
    Ok(costs)
}
