//! Delay cost of switching servers off under an M/G/1/PS model.
//!
//! With `m` of `M` servers off, the delay cost over an event of length `T` is
//! `cbar(m) = beta*T / (1/(u*M) - 1/(M - m))`, and shedding `s` kWh switches
//! off `s/theta` servers, giving `c(s) = cbar(s/theta) - cbar(0)`. Server counts
//! are continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueingCostParams {
    /// Number of servers.
    #[serde(rename = "M")]
    pub servers: f64,
    /// Utilization with every server on, `lambda / (mu * M)`.
    #[serde(rename = "u")]
    pub utilization: f64,
    /// Delay cost rate, $ per time unit per job.
    pub beta: f64,
    /// Event duration in hours.
    #[serde(rename = "T")]
    pub duration_h: f64,
    /// Energy saved per server switched off, kWh.
    pub theta: f64,
    /// Highest utilization the tenant tolerates.
    pub u_bar: f64,
}

impl QueueingCostParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let positive = [
            ("M", p.servers),
            ("beta", p.beta),
            ("T", p.duration_h),
            ("theta", p.theta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCost(format!("queueing {name} must be positive, got {v}")));
            }
        }
        if !(p.utilization > 0.0 && p.utilization < 1.0) {
            return Err(Error::InvalidCost(format!(
                "queueing u must lie in (0, 1), got {}",
                p.utilization
            )));
        }
        if !(p.u_bar <= 1.0) {
            return Err(Error::InvalidCost(format!("queueing u_bar must be at most 1, got {}", p.u_bar)));
        }
        if p.utilization >= p.u_bar {
            return Err(Error::InvalidCost(format!(
                "queueing u = {} leaves no capacity under u_bar = {}",
                p.utilization, p.u_bar
            )));
        }
        Ok(())
    }

    /// Largest reduction respecting the utilization bound, `theta*M*(1 - u/u_bar)`.
    pub fn capacity(&self) -> f64 {
        self.theta * self.max_servers_off()
    }

    pub fn max_servers_off(&self) -> f64 {
        self.servers * (1.0 - self.utilization / self.u_bar)
    }

    fn inv_load(&self) -> f64 {
        1.0 / (self.utilization * self.servers)
    }

    /// `cbar(m)`.
    pub fn delay_cost(&self, servers_off: f64) -> f64 {
        let denom = self.inv_load() - 1.0 / (self.servers - servers_off);
        self.beta * self.duration_h / denom
    }

    /// `cbar'(m)`, $ per server.
    pub fn delay_cost_slope(&self, servers_off: f64) -> f64 {
        let x = 1.0 / (self.servers - servers_off);
        let gap = self.inv_load() - x;
        self.beta * self.duration_h * x * x / (gap * gap)
    }

    /// Cost of shedding `s` kWh, for `0 <= s <= capacity`.
    pub(crate) fn cost(&self, s: f64) -> f64 {
        self.delay_cost(s / self.theta) - self.delay_cost(0.0)
    }

    /// Marginal cost in $/kWh, for `0 <= s <= capacity`.
    pub(crate) fn slope(&self, s: f64) -> f64 {
        self.delay_cost_slope(s / self.theta) / self.theta
    }

    /// Energy at which the marginal cost equals `p`, unclamped.
    pub(crate) fn slope_inverse(&self, p: f64) -> f64 {
        // cbar'(m) = beta*T * (x / (A - x))^2 with x = 1/(M - m), A = 1/(u*M)
        let r = (p * self.theta / (self.beta * self.duration_h)).sqrt();
        if r <= 0.0 {
            return 0.0;
        }
        let m = self.servers - (1.0 + r) * self.utilization * self.servers / r;
        m * self.theta
    }

    /// Utilization of the remaining servers once `s` kWh is shed at actual
    /// utilization `u_actual`.
    ///
    /// Written as `(u_actual/u) * u_bar / (1 + slack)` with `slack >= 0` below
    /// capacity, so rounding never lifts a feasible reduction above `u_bar`.
    /// Overshoots of capacity within `1e-12` relative count as capacity.
    pub fn utilization_after(&self, u_actual: f64, s: f64) -> f64 {
        let cap = self.capacity();
        let mut left = cap - s;
        if left < 0.0 && -left <= 1e-12 * cap {
            left = 0.0;
        }
        let slack = self.u_bar * left / (self.theta * self.servers * self.utilization);
        u_actual / self.utilization * self.u_bar / (1.0 + slack)
    }
}
