use std::path::PathBuf;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantConfig {
    pub servers: f64,
    pub idle_kw: f64,
    pub peak_kw: f64,
    /// Delay cost rate, $ per unit of mean delay per hour.
    pub beta: f64,
    /// Highest utilization the tenant tolerates after shedding.
    pub u_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticTrace {
    pub mean_utilization: f64,
    /// Half the peak-to-trough swing of the daily cycle.
    pub amplitude: f64,
    pub noise_sd: f64,
    pub start: DateTime<Utc>,
    pub step_minutes: u32,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SyntheticTrace {
    fn default() -> Self {
        SyntheticTrace {
            mean_utilization: 0.3,
            amplitude: 0.08,
            noise_sd: 0.02,
            start: Utc.with_ymd_and_hms(2014, 1, 7, 0, 0, 0).unwrap(),
            step_minutes: 15,
            steps: 96,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    Synthetic(SyntheticTrace),
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub tenants: Vec<TenantConfig>,
    pub pue: f64,
    pub alpha_per_kwh: f64,
    pub trace: TraceSource,
    /// Multiplier applied to observed utilization when predicting load.
    pub overestimation: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let tenant = |beta, u_bar| TenantConfig {
            servers: 2000.0,
            idle_kw: 0.15,
            peak_kw: 0.25,
            beta,
            u_bar,
        };
        SimConfig {
            tenants: vec![tenant(0.1, 0.5), tenant(0.03, 0.6), tenant(0.006, 0.8)],
            pue: 1.5,
            alpha_per_kwh: 0.3,
            trace: TraceSource::Synthetic(SyntheticTrace::default()),
            overestimation: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.tenants.len() < 2 {
            return bad(format!("at least two tenants required, got {}", self.tenants.len()));
        }
        for (i, t) in self.tenants.iter().enumerate() {
            if !(t.servers > 0.0 && t.beta > 0.0 && t.idle_kw > 0.0) {
                return bad(format!("tenant {i}: servers, beta and idle_kw must be positive"));
            }
            if !(t.idle_kw < t.peak_kw) {
                return bad(format!("tenant {i}: idle_kw {} must be below peak_kw {}", t.idle_kw, t.peak_kw));
            }
            if !(t.u_bar > 0.0 && t.u_bar <= 1.0) {
                return bad(format!("tenant {i}: u_bar must lie in (0, 1], got {}", t.u_bar));
            }
        }
        if !(1.0..=3.0).contains(&self.pue) {
            return bad(format!("pue must lie in [1, 3], got {}", self.pue));
        }
        if !(self.alpha_per_kwh > 0.0) {
            return bad(format!("alpha_per_kwh must be positive, got {}", self.alpha_per_kwh));
        }
        if !(self.overestimation > 0.0) {
            return bad(format!("overestimation must be positive, got {}", self.overestimation));
        }
        if let TraceSource::Synthetic(s) = &self.trace {
            if !(0.0..=1.0).contains(&s.mean_utilization) || s.amplitude < 0.0 || s.noise_sd < 0.0 {
                return bad("synthetic trace needs mean_utilization in [0, 1] and nonnegative amplitude and noise".into());
            }
            if s.steps == 0 || s.step_minutes == 0 {
                return bad("synthetic trace needs at least one step of positive length".into());
            }
        }
        Ok(())
    }
}
