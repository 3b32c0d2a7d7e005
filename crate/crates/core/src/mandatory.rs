//! Mandatory events: the operator must shed `delta` kWh and may cover any
//! shortfall with on-site diesel at `alpha` per kWh.
//!
//! Tenant costs are stated in IT energy. With a PUE of `gamma` every IT kWh
//! saves `gamma` kWh at the facility, so the solvers work on the normalized
//! scenario `(delta/gamma, alpha*gamma)` and report facility-level numbers.

use serde::{Deserialize, Serialize};

use crate::cost::{inverse_modified_marginal, CostFunction, Interval, ModifiedCostContext, Side};
use crate::dual;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::mode::Mode;

fn unit_pue() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MandatoryScenario {
    #[serde(rename = "delta_kwh")]
    pub delta: f64,
    #[serde(rename = "alpha_per_kwh")]
    pub alpha: f64,
    #[serde(default = "unit_pue")]
    pub pue: f64,
    pub tenants: Vec<CostFunction>,
}

impl MandatoryScenario {
    pub fn new(delta: f64, alpha: f64, tenants: Vec<CostFunction>) -> Self {
        MandatoryScenario {
            delta,
            alpha,
            pue: 1.0,
            tenants,
        }
    }

    pub fn n(&self) -> usize {
        self.tenants.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidScenario(format!("delta_kwh must be positive, got {}", self.delta)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "alpha_per_kwh must be positive, got {}",
                self.alpha
            )));
        }
        if !(1.0..=3.0).contains(&self.pue) {
            return Err(Error::InvalidScenario(format!("pue must lie in [1, 3], got {}", self.pue)));
        }
        if self.n() < 2 {
            return Err(Error::InvalidScenario(format!(
                "at least two tenants required, got {}",
                self.n()
            )));
        }
        for (i, c) in self.tenants.iter().enumerate() {
            c.validate()
                .and_then(|_| c.ensure_convex())
                .map_err(|e| Error::InvalidScenario(format!("tenant {i}: {e}")))?;
        }
        Ok(())
    }

    /// Same market in IT energy units: `delta/pue`, `alpha*pue`, PUE 1.
    pub fn normalize_pue(&self) -> MandatoryScenario {
        MandatoryScenario {
            delta: self.delta / self.pue,
            alpha: self.alpha * self.pue,
            pue: 1.0,
            tenants: self.tenants.clone(),
        }
    }

    /// Inverse of [`Self::normalize_pue`] for a normalized scenario.
    pub fn denormalize(&self, pue: f64) -> MandatoryScenario {
        MandatoryScenario {
            delta: self.delta * self.pue * pue,
            alpha: self.alpha / self.pue / pue,
            pue,
            tenants: self.tenants.clone(),
        }
    }

    pub fn modified_context(&self) -> ModifiedCostContext {
        ModifiedCostContext::mandatory(self.alpha, self.n(), self.delta)
    }

    /// Diesel the operator runs when the market price is `p`:
    /// `clamp(N delta p/alpha - (N-1) delta, 0, delta)`.
    pub fn diesel_at_price(&self, p: f64) -> f64 {
        let n = self.n() as f64;
        (n * self.delta * p / self.alpha - (n - 1.0) * self.delta).clamp(0.0, self.delta)
    }

    fn marginal_floor_holds(&self) -> bool {
        let floor = self.alpha / (2.0 * self.n() as f64);
        self.tenants.iter().all(|c| c.marginal(0.0, Side::Right).ge(floor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    /// The outcome uses some diesel.
    pub diesel_in_use: bool,
    /// Every tenant's marginal cost at zero is at least `alpha/2N`.
    pub marginal_cost_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MandatoryOutcome {
    pub mode: Mode,
    #[serde(rename = "price_per_kwh")]
    pub price: f64,
    #[serde(rename = "diesel_kwh")]
    pub diesel: f64,
    #[serde(rename = "reductions_kwh")]
    pub reductions: Vec<f64>,
    #[serde(rename = "bids_usd")]
    pub bids: Vec<f64>,
    #[serde(rename = "payoffs_usd")]
    pub payoffs: Vec<f64>,
    #[serde(rename = "tenant_costs_usd")]
    pub tenant_costs: Vec<f64>,
    #[serde(rename = "operator_cost_usd")]
    pub operator_cost: f64,
    #[serde(rename = "social_cost_usd")]
    pub social_cost: f64,
    #[serde(rename = "dual_price_per_kwh")]
    pub dual_price: f64,
    pub pue: f64,
    pub assumption_flags: AssumptionFlags,
}

impl MandatoryOutcome {
    pub fn total_reduction(&self) -> f64 {
        self.reductions.iter().sum()
    }

    /// `|sum(s) + y - delta|`.
    pub fn balance_error(&self, delta: f64) -> f64 {
        (self.total_reduction() + self.diesel - delta).abs()
    }

    /// Facility-level figures from IT-level ones.
    pub fn to_facility_units(&self, pue: f64) -> MandatoryOutcome {
        self.rescale(pue)
    }

    /// IT-level figures, the units the solvers work in.
    pub fn to_it_units(&self) -> MandatoryOutcome {
        self.rescale(1.0 / self.pue)
    }

    fn rescale(&self, k: f64) -> MandatoryOutcome {
        MandatoryOutcome {
            price: self.price / k,
            diesel: self.diesel * k,
            reductions: self.reductions.iter().map(|s| s * k).collect(),
            dual_price: self.dual_price / k,
            pue: self.pue * k,
            ..self.clone()
        }
    }
}

/// `delta - b/p`.
pub fn supply(b: f64, p: f64, delta: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::Undefined("supply at a non-positive price"));
    }
    Ok(delta - b / p)
}

/// `sum(b) / ((N-1) delta + y)`.
pub fn clearing_price(bids: &[f64], y: f64, delta: f64) -> Result<f64> {
    let denom = (bids.len() as f64 - 1.0) * delta + y;
    if denom <= 0.0 {
        return Err(Error::Undefined("clearing price with zero denominator"));
    }
    Ok(bids.iter().sum::<f64>() / denom)
}

/// Diesel that minimizes the operator's cost against the bids.
pub fn diesel_response(bids: &[f64], scn: &MandatoryScenario) -> f64 {
    let n = bids.len() as f64;
    let total: f64 = bids.iter().sum();
    ((total * n * scn.delta / scn.alpha).sqrt() - (n - 1.0) * scn.delta).clamp(0.0, scn.delta)
}

pub fn operator_cost(p: f64, y: f64, scn: &MandatoryScenario) -> f64 {
    p * (scn.delta - y) + scn.alpha * y
}

/// `b_n = p (delta - s_n)`.
pub fn recover_bids(p: f64, reductions: &[f64], delta: f64) -> Vec<f64> {
    reductions.iter().map(|s| p * (delta - s)).collect()
}

/// Smallest bid keeping supply within `capacity` at any price up to alpha.
pub fn bid_floor(capacity: f64, scn: &MandatoryScenario) -> f64 {
    (scn.alpha * (scn.delta - capacity)).max(0.0)
}

/// Largest bid a price-anticipating tenant would submit given the others.
pub fn bid_cap(n: usize, bids: &[f64], scn: &MandatoryScenario) -> f64 {
    let k = scn.alpha * scn.delta / bids.len() as f64;
    let others: f64 = bids.iter().enumerate().filter(|(m, _)| *m != n).map(|(_, b)| b).sum();
    0.5 * (k + (k * (k + 4.0 * others)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayoffMode {
    /// The price is held fixed.
    Taking { price: f64 },
    /// The operator responds to the bids with diesel and a clearing price.
    Anticipating,
}

/// Payment minus cost for tenant `n`. Negative implied reductions cost
/// nothing; reductions past capacity give `-inf`.
pub fn tenant_payoff(scn: &MandatoryScenario, n: usize, bids: &[f64], mode: PayoffMode) -> f64 {
    let p = match mode {
        PayoffMode::Taking { price } => price,
        PayoffMode::Anticipating => {
            let y = diesel_response(bids, scn);
            let denom = (bids.len() as f64 - 1.0) * scn.delta + y;
            if denom > 0.0 {
                bids.iter().sum::<f64>() / denom
            } else {
                0.0
            }
        }
    };
    let b = bids[n];
    let s = if p > 0.0 {
        scn.delta - b / p
    } else if b == 0.0 {
        scn.delta
    } else {
        f64::NEG_INFINITY
    };
    match scn.tenants[n].eval(s) {
        Extended::Finite(c) => p * scn.delta - b - c,
        Extended::Infinite => f64::NEG_INFINITY,
    }
}

/// Lowest total supply, tenants plus diesel, offered at dual price `p`.
pub fn total_supply(scn: &MandatoryScenario, mode: Mode, p: f64) -> f64 {
    let ctx = scn.modified_context();
    let tenants: f64 = (0..scn.n())
        .map(|i| response(scn, mode, &ctx, i, p).lo)
        .sum();
    let y = if mode == Mode::Social {
        if p >= scn.alpha {
            scn.delta
        } else {
            0.0
        }
    } else {
        scn.diesel_at_price(p)
    };
    tenants + y
}

fn response(scn: &MandatoryScenario, mode: Mode, ctx: &ModifiedCostContext, i: usize, p: f64) -> Interval {
    let c = &scn.tenants[i];
    match mode {
        Mode::Anticipating => inverse_modified_marginal(c, p, ctx),
        _ => c.inverse_marginal_within(p, scn.delta),
    }
}

fn absorb(mut s: Vec<f64>, delta: f64) -> (Vec<f64>, f64) {
    let total: f64 = s.iter().sum();
    if total > delta {
        let k = delta / total;
        s.iter_mut().for_each(|v| *v *= k);
        (s, 0.0)
    } else {
        (s, delta - total)
    }
}

fn build_outcome(scn: &MandatoryScenario, mode: Mode, price: f64, reductions: Vec<f64>, diesel: f64) -> MandatoryOutcome {
    let tenant_costs: Vec<f64> = scn
        .tenants
        .iter()
        .zip(&reductions)
        .map(|(c, &s)| c.cost(s))
        .collect();
    let bids = recover_bids(price, &reductions, scn.delta);
    let payoffs = reductions
        .iter()
        .zip(&tenant_costs)
        .map(|(s, c)| price * s - c)
        .collect();
    let social_cost = scn.alpha * diesel + tenant_costs.iter().sum::<f64>();
    MandatoryOutcome {
        mode,
        price,
        diesel,
        operator_cost: operator_cost(price, diesel, scn),
        social_cost,
        dual_price: price,
        pue: 1.0,
        assumption_flags: AssumptionFlags {
            diesel_in_use: diesel > 0.0,
            marginal_cost_floor: scn.marginal_floor_holds(),
        },
        reductions,
        bids,
        payoffs,
        tenant_costs,
    }
}

fn solve_normalized(scn: &MandatoryScenario, mode: Mode) -> MandatoryOutcome {
    let n = scn.n();
    let ctx = scn.modified_context();
    let resp = |i: usize, p: f64| response(scn, mode, &ctx, i, p);
    match mode {
        Mode::Social => {
            let at_alpha = dual::intervals(n, &resp, scn.alpha);
            let lo: f64 = at_alpha.iter().map(|i| i.lo).sum();
            if lo <= scn.delta {
                let hi: f64 = at_alpha.iter().map(|i| i.hi).sum();
                let s = dual::settle(&at_alpha, hi.min(scn.delta));
                let (s, y) = absorb(s, scn.delta);
                build_outcome(scn, mode, scn.alpha, s, y)
            } else {
                let bal = dual::solve_balance(n, scn.alpha, resp, |_| scn.delta);
                let (s, y) = absorb(bal.reductions, scn.delta);
                build_outcome(scn, mode, bal.price, s, y)
            }
        }
        Mode::Taking | Mode::Anticipating => {
            let bal = dual::solve_balance(n, scn.alpha * (1.0 + 1e-9), resp, |p| {
                scn.delta - scn.diesel_at_price(p)
            });
            let (s, y) = absorb(bal.reductions, scn.delta);
            build_outcome(scn, mode, bal.price.min(scn.alpha), s, y)
        }
        Mode::DieselOnly => diesel_only_normalized(scn),
    }
}

fn diesel_only_normalized(scn: &MandatoryScenario) -> MandatoryOutcome {
    let mut out = build_outcome(scn, Mode::DieselOnly, scn.alpha, vec![0.0; scn.n()], scn.delta);
    out.payoffs = vec![0.0; scn.n()];
    out
}

/// Solves `scn` in `mode` and reports facility-level figures.
pub fn solve(scn: &MandatoryScenario, mode: Mode) -> Result<MandatoryOutcome> {
    scn.validate()?;
    let norm = scn.normalize_pue();
    let mut out = solve_normalized(&norm, mode).to_facility_units(scn.pue);
    if mode == Mode::DieselOnly {
        // exact in facility units, free of the pue round trip
        let cost = scn.alpha * scn.delta;
        out.price = scn.alpha;
        out.dual_price = scn.alpha;
        out.diesel = scn.delta;
        out.operator_cost = cost;
        out.social_cost = cost;
    }
    Ok(out)
}

/// Minimizes diesel plus tenant cost.
pub fn solve_social_optimum(scn: &MandatoryScenario) -> Result<MandatoryOutcome> {
    solve(scn, Mode::Social)
}

/// Competitive equilibrium with price-taking tenants.
pub fn solve_price_taking(scn: &MandatoryScenario) -> Result<MandatoryOutcome> {
    solve(scn, Mode::Taking)
}

/// Equilibrium of the bidding game with price-anticipating tenants.
pub fn solve_price_anticipating(scn: &MandatoryScenario) -> Result<MandatoryOutcome> {
    solve(scn, Mode::Anticipating)
}

/// Baseline with no tenant participation.
pub fn diesel_only(scn: &MandatoryScenario) -> Result<MandatoryOutcome> {
    solve(scn, Mode::DieselOnly)
}
