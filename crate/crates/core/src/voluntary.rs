//! Voluntary events: the grid pays `u` per kWh shed and the operator, acting
//! as a profit-maximizing middleman, picks how much to buy from tenants.
//!
//! Tenant `n` bids on `S(b, p) = D_n - b/p` where `D_n` is its exogenous
//! reduction capacity. Diesel is a separate decision and does not enter the
//! tenant market.

use serde::{Deserialize, Serialize};

use crate::cost::{inverse_modified_marginal, CostFunction, Interval, ModifiedCostContext, Side};
use crate::dual;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::mode::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoluntaryTenant {
    pub cost: CostFunction,
    pub capacity_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoluntaryScenario {
    #[serde(rename = "u_per_kwh")]
    pub u: f64,
    pub tenants: Vec<VoluntaryTenant>,
}

impl VoluntaryScenario {
    pub fn new(u: f64, tenants: Vec<(CostFunction, f64)>) -> Self {
        VoluntaryScenario {
            u,
            tenants: tenants
                .into_iter()
                .map(|(cost, capacity_kwh)| VoluntaryTenant { cost, capacity_kwh })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.tenants.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u.is_finite() && self.u > 0.0) {
            return Err(Error::InvalidScenario(format!("u_per_kwh must be positive, got {}", self.u)));
        }
        if self.tenants.is_empty() {
            return Err(Error::InvalidScenario("at least one tenant required".into()));
        }
        for (i, t) in self.tenants.iter().enumerate() {
            if !(t.capacity_kwh.is_finite() && t.capacity_kwh > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "tenant {i}: capacity_kwh must be positive, got {}",
                    t.capacity_kwh
                )));
            }
            t.cost
                .validate()
                .and_then(|_| t.cost.ensure_convex())
                .map_err(|e| Error::InvalidScenario(format!("tenant {i}: {e}")))?;
        }
        Ok(())
    }

    /// `sum(D_n)`.
    pub fn total_capacity(&self) -> f64 {
        self.tenants.iter().map(|t| t.capacity_kwh).sum()
    }

    /// `gamma_n = D_n / sum(D)`.
    pub fn shares(&self) -> Vec<f64> {
        let total = self.total_capacity();
        self.tenants.iter().map(|t| t.capacity_kwh / total).collect()
    }

    /// Largest share `gamma`.
    pub fn max_share(&self) -> f64 {
        self.shares().into_iter().fold(0.0, f64::max)
    }

    /// Largest capacity `D`.
    pub fn max_capacity(&self) -> f64 {
        self.tenants.iter().map(|t| t.capacity_kwh).fold(0.0, f64::max)
    }

    pub fn modified_context(&self, n: usize) -> ModifiedCostContext {
        let total = self.total_capacity();
        let d = self.tenants[n].capacity_kwh;
        ModifiedCostContext::voluntary(self.u, d / total, total, d)
    }

    /// Quantity the operator buys at market price `p`: `sum(D) (u - p)/u`.
    pub fn quantity_at_price(&self, p: f64) -> f64 {
        (self.total_capacity() * (self.u - p) / self.u).clamp(0.0, self.total_capacity())
    }

    fn marginal_floor_holds(&self) -> bool {
        let shares = self.shares();
        self.tenants
            .iter()
            .zip(shares)
            .all(|(t, g)| t.cost.marginal(0.0, Side::Right).ge(g * self.u / 2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorResponse {
    #[serde(rename = "total_reduction_kwh")]
    pub quantity: f64,
    #[serde(rename = "price_per_kwh")]
    pub price: f64,
    /// Bids exceed `u * sum(D)`, so the operator buys nothing.
    pub bids_above_rate: bool,
}

/// Profit-maximizing quantity and the price it implies.
pub fn vdr_operator_response(bids: &[f64], scn: &VoluntaryScenario) -> OperatorResponse {
    let total = scn.total_capacity();
    let b: f64 = bids.iter().sum();
    let quantity = (total - (b * total / scn.u).sqrt()).clamp(0.0, total);
    let rest = total - quantity;
    let price = if rest > 0.0 { b / rest } else { 0.0 };
    OperatorResponse {
        quantity,
        price,
        bids_above_rate: b > scn.u * total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoluntaryFlags {
    /// Every tenant's marginal cost at zero is at least `gamma_n u/2`.
    pub marginal_cost_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoluntaryOutcome {
    pub mode: Mode,
    #[serde(rename = "price_per_kwh")]
    pub price: f64,
    #[serde(rename = "total_reduction_kwh")]
    pub total_reduction: f64,
    #[serde(rename = "reductions_kwh")]
    pub reductions: Vec<f64>,
    #[serde(rename = "bids_usd")]
    pub bids: Vec<f64>,
    #[serde(rename = "payoffs_usd")]
    pub payoffs: Vec<f64>,
    #[serde(rename = "tenant_costs_usd")]
    pub tenant_costs: Vec<f64>,
    #[serde(rename = "operator_utility_usd")]
    pub operator_utility: f64,
    #[serde(rename = "welfare_usd")]
    pub welfare: f64,
    #[serde(rename = "dual_price_per_kwh")]
    pub dual_price: f64,
    pub assumption_flags: VoluntaryFlags,
}

impl VoluntaryOutcome {
    /// `|sum(s) - d|`.
    pub fn balance_error(&self) -> f64 {
        (self.reductions.iter().sum::<f64>() - self.total_reduction).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoluntaryPayoffMode {
    Taking { price: f64 },
    Anticipating,
}

/// Payment minus cost for tenant `n` under the operator's response.
pub fn vdr_tenant_payoff(scn: &VoluntaryScenario, n: usize, bids: &[f64], mode: VoluntaryPayoffMode) -> f64 {
    let p = match mode {
        VoluntaryPayoffMode::Taking { price } => price,
        VoluntaryPayoffMode::Anticipating => vdr_operator_response(bids, scn).price,
    };
    let d = scn.tenants[n].capacity_kwh;
    let b = bids[n];
    let s = if p > 0.0 {
        d - b / p
    } else if b == 0.0 {
        d
    } else {
        f64::NEG_INFINITY
    };
    match scn.tenants[n].cost.eval(s) {
        Extended::Finite(c) => p * d - b - c,
        Extended::Infinite => f64::NEG_INFINITY,
    }
}

/// Largest bid a price-anticipating tenant would submit given the others.
pub fn vdr_bid_cap(n: usize, bids: &[f64], scn: &VoluntaryScenario) -> f64 {
    let d = scn.tenants[n].capacity_kwh;
    let k = d * d * scn.u / scn.total_capacity();
    let others: f64 = bids.iter().enumerate().filter(|(m, _)| *m != n).map(|(_, b)| b).sum();
    0.5 * (k + (k * (k + 4.0 * others)).sqrt())
}

fn response(scn: &VoluntaryScenario, mode: Mode, i: usize, p: f64) -> Interval {
    let t = &scn.tenants[i];
    match mode {
        Mode::Anticipating => inverse_modified_marginal(&t.cost, p, &scn.modified_context(i)),
        _ => t.cost.inverse_marginal_within(p, t.capacity_kwh),
    }
}

fn build_outcome(scn: &VoluntaryScenario, mode: Mode, price: f64, reductions: Vec<f64>) -> VoluntaryOutcome {
    let tenant_costs: Vec<f64> = scn
        .tenants
        .iter()
        .zip(&reductions)
        .map(|(t, &s)| t.cost.cost(s))
        .collect();
    let total: f64 = reductions.iter().sum();
    let bids = scn
        .tenants
        .iter()
        .zip(&reductions)
        .map(|(t, s)| price * (t.capacity_kwh - s))
        .collect();
    let payoffs = reductions
        .iter()
        .zip(&tenant_costs)
        .map(|(s, c)| price * s - c)
        .collect();
    let cost_sum: f64 = tenant_costs.iter().sum();
    VoluntaryOutcome {
        mode,
        price,
        total_reduction: total,
        operator_utility: (scn.u - price) * total,
        welfare: scn.u * total - cost_sum,
        dual_price: price,
        assumption_flags: VoluntaryFlags {
            marginal_cost_floor: scn.marginal_floor_holds(),
        },
        reductions,
        bids,
        payoffs,
        tenant_costs,
    }
}

/// Solves the voluntary market in `mode`.
pub fn solve_vdr(scn: &VoluntaryScenario, mode: Mode) -> Result<VoluntaryOutcome> {
    scn.validate()?;
    let n = scn.n();
    let resp = |i: usize, p: f64| response(scn, mode, i, p);
    match mode {
        Mode::Social => {
            let iv = dual::intervals(n, &resp, scn.u);
            let s = iv.iter().map(|i| i.hi).collect();
            Ok(build_outcome(scn, mode, scn.u, s))
        }
        Mode::Taking | Mode::Anticipating => {
            let bal = dual::solve_balance(n, scn.u, resp, |p| scn.quantity_at_price(p));
            Ok(build_outcome(scn, mode, bal.price, bal.reductions))
        }
        Mode::DieselOnly => Err(Error::Unsupported(
            "voluntary events have no diesel-only outcome".into(),
        )),
    }
}

/// Diesel a voluntary event would run: all of it when the rate beats the
/// diesel cost, none otherwise.
pub fn voluntary_diesel(u: f64, alpha: f64, diesel_capacity_kwh: f64) -> f64 {
    if u > alpha {
        diesel_capacity_kwh
    } else {
        0.0
    }
}

/// Theoretical range a voluntary quantity should fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdrMetrics {
    pub operator_utility_usd: f64,
    pub welfare_usd: f64,
    pub price_ratio: f64,
    pub price_ratio_range: Range,
    pub extra_profit_usd: f64,
    pub extra_profit_range: Range,
    pub welfare_loss_usd: f64,
    pub welfare_loss_range: Range,
    /// Price-anticipating versus price-taking ranges.
    pub markup_range: Range,
    pub reduction_shift_range: Range,
    pub operator_delta_range: Range,
}

/// Utility, welfare, and the bound ranges for `outcome` relative to the
/// social optimum of `scn`.
pub fn vdr_metrics(outcome: &VoluntaryOutcome, scn: &VoluntaryScenario) -> Result<VdrMetrics> {
    let social = solve_vdr(scn, Mode::Social)?;
    let total = scn.total_capacity();
    let d_star = social.total_reduction;
    let u = scn.u;
    let loss_cap = match outcome.mode {
        Mode::Anticipating => {
            let spread: f64 = scn
                .tenants
                .iter()
                .zip(scn.shares())
                .map(|(t, g)| t.capacity_kwh * g)
                .sum();
            0.5 * u * (spread + d_star * d_star / total)
        }
        Mode::Social => 0.0,
        _ => u * d_star * d_star / (2.0 * total),
    };
    Ok(VdrMetrics {
        operator_utility_usd: outcome.operator_utility,
        welfare_usd: outcome.welfare,
        price_ratio: outcome.price / social.price,
        price_ratio_range: Range {
            lower: 1.0 - d_star / total,
            upper: 1.0,
        },
        extra_profit_usd: outcome.operator_utility - social.operator_utility,
        extra_profit_range: Range {
            lower: 0.0,
            upper: u * d_star * d_star / total,
        },
        welfare_loss_usd: social.welfare - outcome.welfare,
        welfare_loss_range: Range {
            lower: 0.0,
            upper: loss_cap,
        },
        markup_range: Range {
            lower: 0.0,
            upper: u * scn.max_share() / 2.0,
        },
        reduction_shift_range: Range {
            lower: -scn.max_capacity() / 2.0,
            upper: 0.0,
        },
        operator_delta_range: Range {
            lower: 0.0,
            upper: u * scn.max_capacity(),
        },
    })
}
