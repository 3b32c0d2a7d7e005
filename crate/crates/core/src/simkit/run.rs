use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::schedule::{EdrEvent, EdrSchedule, EventKind};
use super::trace::{acquire_trace, WorkloadTrace};
use crate::analysis::{check_bounds_mandatory, check_bounds_voluntary, BoundReport};
use crate::cost::{CostFunction, QueueingCostParams};
use crate::error::{Error, Result};
use crate::mandatory::{self, MandatoryOutcome, MandatoryScenario};
use crate::mode::Mode;
use crate::voluntary::{solve_vdr, VoluntaryFlags, VoluntaryOutcome, VoluntaryScenario};

/// Queueing models need some load; an idle tenant is treated as this lightly loaded.
const MIN_UTILIZATION: f64 = 1e-6;

/// Tenant cost functions for one event, in IT-level kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCosts {
    pub costs: Vec<CostFunction>,
    /// Observed utilization at the event start.
    pub actual_utilization: Vec<f64>,
    /// Observed utilization times the overestimation factor.
    pub predicted_utilization: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Builds queueing costs for tenants running at `loads`.
pub fn costs_at_loads(cfg: &SimConfig, loads: &[f64], duration_h: f64) -> EventCosts {
    let mut out = EventCosts {
        costs: Vec::with_capacity(loads.len()),
        actual_utilization: loads.to_vec(),
        predicted_utilization: Vec::with_capacity(loads.len()),
        warnings: Vec::new(),
    };
    for (i, (t, &load)) in cfg.tenants.iter().zip(loads).enumerate() {
        let u = (load * cfg.overestimation).max(MIN_UTILIZATION);
        out.predicted_utilization.push(u);
        if u >= t.u_bar {
            out.warnings.push(format!(
                "tenant {}: predicted utilization {u:.4} reaches u_bar {}; no servers can be shed",
                i + 1,
                t.u_bar
            ));
            out.costs.push(CostFunction::Unavailable);
            continue;
        }
        out.costs.push(CostFunction::Queueing(QueueingCostParams {
            servers: t.servers,
            utilization: u,
            beta: t.beta,
            duration_h,
            theta: t.idle_kw * duration_h,
            u_bar: t.u_bar,
        }));
    }
    out
}

/// Costs from the trace loads in effect when `event` starts.
pub fn build_event_costs(cfg: &SimConfig, trace: &WorkloadTrace, event: &EdrEvent) -> Result<EventCosts> {
    if trace.tenants() != cfg.tenants.len() {
        return Err(Error::InvalidScenario(format!(
            "trace has {} tenants, config has {}",
            trace.tenants(),
            cfg.tenants.len()
        )));
    }
    let loads = trace.loads_at(event.start)?;
    Ok(costs_at_loads(cfg, loads, event.duration_h))
}

/// Figures for one market mode of one event, facility-level throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub mode: Mode,
    pub price_per_kwh: f64,
    pub tenant_reduction_kwh: f64,
    pub diesel_kwh: f64,
    /// Diesel plus tenant cost; for voluntary events, tenant cost less the grid reward.
    pub social_cost_usd: f64,
    /// Diesel plus tenant payments; for voluntary events, payments less the grid reward.
    pub operator_cost_usd: f64,
    pub tenant_payment_usd: f64,
    pub tenant_cost_usd: f64,
    pub tenant_net_profit_usd: f64,
    pub bids_total_usd: f64,
    pub reductions_kwh: Vec<f64>,
    pub payoffs_usd: Vec<f64>,
    pub utilization_after: Vec<f64>,
}

impl ModeRecord {
    pub fn mean_utilization_after(&self) -> f64 {
        self.utilization_after.iter().sum::<f64>() / self.utilization_after.len().max(1) as f64
    }

    pub fn max_utilization_after(&self) -> f64 {
        self.utilization_after.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: usize,
    pub event: EdrEvent,
    pub kind: EventKind,
    pub alpha_per_kwh: f64,
    pub pue: f64,
    pub utilization_before: Vec<f64>,
    pub predicted_utilization: Vec<f64>,
    pub u_bar: Vec<f64>,
    /// Facility-level reduction each tenant could offer.
    pub capacity_kwh: Vec<f64>,
    pub modes: Vec<ModeRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mandatory: Vec<MandatoryOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub voluntary: Vec<VoluntaryOutcome>,
    pub bounds: BoundReport,
    /// Whether the event meets the preconditions under which every bound
    /// in `bounds` is guaranteed: diesel in use at the anticipating outcome
    /// (mandatory only) and marginal costs at zero above the markup floor.
    pub assumptions_hold: bool,
    pub warnings: Vec<String>,
}

impl EventRecord {
    pub fn mode(&self, mode: Mode) -> Option<&ModeRecord> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn total_capacity_kwh(&self) -> f64 {
        self.capacity_kwh.iter().sum()
    }
}

fn utilization_after(costs: &EventCosts, reductions_it: &[f64]) -> Vec<f64> {
    costs
        .costs
        .iter()
        .zip(&costs.actual_utilization)
        .zip(reductions_it)
        .map(|((c, &u), &s)| match c {
            CostFunction::Queueing(q) => q.utilization_after(u, s),
            _ => u,
        })
        .collect()
}

fn mandatory_mode_record(out: &MandatoryOutcome, costs: &EventCosts, pue: f64) -> ModeRecord {
    let reductions_it: Vec<f64> = out.reductions.iter().map(|s| s / pue).collect();
    let tenant_reduction = out.total_reduction();
    let tenant_cost: f64 = out.tenant_costs.iter().sum();
    let net: f64 = out.payoffs.iter().sum();
    ModeRecord {
        mode: out.mode,
        price_per_kwh: out.price,
        tenant_reduction_kwh: tenant_reduction,
        diesel_kwh: out.diesel,
        social_cost_usd: out.social_cost,
        operator_cost_usd: out.operator_cost,
        tenant_payment_usd: net + tenant_cost,
        tenant_cost_usd: tenant_cost,
        tenant_net_profit_usd: net,
        bids_total_usd: out.bids.iter().sum(),
        reductions_kwh: out.reductions.clone(),
        payoffs_usd: out.payoffs.clone(),
        utilization_after: utilization_after(costs, &reductions_it),
    }
}

fn voluntary_mode_record(out: &VoluntaryOutcome, costs: &EventCosts, pue: f64, u: f64) -> ModeRecord {
    let reductions_it: Vec<f64> = out.reductions.iter().map(|s| s / pue).collect();
    let tenant_cost: f64 = out.tenant_costs.iter().sum();
    let net: f64 = out.payoffs.iter().sum();
    let reward = u * out.total_reduction;
    let payment = net + tenant_cost;
    ModeRecord {
        mode: out.mode,
        price_per_kwh: out.price,
        tenant_reduction_kwh: out.total_reduction,
        diesel_kwh: 0.0,
        social_cost_usd: tenant_cost - reward,
        operator_cost_usd: payment - reward,
        tenant_payment_usd: payment,
        tenant_cost_usd: tenant_cost,
        tenant_net_profit_usd: net,
        bids_total_usd: out.bids.iter().sum(),
        reductions_kwh: out.reductions.clone(),
        payoffs_usd: out.payoffs.clone(),
        utilization_after: utilization_after(costs, &reductions_it),
    }
}

/// Voluntary outcome over all tenants from one over the participating ones,
/// converted from IT-level to facility-level quantities.
fn expand_voluntary(out: &VoluntaryOutcome, active: &[usize], n: usize, pue: f64) -> VoluntaryOutcome {
    let spread = |v: &[f64], k: f64| {
        let mut full = vec![0.0; n];
        for (&i, &x) in active.iter().zip(v) {
            full[i] = x * k;
        }
        full
    };
    VoluntaryOutcome {
        price: out.price / pue,
        total_reduction: out.total_reduction * pue,
        reductions: spread(&out.reductions, pue),
        bids: spread(&out.bids, 1.0),
        payoffs: spread(&out.payoffs, 1.0),
        tenant_costs: spread(&out.tenant_costs, 1.0),
        dual_price: out.dual_price / pue,
        ..out.clone()
    }
}

fn idle_voluntary(mode: Mode, n: usize) -> VoluntaryOutcome {
    VoluntaryOutcome {
        mode,
        price: 0.0,
        total_reduction: 0.0,
        reductions: vec![0.0; n],
        bids: vec![0.0; n],
        payoffs: vec![0.0; n],
        tenant_costs: vec![0.0; n],
        operator_utility: 0.0,
        welfare: 0.0,
        dual_price: 0.0,
        assumption_flags: VoluntaryFlags {
            marginal_cost_floor: true,
        },
    }
}

/// Clears one event in every market mode.
///
/// Mandatory events also get the diesel-only baseline. Voluntary events pay
/// `u_per_kwh` per facility kWh; each tenant offers its full capacity, scaled
/// down together when the offers exceed the event target.
pub fn run_event(cfg: &SimConfig, event_id: usize, event: &EdrEvent, costs: &EventCosts) -> Result<EventRecord> {
    let pue = cfg.pue;
    let n = costs.costs.len();
    let capacity_it: Vec<f64> = costs.costs.iter().map(|c| c.capacity().unwrap_or(0.0)).collect();
    let mut record = EventRecord {
        event_id,
        event: event.clone(),
        kind: event.kind(),
        alpha_per_kwh: cfg.alpha_per_kwh,
        pue,
        utilization_before: costs.actual_utilization.clone(),
        predicted_utilization: costs.predicted_utilization.clone(),
        u_bar: cfg.tenants.iter().map(|t| t.u_bar).collect(),
        capacity_kwh: capacity_it.iter().map(|k| k * pue).collect(),
        modes: Vec::new(),
        mandatory: Vec::new(),
        voluntary: Vec::new(),
        bounds: BoundReport::default(),
        assumptions_hold: false,
        warnings: costs.warnings.clone(),
    };
    match event.u_per_kwh {
        None => {
            let scn = MandatoryScenario {
                delta: event.target_kwh,
                alpha: cfg.alpha_per_kwh,
                pue,
                tenants: costs.costs.clone(),
            };
            for mode in [Mode::Taking, Mode::Anticipating, Mode::Social, Mode::DieselOnly] {
                let out = mandatory::solve(&scn, mode)?;
                record.modes.push(mandatory_mode_record(&out, costs, pue));
                record.mandatory.push(out);
            }
            let m = &record.mandatory;
            record.bounds = check_bounds_mandatory(&m[0], &m[1], &m[2], &scn);
            let flags = m[1].assumption_flags;
            record.assumptions_hold = flags.diesel_in_use && flags.marginal_cost_floor;
        }
        Some(u) => {
            let active: Vec<usize> = (0..n).filter(|&i| capacity_it[i] > 0.0).collect();
            let offered: f64 = active.iter().map(|&i| capacity_it[i]).sum::<f64>() * pue;
            let scale = if offered > event.target_kwh {
                event.target_kwh / offered
            } else {
                1.0
            };
            let scn = VoluntaryScenario::new(
                u * pue,
                active.iter().map(|&i| (costs.costs[i].clone(), capacity_it[i] * scale)).collect(),
            );
            let mut it_outcomes = Vec::new();
            for mode in [Mode::Taking, Mode::Anticipating, Mode::Social] {
                let out = if active.is_empty() {
                    idle_voluntary(mode, n)
                } else {
                    let it = solve_vdr(&scn, mode)?;
                    let full = expand_voluntary(&it, &active, n, pue);
                    it_outcomes.push(it);
                    full
                };
                record.modes.push(voluntary_mode_record(&out, costs, pue, u));
                record.voluntary.push(out);
            }
            if let [t, a, s] = it_outcomes.as_slice() {
                record.bounds = check_bounds_voluntary(t, a, s, &scn);
                record.assumptions_hold = a.assumption_flags.marginal_cost_floor;
            } else {
                record.bounds.title = "voluntary bounds (no participating tenants)".into();
            }
        }
    }
    if !record.assumptions_hold && !record.bounds.passed() {
        let names: Vec<&str> = record.bounds.failures().iter().map(|e| e.name.as_str()).collect();
        record.warnings.push(format!(
            "bounds outside their guaranteed regime do not hold: {}",
            names.join(", ")
        ));
    }
    Ok(record)
}

fn run_with_trace(cfg: &SimConfig, schedule: &EdrSchedule, trace: &WorkloadTrace) -> Result<Vec<EventRecord>> {
    let results: Vec<Result<EventRecord>> = schedule
        .events
        .par_iter()
        .enumerate()
        .map(|(id, event)| {
            build_event_costs(cfg, trace, event)
                .and_then(|costs| run_event(cfg, id, event, &costs))
                .map_err(|e| Error::Event {
                    event: id,
                    source: Box::new(e),
                })
        })
        .collect();
    results.into_iter().collect()
}

/// Runs every event of `schedule` against the trace named in `cfg`. Records
/// come back in schedule order.
pub fn run_simulation(cfg: &SimConfig, schedule: &EdrSchedule) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    schedule.validate()?;
    if schedule.is_empty() {
        return Ok(Vec::new());
    }
    let trace = acquire_trace(cfg)?;
    run_with_trace(cfg, schedule, &trace)
}

/// Runs `schedule` against an already loaded trace.
pub fn run_simulation_with_trace(cfg: &SimConfig, schedule: &EdrSchedule, trace: &WorkloadTrace) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    schedule.validate()?;
    run_with_trace(cfg, schedule, trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// The swept parameter value.
    pub x: f64,
    pub price_per_kwh: f64,
    pub tenant_reduction_kwh: f64,
    pub diesel_kwh: f64,
}

fn sweep_point(x: f64, cfg: &SimConfig, costs: &EventCosts, target_kwh: f64, mode: Mode) -> Result<SweepPoint> {
    let scn = MandatoryScenario {
        delta: target_kwh,
        alpha: cfg.alpha_per_kwh,
        pue: cfg.pue,
        tenants: costs.costs.clone(),
    };
    let out = mandatory::solve(&scn, mode)?;
    Ok(SweepPoint {
        x,
        price_per_kwh: out.price,
        tenant_reduction_kwh: out.total_reduction(),
        diesel_kwh: out.diesel,
    })
}

/// One-hour mandatory event of `target_kwh` cleared at each diesel cost in
/// `alphas`, every tenant at utilization `load`.
pub fn alpha_sweep(cfg: &SimConfig, load: f64, target_kwh: f64, mode: Mode, alphas: &[f64]) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let costs = costs_at_loads(cfg, &vec![load; cfg.tenants.len()], 1.0);
    alphas
        .iter()
        .map(|&a| {
            let c = SimConfig {
                alpha_per_kwh: a,
                ..cfg.clone()
            };
            sweep_point(a, &c, &costs, target_kwh, mode)
        })
        .collect()
}

/// One-hour mandatory event of `target_kwh` cleared with every tenant at
/// each utilization in `loads`.
pub fn utilization_sweep(cfg: &SimConfig, loads: &[f64], target_kwh: f64, mode: Mode) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    loads
        .iter()
        .map(|&u| {
            let costs = costs_at_loads(cfg, &vec![u; cfg.tenants.len()], 1.0);
            sweep_point(u, cfg, &costs, target_kwh, mode)
        })
        .collect()
}
