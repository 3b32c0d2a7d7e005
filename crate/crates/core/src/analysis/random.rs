use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{check_bounds_mandatory, BoundReport};
use super::kkt::{kkt_residuals, KKT_TOLERANCE};
use crate::cost::{CostFunction, QueueingCostParams};
use crate::mandatory::{solve, MandatoryOutcome, MandatoryScenario};
use crate::mode::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Quadratic,
    PiecewiseLinear,
    Queueing,
}

/// Independent generator for the `index`-th draw under `seed`.
pub fn scenario_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random convex cost whose marginal at zero lies in `[floor, 0.9 alpha]`
/// and which supplies roughly `reach` kWh at price `alpha`.
pub fn random_cost<R: Rng>(rng: &mut R, kind: CostKind, alpha: f64, floor: f64, reach: f64) -> CostFunction {
    let start = rng.random_range(floor..=0.9 * alpha.max(floor / 0.9));
    match kind {
        CostKind::Quadratic => CostFunction::linear_quadratic(start, (alpha - start) / (2.0 * reach)),
        CostKind::PiecewiseLinear => {
            let k = rng.random_range(1..=4usize);
            let mut xs: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0) * reach).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * reach);
            let mut mids: Vec<f64> = (1..xs.len()).map(|_| rng.random_range(start..=alpha)).collect();
            mids.sort_by(f64::total_cmp);
            let mut slopes = vec![start];
            slopes.extend(mids);
            slopes.push(alpha * rng.random_range(1.1..3.0));
            let capacity = rng
                .random_bool(0.3)
                .then(|| xs.last().copied().unwrap_or(0.0) + rng.random_range(0.0..1.0) * reach);
            CostFunction::piecewise_linear(xs, slopes, capacity).expect("generated slopes are nondecreasing")
        }
        CostKind::Queueing => {
            let u = rng.random_range(0.1..0.6);
            let u_bar = (u + rng.random_range(0.1..0.4f64)).min(1.0);
            let capacity = rng.random_range(0.3..1.5) * reach;
            CostFunction::Queueing(QueueingCostParams {
                servers: capacity / (1.0 - u / u_bar),
                utilization: u,
                beta: start * (1.0 - u) * (1.0 - u) / (u * u),
                duration_h: 1.0,
                theta: 1.0,
                u_bar,
            })
        }
    }
}

/// Scenario with `n` tenants drawn from `[n_min, n_max]` and mixed cost
/// kinds, every marginal cost at zero at least `alpha/2N`. Not filtered.
pub fn random_mandatory_scenario<R: Rng>(rng: &mut R, n_min: usize, n_max: usize) -> MandatoryScenario {
    let n = rng.random_range(n_min..=n_max);
    let alpha = rng.random_range(0.5..2.0);
    let delta = rng.random_range(0.5..5.0);
    let floor = alpha / (2.0 * n as f64);
    let kinds = [CostKind::Quadratic, CostKind::PiecewiseLinear, CostKind::Queueing];
    let tenants = (0..n)
        .map(|_| {
            let kind = kinds[rng.random_range(0..kinds.len())];
            let reach = rng.random_range(0.2..1.5) * delta / n as f64;
            random_cost(rng, kind, alpha, floor, reach)
        })
        .collect();
    MandatoryScenario::new(delta, alpha, tenants)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedTriple {
    pub scenario: MandatoryScenario,
    pub taking: MandatoryOutcome,
    pub anticipating: MandatoryOutcome,
    pub social: MandatoryOutcome,
}

/// Draws until the social optimum uses at least 1% diesel and the taking
/// outcome uses some, so that diesel is worth running.
pub fn sample_assumption_satisfying<R: Rng>(rng: &mut R, n_min: usize, n_max: usize) -> SolvedTriple {
    loop {
        let scn = random_mandatory_scenario(rng, n_min, n_max);
        let social = solve(&scn, Mode::Social).expect("generated scenario is valid");
        if social.diesel < 0.01 * scn.delta {
            continue;
        }
        let taking = solve(&scn, Mode::Taking).expect("generated scenario is valid");
        if taking.diesel <= 0.0 {
            continue;
        }
        let anticipating = solve(&scn, Mode::Anticipating).expect("generated scenario is valid");
        return SolvedTriple {
            scenario: scn,
            taking,
            anticipating,
            social,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub index: usize,
    pub tenants: usize,
    pub failed_bounds: Vec<String>,
    pub kkt_residual: f64,
    pub balance_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub count: usize,
    pub seed: u64,
    pub bounds_checked: usize,
    pub worst_normalized_margin: f64,
    pub max_kkt_residual: f64,
    pub max_balance_error: f64,
    pub failures: Vec<SweepFailure>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct SweepItem {
    report: BoundReport,
    kkt: f64,
    balance: f64,
    tenants: usize,
}

/// Solves `count` assumption-satisfying scenarios (2 to 20 tenants) and
/// checks every bound, KKT residual, and balance on each.
pub fn bound_sweep(count: usize, seed: u64) -> SweepSummary {
    let items: Vec<SweepItem> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = scenario_rng(seed, i as u64);
            let t = sample_assumption_satisfying(&mut rng, 2, 20);
            let report = check_bounds_mandatory(&t.taking, &t.anticipating, &t.social, &t.scenario);
            let outcomes = [&t.taking, &t.anticipating, &t.social];
            let kkt = outcomes
                .iter()
                .map(|o| kkt_residuals(o, &t.scenario))
                .fold(0.0, f64::max);
            let balance = outcomes
                .iter()
                .map(|o| o.balance_error(t.scenario.delta) / t.scenario.delta)
                .fold(0.0, f64::max);
            SweepItem {
                report,
                kkt,
                balance,
                tenants: t.scenario.n(),
            }
        })
        .collect();
    let mut summary = SweepSummary {
        count,
        seed,
        bounds_checked: 0,
        worst_normalized_margin: f64::INFINITY,
        max_kkt_residual: 0.0,
        max_balance_error: 0.0,
        failures: Vec::new(),
    };
    for (index, item) in items.into_iter().enumerate() {
        summary.bounds_checked += item.report.entries.len();
        summary.worst_normalized_margin = summary.worst_normalized_margin.min(item.report.worst_normalized_margin());
        summary.max_kkt_residual = summary.max_kkt_residual.max(item.kkt);
        summary.max_balance_error = summary.max_balance_error.max(item.balance);
        let failed: Vec<String> = item.report.failures().iter().map(|e| e.name.clone()).collect();
        if !failed.is_empty() || item.kkt > KKT_TOLERANCE || item.balance > 1e-9 {
            summary.failures.push(SweepFailure {
                index,
                tenants: item.tenants,
                failed_bounds: failed,
                kkt_residual: item.kkt,
                balance_error: item.balance,
            });
        }
    }
    summary
}
