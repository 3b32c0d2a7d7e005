//! End-to-end acceptance checks, run as a plain binary so that every
//! criterion prints its PASS/FAIL line. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use chrono::NaiveDate;
use coloedr::analysis::{
    bound_sweep, certify_nash, check_bounds_voluntary, check_modified_cost_bounds, exhaustive_equilibrium_search,
    kkt_residuals, modified_derivative_error, nash_tolerance, random_cost, sample_assumption_satisfying, scenario_rng,
    vdr_kkt_residuals, CostKind, MandatoryGame, VoluntaryGame, KKT_TOLERANCE,
};
use coloedr::cost::{make_worst_case_instance, ModifiedCostContext, WorstCaseSpec};
use coloedr::mandatory::{solve, MandatoryOutcome, MandatoryScenario};
use coloedr::simkit::{acquire_trace, alpha_sweep, build_event_costs, winter_event_day, run_simulation, SimConfig};
use coloedr::voluntary::{solve_vdr, vdr_metrics, VdrMetrics, VoluntaryOutcome, VoluntaryScenario};
use coloedr::{CostFunction, Mode};
use rand::Rng;

fn verdict(id: u32, name: &str, ok: bool, detail: String) -> bool {
    println!("criterion {id} {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    ok
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn quad() -> MandatoryScenario {
    MandatoryScenario::new(1.0, 1.0, vec![CostFunction::quadratic(2.0); 2])
}

fn quad_vdr() -> VoluntaryScenario {
    VoluntaryScenario::new(1.0, vec![(CostFunction::quadratic(2.0), 1.0); 2])
}

fn worst_case() -> MandatoryScenario {
    let spec = WorstCaseSpec {
        epsilon: 0.2,
        delta: 1.0,
        alpha: 1.0,
        n: 2,
    };
    MandatoryScenario::new(1.0, 1.0, make_worst_case_instance(&spec).unwrap())
}

/// Worst relative balance error and KKT residual over `outcomes`.
fn mandatory_health(scn: &MandatoryScenario, outcomes: &[&MandatoryOutcome]) -> (f64, f64) {
    outcomes.iter().fold((0.0, 0.0), |(b, k), o| {
        (
            f64::max(b, o.balance_error(scn.delta) / scn.delta),
            f64::max(k, kkt_residuals(o, scn)),
        )
    })
}

fn voluntary_health(scn: &VoluntaryScenario, outcomes: &[&VoluntaryOutcome]) -> (f64, f64) {
    let scale = scn.total_capacity();
    outcomes.iter().fold((0.0, 0.0), |(b, k), o| {
        (f64::max(b, o.balance_error() / scale), f64::max(k, vdr_kkt_residuals(o, scn)))
    })
}

fn criterion_1_closed_form_mandatory_instance() -> bool {
    let scn = quad();
    let start = Instant::now();
    let t = solve(&scn, Mode::Taking).unwrap();
    let s = solve(&scn, Mode::Social).unwrap();
    let elapsed = start.elapsed();
    let tol = 1e-8;
    let ok = close(t.price, 0.8, tol)
        && close(t.diesel, 0.6, tol)
        && t.reductions.iter().all(|&x| close(x, 0.2, tol))
        && close(s.price, 1.0, tol)
        && close(s.diesel, 0.5, tol)
        && s.reductions.iter().all(|&x| close(x, 0.25, tol))
        && elapsed < Duration::from_millis(10);
    verdict(
        1,
        "closed-form mandatory instance",
        ok,
        format!(
            "p_t={:.10} y_t={:.10} p*={:.10} y*={:.10} in {elapsed:?}",
            t.price, t.diesel, s.price, s.diesel
        ),
    )
}

fn criterion_2_worst_case_diesel_gap() -> bool {
    let scn = worst_case();
    let s = solve(&scn, Mode::Social).unwrap();
    let a = solve(&scn, Mode::Anticipating).unwrap();
    let gap = a.diesel - s.diesel;
    let ok = close(gap, 0.8, 1e-6) && close(s.reductions[0], 0.9, 1e-6) && close(a.reductions[0], 0.1, 1e-6);
    verdict(
        2,
        "worst-case diesel gap",
        ok,
        format!("gap={gap:.9} s1*={:.9} s1_a={:.9}", s.reductions[0], a.reductions[0]),
    )
}

fn criterion_3_randomized_bound_sweep() -> bool {
    let start = Instant::now();
    let summary = bound_sweep(1000, 1);
    let elapsed = start.elapsed();
    let ok = summary.passed() && summary.worst_normalized_margin >= -1e-7 && elapsed < Duration::from_secs(60);
    verdict(
        3,
        "randomized bound sweep",
        ok,
        format!(
            "{} scenarios, {} bounds, {} failures, worst margin {:.3e}, max kkt {:.3e}, {elapsed:?}",
            summary.count,
            summary.bounds_checked,
            summary.failures.len(),
            summary.worst_normalized_margin,
            summary.max_kkt_residual
        ),
    )
}

fn criterion_4_epsilon_nash_certification() -> bool {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut min_evals = usize::MAX;
    for i in 0..50 {
        let t = sample_assumption_satisfying(&mut scenario_rng(4, i), 2, 3);
        for o in [&t.taking, &t.anticipating] {
            let game = MandatoryGame::for_outcome(&t.scenario, o);
            let tol = nash_tolerance(o, &t.scenario);
            let cert = certify_nash(&game, &o.bids, 1000, tol);
            worst = worst.max(cert.max_improvement / tol);
            min_evals = min_evals.min(cert.entries.iter().map(|e| e.evaluations).min().unwrap());
            failures += usize::from(!cert.passed);
        }
    }
    let ok = failures == 0 && min_evals >= 2000;
    verdict(
        4,
        "epsilon-Nash certification",
        ok,
        format!("100 outcomes, {failures} failures, worst improvement/tolerance {worst:.3e}, {min_evals} evaluations per tenant"),
    )
}

fn criterion_5_exhaustive_two_tenant_search() -> bool {
    let mut misses = Vec::new();
    for i in 0..10 {
        let t = sample_assumption_satisfying(&mut scenario_rng(5, i), 2, 2);
        for o in [&t.taking, &t.anticipating] {
            let search = exhaustive_equilibrium_search(&t.scenario, o.mode, 120).unwrap();
            if search.clusters.len() != 1 || !search.contains(&o.to_it_units().bids) {
                misses.push(format!("instance {i} {}: {} clusters", o.mode, search.clusters.len()));
            }
        }
    }
    verdict(
        5,
        "exhaustive two-tenant search",
        misses.is_empty(),
        if misses.is_empty() {
            "10 instances, single cluster containing both solver outcomes".into()
        } else {
            misses.join("; ")
        },
    )
}

fn criterion_6_modified_cost_sandwiches() -> bool {
    let kinds = [CostKind::Quadratic, CostKind::PiecewiseLinear, CostKind::Queueing];
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut worst_derivative: f64 = 0.0;
    for (k, kind) in kinds.into_iter().enumerate() {
        for i in 0..8 {
            let mut rng = scenario_rng(6, (k * 100 + i) as u64);
            let n = rng.random_range(2..=6usize);
            let alpha = rng.random_range(0.5..2.0);
            let delta = rng.random_range(0.5..5.0);
            let c = random_cost(&mut rng, kind, alpha, alpha / (2.0 * n as f64), delta / n as f64);
            let total = rng.random_range(1.0..5.0);
            let d_n = rng.random_range(0.1..1.0) * total;
            let contexts = [
                ModifiedCostContext::mandatory(alpha, n, delta),
                ModifiedCostContext::voluntary(alpha, d_n / total, total, d_n),
            ];
            for ctx in contexts {
                let report = check_modified_cost_bounds(&c, &ctx, 200);
                let err = modified_derivative_error(&c, &ctx, 200);
                worst_derivative = worst_derivative.max(err);
                checked += 1;
                if !report.passed() || err > 1e-5 {
                    failures.push(format!("{kind:?} #{i}: derivative {err:.2e}\n{}", report.to_text()));
                }
            }
        }
    }
    verdict(
        6,
        "modified-cost sandwiches",
        failures.is_empty(),
        format!(
            "{checked} cost/context pairs, worst derivative error {worst_derivative:.2e}{}",
            failures.join("\n")
        ),
    )
}

fn inside(x: f64, lo: f64, hi: f64, tol: f64) -> bool {
    x >= lo - tol && x <= hi + tol
}

fn metrics_green(m: &VdrMetrics, tol: f64) -> bool {
    inside(m.price_ratio, m.price_ratio_range.lower, m.price_ratio_range.upper, tol)
        && inside(m.extra_profit_usd, m.extra_profit_range.lower, m.extra_profit_range.upper, tol)
        && inside(m.welfare_loss_usd, m.welfare_loss_range.lower, m.welfare_loss_range.upper, tol)
}

fn criterion_7_voluntary_closed_form_instance() -> bool {
    let scn = quad_vdr();
    let t = solve_vdr(&scn, Mode::Taking).unwrap();
    let a = solve_vdr(&scn, Mode::Anticipating).unwrap();
    let s = solve_vdr(&scn, Mode::Social).unwrap();
    let mt = vdr_metrics(&t, &scn).unwrap();
    let ma = vdr_metrics(&a, &scn).unwrap();
    let report = check_bounds_voluntary(&t, &a, &s, &scn);
    let tol = 1e-9;
    let closed_form = close(t.price, 0.8, tol)
        && close(t.total_reduction, 0.4, tol)
        && close(t.operator_utility, 0.08, tol)
        && close(mt.welfare_loss_usd, 0.01, tol)
        && close(mt.welfare_loss_range.upper, 0.0625, tol);
    let markup = a.price - t.price;
    let shift = a.total_reduction - t.total_reduction;
    let anticipating_inside = inside(markup, ma.markup_range.lower, ma.markup_range.upper, tol)
        && inside(shift, ma.reduction_shift_range.lower, ma.reduction_shift_range.upper, tol)
        && metrics_green(&ma, tol);
    let ok = closed_form && metrics_green(&mt, tol) && report.passed() && anticipating_inside;
    verdict(
        7,
        "voluntary closed-form instance",
        ok,
        format!(
            "p_t={:.10} d_t={:.10} U_o={:.10} loss={:.10}; p_a={:.6} d_a={:.6}; report {}",
            t.price,
            t.total_reduction,
            t.operator_utility,
            mt.welfare_loss_usd,
            a.price,
            a.total_reduction,
            if report.passed() { "green" } else { "red" }
        ),
    )
}

fn case_study_day() -> coloedr::simkit::EdrSchedule {
    winter_event_day(NaiveDate::from_ymd_opt(2014, 1, 7).unwrap(), 900.0)
}

fn criterion_8_case_study_properties() -> bool {
    let cfg = SimConfig::default();
    let schedule = case_study_day();
    let start = Instant::now();
    let records = run_simulation(&cfg, &schedule).unwrap();
    let elapsed = start.elapsed();
    let alpha = cfg.alpha_per_kwh;
    let mut problems = Vec::new();
    for r in &records {
        let delta = r.event.target_kwh;
        let diesel_cost = r.mode(Mode::DieselOnly).unwrap().social_cost_usd;
        if diesel_cost != alpha * delta {
            problems.push(format!("event {}: diesel-only cost {diesel_cost}", r.event_id));
        }
        for m in &r.modes {
            if m.price_per_kwh > alpha * (1.0 + 1e-12) {
                problems.push(format!("event {} {}: price {}", r.event_id, m.mode, m.price_per_kwh));
            }
            if (m.tenant_reduction_kwh + m.diesel_kwh - delta).abs() > 1e-9 * delta {
                problems.push(format!("event {} {}: unbalanced", r.event_id, m.mode));
            }
            if m.utilization_after.iter().zip(&r.u_bar).any(|(u, ub)| u > ub) {
                problems.push(format!("event {} {}: utilization above limit", r.event_id, m.mode));
            }
            if m.mode != Mode::DieselOnly {
                let strict = r.total_capacity_kwh() > 0.0;
                let sc = m.social_cost_usd;
                if sc > diesel_cost || (strict && sc >= diesel_cost) {
                    problems.push(format!("event {} {}: social cost {sc} vs {diesel_cost}", r.event_id, m.mode));
                }
            }
        }
    }
    let alphas: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let mut saturation = Vec::new();
    for mode in [Mode::Taking, Mode::Anticipating] {
        let sweep = alpha_sweep(&cfg, 0.3, 900.0, mode, &alphas).unwrap();
        let series: Vec<f64> = sweep.iter().map(|p| p.tenant_reduction_kwh).collect();
        let nondecreasing = series.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        let last = *series.last().unwrap();
        let flat_tail = series[series.len() - 3..].iter().all(|&v| close(v, last, 1e-6 * last));
        let first_step = series[1] - series[0];
        if !(nondecreasing && flat_tail && first_step > 0.0 && last < 900.0) {
            problems.push(format!("{mode} alpha sweep not monotone-then-flat: {series:?}"));
        }
        saturation.push(format!("{mode} saturates at {last:.1} kWh"));
    }
    let ok = records.len() == 24 && problems.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        8,
        "case-study properties",
        ok,
        format!(
            "{} events in {elapsed:?}; {}{}",
            records.len(),
            saturation.join(", "),
            problems.iter().map(|p| format!("\n  {p}")).collect::<String>()
        ),
    )
}

fn criterion_9_feasibility_and_conservation() -> bool {
    let mut balance: f64 = 0.0;
    let mut kkt: f64 = 0.0;
    let mut solves = 0usize;
    let mut track = |(b, k): (f64, f64), count: usize| {
        balance = balance.max(b);
        kkt = kkt.max(k);
        solves += count;
    };

    for scn in [quad(), worst_case()] {
        let outs: Vec<MandatoryOutcome> = [Mode::Taking, Mode::Anticipating, Mode::Social]
            .into_iter()
            .map(|m| solve(&scn, m).unwrap())
            .collect();
        track(mandatory_health(&scn, &outs.iter().collect::<Vec<_>>()), 3);
    }

    let summary = bound_sweep(1000, 1);
    track((summary.max_balance_error, summary.max_kkt_residual), 3 * summary.count);

    for (seed, count, n_max) in [(4, 50, 3), (5, 10, 2)] {
        for i in 0..count {
            let t = sample_assumption_satisfying(&mut scenario_rng(seed, i), 2, n_max);
            track(mandatory_health(&t.scenario, &[&t.taking, &t.anticipating, &t.social]), 3);
        }
    }

    let vdr = quad_vdr();
    let vouts: Vec<VoluntaryOutcome> = [Mode::Taking, Mode::Anticipating, Mode::Social]
        .into_iter()
        .map(|m| solve_vdr(&vdr, m).unwrap())
        .collect();
    track(voluntary_health(&vdr, &vouts.iter().collect::<Vec<_>>()), 3);
    let vdr_nash = vouts[..2].iter().all(|o| {
        let game = VoluntaryGame::for_outcome(&vdr, o);
        certify_nash(&game, &o.bids, 1000, 1e-4 * o.price * vdr.total_capacity()).passed
    });

    let cfg = SimConfig::default();
    let schedule = case_study_day();
    let trace = acquire_trace(&cfg).unwrap();
    let records = run_simulation(&cfg, &schedule).unwrap();
    for (r, event) in records.iter().zip(&schedule.events) {
        let costs = build_event_costs(&cfg, &trace, event).unwrap();
        let scn = MandatoryScenario {
            delta: event.target_kwh,
            alpha: cfg.alpha_per_kwh,
            pue: cfg.pue,
            tenants: costs.costs,
        };
        track(mandatory_health(&scn, &r.mandatory[..3].iter().collect::<Vec<_>>()), 3);
    }

    let ok = balance <= 1e-9 && kkt <= KKT_TOLERANCE && vdr_nash;
    verdict(
        9,
        "feasibility and conservation",
        ok,
        format!("{solves} solves, max relative balance error {balance:.3e}, max kkt residual {kkt:.3e}"),
    )
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_closed_form_mandatory_instance,
        criterion_2_worst_case_diesel_gap,
        criterion_3_randomized_bound_sweep,
        criterion_4_epsilon_nash_certification,
        criterion_5_exhaustive_two_tenant_search,
        criterion_6_modified_cost_sandwiches,
        criterion_7_voluntary_closed_form_instance,
        criterion_8_case_study_properties,
        criterion_9_feasibility_and_conservation,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
