use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cost::{modified_cost_between, modified_cost_value, modified_marginal, CostFunction, ModifiedCostContext, Side};
use crate::extended::Extended;
use crate::mandatory::{MandatoryOutcome, MandatoryScenario};
use crate::voluntary::{VoluntaryOutcome, VoluntaryScenario};

/// Relative slack allowed on every bound, in units of the quantity's scale.
const REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub observed: f64,
    /// Distance to the nearer bound; negative when outside.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub title: String,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn new(title: impl Into<String>) -> Self {
        BoundReport {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, lower: Option<f64>, upper: Option<f64>, observed: f64, tolerance: f64) {
        let lo = lower.map_or(f64::INFINITY, |l| observed - l);
        let hi = upper.map_or(f64::INFINITY, |u| u - observed);
        let margin = lo.min(hi);
        self.entries.push(BoundEntry {
            name: name.to_string(),
            lower,
            upper,
            observed,
            margin,
            tolerance,
            pass: margin >= -tolerance && observed.is_finite(),
        });
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&BoundEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Smallest margin relative to each entry's tolerance scale.
    pub fn worst_normalized_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.margin / (e.tolerance / REL_TOL))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_text(&self) -> String {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(
            out,
            "{:<width$}  {:>13}  {:>13}  {:>13}  {:>13}  verdict",
            "name", "lower", "observed", "upper", "margin"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<width$}  {:>13}  {:>13.6e}  {:>13}  {:>13.6e}  {}",
                e.name,
                fmt_opt(e.lower),
                e.observed,
                fmt_opt(e.upper),
                e.margin,
                if e.pass { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

/// Compares the three mandatory outcomes of one scenario.
pub fn check_bounds_mandatory(
    taking: &MandatoryOutcome,
    anticipating: &MandatoryOutcome,
    social: &MandatoryOutcome,
    scn: &MandatoryScenario,
) -> BoundReport {
    let norm = scn.normalize_pue();
    let (t, a, s) = (taking.to_it_units(), anticipating.to_it_units(), social.to_it_units());
    let n = norm.n() as f64;
    let (alpha, delta) = (norm.alpha, norm.delta);
    let money = REL_TOL * alpha * delta;
    let price = REL_TOL * alpha;
    let energy = REL_TOL * delta;
    let ratio = |p: f64| if s.price > 0.0 { p / s.price } else { 1.0 };
    let mut r = BoundReport::new("mandatory bounds");
    let floor = Some((n - 1.0) / n);
    r.push("price_ratio_taking", floor, Some(1.0), ratio(t.price), REL_TOL);
    r.push("price_ratio_anticipating", floor, Some(1.0), ratio(a.price), REL_TOL);
    let cap = Some(alpha * delta / n);
    r.push("operator_saving_taking", Some(0.0), cap, s.operator_cost - t.operator_cost, money);
    r.push("operator_saving_anticipating", Some(0.0), cap, s.operator_cost - a.operator_cost, money);
    r.push(
        "welfare_loss_taking",
        Some(0.0),
        Some(alpha * delta / (2.0 * n)),
        t.social_cost - s.social_cost,
        money,
    );
    r.push("welfare_loss_anticipating", Some(0.0), cap, a.social_cost - s.social_cost, money);
    r.push("diesel_excess_taking", Some(0.0), Some(delta), t.diesel - s.diesel, energy);
    r.push("diesel_excess_anticipating", Some(0.0), Some(delta), a.diesel - s.diesel, energy);
    r.push("diesel_shift_anticipating", Some(0.0), Some(delta / 2.0), a.diesel - t.diesel, energy);
    r.push("price_markup_anticipating", Some(0.0), Some(alpha / (2.0 * n)), a.price - t.price, price);
    r.push("price_gap_anticipating", Some(0.0), Some(alpha), s.price - a.price, price);
    r.push("operator_cost_gap", Some(0.0), cap, a.operator_cost - t.operator_cost, money);
    r
}

/// Compares the three voluntary outcomes of one scenario.
pub fn check_bounds_voluntary(
    taking: &VoluntaryOutcome,
    anticipating: &VoluntaryOutcome,
    social: &VoluntaryOutcome,
    scn: &VoluntaryScenario,
) -> BoundReport {
    let u = scn.u;
    let total = scn.total_capacity();
    let d_star = social.total_reduction;
    let money = REL_TOL * u * total;
    let price = REL_TOL * u;
    let energy = REL_TOL * total;
    let ratio = |p: f64| p / social.price;
    let mut r = BoundReport::new("voluntary bounds");
    let floor = Some(1.0 - d_star / total);
    r.push("price_ratio_taking", floor, Some(1.0), ratio(taking.price), REL_TOL);
    r.push("price_ratio_anticipating", floor, Some(1.0), ratio(anticipating.price), REL_TOL);
    let profit_cap = Some(u * d_star * d_star / total);
    let extra = |o: &VoluntaryOutcome| o.operator_utility - social.operator_utility;
    r.push("extra_profit_taking", Some(0.0), profit_cap, extra(taking), money);
    r.push("extra_profit_anticipating", Some(0.0), profit_cap, extra(anticipating), money);
    let spread: f64 = scn
        .tenants
        .iter()
        .zip(scn.shares())
        .map(|(t, g)| t.capacity_kwh * g)
        .sum();
    r.push(
        "welfare_loss_taking",
        Some(0.0),
        Some(u * d_star * d_star / (2.0 * total)),
        social.welfare - taking.welfare,
        money,
    );
    r.push(
        "welfare_loss_anticipating",
        Some(0.0),
        Some(0.5 * u * (spread + d_star * d_star / total)),
        social.welfare - anticipating.welfare,
        money,
    );
    r.push(
        "price_markup_anticipating",
        Some(0.0),
        Some(u * scn.max_share() / 2.0),
        anticipating.price - taking.price,
        price,
    );
    r.push(
        "reduction_shift_anticipating",
        Some(-scn.max_capacity() / 2.0),
        Some(0.0),
        anticipating.total_reduction - taking.total_reduction,
        energy,
    );
    r.push(
        "operator_utility_gap",
        Some(0.0),
        Some(u * scn.max_capacity()),
        taking.operator_utility - anticipating.operator_utility,
        money,
    );
    r.push("operator_utility_social", Some(0.0), Some(0.0), social.operator_utility, money);
    r.push(
        "reduction_gap_taking",
        Some(0.0),
        Some(total),
        d_star - taking.total_reduction,
        energy,
    );
    r.push("price_gap_anticipating", Some(0.0), Some(u), social.price - anticipating.price, price);
    r
}

fn finite_or(v: Extended, default: f64) -> f64 {
    v.finite().unwrap_or(default)
}

/// Value and slope sandwiches of the modified cost on `grid` points of
/// `[0, min(capacity, horizon)]`. Each entry reports the worst slack.
pub fn check_modified_cost_bounds(c: &CostFunction, ctx: &ModifiedCostContext, grid: usize) -> BoundReport {
    let grid = grid.max(2);
    let top = c.domain_limit(ctx.horizon);
    let a = ctx.markup;
    let top_cost = finite_or(c.eval(top), 0.0);
    let value_tol = 1e-8 * (1.0 + top_cost + top * a);
    let slope_scale = a + finite_or(c.marginal(top, Side::Left), 0.0);
    let slope_tol = 1e-10 * (1.0 + slope_scale);
    let mut worst = [f64::INFINITY; 5];
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..grid {
        let s = top * i as f64 / (grid - 1) as f64;
        let cs = c.cost(s);
        // accumulate the value piece by piece rather than restarting at zero
        let hat = match prev {
            Some((ps, pv)) => pv + finite_or(modified_cost_between(c, ps, s, ctx), f64::NAN),
            None => finite_or(modified_cost_value(c, s, ctx), f64::NAN),
        };
        prev = Some((s, hat));
        worst[0] = worst[0].min(hat - cs);
        worst[1] = worst[1].min(cs + s * a - hat);
        let cl = finite_or(c.marginal(s, Side::Left), f64::NAN);
        let hl = finite_or(modified_marginal(c, s, ctx, Side::Left), f64::NAN);
        worst[2] = worst[2].min(hl - cl);
        if let (Extended::Finite(cr), Extended::Finite(hr)) =
            (c.marginal(s, Side::Right), modified_marginal(c, s, ctx, Side::Right))
        {
            worst[3] = worst[3].min(hr - hl);
            worst[4] = worst[4].min(cr + a - hr);
        }
    }
    let mut r = BoundReport::new("modified cost bounds");
    r.push("value_lower", Some(0.0), None, worst[0], value_tol);
    r.push("value_upper", Some(0.0), None, worst[1], value_tol);
    r.push("slope_lower", Some(0.0), None, worst[2], slope_tol);
    r.push("slope_order", Some(0.0), None, worst[3], slope_tol);
    r.push("slope_upper", Some(0.0), None, worst[4], slope_tol);
    r
}

/// Largest relative gap between a central difference of the integrated
/// modified cost and the closed-form modified marginal, over `points`
/// interior points away from kinks.
pub fn modified_derivative_error(c: &CostFunction, ctx: &ModifiedCostContext, points: usize) -> f64 {
    let top = c.domain_limit(ctx.horizon);
    let h = 1e-6 * top;
    let kinks = c.kinks();
    let mut worst: f64 = 0.0;
    for i in 1..=points {
        let s = top * i as f64 / (points + 1) as f64;
        if kinks.iter().any(|k| (k - s).abs() < 4.0 * h) {
            continue;
        }
        let diff = finite_or(modified_cost_between(c, s - h, s + h, ctx), f64::NAN) / (2.0 * h);
        let m = finite_or(modified_marginal(c, s, ctx, Side::Right), f64::NAN);
        worst = worst.max(((diff - m) / m).abs());
    }
    worst
}
