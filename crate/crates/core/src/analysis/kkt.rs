use crate::cost::{modified_marginal, CostFunction, ModifiedCostContext, Side};
use crate::extended::Extended;
use crate::mandatory::{MandatoryOutcome, MandatoryScenario};
use crate::mode::Mode;
use crate::voluntary::{VoluntaryOutcome, VoluntaryScenario};

/// Largest acceptable residual, in normalized units.
pub const KKT_TOLERANCE: f64 = 1e-7;

/// Violation of `left(s) <= p <= right(s)`, dropping the side a bound at
/// `0` or `top` makes inactive.
fn stationarity(left: Extended, right: Extended, s: f64, top: f64, p: f64, tol: f64) -> f64 {
    let mut v: f64 = 0.0;
    if s > tol {
        if let Extended::Finite(l) = left {
            v = v.max(l - p);
        }
    }
    if s < top - tol {
        if let Extended::Finite(r) = right {
            v = v.max(p - r);
        }
    }
    v
}

fn marginals(c: &CostFunction, s: f64, ctx: Option<&ModifiedCostContext>) -> (Extended, Extended) {
    match ctx {
        Some(ctx) => (
            modified_marginal(c, s, ctx, Side::Left),
            modified_marginal(c, s, ctx, Side::Right),
        ),
        None => (c.marginal(s, Side::Left), c.marginal(s, Side::Right)),
    }
}

/// Largest violation of the optimality conditions characterizing `outcome`,
/// with prices scaled by alpha and energy by delta.
pub fn kkt_residuals(outcome: &MandatoryOutcome, scn: &MandatoryScenario) -> f64 {
    let scn = scn.normalize_pue();
    let o = outcome.to_it_units();
    let (alpha, delta) = (scn.alpha, scn.delta);
    let p = o.price;
    let tol = 1e-12 * delta;
    let ctx = scn.modified_context();
    let mut worst = (o.total_reduction() + o.diesel - delta).abs() / delta;
    worst = worst.max((p - alpha).max(0.0) / alpha).max((-p).max(0.0) / alpha);
    worst = worst.max(o.bids.iter().map(|b| (-b).max(0.0)).fold(0.0, f64::max) / (alpha * delta));
    if o.mode == Mode::DieselOnly {
        return worst;
    }
    let modified = (o.mode == Mode::Anticipating).then_some(&ctx);
    for (c, &s) in scn.tenants.iter().zip(&o.reductions) {
        let (l, r) = marginals(c, s, modified);
        let top = c.domain_limit(delta);
        worst = worst.max(stationarity(l, r, s, top, p, tol) / alpha);
    }
    let diesel = match o.mode {
        Mode::Social => {
            if o.diesel > tol {
                (p - alpha).abs() / alpha
            } else {
                0.0
            }
        }
        _ => (o.diesel - scn.diesel_at_price(p)).abs() / delta,
    };
    worst.max(diesel)
}

/// Voluntary counterpart of [`kkt_residuals`], prices scaled by `u` and
/// energy by total capacity.
pub fn vdr_kkt_residuals(outcome: &VoluntaryOutcome, scn: &VoluntaryScenario) -> f64 {
    let u = scn.u;
    let total = scn.total_capacity();
    let p = outcome.price;
    let tol = 1e-12 * total;
    let mut worst = outcome.balance_error() / total;
    worst = worst.max((p - u).max(0.0) / u).max((-p).max(0.0) / u);
    for (i, (t, &s)) in scn.tenants.iter().zip(&outcome.reductions).enumerate() {
        let ctx = scn.modified_context(i);
        let modified = (outcome.mode == Mode::Anticipating).then_some(&ctx);
        let (l, r) = marginals(&t.cost, s, modified);
        let top = t.cost.domain_limit(t.capacity_kwh);
        worst = worst.max(stationarity(l, r, s, top, p, tol) / u);
        worst = worst.max((s - t.capacity_kwh).max(0.0) / total);
    }
    if outcome.mode != Mode::Social {
        worst = worst.max((p - u * (total - outcome.total_reduction) / total).abs() / u);
    }
    worst
}
