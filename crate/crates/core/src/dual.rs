//! Bisection on the dual price of a balance constraint.
//!
//! Each tenant answers a price with the interval of reductions it is
//! indifferent between. The residual `sum(s(p)) - demand(p)` is nondecreasing
//! in `p`, so bisection on its interval-valued version finds the clearing
//! price; the settle step then picks one point in the tenants' intervals.

use crate::cost::Interval;

pub(crate) const MAX_ITERATIONS: usize = 200;
pub(crate) const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Balance {
    pub price: f64,
    pub reductions: Vec<f64>,
}

pub(crate) fn intervals<R: Fn(usize, f64) -> Interval>(n: usize, response: &R, p: f64) -> Vec<Interval> {
    (0..n).map(|i| response(i, p)).collect()
}

/// Finds `p` in `[0, p_max]` where total tenant supply meets `demand(p)`.
/// `demand` must be nonincreasing and `response` nondecreasing in `p`.
pub(crate) fn solve_balance<R, D>(n: usize, p_max: f64, response: R, demand: D) -> Balance
where
    R: Fn(usize, f64) -> Interval,
    D: Fn(f64) -> f64,
{
    let bounds = |p: f64| {
        let iv = intervals(n, &response, p);
        let lo: f64 = iv.iter().map(|i| i.lo).sum();
        let hi: f64 = iv.iter().map(|i| i.hi).sum();
        let d = demand(p);
        (lo - d, hi - d)
    };
    let (mut lo, mut hi) = (0.0, p_max);
    let (price, iv) = if bounds(0.0).1 >= 0.0 {
        (0.0, intervals(n, &response, 0.0))
    } else if bounds(p_max).1 < 0.0 {
        (p_max, intervals(n, &response, p_max))
    } else {
        let mut found = None;
        for _ in 0..MAX_ITERATIONS {
            if hi - lo <= REL_TOL * p_max {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (r_lo, r_hi) = bounds(mid);
            if r_lo > 0.0 {
                hi = mid;
            } else if r_hi < 0.0 {
                lo = mid;
            } else {
                found = Some(mid);
                break;
            }
        }
        match found {
            Some(p) => (p, intervals(n, &response, p)),
            None => {
                // The root sits on a jump inside [lo, hi]; responses are
                // monotone, so the envelope over the bracket covers it.
                let below = intervals(n, &response, lo);
                let above = intervals(n, &response, hi);
                let iv = below
                    .iter()
                    .zip(&above)
                    .map(|(a, b)| Interval { lo: a.lo, hi: b.hi })
                    .collect();
                (0.5 * (lo + hi), iv)
            }
        }
    };
    Balance {
        price,
        reductions: settle(&iv, demand(price)),
    }
}

/// Points in each interval summing to `target`, filling slack in proportion
/// to interval width. Targets outside the attainable range saturate.
pub(crate) fn settle(iv: &[Interval], target: f64) -> Vec<f64> {
    let lo: f64 = iv.iter().map(|i| i.lo).sum();
    let hi: f64 = iv.iter().map(|i| i.hi).sum();
    if target <= lo || hi <= lo {
        return iv.iter().map(|i| i.lo).collect();
    }
    if target >= hi {
        return iv.iter().map(|i| i.hi).collect();
    }
    let frac = (target - lo) / (hi - lo);
    iv.iter().map(|i| i.lo + frac * i.width()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settle_fills_by_width() {
        let iv = [Interval { lo: 0.0, hi: 1.0 }, Interval { lo: 0.5, hi: 0.5 }, Interval { lo: 0.0, hi: 3.0 }];
        let s = settle(&iv, 1.5);
        assert_eq!(s, vec![0.25, 0.5, 0.75]);
        assert_eq!(settle(&iv, 0.1), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn linear_response_clears() {
        let b = solve_balance(2, 1.0, |_, p| Interval::point(p / 4.0), |p| 1.0 - (2.0 * p - 1.0).clamp(0.0, 1.0));
        assert!((b.price - 0.8).abs() < 1e-11);
        assert!((b.reductions[0] - 0.2).abs() < 1e-11);
    }
}
