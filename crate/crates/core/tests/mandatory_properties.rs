use coloedr::analysis::{kkt_residuals, random_mandatory_scenario, scenario_rng, KKT_TOLERANCE};
use coloedr::mandatory::{bid_cap, clearing_price, solve, supply, total_supply, MandatoryScenario};
use coloedr::{CostFunction, Mode};
use proptest::prelude::*;

const SOLVER_MODES: [Mode; 3] = [Mode::Taking, Mode::Anticipating, Mode::Social];

fn scenario(seed: u64, n_max: usize) -> MandatoryScenario {
    random_mandatory_scenario(&mut scenario_rng(seed, 0), 2, n_max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcomes_balance_and_stay_under_diesel_cost(seed in any::<u64>()) {
        let scn = scenario(seed, 12);
        for mode in SOLVER_MODES {
            let o = solve(&scn, mode).unwrap();
            prop_assert!(o.balance_error(scn.delta) <= 1e-9 * scn.delta, "{mode}: {}", o.balance_error(scn.delta));
            prop_assert!(o.price <= scn.alpha * (1.0 + 1e-12), "{mode}: {} > {}", o.price, scn.alpha);
            prop_assert!(o.diesel >= 0.0 && o.reductions.iter().all(|&s| s >= 0.0));
            prop_assert!(kkt_residuals(&o, &scn) <= KKT_TOLERANCE, "{mode}: kkt {}", kkt_residuals(&o, &scn));
        }
        let d = solve(&scn, Mode::DieselOnly).unwrap();
        prop_assert_eq!(d.social_cost, scn.alpha * scn.delta);
    }

    #[test]
    fn total_supply_is_nondecreasing(seed in any::<u64>(), mode_ix in 0usize..3) {
        let scn = scenario(seed, 8);
        let mode = SOLVER_MODES[mode_ix];
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=200 {
            let p = scn.alpha * k as f64 / 200.0;
            let v = total_supply(&scn, mode, p);
            prop_assert!(v >= prev - 1e-12 * scn.delta, "{mode} at p={p}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn anticipating_bids_respect_cap(seed in any::<u64>()) {
        let scn = scenario(seed, 10);
        let o = solve(&scn, Mode::Anticipating).unwrap().to_it_units();
        let norm = scn.normalize_pue();
        for n in 0..scn.n() {
            let cap = bid_cap(n, &o.bids, &norm);
            prop_assert!(o.bids[n] <= cap * (1.0 + 1e-9) + 1e-12, "tenant {n}: {} > {cap}", o.bids[n]);
        }
    }

    #[test]
    fn clearing_identity(bids in prop::collection::vec(0.0f64..5.0, 2..8), y in 0.0f64..1.0, delta in 0.1f64..10.0) {
        let y = y * delta;
        let p = clearing_price(&bids, y, delta).unwrap();
        prop_assume!(p > 0.0);
        let s: f64 = bids.iter().map(|&b| supply(b, p, delta).unwrap()).sum();
        prop_assert!((s + y - delta).abs() <= 1e-9 * delta);
    }

    #[test]
    fn pue_only_rescales(seed in any::<u64>(), pue in 1.0f64..3.0) {
        let base = scenario(seed, 6);
        let scaled = MandatoryScenario { pue, ..base.clone() };
        for mode in SOLVER_MODES {
            let o = solve(&scaled, mode).unwrap();
            prop_assert!(o.balance_error(scaled.delta) <= 1e-9 * scaled.delta);
            prop_assert!(o.price <= scaled.alpha * (1.0 + 1e-12));
            // the normalized scenario with pue 1 gives the IT-level figures
            let it = solve(&scaled.normalize_pue(), mode).unwrap();
            let back = o.to_it_units();
            prop_assert!((back.price - it.price).abs() <= 1e-9 * it.price.max(1e-12));
            for (a, b) in back.reductions.iter().zip(&it.reductions) {
                prop_assert!((a - b).abs() <= 1e-9 * scaled.delta);
            }
        }
    }
}

#[test]
fn ordering_chain_on_quadratic_instance() {
    let scn = MandatoryScenario::new(1.0, 1.0, vec![CostFunction::quadratic(2.0); 2]);
    let t = solve(&scn, Mode::Taking).unwrap();
    let a = solve(&scn, Mode::Anticipating).unwrap();
    let s = solve(&scn, Mode::Social).unwrap();
    assert!(s.diesel <= t.diesel && t.diesel <= a.diesel && a.diesel <= t.diesel + 0.5);
    assert!(0.5 * s.price <= t.price && t.price <= a.price && a.price <= (t.price + 0.25).min(s.price));
    assert!(s.operator_cost - 0.5 <= t.operator_cost + 1e-12);
    assert!(t.operator_cost <= a.operator_cost && a.operator_cost <= s.operator_cost + 1e-12);
}

#[test]
fn rejects_single_tenant() {
    let scn = MandatoryScenario::new(1.0, 1.0, vec![CostFunction::quadratic(2.0)]);
    assert!(solve(&scn, Mode::Taking).is_err());
}

#[test]
fn scenario_json_uses_unit_keys() {
    let text = r#"{"delta_kwh":900,"alpha_per_kwh":0.3,"pue":1.5,"tenants":[{"kind":"quadratic","coef":0.001},{"kind":"quadratic","coef":0.002}]}"#;
    let scn: MandatoryScenario = serde_json::from_str(text).unwrap();
    assert_eq!((scn.delta, scn.alpha, scn.pue), (900.0, 0.3, 1.5));
    let o = solve(&scn, Mode::Taking).unwrap();
    let v = serde_json::to_value(&o).unwrap();
    for key in ["price_per_kwh", "diesel_kwh", "reductions_kwh", "bids_usd", "social_cost_usd"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}
