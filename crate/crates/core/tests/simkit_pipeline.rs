use std::io::Write;

use chrono::{NaiveDate, TimeZone, Utc};
use coloedr::simkit::*;
use coloedr::{CostFunction, Error, Mode};

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 1, 7).unwrap()
}

fn long_trace(seed: u64) -> SyntheticTrace {
    SyntheticTrace {
        steps: 1200,
        seed,
        ..SyntheticTrace::default()
    }
}

#[test]
fn synthetic_mean_matches_target() {
    let t = WorkloadTrace::synthetic(&long_trace(7), 3).unwrap();
    for n in 0..3 {
        assert!((t.mean(n) - 0.3).abs() <= 0.02, "tenant {n}: {}", t.mean(n));
    }
    assert!(t.loads.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn synthetic_trace_is_reproducible() {
    let a = WorkloadTrace::synthetic(&long_trace(7), 3).unwrap();
    let b = WorkloadTrace::synthetic(&long_trace(7), 3).unwrap();
    let bits = |t: &WorkloadTrace| t.loads.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&WorkloadTrace::synthetic(&long_trace(8), 3).unwrap()));
}

#[test]
fn trace_file_with_overload_is_rejected() {
    let dir = std::env::temp_dir().join(format!("coloedr-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "timestamp,tenant_1,tenant_2,tenant_3").unwrap();
    writeln!(f, "2014-01-07T00:00:00Z,0.3,0.3,0.3").unwrap();
    writeln!(f, "2014-01-07T01:00:00Z,1.2,0.3,0.3").unwrap();
    drop(f);
    let cfg = SimConfig {
        trace: TraceSource::File { path: path.clone() },
        ..SimConfig::default()
    };
    match acquire_trace(&cfg) {
        Err(Error::Trace { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn event_costs_follow_trace_and_overestimation() {
    let start = Utc.with_ymd_and_hms(2014, 1, 7, 0, 0, 0).unwrap();
    let trace = WorkloadTrace {
        timestamps: vec![start],
        loads: vec![vec![0.3, 0.3, 0.7]],
    };
    let event = EdrEvent {
        start,
        duration_h: 1.0,
        target_kwh: 600.0,
        u_per_kwh: None,
    };
    let costs = build_event_costs(&SimConfig::default(), &trace, &event).unwrap();
    assert!((costs.costs[0].capacity().unwrap() - 120.0).abs() < 1e-9);
    assert!((costs.costs[1].capacity().unwrap() - 150.0).abs() < 1e-9);
    assert!((costs.costs[2].capacity().unwrap() - 300.0 * (1.0 - 0.7 / 0.8)).abs() < 1e-9);
    let cfg = SimConfig {
        overestimation: 1.2,
        ..SimConfig::default()
    };
    let costs = build_event_costs(&cfg, &trace, &event).unwrap();
    assert!((costs.costs[0].capacity().unwrap() - 84.0).abs() < 1e-9);
    assert_eq!(costs.costs[2], CostFunction::Unavailable);
    assert_eq!(costs.warnings.len(), 1);
}

#[test]
fn event_outside_trace_is_an_error_with_event_id() {
    let schedule = winter_event_day(day(), 900.0);
    let cfg = SimConfig {
        trace: TraceSource::Synthetic(SyntheticTrace {
            steps: 16,
            ..SyntheticTrace::default()
        }),
        ..SimConfig::default()
    };
    match run_simulation(&cfg, &schedule) {
        Err(Error::Event { event, .. }) => assert_eq!(event, 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_schedule_gives_no_records() {
    let records = run_simulation(&SimConfig::default(), &EdrSchedule::default()).unwrap();
    assert!(records.is_empty());
}

#[test]
fn event_beyond_capacity_falls_back_to_diesel() {
    let cfg = SimConfig::default();
    let costs = costs_at_loads(&cfg, &[0.45, 0.55, 0.75], 1.0);
    let event = EdrEvent {
        start: Utc.with_ymd_and_hms(2014, 1, 7, 0, 0, 0).unwrap(),
        duration_h: 1.0,
        target_kwh: 900.0,
        u_per_kwh: None,
    };
    let r = run_event(&cfg, 0, &event, &costs).unwrap();
    assert!(r.total_capacity_kwh() < 900.0);
    for m in &r.modes {
        assert!(m.diesel_kwh >= 900.0 - r.total_capacity_kwh() - 1e-9);
        assert!((m.diesel_kwh + m.tenant_reduction_kwh - 900.0).abs() <= 1e-9 * 900.0);
    }
}

#[test]
fn reports_are_byte_stable() {
    let schedule = winter_event_day(day(), 900.0);
    let a = run_simulation(&SimConfig::default(), &schedule).unwrap();
    let b = run_simulation(&SimConfig::default(), &schedule).unwrap();
    for format in [ReportFormat::Json, ReportFormat::Csv] {
        assert_eq!(emit_report(&a, format).unwrap(), emit_report(&b, format).unwrap());
    }
    let csv = emit_report(&a, ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24 * 4);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["event_id", "mode", "duration_h"]);
    assert_eq!(&header[3..], &CSV_METRICS);
    let report = parse_json_report(&emit_report(&a, ReportFormat::Json).unwrap()).unwrap();
    assert_eq!(report.records, a);
    assert_eq!(report.aggregates.len(), 4);
}

#[test]
fn voluntary_schedule_from_csv() {
    let text = "start,duration_h,target_kwh,u_per_kwh\n2014-01-07T10:00:00Z,1,400,0.25\n2014-01-07T12:00:00Z,2,600,\n";
    let schedule = EdrSchedule::from_csv(text.as_bytes()).unwrap();
    assert_eq!(schedule.events[0].kind(), EventKind::Voluntary);
    assert_eq!(schedule.events[1].kind(), EventKind::Mandatory);
    let records = run_simulation(&SimConfig::default(), &schedule).unwrap();
    assert_eq!(records[0].modes.len(), 3);
    assert_eq!(records[1].modes.len(), 4);
    for m in &records[0].modes {
        assert!(m.price_per_kwh <= 0.25 + 1e-12);
        assert!(m.tenant_reduction_kwh <= 400.0 * (1.0 + 1e-12));
        for (u, ub) in m.utilization_after.iter().zip(&records[0].u_bar) {
            assert!(u <= ub);
        }
    }
}

#[test]
fn sensitivity_trends() {
    let cfg = SimConfig::default();
    let alphas: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let mut last_price = 0.0;
    for p in alpha_sweep(&cfg, 0.3, 900.0, Mode::Taking, &alphas).unwrap() {
        assert!(p.price_per_kwh >= last_price);
        last_price = p.price_per_kwh;
    }
    let loads = [0.1, 0.2, 0.3, 0.4, 0.45];
    let sweep = utilization_sweep(&cfg, &loads, 900.0, Mode::Anticipating).unwrap();
    for w in sweep.windows(2) {
        assert!(w[1].tenant_reduction_kwh <= w[0].tenant_reduction_kwh + 1e-9);
    }
}
