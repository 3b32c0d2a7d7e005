use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::EventRecord;
use crate::error::{Error, Result};
use crate::mode::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Metric columns of the CSV report, after `event_id,mode,duration_h`.
pub const CSV_METRICS: [&str; 12] = [
    "target_kwh",
    "price_per_kwh",
    "tenant_reduction_kwh",
    "diesel_kwh",
    "social_cost_usd",
    "operator_cost_usd",
    "tenant_payment_usd",
    "tenant_cost_usd",
    "tenant_net_profit_usd",
    "bids_total_usd",
    "mean_utilization_after",
    "max_utilization_after",
];

/// Totals over every event cleared in one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAggregate {
    pub mode: Mode,
    pub events: usize,
    pub social_cost_usd: f64,
    pub tenant_reduction_kwh: f64,
    pub diesel_kwh: f64,
    pub tenant_net_profit_usd: f64,
    pub operator_cost_usd: f64,
    pub mean_price_per_kwh: f64,
    pub mean_utilization_after: f64,
    pub max_utilization_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub aggregates: Vec<ModeAggregate>,
    pub records: Vec<EventRecord>,
}

impl SimulationReport {
    pub fn new(records: Vec<EventRecord>) -> Self {
        let aggregates = [Mode::Taking, Mode::Anticipating, Mode::Social, Mode::DieselOnly]
            .into_iter()
            .filter_map(|mode| aggregate(&records, mode))
            .collect();
        SimulationReport { aggregates, records }
    }
}

fn aggregate(records: &[EventRecord], mode: Mode) -> Option<ModeAggregate> {
    let rows: Vec<_> = records.iter().filter_map(|r| r.mode(mode)).collect();
    if rows.is_empty() {
        return None;
    }
    let k = rows.len() as f64;
    let sum = |f: &dyn Fn(&super::run::ModeRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>();
    Some(ModeAggregate {
        mode,
        events: rows.len(),
        social_cost_usd: sum(&|r| r.social_cost_usd),
        tenant_reduction_kwh: sum(&|r| r.tenant_reduction_kwh),
        diesel_kwh: sum(&|r| r.diesel_kwh),
        tenant_net_profit_usd: sum(&|r| r.tenant_net_profit_usd),
        operator_cost_usd: sum(&|r| r.operator_cost_usd),
        mean_price_per_kwh: sum(&|r| r.price_per_kwh) / k,
        mean_utilization_after: sum(&|r| r.mean_utilization_after()) / k,
        max_utilization_after: rows.iter().map(|r| r.max_utilization_after()).fold(0.0, f64::max),
    })
}

/// Serializes `records`. JSON carries the full records plus per-mode
/// aggregates; CSV has one row per event and mode.
pub fn emit_report(records: &[EventRecord], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let report = SimulationReport::new(records.to_vec());
            Ok(serde_json::to_string_pretty(&report)?)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["event_id", "mode", "duration_h"];
            header.extend(CSV_METRICS);
            w.write_record(&header)?;
            for r in records {
                for m in &r.modes {
                    let metrics = [
                        r.event.target_kwh,
                        m.price_per_kwh,
                        m.tenant_reduction_kwh,
                        m.diesel_kwh,
                        m.social_cost_usd,
                        m.operator_cost_usd,
                        m.tenant_payment_usd,
                        m.tenant_cost_usd,
                        m.tenant_net_profit_usd,
                        m.bids_total_usd,
                        m.mean_utilization_after(),
                        m.max_utilization_after(),
                    ];
                    let mut row = vec![r.event_id.to_string(), m.mode.to_string(), r.event.duration_h.to_string()];
                    row.extend(metrics.iter().map(|v| v.to_string()));
                    w.write_record(&row)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

pub fn parse_json_report(s: &str) -> Result<SimulationReport> {
    Ok(serde_json::from_str(s)?)
}
