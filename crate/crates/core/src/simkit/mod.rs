//! Trace-driven event simulation: workload traces set each tenant's
//! utilization, utilization sets the queueing cost of shedding servers,
//! and each scheduled event is cleared in every market mode next to a
//! diesel-only baseline.

mod config;
mod report;
mod run;
mod schedule;
mod trace;

pub use config::{SimConfig, SyntheticTrace, TenantConfig, TraceSource};
pub use report::{emit_report, parse_json_report, ModeAggregate, ReportFormat, SimulationReport, CSV_METRICS};
pub use run::{
    alpha_sweep, build_event_costs, costs_at_loads, run_event, run_simulation, run_simulation_with_trace, utilization_sweep, EventCosts,
    EventRecord, ModeRecord, SweepPoint,
};
pub use schedule::{winter_event_day, EdrEvent, EdrSchedule, EventKind};
pub use trace::{acquire_trace, WorkloadTrace};
