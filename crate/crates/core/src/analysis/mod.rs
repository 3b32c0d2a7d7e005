//! Independent checks on solver outputs: bid-deviation oracles, KKT
//! residuals, and the efficiency bounds between outcomes.

mod bounds;
mod kkt;
mod oracle;
mod random;

pub use bounds::{
    check_bounds_mandatory, check_bounds_voluntary, check_modified_cost_bounds, modified_derivative_error,
    BoundEntry, BoundReport,
};
pub use kkt::{kkt_residuals, vdr_kkt_residuals, KKT_TOLERANCE};
pub use oracle::{
    best_response_scan, certify_nash, exhaustive_equilibrium_search, nash_tolerance, BidGame, Cluster,
    EquilibriumSearch, MandatoryGame, NashCertificate, ScanEntry, VoluntaryGame,
};
pub use random::{
    bound_sweep, random_cost, random_mandatory_scenario, sample_assumption_satisfying, scenario_rng, CostKind,
    SolvedTriple, SweepFailure, SweepSummary,
};
