//! Supply-function bidding for emergency demand response in multi-tenant
//! data centers.
//!
//! Tenants bid a single parameter `b` selecting the supply curve
//! `S(b, p) = delta - b/p`. The operator clears the market against on-site
//! diesel (mandatory events) or against a per-kWh compensation rate
//! (voluntary events). The crate solves for the social optimum and for the
//! equilibria of price-taking and price-anticipating tenants, checks the
//! efficiency bounds between them, and simulates trace-driven event days.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cost;
mod dual;
pub mod error;
pub mod extended;
pub mod mandatory;
mod mode;
pub mod quadrature;
pub mod simkit;
pub mod voluntary;

pub use cost::{CostFunction, Interval, Side};
pub use error::{Error, Result};
pub use extended::Extended;
pub use mode::Mode;
