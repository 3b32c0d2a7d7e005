//! A non-negative quantity that may be unbounded.
//!
//! Marginal costs at a tenant's capacity and costs beyond it are `Infinite`.
//! The variant order makes every `Finite` compare below `Infinite`, so the
//! sentinel can take part in price comparisons without ever entering
//! floating-point arithmetic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Finite value, panicking on the sentinel. For call sites where the
    /// argument is known to be inside the domain.
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => panic!("{what}: unexpected unbounded value"),
        }
    }

    /// `self <= p` for a finite price.
    pub fn le(self, p: f64) -> bool {
        match self {
            Extended::Finite(v) => v <= p,
            Extended::Infinite => false,
        }
    }

    /// `self >= p` for a finite price.
    pub fn ge(self, p: f64) -> bool {
        match self {
            Extended::Finite(v) => v >= p,
            Extended::Infinite => true,
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::Finite(v)
    }
}
