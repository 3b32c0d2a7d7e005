use std::fmt;

use serde::{Deserialize, Serialize};

/// Which outcome of the market a record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Taking,
    Anticipating,
    Social,
    DieselOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Taking => "taking",
            Mode::Anticipating => "anticipating",
            Mode::Social => "social",
            Mode::DieselOnly => "diesel_only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
