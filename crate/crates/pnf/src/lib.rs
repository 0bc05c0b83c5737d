//! Differentially private selection toolkit.
//!
//! Implements three ε-differentially-private selection mechanisms over a
//! vector of quality scores — permute-and-flip (`pf`), the exponential
//! mechanism (`em`), and report-noisy-max with Laplace noise (`rnm`) —
//! together with exact selection distributions, error analysis, privacy and
//! dominance verification, and a linear-programming lab that certifies when
//! permute-and-flip is the optimal regular mechanism on a bounded score
//! lattice.
//!
//! Layout:
//! - [`scores`]: score vectors, privacy parameters, coin probabilities
//! - [`mechanisms`]: seeded samplers for all three mechanisms
//! - [`exact`]: exact probability mass functions (oracles and the O(n²) path)
//! - [`analysis`]: error metrics, worst-case curves, privacy/dominance checks
//! - [`optimality`]: lattice LP, simplex solver, dual certificates
//! - [`tasks`]: histogram mode/median selection tasks and ε sweeps

pub mod analysis;
pub mod exact;
pub mod mechanisms;
pub mod optimality;
pub mod quadrature;
pub mod scores;
pub mod tasks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} = {got} exceeds supported limit {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("length mismatch: distribution has {0} entries but scores have {1}")]
    LengthMismatch(usize, usize),
    #[error(
        "quadrature did not reach tolerance {requested:e} (achieved {achieved:e}, estimate {estimate})"
    )]
    Accuracy {
        requested: f64,
        achieved: f64,
        estimate: f64,
    },
    #[error("target {target} outside achievable range [{min}, {max}]")]
    OutOfRange { target: f64, min: f64, max: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("sampler exceeded {0} iterations without accepting")]
    SamplerStalled(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Selection mechanism tag used in reports, experiment rows, and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "pf")]
    PermuteAndFlip,
    #[serde(rename = "em")]
    Exponential,
    #[serde(rename = "rnm")]
    ReportNoisyMax,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::PermuteAndFlip => "pf",
            Mechanism::Exponential => "em",
            Mechanism::ReportNoisyMax => "rnm",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pf" => Ok(Mechanism::PermuteAndFlip),
            "em" => Ok(Mechanism::Exponential),
            "rnm" => Ok(Mechanism::ReportNoisyMax),
            other => Err(Error::InvalidArgument(format!(
                "unknown mechanism `{other}` (expected pf, em, or rnm)"
            ))),
        }
    }
}

pub use scores::{coin_probabilities, CoinProbabilities, PrivacyParams, QualityScores};
