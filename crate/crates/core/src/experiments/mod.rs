//! Quantitative experiments over the kernels and martingale constructions,
//! each producing an [`ExperimentReport`] with its rows, summary values and
//! pass/fail checks.

mod report;
mod scans;
mod theorems;

use std::fmt;
use std::str::FromStr;

pub use report::{Cell, Check, ExperimentReport};
pub use scans::{run_fine_average, run_kernel_scans, KernelScanOptions};
pub use theorems::{run_theorem1a, run_theorem1b, run_theorem2, Theorem1aSource, Theorem2Options};

use crate::error::{Error, Result};
use crate::step::{EXACT_RESOLUTION_CAP, FLOAT_RESOLUTION_CAP};

/// Arithmetic used for the cell values of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl Mode {
    pub fn resolution_cap(self) -> u32 {
        match self {
            Mode::Exact => EXACT_RESOLUTION_CAP,
            Mode::Float => FLOAT_RESOLUTION_CAP,
        }
    }

    pub fn check_resolution(self, requested: u32) -> Result<()> {
        let cap = self.resolution_cap();
        if requested > cap {
            return Err(Error::ResolutionCap { requested, cap, mode: self.name() });
        }
        Ok(())
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(Error::Parse(format!("unknown mode {s:?}, expected exact or float"))),
        }
    }
}

/// Base of the logarithm in weights such as `1/log n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Two => "2",
            LogBase::Natural => "natural",
        })
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "two" => Ok(LogBase::Two),
            "e" | "natural" | "ln" => Ok(LogBase::Natural),
            _ => Err(Error::Parse(format!("unknown log base {s:?}, expected 2 or natural"))),
        }
    }
}

/// Relative tolerance for comparisons that pass through `f64`.
pub const NUMERIC_TOLERANCE: f64 = 1e-12;

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= NUMERIC_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn approx_ge(a: f64, b: f64) -> bool {
    a >= b || approx_eq(a, b)
}
