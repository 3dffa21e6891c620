//! Finite dyadic martingales, maximal functions and `H_p` quasinorms, plus
//! atoms and the divergence constructions built from them.

mod atoms;
mod counterexamples;

pub use atoms::{atomic_martingale, haar_atom, validate_atom, AtomViolation, PAtom};
pub use counterexamples::{
    build_counterexample_1b, build_theorem2_martingale, counterexample_tail_term, sigma_identity_16b_residual,
    CounterexampleSpec, Phi,
};

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::step::{QuasinormValue, StepFunction};
use crate::walsh::{fwht, WalshSpectrum};

/// `(F_0, ..., F_M)` with `F_n = E_n f` for a terminal function `f` of
/// resolution `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicMartingale<S: Scalar = Rational> {
    terminal: StepFunction<S>,
}

impl<S: Scalar> DyadicMartingale<S> {
    pub fn new(terminal: StepFunction<S>) -> Self {
        DyadicMartingale { terminal }
    }

    pub fn zero(resolution: u32) -> Self {
        Self::new(StepFunction::zero(resolution))
    }

    pub fn resolution(&self) -> u32 {
        self.terminal.resolution()
    }

    pub fn terminal(&self) -> &StepFunction<S> {
        &self.terminal
    }

    /// `F_n = E_n f`, at the terminal resolution.
    pub fn level(&self, n: u32) -> Result<StepFunction<S>> {
        self.terminal.conditional_expectation(n)
    }

    /// `F^(k) = int F_M w_k`, zero for `k >= 2^M`.
    pub fn spectrum(&self) -> WalshSpectrum<S> {
        fwht(&self.terminal)
    }

    /// Checks `E_n F_m = F_n` for every `n <= m <= M`.
    pub fn is_consistent(&self) -> Result<bool> {
        let m = self.resolution();
        let levels: Vec<StepFunction<S>> = (0..=m).map(|n| self.level(n)).collect::<Result<_>>()?;
        for (hi, f_hi) in levels.iter().enumerate() {
            for (lo, f_lo) in levels.iter().enumerate().take(hi + 1) {
                if f_hi.conditional_expectation(lo as u32)? != *f_lo {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `F* = max_{n <= M} |F_n|`, built bottom-up by pairwise averaging.
pub fn maximal_function<S: Scalar>(f: &DyadicMartingale<S>) -> StepFunction<S> {
    let m = f.resolution();
    let half = S::from_rational(Rational::new(1, 2));
    let mut level: Vec<S> = f.terminal().values().to_vec();
    let mut out: Vec<S> = level.iter().map(|v| v.abs()).collect();
    for n in (0..m).rev() {
        let width = 1usize << n;
        let coarse: Vec<S> = (0..width).map(|c| (level[c] + level[c + width]) * half).collect();
        for (b, slot) in out.iter_mut().enumerate() {
            let v = coarse[b & (width - 1)].abs();
            if v > *slot {
                *slot = v;
            }
        }
        level = coarse;
    }
    StepFunction::from_vec_unchecked(m, out)
}

/// `f*(x) = max_n |int_{I_n(x)} f| / mu(I_n(x))`, each interval integrated
/// separately.
pub fn maximal_function_by_averages<S: Scalar>(f: &StepFunction<S>) -> StepFunction<S> {
    let m = f.resolution();
    let mut out = vec![S::zero(); f.len()];
    for n in 0..=m {
        let scale = S::from_rational(Rational::pow2(n as i32));
        for anchor in 0..1u64 << n {
            let point = crate::dyadic::DyadicPoint::new(n, anchor).expect("anchor below 2^n");
            let interval = DyadicInterval::new(n, point).expect("anchor resolution equals depth");
            let avg = (f.integral_over(&interval) * scale).abs();
            for b in interval.cells(m) {
                if avg > out[b] {
                    out[b] = avg;
                }
            }
        }
    }
    StepFunction::from_vec_unchecked(m, out)
}

/// `||F||_{H_p} = ||F*||_p`.
pub fn hp_quasinorm<S: Scalar>(f: &DyadicMartingale<S>, p: Rational) -> Result<QuasinormValue> {
    maximal_function(f).lp_quasinorm(p)
}

/// `||F||_{H_p}^p = int (F*)^p`.
pub fn hp_power<S: Scalar>(f: &DyadicMartingale<S>, p: Rational) -> Result<QuasinormValue> {
    maximal_function(f).power_integral(p)
}

fn check_atom_exponent(p: Rational) -> Result<()> {
    if p <= Rational::ZERO || p > Rational::ONE {
        return Err(Error::InvalidExponent(format!("atoms need 0 < p <= 1, got {p}")));
    }
    Ok(())
}
