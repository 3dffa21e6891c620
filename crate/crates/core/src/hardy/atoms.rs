use thiserror::Error;

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::scalar::{abs_le_pow2_over_p, Rational, Scalar};
use crate::step::StepFunction;
use crate::walsh::dirichlet;

use super::{check_atom_exponent, DyadicMartingale};

/// The clause of the atom definition a candidate fails.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomViolation {
    #[error("(a) integral over the support interval is {mean}, not 0")]
    NonzeroMean { mean: Rational },

    #[error("(b) sup |a| = {max} exceeds mu(I)^(-1/p) = 2^({depth}/({p}))")]
    SupNorm { max: Rational, depth: u32, p: Rational },

    #[error("(c) value {value} at cell {cell} lies outside the support interval")]
    Support { cell: usize, value: Rational },
}

/// A validated `p`-atom: mean zero on `I`, `|a| <= mu(I)^{-1/p}`, vanishing off `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PAtom {
    support: DyadicInterval,
    p: Rational,
    function: StepFunction,
}

impl PAtom {
    pub fn support(&self) -> DyadicInterval {
        self.support
    }

    pub fn p(&self) -> Rational {
        self.p
    }

    pub fn function(&self) -> &StepFunction {
        &self.function
    }

    pub fn into_function(self) -> StepFunction {
        self.function
    }
}

/// Checks clauses (a), (b), (c) in that order and reports the first failure.
pub fn validate_atom(a: StepFunction, support: DyadicInterval, p: Rational) -> Result<PAtom> {
    check_atom_exponent(p)?;
    let a = if a.resolution() < support.depth() { a.refine(support.depth())? } else { a };
    let mean = a.integral_over(&support);
    if !mean.is_zero() {
        return Err(AtomViolation::NonzeroMean { mean }.into());
    }
    let max = a.max_abs();
    if !abs_le_pow2_over_p(max, support.depth(), p)? {
        return Err(AtomViolation::SupNorm { max, depth: support.depth(), p }.into());
    }
    if let Some((cell, &value)) =
        a.values().iter().enumerate().find(|(b, v)| !v.is_zero() && !support.contains_cell(*b))
    {
        return Err(AtomViolation::Support { cell, value }.into());
    }
    Ok(PAtom { support, p, function: a })
}

/// `2^{N(1/p - 1)} (D_{2^{N+1}} - D_{2^N})` on `I_N`, at resolution `N + 1`:
/// `+2^{N/p}` on `I_{N+1}` and `-2^{N/p}` on `I_{N+1}(e_N)`.
pub fn haar_atom(depth: u32, p: Rational) -> Result<PAtom> {
    check_atom_exponent(p)?;
    let exponent = Rational::integer(depth as i128) * (p.recip() - Rational::ONE);
    if !exponent.is_integer() {
        return Err(Error::Inexact(format!("2^({exponent}) for depth {depth}, p = {p}")));
    }
    let r = depth + 1;
    let diff = &dirichlet::<Rational>(1 << r, r)? - &dirichlet(1 << depth, r)?;
    let a = diff.scale(Rational::pow2(exponent.numer() as i32));
    validate_atom(a, DyadicInterval::centered(depth), p)
}

/// Terminal `sum_k mu_k S_{2^M} a_k` of the atomic martingale at resolution `M`.
pub fn atomic_martingale(terms: &[(Rational, PAtom)], resolution: u32) -> Result<DyadicMartingale> {
    let mut terminal = StepFunction::zero(resolution);
    for (mu, atom) in terms {
        let a = atom.function();
        // S_{2^M} = E_M
        let truncated = if a.resolution() > resolution {
            StepFunction::new(resolution, a.level_averages(resolution)?)?
        } else {
            a.refine(resolution)?
        };
        terminal = &terminal + &truncated.scale(*mu);
    }
    Ok(DyadicMartingale::new(terminal))
}
