use std::fmt;
use std::str::FromStr;

use crate::dyadic::order;
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::step::{StepFunction, EXACT_RESOLUTION_CAP};
use crate::walsh::{dirichlet, fejer_mean, fejer_numerator};

use super::atoms::haar_atom;
use super::{atomic_martingale, DyadicMartingale};

/// Nondecreasing weight `Phi >= 1` on the positive integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    /// `Phi = 1`.
    One,
    /// `Phi(n) = max(1, log2(n)^2)`.
    Log2Sq,
    /// `Phi(n) = n^r`, `r >= 0`.
    Pow(Rational),
}

impl Phi {
    pub fn eval(&self, n: u64) -> f64 {
        match self {
            Phi::One => 1.0,
            Phi::Log2Sq => {
                let l = (n as f64).log2();
                (l * l).max(1.0)
            }
            Phi::Pow(r) => (n as f64).powf(r.to_f64()).max(1.0),
        }
    }

    /// `Phi(2^j)`, exact when representable.
    pub fn at_pow2(&self, j: u32) -> Option<Rational> {
        match self {
            Phi::One => Some(Rational::ONE),
            Phi::Log2Sq => Some(Rational::integer((j as i128 * j as i128).max(1))),
            Phi::Pow(r) => {
                let e = Rational::integer(j as i128) * *r;
                e.is_integer().then(|| Rational::pow2(e.numer() as i32))
            }
        }
    }

    /// `Phi(2^j)^e`, exact when representable.
    pub fn power_at_pow2(&self, j: u32, e: Rational) -> Option<Rational> {
        let base = self.at_pow2(j)?;
        let root = base.exact_root(u32::try_from(e.denom()).ok()?)?;
        Some(root.pow(i32::try_from(e.numer()).ok()?))
    }

    /// `Phi(2^j)^e` in floating point.
    pub fn power_at_pow2_f64(&self, j: u32, e: f64) -> f64 {
        let base = match self {
            Phi::One => 1.0,
            Phi::Log2Sq => ((j as f64) * (j as f64)).max(1.0),
            Phi::Pow(r) => (j as f64 * r.to_f64()).exp2().max(1.0),
        };
        base.powf(e)
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phi::One => write!(f, "one"),
            Phi::Log2Sq => write!(f, "log2sq"),
            Phi::Pow(r) => write!(f, "pow:{r}"),
        }
    }
}

impl FromStr for Phi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one" => Ok(Phi::One),
            "log2sq" => Ok(Phi::Log2Sq),
            other => {
                let r: Rational = other
                    .strip_prefix("pow:")
                    .ok_or_else(|| Error::Spec(format!("unknown phi {other:?}, expected one, log2sq or pow:<r>")))?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad exponent in phi {other:?}")))?;
                if r < Rational::ZERO {
                    return Err(Error::Spec(format!("phi exponent {r} makes the weight decreasing")));
                }
                Ok(Phi::Pow(r))
            }
        }
    }
}

/// Parameters of the weak-type divergence martingale: exponent, weight and
/// the index sequence `alpha_k`. Only the orders `|alpha_k|` enter the
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    p: Rational,
    phi: Phi,
    alphas: Vec<u64>,
}

impl CounterexampleSpec {
    pub fn new(p: Rational, phi: Phi, alphas: Vec<u64>) -> Result<Self> {
        if p <= Rational::ZERO || p >= Rational::ONE {
            return Err(Error::Spec(format!("p must lie in (0, 1), got {p}")));
        }
        if alphas.is_empty() {
            return Err(Error::Spec("at least one alpha is required".into()));
        }
        let mut prev: Option<u32> = None;
        for &a in &alphas {
            let o = order(a).unwrap_or(0);
            if o < 2 {
                return Err(Error::Spec(format!("alpha {a} has order {o}, need at least 2")));
            }
            if prev.is_some_and(|q| o <= q) {
                return Err(Error::Spec(format!("alpha orders must strictly increase, {a} breaks it")));
            }
            prev = Some(o);
        }
        let spec = CounterexampleSpec { p, phi, alphas };
        if spec.resolution() > EXACT_RESOLUTION_CAP {
            return Err(Error::ResolutionCap {
                requested: spec.resolution(),
                cap: EXACT_RESOLUTION_CAP,
                mode: "exact",
            });
        }
        Ok(spec)
    }

    /// `p = 1/4`, `Phi = log2^2`, `|alpha_k| = 2, 4, 8, 16` (resolution 17).
    pub fn default_divergence() -> Self {
        Self::new(Rational::new(1, 4), Phi::Log2Sq, vec![1 << 2, 1 << 4, 1 << 8, 1 << 16]).expect("valid default")
    }

    /// Reads `key=value` lines: `p=<rational>`, `alpha=<int,int,...>`,
    /// `phi=one|log2sq|pow:<rational>`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut p, mut phi, mut alphas) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
            let value = value.trim();
            match key.trim() {
                "p" => {
                    p = Some(
                        value
                            .parse::<Rational>()
                            .map_err(|_| Error::Spec(format!("line {}: bad p {value:?}", i + 1)))?,
                    )
                }
                "phi" => phi = Some(value.parse::<Phi>()?),
                "alpha" => {
                    let list = value
                        .split(',')
                        .map(|s| s.trim().parse::<u64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::Spec(format!("line {}: bad alpha list {value:?}", i + 1)))?;
                    alphas = Some(list);
                }
                other => return Err(Error::Spec(format!("line {}: unknown key {other:?}", i + 1))),
            }
        }
        Self::new(
            p.ok_or_else(|| Error::Spec("missing p".into()))?,
            phi.unwrap_or(Phi::One),
            alphas.ok_or_else(|| Error::Spec("missing alpha".into()))?,
        )
    }

    pub fn to_config(&self) -> String {
        let alphas: Vec<String> = self.alphas.iter().map(u64::to_string).collect();
        format!("p={}\nphi={}\nalpha={}\n", self.p, self.phi, alphas.join(","))
    }

    pub fn p(&self) -> Rational {
        self.p
    }

    pub fn phi(&self) -> Phi {
        self.phi
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    /// `|alpha_k|` for each `k`.
    pub fn orders(&self) -> Vec<u32> {
        self.alphas.iter().map(|&a| order(a).expect("validated nonzero")).collect()
    }

    /// Resolution `|alpha_last| + 1` that carries the whole construction.
    pub fn resolution(&self) -> u32 {
        order(*self.alphas.last().expect("nonempty")).expect("validated nonzero") + 1
    }

    /// `Phi^{1/2p}(2^{|alpha_k|+1})`, the Walsh coefficient on block `k`.
    pub fn block_coefficient(&self, k: usize) -> Result<Rational> {
        let j = self.orders()[k];
        let e = Rational::new(1, 2) / self.p;
        self.phi
            .power_at_pow2(j + 1, e)
            .ok_or_else(|| Error::Inexact(format!("Phi(2^{})^({e}) with Phi = {}", j + 1, self.phi)))
    }

    /// `lambda_k = Phi^{1/2p}(2^{|alpha_k|+1}) / 2^{|alpha_k|(1/p - 1)}`.
    pub fn lambda(&self, k: usize) -> Result<Rational> {
        let j = self.orders()[k];
        let e = Rational::integer(j as i128) * (self.p.recip() - Rational::ONE);
        if !e.is_integer() {
            return Err(Error::Inexact(format!("2^({e})")));
        }
        Ok(self.block_coefficient(k)? / Rational::pow2(e.numer() as i32))
    }

    /// `sum_k Phi^{1/2}(2^{|alpha_k|+1}) / 2^{|alpha_k|(1-p)}` over the supplied list.
    pub fn summability(&self) -> f64 {
        let p = self.p.to_f64();
        self.orders().iter().map(|&j| self.phi.power_at_pow2_f64(j + 1, 0.5) / (j as f64 * (1.0 - p)).exp2()).sum()
    }
}

/// `F = sum_k lambda_k a_k` with `a_k = 2^{|alpha_k|(1/p-1)} (D_{2^{|alpha_k|+1}} - D_{2^{|alpha_k|}})`.
pub fn build_counterexample_1b(spec: &CounterexampleSpec) -> Result<DyadicMartingale> {
    let mut terms = Vec::with_capacity(spec.alphas.len());
    for (k, j) in spec.orders().into_iter().enumerate() {
        terms.push((spec.lambda(k)?, haar_atom(j, spec.p)?));
    }
    atomic_martingale(&terms, spec.resolution())
}

/// `(c/n) (n - 2^j) K_{n - 2^j}` at resolution `j + 1`, for `2^j < n < 2^{j+1}`.
pub fn counterexample_tail_term(coefficient: Rational, j: u32, n: u64) -> Result<StepFunction> {
    let base = 1u64 << j;
    if n <= base || n >= 2 * base {
        return Err(Error::InvalidArgument(format!("need 2^{j} < n < 2^{}, got n = {n}", j + 1)));
    }
    let num = fejer_numerator(n - base, j + 1)?;
    let scale = coefficient / Rational::integer(n as i128);
    StepFunction::new(j + 1, num.into_iter().map(|v| Rational::integer(v as i128) * scale).collect())
}

/// `F_m = 2^m (D_{2^{m+1}} - D_{2^m})` at resolution `M >= m + 1`: Walsh
/// coefficients `2^m` on `[2^m, 2^{m+1})`, values `+-4^m` on `I_m`.
pub fn build_theorem2_martingale(m: u32, resolution: u32) -> Result<DyadicMartingale> {
    if resolution < m + 1 {
        return Err(Error::ResolutionTooSmall { needed: m + 1, actual: resolution });
    }
    let diff = &dirichlet::<Rational>(2 << m, resolution)? - &dirichlet(1 << m, resolution)?;
    Ok(DyadicMartingale::new(diff.scale(Rational::pow2(m as i32))))
}

/// `|sigma_{n+2^m} F_m| - (2^m/(n+2^m)) n |K_n|` at resolution `m + 1`, for `0 < n < 2^m`.
pub fn sigma_identity_16b_residual(m: u32, n: u64) -> Result<StepFunction> {
    if n == 0 || m >= 63 || n >= 1 << m {
        return Err(Error::InvalidArgument(format!("need 0 < n < 2^m, got n = {n}, m = {m}")));
    }
    let r = m + 1;
    let f = build_theorem2_martingale(m, r)?;
    let sigma = fejer_mean(f.terminal(), n + (1 << m))?.abs();
    let factor = Rational::new(1 << m, (n + (1 << m)) as i128);
    let rhs = StepFunction::new(
        r,
        fejer_numerator(n, r)?.into_iter().map(|v| Rational::integer(v.abs() as i128) * factor).collect(),
    )?;
    Ok(&sigma - &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::{fwht, walsh};

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn phi_values() {
        assert_eq!(Phi::Log2Sq.at_pow2(0), Some(Rational::ONE));
        assert_eq!(Phi::Log2Sq.at_pow2(3), Some(Rational::integer(9)));
        assert_eq!(Phi::Log2Sq.power_at_pow2(3, q(2, 1)), Some(Rational::integer(81)));
        assert_eq!(Phi::Log2Sq.power_at_pow2(3, q(1, 2)), Some(Rational::integer(3)));
        assert_eq!(Phi::Pow(q(1, 2)).at_pow2(3), None);
        assert_eq!(Phi::Pow(q(1, 2)).at_pow2(4), Some(Rational::integer(4)));
        assert!((Phi::Log2Sq.eval(8) - 9.0).abs() < 1e-12);
        assert_eq!(Phi::Log2Sq.eval(1), 1.0);
        assert_eq!(Phi::One.power_at_pow2(7, q(3, 2)), Some(Rational::ONE));
        for s in ["one", "log2sq", "pow:3/2"] {
            assert_eq!(s.parse::<Phi>().unwrap().to_string(), s);
        }
        assert!("pow:-1".parse::<Phi>().is_err());
        assert!("sqrt".parse::<Phi>().is_err());
    }

    #[test]
    fn spec_parsing() {
        let spec = CounterexampleSpec::parse("# default\np=1/4\nphi=log2sq\nalpha=4, 16,256,65536\n").unwrap();
        assert_eq!(spec, CounterexampleSpec::default_divergence());
        assert_eq!(spec.orders(), vec![2, 4, 8, 16]);
        assert_eq!(spec.resolution(), 17);
        assert_eq!(CounterexampleSpec::parse(&spec.to_config()).unwrap(), spec);
        assert!(CounterexampleSpec::parse("p=1/4\n").is_err());
        assert!(CounterexampleSpec::parse("p=1/4\nalpha=2\n").is_err());
        assert!(CounterexampleSpec::parse("p=1/4\nalpha=16,4\n").is_err());
        assert!(CounterexampleSpec::parse("p=1/4\nalpha=4\ncolour=red\n").is_err());
        assert!(matches!(
            CounterexampleSpec::parse("p=1/4\nalpha=262144\n"),
            Err(Error::ResolutionCap { requested: 19, .. })
        ));
    }

    #[test]
    fn lambdas_and_summability() {
        let spec = CounterexampleSpec::default_divergence();
        // |alpha_0| = 2: Phi(8)^2 / 2^6 = 81 / 64
        assert_eq!(spec.lambda(0).unwrap(), q(81, 64));
        assert_eq!(spec.block_coefficient(2).unwrap(), Rational::integer(9i128.pow(4)));
        let expected = 3.0 / 2f64.powf(1.5) + 5.0 / 2f64.powf(3.0) + 9.0 / 2f64.powf(6.0) + 17.0 / 2f64.powf(12.0);
        assert!((spec.summability() - expected).abs() < 1e-12);
    }

    #[test]
    fn counterexample_spectrum_is_blockwise_constant() {
        let spec = CounterexampleSpec::new(q(1, 4), Phi::Log2Sq, vec![4, 16]).unwrap();
        let mart = build_counterexample_1b(&spec).unwrap();
        let s = fwht(mart.terminal());
        for k in 0..1u64 << spec.resolution() {
            let expected = match order(k) {
                Some(2) => spec.block_coefficient(0).unwrap(),
                Some(4) => spec.block_coefficient(1).unwrap(),
                _ => Rational::ZERO,
            };
            assert_eq!(s.coeff(k), expected, "k = {k}");
        }
        let single = CounterexampleSpec::new(q(1, 4), Phi::One, vec![4]).unwrap();
        let mart = build_counterexample_1b(&single).unwrap();
        let atom = haar_atom(2, q(1, 4)).unwrap();
        assert_eq!(*mart.terminal(), atom.function().scale(single.lambda(0).unwrap()));
    }

    #[test]
    fn theorem2_martingale() {
        let f0 = build_theorem2_martingale(0, 1).unwrap();
        assert_eq!(*f0.terminal(), walsh(1, 1).unwrap());
        let f3 = build_theorem2_martingale(3, 5).unwrap();
        let s = fwht(f3.terminal());
        for i in 0..32u64 {
            assert_eq!(s.coeff(i), if (8..16).contains(&i) { Rational::integer(8) } else { Rational::ZERO });
        }
        // S_i F_m = 2^m (D_i - D_{2^m}) inside the block, F_m past it, 0 below
        for i in 0..40u64 {
            let expected = if i <= 8 {
                StepFunction::zero(5)
            } else if i < 16 {
                (&dirichlet::<Rational>(i, 5).unwrap() - &dirichlet(8, 5).unwrap()).scale(Rational::integer(8))
            } else {
                f3.terminal().clone()
            };
            assert_eq!(crate::walsh::partial_sum(f3.terminal(), i), expected, "i = {i}");
        }
        assert!(build_theorem2_martingale(3, 3).is_err());
    }

    #[test]
    fn identity_16b_small() {
        assert!(sigma_identity_16b_residual(2, 1).unwrap().is_zero());
        for n in 1..32 {
            assert!(sigma_identity_16b_residual(5, n).unwrap().is_zero(), "n = {n}");
        }
        assert!(sigma_identity_16b_residual(3, 8).is_err());
        assert!(sigma_identity_16b_residual(3, 0).is_err());
    }

    #[test]
    fn tail_term_bounds() {
        let t = counterexample_tail_term(Rational::integer(7), 3, 13).unwrap();
        assert_eq!(t.resolution(), 4);
        assert!(counterexample_tail_term(Rational::ONE, 3, 8).is_err());
        assert!(counterexample_tail_term(Rational::ONE, 3, 16).is_err());
    }
}
