use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::step::{cell_measure, StepFunction};

use super::{fwht, walsh_sign};

/// `S_n f = sum_{k<n} f^(k) w_k`, with `S_0 f = 0` and `S_n f = f` once
/// `n >= 2^M`.
pub fn partial_sum<S: Scalar>(f: &StepFunction<S>, n: u64) -> StepFunction<S> {
    fwht(f).multiply(|k| if (k as u64) < n { S::one() } else { S::zero() }).synthesize()
}

/// `sigma_n f = (1/n) sum_{k=1}^n S_k f`, through its spectral multiplier
/// `(1 - k/n)_+`. Valid for every `n >= 1`, including `n > 2^M`.
pub fn fejer_mean<S: Scalar>(f: &StepFunction<S>, n: u64) -> Result<StepFunction<S>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sigma_0 is undefined".into()));
    }
    let n_s = S::from_i64(n as i64);
    Ok(fwht(f)
        .multiply(|k| if (k as u64) < n { S::from_i64((n - k as u64) as i64) / n_s } else { S::zero() })
        .synthesize())
}

/// Sweep over `n = 1, 2, ...` building `S_n f` one Walsh term at a time and
/// keeping the running sum `sum_{k<=n} S_k f`, so each `sigma_n f` costs one
/// pass over the cells. Coefficients come from direct inner products.
#[derive(Debug, Clone)]
pub struct FejerSweep<S: Scalar> {
    f: StepFunction<S>,
    n: u64,
    partial: Vec<S>,
    running: Vec<S>,
}

impl<S: Scalar> FejerSweep<S> {
    pub fn new(f: &StepFunction<S>) -> Self {
        let zeros = vec![S::zero(); f.len()];
        FejerSweep { f: f.clone(), n: 0, partial: zeros.clone(), running: zeros }
    }

    /// `f^(k) = int f w_k dmu`, summed cell by cell.
    fn coefficient(&self, k: u64) -> S {
        if k >= self.f.len() as u64 {
            return S::zero();
        }
        let total = self.f.values().iter().enumerate().fold(S::zero(), |acc, (b, &v)| {
            if walsh_sign(k, b as u64) > 0 {
                acc + v
            } else {
                acc - v
            }
        });
        total * cell_measure::<S>(self.f.resolution())
    }

    /// Moves to `n + 1` and returns the new index.
    pub fn advance(&mut self) -> u64 {
        let k = self.n;
        let c = self.coefficient(k);
        let nonzero = !c.is_zero();
        for (b, (s, t)) in self.partial.iter_mut().zip(self.running.iter_mut()).enumerate() {
            if nonzero {
                *s = if walsh_sign(k, b as u64) > 0 { *s + c } else { *s - c };
            }
            *t = *t + *s;
        }
        self.n = k + 1;
        self.n
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `S_n f`.
    pub fn partial_sum(&self) -> StepFunction<S> {
        StepFunction::from_vec_unchecked(self.f.resolution(), self.partial.clone())
    }

    /// `sigma_n f`; panics before the first `advance`.
    pub fn mean(&self) -> StepFunction<S> {
        assert!(self.n > 0, "sigma_0 is undefined");
        let n = S::from_i64(self.n as i64);
        StepFunction::from_vec_unchecked(self.f.resolution(), self.running.iter().map(|&v| v / n).collect())
    }

    /// `n sigma_n f = sum_{k<=n} S_k f`, without the division.
    pub fn running_sum(&self) -> &[S] {
        &self.running
    }
}

/// `F~(t) = sum_{n=0}^M r_n(t) (E_n f - E_{n-1} f)` with `E_{-1} f = 0`.
///
/// `r_M(t)` reads coordinate `t_M`, so `t` needs resolution at least `M + 1`.
pub fn conjugate_transform<S: Scalar>(f: &StepFunction<S>, t: &DyadicPoint) -> Result<StepFunction<S>> {
    let m = f.resolution();
    if t.resolution() < m + 1 {
        return Err(Error::ResolutionTooSmall { needed: m + 1, actual: t.resolution() });
    }
    let mut out = StepFunction::zero(m);
    let mut prev = StepFunction::zero(m);
    for n in 0..=m {
        let level = f.conditional_expectation(n)?;
        let diff = &level - &prev;
        out = if t.coord(n) == 0 { &out + &diff } else { &out - &diff };
        prev = level;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::step::dyadic_convolve;
    use crate::walsh::{dirichlet, fejer_kernel, walsh};

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn sample(m: u32) -> StepFunction {
        StepFunction::from_fn(m, |b| q((b as i128 * 7 + 3) % 11 - 5, (b as i128 % 4) + 1))
    }

    #[test]
    fn partial_sum_examples() {
        let f = sample(4);
        assert!(partial_sum(&f, 0).is_zero());
        assert_eq!(partial_sum(&f, 16), f);
        assert_eq!(partial_sum(&f, 100), f);
        assert_eq!(partial_sum(&f, 1), StepFunction::constant(4, f.integrate()));
    }

    #[test]
    fn partial_sum_is_convolution_with_dirichlet() {
        let f = sample(5);
        for n in 1..=32 {
            assert_eq!(partial_sum(&f, n), dyadic_convolve(&f, &dirichlet(n, 5).unwrap()), "n = {n}");
        }
    }

    #[test]
    fn fejer_mean_examples() {
        let f = sample(4);
        assert_eq!(fejer_mean(&f, 1).unwrap(), StepFunction::constant(4, f.integrate()));
        let c = StepFunction::constant(3, q(-7, 5));
        for n in [1, 2, 5, 8, 40] {
            assert_eq!(fejer_mean(&c, n).unwrap(), c);
        }
        assert!(fejer_mean(&f, 0).is_err());
    }

    #[test]
    fn fejer_mean_is_convolution_with_kernel() {
        let f = sample(5);
        for n in 1..=32 {
            assert_eq!(fejer_mean(&f, n).unwrap(), dyadic_convolve(&f, &fejer_kernel(n, 5).unwrap()), "n = {n}");
        }
    }

    #[test]
    fn fejer_mean_beyond_resolution() {
        let f = sample(3);
        for n in [9u64, 13, 40] {
            // definition, with S_k f = f for k >= 8
            let mut acc = StepFunction::zero(3);
            for k in 1..=n {
                acc = &acc + &partial_sum(&f, k);
            }
            assert_eq!(fejer_mean(&f, n).unwrap(), acc.scale(q(1, n as i128)));
        }
    }

    #[test]
    fn sweep_matches_spectral_means() {
        let f = sample(4);
        let mut sweep = FejerSweep::new(&f);
        for _ in 0..24 {
            let n = sweep.advance();
            assert_eq!(sweep.partial_sum(), partial_sum(&f, n));
            assert_eq!(sweep.mean(), fejer_mean(&f, n).unwrap());
        }
    }

    #[test]
    fn conjugate_transform_examples() {
        let f = sample(4);
        let zero = DyadicPoint::zero(5);
        assert_eq!(conjugate_transform(&f, &zero).unwrap(), f);
        let t = DyadicPoint::new(5, 0b10110).unwrap();
        let once = conjugate_transform(&f, &t).unwrap();
        assert_eq!(conjugate_transform(&once, &t).unwrap(), f);
        // w_k lies in the difference at level |k| + 1
        for k in 1..16u64 {
            let w = walsh::<Rational>(k, 4).unwrap();
            let level = 64 - k.leading_zeros();
            let sign = if t.coord(level) == 0 { q(1, 1) } else { q(-1, 1) };
            assert_eq!(conjugate_transform(&w, &t).unwrap(), w.scale(sign), "k = {k}");
        }
        assert!(conjugate_transform(&f, &DyadicPoint::zero(4)).is_err());
    }
}
