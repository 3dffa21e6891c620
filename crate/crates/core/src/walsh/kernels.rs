use crate::dyadic::order;
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::step::StepFunction;

use super::{hadamard_in_place, walsh_sign};

fn check_kernel_index(n: u64, resolution: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("kernel index must be at least 1".into()));
    }
    if resolution < 64 && n > 1u64 << resolution {
        let needed = order(n - 1).map_or(0, |o| o + 1);
        return Err(Error::ResolutionTooSmall { needed, actual: resolution });
    }
    Ok(())
}

/// `D_n` at cell `b`, from `D_n = w_n sum_j n_j r_j D_{2^j}` with
/// `D_{2^j} = 2^j` on `I_j` and `0` off it.
pub fn dirichlet_value(n: u64, b: u64) -> i64 {
    let mut acc = 0i64;
    // D_{2^j}(b) vanishes once b has a set bit below j
    let top = b.trailing_zeros().min(63);
    let mut j = 0;
    while j <= top && (n >> j) != 0 {
        if n >> j & 1 == 1 {
            let r = 1 - 2 * ((b >> j) & 1) as i64;
            acc += r << j;
        }
        j += 1;
    }
    walsh_sign(n, b) * acc
}

/// Dirichlet kernel `D_n = sum_{k<n} w_k`; requires `1 <= n <= 2^M`.
pub fn dirichlet<S: Scalar>(n: u64, resolution: u32) -> Result<StepFunction<S>> {
    check_kernel_index(n, resolution)?;
    Ok(StepFunction::from_fn(resolution, |b| S::from_i64(dirichlet_value(n, b as u64))))
}

/// Integer values of `n K_n = sum_{k=1}^n D_k` at resolution `M`, computed
/// from the spectrum `(n - k)_+`.
pub fn fejer_numerator(n: u64, resolution: u32) -> Result<Vec<i64>> {
    check_kernel_index(n, resolution)?;
    let mut data: Vec<i64> = (0..1u64 << resolution).map(|k| n.saturating_sub(k) as i64).collect();
    hadamard_in_place(&mut data);
    Ok(data)
}

/// Fejer kernel `K_n = (1/n) sum_{k=1}^n D_k`; requires `1 <= n <= 2^M`.
pub fn fejer_kernel<S: Scalar>(n: u64, resolution: u32) -> Result<StepFunction<S>> {
    let num = fejer_numerator(n, resolution)?;
    let n = S::from_i64(n as i64);
    Ok(StepFunction::from_vec_unchecked(resolution, num.into_iter().map(|v| S::from_i64(v) / n).collect()))
}

/// `K_{2^n}` from its case formula: `(2^n + 1)/2` on `I_n`, `2^{t-1}` on
/// `I_n(e_t)` for `t < n`, zero elsewhere. Requires `n <= M`.
pub fn fejer_closed_form<S: Scalar>(n: u32, resolution: u32) -> Result<StepFunction<S>> {
    if n > resolution {
        return Err(Error::ResolutionTooSmall { needed: n, actual: resolution });
    }
    let mask = (1usize << n) - 1;
    let peak = S::from_rational(Rational::new((1i128 << n) + 1, 2));
    Ok(StepFunction::from_fn(resolution, |b| {
        let low = b & mask;
        if low == 0 {
            peak
        } else if low.is_power_of_two() {
            S::from_rational(Rational::pow2(low.trailing_zeros() as i32 - 1))
        } else {
            S::zero()
        }
    }))
}

/// Incremental integer sweep over `n = 1, 2, ...` of `D_n` and `n K_n`.
///
/// Resolution follows `|n| + 1` (doubling the arrays when `n` crosses a power
/// of two) unless a larger fixed floor is requested. Each step costs one pass
/// over the cells.
#[derive(Debug, Clone)]
pub struct KernelSweep {
    n: u64,
    resolution: u32,
    dirichlet: Vec<i64>,
    fejer: Vec<i64>,
}

impl KernelSweep {
    pub fn new() -> Self {
        Self::with_min_resolution(0)
    }

    pub fn with_min_resolution(resolution: u32) -> Self {
        KernelSweep { n: 0, resolution, dirichlet: vec![0; 1 << resolution], fejer: vec![0; 1 << resolution] }
    }

    /// Moves to `n + 1` and returns the new index.
    pub fn advance(&mut self) -> u64 {
        let k = self.n;
        // D_{k+1} = D_k + w_k needs resolution |k| + 1; the arrays at index
        // k+1 live at resolution |k+1| + 1
        let needed = order(k + 1).map_or(0, |o| o + 1);
        while self.resolution < needed {
            self.dirichlet.extend_from_within(..);
            self.fejer.extend_from_within(..);
            self.resolution += 1;
        }
        for (b, (d, s)) in self.dirichlet.iter_mut().zip(self.fejer.iter_mut()).enumerate() {
            *d += walsh_sign(k, b as u64);
            *s += *d;
        }
        self.n = k + 1;
        self.n
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Values of `D_n`.
    pub fn dirichlet(&self) -> &[i64] {
        &self.dirichlet
    }

    /// Values of `n K_n`.
    pub fn fejer_numerator(&self) -> &[i64] {
        &self.fejer
    }

    /// `||D_n||_1`, exact.
    pub fn dirichlet_l1(&self) -> Rational {
        let total: i128 = self.dirichlet.iter().map(|v| v.unsigned_abs() as i128).sum();
        Rational::new(total, 1i128 << self.resolution)
    }

    /// `||K_n||_1`, exact.
    pub fn fejer_l1(&self) -> Rational {
        let total: i128 = self.fejer.iter().map(|v| v.unsigned_abs() as i128).sum();
        Rational::new(total, (self.n as i128) << self.resolution)
    }

    pub fn fejer_kernel(&self) -> StepFunction<Rational> {
        let n = self.n as i128;
        StepFunction::from_vec_unchecked(
            self.resolution,
            self.fejer.iter().map(|&v| Rational::new(v as i128, n)).collect(),
        )
    }
}

impl Default for KernelSweep {
    fn default() -> Self {
        Self::new()
    }
}
