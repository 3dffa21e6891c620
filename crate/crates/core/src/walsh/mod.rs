//! The Walsh-Paley system on `G`, its fast transform, kernels and means.
//!
//! Coordinate `x_k` is bit `k` of the cell index, so
//! `w_n(b) = (-1)^popcount(n & b)` and the natural-order Hadamard butterfly
//! computes Walsh-Paley coefficients directly.

mod identities;
mod kernels;
mod means;

pub use identities::{
    kernel_decomposition_residual, lemma2_interval_integral, lemma2_max_ratio, lemma2_ratio, lemma3_check,
    lemma3_proof_chain, shift_identity_residual, Lemma3Row, ProofChainRow, Verdict,
};
pub use kernels::{dirichlet, dirichlet_value, fejer_closed_form, fejer_kernel, fejer_numerator, KernelSweep};
pub use means::{conjugate_transform, fejer_mean, partial_sum, FejerSweep};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::step::{cell_measure, StepFunction};

/// `(-1)^popcount(n & b)` as `+1` / `-1`.
#[inline]
pub fn walsh_sign(n: u64, b: u64) -> i64 {
    1 - 2 * ((n & b).count_ones() as i64 & 1)
}

/// `r_k(x) = (-1)^{x_k}` at resolution `M`.
pub fn rademacher<S: Scalar>(k: u32, resolution: u32) -> Result<StepFunction<S>> {
    if k >= resolution {
        return Err(Error::IndexOutOfRange { index: k as u64, resolution });
    }
    Ok(StepFunction::from_fn(resolution, |b| S::from_i64(1 - 2 * ((b >> k) & 1) as i64)))
}

/// `w_n = prod_k r_k^{n_k}` at resolution `M`; requires `n < 2^M`.
pub fn walsh<S: Scalar>(n: u64, resolution: u32) -> Result<StepFunction<S>> {
    if resolution < 64 && n >> resolution != 0 {
        return Err(Error::IndexOutOfRange { index: n, resolution });
    }
    Ok(StepFunction::from_fn(resolution, |b| S::from_i64(walsh_sign(n, b as u64))))
}

/// The `2^M` Walsh-Paley coefficients of a resolution-`M` step function.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum<S = Rational> {
    resolution: u32,
    coeffs: Vec<S>,
}

impl<S: Scalar> WalshSpectrum<S> {
    pub fn new(resolution: u32, coeffs: Vec<S>) -> Result<Self> {
        let expected = 1usize << resolution;
        if coeffs.len() != expected {
            return Err(Error::CellCount { expected, actual: coeffs.len() });
        }
        Ok(WalshSpectrum { resolution, coeffs })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// `f^(k)`, zero beyond `2^M`.
    pub fn coeff(&self, k: u64) -> S {
        self.coeffs.get(k as usize).copied().unwrap_or_else(S::zero)
    }

    /// Multiplies coefficient `k` by `m(k)`.
    pub fn multiply(&self, m: impl Fn(usize) -> S) -> Self {
        WalshSpectrum {
            resolution: self.resolution,
            coeffs: self.coeffs.iter().enumerate().map(|(k, &c)| c * m(k)).collect(),
        }
    }

    /// `sum_k f^(k) w_k`.
    pub fn synthesize(&self) -> StepFunction<S> {
        inverse_fwht(self)
    }
}

/// Unnormalized in-place Hadamard butterfly in natural (Paley) order.
pub fn hadamard_in_place<T>(data: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = data.len();
    assert!(n.is_power_of_two(), "butterfly length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Fast Walsh-Hadamard transform: `coeffs[k] = int f w_k dmu`, `O(M 2^M)`.
pub fn fwht<S: Scalar>(f: &StepFunction<S>) -> WalshSpectrum<S> {
    let mut data = f.values().to_vec();
    hadamard_in_place(&mut data);
    let scale = cell_measure::<S>(f.resolution());
    for v in &mut data {
        *v = *v * scale;
    }
    WalshSpectrum { resolution: f.resolution(), coeffs: data }
}

/// Synthesis `f = sum_k f^(k) w_k`.
pub fn inverse_fwht<S: Scalar>(spectrum: &WalshSpectrum<S>) -> StepFunction<S> {
    let mut data = spectrum.coeffs.clone();
    hadamard_in_place(&mut data);
    StepFunction::from_vec_unchecked(spectrum.resolution, data)
}
