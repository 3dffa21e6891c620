//! Walsh-Paley analysis on the dyadic group with exact arithmetic.
//!
//! The crate models functions on `G = Z_2^N` that are constant on the cells
//! of a fixed resolution, their Walsh-Paley spectra, the Dirichlet and Fejer
//! kernels, Fejer means, finite dyadic martingales and their `H_p`
//! quasinorms. Values are exact rationals by default; an `f64` mode covers
//! resolutions beyond the exact cap.
//!
//! ```
//! use walsh_fejer::{dirichlet, Rational};
//!
//! let d3 = dirichlet::<Rational>(3, 2).unwrap();
//! let ints: Vec<i128> = d3.values().iter().map(|v| v.numer()).collect();
//! assert_eq!(ints, [3, 1, 1, -1]);
//! assert_eq!(d3.lp_quasinorm(Rational::ONE).unwrap().exact(), Some(Rational::new(3, 2)));
//! ```

pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod hardy;
pub mod scalar;
pub mod step;
pub mod walsh;

pub use dyadic::{
    block_decomposition, classify_complement, complement_partition, in_a02, order, prefix_part, variation, BitIndex,
    BlockDecomposition, ComplementCell, DyadicInterval, DyadicPoint,
};
pub use error::{Error, Result};
pub use hardy::{
    atomic_martingale, build_counterexample_1b, build_theorem2_martingale, haar_atom, hp_power, hp_quasinorm,
    maximal_function, maximal_function_by_averages, sigma_identity_16b_residual, validate_atom, AtomViolation,
    CounterexampleSpec, DyadicMartingale, PAtom, Phi,
};
pub use scalar::{Rational, Scalar};
pub use step::{dyadic_convolve, QuasinormValue, StepFunction};
pub use walsh::{
    conjugate_transform, dirichlet, fejer_closed_form, fejer_kernel, fejer_mean, fwht, inverse_fwht,
    kernel_decomposition_residual, lemma2_ratio, lemma3_check, partial_sum, rademacher, shift_identity_residual, walsh,
    FejerSweep, KernelSweep, WalshSpectrum,
};
