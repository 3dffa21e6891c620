//! Kernel identities and the pointwise estimates built on them.

use crate::dyadic::{block_decomposition, classify_complement, order, ComplementCell, DyadicPoint};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::step::StepFunction;

use super::{dirichlet, fejer_closed_form, fejer_kernel, fejer_numerator, walsh};

/// Resolution `|n| + 1` on which `D_n` and `K_n` are constant per cell.
fn kernel_resolution(n: u64) -> u32 {
    order(n).map_or(0, |o| o + 1)
}

/// `2^k D_{2^k}` at cell `b`: `4^k` on `I_k`, zero elsewhere.
fn scaled_dirichlet_pow2(k: u32, b: u64) -> i64 {
    if b & ((1 << k) - 1) == 0 {
        1 << (2 * k)
    } else {
        0
    }
}

/// `2^k K_{2^k}` at cell `b`, from the case formula.
fn scaled_fejer_pow2(k: u32, b: u64) -> Rational {
    let low = b & ((1 << k) - 1);
    if low == 0 {
        Rational::new((1i128 << k) * ((1i128 << k) + 1), 2)
    } else if low.is_power_of_two() {
        Rational::pow2((k + low.trailing_zeros()) as i32 - 1)
    } else {
        Rational::ZERO
    }
}

/// `n K_n` minus the expansion
/// `sum_r (prod_{j>r} w_{2^{n_j}}) 2^{n_r} K_{2^{n_r}}
///  + sum_{t>=2} (prod_{j>t} w_{2^{n_j}}) n^(t) D_{2^{n_t}}`
/// over the set bits `n_1 < ... < n_s`, at resolution `|n| + 1`.
pub fn kernel_decomposition_residual(n: u64) -> Result<StepFunction> {
    if n == 0 {
        return Err(Error::ZeroIndex(0));
    }
    let m = kernel_resolution(n);
    let lhs = fejer_kernel::<Rational>(n, m)?.scale(Rational::integer(n as i128));
    let bits: Vec<u32> = (0..64).filter(|&j| n >> j & 1 == 1).collect();
    let mut rhs = StepFunction::zero(m);
    for (r, &nr) in bits.iter().enumerate() {
        // prod_{j>r} w_{2^{n_j}} = w_{n - (n mod 2^{n_r + 1})}
        let upper = n & !((1u64 << (nr + 1)) - 1);
        let sign = walsh::<Rational>(upper, m)?;
        let k_term = fejer_closed_form::<Rational>(nr, m)?.scale(Rational::pow2(nr as i32));
        rhs = &rhs + &(&sign * &k_term);
        if r >= 1 {
            let prefix = n & ((1u64 << nr) - 1);
            let d_term = dirichlet::<Rational>(1 << nr, m)?.scale(Rational::integer(prefix as i128));
            rhs = &rhs + &(&sign * &d_term);
        }
    }
    Ok(&lhs - &rhs)
}

/// `D_{j+2^m} - D_{2^m} - w_{2^m} D_j` at resolution `m + 1`; requires
/// `1 <= j < 2^m`.
pub fn shift_identity_residual(j: u64, m: u32) -> Result<StepFunction> {
    if j == 0 || m >= 63 || j >= 1 << m {
        return Err(Error::InvalidArgument(format!("shift identity needs 1 <= j < 2^m, got j = {j}, m = {m}")));
    }
    let r = m + 1;
    let shifted = dirichlet::<Rational>(j + (1 << m), r)?;
    let base = dirichlet::<Rational>(1 << m, r)?;
    let product = &walsh::<Rational>(1 << m, r)? * &dirichlet(j, r)?;
    Ok(&(&shifted - &base) - &product)
}

fn check_lemma2_input(n: u64, m: u32, x: &DyadicPoint) -> Result<ComplementCell> {
    if m >= 63 || n <= 1 << m {
        return Err(Error::InvalidArgument(format!("interval integral needs n > 2^M, got n = {n}, M = {m}")));
    }
    classify_complement(x, m)
}

/// `int_{I_M} |K_n(x + t)| dmu(t)`, exact. Requires `n > 2^M` and `x` outside `I_M`.
pub fn lemma2_interval_integral(n: u64, m: u32, x: &DyadicPoint) -> Result<Rational> {
    check_lemma2_input(n, m, x)?;
    Ok(interval_integral(&fejer_numerator(n, kernel_resolution(n))?, n, m, x.cell()))
}

/// `int_{I_M(x)} |K_n|` from the integer values of `n K_n`.
fn interval_integral(numerator: &[i64], n: u64, m: u32, x: u64) -> Rational {
    let r = numerator.len().trailing_zeros();
    let anchor = (x & ((1 << m) - 1)) as usize;
    let total: i128 = (0..1usize << (r - m)).map(|j| numerator[anchor + (j << m)].unsigned_abs() as i128).sum();
    Rational::new(total, (n as i128) << r)
}

/// The interval integral divided by its structural factor, `2^{l+k}/(n 2^M)`
/// on `I_{l+1}(e_k + e_l)` and `2^k / 2^M` on `I_M(e_k)`.
pub fn lemma2_ratio(n: u64, m: u32, x: &DyadicPoint) -> Result<Rational> {
    let cell = check_lemma2_input(n, m, x)?;
    let lhs = lemma2_interval_integral(n, m, x)?;
    Ok(lhs / lemma2_factor(cell, n, m))
}

fn lemma2_factor(cell: ComplementCell, n: u64, m: u32) -> Rational {
    match cell {
        ComplementCell::Pair { k, l } => Rational::pow2((l + k) as i32 - m as i32) / Rational::integer(n as i128),
        ComplementCell::Single { k } => Rational::pow2(k as i32 - m as i32),
    }
}

/// Largest ratio over the whole partition of `G \ I_M` for a fixed `n`.
pub fn lemma2_max_ratio(n: u64, m: u32) -> Result<Rational> {
    if m == 0 || m >= 63 || n <= 1 << m {
        return Err(Error::InvalidArgument(format!("interval integral needs n > 2^M >= 2, got n = {n}, M = {m}")));
    }
    let numerator = fejer_numerator(n, kernel_resolution(n))?;
    let mut best = Rational::ZERO;
    for x in 1..1u64 << m {
        let point = DyadicPoint::new(m, x)?;
        let cell = classify_complement(&point, m)?;
        let ratio = interval_integral(&numerator, n, m, x) / lemma2_factor(cell, n, m);
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Block starting at bit 0, where `e_{l-1}` does not exist.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Row {
    /// 1-based block number `i`.
    pub block: usize,
    pub lower: u32,
    pub upper: u32,
    /// Minimum of `n |K_n|` over `I_{l+1}(e_{l-1} + e_l)`.
    pub min_value: Option<i64>,
    /// `2^{2l} / 16`.
    pub bound: Rational,
    pub verdict: Verdict,
}

/// Cells at resolution `r` of `I_{l+1}(e_{l-1} + e_l)`.
fn lemma3_cells(l: u32, r: u32) -> impl Iterator<Item = usize> {
    let anchor = 3usize << (l - 1);
    (0..1usize << (r - l - 1)).map(move |j| anchor + (j << (l + 1)))
}

/// Checks `n |K_n| >= 2^{2 l_i} / 16` on `I_{l_i+1}(e_{l_i-1} + e_{l_i})` for
/// every block of `n`.
pub fn lemma3_check(n: u64) -> Result<Vec<Lemma3Row>> {
    let blocks = block_decomposition(n)?;
    let r = kernel_resolution(n);
    let numerator = fejer_numerator(n, r)?;
    Ok(blocks
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, &(l, m))| {
            let bound = Rational::pow2(2 * l as i32 - 4);
            if l == 0 {
                return Lemma3Row {
                    block: i + 1,
                    lower: l,
                    upper: m,
                    min_value: None,
                    bound,
                    verdict: Verdict::Skipped,
                };
            }
            let min = lemma3_cells(l, r).map(|b| numerator[b].abs()).min().expect("nonempty interval");
            let verdict = if Rational::integer(min as i128) >= bound { Verdict::Pass } else { Verdict::Fail };
            Lemma3Row { block: i + 1, lower: l, upper: m, min_value: Some(min), bound, verdict }
        })
        .collect())
}

/// Terms of the triangle-inequality chain behind the bound in [`lemma3_check`], for one
/// block, maximized (or minimized) over the cells of its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofChainRow {
    pub block: usize,
    pub lower: u32,
    /// `I = |2^l K_{2^l}(x)|`; `None` if it is not constant on the interval.
    pub term_i: Option<Rational>,
    /// Expected `2^{2l}/4`.
    pub term_i_expected: Rational,
    /// `max_x II(x)`, `II = sum over lower blocks of |2^k K_{2^k}|`.
    pub max_ii: Rational,
    /// `2^{2l}/24 + 2^l/4 - 2/3`.
    pub bound_ii: Rational,
    /// `max_x III(x)`, `III = sum over lower blocks of |2^k D_{2^k}|`.
    pub max_iii: Rational,
    /// `2^{2l}/12 - 1/3`.
    pub bound_iii: Rational,
    /// `n |K_n(x)| >= I - II(x) - III(x)` at every cell.
    pub triangle_holds: bool,
}

impl ProofChainRow {
    pub fn holds(&self) -> bool {
        self.term_i == Some(self.term_i_expected)
            && self.max_ii <= self.bound_ii
            && self.max_iii <= self.bound_iii
            && self.triangle_holds
    }
}

/// Evaluates the chain `n|K_n| >= I - II - III` on every block with `l_i >= 1`.
pub fn lemma3_proof_chain(n: u64) -> Result<Vec<ProofChainRow>> {
    let blocks = block_decomposition(n)?;
    let r = kernel_resolution(n);
    let numerator = fejer_numerator(n, r)?;
    let mut rows = Vec::new();
    for (i, &(l, _)) in blocks.blocks().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let lower_bits: Vec<u32> = blocks.blocks()[..i].iter().flat_map(|&(lo, hi)| lo..=hi).collect();
        let mut term_i: Option<Option<Rational>> = None;
        let mut max_ii = Rational::ZERO;
        let mut max_iii = Rational::ZERO;
        let mut triangle_holds = true;
        for b in lemma3_cells(l, r) {
            let b64 = b as u64;
            let one = scaled_fejer_pow2(l, b64).abs();
            term_i = match term_i {
                None => Some(Some(one)),
                Some(Some(prev)) if prev == one => Some(Some(prev)),
                _ => Some(None),
            };
            let ii: Rational = lower_bits.iter().map(|&k| scaled_fejer_pow2(k, b64).abs()).sum();
            let iii: i64 = lower_bits.iter().map(|&k| scaled_dirichlet_pow2(k, b64)).sum();
            let iii = Rational::integer(iii as i128);
            max_ii = if ii > max_ii { ii } else { max_ii };
            max_iii = if iii > max_iii { iii } else { max_iii };
            if Rational::integer(numerator[b].abs() as i128) < one - ii - iii {
                triangle_holds = false;
            }
        }
        let l2 = 2 * l as i32;
        rows.push(ProofChainRow {
            block: i + 1,
            lower: l,
            term_i: term_i.flatten(),
            term_i_expected: Rational::pow2(l2 - 2),
            max_ii,
            bound_ii: Rational::pow2(l2) / Rational::integer(24) + Rational::pow2(l as i32 - 2) - Rational::new(2, 3),
            max_iii,
            bound_iii: Rational::pow2(l2) / Rational::integer(12) - Rational::new(1, 3),
            triangle_holds,
        });
    }
    Ok(rows)
}
