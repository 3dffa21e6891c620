use num_integer::Integer;
use rayon::prelude::*;

use crate::dyadic::{in_a02, variation};
use crate::error::{Error, Result};
use crate::hardy::{
    build_counterexample_1b, build_theorem2_martingale, counterexample_tail_term, haar_atom, hp_power, hp_quasinorm,
    CounterexampleSpec, DyadicMartingale,
};
use crate::scalar::{CompensatedSum, Rational, Scalar};
use crate::step::{QuasinormValue, StepFunction};
use crate::walsh::{fejer_mean, fejer_numerator, fwht, hadamard_in_place, FejerSweep, KernelSweep, WalshSpectrum};

use super::{approx_eq, approx_ge, Cell, ExperimentReport, LogBase, Mode};

/// What the strong-summability experiment sums over.
#[derive(Debug, Clone, PartialEq)]
pub enum Theorem1aSource {
    /// `2^{M(1/p-1)} (D_{2^{M+1}} - D_{2^M})`, a `p`-atom on `I_M`.
    HaarAtom { depth: u32 },
    /// The martingale `(E_n f)` of a terminal function.
    Terminal(StepFunction),
}

impl Theorem1aSource {
    fn describe(&self) -> String {
        match self {
            Theorem1aSource::HaarAtom { depth } => format!("haar-atom:{depth}"),
            Theorem1aSource::Terminal(f) => format!("terminal:M={}", f.resolution()),
        }
    }
}

const PLATEAU_TOLERANCE: f64 = 0.01;

/// Rows `n, ||sigma_n F||_p^p, ||sigma_n F||_{H_p}^p` and the weighted sums
/// `W(n) = log^{-[1/2+p]}(n) sum_{m<=n} ||sigma_m F||^p / m^{2-2p}` for both
/// norms.
///
/// Sums start at `m = 1`; with `p = 1/2` the rows start at `n = 2` so that
/// the log weight is positive.
pub fn run_theorem1a(
    source: &Theorem1aSource,
    p: Rational,
    n_max: u64,
    log: LogBase,
    mode: Mode,
) -> Result<ExperimentReport> {
    let half = Rational::new(1, 2);
    if p <= Rational::ZERO || p > half {
        return Err(Error::InvalidExponent(format!("strong summability needs 0 < p <= 1/2, got {p}")));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be at least 2, got {n_max}")));
    }
    let (terminal, atom_depth) = match source {
        Theorem1aSource::HaarAtom { depth } => (haar_atom(*depth, p)?.into_function(), Some(*depth)),
        Theorem1aSource::Terminal(f) => (f.clone(), None),
    };
    mode.check_resolution(terminal.resolution())?;
    let mut report = ExperimentReport::new(
        "theorem1a",
        mode,
        &["n", "sigma_p_power", "sigma_hp_power", "weighted_sum", "weighted_sum_hp", "ratio", "ratio_hp"],
    );
    report.param("source", source.describe());
    report.param("p", p);
    report.param("n_max", n_max);
    report.param("log", log);
    let scan = match mode {
        Mode::Exact => strong_sum_scan(&terminal, p, n_max, log, atom_depth)?,
        Mode::Float => strong_sum_scan(&terminal.map(|v| v.to_f64()), p, n_max, log, atom_depth)?,
    };
    let norm = hp_power(&DyadicMartingale::new(terminal), p)?.to_f64();
    for row in &scan.rows {
        report.push_row(vec![
            row.n.into(),
            row.sigma_p.into(),
            row.sigma_hp.into(),
            row.weighted.into(),
            row.weighted_hp.into(),
            ratio_cell(row.weighted, norm),
            ratio_cell(row.weighted_hp, norm),
        ]);
    }

    let (sup_at, sup) =
        scan.rows.iter().map(|r| (r.n, r.weighted)).fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let sup_hp = scan.rows.iter().map(|r| r.weighted_hp).fold(f64::MIN, f64::max);
    let cut = 3 * n_max / 4;
    let early = scan.rows.iter().filter(|r| r.n <= cut).map(|r| r.weighted).fold(0.0, f64::max);
    let late = scan.rows.iter().filter(|r| r.n > cut).map(|r| r.weighted).fold(0.0, f64::max);
    let increase = if early > 0.0 { (late - early) / early } else { 0.0 };
    let quarter = n_max / 4;
    let before_quarter = scan.rows.iter().filter(|r| r.n <= quarter).map(|r| r.weighted).fold(0.0, f64::max);

    report.summarize("hp_power", norm);
    report.summarize("sup_weighted_sum", sup);
    report.summarize("sup_at", sup_at);
    report.summarize("sup_ratio", ratio_cell(sup, norm));
    report.summarize("sup_ratio_hp", ratio_cell(sup_hp, norm));
    report.summarize("last_quarter_increase", increase);
    if before_quarter > 0.0 {
        report.summarize("sup_growth_over_first_quarter", sup / before_quarter);
    }
    if let Some(depth) = atom_depth {
        let detail = match scan.first_nonzero {
            Some(n) => {
                format!("sigma_n vanishes for n <= {}, first nonzero at n = {n} (2^M = {})", n - 1, 1u64 << depth)
            }
            None => format!("sigma_n vanishes for every n <= {n_max}"),
        };
        let vanishes = scan.first_nonzero.is_none_or(|n| n > 1 << depth);
        report.check("vanishing_below_support_scale", vanishes, detail);
    }
    report.check(
        "plateau",
        increase <= PLATEAU_TOLERANCE,
        format!(
            "max W over n > {cut} is {late:e}, over n <= {cut} is {early:e}; relative increase {increase:e} vs {PLATEAU_TOLERANCE}; sup attained at n = {sup_at}"
        ),
    );
    Ok(report)
}

fn ratio_cell(value: f64, norm: f64) -> Cell {
    if norm > 0.0 {
        Cell::Float(value / norm)
    } else {
        Cell::Text("n/a".into())
    }
}

struct StrongRow {
    n: u64,
    sigma_p: f64,
    sigma_hp: f64,
    weighted: f64,
    weighted_hp: f64,
}

struct StrongScan {
    rows: Vec<StrongRow>,
    first_nonzero: Option<u64>,
}

fn strong_sum_scan<S: Scalar>(
    f: &StepFunction<S>,
    p: Rational,
    n_max: u64,
    log: LogBase,
    atom_depth: Option<u32>,
) -> Result<StrongScan> {
    let with_log = p == Rational::new(1, 2);
    let exponent = 2.0 - 2.0 * p.to_f64();
    let mut sweep = FejerSweep::new(f);
    let (mut sum, mut sum_hp) = (CompensatedSum::new(), CompensatedSum::new());
    let mut rows = Vec::with_capacity(n_max as usize);
    let mut first_nonzero = None;
    for _ in 0..n_max {
        let n = sweep.advance();
        let mean = sweep.mean();
        if first_nonzero.is_none() && !mean.is_zero() {
            first_nonzero = Some(n);
        }
        // sigma_n a is zero below the support scale; skip the norms there
        let skip = atom_depth.is_some() && first_nonzero.is_none();
        let (sigma_p, sigma_hp) = if skip {
            (0.0, 0.0)
        } else {
            (mean.power_integral(p)?.to_f64(), hp_power(&DyadicMartingale::new(mean), p)?.to_f64())
        };
        let weight = (n as f64).powf(exponent);
        sum.add(sigma_p / weight);
        sum_hp.add(sigma_hp / weight);
        if with_log && n < 2 {
            continue;
        }
        let scale = if with_log { log.log(n as f64) } else { 1.0 };
        rows.push(StrongRow {
            n,
            sigma_p,
            sigma_hp,
            weighted: sum.value() / scale,
            weighted_hp: sum_hp.value() / scale,
        });
    }
    Ok(StrongScan { rows, first_nonzero })
}

struct BlockTerm {
    n: u64,
    weak: f64,
    phi: f64,
    tail_matches: bool,
    above_bound: bool,
}

/// One row per `alpha_k`: the sum of `||sigma_n F||_{L_{p,oo}}^p / Phi(n)`
/// over `n` in `A_{0,2}` strictly between `2^{|alpha_k|}` and
/// `2^{|alpha_k|+1}`, with pointwise checks on `I_2(e_0 + e_1)`.
pub fn run_theorem1b(spec: &CounterexampleSpec, k_max: Option<usize>, mode: Mode) -> Result<ExperimentReport> {
    let p = spec.p();
    if p >= Rational::new(1, 2) {
        return Err(Error::InvalidExponent(format!("the divergence construction needs p < 1/2, got {p}")));
    }
    mode.check_resolution(spec.resolution())?;
    let f = build_counterexample_1b(spec)?;
    let spectrum = (mode == Mode::Exact).then(|| fwht(f.terminal()));
    let blocks = k_max.map_or(spec.alphas().len(), |k| (k + 1).min(spec.alphas().len()));
    let mut report = ExperimentReport::new(
        "theorem1b",
        mode,
        &[
            "k",
            "alpha",
            "order",
            "terms",
            "block_sum",
            "cumulative_sum",
            "growth",
            "predicted_growth",
            "min_weak_constant",
            "tail_identity",
            "tail_lower_bound",
        ],
    );
    report.param("p", p);
    report.param("phi", spec.phi());
    let alphas: Vec<String> = spec.alphas().iter().map(u64::to_string).collect();
    report.param("alpha", alphas.join(";"));
    report.param("k_max", blocks - 1);

    let pf = p.to_f64();
    let orders = spec.orders();
    let mut cumulative = CompensatedSum::new();
    let (mut prev_block, mut prev_predicted): (Option<f64>, Option<f64>) = (None, None);
    let (mut identity_ok, mut bound_ok, mut increasing) = (true, true, true);
    let mut block_sums = Vec::new();
    let mut min_constant = f64::INFINITY;
    for (k, &j) in orders.iter().enumerate().take(blocks) {
        let coefficient = spec.block_coefficient(k)?;
        let indices: Vec<u64> = ((1u64 << j) + 1..2u64 << j).filter(|&n| in_a02(n)).collect();
        let terms: Vec<BlockTerm> = match &spectrum {
            Some(spectrum) => exact_block_terms(spectrum, spec, coefficient, j, &indices)?,
            None => block_terms(&f.terminal().map(|v| v.to_f64()), spec, coefficient, j, &indices)?,
        };
        let mut block = CompensatedSum::new();
        for t in &terms {
            block.add(t.weak / t.phi);
        }
        let block = block.value();
        cumulative.add(block);
        block_sums.push(block);

        let phi_half = spec.phi().power_at_pow2_f64(j + 1, 0.5);
        let scale = phi_half / ((j + 1) as f64 * pf).exp2();
        let constant = terms.iter().map(|t| t.weak / scale).fold(f64::INFINITY, f64::min);
        min_constant = min_constant.min(constant);
        let tail_identity = terms.iter().all(|t| t.tail_matches);
        let tail_bound = terms.iter().all(|t| t.above_bound);
        identity_ok &= tail_identity;
        bound_ok &= tail_bound;
        let predicted = ((1.0 - pf) * (j + 1) as f64).exp2() / phi_half;
        if prev_block.is_some_and(|prev| block <= prev) {
            increasing = false;
        }
        report.push_row(vec![
            k.into(),
            spec.alphas()[k].into(),
            j.into(),
            terms.len().into(),
            block.into(),
            cumulative.value().into(),
            prev_block.map_or(Cell::Text("n/a".into()), |prev| Cell::Float(block / prev)),
            prev_predicted.map_or(Cell::Text("n/a".into()), |prev| Cell::Float(predicted / prev)),
            constant.into(),
            tail_identity.into(),
            tail_bound.into(),
        ]);
        if let Some(first_fail) = terms.iter().find(|t| !t.tail_matches) {
            report.check("tail_identity_counterexample", false, format!("k = {k}, n = {}", first_fail.n));
        }
        prev_block = Some(block);
        prev_predicted = Some(predicted);
    }
    report.summarize("total", cumulative.value());
    report.summarize("summability", spec.summability());
    report.summarize("min_weak_constant", min_constant);
    let listed: Vec<String> = block_sums.iter().map(|v| format!("{v:e}")).collect();
    report.check("block_sums_strictly_increasing", increasing, format!("block sums {}", listed.join(", ")));
    report.check(
        "tail_identity",
        identity_ok,
        "|sigma_n F| = (c/n)(n - 2^j) |K_{n-2^j}| on I_2(e_0 + e_1) for every n in A_{0,2}",
    );
    report.check("tail_lower_bound", bound_ok, "|sigma_n F| >= c / 2^{j+1} on I_2(e_0 + e_1) for every n in A_{0,2}");
    Ok(report)
}

fn block_terms<S: Scalar>(
    f: &StepFunction<S>,
    spec: &CounterexampleSpec,
    coefficient: Rational,
    j: u32,
    indices: &[u64],
) -> Result<Vec<BlockTerm>> {
    let p = spec.p();
    let resolution = f.resolution();
    let lower = coefficient / Rational::pow2(j as i32 + 1);
    indices
        .par_iter()
        .map(|&n| {
            let sigma = fejer_mean(f, n)?;
            let weak = sigma.weak_lp_power(p)?.to_f64();
            let tail = counterexample_tail_term(coefficient, j, n)?.refine(resolution)?;
            let (mut tail_matches, mut above_bound) = (true, true);
            // cells of I_2(e_0 + e_1): x_0 = x_1 = 1; sigma_n F carries an
            // extra factor w_{2^j} there, so only absolute values agree
            for b in (3..sigma.len()).step_by(4) {
                let v = sigma.values()[b];
                let expected = tail.values()[b];
                match v.to_rational() {
                    Some(exact) => {
                        tail_matches &= exact.abs() == expected.abs();
                        above_bound &= exact.abs() >= lower;
                    }
                    None => {
                        tail_matches &= approx_eq(v.to_f64().abs(), expected.to_f64().abs());
                        above_bound &= approx_ge(v.to_f64().abs(), lower.to_f64());
                    }
                }
            }
            Ok(BlockTerm { n, weak, phi: spec.phi().eval(n), tail_matches, above_bound })
        })
        .collect()
}

/// Integer form of the block terms. For `2^j < n < 2^{j+1}` and spectrum
/// `c` on `[2^j, 2^{j+1})`,
/// `n sigma_n F = n G_0 - G_1 + c w_{2^j} N K_N` with `N = n - 2^j`,
/// `G_0 = sum_{i<2^j} F^(i) w_i` and `G_1 = sum_{i<2^j} i F^(i) w_i`.
/// Everything is scaled by the common denominator `L` so cells are integers.
fn exact_block_terms(
    spectrum: &WalshSpectrum<Rational>,
    spec: &CounterexampleSpec,
    coefficient: Rational,
    j: u32,
    indices: &[u64],
) -> Result<Vec<BlockTerm>> {
    let base = 1usize << j;
    let coeffs = spectrum.coeffs();
    if coeffs[base..2 * base].iter().any(|&c| c != coefficient) {
        return Err(Error::Spec(format!("spectrum is not constant {coefficient} on [2^{j}, 2^{}]", j + 1)));
    }
    let l = coeffs[..base].iter().fold(coefficient.denom(), |acc, c| acc.lcm(&c.denom()));
    let scaled = |v: Rational| -> i128 { (v * Rational::integer(l)).numer() };
    let mut g0 = vec![0i128; coeffs.len()];
    let mut g1 = vec![0i128; coeffs.len()];
    for (i, &c) in coeffs[..base].iter().enumerate() {
        g0[i] = scaled(c);
        g1[i] = scaled(c * Rational::integer(i as i128));
    }
    hadamard_in_place(&mut g0);
    hadamard_in_place(&mut g1);
    let lc = scaled(coefficient);
    let p = spec.p();
    let pf = p.to_f64();
    let measure = 0.5f64.powi(spectrum.resolution() as i32);
    let tail_mask = (2 * base) - 1;
    indices
        .par_iter()
        .map(|&n| {
            let nk = fejer_numerator(n - base as u64, j + 1)?;
            let ni = n as i128;
            let values: Vec<i128> = (0..g0.len())
                .map(|b| {
                    let sign = if b & base == 0 { 1 } else { -1 };
                    ni * g0[b] - g1[b] + sign * lc * nk[b & tail_mask] as i128
                })
                .collect();
            let (mut tail_matches, mut above_bound) = (true, true);
            // cells of I_2(e_0 + e_1); |sigma_n F| >= c/2^{j+1} scaled by L n 2^{j+1}
            for b in (3..values.len()).step_by(4) {
                tail_matches &= values[b].abs() == (lc * nk[b & tail_mask] as i128).abs();
                above_bound &= values[b].abs() << (j + 1) >= lc * ni;
            }
            let mut abs: Vec<u128> = values.iter().map(|v| v.unsigned_abs()).collect();
            abs.sort_unstable_by(|a, b| b.cmp(a));
            // max over levels v of v^p mu(|f| >= v), with values divided by L n
            let denom = (l * ni) as f64;
            let mut weak: f64 = 0.0;
            for (i, &v) in abs.iter().enumerate() {
                if v == 0 {
                    break;
                }
                if abs.get(i + 1) == Some(&v) {
                    continue;
                }
                weak = weak.max((v as f64 / denom).powf(pf) * (i + 1) as f64 * measure);
            }
            Ok(BlockTerm { n, weak, phi: spec.phi().eval(n), tail_matches, above_bound })
        })
        .collect()
}

/// Parameters for [`run_theorem2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Options {
    pub m_min: u32,
    pub m_max: u32,
    /// Required `B_{m_max} / B_{m_min}`.
    pub min_growth: f64,
    pub mode: Mode,
}

impl Default for Theorem2Options {
    fn default() -> Self {
        Theorem2Options { m_min: 4, m_max: 10, min_growth: 1.5, mode: Mode::Exact }
    }
}

pub const THEOREM2_MAX_M: u32 = 12;

struct Theorem2Row {
    m: u32,
    b: f64,
    variation_sum: u64,
    min_constant: f64,
    identity: bool,
    hp: QuasinormValue,
}

/// `B_m = 2^{-(m+1)} sum_{k=2^m+1}^{2^{m+1}-1} ||sigma_k F_m||_{1/2}^{1/2}` for
/// `F_m = 2^m (D_{2^{m+1}} - D_{2^m})`, with the identity
/// `|sigma_{n+2^m} F_m| = 2^m/(n+2^m) n |K_n|` checked along the sweep.
pub fn run_theorem2(options: Theorem2Options) -> Result<ExperimentReport> {
    let Theorem2Options { m_min, m_max, min_growth, mode } = options;
    if m_max > THEOREM2_MAX_M {
        return Err(Error::InvalidArgument(format!("m_max is capped at {THEOREM2_MAX_M}, got {m_max}")));
    }
    if m_min > m_max {
        return Err(Error::InvalidArgument(format!("m_min = {m_min} exceeds m_max = {m_max}")));
    }
    mode.check_resolution(m_max + 1)?;
    let rows: Vec<Theorem2Row> =
        (m_min..=m_max).into_par_iter().map(|m| theorem2_row(m, mode)).collect::<Result<_>>()?;

    let mut report = ExperimentReport::new(
        "theorem2",
        mode,
        &["m", "b_m", "variation_average", "min_constant", "identity_16b", "hp_half_norm"],
    );
    report.param("m_min", m_min);
    report.param("m_max", m_max);
    report.param("min_growth", min_growth);
    let c = rows.iter().map(|r| r.min_constant).fold(f64::INFINITY, f64::min);
    let mut increasing = true;
    let mut lower_ok = true;
    for (i, row) in rows.iter().enumerate() {
        if i > 0 && row.b <= rows[i - 1].b {
            increasing = false;
        }
        let average = row.variation_sum as f64 / (2u64 << row.m) as f64;
        lower_ok &= approx_ge(row.b, c * average);
        let hp = match row.hp {
            QuasinormValue::Exact(v) => Cell::Exact(v),
            QuasinormValue::Numeric(v) => Cell::Float(v),
        };
        report.push_row(vec![
            row.m.into(),
            row.b.into(),
            average.into(),
            row.min_constant.into(),
            row.identity.into(),
            hp,
        ]);
    }
    let first = rows.first().expect("m_min <= m_max").b;
    let last = rows.last().expect("m_min <= m_max").b;
    let growth = last / first;
    report.summarize("lower_bound_constant", c);
    report.summarize("growth", growth);

    let bad_identity: Vec<String> = rows.iter().filter(|r| !r.identity).map(|r| r.m.to_string()).collect();
    report.check(
        "identity_16b",
        bad_identity.is_empty(),
        if bad_identity.is_empty() {
            "holds for every m and n < 2^m".to_string()
        } else {
            format!("fails for m in {}", bad_identity.join(";"))
        },
    );
    let unit = |v: &QuasinormValue| match v {
        QuasinormValue::Exact(r) => *r == Rational::ONE,
        QuasinormValue::Numeric(x) => approx_eq(*x, 1.0),
    };
    report.check("hp_half_norm_is_one", rows.iter().all(|r| unit(&r.hp)), "||F_m||_{H_{1/2}} = 1");
    report.check("b_strictly_increasing", increasing, format!("B from {first:e} to {last:e}"));
    report.check("growth", growth >= min_growth, format!("B_{m_max} / B_{m_min} = {growth:e}, required {min_growth}"));
    report.check("lower_bound_chain", lower_ok, format!("B_m >= c 2^-(m+1) sum_(n<2^m) V(n) with c = {c:e}"));
    Ok(report)
}

fn theorem2_row(m: u32, mode: Mode) -> Result<Theorem2Row> {
    let f = build_theorem2_martingale(m, m + 1)?;
    let hp = hp_quasinorm(&f, Rational::new(1, 2))?;
    let (b, min_constant, identity) = match mode {
        Mode::Exact => theorem2_sweep(f.terminal(), m),
        Mode::Float => theorem2_sweep(&f.terminal().map(|v| v.to_f64()), m),
    };
    let variation_sum = (1..1u64 << m).map(|n| variation(n) as u64).sum();
    Ok(Theorem2Row { m, b, variation_sum, min_constant, identity, hp })
}

/// Returns `B_m`, `min_n int |sigma_{n+2^m} F_m|^{1/2} / V(n)` and whether
/// the kernel identity held at every cell.
fn theorem2_sweep<S: Scalar>(f: &StepFunction<S>, m: u32) -> (f64, f64, bool) {
    let base = 1u64 << m;
    let cells = f.len() as f64;
    let scale = S::from_i64(base as i64);
    let mut sweep = FejerSweep::new(f);
    let mut kernel = KernelSweep::with_min_resolution(m + 1);
    let mut total = CompensatedSum::new();
    let mut min_constant = f64::INFINITY;
    let mut identity = true;
    for _ in 0..base {
        sweep.advance();
    }
    for _ in 1..base {
        let k = sweep.advance();
        let n = kernel.advance();
        debug_assert_eq!(k, n + base);
        let mut root_sum = CompensatedSum::new();
        for (r, &num) in sweep.running_sum().iter().zip(kernel.fejer_numerator()) {
            let lhs = r.abs();
            let rhs = scale * S::from_i64(num.abs());
            identity &= if S::EXACT { lhs == rhs } else { approx_eq(lhs.to_f64(), rhs.to_f64()) };
            root_sum.add(lhs.to_f64().sqrt());
        }
        // int |sigma_k|^{1/2} = k^{-1/2} 2^{-(m+1)} sum_b |k sigma_k(b)|^{1/2}
        let integral = root_sum.value() / (k as f64).sqrt() / cells;
        total.add(integral);
        min_constant = min_constant.min(integral / variation(n) as f64);
    }
    (total.value() / cells, min_constant, identity)
}
