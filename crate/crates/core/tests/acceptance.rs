//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walsh_fejer::experiments::{
    run_fine_average, run_kernel_scans, run_theorem1a, run_theorem1b, run_theorem2, Cell, ExperimentReport,
    KernelScanOptions, LogBase, Mode, Theorem1aSource, Theorem2Options,
};
use walsh_fejer::{
    build_theorem2_martingale, dirichlet, dyadic_convolve, fejer_closed_form, fejer_kernel, fejer_mean, fwht,
    hp_quasinorm, kernel_decomposition_residual, partial_sum, shift_identity_residual, sigma_identity_16b_residual,
    walsh, CounterexampleSpec, DyadicInterval, FejerSweep, QuasinormValue, Rational, StepFunction,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn check_passed(report: &ExperimentReport, name: &str) -> bool {
    report.check_named(name).unwrap_or_else(|| panic!("{} has no check {name}", report.id)).passed
}

fn check_detail(report: &ExperimentReport, name: &str) -> String {
    report.check_named(name).map(|c| c.detail.clone()).unwrap_or_default()
}

fn kernel_identities() -> Outcome {
    let bad_decomposition: Vec<u64> =
        (1..=1024).filter(|&n| !kernel_decomposition_residual(n).unwrap().is_zero()).collect();
    let mut bad_shift = 0;
    for m in 1..=10u32 {
        for j in 1..1u64 << m {
            if !shift_identity_residual(j, m).unwrap().is_zero() {
                bad_shift += 1;
            }
        }
    }
    let bad_closed: Vec<u32> = (0..=12u32)
        .filter(|&n| fejer_closed_form::<Rational>(n, n + 1).unwrap() != fejer_kernel(1 << n, n + 1).unwrap())
        .collect();
    // D_{2^n} = 2^n 1_{I_n}
    let bad_dirichlet: Vec<u32> = (0..=12u32)
        .filter(|&n| {
            let expected =
                StepFunction::indicator(&DyadicInterval::centered(n), n + 1).unwrap().scale(Rational::pow2(n as i32));
            dirichlet::<Rational>(1 << n, n + 1).unwrap() != expected
        })
        .collect();
    outcome(
        bad_decomposition.is_empty() && bad_shift == 0 && bad_closed.is_empty() && bad_dirichlet.is_empty(),
        format!(
            "nonzero residuals: decomposition {} of 1024, shift {bad_shift}, closed-form Fejer {:?}, D_(2^n) {:?}",
            bad_decomposition.len(),
            bad_closed,
            bad_dirichlet
        ),
    )
}

fn norm_sandwich(scans: &[ExperimentReport]) -> Outcome {
    let (l1, sandwich) = (&scans[0], &scans[1]);
    let d3 = dirichlet::<Rational>(3, 2).unwrap().lp_quasinorm(Rational::ONE).unwrap();
    let d3_ok = d3 == QuasinormValue::Exact(Rational::new(3, 2));
    outcome(
        check_passed(l1, "bounded") && check_passed(sandwich, "sandwich") && d3_ok,
        format!("{}; {}; ||D_3||_1 = {d3:?}", check_detail(sandwich, "sandwich"), check_detail(l1, "bounded")),
    )
}

fn fejer_lower_bound(scans: &[ExperimentReport]) -> Outcome {
    let (lemma3, chain) = (&scans[3], &scans[4]);
    outcome(
        check_passed(lemma3, "lower_bound") && check_passed(chain, "chain"),
        format!("{}; {}", check_detail(lemma3, "lower_bound"), check_detail(chain, "chain")),
    )
}

fn theorem2() -> Outcome {
    let mut bad_identity = 0;
    for m in 1..=10u32 {
        for n in 1..1u64 << m {
            if !sigma_identity_16b_residual(m, n).unwrap().is_zero() {
                bad_identity += 1;
            }
        }
    }
    let bad_norm: Vec<u32> = (0..=12u32)
        .filter(|&m| {
            let f = build_theorem2_martingale(m, m + 1).unwrap();
            hp_quasinorm(&f, Rational::new(1, 2)).unwrap() != QuasinormValue::Exact(Rational::ONE)
        })
        .collect();
    let report = run_theorem2(Theorem2Options::default()).unwrap();
    let b: Vec<String> = report.rows.iter().map(|r| format!("{:.4}", r[1].to_f64().unwrap())).collect();
    let growth_ok = check_passed(&report, "b_strictly_increasing") && check_passed(&report, "growth");
    outcome(
        bad_identity == 0 && bad_norm.is_empty() && growth_ok,
        format!(
            "identity residuals nonzero: {bad_identity}; H_1/2 norm != 1 for m in {bad_norm:?}; B_4..B_10 = [{}]; {}",
            b.join(", "),
            check_detail(&report, "growth")
        ),
    )
}

fn theorem1b() -> Outcome {
    let report = run_theorem1b(&CounterexampleSpec::default_divergence(), Some(3), Mode::Exact).unwrap();
    let passed = check_passed(&report, "block_sums_strictly_increasing")
        && check_passed(&report, "tail_identity")
        && check_passed(&report, "tail_lower_bound");
    outcome(
        passed,
        format!(
            "{}; tail identity {}; lower bound {}",
            check_detail(&report, "block_sums_strictly_increasing"),
            check_passed(&report, "tail_identity"),
            check_passed(&report, "tail_lower_bound")
        ),
    )
}

fn theorem1a() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for p in [Rational::new(1, 4), Rational::new(1, 2)] {
        for depth in 2..=6u32 {
            let report =
                run_theorem1a(&Theorem1aSource::HaarAtom { depth }, p, 1 << 12, LogBase::Two, Mode::Exact).unwrap();
            let vanish = check_passed(&report, "vanishing_below_support_scale");
            let plateau = check_passed(&report, "plateau");
            passed &= vanish && plateau;
            let increase = report.summary_value("last_quarter_increase").and_then(Cell::to_f64).unwrap();
            let sup = report.summary_value("sup_ratio").and_then(Cell::to_f64).unwrap();
            let at = report.summary_value("sup_at").cloned().unwrap();
            parts.push(format!(
                "p={p} M={depth}: sup {sup:.4} at n={at}, last-quarter increase {:.2}%{}{}",
                increase * 100.0,
                if vanish { "" } else { ", sigma_n nonzero below 2^M" },
                if plateau { "" } else { " (no plateau)" }
            ));
        }
    }
    outcome(passed, parts.join("; "))
}

fn random_function(rng: &mut ChaCha8Rng, m: u32) -> StepFunction {
    StepFunction::from_fn(m, |_| Rational::new(rng.gen_range(-40..=40), rng.gen_range(1..=9)))
}

fn transforms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut fwht_ok = true;
    for m in 0..=8u32 {
        let f = random_function(&mut rng, m);
        let spectrum = fwht(&f);
        for k in 0..1u64 << m {
            fwht_ok &= spectrum.coeff(k) == (&f * &walsh::<Rational>(k, m).unwrap()).integrate();
        }
    }
    let mut parseval_ok = 0;
    for i in 0..100u32 {
        let f = random_function(&mut rng, i % 11);
        let lhs: Rational =
            f.values().iter().map(|&v| v * v).sum::<Rational>() * Rational::pow2(-(f.resolution() as i32));
        let rhs: Rational = fwht(&f).coeffs().iter().map(|&c| c * c).sum();
        parseval_ok += usize::from(lhs == rhs);
    }
    let f = random_function(&mut rng, 8);
    let mut sweep = FejerSweep::new(&f);
    let mut running = StepFunction::constant(8, Rational::ZERO);
    let mut mean_mismatch = Vec::new();
    for n in 1..=256u64 {
        // sigma_n f = (1/n) sum_{k=1}^n S_k f, straight from the partial sums
        running = &running + &partial_sum(&f, n);
        let by_definition = running.scale(Rational::new(1, n as i128));
        let by_kernel = dyadic_convolve(&f, &fejer_kernel(n, 8).unwrap());
        sweep.advance();
        if by_definition != by_kernel || sweep.mean() != by_kernel || fejer_mean(&f, n).unwrap() != by_kernel {
            mean_mismatch.push(n);
        }
    }
    outcome(
        fwht_ok && parseval_ok == 100 && mean_mismatch.is_empty(),
        format!(
            "FWHT vs inner products for M <= 8: {fwht_ok}; Parseval {parseval_ok}/100; sigma_n vs f * K_n mismatches {mean_mismatch:?}"
        ),
    )
}

fn fine_average() -> Outcome {
    let report = run_fine_average(1 << 20).unwrap();
    let v = |k: &str| report.summary_value(k).map(|c| c.to_string()).unwrap_or_default();
    outcome(
        check_passed(&report, "closed_form") && check_passed(&report, "stabilization"),
        format!(
            "{}; {}; V-based ratio {} (deviation from 1/(4 ln 2): {}), block-based ratio {} (deviation {}), closer: {}",
            check_detail(&report, "closed_form"),
            check_detail(&report, "stabilization"),
            v("ratio_v_ln"),
            v("v_deviation_from_quoted"),
            v("ratio_blocks_ln"),
            v("blocks_deviation_from_quoted"),
            v("closer_to_quoted"),
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let scans = run_kernel_scans(&KernelScanOptions::default()).unwrap();
    let results = [
        ("exact kernel identities", kernel_identities()),
        ("Dirichlet norm sandwich and Fejer L1 ceiling", norm_sandwich(&scans)),
        ("Fejer lower bound on block intervals", fejer_lower_bound(&scans)),
        ("F_m divergence at desk scale", theorem2()),
        ("weak-type divergence blocks", theorem1b()),
        ("strong summability of atoms", theorem1a()),
        ("transform correctness", transforms()),
        ("average variation", fine_average()),
    ];
    let mut failed = Vec::new();
    for (i, (name, result)) in results.iter().enumerate() {
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({})", i + 1, result.detail);
        if !result.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
