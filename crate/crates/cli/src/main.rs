//! Runs the Walsh-Fejer experiments and writes their reports.
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use walsh_fejer::experiments::{
    run_fine_average, run_kernel_scans, run_theorem1a, run_theorem1b, run_theorem2, ExperimentReport,
    KernelScanOptions, LogBase, Mode, Theorem1aSource, Theorem2Options,
};
use walsh_fejer::{
    build_counterexample_1b, build_theorem2_martingale, haar_atom, CounterexampleSpec, Rational, StepFunction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Weighted sums of ||sigma_m F||_p^p for a p-atom or a loaded martingale
    Theorem1a,
    /// Weak-type sums over the divergence construction
    Theorem1b,
    /// Averages B_m of ||sigma_k F_m||_{1/2}^{1/2}
    Theorem2,
    /// Average of the variation V(k)
    FineAverage,
    /// Kernel norms, interval integrals and atom tails
    KernelScans,
}

#[derive(Debug, Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    experiment: Experiment,

    /// Exponent p as a rational, e.g. 1/4
    #[arg(long)]
    p: Option<Rational>,

    /// Largest index n
    #[arg(long)]
    n_max: Option<u64>,

    #[arg(long, default_value_t = 4)]
    m_min: u32,

    #[arg(long, default_value_t = 10)]
    m_max: u32,

    /// Required ratio B_{m_max} / B_{m_min}
    #[arg(long, default_value_t = 1.5)]
    min_growth: f64,

    /// Support depth M of the Haar atom (theorem1a)
    #[arg(long, default_value_t = 4)]
    depth: u32,

    /// Counterexample config with p=, phi= and alpha= lines (theorem1b)
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Only the first k_max + 1 blocks (theorem1b)
    #[arg(long)]
    k_max: Option<usize>,

    #[arg(long, default_value = "exact")]
    mode: Mode,

    /// Base of the log weight: 2 or natural
    #[arg(long, default_value = "2")]
    log: LogBase,

    /// CSV destination; kernel-scans writes <stem>-<scan>.csv next to it
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the terminal step function of the martingale used
    #[arg(long)]
    dump: Option<PathBuf>,

    /// Read the terminal step function to analyse (theorem1a)
    #[arg(long)]
    load: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if cli.load.is_some() && cli.experiment != Experiment::Theorem1a {
        bail!("--load only applies to theorem1a");
    }
    let reports = match cli.experiment {
        Experiment::Theorem1a => vec![theorem1a(cli)?],
        Experiment::Theorem1b => vec![theorem1b(cli)?],
        Experiment::Theorem2 => {
            if let Some(path) = &cli.dump {
                dump(&build_theorem2_martingale(cli.m_max, cli.m_max + 1)?.terminal().clone(), path)?;
            }
            vec![run_theorem2(Theorem2Options {
                m_min: cli.m_min,
                m_max: cli.m_max,
                min_growth: cli.min_growth,
                mode: cli.mode,
            })?]
        }
        Experiment::FineAverage => {
            no_dump(cli)?;
            vec![run_fine_average(cli.n_max.unwrap_or(1 << 20))?]
        }
        Experiment::KernelScans => {
            no_dump(cli)?;
            run_kernel_scans(&KernelScanOptions::up_to(cli.n_max.unwrap_or(1 << 14)))?
        }
    };
    if let Some(out) = &cli.out {
        write_reports(&reports, out)?;
    }
    for r in &reports {
        println!("{}", r.to_markdown());
    }
    Ok(reports.iter().all(ExperimentReport::passed))
}

fn theorem1a(cli: &Cli) -> anyhow::Result<ExperimentReport> {
    let p = cli.p.unwrap_or(Rational::new(1, 2));
    let source = match &cli.load {
        Some(path) => {
            Theorem1aSource::Terminal(StepFunction::load(path).with_context(|| format!("loading {}", path.display()))?)
        }
        None => Theorem1aSource::HaarAtom { depth: cli.depth },
    };
    if let Some(path) = &cli.dump {
        let f = match &source {
            Theorem1aSource::HaarAtom { depth } => haar_atom(*depth, p)?.into_function(),
            Theorem1aSource::Terminal(f) => f.clone(),
        };
        dump(&f, path)?;
    }
    Ok(run_theorem1a(&source, p, cli.n_max.unwrap_or(1 << 12), cli.log, cli.mode)?)
}

fn theorem1b(cli: &Cli) -> anyhow::Result<ExperimentReport> {
    let mut spec = match &cli.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CounterexampleSpec::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => CounterexampleSpec::default_divergence(),
    };
    if let Some(p) = cli.p {
        spec = CounterexampleSpec::new(p, spec.phi(), spec.alphas().to_vec())?;
    }
    if let Some(path) = &cli.dump {
        dump(build_counterexample_1b(&spec)?.terminal(), path)?;
    }
    Ok(run_theorem1b(&spec, cli.k_max, cli.mode)?)
}

fn no_dump(cli: &Cli) -> anyhow::Result<()> {
    if cli.dump.is_some() {
        bail!("--dump needs an experiment built on a martingale");
    }
    Ok(())
}

fn dump(f: &StepFunction, path: &Path) -> anyhow::Result<()> {
    f.save(path).with_context(|| format!("writing {}", path.display()))
}

fn write_reports(reports: &[ExperimentReport], out: &Path) -> anyhow::Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    if let [single] = reports {
        return std::fs::write(out, single.to_csv()).with_context(|| format!("writing {}", out.display()));
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("scan");
    for r in reports {
        let path = out.with_file_name(format!("{stem}-{}.csv", r.id));
        std::fs::write(&path, r.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
