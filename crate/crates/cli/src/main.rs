//! `nematic`: simulate, sweep, fit and bench front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nematic_core::error::ExperimentError;
use nematic_core::experiments::io::{read_records, write_json, write_records, write_trace, FitSummary, RunMetadata};
use nematic_core::experiments::{benchmark_compare, power_law_fit, run_scaling, run_single, RunConfig};

#[derive(Parser)]
#[command(name = "nematic", version, about = "Spin-nematic squeezing simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One run: writes trace.csv, record.csv and trace.meta.json.
    Simulate(RunArgs),
    /// Size sweep: writes sweep.csv, fit.json and sweep.meta.json.
    Sweep(RunArgs),
    /// Power-law fits of an existing sweep CSV: writes fit.json.
    Fit(FitArgs),
    /// Compare the configured method with `bench.reference`: writes bench.json and bench.meta.json.
    Bench(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run-config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-path override, e.g. `coupling.jr=0.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed for dTWA sampling (same as `--set dtwa.seed=S`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV produced by `sweep`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Smallest N included in the fit.
    #[arg(long, default_value_t = 0.0)]
    min_n: f64,
    /// Largest N included in the fit.
    #[arg(long, default_value_t = f64::INFINITY)]
    max_n: f64,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("dtwa.seed={seed}"));
    }
    RunConfig::from_json(&text, &overrides).map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

/// Runs `body`; on a numerical failure the metadata sidecar still records it.
fn with_metadata<T>(
    command: &str,
    meta_file: &str,
    config: &RunConfig,
    out: &Path,
    body: impl FnOnce(&mut RunMetadata) -> Result<T, ExperimentError>,
) -> Result<T, Failure> {
    let start = Instant::now();
    let mut meta = RunMetadata::new(command, config);
    let result = body(&mut meta);
    meta.wall_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(v) => {
            ensure_dir(out)?;
            write_json(&out.join(meta_file), &meta)?;
            Ok(v)
        }
        Err(e) if e.is_numerical() => {
            meta.failure = Some(e.to_string());
            ensure_dir(out)?;
            write_json(&out.join(meta_file), &meta)?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn simulate(args: &RunArgs, quiet: bool) -> Result<(), Failure> {
    let config = load(args)?;
    let out = &args.out;
    let output = with_metadata("simulate", "trace.meta.json", &config, out, |meta| {
        let output = run_single(&config)?;
        meta.warnings = output.warnings.clone();
        meta.diagnostics = output.trace.diagnostics;
        ensure_dir(out).map_err(|_| std::io::Error::other("cannot create output directory"))?;
        write_trace(&out.join("trace.csv"), &output.trace)?;
        write_records(&out.join("record.csv"), std::slice::from_ref(&output.record))?;
        if output.omega_samples.len() > 1 {
            write_json(&out.join("omega_scan.json"), &output.omega_samples)?;
        }
        Ok(output)
    })?;
    if !quiet {
        for w in &output.warnings {
            eprintln!("warning: {w}");
        }
        let r = &output.record;
        println!(
            "N = {}  Ω = {}  ξ²_min = {:.6} at t = {:.6}  F_Q,max = {:.6} at t = {:.6}",
            r.n, r.omega_opt, r.xi2_min, r.t_opt, r.fq_max, r.t_fq
        );
    }
    Ok(())
}

fn sweep(args: &RunArgs, quiet: bool) -> Result<(), Failure> {
    let config = load(args)?;
    let out = &args.out;
    let output = with_metadata("sweep", "sweep.meta.json", &config, out, |meta| {
        let output = run_scaling(&config)?;
        let fits = FitSummary {
            xi2: output.xi2_fit.clone(),
            fq: output.fq_fit.clone(),
        };
        meta.warnings = output.warnings.clone();
        meta.fits = Some(fits.clone());
        ensure_dir(out).map_err(|_| std::io::Error::other("cannot create output directory"))?;
        write_records(&out.join("sweep.csv"), &output.records)?;
        write_json(&out.join("fit.json"), &fits)?;
        Ok(output)
    })?;
    if !quiet {
        for w in &output.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "ξ² exponent {:.4} ± {:.4}, F_Q exponent {:.4} ± {:.4} ({} sizes)",
            output.xi2_fit.exponent,
            output.xi2_fit.exponent_stderr,
            output.fq_fit.exponent,
            output.fq_fit.exponent_stderr,
            output.records.len()
        );
    }
    Ok(())
}

fn fit(args: &FitArgs, quiet: bool) -> Result<(), Failure> {
    let records = read_records(&args.input).map_err(|e| Failure::Usage(format!("{}: {e}", args.input.display())))?;
    let window = [args.min_n, args.max_n];
    let xi: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.reported_xi2())).collect();
    let fq: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.fq_max)).collect();
    let fits = FitSummary {
        xi2: power_law_fit(&xi, window)?,
        fq: power_law_fit(&fq, window)?,
    };
    ensure_dir(&args.out)?;
    write_json(&args.out.join("fit.json"), &fits)?;
    if !quiet {
        println!("ξ² exponent {:.4}, F_Q exponent {:.4}", fits.xi2.exponent, fits.fq.exponent);
    }
    Ok(())
}

fn bench(args: &RunArgs, quiet: bool) -> Result<(), Failure> {
    let config = load(args)?;
    let spec = config
        .bench
        .as_ref()
        .ok_or_else(|| Failure::Usage("config has no `bench` section".into()))?;
    let mut reference = config.clone();
    reference.method = spec.reference;
    reference.validate()?;
    let out = &args.out;
    let report = with_metadata("bench", "bench.meta.json", &config, out, |_| {
        let report = benchmark_compare(&config, &reference)?;
        ensure_dir(out).map_err(|_| std::io::Error::other("cannot create output directory"))?;
        write_json(&out.join("bench.json"), &report)?;
        Ok(report)
    })?;
    if !quiet {
        println!(
            "max relative deviation: ξ² {:.4} (to t = {:.4}), F_Q {:.4} (to t = {:.4})",
            report.max_rel_dev_xi2, report.xi2_window_end, report.max_rel_dev_fq, report.fq_window_end
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.quiet),
        Command::Sweep(a) => sweep(a, cli.quiet),
        Command::Fit(a) => fit(a, cli.quiet),
        Command::Bench(a) => bench(a, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
