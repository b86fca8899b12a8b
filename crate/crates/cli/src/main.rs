use std::path::PathBuf;
use std::process::ExitCode;

use bigmac_cli::commands;
use bigmac_cli::config::FlatConfig;
use bigmac_cli::error::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bigmac", version, about = "Bayesian inference for discretely observed CTMC generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every run.
#[derive(Args)]
struct Common {
    /// Key-value config file; sections become dotted key prefixes.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set prior.nu=1e3`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Root seed (`seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (`out`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of states (`sim.m`).
    #[arg(long)]
    m: Option<u64>,
    /// Number of transitions (`sim.n`).
    #[arg(long)]
    n: Option<u64>,
    /// Observation interval (`sim.delta`).
    #[arg(long)]
    delta: Option<f64>,
    /// Generator CSV to simulate from instead of a random one (`sim.generator`).
    #[arg(long)]
    generator: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Transition counts CSV (`fit.counts`).
    #[arg(long)]
    counts: Option<PathBuf>,
    /// True generator CSV for error reporting (`fit.truth`).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Total sweeps (`gibbs.iters` or `mhriva.iters`).
    #[arg(long)]
    iters: Option<u64>,
    /// Discarded sweeps (`gibbs.burn_in` or `mhriva.burn_in`).
    #[arg(long)]
    burn_in: Option<u64>,
    /// Keep every k-th sweep (`gibbs.thin` or `mhriva.thin`).
    #[arg(long)]
    thin: Option<u64>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    /// Replicates per grid cell (`bench.replicates`).
    #[arg(long)]
    replicates: Option<u64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: Common,
    /// Chain file written by `fit` or `mhriva` (`diagnose.chain`).
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Counts CSV enabling the Dirichlet comparison (`diagnose.counts`).
    #[arg(long)]
    counts: Option<PathBuf>,
    /// True generator CSV (`diagnose.truth`).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random generator and simulate a path from it.
    Simulate(SimulateArgs),
    /// Run the spectral Gibbs sampler on a counts file.
    Fit(FitArgs),
    /// Run the Metropolis-Hastings baseline on a counts file.
    Mhriva(FitArgs),
    /// Compare both samplers over an (m, n) grid of simulated data sets.
    Benchmark(BenchmarkArgs),
    /// Simulate the three-well diffusion, coarse-grain it and fit it.
    Diffusion(Common),
    /// Summarize an existing chain file.
    Diagnose(DiagnoseArgs),
    /// Check an output directory against its manifest.
    Verify {
        /// Output directory of an earlier run.
        dir: PathBuf,
    },
}

fn path_str(p: PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

fn load(common: Common) -> CliResult<FlatConfig> {
    let mut cfg = FlatConfig::load(common.config.as_deref())?;
    for o in &common.overrides {
        cfg.set(o)?;
    }
    if let Some(s) = common.seed {
        cfg.set_value("seed", s as i64);
    }
    if let Some(o) = common.out {
        cfg.set_value("out", path_str(o));
    }
    Ok(cfg)
}

fn set_opt<T: Into<toml::Value>>(cfg: &mut FlatConfig, key: &str, v: Option<T>) {
    if let Some(v) = v {
        cfg.set_value(key, v);
    }
}

fn fit_config(a: FitArgs, section: &str) -> CliResult<FlatConfig> {
    let mut cfg = load(a.common)?;
    set_opt(&mut cfg, "fit.counts", a.counts.map(path_str));
    set_opt(&mut cfg, "fit.truth", a.truth.map(path_str));
    set_opt(&mut cfg, &format!("{section}.iters"), a.iters.map(|x| x as i64));
    set_opt(&mut cfg, &format!("{section}.burn_in"), a.burn_in.map(|x| x as i64));
    set_opt(&mut cfg, &format!("{section}.thin"), a.thin.map(|x| x as i64));
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let art = match cli.command {
        Command::Simulate(a) => {
            let mut cfg = load(a.common)?;
            set_opt(&mut cfg, "sim.m", a.m.map(|x| x as i64));
            set_opt(&mut cfg, "sim.n", a.n.map(|x| x as i64));
            set_opt(&mut cfg, "sim.delta", a.delta);
            set_opt(&mut cfg, "sim.generator", a.generator.map(path_str));
            commands::simulate(&cfg)?
        }
        Command::Fit(a) => commands::fit(&fit_config(a, "gibbs")?)?,
        Command::Mhriva(a) => commands::mhriva(&fit_config(a, "mhriva")?)?,
        Command::Benchmark(a) => {
            let mut cfg = load(a.common)?;
            set_opt(&mut cfg, "bench.replicates", a.replicates.map(|x| x as i64));
            commands::benchmark(&cfg)?
        }
        Command::Diffusion(c) => commands::diffusion(&load(c)?)?,
        Command::Diagnose(a) => {
            let mut cfg = load(a.common)?;
            set_opt(&mut cfg, "diagnose.chain", a.chain.map(path_str));
            set_opt(&mut cfg, "diagnose.counts", a.counts.map(path_str));
            set_opt(&mut cfg, "diagnose.truth", a.truth.map(path_str));
            commands::diagnose(&cfg)?
        }
        Command::Verify { dir } => {
            let v = commands::verify(&dir)?;
            println!("ok: {} files match config_hash={}", v.checked, v.config_hash);
            return Ok(());
        }
    };
    println!("{}", commands::describe(&art));
    art.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, source }) => {
            eprintln!("error: {source:#}");
            ExitCode::from(code)
        }
    }
}
