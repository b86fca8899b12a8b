//! The subcommands. Each one reads its keys from a [`FlatConfig`], rejects
//! anything it did not read, and writes into an [`Artifacts`] directory.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use bigmac::diagnostics::{
    band_mass, bvm_check, ess_per_100, frobenius_error, summarize_gibbs, summarize_riva, SummaryReport,
};
use bigmac::diffusion::{coarse_grain, simulate_trajectory, DiffusionConfig};
use bigmac::io;
use bigmac::posterior::{run_gibbs, GibbsConfig, Hyperparameters, PosteriorChain, PosteriorError};
use bigmac::riva::{run_mhriva, RivaConfig};
use bigmac::rng::SeedStream;
use bigmac::sim::{
    empirical_p, sample_random_generator, simulate_ctmc, transition_counts, InitialState, TransitionCounts,
};
use bigmac::spectral::GeneratorMatrix;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::json;

use crate::artifacts::{verify_dir, Artifacts, Verification};
use crate::config::FlatConfig;
use crate::error::{CliError, CliResult, Classify};

fn out_dir(cfg: &FlatConfig) -> CliResult<PathBuf> {
    Ok(PathBuf::from(cfg.str_or("out", "out")?))
}

fn read_counts(path: &Path) -> CliResult<TransitionCounts> {
    let f = File::open(path).config_err(format!("cannot open counts file {}", path.display()))?;
    Ok(io::read_counts_csv(f).config_err(format!("cannot parse counts file {}", path.display()))?.0)
}

fn read_generator(path: &Path) -> CliResult<GeneratorMatrix> {
    let f = File::open(path).config_err(format!("cannot open generator file {}", path.display()))?;
    let (m, _, _) = io::read_matrix_csv(f).config_err(format!("cannot parse {}", path.display()))?;
    GeneratorMatrix::new(m).config_err(format!("{} is not a generator", path.display()))
}

fn gibbs_config(cfg: &FlatConfig, iters: usize, burn_in: usize, thin: usize) -> CliResult<GibbsConfig> {
    let g = GibbsConfig {
        iters: cfg.usize_or("gibbs.iters", iters)?,
        burn_in: cfg.usize_or("gibbs.burn_in", burn_in)?,
        thin: cfg.usize_or("gibbs.thin", thin)?,
    };
    g.validate().config_err("invalid gibbs settings")?;
    Ok(g)
}

/// Hyperparameters for `m` states; defaults are the published profile.
fn hyperparameters(cfg: &FlatConfig, m: usize) -> CliResult<Hyperparameters> {
    let d = Hyperparameters::paper_defaults(m);
    let h = Hyperparameters {
        nu: cfg.f64_or("prior.nu", d.nu)?,
        alpha: vec![cfg.f64_or("prior.alpha", d.alpha[0])?; m],
        sigma_phi2: cfg.f64_or("prior.sigma_phi2", d.sigma_phi2)?,
        sigma_psi2: cfg.f64_or("prior.sigma_psi2", d.sigma_psi2)?,
        sigma_c2: cfg.f64_or("prior.sigma_c2", d.sigma_c2)?,
        eps_relax: cfg.f64_or("prior.eps_relax", d.eps_relax)?,
        row_update_mode: cfg
            .str_or("prior.row_update_mode", "DIRECT_DIRICHLET")?
            .parse()
            .config_err("invalid prior.row_update_mode")?,
    };
    h.validate(m).config_err("invalid prior settings")?;
    Ok(h)
}

fn riva_config(cfg: &FlatConfig, n_default: usize, iters: usize, burn_in: usize) -> CliResult<RivaConfig> {
    let n_tune = cfg.usize_or("mhriva.n_for_tuning", n_default)?;
    let mut r = RivaConfig::new(n_tune, cfg.usize_or("mhriva.iters", iters)?, cfg.usize_or("mhriva.burn_in", burn_in)?);
    r.thin = cfg.usize_or("mhriva.thin", 1)?;
    if let Some(s) = cfg.opt_f64("mhriva.sigma_a2")? {
        r.tuning.sigma_a2 = s;
    }
    if let Some(c) = cfg.opt_f64("mhriva.conc")? {
        r.tuning.conc = c;
    }
    r.a_max = cfg.f64_or("mhriva.a_max", f64::INFINITY)?;
    r.proposal_correction = cfg.bool_or("mhriva.proposal_correction", true)?;
    r.validate().config_err("invalid mhriva settings")?;
    Ok(r)
}

fn fit_failure(e: PosteriorError) -> CliError {
    match e {
        PosteriorError::InitializationFailure { trace } => {
            CliError::numeric(format!("initialization failed; fallbacks tried:\n  {}", trace.join("\n  ")))
        }
        PosteriorError::Config(msg) => CliError::config(msg),
        other => CliError::numeric(other),
    }
}

fn write_summary(art: &mut Artifacts, report: &SummaryReport, delta: f64) -> CliResult<()> {
    let v = io::summary_to_json(report, delta, Some(art.provenance()));
    art.write_json("summary.json", &v)?;
    art.write("summary.csv", |w, p| Ok(io::write_summary_table(w, report, Some(p))?))?;
    Ok(())
}

pub fn simulate(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let generator = cfg.opt_path("sim.generator")?;
    let m = cfg.usize_or("sim.m", 2)?;
    let n = cfg.usize_or("sim.n", 1000)?;
    let delta = cfg.f64_or("sim.delta", 1.0)?;
    let x0 = cfg.str_or("sim.x0", "stationary")?;
    cfg.reject_unknown()?;
    if generator.is_none() && m < 2 {
        return Err(CliError::config(format!("sim.m must be at least 2, got {m}")));
    }
    if !(delta > 0.0) {
        return Err(CliError::config("sim.delta must be positive"));
    }
    let x0 = match x0.as_str() {
        "stationary" => InitialState::Stationary,
        s => InitialState::State(
            s.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::config("sim.x0 must be \"stationary\" or a 1-based state"))?
                - 1,
        ),
    };

    let streams = SeedStream::new(seed);
    let l = match &generator {
        Some(p) => read_generator(p)?,
        None => sample_random_generator(m, &mut streams.rng("generator")).numeric_err("cannot draw a generator")?,
    };
    let (continuous, observed) =
        simulate_ctmc(&l, &x0, n, delta, &mut streams.rng("ctmc")).config_err("cannot simulate")?;
    let counts = transition_counts(&observed);

    let mut art = Artifacts::create(&out, "simulate", cfg, seed)?;
    art.write("generator.csv", |w, p| Ok(io::write_matrix_csv(w, l.entries(), delta, Some(p))?))?;
    art.write("continuous_path.csv", |w, p| Ok(io::write_continuous_path_csv(w, &continuous, Some(p))?))?;
    art.write("path.csv", |w, p| Ok(io::write_path_csv(w, &observed, Some(p))?))?;
    art.write("counts.csv", |w, p| Ok(io::write_counts_csv(w, &counts, Some(p))?))?;
    Ok(art)
}

pub fn fit(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let counts_path = cfg.path("fit.counts")?;
    let truth_path = cfg.opt_path("fit.truth")?;
    let gcfg = gibbs_config(cfg, 5000, 1000, 1)?;
    hyperparameters(cfg, 1)?;
    cfg.reject_unknown()?;

    let counts = read_counts(&counts_path)?;
    let truth = truth_path.as_deref().map(read_generator).transpose()?;
    let h = hyperparameters(cfg, counts.m())?;
    let chain = run_gibbs(&counts, &h, &gcfg, seed).map_err(fit_failure)?;
    let report = summarize_gibbs(&chain, truth.as_ref()).numeric_err("cannot summarize the chain")?;

    let mut art = Artifacts::create(&out, "fit", cfg, seed)?;
    art.write("chain.jsonl", |w, p| Ok(io::write_gibbs_chain(w, &chain, Some(p))?))?;
    write_summary(&mut art, &report, counts.delta())?;
    Ok(art)
}

pub fn mhriva(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let counts_path = cfg.path("fit.counts")?;
    let truth_path = cfg.opt_path("fit.truth")?;
    let counts = read_counts(&counts_path)?;
    let rcfg = riva_config(cfg, counts.total() as usize, 5000, 1000)?;
    cfg.reject_unknown()?;

    let truth = truth_path.as_deref().map(read_generator).transpose()?;
    let chain = run_mhriva(&counts, &rcfg, seed).numeric_err("mhriva sampler failed")?;
    let report = summarize_riva(&chain, truth.as_ref()).numeric_err("cannot summarize the chain")?;

    let mut art = Artifacts::create(&out, "mhriva", cfg, seed)?;
    art.write("chain.jsonl", |w, p| Ok(io::write_riva_chain(w, &chain, Some(p))?))?;
    write_summary(&mut art, &report, counts.delta())?;
    Ok(art)
}

/// One (sampler, m, n, replicate) result; `None` metrics mark a failed fit.
#[derive(Debug, Clone)]
struct CellResult {
    sampler: String,
    m: usize,
    n: usize,
    replicate: usize,
    frobenius_l: Option<f64>,
    ess_per_100: Option<f64>,
    error: Option<String>,
}

struct BenchSpec {
    delta: f64,
    gibbs: GibbsConfig,
    hyper_alpha: f64,
    riva_iters: usize,
    riva_burn_in: usize,
    samplers: Vec<String>,
}

fn bench_cell(spec: &BenchSpec, cfg_hyper: &Hyperparameters, m: usize, n: usize, r: usize, root: SeedStream) -> Vec<CellResult> {
    let cell = root.child(&format!("m{m}-n{n}-r{r}"));
    let mk = |sampler: &str, res: Result<(f64, f64), String>| {
        let (frob, ess, err) = match res {
            Ok((f, e)) => (Some(f), Some(e), None),
            Err(e) => (None, None, Some(e)),
        };
        CellResult {
            sampler: sampler.to_string(),
            m,
            n,
            replicate: r,
            frobenius_l: frob,
            ess_per_100: ess,
            error: err,
        }
    };
    let data = sample_random_generator(m, &mut cell.rng("generator")).map_err(|e| e.to_string()).and_then(|l| {
        let (_, obs) = simulate_ctmc(&l, &InitialState::Stationary, n, spec.delta, &mut cell.rng("ctmc"))
            .map_err(|e| e.to_string())?;
        Ok((l, transition_counts(&obs)))
    });
    let (l, counts) = match data {
        Ok(d) => d,
        Err(e) => return spec.samplers.iter().map(|s| mk(s, Err(e.clone()))).collect(),
    };
    let mut h = cfg_hyper.clone();
    h.alpha = vec![spec.hyper_alpha; m];
    spec.samplers
        .iter()
        .map(|s| {
            let res = match s.as_str() {
                "bigmac" => run_gibbs(&counts, &h, &spec.gibbs, cell.child("bigmac").root())
                    .map_err(|e| e.to_string())
                    .and_then(|c| bench_metrics(&c.generators(), &l)),
                _ => {
                    let rc = RivaConfig::new(n, spec.riva_iters, spec.riva_burn_in);
                    run_mhriva(&counts, &rc, cell.child("mhriva").root())
                        .map_err(|e| e.to_string())
                        .and_then(|c| bench_metrics(&c.generators(), &l))
                }
            };
            mk(s, res)
        })
        .collect()
}

fn bench_metrics(samples: &[DMatrix<f64>], truth: &GeneratorMatrix) -> Result<(f64, f64), String> {
    let mean = samples.iter().fold(DMatrix::zeros(truth.dim(), truth.dim()), |a, s| a + s) / samples.len() as f64;
    let frob = frobenius_error(&mean, truth.entries()).map_err(|e| e.to_string())?;
    let ess = ess_per_100(samples).map_err(|e| e.to_string())?;
    Ok((frob, ess))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn benchmark(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let ms = cfg.usize_list_or("bench.m", &[2])?;
    let ns = cfg.usize_list_or("bench.n", &[1000])?;
    let replicates = cfg.usize_or("bench.replicates", 10)?;
    let samplers = cfg.str_list_or("bench.samplers", &["bigmac", "mhriva"])?;
    let delta = cfg.f64_or("sim.delta", 1.0)?;
    let gibbs = gibbs_config(cfg, 5000, 1000, 1)?;
    let hyper = hyperparameters(cfg, 1)?;
    let riva_iters = cfg.usize_or("mhriva.iters", 5000)?;
    let riva_burn_in = cfg.usize_or("mhriva.burn_in", 1000)?;
    cfg.reject_unknown()?;
    if replicates == 0 {
        return Err(CliError::config("bench.replicates must be at least 1"));
    }
    if ms.is_empty() || ns.is_empty() || ms.iter().any(|&m| m < 2) || ns.iter().any(|&n| n < 1) {
        return Err(CliError::config("bench.m entries must be ≥ 2 and bench.n entries ≥ 1"));
    }
    if let Some(s) = samplers.iter().find(|s| !matches!(s.as_str(), "bigmac" | "mhriva")) {
        return Err(CliError::config(format!("unknown sampler {s:?}")));
    }
    if riva_iters <= riva_burn_in {
        return Err(CliError::config("mhriva.iters must exceed mhriva.burn_in"));
    }
    let spec = BenchSpec {
        delta,
        gibbs,
        hyper_alpha: hyper.alpha[0],
        riva_iters,
        riva_burn_in,
        samplers,
    };

    let root = SeedStream::new(seed);
    let grid: Vec<(usize, usize, usize)> = ms
        .iter()
        .flat_map(|&m| ns.iter().flat_map(move |&n| (0..replicates).map(move |r| (m, n, r))))
        .collect();
    let cells: Vec<CellResult> = grid
        .par_iter()
        .flat_map_iter(|&(m, n, r)| bench_cell(&spec, &hyper, m, n, r, root))
        .collect();
    for c in cells.iter().filter(|c| c.error.is_some()) {
        log::warn!(
            "{} m={} n={} replicate={} failed: {}",
            c.sampler,
            c.m,
            c.n,
            c.replicate,
            c.error.as_deref().unwrap_or_default()
        );
    }

    let mut art = Artifacts::create(&out, "benchmark", cfg, seed)?;
    art.write("benchmark.csv", |w, p| {
        writeln!(w, "# config_hash={} seed={}", p.config_hash, p.seed)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sampler", "m", "n", "metric", "mean", "sd"])?;
        for sampler in &spec.samplers {
            for &m in &ms {
                for &n in &ns {
                    let sel: Vec<&CellResult> = cells
                        .iter()
                        .filter(|c| &c.sampler == sampler && c.m == m && c.n == n)
                        .collect();
                    let metrics: [(&str, Vec<f64>); 2] = [
                        ("frobenius_L", sel.iter().filter_map(|c| c.frobenius_l).collect()),
                        ("ess_per_100", sel.iter().filter_map(|c| c.ess_per_100).collect()),
                    ];
                    for (name, xs) in metrics {
                        let (mean, sd) = if xs.is_empty() { (f64::NAN, f64::NAN) } else { mean_sd(&xs) };
                        out.write_record([sampler.clone(), m.to_string(), n.to_string(), name.into(), mean.to_string(), sd.to_string()])?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    })?;
    art.write("benchmark_cells.csv", |w, p| {
        writeln!(w, "# config_hash={} seed={}", p.config_hash, p.seed)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sampler", "m", "n", "replicate", "frobenius_L", "ess_per_100", "error"])?;
        let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for c in &cells {
            out.write_record([
                c.sampler.clone(),
                c.m.to_string(),
                c.n.to_string(),
                c.replicate.to_string(),
                fmt(c.frobenius_l),
                fmt(c.ess_per_100),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(art)
}

/// Checks run on the fitted diffusion model.
pub struct DiffusionChecks {
    pub max_row_sum_dev: f64,
    pub min_offdiag_l: f64,
    pub visited_rows: Vec<usize>,
    pub band_mass: Vec<f64>,
    pub rows_in_band: usize,
}

pub fn diffusion_checks(chain: &PosteriorChain, counts: &TransitionCounts, half_width: usize, threshold: f64) -> DiffusionChecks {
    let m = counts.m();
    let k = chain.len() as f64;
    let p_mean = chain.samples.iter().fold(DMatrix::zeros(m, m), |a, s| a + &s.p) / k;
    let l_mean = chain.generators().iter().fold(DMatrix::zeros(m, m), |a, l| a + l) / k;
    let max_row_sum_dev = p_mean.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let min_offdiag_l = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| l_mean[(i, j)])
        .fold(f64::INFINITY, f64::min);
    let visited_rows: Vec<usize> = (0..m).filter(|&p| counts.row_total(p) > 0).collect();
    let band = band_mass(&p_mean, half_width);
    let rows_in_band = visited_rows.iter().filter(|&&p| band[p] >= threshold).count();
    DiffusionChecks {
        max_row_sum_dev,
        min_offdiag_l,
        visited_rows,
        band_mass: band,
        rows_in_band,
    }
}

pub fn diffusion(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let d = DiffusionConfig::default();
    let dcfg = DiffusionConfig {
        alpha: cfg.f64_or("diffusion.alpha", d.alpha)?,
        beta: cfg.f64_or("diffusion.beta", d.beta)?,
        dt: cfg.f64_or("diffusion.dt", d.dt)?,
        steps: cfg.usize_or("diffusion.steps", d.steps)?,
        stride: cfg.usize_or("diffusion.stride", d.stride)?,
        lower: cfg.f64_or("diffusion.lower", d.lower)?,
        upper: cfg.f64_or("diffusion.upper", d.upper)?,
        bins: cfg.usize_or("diffusion.bins", d.bins)?,
        x0: cfg.f64_or("diffusion.x0", d.x0)?,
        seed: SeedStream::new(seed).child("diffusion").root(),
    };
    let reference_steps = cfg.usize_or("diffusion.reference_steps", 0)?;
    let half_width = cfg.usize_or("report.band_half_width", 3)?;
    let threshold = cfg.f64_or("report.band_threshold", 0.9)?;
    let write_trajectory = cfg.bool_or("output.trajectory", false)?;
    let write_chain = cfg.bool_or("output.chain", true)?;
    let gcfg = gibbs_config(cfg, 2000, 500, 5)?;
    let h = hyperparameters(cfg, dcfg.bins)?;
    cfg.reject_unknown()?;
    dcfg.validate().config_err("invalid diffusion settings")?;

    let traj = simulate_trajectory(&dcfg).numeric_err("diffusion simulation failed")?;
    let coarse = coarse_grain(&traj, &dcfg).numeric_err("coarse-graining failed")?;
    let counts = transition_counts(&coarse.path);
    let chain = run_gibbs(&counts, &h, &gcfg, SeedStream::new(seed).child("gibbs").root()).map_err(fit_failure)?;
    let report = summarize_gibbs(&chain, None).numeric_err("cannot summarize the chain")?;
    let checks = diffusion_checks(&chain, &counts, half_width, threshold);
    let p_hat = empirical_p(&counts);

    let mut art = Artifacts::create(&out, "diffusion", cfg, seed)?;
    if write_trajectory {
        art.write("trajectory.csv", |w, p| Ok(io::write_trajectory_csv(w, &traj, dcfg.dt, Some(p))?))?;
    }
    art.write("path.csv", |w, p| Ok(io::write_path_csv(w, &coarse.path, Some(p))?))?;
    art.write("counts.csv", |w, p| Ok(io::write_counts_csv(w, &counts, Some(p))?))?;
    art.write("empirical_p.csv", |w, p| {
        Ok(io::write_matrix_csv(w, p_hat.matrix.entries(), counts.delta(), Some(p))?)
    })?;
    if reference_steps > 0 {
        let long = DiffusionConfig {
            steps: reference_steps,
            seed: SeedStream::new(seed).child("reference").root(),
            ..dcfg.clone()
        };
        let traj = simulate_trajectory(&long).numeric_err("reference simulation failed")?;
        let c = transition_counts(&coarse_grain(&traj, &long).numeric_err("coarse-graining failed")?.path);
        let p_ref = empirical_p(&c);
        art.write("reference_p.csv", |w, p| {
            Ok(io::write_matrix_csv(w, p_ref.matrix.entries(), c.delta(), Some(p))?)
        })?;
    }
    if write_chain {
        art.write("chain.jsonl", |w, p| Ok(io::write_gibbs_chain(w, &chain, Some(p))?))?;
    }
    write_summary(&mut art, &report, counts.delta())?;
    let prov = art.provenance().clone();
    art.write_json(
        "diffusion_report.json",
        &json!({
            "observations": coarse.path.states().len(),
            "clamped_points": coarse.clamped,
            "visited_rows": checks.visited_rows.iter().map(|p| p + 1).collect::<Vec<_>>(),
            "max_row_sum_deviation_P": checks.max_row_sum_dev,
            "min_offdiagonal_L": checks.min_offdiag_l,
            "band_half_width": half_width,
            "band_threshold": threshold,
            "band_mass": checks.band_mass,
            "rows_meeting_band_threshold": checks.rows_in_band,
            "config_hash": prov.config_hash,
            "seed": prov.seed,
        }),
    )?;
    Ok(art)
}

pub fn diagnose(cfg: &FlatConfig) -> CliResult<Artifacts> {
    let out = out_dir(cfg)?;
    let chain_path = cfg.path("diagnose.chain")?;
    let counts_path = cfg.opt_path("diagnose.counts")?;
    let truth_path = cfg.opt_path("diagnose.truth")?;
    cfg.reject_unknown()?;

    let f = File::open(&chain_path).config_err(format!("cannot open chain {}", chain_path.display()))?;
    let chain = io::read_chain(f).config_err(format!("cannot parse chain {}", chain_path.display()))?;
    if chain.generators.is_empty() {
        return Err(CliError::config("chain file holds no samples"));
    }
    let truth = truth_path.as_deref().map(read_generator).transpose()?;
    let moments = bigmac::diagnostics::MatrixMoments::of(&chain.generators).numeric_err("cannot summarize")?;
    let ess = ess_per_100(&chain.generators).numeric_err("chain too short for ESS")?;
    let err = truth
        .as_ref()
        .map(|t| frobenius_error(&moments.mean, t.entries()))
        .transpose()
        .config_err("truth has the wrong shape")?;
    let bvm = match (&counts_path, &chain.states) {
        (Some(p), Some(states)) => {
            let counts = read_counts(p)?;
            let pc = PosteriorChain {
                samples: states.clone(),
                hyper: Hyperparameters::paper_defaults(counts.m()),
                config: GibbsConfig::default(),
                seed: chain.header.seed,
                delta: chain.header.delta,
                stats: Default::default(),
                init_trace: Vec::new(),
            };
            Some(bvm_check(&pc, &counts).numeric_err("BvM check failed")?)
        }
        (Some(_), None) => return Err(CliError::config("diagnose.counts needs a bigmac chain")),
        _ => None,
    };

    let mut art = Artifacts::create(&out, "diagnose", cfg, chain.header.seed)?;
    let prov = art.provenance().clone();
    art.write_json(
        "diagnose.json",
        &json!({
            "sampler": chain.header.sampler,
            "chain_config_hash": chain.header.config_hash,
            "m": chain.header.m,
            "n_samples": chain.generators.len(),
            "L_mean": io::nested(&moments.mean),
            "L_sd": io::nested(&moments.sd),
            "ess_per_100": ess,
            "frobenius_error_L": err,
            "bvm": bvm,
            "config_hash": prov.config_hash,
            "seed": prov.seed,
        }),
    )?;
    Ok(art)
}

pub fn verify(dir: &Path) -> CliResult<Verification> {
    verify_dir(dir)?.into_result()
}

/// Read-only access for callers that only need a summary line.
pub fn describe(art: &Artifacts) -> String {
    format!(
        "wrote {} (config_hash={} seed={})",
        art.dir().display(),
        art.provenance().config_hash,
        art.provenance().seed
    )
}
