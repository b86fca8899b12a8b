//! Metropolis–Hastings baseline over `L = −A + AQ` with the exact
//! discrete-time likelihood.
//!
//! `A = diag(a)` holds the exit rates and `Q` is the jump chain: row-stochastic
//! with a zero diagonal. Each `a_p` gets a log-normal random-walk proposal and
//! each row of `Q` (off-diagonal part) a Dirichlet proposal centred on the
//! current row. The prior is flat over the natural domain, optionally
//! restricted to `a_p ≤ a_max`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::rng::SeedStream;
use crate::sim::{smoothed_p, TransitionCounts};
use crate::spectral::{matrix_exp, GeneratorMatrix, SpectralError};

/// Smallest probability a counted transition may have.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum RivaError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("P({p},{q}) = {value} is not positive but has observed transitions")]
    NonpositiveEntry { p: usize, q: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RivaState {
    a: DVector<f64>,
    q: DMatrix<f64>,
}

impl RivaState {
    pub fn new(a: DVector<f64>, q: DMatrix<f64>) -> Result<Self, RivaError> {
        let m = a.len();
        if m < 2 || q.nrows() != m || q.ncols() != m {
            return Err(RivaError::InvalidState(format!(
                "need m ≥ 2 and an m×m jump matrix, got a of length {m} and Q of shape {}×{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if let Some(p) = a.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(RivaError::InvalidState(format!("a[{p}] = {} is not positive", a[p])));
        }
        for p in 0..m {
            if q[(p, p)] != 0.0 {
                return Err(RivaError::InvalidState(format!("Q({p},{p}) must be zero")));
            }
            if q.row(p).iter().any(|v| *v < 0.0) {
                return Err(RivaError::InvalidState(format!("row {p} of Q has a negative entry")));
            }
            let sum: f64 = q.row(p).sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(RivaError::InvalidState(format!("row {p} of Q sums to {sum}")));
            }
        }
        Ok(Self { a, q })
    }

    /// Exit rates from `−log P(p,p)/Δ`, jump probabilities from the
    /// off-diagonal part of each row.
    pub fn from_transition(p: &DMatrix<f64>, delta: f64) -> Result<Self, RivaError> {
        let m = p.nrows();
        let mut a = DVector::zeros(m);
        let mut q = DMatrix::zeros(m, m);
        for r in 0..m {
            let stay = p[(r, r)].clamp(1e-6, 1.0 - 1e-6);
            a[r] = -stay.ln() / delta;
            let off: f64 = (0..m).filter(|&c| c != r).map(|c| p[(r, c)]).sum();
            for c in (0..m).filter(|&c| c != r) {
                q[(r, c)] = if off > 0.0 { p[(r, c)] / off } else { 1.0 / (m - 1) as f64 };
            }
        }
        Self::new(a, q)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Off-diagonal entries of row `p` of `Q`, in column order.
    fn q_row(&self, p: usize) -> Vec<f64> {
        (0..self.dim()).filter(|&c| c != p).map(|c| self.q[(p, c)]).collect()
    }

    fn set_q_row(&mut self, p: usize, row: &[f64]) {
        let cols = (0..self.dim()).filter(|&c| c != p);
        for (c, v) in cols.zip(row) {
            self.q[(p, c)] = *v;
        }
    }
}

/// `L(p,p) = −a_p`, `L(p,q) = a_p Q(p,q)`.
pub fn assemble_l(s: &RivaState) -> GeneratorMatrix {
    let m = s.dim();
    let l = DMatrix::from_fn(m, m, |p, q| if p == q { -s.a[p] } else { s.a[p] * s.q[(p, q)] });
    GeneratorMatrix::new(l).expect("−A + AQ is a generator for any valid state")
}

/// `Σ c(p,q) log exp(ΔL)(p,q)`.
pub fn exact_log_likelihood(c: &TransitionCounts, l: &GeneratorMatrix, delta: f64) -> Result<f64, RivaError> {
    if c.total() == 0 {
        return Ok(0.0);
    }
    let p = matrix_exp(l, delta);
    let p = p.entries();
    let mut ll = 0.0;
    for r in 0..c.m() {
        for q in 0..c.m() {
            let n = c.get(r, q);
            if n == 0 {
                continue;
            }
            let v = p[(r, q)];
            if !(v > PROB_FLOOR) {
                return Err(RivaError::NonpositiveEntry { p: r, q, value: v });
            }
            ll += n as f64 * v.ln();
        }
    }
    Ok(ll)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RivaTuning {
    /// Variance of the log-rate random walk.
    pub sigma_a2: f64,
    /// Dirichlet concentration around the current jump row.
    pub conc: f64,
}

impl RivaTuning {
    /// `σ_a² = 3/√n`, `c = √n`.
    pub fn for_n(n: usize) -> Self {
        let root = (n.max(1) as f64).sqrt();
        Self {
            sigma_a2: 3.0 / root,
            conc: root,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RivaConfig {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub tuning: RivaTuning,
    /// Upper bound on every exit rate; infinite by default.
    pub a_max: f64,
    /// Include the Dirichlet proposal-density ratio. Disabling it is only
    /// useful for demonstrating the resulting bias.
    pub proposal_correction: bool,
}

impl RivaConfig {
    pub fn new(n_for_tuning: usize, iters: usize, burn_in: usize) -> Self {
        Self {
            iters,
            burn_in,
            thin: 1,
            tuning: RivaTuning::for_n(n_for_tuning),
            a_max: f64::INFINITY,
            proposal_correction: true,
        }
    }

    pub fn validate(&self) -> Result<(), RivaError> {
        if self.iters <= self.burn_in {
            return Err(RivaError::Config(format!(
                "iters ({}) must exceed burn_in ({})",
                self.iters, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(RivaError::Config("thin must be at least 1".into()));
        }
        if !(self.tuning.sigma_a2 >= 0.0) || !(self.tuning.conc >= 0.0) {
            return Err(RivaError::Config("tuning parameters must be nonnegative".into()));
        }
        if !(self.a_max > 0.0) {
            return Err(RivaError::Config("a_max must be positive".into()));
        }
        Ok(())
    }
}

/// Accept flags from one sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub a_accepted: Vec<bool>,
    /// Empty when `m = 2`: each jump row then has a single entry fixed at 1.
    pub q_accepted: Vec<bool>,
}

fn ln_dirichlet(x: &[f64], conc: &[f64]) -> f64 {
    let total: f64 = conc.iter().sum();
    let norm = ln_gamma(total) - conc.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    norm + x.iter().zip(conc).map(|(v, a)| (a - 1.0) * v.ln()).sum::<f64>()
}

fn dirichlet_draw<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter_mut().for_each(|v| *v /= total);
    draws
}

fn centred(row: &[f64], conc: f64) -> Vec<f64> {
    row.iter().map(|v| conc * v + 1.0).collect()
}

struct Target<'a> {
    c: &'a TransitionCounts,
    delta: f64,
    a_max: f64,
}

impl Target<'_> {
    fn log_density(&self, s: &RivaState) -> Option<f64> {
        if s.a.iter().any(|v| *v > self.a_max) {
            return None;
        }
        exact_log_likelihood(self.c, &assemble_l(s), self.delta).ok()
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

fn sweep<R: Rng + ?Sized>(
    s: &mut RivaState,
    current: &mut f64,
    target: &Target,
    cfg: &RivaConfig,
    rng: &mut R,
) -> StepOutcome {
    let m = s.dim();
    let sd = cfg.tuning.sigma_a2.sqrt();
    let mut a_accepted = Vec::with_capacity(m);
    for p in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        let old = s.a[p];
        let new = (old.ln() + sd * z).exp();
        let mut prop = s.clone();
        prop.a[p] = new;
        let ok = match target.log_density(&prop) {
            // log-normal proposal: q(a|a′)/q(a′|a) = a′/a
            Some(ll) if accept(ll - *current + (new / old).ln(), rng) => {
                *s = prop;
                *current = ll;
                true
            }
            _ => false,
        };
        a_accepted.push(ok);
    }
    let mut q_accepted = Vec::new();
    if m > 2 {
        for p in 0..m {
            let row = s.q_row(p);
            let fwd = centred(&row, cfg.tuning.conc);
            let new = dirichlet_draw(&fwd, rng);
            if new.iter().any(|v| !(*v > 0.0)) {
                q_accepted.push(false);
                continue;
            }
            let mut prop = s.clone();
            prop.set_q_row(p, &new);
            let correction = if cfg.proposal_correction {
                ln_dirichlet(&row, &centred(&new, cfg.tuning.conc)) - ln_dirichlet(&new, &fwd)
            } else {
                0.0
            };
            let ok = match target.log_density(&prop) {
                Some(ll) if accept(ll - *current + correction, rng) => {
                    *s = prop;
                    *current = ll;
                    true
                }
                _ => false,
            };
            q_accepted.push(ok);
        }
    }
    StepOutcome { a_accepted, q_accepted }
}

/// One sweep of single-site updates: every `a_p`, then every jump row.
pub fn mh_step<R: Rng + ?Sized>(
    s: &RivaState,
    c: &TransitionCounts,
    tuning: &RivaTuning,
    rng: &mut R,
) -> Result<(RivaState, StepOutcome), RivaError> {
    let cfg = RivaConfig {
        tuning: *tuning,
        ..RivaConfig::new(1, 1, 0)
    };
    let target = Target {
        c,
        delta: c.delta(),
        a_max: cfg.a_max,
    };
    let mut current = exact_log_likelihood(c, &assemble_l(s), c.delta())?;
    let mut next = s.clone();
    let out = sweep(&mut next, &mut current, &target, &cfg, rng);
    Ok((next, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RivaChain {
    pub samples: Vec<RivaState>,
    pub config: RivaConfig,
    pub seed: u64,
    pub delta: f64,
    pub a_proposals: Vec<u64>,
    pub a_accepts: Vec<u64>,
    pub q_proposals: Vec<u64>,
    pub q_accepts: Vec<u64>,
}

impl RivaChain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn generators(&self) -> Vec<DMatrix<f64>> {
        self.samples.iter().map(|s| assemble_l(s).into_inner()).collect()
    }

    pub fn a_acceptance(&self) -> Vec<f64> {
        rates(&self.a_accepts, &self.a_proposals)
    }

    pub fn q_acceptance(&self) -> Vec<f64> {
        rates(&self.q_accepts, &self.q_proposals)
    }

    /// Acceptance over all proposals.
    pub fn acceptance_rate(&self) -> f64 {
        let acc: u64 = self.a_accepts.iter().chain(&self.q_accepts).sum();
        let total: u64 = self.a_proposals.iter().chain(&self.q_proposals).sum();
        if total == 0 {
            1.0
        } else {
            acc as f64 / total as f64
        }
    }
}

fn rates(acc: &[u64], total: &[u64]) -> Vec<f64> {
    acc.iter()
        .zip(total)
        .map(|(&a, &t)| if t == 0 { f64::NAN } else { a as f64 / t as f64 })
        .collect()
}

/// Runs the sampler from the state implied by the smoothed empirical `P`.
pub fn run_mhriva(c: &TransitionCounts, cfg: &RivaConfig, seed: u64) -> Result<RivaChain, RivaError> {
    let start = RivaState::from_transition(&smoothed_p(c, &vec![1.0; c.m()]), c.delta())?;
    run_mhriva_from(c, cfg, seed, start)
}

pub fn run_mhriva_from(
    c: &TransitionCounts,
    cfg: &RivaConfig,
    seed: u64,
    start: RivaState,
) -> Result<RivaChain, RivaError> {
    cfg.validate()?;
    let m = c.m();
    if start.dim() != m {
        return Err(RivaError::Config(format!("initial state has {} states, data has {m}", start.dim())));
    }
    let mut s = start;
    for p in 0..m {
        s.a[p] = s.a[p].min(cfg.a_max);
    }
    let target = Target {
        c,
        delta: c.delta(),
        a_max: cfg.a_max,
    };
    let mut current = target
        .log_density(&s)
        .ok_or_else(|| RivaError::InvalidState("initial state has zero likelihood".into()))?;
    let mut rng = SeedStream::new(seed).rng("mhriva");
    let q_rows = if m > 2 { m } else { 0 };
    let mut chain = RivaChain {
        samples: Vec::with_capacity((cfg.iters - cfg.burn_in) / cfg.thin),
        config: *cfg,
        seed,
        delta: c.delta(),
        a_proposals: vec![0; m],
        a_accepts: vec![0; m],
        q_proposals: vec![0; q_rows],
        q_accepts: vec![0; q_rows],
    };
    for t in 1..=cfg.iters {
        let out = sweep(&mut s, &mut current, &target, cfg, &mut rng);
        for (p, ok) in out.a_accepted.iter().enumerate() {
            chain.a_proposals[p] += 1;
            chain.a_accepts[p] += *ok as u64;
        }
        for (p, ok) in out.q_accepted.iter().enumerate() {
            chain.q_proposals[p] += 1;
            chain.q_accepts[p] += *ok as u64;
        }
        if t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            chain.samples.push(s.clone());
        }
    }
    Ok(chain)
}
