//! Exact CTMC path simulation, discretisation and transition counting.
//!
//! States are 0-based in memory; the CSV formats in [`crate::io`] write them
//! 1-based.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::spectral::{eigendecompose, GeneratorMatrix, MatrixKind, SpectralError, TransitionMatrix};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state space needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("initial state {state} out of range for {m} states")]
    StateOutOfRange { state: usize, m: usize },
    #[error("initial distribution is invalid")]
    BadDistribution,
    #[error("need at least one observation interval")]
    NoObservations,
    #[error("sampling interval must be positive, got {0}")]
    BadDelta(f64),
    #[error("path needs at least two observations")]
    PathTooShort,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// States read at `t = iΔ`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedPath {
    states: Vec<usize>,
    m: usize,
    delta_bits: u64,
}

impl ObservedPath {
    pub fn new(states: Vec<usize>, m: usize, delta: f64) -> Result<Self, SimError> {
        if states.len() < 2 {
            return Err(SimError::PathTooShort);
        }
        if !(delta > 0.0) {
            return Err(SimError::BadDelta(delta));
        }
        if let Some(&state) = states.iter().find(|&&s| s >= m) {
            return Err(SimError::StateOutOfRange { state, m });
        }
        Ok(Self {
            states,
            m,
            delta_bits: delta.to_bits(),
        })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        f64::from_bits(self.delta_bits)
    }

    /// Number of observed transitions.
    pub fn n_transitions(&self) -> usize {
        self.states.len() - 1
    }
}

/// Jump chain with holding times; the last holding time is cut at the
/// simulation horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    pub jump_states: Vec<usize>,
    pub holding_times: Vec<f64>,
    pub total_time: f64,
}

/// One-step transition counts; row `p` is the vector `c_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    counts: DMatrix<u64>,
    delta_bits: u64,
}

impl TransitionCounts {
    pub fn new(counts: DMatrix<u64>, delta: f64) -> Result<Self, SimError> {
        if counts.nrows() != counts.ncols() || counts.nrows() < 2 {
            return Err(SimError::TooFewStates(counts.nrows()));
        }
        if !(delta > 0.0) {
            return Err(SimError::BadDelta(delta));
        }
        Ok(Self {
            counts,
            delta_bits: delta.to_bits(),
        })
    }

    pub fn m(&self) -> usize {
        self.counts.nrows()
    }

    pub fn delta(&self) -> f64 {
        f64::from_bits(self.delta_bits)
    }

    pub fn get(&self, p: usize, q: usize) -> u64 {
        self.counts[(p, q)]
    }

    pub fn matrix(&self) -> &DMatrix<u64> {
        &self.counts
    }

    pub fn row_total(&self, p: usize) -> u64 {
        self.counts.row(p).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_f64(&self) -> DMatrix<f64> {
        self.counts.map(|c| c as f64)
    }
}

/// Random symmetric, loosely banded generator:
/// `L(p,q) = L(q,p) ~ (2/|p−q|²)·U(0,1)`.
pub fn sample_random_generator<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<GeneratorMatrix, SimError> {
    if m < 2 {
        return Err(SimError::TooFewStates(m));
    }
    let mut l = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in (p + 1)..m {
            let d = (q - p) as f64;
            // 1 - U[0,1) lies in (0, 1]
            let u: f64 = 1.0 - rng.random::<f64>();
            let rate = 2.0 / (d * d) * u;
            l[(p, q)] = rate;
            l[(q, p)] = rate;
        }
    }
    for p in 0..m {
        let exit: f64 = (0..m).filter(|&q| q != p).map(|q| l[(p, q)]).sum();
        l[(p, p)] = -exit;
    }
    Ok(GeneratorMatrix::new(l)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    State(usize),
    Distribution(Vec<f64>),
    /// Invariant distribution of the generator, uniform if the generator has
    /// no usable real decomposition.
    Stationary,
}

/// Stationary distribution `ψ_1`, or uniform when the decomposition fails.
pub fn stationary_or_uniform(l: &GeneratorMatrix) -> Vec<f64> {
    let m = l.dim();
    match eigendecompose(l.entries(), 1.0, MatrixKind::Generator) {
        Ok(d) => {
            let pi = d.invariant_distribution();
            if pi.iter().all(|v| *v >= -1e-12) {
                pi.iter().map(|v| v.max(0.0)).collect()
            } else {
                vec![1.0 / m as f64; m]
            }
        }
        Err(_) => vec![1.0 / m as f64; m],
    }
}

fn draw_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn initial_state<R: Rng + ?Sized>(l: &GeneratorMatrix, x0: &InitialState, rng: &mut R) -> Result<usize, SimError> {
    let m = l.dim();
    match x0 {
        InitialState::State(s) if *s < m => Ok(*s),
        InitialState::State(s) => Err(SimError::StateOutOfRange { state: *s, m }),
        InitialState::Distribution(w) => {
            if w.len() != m || w.iter().any(|v| !(*v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return Err(SimError::BadDistribution);
            }
            Ok(draw_categorical(w, rng))
        }
        InitialState::Stationary => Ok(draw_categorical(&stationary_or_uniform(l), rng)),
    }
}

/// Simulates the jump process up to `n_obs·Δ` and reads it at every `iΔ`.
///
/// A state read at a jump instant takes the post-jump value.
pub fn simulate_ctmc<R: Rng + ?Sized>(
    l: &GeneratorMatrix,
    x0: &InitialState,
    n_obs: usize,
    delta: f64,
    rng: &mut R,
) -> Result<(ContinuousPath, ObservedPath), SimError> {
    simulate_impl(l, x0, n_obs, delta, rng, true)
}

/// Same draws as [`simulate_ctmc`] without keeping the continuous path.
pub fn simulate_observed<R: Rng + ?Sized>(
    l: &GeneratorMatrix,
    x0: &InitialState,
    n_obs: usize,
    delta: f64,
    rng: &mut R,
) -> Result<ObservedPath, SimError> {
    simulate_impl(l, x0, n_obs, delta, rng, false).map(|(_, obs)| obs)
}

fn simulate_impl<R: Rng + ?Sized>(
    l: &GeneratorMatrix,
    x0: &InitialState,
    n_obs: usize,
    delta: f64,
    rng: &mut R,
    keep_path: bool,
) -> Result<(ContinuousPath, ObservedPath), SimError> {
    let m = l.dim();
    if m < 2 {
        return Err(SimError::TooFewStates(m));
    }
    if n_obs == 0 {
        return Err(SimError::NoObservations);
    }
    if !(delta > 0.0) {
        return Err(SimError::BadDelta(delta));
    }
    let horizon = n_obs as f64 * delta;
    let mut state = initial_state(l, x0, rng)?;

    let mut observed = Vec::with_capacity(n_obs + 1);
    let mut jump_states = Vec::new();
    let mut holding_times = Vec::new();
    let mut t = 0.0;
    let mut next_obs = 0usize;
    let mut weights = vec![0.0; m];

    loop {
        let rate = l.exit_rate(state);
        let hold = if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        };
        let leave = t + hold;
        // observations strictly before the jump see the current state; an
        // observation exactly at the jump sees the next one
        while next_obs <= n_obs && (next_obs as f64) * delta < leave {
            observed.push(state);
            next_obs += 1;
        }
        if keep_path {
            jump_states.push(state);
            holding_times.push(leave.min(horizon) - t);
        }
        if next_obs > n_obs {
            break;
        }
        for (q, w) in weights.iter_mut().enumerate() {
            *w = if q == state { 0.0 } else { l.entries()[(state, q)].max(0.0) };
        }
        state = draw_categorical(&weights, rng);
        t = leave;
    }

    let path = ContinuousPath {
        jump_states,
        holding_times,
        total_time: if keep_path { horizon } else { 0.0 },
    };
    Ok((path, ObservedPath::new(observed, m, delta)?))
}

pub fn transition_counts(x: &ObservedPath) -> TransitionCounts {
    let m = x.m();
    let mut counts = DMatrix::<u64>::zeros(m, m);
    for w in x.states().windows(2) {
        counts[(w[0], w[1])] += 1;
    }
    TransitionCounts {
        counts,
        delta_bits: x.delta_bits,
    }
}

/// Plug-in estimator of the transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalP {
    pub matrix: TransitionMatrix,
    /// Rows with no observed departures, filled uniformly.
    pub unvisited_rows: Vec<usize>,
}

pub fn empirical_p(c: &TransitionCounts) -> EmpiricalP {
    let m = c.m();
    let mut p = DMatrix::zeros(m, m);
    let mut unvisited_rows = Vec::new();
    for row in 0..m {
        let total = c.row_total(row);
        if total == 0 {
            unvisited_rows.push(row);
            p.row_mut(row).fill(1.0 / m as f64);
        } else {
            for q in 0..m {
                p[(row, q)] = c.get(row, q) as f64 / total as f64;
            }
        }
    }
    EmpiricalP {
        matrix: TransitionMatrix::new(p, c.delta()).expect("normalised rows"),
        unvisited_rows,
    }
}

/// Row-normalised `counts + α`.
pub fn smoothed_p(c: &TransitionCounts, alpha: &[f64]) -> DMatrix<f64> {
    let m = c.m();
    let mut p = c.as_f64();
    for row in 0..m {
        for q in 0..m {
            p[(row, q)] += alpha[q];
        }
        let total: f64 = p.row(row).sum();
        p.row_mut(row).scale_mut(1.0 / total);
    }
    p
}

/// Fraction of time spent in each state along a continuous path.
pub fn occupation_fractions(path: &ContinuousPath, m: usize) -> DVector<f64> {
    let mut occ = DVector::zeros(m);
    for (s, h) in path.jump_states.iter().zip(&path.holding_times) {
        occ[*s] += h;
    }
    occ / path.total_time
}
