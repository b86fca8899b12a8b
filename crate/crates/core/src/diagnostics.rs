//! Effective sample size, Frobenius scoring, posterior summaries and
//! Monte Carlo checks of the large-sample theory.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;
use thiserror::Error;

use crate::posterior::{PosteriorChain, SamplerStats};
use crate::riva::RivaChain;
use crate::rng::SeedStream;
use crate::sim::{empirical_p, simulate_observed, transition_counts, InitialState, TransitionCounts};
use crate::spectral::{
    align_to_reference, eigendecompose, matrix_exp, real_eigen, resolvent, GeneratorMatrix, MatrixKind,
    SpectralDecomposition, SpectralError,
};

pub const MIN_SERIES_LEN: usize = 10;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("series of length {0} is too short (need {MIN_SERIES_LEN})")]
    TooShort(usize),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("no samples")]
    Empty,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Sample autocorrelations at lags `0..n` via zero-padded FFT.
fn autocorrelation(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    buf.iter().take(n).map(|v| v.re / c0).collect()
}

/// Effective sample size with Geyer's initial monotone positive sequence
/// estimator, capped at `n`. A constant series has ESS `n`.
pub fn ess(series: &[f64]) -> Result<f64, DiagnosticsError> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(DiagnosticsError::TooShort(n));
    }
    let first = series[0];
    if series.iter().all(|v| *v == first) {
        return Ok(n as f64);
    }
    let rho = autocorrelation(series);
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    for pair in rho.chunks_exact(2) {
        let gamma = pair[0] + pair[1];
        if gamma <= 0.0 {
            break;
        }
        let gamma = gamma.min(prev);
        tau += 2.0 * gamma;
        prev = gamma;
    }
    Ok((n as f64 / tau).min(n as f64))
}

/// Entrywise ESS over a sequence of matrices.
pub fn ess_matrix(samples: &[DMatrix<f64>]) -> Result<DMatrix<f64>, DiagnosticsError> {
    let first = samples.first().ok_or(DiagnosticsError::Empty)?;
    let (r, c) = first.shape();
    let mut out = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let series: Vec<f64> = samples.iter().map(|s| s[(i, j)]).collect();
            out[(i, j)] = ess(&series)?;
        }
    }
    Ok(out)
}

/// Entrywise-mean ESS scaled to 100 samples.
pub fn ess_per_100(samples: &[DMatrix<f64>]) -> Result<f64, DiagnosticsError> {
    let table = ess_matrix(samples)?;
    Ok(table.mean() * 100.0 / samples.len() as f64)
}

pub fn frobenius_error(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64, DiagnosticsError> {
    if estimate.shape() != truth.shape() {
        return Err(DiagnosticsError::ShapeMismatch(estimate.shape(), truth.shape()));
    }
    Ok((estimate - truth).norm())
}

/// Share of each row's mass within `half_width` columns of the diagonal.
pub fn band_mass(p: &DMatrix<f64>, half_width: usize) -> Vec<f64> {
    p.row_iter()
        .enumerate()
        .map(|(i, row)| {
            let total: f64 = row.iter().sum();
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(p.ncols() - 1);
            let inside: f64 = (lo..=hi).map(|j| row[j]).sum();
            inside / total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixMoments {
    pub mean: DMatrix<f64>,
    pub sd: DMatrix<f64>,
}

impl MatrixMoments {
    pub fn of(samples: &[DMatrix<f64>]) -> Result<Self, DiagnosticsError> {
        let first = samples.first().ok_or(DiagnosticsError::Empty)?;
        let n = samples.len() as f64;
        let mut mean = DMatrix::zeros(first.nrows(), first.ncols());
        for s in samples {
            mean += s;
        }
        mean /= n;
        let mut var = DMatrix::zeros(first.nrows(), first.ncols());
        for s in samples {
            var += (s - &mean).map(|v| v * v);
        }
        let denom = (n - 1.0).max(1.0);
        Ok(Self {
            mean,
            sd: var.map(|v| (v / denom).sqrt()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "sampler", rename_all = "lowercase")]
pub enum AcceptanceEcho {
    Bigmac(SamplerStats),
    Mhriva {
        a_acceptance: Vec<f64>,
        q_acceptance: Vec<f64>,
        overall: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrobeniusErrors {
    pub l: f64,
    pub p: Option<f64>,
}

/// Posterior summary of a completed chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub m: usize,
    pub n_samples: usize,
    pub l: MatrixMoments,
    /// Absent for the baseline, which has no free `P`.
    pub p: Option<MatrixMoments>,
    pub reconstruction: Option<MatrixMoments>,
    pub ess_l: DMatrix<f64>,
    pub ess_per_100: f64,
    pub errors: Option<FrobeniusErrors>,
    pub acceptance: AcceptanceEcho,
}

fn errors_against(
    l: &MatrixMoments,
    p: Option<&MatrixMoments>,
    truth: Option<&GeneratorMatrix>,
    delta: f64,
) -> Result<Option<FrobeniusErrors>, DiagnosticsError> {
    let Some(truth) = truth else { return Ok(None) };
    let l_err = frobenius_error(&l.mean, truth.entries())?;
    let p_err = match p {
        Some(p) => Some(frobenius_error(&p.mean, matrix_exp(truth, delta).entries())?),
        None => None,
    };
    Ok(Some(FrobeniusErrors { l: l_err, p: p_err }))
}

pub fn summarize_gibbs(chain: &PosteriorChain, truth: Option<&GeneratorMatrix>) -> Result<SummaryReport, DiagnosticsError> {
    let gens = chain.generators();
    let l = MatrixMoments::of(&gens)?;
    let p = MatrixMoments::of(&chain.transition_samples())?;
    let recon = MatrixMoments::of(&chain.reconstructions())?;
    let ess_l = ess_matrix(&gens)?;
    let ess_100 = ess_l.mean() * 100.0 / gens.len() as f64;
    Ok(SummaryReport {
        m: l.mean.nrows(),
        n_samples: gens.len(),
        errors: errors_against(&l, Some(&p), truth, chain.delta)?,
        l,
        p: Some(p),
        reconstruction: Some(recon),
        ess_l,
        ess_per_100: ess_100,
        acceptance: AcceptanceEcho::Bigmac(chain.stats),
    })
}

pub fn summarize_riva(chain: &RivaChain, truth: Option<&GeneratorMatrix>) -> Result<SummaryReport, DiagnosticsError> {
    let gens = chain.generators();
    let l = MatrixMoments::of(&gens)?;
    let ess_l = ess_matrix(&gens)?;
    let ess_100 = ess_l.mean() * 100.0 / gens.len() as f64;
    Ok(SummaryReport {
        m: l.mean.nrows(),
        n_samples: gens.len(),
        errors: errors_against(&l, None, truth, chain.delta)?,
        l,
        p: None,
        reconstruction: None,
        ess_l,
        ess_per_100: ess_100,
        acceptance: AcceptanceEcho::Mhriva {
            a_acceptance: chain.a_acceptance(),
            q_acceptance: chain.q_acceptance(),
            overall: chain.acceptance_rate(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvmRow {
    pub row: usize,
    /// Largest `|chain mean − Dirichlet mean|` in Monte Carlo standard errors.
    pub mean_z: f64,
    /// `‖Ĉ − C‖_F / ‖C‖_F` for the row covariance.
    pub cov_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvmReport {
    pub rows: Vec<BvmRow>,
    pub max_mean_z: f64,
    pub max_cov_rel_dev: f64,
    /// Set when `n < 10 m²`.
    pub asymptotics_unreliable: bool,
}

/// Compares the chain's row moments of `P` with the conjugate
/// `Dir(α + c_p)` moments.
pub fn bvm_check(chain: &PosteriorChain, c: &TransitionCounts) -> Result<BvmReport, DiagnosticsError> {
    if chain.samples.len() < MIN_SERIES_LEN {
        return Err(DiagnosticsError::TooShort(chain.samples.len()));
    }
    let m = c.m();
    let ns = chain.samples.len() as f64;
    let mut rows = Vec::with_capacity(m);
    for p in 0..m {
        let conc: Vec<f64> = (0..m).map(|q| chain.hyper.alpha[q] + c.get(p, q) as f64).collect();
        let a0: f64 = conc.iter().sum();
        let mean = DVector::from_iterator(m, conc.iter().map(|a| a / a0));
        let cov = DMatrix::from_fn(m, m, |i, j| {
            let delta = if i == j { mean[i] } else { 0.0 };
            (delta - mean[i] * mean[j]) / (a0 + 1.0)
        });
        let draws: Vec<DVector<f64>> = chain.samples.iter().map(|s| s.p.row(p).transpose()).collect();
        let chain_mean = draws.iter().fold(DVector::zeros(m), |acc, d| acc + d) / ns;
        let chain_cov = draws.iter().fold(DMatrix::zeros(m, m), |acc, d| {
            let e = d - &chain_mean;
            acc + &e * e.transpose()
        }) / (ns - 1.0);
        let mut mean_z: f64 = 0.0;
        for q in 0..m {
            let series: Vec<f64> = draws.iter().map(|d| d[q]).collect();
            let se = (chain_cov[(q, q)] / ess(&series)?).sqrt();
            if se > 0.0 {
                mean_z = mean_z.max((chain_mean[q] - mean[q]).abs() / se);
            }
        }
        rows.push(BvmRow {
            row: p,
            mean_z,
            cov_rel_dev: (&chain_cov - &cov).norm() / cov.norm(),
        });
    }
    Ok(BvmReport {
        max_mean_z: rows.iter().map(|r| r.mean_z).fold(0.0, f64::max),
        max_cov_rel_dev: rows.iter().map(|r| r.cov_rel_dev).fold(0.0, f64::max),
        asymptotics_unreliable: (c.total() as usize) < 10 * m * m,
        rows,
    })
}

/// Deviation of an empirical spectrum from a reference, with the
/// first-order prediction for the eigenvector shift.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDeviation {
    pub d_lambda_l: DVector<f64>,
    /// `φ̂_k − φ_k⁰` in the gauge `ψ_k⁰ᵀφ̂_k = 1`.
    pub d_phi: DMatrix<f64>,
    /// `R_k (P̂ − P⁰) φ_k⁰`.
    pub predicted_d_phi: DMatrix<f64>,
}

pub fn spectral_deviation(d0: &SpectralDecomposition, p_hat: &DMatrix<f64>) -> Result<SpectralDeviation, DiagnosticsError> {
    let m = d0.dim();
    if p_hat.shape() != (m, m) {
        return Err(DiagnosticsError::ShapeMismatch(p_hat.shape(), (m, m)));
    }
    let p0 = crate::spectral::reconstruct(d0, crate::spectral::Scale::AsP);
    let q = p_hat - &p0;
    let aligned = align_to_reference(&real_eigen(p_hat)?, d0);
    let mut d_lambda_l = DVector::zeros(m);
    let mut predicted = DMatrix::zeros(m, m);
    for k in 0..m {
        let v = aligned.values[k];
        if !(v > 0.0) {
            return Err(SpectralError::NonPositiveEigenvalue { index: k, value: v }.into());
        }
        d_lambda_l[k] = if k == 0 { 0.0 } else { v.ln() / d0.delta - d0.lambda_l[k] };
        predicted.set_column(k, &(resolvent(d0, k) * &q * d0.phi.column(k)));
    }
    Ok(SpectralDeviation {
        d_lambda_l,
        d_phi: &aligned.right - &d0.phi,
        predicted_d_phi: predicted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Cell {
    pub n: usize,
    pub replicates: usize,
    pub failures: usize,
    /// Mean and spread of `√n (λ̂_k − λ_k⁰)` for the tracked `k`.
    pub scaled_mean: f64,
    pub scaled_spread: f64,
    /// Median cosine between observed and predicted eigenvector shifts.
    pub median_cosine: f64,
    /// Mean `‖φ̂_k − φ_k⁰‖` across replicates.
    pub mean_phi_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub k: usize,
    pub cells: Vec<Theorem2Cell>,
    /// Least-squares slope of log spread on log n.
    pub slope: f64,
    pub median_cosine: f64,
    /// `|mean| < 3 spread / √replicates` at the largest n.
    pub mean_zero: bool,
}

impl Theorem2Report {
    pub fn flat(&self, tol: f64) -> bool {
        self.slope.abs() <= tol
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        f64::NAN
    } else {
        a.dot(b) / denom
    }
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Replicated plug-in spectra at each sample size, tracking eigenpair `k`
/// (0-based, `k ≥ 1`).
pub fn theorem2_check(
    l0: &GeneratorMatrix,
    delta: f64,
    n_list: &[usize],
    replicates: usize,
    k: usize,
    seed: u64,
) -> Result<Theorem2Report, DiagnosticsError> {
    let d0 = eigendecompose(l0.entries(), delta, MatrixKind::Generator)?;
    assert!(k >= 1 && k < d0.dim(), "tracked eigenpair {k} out of range");
    let streams = SeedStream::new(seed);
    let mut cells = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cell_streams = streams.child(&format!("n={n}"));
        let results: Vec<Option<(f64, f64, f64)>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = cell_streams.rng(&format!("rep={r}"));
                let path = simulate_observed(l0, &InitialState::Stationary, n, delta, &mut rng).ok()?;
                let p_hat = empirical_p(&transition_counts(&path)).matrix.into_inner();
                let dev = spectral_deviation(&d0, &p_hat).ok()?;
                let scaled = (n as f64).sqrt() * dev.d_lambda_l[k];
                let obs = dev.d_phi.column(k).into_owned();
                let cos = cosine(&obs, &dev.predicted_d_phi.column(k).into_owned());
                Some((scaled, cos, obs.norm()))
            })
            .collect();
        let ok: Vec<(f64, f64, f64)> = results.iter().flatten().copied().collect();
        let count = ok.len() as f64;
        let mean = ok.iter().map(|r| r.0).sum::<f64>() / count;
        let spread = (ok.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt();
        let mut cosines: Vec<f64> = ok.iter().map(|r| r.1).filter(|c| c.is_finite()).collect();
        cells.push(Theorem2Cell {
            n,
            replicates,
            failures: replicates - ok.len(),
            scaled_mean: mean,
            scaled_spread: spread,
            median_cosine: median(&mut cosines),
            mean_phi_deviation: ok.iter().map(|r| r.2).sum::<f64>() / count,
        });
    }
    let x: Vec<f64> = cells.iter().map(|c| (c.n as f64).ln()).collect();
    let y: Vec<f64> = cells.iter().map(|c| c.scaled_spread.ln()).collect();
    let mut cos: Vec<f64> = cells.iter().map(|c| c.median_cosine).collect();
    let last = cells.last().expect("nonempty n_list");
    let usable = (last.replicates - last.failures) as f64;
    let mean_zero = last.scaled_mean.abs() < 3.0 * last.scaled_spread / usable.sqrt();
    Ok(Theorem2Report {
        k,
        slope: if cells.len() > 1 { ols_slope(&x, &y) } else { 0.0 },
        median_cosine: median(&mut cos),
        mean_zero,
        cells,
    })
}
