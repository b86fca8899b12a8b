//! Pseudo-posterior inference for `P` and the spectral decomposition of `L`.
//!
//! The target couples the discrete-chain likelihood of `P` with a Frobenius
//! penalty `−(ν/2)‖P − Σ_k Λ_k φ_k ψ_kᵀ‖²_F`, Dirichlet row priors, a uniform
//! prior on the ordered eigenvalues `1 = Λ_1 > Λ_2 ≥ … ≥ Λ_m > 0`, Gaussian
//! scale priors on the eigenvectors, and a soft biorthogonality prior. Every
//! spectral full conditional is a (truncated) normal; truncation keeps the
//! implied generator's off-diagonal rates nonnegative up to `eps_relax`.
//!
//! Eigen-indices are 0-based: `k = 0` is the pinned stationary component.

mod conditionals;
mod gibbs;
pub mod truncnorm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{reconstruct_with, SpectralError, SIGN_TOL};

pub use conditionals::{
    eigvec_conditional, lambda_conditional, log_pseudo_likelihood, EigvecConditional, Interval, LambdaConditional, Which,
};
pub use gibbs::{
    initialize, run_gibbs, run_gibbs_from, sample_eigvec, sample_lambda, sample_row, GibbsConfig, Initialization,
    RowUpdate,
};
pub use truncnorm::sample_truncated_normal;

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("invalid truncation interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("empty truncation interval for {what}")]
    EmptyInterval { what: String },
    #[error("P({p},{q}) = {value} is not positive but has observed transitions")]
    NonpositiveEntry { p: usize, q: usize, value: f64 },
    #[error("no valid initial state; tried: {}", trace.join(" -> "))]
    InitializationFailure { trace: Vec<String> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precision matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowUpdateMode {
    /// Draw each row of `P` from `Dir(α + c_p)`.
    DirectDirichlet,
    /// Use `Dir(α + c_p)` as an independence proposal and correct for the
    /// spectral penalty with a Metropolis–Hastings step.
    MhCorrected,
}

impl std::str::FromStr for RowUpdateMode {
    type Err = PosteriorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DIRECT_DIRICHLET" => Ok(Self::DirectDirichlet),
            "MH_CORRECTED" => Ok(Self::MhCorrected),
            other => Err(PosteriorError::Config(format!("unknown row_update_mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Penalty weight on `‖P − P̃‖²_F`.
    pub nu: f64,
    /// Dirichlet concentration for every row of `P`.
    pub alpha: Vec<f64>,
    pub sigma_phi2: f64,
    pub sigma_psi2: f64,
    /// Biorthogonality shrinkage variance.
    pub sigma_c2: f64,
    /// Off-diagonal rates may dip to `-eps_relax`.
    pub eps_relax: f64,
    pub row_update_mode: RowUpdateMode,
}

impl Hyperparameters {
    /// ν = 10⁴, σ_φ² = σ_ψ² = 10⁻¹, σ_c² = 10⁻⁵, α = 1.
    pub fn paper_defaults(m: usize) -> Self {
        Self {
            nu: 1e4,
            alpha: vec![1.0; m],
            sigma_phi2: 1e-1,
            sigma_psi2: 1e-1,
            sigma_c2: 1e-5,
            eps_relax: 1e-6,
            row_update_mode: RowUpdateMode::DirectDirichlet,
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), PosteriorError> {
        let fail = |msg: String| Err(PosteriorError::Config(msg));
        if !(self.nu > 0.0) {
            return fail(format!("nu must be positive, got {}", self.nu));
        }
        if self.alpha.len() != m {
            return fail(format!("alpha has length {} for {m} states", self.alpha.len()));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0)) {
            return fail("alpha entries must be positive".into());
        }
        for (name, v) in [
            ("sigma_phi2", self.sigma_phi2),
            ("sigma_psi2", self.sigma_psi2),
            ("sigma_c2", self.sigma_c2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.eps_relax >= 0.0) {
            return fail("eps_relax must be nonnegative".into());
        }
        Ok(())
    }
}

/// One state of the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub p: DMatrix<f64>,
    /// Transition-matrix eigenvalues `Λ_k`, `lambda[0] == 1`.
    pub lambda: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub delta: f64,
    pub iteration: usize,
}

impl GibbsState {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `λ_k = Δ⁻¹ log Λ_k`.
    pub fn lambda_l(&self) -> DVector<f64> {
        let mut l = self.lambda.map(|v| v.ln() / self.delta);
        l[0] = 0.0;
        l
    }

    /// Spectral reconstruction `P̃ = Σ Λ_k φ_k ψ_kᵀ`.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        reconstruct_with(&self.phi, &self.lambda, &self.psi)
    }

    /// Implied generator `L = Σ λ_k φ_k ψ_kᵀ`.
    pub fn generator(&self) -> DMatrix<f64> {
        reconstruct_with(&self.phi, &self.lambda_l(), &self.psi)
    }

    /// `ψ_1` normalised to sum to one, for reporting only.
    pub fn invariant_distribution(&self) -> DVector<f64> {
        let psi1 = self.psi.column(0).into_owned();
        let total = psi1.sum();
        psi1 / total
    }

    /// Checks the stored-state invariants: row-stochastic `P`, ordered
    /// eigenvalues in `(0, 1)`, pinned leading pair and off-diagonal rates of
    /// the implied generator at least `-eps_relax`.
    pub fn check_invariants(&self, eps_relax: f64) -> Result<(), String> {
        let m = self.dim();
        for r in 0..m {
            let sum: f64 = self.p.row(r).sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(format!("row {r} of P sums to {sum}"));
            }
            if self.p.row(r).iter().any(|v| *v < 0.0) {
                return Err(format!("row {r} of P has a negative entry"));
            }
        }
        if self.lambda[0] != 1.0 || self.phi.column(0).iter().any(|v| *v != 1.0) {
            return Err("leading eigenpair is not pinned".into());
        }
        for k in 1..m {
            let v = self.lambda[k];
            if !(v > 0.0 && v < self.lambda[k - 1]) {
                return Err(format!("eigenvalue ordering broken at {k}: {v}"));
            }
        }
        let l = self.generator();
        for i in 0..m {
            for j in 0..m {
                if i != j && l[(i, j)] < -(eps_relax + SIGN_TOL) {
                    return Err(format!("L({i},{j}) = {} below -eps_relax", l[(i, j)]));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SamplerStats {
    pub row_proposals: u64,
    pub row_accepts: u64,
    pub lambda_updates: u64,
    pub lambda_skips: u64,
    pub component_updates: u64,
    pub component_skips: u64,
}

impl SamplerStats {
    pub fn row_acceptance_rate(&self) -> f64 {
        if self.row_proposals == 0 {
            return 1.0;
        }
        self.row_accepts as f64 / self.row_proposals as f64
    }
}

/// Retained samples plus everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub samples: Vec<GibbsState>,
    pub hyper: Hyperparameters,
    pub config: GibbsConfig,
    pub seed: u64,
    pub delta: f64,
    pub stats: SamplerStats,
    /// Steps taken to find the initial state.
    pub init_trace: Vec<String>,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn generators(&self) -> Vec<DMatrix<f64>> {
        self.samples.iter().map(GibbsState::generator).collect()
    }

    pub fn transition_samples(&self) -> Vec<DMatrix<f64>> {
        self.samples.iter().map(|s| s.p.clone()).collect()
    }

    pub fn reconstructions(&self) -> Vec<DMatrix<f64>> {
        self.samples.iter().map(GibbsState::reconstruction).collect()
    }
}
