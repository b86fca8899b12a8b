use nalgebra::{DMatrix, DVector};

use super::{GibbsState, Hyperparameters, PosteriorError};
use crate::sim::TransitionCounts;

/// Closed interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FULL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn intersect(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

/// Quantities derived from a state that the conditionals share.
#[derive(Debug, Clone)]
pub(crate) struct Derived {
    /// `P̃ = Σ Λ_k φ_k ψ_kᵀ`
    pub recon: DMatrix<f64>,
    /// `L = Σ λ_k φ_k ψ_kᵀ`
    pub generator: DMatrix<f64>,
    pub lambda_l: DVector<f64>,
}

impl Derived {
    pub fn of(s: &GibbsState) -> Self {
        Self {
            recon: s.reconstruction(),
            generator: s.generator(),
            lambda_l: s.lambda_l(),
        }
    }
}

/// `Σ c(p,q) log P(p,q) − (ν/2)‖P − P̃‖²_F`
pub fn log_pseudo_likelihood(c: &TransitionCounts, s: &GibbsState, h: &Hyperparameters) -> Result<f64, PosteriorError> {
    let m = s.dim();
    let mut loglik = 0.0;
    for p in 0..m {
        for q in 0..m {
            let count = c.get(p, q);
            if count == 0 {
                continue;
            }
            let v = s.p[(p, q)];
            if !(v > 0.0) {
                return Err(PosteriorError::NonpositiveEntry { p, q, value: v });
            }
            loglik += count as f64 * v.ln();
        }
    }
    let penalty = (&s.p - s.reconstruction()).norm_squared();
    Ok(loglik - 0.5 * h.nu * penalty)
}

/// Truncated-normal full conditional of one eigenvalue `Λ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaConditional {
    pub mu: f64,
    pub sigma2: f64,
    pub interval: Interval,
}

/// Bounds on `λ_k` that keep `L_{−k}(i,j) + λ_k a(i,j) ≥ −eps` for all
/// `i ≠ j`, with `a(i,j) = φ_k(i) ψ_k(j)`.
fn rate_bounds(l_minus: &DMatrix<f64>, phi_k: &DVector<f64>, psi_k: &DVector<f64>, eps: f64) -> Interval {
    let m = phi_k.len();
    let mut out = Interval::FULL;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let a = phi_k[i] * psi_k[j];
            let bound = -(l_minus[(i, j)] + eps) / a;
            if a > 0.0 {
                out.lo = out.lo.max(bound);
            } else if a < 0.0 {
                out.hi = out.hi.min(bound);
            }
        }
    }
    out
}

pub(crate) fn lambda_conditional_with(
    k: usize,
    s: &GibbsState,
    h: &Hyperparameters,
    d: &Derived,
) -> Result<LambdaConditional, PosteriorError> {
    let m = s.dim();
    assert!(k >= 1 && k < m, "eigenvalue index {k} out of range 1..{m}");
    let phi_k = s.phi.column(k).into_owned();
    let psi_k = s.psi.column(k).into_owned();
    let lam = s.lambda[k];

    // Y_k = P − Σ_{j≠k} Λ_j φ_j ψ_jᵀ = P − P̃ + Λ_k φ_k ψ_kᵀ
    let outer = &phi_k * psi_k.transpose();
    let y = &s.p - &d.recon + &outer * lam;

    let sigma2 = 1.0 / (h.nu * phi_k.norm_squared() * psi_k.norm_squared());
    let mu = h.nu * sigma2 * phi_k.dot(&(&y * &psi_k));

    let ordering = Interval {
        lo: if k + 1 < m { s.lambda[k + 1] } else { 0.0 },
        hi: s.lambda[k - 1],
    };
    let l_minus = &d.generator - &outer * d.lambda_l[k];
    let rates = rate_bounds(&l_minus, &phi_k, &psi_k, h.eps_relax);
    let positivity = Interval {
        lo: (s.delta * rates.lo).exp(),
        hi: (s.delta * rates.hi).exp(),
    };
    let interval = ordering.intersect(positivity);
    if interval.is_empty() {
        return Err(PosteriorError::EmptyInterval {
            what: format!("Lambda[{k}]"),
        });
    }
    Ok(LambdaConditional { mu, sigma2, interval })
}

/// Full conditional of `Λ_k`, `k ≥ 1`: normal with the residual-fit mean and
/// variance, truncated to the ordering window and the rate-positivity set.
pub fn lambda_conditional(k: usize, s: &GibbsState, h: &Hyperparameters) -> Result<LambdaConditional, PosteriorError> {
    lambda_conditional_with(k, s, h, &Derived::of(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Phi,
    Psi,
}

/// Gaussian full conditional of one eigenvector in information form, with
/// per-component truncation intervals at the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct EigvecConditional {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    /// `precision · mean`
    pub shift: DVector<f64>,
    pub intervals: Vec<Interval>,
}

/// Precision and shift of the eigenvector conditional.
///
/// For `φ_k`: `Q = (1/σ_φ² + νΛ_k²‖ψ_k‖²) I + ΨΨᵀ/σ_c²` and
/// `h = νΛ_k Y_k ψ_k + ψ_k/σ_c²`; `ψ_k` mirrors this with `Φ`, `Y_kᵀφ_k`.
pub(crate) fn information_form(
    k: usize,
    which: Which,
    s: &GibbsState,
    h: &Hyperparameters,
    d: &Derived,
    gram: &DMatrix<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = s.dim();
    let lam = s.lambda[k];
    let phi_k = s.phi.column(k).into_owned();
    let psi_k = s.psi.column(k).into_owned();
    let resid = &s.p - &d.recon;
    let (prior_var, partner, own, y_partner) = match which {
        // Y_k ψ_k = (P − P̃)ψ_k + Λ_k φ_k ‖ψ_k‖²
        Which::Phi => (
            h.sigma_phi2,
            psi_k.clone(),
            phi_k.clone(),
            &resid * &psi_k + &phi_k * (lam * psi_k.norm_squared()),
        ),
        Which::Psi => (
            h.sigma_psi2,
            phi_k.clone(),
            psi_k.clone(),
            resid.transpose() * &phi_k + &psi_k * (lam * phi_k.norm_squared()),
        ),
    };
    let _ = own;
    let diag = 1.0 / prior_var + h.nu * lam * lam * partner.norm_squared();
    let precision = DMatrix::<f64>::identity(m, m) * diag + gram / h.sigma_c2;
    let shift = y_partner * (h.nu * lam) + partner / h.sigma_c2;
    (precision, shift)
}

/// Interval for one eigenvector component that keeps the affected rates of
/// the implied generator at least `-eps`.
///
/// `φ_k(p)` enters row `p`: `L(p,q) = L_{−k}(p,q) + λ_k φ_k(p) ψ_k(q)`, `q ≠ p`.
/// `ψ_k(q)` enters column `q`: `L(p,q) = L_{−k}(p,q) + λ_k φ_k(p) ψ_k(q)`, `p ≠ q`.
pub(crate) fn component_interval(
    k: usize,
    which: Which,
    j: usize,
    s: &GibbsState,
    h: &Hyperparameters,
    d: &Derived,
) -> Interval {
    let m = s.dim();
    let lam_l = d.lambda_l[k];
    if lam_l == 0.0 {
        return Interval::FULL;
    }
    let mut out = Interval::FULL;
    for other in (0..m).filter(|&o| o != j) {
        let (row, col) = match which {
            Which::Phi => (j, other),
            Which::Psi => (other, j),
        };
        let own_term = lam_l * s.phi[(row, k)] * s.psi[(col, k)];
        let l_minus = d.generator[(row, col)] - own_term;
        let b = match which {
            Which::Phi => lam_l * s.psi[(col, k)],
            Which::Psi => lam_l * s.phi[(row, k)],
        };
        let bound = -(l_minus + h.eps_relax) / b;
        if b > 0.0 {
            out.lo = out.lo.max(bound);
        } else if b < 0.0 {
            out.hi = out.hi.min(bound);
        }
    }
    out
}

pub(crate) fn gram(s: &GibbsState, which: Which) -> DMatrix<f64> {
    match which {
        Which::Phi => &s.psi * s.psi.transpose(),
        Which::Psi => &s.phi * s.phi.transpose(),
    }
}

/// Full conditional of `φ_k` (`k ≥ 1`) or `ψ_k` (`k ≥ 0`).
pub fn eigvec_conditional(
    k: usize,
    which: Which,
    s: &GibbsState,
    h: &Hyperparameters,
) -> Result<EigvecConditional, PosteriorError> {
    let m = s.dim();
    if k >= m || (which == Which::Phi && k == 0) {
        return Err(PosteriorError::Config(format!("eigenvector index {k} not sampled for {which:?}")));
    }
    let d = Derived::of(s);
    let g = gram(s, which);
    let (precision, shift) = information_form(k, which, s, h, &d, &g);
    let chol = precision.clone().cholesky().ok_or(PosteriorError::NotPositiveDefinite)?;
    let mean = chol.solve(&shift);
    let covariance = chol.inverse();
    let intervals = (0..m).map(|j| component_interval(k, which, j, s, h, &d)).collect();
    Ok(EigvecConditional {
        mean,
        precision,
        covariance,
        shift,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::RowUpdateMode;
    use crate::spectral::{eigendecompose, matrix_exp, GeneratorMatrix, MatrixKind};

    fn exact_state(l: &GeneratorMatrix, delta: f64) -> GibbsState {
        let p = matrix_exp(l, delta);
        let d = eigendecompose(l.entries(), delta, MatrixKind::Generator).unwrap();
        GibbsState {
            p: p.into_inner(),
            lambda: d.lambda_p,
            phi: d.phi,
            psi: d.psi,
            delta,
            iteration: 0,
        }
    }

    fn three_state() -> GeneratorMatrix {
        GeneratorMatrix::from_rows(&[&[-1.5, 1.0, 0.5], &[1.0, -1.8, 0.8], &[0.5, 0.8, -1.3]]).unwrap()
    }

    fn hyper(m: usize) -> Hyperparameters {
        Hyperparameters::paper_defaults(m)
    }

    #[test]
    fn penalty_free_likelihood() {
        let c = TransitionCounts::new(DMatrix::from_row_slice(2, 2, &[1, 2, 1, 0]), 1.0).unwrap();
        let half = 0.5f64;
        let s = GibbsState {
            p: DMatrix::from_element(2, 2, half),
            lambda: DVector::from_vec(vec![1.0, 0.2]),
            phi: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]),
            psi: DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 0.0]),
            delta: 1.0,
            iteration: 0,
        };
        // P̃ = 1·(1,1)ᵀ(0.5,0.5) = P, so the penalty vanishes for any ν
        let h = hyper(2);
        let ll = log_pseudo_likelihood(&c, &s, &h).unwrap();
        assert!((ll - 4.0 * half.ln()).abs() < 1e-12);
        assert!((ll + 2.7726).abs() < 1e-4);

        let mut off = s.clone();
        off.p = DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.5, 0.5]);
        let h0 = Hyperparameters { nu: 1e-300, ..h.clone() };
        let direct = 0.6f64.ln() + 2.0 * 0.4f64.ln() + 0.5f64.ln();
        assert!((log_pseudo_likelihood(&c, &off, &h0).unwrap() - direct).abs() < 1e-12);
        let penalised = log_pseudo_likelihood(&c, &off, &h).unwrap();
        assert!((penalised - (direct - 0.5 * 1e4 * 0.02)).abs() < 1e-9);

        off.p[(0, 1)] = 0.0;
        off.p[(0, 0)] = 1.0;
        assert!(matches!(
            log_pseudo_likelihood(&c, &off, &h),
            Err(PosteriorError::NonpositiveEntry { p: 0, q: 1, .. })
        ));
    }

    #[test]
    fn lambda_variance_closed_form() {
        let mut s = exact_state(&three_state(), 1.0);
        // make ‖φ_k‖² = 2 and ‖ψ_k‖² = 0.5
        let k = 1;
        let phi_k = s.phi.column(k).normalize() * 2f64.sqrt();
        let psi_k = s.psi.column(k).normalize() * 0.5f64.sqrt();
        s.phi.set_column(k, &phi_k);
        s.psi.set_column(k, &psi_k);
        let h = Hyperparameters { eps_relax: 10.0, ..hyper(3) };
        let c = lambda_conditional(k, &s, &h).unwrap();
        assert!((c.sigma2 - 1e-4).abs() < 1e-16);
    }

    #[test]
    fn lambda_mean_self_consistent_at_exact_state() {
        let s = exact_state(&three_state(), 1.0);
        let h = hyper(3);
        for k in 1..3 {
            let c = lambda_conditional(k, &s, &h).unwrap();
            assert!((c.mu - s.lambda[k]).abs() < 1e-10, "k={k}: {} vs {}", c.mu, s.lambda[k]);
            assert!(c.interval.contains(s.lambda[k]));
        }
    }

    #[test]
    fn two_state_ordering_window() {
        let l = GeneratorMatrix::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap();
        let s = exact_state(&l, 1.0);
        let h = hyper(2);
        let c = lambda_conditional(1, &s, &h).unwrap();
        // only positivity of L(0,1), L(1,0) can cut (0, 1); both rates are
        // positive for every λ_2 < 0, so the window is (0, 1)
        assert_eq!(c.interval.lo, 0.0);
        assert!((c.interval.hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn prior_dominated_eigvec_conditional() {
        let s = exact_state(&three_state(), 1.0);
        let h = Hyperparameters {
            nu: 1e-12,
            sigma_c2: 1e12,
            ..hyper(3)
        };
        let c = eigvec_conditional(1, Which::Phi, &s, &h).unwrap();
        let expected = DMatrix::<f64>::identity(3, 3) * h.sigma_phi2;
        assert!((c.covariance - expected).abs().max() < 1e-9);
        assert!(c.mean.norm() < 1e-9);
    }

    #[test]
    fn eigvec_mean_fixed_point_at_exact_state() {
        let s = exact_state(&three_state(), 1.0);
        let h = Hyperparameters { nu: 1e8, ..hyper(3) };
        for k in 1..3 {
            let c = eigvec_conditional(k, Which::Phi, &s, &h).unwrap();
            assert!((&c.mean - s.phi.column(k)).norm() < 1e-3);
        }
        for k in 0..3 {
            let c = eigvec_conditional(k, Which::Psi, &s, &h).unwrap();
            assert!((&c.mean - s.psi.column(k)).norm() < 1e-3);
        }
    }

    #[test]
    fn precision_is_positive_definite() {
        let s = exact_state(&three_state(), 0.5);
        for nu in [1e-6, 1.0, 1e4] {
            for sigma_c2 in [1e-5, 1.0] {
                let h = Hyperparameters {
                    nu,
                    sigma_c2,
                    row_update_mode: RowUpdateMode::MhCorrected,
                    ..hyper(3)
                };
                for k in 0..3 {
                    let c = eigvec_conditional(k, Which::Psi, &s, &h).unwrap();
                    assert!(c.precision.clone().cholesky().is_some());
                    assert_eq!(c.precision, c.precision.transpose());
                }
            }
        }
    }

    #[test]
    fn current_state_lies_in_component_intervals() {
        let s = exact_state(&three_state(), 1.0);
        let h = hyper(3);
        for k in 1..3 {
            let c = eigvec_conditional(k, Which::Phi, &s, &h).unwrap();
            for (j, iv) in c.intervals.iter().enumerate() {
                assert!(iv.contains(s.phi[(j, k)]), "phi {k},{j}: {iv:?}");
            }
        }
        let c = eigvec_conditional(0, Which::Psi, &s, &h).unwrap();
        assert!(c.intervals.iter().all(|iv| *iv == Interval::FULL));
    }

    #[test]
    fn pinned_phi_is_not_sampled() {
        let s = exact_state(&three_state(), 1.0);
        assert!(eigvec_conditional(0, Which::Phi, &s, &hyper(3)).is_err());
    }
}
