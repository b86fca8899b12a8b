//! Dense linear algebra for generators and transition matrices.
//!
//! Everything here works on real spectra only. A decomposition stores the
//! transition-matrix eigenvalues `Λ_k`, the generator eigenvalues
//! `λ_k = Δ⁻¹ log Λ_k`, and a biorthogonal pair of eigenvector matrices
//! (`Φ` right, `Ψ` left, `ΨᵀΦ = I`).
//!
//! Gauge: `φ_1` is the all-ones vector, every other `φ_k` has unit Euclidean
//! norm with its largest-magnitude entry positive, and `Ψ = Φ⁻ᵀ`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row sums of a generator / transition matrix must match within this.
pub const ROW_SUM_TOL: f64 = 1e-10;

/// Minimum accepted gap between consecutive eigenvalues.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Eigenvalues with `|λ|` below this count as zero in the rank check.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// Slack on sign constraints that absorbs floating point noise in
/// otherwise exact generators.
pub const SIGN_TOL: f64 = 1e-10;

const IMAG_TOL: f64 = 1e-10;
const LEADING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("complex conjugate eigenvalue pair {re} ± {im}i")]
    ComplexSpectrum { re: f64, im: f64 },
    #[error("eigenvalue gap {gap:e} below degeneracy threshold")]
    DegenerateSpectrum { gap: f64 },
    #[error("eigenvalue {value} at position {index} has no real logarithm")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("leading eigenvalue {found} does not match {expected}")]
    LeadingEigenvalue { expected: f64, found: f64 },
    #[error("matrix is not square or dimensions disagree ({rows}x{cols})")]
    Shape { rows: usize, cols: usize },
    #[error("matrix logarithm is not a valid generator: {0}")]
    NotEmbeddable(ValidationReport),
    #[error("invalid matrix: {0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    RowSum,
    NegativeOffDiagonal,
    PositiveDiagonal,
    EntryOutOfRange,
    NonPositiveEigenvalue,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: usize,
    pub col: usize,
    pub magnitude: f64,
}

/// Outcome of a structural check; valid exactly when no violations were found.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, row: usize, col: usize, magnitude: f64) {
        self.violations.push(Violation {
            kind,
            row,
            col,
            magnitude,
        });
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(4) {
            write!(f, "; {:?} at ({}, {}) = {:e}", v.kind, v.row, v.col, v.magnitude)?;
        }
        Ok(())
    }
}

/// Checks the generator invariants: zero row sums, off-diagonals at least
/// `-eps_relax`, non-positive diagonal.
pub fn validate_generator(m: &DMatrix<f64>, eps_relax: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    for p in 0..m.nrows() {
        let mut sum = 0.0;
        for q in 0..m.ncols() {
            let v = m[(p, q)];
            if !v.is_finite() {
                report.push(ViolationKind::NonFinite, p, q, v);
                continue;
            }
            sum += v;
            if p == q {
                if v > SIGN_TOL {
                    report.push(ViolationKind::PositiveDiagonal, p, q, v);
                }
            } else if v < -(eps_relax + SIGN_TOL) {
                report.push(ViolationKind::NegativeOffDiagonal, p, q, v);
            }
        }
        if sum.abs() > ROW_SUM_TOL {
            report.push(ViolationKind::RowSum, p, p, sum);
        }
    }
    report
}

/// Checks that every entry lies in `[0, 1]` and every row sums to one.
pub fn validate_transition(m: &DMatrix<f64>) -> ValidationReport {
    let mut report = ValidationReport::default();
    for p in 0..m.nrows() {
        let mut sum = 0.0;
        for q in 0..m.ncols() {
            let v = m[(p, q)];
            if !v.is_finite() {
                report.push(ViolationKind::NonFinite, p, q, v);
                continue;
            }
            sum += v;
            if !(-SIGN_TOL..=1.0 + SIGN_TOL).contains(&v) {
                report.push(ViolationKind::EntryOutOfRange, p, q, v);
            }
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            report.push(ViolationKind::RowSum, p, p, sum - 1.0);
        }
    }
    report
}

fn check_square(m: &DMatrix<f64>) -> Result<(), SpectralError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(SpectralError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Rate matrix of a CTMC.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    entries: DMatrix<f64>,
}

impl GeneratorMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self, SpectralError> {
        Self::with_relaxation(entries, 0.0)
    }

    /// Accepts off-diagonal entries down to `-eps_relax`.
    pub fn with_relaxation(entries: DMatrix<f64>, eps_relax: f64) -> Result<Self, SpectralError> {
        check_square(&entries)?;
        let report = validate_generator(&entries, eps_relax);
        if !report.is_valid() {
            return Err(SpectralError::Invalid(report));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, SpectralError> {
        Self::new(matrix_from_rows(rows))
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            entries: DMatrix::zeros(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Total exit rate `-L(p,p)` of state `p`.
    pub fn exit_rate(&self, p: usize) -> f64 {
        -self.entries[(p, p)]
    }
}

/// Row-stochastic matrix together with its sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
    delta: f64,
}

impl TransitionMatrix {
    pub fn new(entries: DMatrix<f64>, delta: f64) -> Result<Self, SpectralError> {
        check_square(&entries)?;
        let report = validate_transition(&entries);
        if !report.is_valid() || !(delta > 0.0) {
            return Err(SpectralError::Invalid(report));
        }
        Ok(Self { entries, delta })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }
}

pub fn matrix_from_rows(rows: &[&[f64]]) -> DMatrix<f64> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(m, n, |i, j| rows[i][j])
}

/// Which eigenvalue set the input matrix carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    Transition,
    Generator,
}

/// Selects the eigenvalues used by [`reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `Σ Λ_k φ_k ψ_kᵀ`
    AsP,
    /// `Σ λ_k φ_k ψ_kᵀ`
    AsL,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Transition-matrix eigenvalues, `lambda_p[0] == 1`.
    pub lambda_p: DVector<f64>,
    /// Generator eigenvalues, `lambda_l[0] == 0`.
    pub lambda_l: DVector<f64>,
    /// Right eigenvectors as columns.
    pub phi: DMatrix<f64>,
    /// Left eigenvectors as columns.
    pub psi: DMatrix<f64>,
    pub delta: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.lambda_p.len()
    }

    /// `ψ_1` rescaled to a probability vector.
    pub fn invariant_distribution(&self) -> DVector<f64> {
        let psi1 = self.psi.column(0).into_owned();
        let total = psi1.sum();
        psi1 / total
    }

    pub fn biorthogonality_residual(&self) -> f64 {
        biorthogonality_residual(&self.phi, &self.psi)
    }
}

/// Real eigendecomposition without any pinning: eigenvalues sorted by
/// descending real part, unit-norm right eigenvectors and `Ψ = Φ⁻ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEigen {
    pub values: DVector<f64>,
    pub right: DMatrix<f64>,
    pub left: DMatrix<f64>,
}

/// Eigenvalues of a real square matrix, ordered by descending real part,
/// ties by descending `|imag|`, then by original position.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, SpectralError> {
    check_square(m)?;
    let raw = m.clone().complex_eigenvalues();
    let mut vals: Vec<(usize, f64, f64)> = raw.iter().enumerate().map(|(i, c)| (i, c.re, c.im)).collect();
    vals.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(b.2.abs().partial_cmp(&a.2.abs()).unwrap_or(Ordering::Equal))
            .then(a.0.cmp(&b.0))
    });
    Ok(vals.into_iter().map(|(_, re, im)| (re, im)).collect())
}

fn real_sorted_values(m: &DMatrix<f64>) -> Result<Vec<f64>, SpectralError> {
    let vals = sorted_eigenvalues(m)?;
    let scale = 1.0_f64.max(m.abs().max());
    for &(re, im) in &vals {
        if im.abs() > IMAG_TOL * scale {
            return Err(SpectralError::ComplexSpectrum { re, im });
        }
    }
    let values: Vec<f64> = vals.into_iter().map(|(re, _)| re).collect();
    for w in values.windows(2) {
        let gap = w[0] - w[1];
        if gap < DEGENERACY_GAP {
            return Err(SpectralError::DegenerateSpectrum { gap });
        }
    }
    Ok(values)
}

/// Right null vector of `m - value·I`, taken from the smallest singular value.
fn null_vector(m: &DMatrix<f64>, value: f64) -> DVector<f64> {
    let n = m.nrows();
    let shifted = m - DMatrix::<f64>::identity(n, n) * value;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
        .expect("non-empty matrix");
    v_t.row(idx).transpose()
}

/// Unit norm, largest-magnitude entry positive.
fn canonical_direction(mut v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    let (imax, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.abs()
                .partial_cmp(&b.1.abs())
                .unwrap_or(Ordering::Equal)
                .then(b.0.cmp(&a.0))
        })
        .expect("non-empty vector");
    if v[imax] < 0.0 {
        v = -v;
    }
    v
}

fn left_from_right(right: &DMatrix<f64>) -> Result<DMatrix<f64>, SpectralError> {
    right
        .clone()
        .try_inverse()
        .map(|inv| inv.transpose())
        .ok_or(SpectralError::DegenerateSpectrum { gap: 0.0 })
}

/// Eigendecomposition of an arbitrary real-spectrum matrix with distinct
/// eigenvalues.
pub fn real_eigen(m: &DMatrix<f64>) -> Result<RealEigen, SpectralError> {
    let values = real_sorted_values(m)?;
    let n = values.len();
    let mut right = DMatrix::zeros(n, n);
    for (k, &value) in values.iter().enumerate() {
        right.set_column(k, &canonical_direction(null_vector(m, value)));
    }
    let left = left_from_right(&right)?;
    Ok(RealEigen {
        values: DVector::from_vec(values),
        right,
        left,
    })
}

/// Biorthogonal eigendecomposition of a transition or generator matrix with
/// the leading eigenpair pinned (`Λ_1 = 1`, `λ_1 = 0`, `φ_1 = 1`).
pub fn eigendecompose(
    m: &DMatrix<f64>,
    delta: f64,
    kind: MatrixKind,
) -> Result<SpectralDecomposition, SpectralError> {
    let values = real_sorted_values(m)?;
    let n = values.len();
    let pinned = match kind {
        MatrixKind::Transition => 1.0,
        MatrixKind::Generator => 0.0,
    };
    let scale = 1.0_f64.max(m.abs().max());
    if (values[0] - pinned).abs() > LEADING_TOL * scale {
        return Err(SpectralError::LeadingEigenvalue {
            expected: pinned,
            found: values[0],
        });
    }

    let mut phi = DMatrix::zeros(n, n);
    phi.set_column(0, &DVector::from_element(n, 1.0));
    for (k, &value) in values.iter().enumerate().skip(1) {
        phi.set_column(k, &canonical_direction(null_vector(m, value)));
    }
    let psi = left_from_right(&phi)?;

    let (lambda_p, lambda_l) = match kind {
        MatrixKind::Transition => {
            let mut lp = DVector::from_vec(values);
            lp[0] = 1.0;
            if let Some((index, &value)) = lp.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                return Err(SpectralError::NonPositiveEigenvalue { index, value });
            }
            let ll = lp.map(|v| v.ln() / delta);
            (lp, ll)
        }
        MatrixKind::Generator => {
            let mut ll = DVector::from_vec(values);
            ll[0] = 0.0;
            let lp = ll.map(|v| (v * delta).exp());
            (lp, ll)
        }
    };

    Ok(SpectralDecomposition {
        lambda_p,
        lambda_l,
        phi,
        psi,
        delta,
    })
}

/// `Φ diag(values) Ψᵀ`.
pub fn reconstruct_with(phi: &DMatrix<f64>, values: &DVector<f64>, psi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = phi.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= values[k];
    }
    scaled * psi.transpose()
}

pub fn reconstruct(d: &SpectralDecomposition, scale: Scale) -> DMatrix<f64> {
    match scale {
        Scale::AsP => reconstruct_with(&d.phi, &d.lambda_p, &d.psi),
        Scale::AsL => reconstruct_with(&d.phi, &d.lambda_l, &d.psi),
    }
}

/// `‖ΨᵀΦ − I‖_F`
pub fn biorthogonality_residual(phi: &DMatrix<f64>, psi: &DMatrix<f64>) -> f64 {
    let n = phi.ncols();
    (psi.transpose() * phi - DMatrix::<f64>::identity(n, n)).norm()
}

const EXP_SERIES_TERMS: usize = 20;

/// `exp(t·A)` for a general square matrix by scaling and squaring of the
/// truncated Taylor series.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let scaled = a * t;
    // infinity norm
    let norm = scaled
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut s = norm;
    while s >= 0.5 {
        s /= 2.0;
        squarings += 1;
    }
    let x = scaled / 2f64.powi(squarings as i32);

    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for j in 1..=EXP_SERIES_TERMS {
        term = &term * &x / j as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Transition matrix `exp(ΔL)`.
pub fn matrix_exp(l: &GeneratorMatrix, delta: f64) -> TransitionMatrix {
    let mut p = expm(l.entries(), delta);
    // entries of exp(ΔL) are nonnegative; clear round-off below zero
    p.iter_mut().for_each(|v| {
        if *v < 0.0 && *v > -SIGN_TOL {
            *v = 0.0;
        }
    });
    TransitionMatrix {
        entries: p,
        delta: if delta > 0.0 { delta } else { f64::MIN_POSITIVE },
    }
}

/// Real logarithm `Δ⁻¹ log P` through the spectral route.
///
/// Negative off-diagonal rates are reported, never clamped.
pub fn matrix_log(p: &TransitionMatrix) -> Result<GeneratorMatrix, SpectralError> {
    let d = match eigendecompose(p.entries(), p.delta(), MatrixKind::Transition) {
        Ok(d) => d,
        Err(SpectralError::NonPositiveEigenvalue { index, value }) => {
            let mut report = ValidationReport::default();
            report.push(ViolationKind::NonPositiveEigenvalue, index, index, value);
            return Err(SpectralError::NotEmbeddable(report));
        }
        Err(e) => return Err(e),
    };
    let l = reconstruct(&d, Scale::AsL);
    let report = validate_generator(&l, 0.0);
    if !report.is_valid() {
        return Err(SpectralError::NotEmbeddable(report));
    }
    Ok(GeneratorMatrix { entries: l })
}

/// Unchecked real logarithm, used where a caller wants the raw matrix even
/// when it is not a generator.
pub fn spectral_log(d: &SpectralDecomposition) -> DMatrix<f64> {
    reconstruct(d, Scale::AsL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCheck {
    pub rank: usize,
    pub closed_classes: usize,
    pub consistent: bool,
}

/// Number of closed communicating classes of the positive-rate digraph.
pub fn closed_class_count(l: &DMatrix<f64>) -> usize {
    let m = l.nrows();
    let mut graph = DiGraph::<usize, ()>::with_capacity(m, m * m);
    let nodes: Vec<_> = (0..m).map(|i| graph.add_node(i)).collect();
    for p in 0..m {
        for q in 0..m {
            if p != q && l[(p, q)] > 0.0 {
                graph.add_edge(nodes[p], nodes[q], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; m];
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[graph[*node]] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|node| {
                let p = graph[*node];
                (0..m).all(|q| q == p || l[(p, q)] <= 0.0 || component[q] == *c)
            })
        })
        .count()
}

/// Checks `rank(L) = m − c` with `c` the number of closed classes.
pub fn closed_class_rank_check(l: &GeneratorMatrix) -> RankCheck {
    let m = l.dim();
    let zeros = sorted_eigenvalues(l.entries())
        .expect("generator is square")
        .iter()
        .filter(|(re, im)| re.hypot(*im) < ZERO_EIGENVALUE_TOL)
        .count();
    let rank = m - zeros;
    let closed_classes = closed_class_count(l.entries());
    RankCheck {
        rank,
        closed_classes,
        consistent: rank + closed_classes == m,
    }
}

/// First-order spectral shifts for a perturbation of the transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderShift {
    pub d_lambda_p: DVector<f64>,
    pub d_phi: DMatrix<f64>,
    pub d_psi: DMatrix<f64>,
    pub d_lambda_l: DVector<f64>,
}

/// Resolvent `R_k = Σ_{j≠k} φ_j ψ_jᵀ / (Λ_k − Λ_j)`.
pub fn resolvent(d: &SpectralDecomposition, k: usize) -> DMatrix<f64> {
    let m = d.dim();
    let mut r = DMatrix::zeros(m, m);
    for j in (0..m).filter(|&j| j != k) {
        let gap = d.lambda_p[k] - d.lambda_p[j];
        r += d.phi.column(j) * d.psi.column(j).transpose() / gap;
    }
    r
}

fn check_gaps(d: &SpectralDecomposition) -> Result<(), SpectralError> {
    let m = d.dim();
    for i in 0..m {
        for j in (i + 1)..m {
            let gap = (d.lambda_p[i] - d.lambda_p[j]).abs();
            if gap < DEGENERACY_GAP {
                return Err(SpectralError::DegenerateSpectrum { gap });
            }
        }
    }
    Ok(())
}

/// Linear response of the spectrum to `P0 + scale·Q`.
pub fn first_order_scaled(
    d0: &SpectralDecomposition,
    q: &DMatrix<f64>,
    scale: f64,
) -> Result<FirstOrderShift, SpectralError> {
    let m = d0.dim();
    if q.nrows() != m || q.ncols() != m {
        return Err(SpectralError::Shape {
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    check_gaps(d0)?;
    let mut d_lambda_p = DVector::zeros(m);
    let mut d_lambda_l = DVector::zeros(m);
    let mut d_phi = DMatrix::zeros(m, m);
    let mut d_psi = DMatrix::zeros(m, m);
    let qt = q.transpose();
    for k in 0..m {
        let phi_k = d0.phi.column(k);
        let psi_k = d0.psi.column(k);
        let r = resolvent(d0, k);
        let shift = (psi_k.transpose() * q * phi_k)[(0, 0)];
        d_lambda_p[k] = scale * shift;
        d_lambda_l[k] = scale * (-d0.lambda_l[k] * d0.delta).exp() * shift / d0.delta;
        d_phi.set_column(k, &(&r * q * phi_k * scale));
        d_psi.set_column(k, &(r.transpose() * &qt * psi_k * scale));
    }
    Ok(FirstOrderShift {
        d_lambda_p,
        d_phi,
        d_psi,
        d_lambda_l,
    })
}

/// First-order shifts at sample size `n`, i.e. scaled by `n^{-1/2}`.
pub fn perturbation_first_order(
    d0: &SpectralDecomposition,
    q: &DMatrix<f64>,
    n: u64,
) -> Result<FirstOrderShift, SpectralError> {
    first_order_scaled(d0, q, 1.0 / (n as f64).sqrt())
}

/// Rescales the right eigenvectors of `perturbed` so that `ψ_k⁰ᵀφ_k = 1`
/// (the gauge in which first-order theory is stated) and recomputes the
/// matching left eigenvectors.
pub fn align_to_reference(perturbed: &RealEigen, reference: &SpectralDecomposition) -> RealEigen {
    let m = perturbed.values.len();
    let mut right = perturbed.right.clone();
    for k in 0..m {
        let proj = reference.psi.column(k).dot(&right.column(k));
        if proj != 0.0 {
            let col = right.column(k) / proj;
            right.set_column(k, &col);
        }
    }
    let left = left_from_right(&right).unwrap_or_else(|_| perturbed.left.clone());
    RealEigen {
        values: perturbed.values.clone(),
        right,
        left,
    }
}
