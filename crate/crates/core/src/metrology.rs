//! Single-parameter estimation: Fisher informations, optimal measurements,
//! optimality checks, Monte-Carlo maximum likelihood and the multi-probe
//! Heisenberg-scaling harness.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::evolution::{build_circuit_geodesic, CircuitRecipe, GeodesicHamiltonian, project_evolution};
use crate::geodesics::{boundary_intersections, GeodesicPath};
use crate::linalg::{self, complete_unitary, eig_hermitian, inner, norm, ComplexMatrix};
use crate::states::{
    bures_angle, decompose_tangent, sld, vertical_projection, CompositeTangent, DensityMatrix, Purification, SldMode,
    TangentOperator,
};
use crate::{tol, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// POVMs

/// Positive operators summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        let n = first.rows();
        let mut sum = ComplexMatrix::zeros(n, n);
        for (j, m) in elements.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.rows() });
            }
            let dh = m.hermiticity_defect();
            if dh > tol::HERMITIAN {
                return Err(Error::InvalidPovm(format!("element {j} is not Hermitian ({dh:.2e})")));
            }
            let low = eig_hermitian(m)?.values[0];
            if low < -tol::PSD {
                return Err(Error::InvalidPovm(format!("element {j} has eigenvalue {low:.3e}")));
            }
            sum += m;
        }
        let defect = (&sum - &ComplexMatrix::identity(n)).frobenius_norm();
        if defect > 1e-9 {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {defect:.2e}")));
        }
        Ok(Self { elements: elements.into_iter().map(|m| m.hermitian_part()).collect() })
    }

    /// Projective measurement in the standard basis.
    pub fn computational(n: usize) -> Self {
        let elements = (0..n)
            .map(|k| {
                let mut m = ComplexMatrix::zeros(n, n);
                m[(k, k)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        Self { elements }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    /// `tr[M_j rho]`, clamped at zero.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| rho.expectation(m).re.max(0.0)).collect()
    }
}

// ---------------------------------------------------------------------------
// Families

type StateFn = dyn Fn(f64) -> Result<DensityMatrix> + Send + Sync;
type DerivativeFn = dyn Fn(f64) -> Result<ComplexMatrix> + Send + Sync;

/// A one-parameter family `x -> rho_x` with an analytic or finite-difference
/// derivative.
#[derive(Clone)]
pub struct ParametrizedFamily {
    state: Arc<StateFn>,
    derivative: Option<Arc<DerivativeFn>>,
    step: Option<f64>,
}

impl std::fmt::Debug for ParametrizedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametrizedFamily")
            .field("analytic", &self.derivative.is_some())
            .field("step", &self.step)
            .finish()
    }
}

impl ParametrizedFamily {
    /// Family with central finite-difference derivatives.
    pub fn new(state: impl Fn(f64) -> Result<DensityMatrix> + Send + Sync + 'static) -> Self {
        Self { state: Arc::new(state), derivative: None, step: None }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> Result<ComplexMatrix> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Fixed finite-difference step instead of `1e-5 max(1, |x|)`.
    pub fn with_step(mut self, h: f64) -> Self {
        self.step = Some(h);
        self
    }

    /// `rho_x = gamma(x delta)` with derivative `delta gamma'(x delta)`.
    pub fn geodesic<P: GeodesicPath + Send + Sync + 'static>(path: P, delta: f64) -> Self {
        let path = Arc::new(path);
        let p2 = Arc::clone(&path);
        Self::new(move |x| path.evaluate(x * delta)).with_derivative(move |x| Ok(p2.velocity(x * delta).scale_real(delta)))
    }

    /// `rho_x = e^{-i x G} rho_0 e^{i x G}`.
    pub fn unitary(rho0: DensityMatrix, generator: ComplexMatrix) -> Result<Self> {
        let dh = generator.hermiticity_defect();
        if dh > tol::HERMITIAN {
            return Err(Error::NotHermitian(dh));
        }
        if generator.rows() != rho0.dim() {
            return Err(Error::DimensionMismatch { expected: rho0.dim(), found: generator.rows() });
        }
        let g = generator.hermitian_part();
        let eg = eig_hermitian(&g)?;
        let rho0 = Arc::new(rho0);
        let eg2 = eg.clone();
        let r2 = Arc::clone(&rho0);
        let g2 = g.clone();
        let state = move |x: f64| {
            let u = eg.map_complex(|e| C64::from_polar(1.0, -x * e));
            DensityMatrix::new_clamped(rho0.matrix().conjugate_by(&u))
        };
        let derivative = move |x: f64| {
            let u = eg2.map_complex(|e| C64::from_polar(1.0, -x * e));
            let r = r2.matrix().conjugate_by(&u);
            Ok(g2.commutator(&r).scale(-I))
        };
        Ok(Self::new(state).with_derivative(derivative))
    }

    pub fn state(&self, x: f64) -> Result<DensityMatrix> {
        (self.state)(x)
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `d rho_x / dx`.
    pub fn derivative(&self, x: f64) -> Result<TangentOperator> {
        let m = match &self.derivative {
            Some(d) => d(x)?,
            None => {
                let h = self.step.unwrap_or_else(|| tol::fd_step(x));
                let a = self.state(x + h)?;
                let b = self.state(x - h)?;
                (a.matrix() - b.matrix()).scale_real(0.5 / h)
            }
        };
        TangentOperator::with_tolerance(m, 1e-8)
    }
}

/// Classical Fisher information `sum_j (d p_j)^2 / p_j` over outcomes with
/// `p_j > 1e-12`.
pub fn cfi(family: &ParametrizedFamily, povm: &Povm, x: f64) -> Result<f64> {
    let rho = family.state(x)?;
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: povm.dim() });
    }
    let d = family.derivative(x)?;
    let mut f = 0.0;
    for m in povm.elements() {
        let p = rho.expectation(m).re;
        if p > tol::PROBABILITY_FLOOR {
            let dp = (d.matrix() * m).trace().re;
            f += dp * dp / p;
        }
    }
    Ok(f)
}

/// Quantum Fisher information `tr[rho_x L_x^2]`.
pub fn qfi(family: &ParametrizedFamily, x: f64, mode: SldMode) -> Result<f64> {
    let rho = family.state(x)?;
    let d = family.derivative(x)?;
    qfi_at(&rho, &d, mode)
}

/// `tr[rho L^2]` for a given state and tangent.
pub fn qfi_at(rho: &DensityMatrix, rho_dot: &TangentOperator, mode: SldMode) -> Result<f64> {
    let l = sld(rho, rho_dot, mode)?;
    Ok((&(rho.matrix() * &l) * &l).trace().re)
}

/// `4 (|Psi'|^2 - |<Psi|Psi'>|^2)` for a pure-state family.
pub fn qfi_pure(psi: &[C64], psi_dot: &[C64]) -> Result<f64> {
    if psi.len() != psi_dot.len() {
        return Err(Error::DimensionMismatch { expected: psi.len(), found: psi_dot.len() });
    }
    let n = norm(psi_dot);
    Ok(4.0 * (n * n - inner(psi, psi_dot).norm_sqr()))
}

/// `4 <(Delta H)^2>` for `Psi_x = e^{-i x H} Psi`.
pub fn qfi_pure_variance(psi: &[C64], h: &ComplexMatrix) -> Result<f64> {
    if h.rows() != psi.len() {
        return Err(Error::DimensionMismatch { expected: psi.len(), found: h.rows() });
    }
    let hv = h.mul_vec(psi);
    let mean = inner(psi, &hv).re;
    let sq = norm(&hv).powi(2);
    Ok(4.0 * (sq - mean * mean))
}

/// Split of the purification-space QFI into the part seen by the probe and
/// the part carried off by the ancilla.
#[derive(Clone, Debug, Serialize)]
pub struct PythagorasSplit {
    /// `4 |Psi'^h|^2`, the QFI of the reduced family.
    pub qfi_probe: f64,
    /// `4 (|Psi'^v|^2 - |<Psi|Psi'>|^2)`: vertical motion other than a global phase.
    pub leaked: f64,
    /// `4 (|Psi'|^2 - |<Psi|Psi'>|^2)`.
    pub qfi_pure: f64,
}

pub fn qfi_pythagoras(psi: &Purification, psi_dot: &CompositeTangent) -> Result<PythagorasSplit> {
    let split = decompose_tangent(psi, psi_dot)?;
    let phase = inner(psi.vector(), psi_dot.vector()).norm_sqr();
    let h = norm(&split.horizontal).powi(2);
    let v = norm(&split.vertical).powi(2);
    let total = psi_dot.norm().powi(2);
    Ok(PythagorasSplit { qfi_probe: 4.0 * h, leaked: 4.0 * (v - phase).max(0.0), qfi_pure: 4.0 * (total - phase) })
}

#[derive(Clone, Debug)]
pub struct VariationalResult {
    /// `4 min_B <(Delta H - 1 (x) B)^2>`.
    pub value: f64,
    /// Minimizing Hermitian `B` on the ancilla.
    pub generator: ComplexMatrix,
}

/// Variational QFI of the reduced family `tr_A e^{-i x H}|Psi><Psi| e^{i x H}`.
/// The objective is quadratic in the real coordinates of `B`, so the
/// minimum comes from the normal equations, solved by pseudo-inverse.
pub fn qfi_variational(psi: &Purification, h: &ComplexMatrix, x: f64) -> Result<VariationalResult> {
    let (n, n_a) = (psi.n(), psi.n_a());
    let dim = n * n_a;
    if h.rows() != dim || h.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: h.rows() });
    }
    let dh = h.hermiticity_defect();
    if dh > tol::HERMITIAN {
        return Err(Error::NotHermitian(dh));
    }
    let h = h.hermitian_part();
    let psi_x = linalg::expm_hermitian(&h, x)?.mul_vec(psi.vector());
    let hv = h.mul_vec(&psi_x);
    let mean = inner(&psi_x, &hv).re;
    let a: Vec<C64> = hv.iter().zip(&psi_x).map(|(u, p)| u - p * mean).collect();
    let mut basis = Vec::with_capacity(n_a * n_a);
    for k in 0..n_a {
        for l in k..n_a {
            let mut e = ComplexMatrix::zeros(n_a, n_a);
            if k == l {
                e[(k, k)] = C64::new(1.0, 0.0);
                basis.push(e);
            } else {
                e[(k, l)] = C64::new(1.0, 0.0);
                e[(l, k)] = C64::new(1.0, 0.0);
                basis.push(e);
                let mut f = ComplexMatrix::zeros(n_a, n_a);
                f[(k, l)] = -I;
                f[(l, k)] = I;
                basis.push(f);
            }
        }
    }
    let u: Vec<Vec<C64>> = basis.iter().map(|e| linalg::apply_ancilla(e, &psi_x, n)).collect::<Result<_>>()?;
    let m = basis.len();
    let gram = ComplexMatrix::from_fn(m, m, |i, j| C64::new(inner(&u[i], &u[j]).re, 0.0));
    let rhs: Vec<f64> = u.iter().map(|ui| inner(ui, &a).re).collect();
    let eg = eig_hermitian(&gram)?;
    let cutoff = 1e-12 * eg.values.last().copied().unwrap_or(0.0).max(1e-300);
    let mut beta = vec![0.0; m];
    for k in 0..m {
        let lam = eg.values[k];
        if lam <= cutoff {
            continue;
        }
        let vk = eg.vector(k);
        let proj: f64 = vk.iter().zip(&rhs).map(|(v, r)| v.re * r).sum();
        for (b, v) in beta.iter_mut().zip(&vk) {
            *b += v.re * proj / lam;
        }
    }
    let mut generator = ComplexMatrix::zeros(n_a, n_a);
    let mut resid = a.clone();
    for ((e, ui), b) in basis.iter().zip(&u).zip(&beta) {
        generator += &e.scale_real(*b);
        for (r, v) in resid.iter_mut().zip(ui) {
            *r -= v * b;
        }
    }
    Ok(VariationalResult { value: 4.0 * norm(&resid).powi(2), generator })
}

/// Projectors onto the eigenspaces of `M`: the measurement that is optimal
/// at every interior point of the geodesic family.
pub fn optimal_povm<P: GeodesicPath>(path: &P) -> Result<Povm> {
    let e = eig_hermitian(path.operator())?;
    let elements = e.clusters(tol::DEGENERATE).into_iter().map(|r| e.projector(r)).collect();
    Povm::new(elements)
}

/// Interval in `x` between the boundary hits of `gamma(x delta)` that
/// bracket `x0`. The family is invertible inside it.
pub fn geodesic_interval<P: GeodesicPath>(path: &P, delta: f64, x0: f64) -> Result<(f64, f64)> {
    if delta <= 0.0 {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let hits: Vec<f64> = boundary_intersections(path)?.iter().map(|b| b.tau).collect();
    if hits.is_empty() {
        return Err(Error::Numerical("geodesic never reaches the boundary".into()));
    }
    let t0 = x0 * delta;
    let shift = (t0 / PI).floor();
    let mut times: Vec<f64> = Vec::new();
    for k in -1..=1 {
        for &t in &hits {
            times.push(t + (shift + k as f64) * PI);
        }
    }
    times.sort_by(f64::total_cmp);
    let hi = times.iter().copied().find(|&t| t > t0).expect("periodic hits");
    let lo = times.iter().rev().copied().find(|&t| t < t0).expect("periodic hits");
    if (hi - t0).abs() < 1e-12 || (t0 - lo).abs() < 1e-12 {
        return Err(Error::AtBoundary);
    }
    Ok((lo / delta, hi / delta))
}

// ---------------------------------------------------------------------------
// Optimality conditions

/// Outcome of checking whether `e^{-i x H}` acting on `Psi_in` projects to a
/// geodesic of the probe.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    /// Half the spread `(e_max - e_min) / 2`.
    pub delta: f64,
    /// `<(Delta H)^2>`.
    pub variance: f64,
    pub variance_positive: bool,
    /// Norm of the vertical part of `-i Delta H Psi_in`.
    pub vertical_norm: f64,
    pub horizontal: bool,
    /// `Psi_in = (|e_max> + e^{i phi}|e_min>) / sqrt 2` for some `phi`.
    pub balanced_superposition: bool,
    pub phase: Option<f64>,
    /// `|Pi (Delta H) Pi / delta - H_g|_F`.
    pub plane_deviation: Option<f64>,
    /// Largest `|rho_x - gamma(x delta)|_F` over the sampled `x`.
    pub family_deviation: Option<f64>,
}

impl OptimalityReport {
    pub fn conditions_hold(&self) -> bool {
        self.variance_positive && self.horizontal
    }

    pub fn all_pass(&self) -> bool {
        self.conditions_hold()
            && self.balanced_superposition
            && self.plane_deviation.is_some_and(|d| d <= 1e-8)
            && self.family_deviation.is_some_and(|d| d <= 1e-8)
    }
}

pub fn check_optimal_hamiltonian(psi_in: &Purification, h: &ComplexMatrix, xs: &[f64]) -> Result<OptimalityReport> {
    let (n, n_a) = (psi_in.n(), psi_in.n_a());
    let dim = n * n_a;
    if h.rows() != dim || h.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: h.rows() });
    }
    let dh = h.hermiticity_defect();
    if dh > tol::HERMITIAN {
        return Err(Error::NotHermitian(dh));
    }
    let h = h.hermitian_part();
    let e = eig_hermitian(&h)?;
    let last = dim - 1;
    if dim < 2 || e.values[1] - e.values[0] <= tol::DEGENERATE || e.values[last] - e.values[last - 1] <= tol::DEGENERATE {
        return Err(Error::DegenerateExtremes);
    }
    let delta = 0.5 * (e.values[last] - e.values[0]);
    let psi = psi_in.vector();
    let hv = h.mul_vec(psi);
    let mean = inner(psi, &hv).re;
    let dpsi: Vec<C64> = hv.iter().zip(psi).map(|(u, p)| (u - p * mean) * (-I)).collect();
    let variance = norm(&dpsi).powi(2);
    let variance_positive = variance > tol::DEGENERATE;
    let vertical_norm = norm(&vertical_projection(psi_in, &dpsi)?.vector);
    let horizontal = vertical_norm <= tol::HORIZONTAL * norm(&dpsi).max(1.0);
    let a_max = inner(&e.vector(last), psi);
    let a_min = inner(&e.vector(0), psi);
    let balanced_superposition =
        (a_max.norm_sqr() - 0.5).abs() <= 1e-8 && (a_min.norm_sqr() - 0.5).abs() <= 1e-8;
    let mut report = OptimalityReport {
        delta,
        variance,
        variance_positive,
        vertical_norm,
        horizontal,
        balanced_superposition,
        phase: None,
        plane_deviation: None,
        family_deviation: None,
    };
    if !(balanced_superposition && horizontal && variance_positive) {
        return Ok(report);
    }
    report.phase = Some((a_min / a_max).arg());
    let tangent: Vec<C64> = dpsi.iter().map(|z| z / variance.sqrt()).collect();
    let hg = GeodesicHamiltonian::new(psi_in.clone(), tangent)?;
    let pi = &ComplexMatrix::outer(&e.vector(last), &e.vector(last)) + &ComplexMatrix::outer(&e.vector(0), &e.vector(0));
    let centered = &h - &ComplexMatrix::identity(dim).scale_real(mean);
    let plane = (&(&pi * &centered) * &pi).scale_real(1.0 / delta);
    report.plane_deviation = Some((&plane - &hg.matrix()).frobenius_norm());
    let mut worst: f64 = 0.0;
    for &x in xs {
        let v = linalg::expm_hermitian(&h, x)?.mul_vec(psi);
        let rho_x = linalg::reduced_outer(&v, &v, n, n_a)?;
        let g = project_evolution(&hg, x * delta)?;
        worst = worst.max((&rho_x - g.matrix()).frobenius_norm());
    }
    report.family_deviation = Some(worst);
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct LocalUnitaryWitness {
    pub related: bool,
    /// `U` with `(U (x) 1)|e1> = |e2>` when `related`.
    pub unitary: Option<ComplexMatrix>,
    /// `|tr_S |e1><e1| - tr_S |e2><e2||_F`.
    pub ancilla_mismatch: f64,
}

/// Decides whether `|e2> = (U (x) 1)|e1>` for a system unitary `U` by
/// comparing the reduced ancilla states, and builds `U` from the matched
/// Schmidt bases.
pub fn check_local_unitary_equivalence(e1: &[C64], e2: &[C64], n: usize, n_a: usize) -> Result<LocalUnitaryWitness> {
    for e in [e1, e2] {
        if e.len() != n * n_a {
            return Err(Error::DimensionMismatch { expected: n * n_a, found: e.len() });
        }
        let ne = norm(e);
        if (ne - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(ne));
        }
    }
    let m1 = linalg::vector_to_matrix(e1, n, n_a)?;
    let m2 = linalg::vector_to_matrix(e2, n, n_a)?;
    let g1 = &m1.adjoint() * &m1;
    let g2 = &m2.adjoint() * &m2;
    let ancilla_mismatch = (&g1 - &g2).frobenius_norm();
    if ancilla_mismatch > 1e-8 {
        return Ok(LocalUnitaryWitness { related: false, unitary: None, ancilla_mismatch });
    }
    let eg = eig_hermitian(&g1.hermitian_part())?;
    let mut from = Vec::new();
    let mut to = Vec::new();
    for k in (0..n_a).rev() {
        let s2 = eg.values[k];
        if s2 <= tol::RANK || from.len() == n {
            continue;
        }
        let q = eg.vector(k);
        let s = s2.sqrt();
        from.push(m1.mul_vec(&q).iter().map(|z| z / s).collect::<Vec<_>>());
        to.push(m2.mul_vec(&q).iter().map(|z| z / s).collect::<Vec<_>>());
    }
    let a = complete_unitary(&from, n)?;
    let b = complete_unitary(&to, n)?;
    let u = &b * &a.adjoint();
    let mapped = linalg::apply_system(&u, e1, n_a)?;
    let defect = norm(&linalg::sub_vec(&mapped, e2));
    let related = defect <= 1e-8;
    Ok(LocalUnitaryWitness { related, unitary: related.then_some(u), ancilla_mismatch })
}

// ---------------------------------------------------------------------------
// Boundary discontinuity diagnostic

#[derive(Clone, Debug, Serialize)]
pub struct DiscontinuityReport {
    /// Support-restricted `tr[rho L^2]` at `x0`.
    pub qfi_support: f64,
    /// `4 (d_B(rho_{x0}, rho_{x0 +- h}) / h)^2`, averaged over both sides.
    pub metric_fd: f64,
    /// `qfi_support - metric_fd`.
    pub jump: f64,
    /// `-2 sum p''` over the eigenvalues vanishing at `x0`.
    pub predicted: f64,
    pub kernel_dim: usize,
}

/// Compares the support-restricted QFI with the Bures metric measured by
/// finite differences of the Bures angle at a rank-deficient point.
pub fn discontinuity_diagnostic(family: &ParametrizedFamily, x0: f64, h: f64) -> Result<DiscontinuityReport> {
    let r0 = family.state(x0)?;
    let qfi_support = qfi(family, x0, SldMode::SupportRestricted)?;
    let rp = family.state(x0 + h)?;
    let rm = family.state(x0 - h)?;
    let dp = bures_angle(&r0, &rp) / h;
    let dm = bures_angle(&r0, &rm) / h;
    let metric_fd = 2.0 * (dp * dp + dm * dm);
    let kernel_dim = r0.dim() - r0.rank();
    let low = |r: &DensityMatrix| r.eigen().values[..kernel_dim].iter().sum::<f64>();
    let pdd = (low(&rp) - 2.0 * low(&r0) + low(&rm)) / (h * h);
    Ok(DiscontinuityReport { qfi_support, metric_fd, jump: qfi_support - metric_fd, predicted: -2.0 * pdd, kernel_dim })
}

// ---------------------------------------------------------------------------
// Monte-Carlo maximum likelihood

/// Grid scan followed by golden-section refinement.
#[derive(Clone, Debug, Serialize)]
pub struct MleConfig {
    pub lower: f64,
    pub upper: f64,
    pub grid: usize,
    pub tolerance: f64,
}

impl MleConfig {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper, grid: 2048, tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct EstimationExperiment {
    pub family: ParametrizedFamily,
    pub povm: Povm,
    pub x_true: f64,
    pub n_meas: u64,
    pub replicates: usize,
    pub seed: u64,
    pub mle: MleConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Root-mean-square error of the estimates.
    pub delta_x: f64,
    /// `1 / sqrt(N_meas F_Q(x*))`.
    pub crb: f64,
    pub qfi: f64,
    pub cfi: f64,
}

fn log_likelihood(counts: &[u64], p: &[f64]) -> f64 {
    let mut l = 0.0;
    for (&c, &q) in counts.iter().zip(p) {
        if c > 0 {
            if q <= 0.0 {
                return f64::NEG_INFINITY;
            }
            l += c as f64 * q.ln();
        }
    }
    l
}

fn sample_counts(p: &[f64], n: u64, rng: &mut impl Rng) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (j, &q) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if j + 1 == p.len() {
            counts[j] = left;
            break;
        }
        let r = if mass > 0.0 { (q / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, r).map_err(|e| Error::Numerical(e.to_string()))?.sample(rng);
        counts[j] = k;
        left -= k;
        mass -= q;
    }
    Ok(counts)
}

fn normalized_probabilities(povm: &Povm, rho: &DensityMatrix) -> Vec<f64> {
    let p = povm.probabilities(rho);
    let s: f64 = p.iter().sum();
    p.iter().map(|q| q / s).collect()
}

/// Samples `N_meas` outcomes per replicate, maximizes the likelihood and
/// reports the spread of the estimates against the Cramér-Rao bound.
pub fn run_experiment(exp: &EstimationExperiment) -> Result<ExperimentResult> {
    if exp.n_meas < 100 {
        return Err(Error::InvalidInput("at least 100 measurements per replicate are required".into()));
    }
    if exp.replicates == 0 {
        return Err(Error::InvalidInput("at least one replicate is required".into()));
    }
    let cfg = &exp.mle;
    if !(cfg.lower < exp.x_true && exp.x_true < cfg.upper) || cfg.grid < 3 {
        return Err(Error::InvalidInput("true value must lie inside the search interval".into()));
    }
    let rho = exp.family.state(exp.x_true)?;
    if exp.povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: exp.povm.dim() });
    }
    let p_true = normalized_probabilities(&exp.povm, &rho);
    let step = (cfg.upper - cfg.lower) / (cfg.grid - 1) as f64;
    let grid: Vec<f64> = (0..cfg.grid).map(|k| cfg.lower + k as f64 * step).collect();
    let table: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&x| Ok(normalized_probabilities(&exp.povm, &exp.family.state(x)?)))
        .collect::<Result<_>>()?;
    let estimates: Vec<f64> = (0..exp.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
            rng.set_stream(r as u64);
            let counts = sample_counts(&p_true, exp.n_meas, &mut rng)?;
            if counts.iter().filter(|&&c| c > 0).count() < 2 {
                return Err(Error::DegenerateLikelihood);
            }
            let best = (0..grid.len())
                .max_by(|&a, &b| log_likelihood(&counts, &table[a]).total_cmp(&log_likelihood(&counts, &table[b])))
                .expect("non-empty grid");
            let lo = grid[best.saturating_sub(1)];
            let hi = grid[(best + 1).min(grid.len() - 1)];
            let f = |x: f64| -> Result<f64> {
                Ok(log_likelihood(&counts, &normalized_probabilities(&exp.povm, &exp.family.state(x)?)))
            };
            golden_max(f, lo, hi, cfg.tolerance)
        })
        .collect::<Result<_>>()?;
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let mse = estimates.iter().map(|e| (e - exp.x_true).powi(2)).sum::<f64>() / k;
    let q = qfi(&exp.family, exp.x_true, SldMode::Strict)?;
    let c = cfi(&exp.family, &exp.povm, exp.x_true)?;
    Ok(ExperimentResult {
        estimates,
        mean,
        delta_x: mse.sqrt(),
        crb: 1.0 / (exp.n_meas as f64 * q).sqrt(),
        qfi: q,
        cfi: c,
    })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol_width: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol_width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// Heisenberg scaling

/// `N` probe qubits, each paired with one ancilla qubit and driven by
/// `H_nu = c_nu + (gap_nu / 2) H_g`, where `H_g` is the geodesic Hamiltonian
/// of the entangling circuit for the qubit state `rho`.
#[derive(Clone, Debug)]
pub struct ProbeEnsembleSpec {
    pub rho: DensityMatrix,
    /// `e_{nu,+} - e_{nu,-}` per pair.
    pub gaps: Vec<f64>,
    /// `(e_{nu,+} + e_{nu,-}) / 2` per pair.
    pub offsets: Vec<f64>,
    pub phase: f64,
}

pub const MAX_PROBES: usize = 5;

impl ProbeEnsembleSpec {
    pub fn uniform(rho: DensityMatrix, probes: usize, gap: f64, phase: f64) -> Self {
        Self { rho, gaps: vec![gap; probes], offsets: vec![0.0; probes], phase }
    }

    pub fn probes(&self) -> usize {
        self.gaps.len()
    }

    /// `Delta_N = (e_max - e_min) / 2` of the total Hamiltonian.
    pub fn delta(&self) -> f64 {
        0.5 * self.gaps.iter().sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        let n = self.probes();
        if n == 0 || self.offsets.len() != n {
            return Err(Error::InvalidInput("gaps and offsets must be non-empty and of equal length".into()));
        }
        if n > MAX_PROBES {
            return Err(Error::TooManyQubits { qubits: 2 * n, limit: 2 * MAX_PROBES });
        }
        if self.rho.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.rho.dim() });
        }
        if self.gaps.iter().any(|&g| g <= tol::DEGENERATE) {
            return Err(Error::DegenerateExtremes);
        }
        Ok(())
    }
}

/// The probe ensemble at one parameter value.
#[derive(Clone, Debug)]
pub struct ProbeState {
    pub purification: Purification,
    /// `d Psi_x / dx` with the mean energy removed.
    pub tangent: Vec<C64>,
}

/// Pair-major composite index to `(S_0..S_{N-1}, A_0..A_{N-1})` register order.
fn pair_to_register(idx: usize, probes: usize) -> usize {
    let mut out = 0;
    for nu in 0..probes {
        let pair = (idx >> (2 * (probes - 1 - nu))) & 3;
        let (s, a) = (pair >> 1, pair & 1);
        out |= s << (2 * probes - 1 - nu);
        out |= a << (probes - 1 - nu);
    }
    out
}

fn tensor_power(v: &[C64], probes: usize) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for _ in 0..probes {
        out = linalg::kron_vec(&out, v);
    }
    let mut reg = vec![C64::new(0.0, 0.0); out.len()];
    for (k, z) in out.into_iter().enumerate() {
        reg[pair_to_register(k, probes)] = z;
    }
    reg
}

/// Basis of the two-dimensional plane the ensemble moves in.
struct EnsemblePlane {
    plus: Vec<C64>,
    minus: Vec<C64>,
    e_plus: f64,
    e_minus: f64,
}

fn ensemble_plane(spec: &ProbeEnsembleSpec) -> Result<EnsemblePlane> {
    spec.validate()?;
    let n = spec.probes();
    let pair = build_circuit_geodesic(&spec.rho, &CircuitRecipe::Entangling)?;
    let s = 0.5f64.sqrt();
    let ep = linalg::combine(C64::new(s, 0.0), pair.psi(), C64::new(0.0, s), pair.psi_dot());
    let em = linalg::combine(C64::new(s, 0.0), pair.psi(), C64::new(0.0, -s), pair.psi_dot());
    let e_plus = spec.offsets.iter().zip(&spec.gaps).map(|(c, g)| c + 0.5 * g).sum();
    let e_minus = spec.offsets.iter().zip(&spec.gaps).map(|(c, g)| c - 0.5 * g).sum();
    Ok(EnsemblePlane { plus: tensor_power(&ep, n), minus: tensor_power(&em, n), e_plus, e_minus })
}

/// `Psi_x = e^{-i x H^(N)} (|e+>^N + e^{i phase}|e->^N) / sqrt 2`, with its tangent.
pub fn probe_state(spec: &ProbeEnsembleSpec, x: f64) -> Result<ProbeState> {
    let plane = ensemble_plane(spec)?;
    let n = spec.probes();
    let s = 0.5f64.sqrt();
    let a = C64::from_polar(s, -x * plane.e_plus);
    let b = C64::from_polar(s, spec.phase - x * plane.e_minus);
    let v = linalg::combine(a, &plane.plus, b, &plane.minus);
    let mean = 0.5 * (plane.e_plus + plane.e_minus);
    let da = -I * a * (plane.e_plus - mean);
    let db = -I * b * (plane.e_minus - mean);
    let tangent = linalg::combine(da, &plane.plus, db, &plane.minus);
    let dim = 1usize << n;
    Ok(ProbeState { purification: Purification::from_vector(v, dim, dim)?, tangent })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeisenbergSample {
    pub x: f64,
    pub qfi: f64,
    pub leaked: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeisenbergRow {
    pub probes: usize,
    /// `(sum_nu gap_nu)^2`.
    pub qfi_predicted: f64,
    pub samples: Vec<HeisenbergSample>,
    /// `1 / sqrt(F_Q)` for a single measurement.
    pub delta_x_best: f64,
}

/// Parameter values where the relative phase `phase + 2 x Delta_N` lands on
/// `{0.2, 0.55, 0.9, 1.25}`.
pub fn heisenberg_samples(spec: &ProbeEnsembleSpec) -> Vec<f64> {
    let d = spec.delta();
    [0.2, 0.55, 0.9, 1.25].iter().map(|t| (t - spec.phase) / (2.0 * d)).collect()
}

/// Probe QFI and leaked information of one ensemble at the given `x`.
pub fn heisenberg_point(spec: &ProbeEnsembleSpec, xs: &[f64]) -> Result<HeisenbergRow> {
    let n = spec.probes();
    let mut samples = Vec::with_capacity(xs.len());
    for &x in xs {
        let st = probe_state(spec, x)?;
        let rho = st.purification.reduced_state()?;
        let drho = crate::states::project_tangent(&st.purification, &st.tangent)?;
        let q = qfi_at(&rho, &TangentOperator::with_tolerance(drho, 1e-8)?, SldMode::Strict)?;
        let tangent = CompositeTangent::new(&st.purification, st.tangent)?;
        let split = qfi_pythagoras(&st.purification, &tangent)?;
        samples.push(HeisenbergSample { x, qfi: q, leaked: split.leaked });
    }
    let total: f64 = spec.gaps.iter().sum();
    let qfi_predicted = total * total;
    Ok(HeisenbergRow { probes: n, qfi_predicted, samples, delta_x_best: 1.0 / qfi_predicted.sqrt() })
}

/// Runs [`heisenberg_point`] for each ensemble size with equal gaps.
pub fn heisenberg_scan(rho: &DensityMatrix, probes: &[usize], gap: f64, phase: f64) -> Result<Vec<HeisenbergRow>> {
    probes
        .iter()
        .map(|&n| {
            let spec = ProbeEnsembleSpec::uniform(rho.clone(), n, gap, phase);
            spec.validate()?;
            heisenberg_point(&spec, &heisenberg_samples(&spec))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{shortest_geodesic, enumerate_geodesics};
    use crate::random;

    fn diagonal_family() -> ParametrizedFamily {
        ParametrizedFamily::new(|x: f64| {
            let (s, c) = x.sin_cos();
            DensityMatrix::from_diagonal(&[c * c, s * s])
        })
    }

    fn fixture() -> (DensityMatrix, DensityMatrix) {
        (DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap(), DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap())
    }

    #[test]
    fn povm_validation() {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        assert!(matches!(Povm::new(vec![half.clone()]), Err(Error::InvalidPovm(_))));
        let neg = ComplexMatrix::from_real_diagonal(&[1.5, 1.0]);
        let comp = ComplexMatrix::from_real_diagonal(&[-0.5, 0.0]);
        assert!(matches!(Povm::new(vec![neg, comp]), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn cfi_of_diagonal_family_is_four() {
        let f = diagonal_family();
        for x in [0.2, 0.7, 1.1] {
            let c = cfi(&f, &Povm::computational(2), x).unwrap();
            assert!((c - 4.0).abs() < 1e-8, "{c}");
        }
        let constant = ParametrizedFamily::new(|_| Ok(DensityMatrix::maximally_mixed(2)));
        assert_eq!(cfi(&constant, &Povm::computational(2), 0.3).unwrap(), 0.0);
        assert_eq!(qfi(&constant, 0.3, SldMode::Strict).unwrap(), 0.0);
    }

    #[test]
    fn pure_unitary_family() {
        let s = 0.5f64.sqrt();
        let plus = vec![C64::new(s, 0.0), C64::new(s, 0.0)];
        let h = ComplexMatrix::from_real_diagonal(&[0.5, -0.5]);
        assert!((qfi_pure_variance(&plus, &h).unwrap() - 1.0).abs() < 1e-15);
        let dpsi: Vec<C64> = h.mul_vec(&plus).iter().map(|z| z * -I).collect();
        assert!((qfi_pure(&plus, &dpsi).unwrap() - 1.0).abs() < 1e-15);
        let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!(qfi_pure_variance(&zero, &h).unwrap().abs() < 1e-15);
        // the same family as mixed-state input, via the support-restricted SLD
        let fam = ParametrizedFamily::unitary(DensityMatrix::pure(&plus).unwrap(), h).unwrap();
        let q = qfi(&fam, 0.4, SldMode::SupportRestricted).unwrap();
        assert!((q - 1.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn geodesic_family_has_constant_qfi_and_optimal_povm() {
        let (rho, sigma) = fixture();
        let g = shortest_geodesic(&rho, &sigma).unwrap();
        let povm = optimal_povm(&g).unwrap();
        assert_eq!(povm.len(), 2);
        let fam = ParametrizedFamily::geodesic(g, 1.0);
        for x in [0.1, 0.2, 0.3] {
            let q = qfi(&fam, x, SldMode::Strict).unwrap();
            assert!((q - 4.0).abs() < 1e-9, "{q}");
            let c = cfi(&fam, &povm, x).unwrap();
            assert!(c / q > 1.0 - 1e-6);
        }
    }

    #[test]
    fn geodesic_interval_of_fixture() {
        let (rho, sigma) = fixture();
        let g = shortest_geodesic(&rho, &sigma).unwrap();
        let (lo, hi) = geodesic_interval(&g, 1.0, 0.15).unwrap();
        let t1 = 0.991_156_586_431_192_3;
        let t2 = 2.561_952_913_226_088_8;
        assert!((hi - t1).abs() < 1e-9);
        assert!((lo - (t2 - PI)).abs() < 1e-9);
    }

    #[test]
    fn pythagoras_and_variational() {
        let mut r = ChaCha8Rng::seed_from_u64(41);
        let rho = random::density_matrix(2, &mut r);
        let psi = crate::states::purify(&rho, 2, None).unwrap();
        let h = random::hermitian(4, &mut r);
        let hv = h.mul_vec(psi.vector());
        let mean = inner(psi.vector(), &hv).re;
        let dpsi: Vec<C64> = hv.iter().zip(psi.vector()).map(|(u, p)| (u - p * mean) * -I).collect();
        let t = CompositeTangent::new(&psi, dpsi.clone()).unwrap();
        let sp = qfi_pythagoras(&psi, &t).unwrap();
        assert!((sp.qfi_probe + sp.leaked - sp.qfi_pure).abs() < 1e-10);
        assert!((sp.qfi_pure - qfi_pure_variance(psi.vector(), &h).unwrap()).abs() < 1e-10);
        let var = qfi_variational(&psi, &h, 0.0).unwrap();
        assert!((var.value - sp.qfi_probe).abs() < 1e-6, "{} {}", var.value, sp.qfi_probe);
        // the reduced family's QFI agrees with the probe part
        let h2 = h.clone();
        let psi2 = psi.clone();
        let fam = ParametrizedFamily::new(move |x| {
            let v = linalg::expm_hermitian(&h2, x)?.mul_vec(psi2.vector());
            DensityMatrix::new(linalg::reduced_outer(&v, &v, 2, 2)?)
        });
        let q = qfi(&fam, 0.0, SldMode::Strict).unwrap();
        assert!((q - sp.qfi_probe).abs() < 1e-7, "{q} {}", sp.qfi_probe);
        // the minimizer reproduces the vertical generator on the state
        let split = decompose_tangent(&psi, &t).unwrap();
        let a = linalg::apply_ancilla(&var.generator, psi.vector(), 2).unwrap();
        let b = linalg::apply_ancilla(&split.ancilla_generator, psi.vector(), 2).unwrap();
        assert!(norm(&linalg::sub_vec(&a, &b)) < 1e-5);
    }

    #[test]
    fn optimal_hamiltonian_constructive_instance() {
        let (rho, sigma) = fixture();
        let g = shortest_geodesic(&rho, &sigma).unwrap();
        let hg = GeodesicHamiltonian::from_path(&g).unwrap();
        let delta = 0.8;
        // add a term acting outside span{Psi, Psi'} with spectrum strictly inside (-delta, delta)
        let p = &ComplexMatrix::outer(hg.base().vector(), hg.base().vector())
            + &ComplexMatrix::outer(hg.tangent(), hg.tangent());
        let q = &ComplexMatrix::identity(4) - &p;
        let extra = q.scale_real(0.3);
        let h = &(&hg.matrix().scale_real(delta) + &extra) + &ComplexMatrix::identity(4).scale_real(1.5);
        let rep = check_optimal_hamiltonian(hg.base(), &h, &[0.1, 0.5, 1.3]).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!((rep.delta - delta).abs() < 1e-12);
        // an eigenstate has zero variance
        let e = eig_hermitian(&h).unwrap();
        let eig_psi = Purification::from_vector(e.vector(3), 2, 2).unwrap();
        let rep = check_optimal_hamiltonian(&eig_psi, &h, &[0.1]).unwrap();
        assert!(!rep.variance_positive);
    }

    #[test]
    fn optimal_hamiltonian_vertical_motion_fails() {
        let (rho, _) = fixture();
        let psi = crate::states::purify(&rho, 2, None).unwrap();
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let h = linalg::kron(&ComplexMatrix::identity(2), &(&x + &z.scale_real(0.1)));
        let h = &h + &linalg::kron(&z, &z).scale_real(0.05);
        let rep = check_optimal_hamiltonian(&psi, &h, &[0.1]).unwrap();
        assert!(!rep.horizontal);
        let deg = ComplexMatrix::identity(4);
        assert!(matches!(check_optimal_hamiltonian(&psi, &deg, &[]), Err(Error::DegenerateExtremes)));
    }

    #[test]
    fn local_unitary_equivalence() {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        let e1 = random::ket(6, &mut r);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e2 = linalg::apply_system(&x, &e1, 3).unwrap();
        let w = check_local_unitary_equivalence(&e1, &e2, 2, 3).unwrap();
        assert!(w.related);
        let u = w.unitary.unwrap();
        let ov = u.inner(&x).norm() / 2.0;
        assert!((ov - 1.0).abs() < 1e-8);
        let e3 = random::ket(6, &mut r);
        assert!(!check_local_unitary_equivalence(&e1, &e3, 2, 3).unwrap().related);
    }

    #[test]
    fn discontinuity_at_pure_point() {
        let rep = discontinuity_diagnostic(&diagonal_family(), 0.0, 1e-3).unwrap();
        assert_eq!(rep.kernel_dim, 1);
        assert!(rep.qfi_support.abs() < 1e-9);
        assert!((rep.jump / rep.predicted - 1.0).abs() < 0.05, "{rep:?}");
    }

    #[test]
    fn deterministic_family_is_degenerate() {
        let fam = ParametrizedFamily::new(|_| DensityMatrix::from_diagonal(&[1.0, 0.0]));
        let exp = EstimationExperiment {
            family: fam,
            povm: Povm::computational(2),
            x_true: 0.1,
            n_meas: 1000,
            replicates: 4,
            seed: 0,
            mle: MleConfig::new(-1.0, 1.0),
        };
        assert!(matches!(run_experiment(&exp), Err(Error::DegenerateLikelihood)));
    }

    #[test]
    fn experiment_is_reproducible() {
        let (rho, sigma) = fixture();
        let g = shortest_geodesic(&rho, &sigma).unwrap();
        let povm = optimal_povm(&g).unwrap();
        let (lo, hi) = geodesic_interval(&g, 1.0, 0.15).unwrap();
        let exp = EstimationExperiment {
            family: ParametrizedFamily::geodesic(g, 1.0),
            povm,
            x_true: 0.15,
            n_meas: 1000,
            replicates: 16,
            seed: 7,
            mle: MleConfig::new(lo, hi),
        };
        let a = run_experiment(&exp).unwrap();
        let b = run_experiment(&exp).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert!((a.qfi - 4.0).abs() < 1e-9);
        assert!((a.crb - 1.0 / (4000f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_small_ensembles() {
        let (rho, _) = fixture();
        let rows = heisenberg_scan(&rho, &[1, 2, 3], 1.0, 0.0).unwrap();
        for row in rows {
            let n2 = (row.probes * row.probes) as f64;
            assert_eq!(row.qfi_predicted, n2);
            for s in &row.samples {
                assert!((s.qfi - n2).abs() < 1e-6, "{row:?}");
                assert!(s.leaked < 1e-8);
            }
        }
        let too_many = ProbeEnsembleSpec::uniform(rho, 6, 1.0, 0.0);
        assert!(matches!(probe_state(&too_many, 0.1), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn enumerated_geodesics_all_have_optimal_povms() {
        let (rho, sigma) = fixture();
        for g in enumerate_geodesics(&rho, &sigma).unwrap() {
            let th = g.theta();
            let povm = optimal_povm(&g).unwrap();
            let fam = ParametrizedFamily::geodesic(g, 1.0);
            let q = qfi(&fam, 0.1 * th, SldMode::Strict).unwrap();
            let c = cfi(&fam, &povm, 0.1 * th).unwrap();
            assert!((q - 4.0).abs() < 1e-8 && c / q > 1.0 - 1e-6);
        }
    }
}
