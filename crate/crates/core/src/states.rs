//! Density matrices, purifications and the Bures geometry on them.
//!
//! A purification of an `n`-level state lives in `C^n (x) C^n_a`. Its tangent
//! space splits into a vertical part, generated by ancilla unitaries and
//! invisible after the partial trace, and a horizontal part `H (x) 1 |Psi>`
//! which the partial trace maps isometrically onto the Bures tangent space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    self, complete_unitary, eig_hermitian, inner, norm, vector_to_matrix, ComplexMatrix, HermitianEigen,
};
use crate::{random, tol, Error, Result, C64};

// ---------------------------------------------------------------------------
// Density matrices

/// A validated density matrix together with its eigendecomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    eigen: HermitianEigen,
}

/// JSON layout `{n, re, im}` shared by states and operators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (re, im) = m.to_parts();
        Self { n: m.rows(), re, im }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let m = ComplexMatrix::from_parts(&self.re, &self.im)?;
        if m.rows() != self.n || m.cols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.rows() });
        }
        Ok(m)
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        DensityMatrix::new(j.to_matrix()?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(d: DensityMatrix) -> Self {
        MatrixJson::from_matrix(&d.matrix)
    }
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace, then symmetrizes.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let eigen = eig_hermitian(&m)?;
        linalg::psd_check(&eigen)?;
        let t = m.trace().re;
        if (t - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidTrace(t));
        }
        Ok(Self { matrix: m.hermitian_part(), eigen })
    }

    /// Accepts a matrix that is a state up to rounding: symmetrizes it and,
    /// when eigenvalues in `[-tol::PSD, 0)` occur, rebuilds it with those
    /// eigenvalues set to zero.
    pub fn new_clamped(m: ComplexMatrix) -> Result<Self> {
        let h = m.hermitian_part();
        let mut eigen = eig_hermitian(&h)?;
        linalg::psd_check(&eigen)?;
        let t = h.trace().re;
        if (t - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidTrace(t));
        }
        if eigen.values[0] < 0.0 {
            for v in eigen.values.iter_mut() {
                *v = v.max(0.0);
            }
            let matrix = eigen.reconstruct().hermitian_part();
            return Ok(Self { matrix, eigen });
        }
        Ok(Self { matrix: h, eigen })
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(p))
    }

    /// `|psi><psi|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let nv = norm(psi);
        if (nv - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(nv));
        }
        Self::new_clamped(ComplexMatrix::outer(psi, psi))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::new(ComplexMatrix::identity(n).scale_real(1.0 / n as f64)).expect("valid state")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigendecomposition with ascending eigenvalues.
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen.values[0]
    }

    /// Number of eigenvalues above [`tol::RANK`].
    pub fn rank(&self) -> usize {
        self.eigen.values.iter().filter(|&&p| p > tol::RANK).count()
    }

    pub fn is_invertible(&self) -> bool {
        self.min_eigenvalue() > tol::RANK
    }

    pub fn require_invertible(&self) -> Result<()> {
        if self.is_invertible() {
            Ok(())
        } else {
            Err(Error::SingularState(self.min_eigenvalue()))
        }
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        self.eigen.map(|p| p.max(0.0).sqrt())
    }

    pub fn inv_sqrt(&self) -> Result<ComplexMatrix> {
        self.require_invertible()?;
        Ok(self.eigen.map(|p| 1.0 / p.sqrt()))
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        (&self.matrix * a).trace()
    }

    pub fn distance_to(&self, other: &DensityMatrix) -> f64 {
        (&self.matrix - &other.matrix).frobenius_norm()
    }
}

// ---------------------------------------------------------------------------
// Tangent operators

/// Traceless Hermitian operator: a tangent vector of the state manifold.
#[derive(Clone, Debug)]
pub struct TangentOperator {
    matrix: ComplexMatrix,
}

impl TangentOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, tol::TRACE)
    }

    /// Accepts a trace up to `trace_tol * max(1, |m|)` and removes it.
    pub fn with_tolerance(m: ComplexMatrix, trace_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let d = m.hermiticity_defect();
        if d > tol::HERMITIAN {
            return Err(Error::NotHermitian(d));
        }
        let h = m.hermitian_part();
        let t = h.trace().re;
        if t.abs() > trace_tol * h.frobenius_norm().max(1.0) {
            return Err(Error::NotTraceless(t));
        }
        let n = h.rows();
        let matrix = &h - &ComplexMatrix::identity(n).scale_real(t / n as f64);
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

// ---------------------------------------------------------------------------
// Fidelity and distances

/// Root fidelity `tr sqrt(sqrt(rho) sigma sqrt(rho))`.
///
/// # Panics
/// If the dimensions differ.
pub fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    assert_eq!(rho.dim(), sigma.dim(), "fidelity of states with different dimensions");
    let s = rho.sqrt();
    let inner = (&(&s * sigma.matrix()) * &s).hermitian_part();
    let e = eig_hermitian(&inner).expect("Hermitian by construction");
    // eigenvalues at rounding level would otherwise contribute their square roots
    let floor = 1e-14 * e.values.last().copied().unwrap_or(0.0).max(0.0);
    e.values.iter().filter(|&&x| x > floor).map(|&x| x.sqrt()).sum::<f64>().clamp(0.0, 1.0)
}

/// Uhlmann fidelity `(tr |sqrt(sigma) sqrt(rho)|)^2`, in `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    root_fidelity(rho, sigma).powi(2)
}

/// Bures angle `arccos sqrt(F)`, the geodesic distance.
pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    root_fidelity(rho, sigma).acos()
}

/// Bures distance `sqrt(2 - 2 sqrt(F))`.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    (2.0 - 2.0 * root_fidelity(rho, sigma)).max(0.0).sqrt()
}

/// Bures metric `g(a, b)` at an invertible state, computed in its eigenbasis.
pub fn bures_metric(rho: &DensityMatrix, a: &TangentOperator, b: &TangentOperator) -> Result<f64> {
    rho.require_invertible()?;
    let n = rho.dim();
    if a.dim() != n || b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.dim().max(b.dim()) });
    }
    let v = &rho.eigen().vectors;
    let p = &rho.eigen().values;
    let at = &(&v.adjoint() * a.matrix()) * v;
    let bt = &(&v.adjoint() * b.matrix()) * v;
    let mut g = 0.0;
    for k in 0..n {
        for l in 0..n {
            g += (at[(k, l)].conj() * bt[(k, l)]).re / (p[k] + p[l]);
        }
    }
    Ok(0.5 * g)
}

/// How the SLD treats pairs of eigenvalues that both vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SldMode {
    /// The state must be invertible.
    Strict,
    /// Matrix elements between two kernel vectors are set to zero.
    SupportRestricted,
}

/// Symmetric logarithmic derivative `L` with `{L, rho} / 2 = rho_dot`.
pub fn sld(rho: &DensityMatrix, rho_dot: &TangentOperator, mode: SldMode) -> Result<ComplexMatrix> {
    if mode == SldMode::Strict {
        rho.require_invertible()?;
    }
    let n = rho.dim();
    if rho_dot.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho_dot.dim() });
    }
    let v = &rho.eigen().vectors;
    let p: Vec<f64> = rho.eigen().values.iter().map(|&x| x.max(0.0)).collect();
    let dt = &(&v.adjoint() * rho_dot.matrix()) * v;
    let lt = ComplexMatrix::from_fn(n, n, |k, l| {
        let s = p[k] + p[l];
        if s > tol::RANK {
            dt[(k, l)] * (2.0 / s)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok((&(v * &lt) * &v.adjoint()).hermitian_part())
}

// ---------------------------------------------------------------------------
// Purifications

/// Schmidt decomposition `|Psi> = sum_k c_k |s_k> |b_k>` with descending
/// coefficients. The bases are completed to full orthonormal bases.
#[derive(Clone, Debug)]
pub struct Schmidt {
    /// `c_k = sqrt(p_k)`, length `n`, descending.
    pub coefficients: Vec<f64>,
    /// Columns `|s_k>`, eigenvectors of the reduced state.
    pub system: ComplexMatrix,
    /// Columns `|b_k>`; the first `rank` are paired with `|s_k>`.
    pub ancilla: ComplexMatrix,
    /// Number of eigenvalues `p_k` above [`tol::RANK`].
    pub rank: usize,
}

/// A unit vector in `C^n (x) C^n_a` with its Schmidt data.
#[derive(Clone, Debug)]
pub struct Purification {
    n: usize,
    n_a: usize,
    vector: Vec<C64>,
    schmidt: Schmidt,
}

impl Purification {
    /// Wraps a unit composite vector and computes its Schmidt decomposition.
    pub fn from_vector(vector: Vec<C64>, n: usize, n_a: usize) -> Result<Self> {
        let nv = norm(&vector);
        if (nv - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(nv));
        }
        let d = vector_to_matrix(&vector, n, n_a)?;
        let rho = (&d * &d.adjoint()).hermitian_part();
        let e = eig_hermitian(&rho)?;
        let order: Vec<usize> = (0..n).rev().collect();
        let p: Vec<f64> = order.iter().map(|&k| e.values[k].max(0.0)).collect();
        let system = ComplexMatrix::from_columns(&order.iter().map(|&k| e.vector(k)).collect::<Vec<_>>());
        let rank = p.iter().filter(|&&x| x > tol::RANK).count();
        let mut paired = Vec::with_capacity(rank);
        for (k, &pk) in p.iter().enumerate().take(rank) {
            let s = system.column(k);
            let b: Vec<C64> = (0..n_a)
                .map(|a| (0..n).map(|i| s[i].conj() * d[(i, a)]).sum::<C64>() / pk.sqrt())
                .collect();
            paired.push(b);
        }
        // re-orthonormalize the paired vectors before completing the basis
        let mut ortho: Vec<Vec<C64>> = Vec::with_capacity(rank);
        for b in paired {
            let mut w = b;
            for o in &ortho {
                let c = inner(o, &w);
                for (x, y) in w.iter_mut().zip(o) {
                    *x -= c * y;
                }
            }
            let nw = norm(&w);
            ortho.push(w.into_iter().map(|z| z / nw).collect());
        }
        let ancilla = complete_unitary(&ortho, n_a)?;
        let coefficients = p.iter().map(|x| x.sqrt()).collect();
        Ok(Self { n, n_a, vector, schmidt: Schmidt { coefficients, system, ancilla, rank } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn schmidt(&self) -> &Schmidt {
        &self.schmidt
    }

    /// `tr_A |Psi><Psi|`.
    pub fn reduced_state(&self) -> Result<DensityMatrix> {
        let r = linalg::reduced_outer(&self.vector, &self.vector, self.n, self.n_a)?;
        DensityMatrix::new_clamped(r)
    }

    /// Reduced state of the ancilla, `tr_S |Psi><Psi|`.
    pub fn ancilla_state(&self) -> ComplexMatrix {
        let d = vector_to_matrix(&self.vector, self.n, self.n_a).expect("consistent dimensions");
        (&d.transpose() * &d.conj()).hermitian_part()
    }

    pub fn is_product(&self) -> bool {
        self.schmidt.rank == 1
    }

    /// Coefficients `c_kl = <s_k b_l | v>` in the Schmidt bases.
    pub fn schmidt_coefficients(&self, v: &[C64]) -> Result<ComplexMatrix> {
        let d = vector_to_matrix(v, self.n, self.n_a)?;
        Ok(&(&self.schmidt.system.adjoint() * &d) * &self.schmidt.ancilla.conj())
    }

    /// Inverse of [`Purification::schmidt_coefficients`].
    pub fn from_schmidt_coefficients(&self, c: &ComplexMatrix) -> Vec<C64> {
        let d = &(&self.schmidt.system * c) * &self.schmidt.ancilla.transpose();
        linalg::matrix_to_vector(&d)
    }

    fn check_len(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.n * self.n_a {
            return Err(Error::DimensionMismatch { expected: self.n * self.n_a, found: v.len() });
        }
        Ok(())
    }
}

/// Purifies `rho` on an `n_a`-dimensional ancilla.
///
/// With `n_a >= n` the result is `sum_i sqrt(rho)|i> (x) |a_i>`, where `|a_i>`
/// are the columns of `ancilla_basis` (default: standard basis). Diagonal
/// states thus purify to `sum_i sqrt(p_i) |i>|i>`. With `rank <= n_a < n` the
/// Schmidt form `sum_k sqrt(p_k) |k>|a_k>` over the support is used.
pub fn purify(rho: &DensityMatrix, n_a: usize, ancilla_basis: Option<&ComplexMatrix>) -> Result<Purification> {
    let n = rho.dim();
    let rank = rho.rank();
    if n_a < rank {
        return Err(Error::AncillaTooSmall { n_a, rank });
    }
    let basis = match ancilla_basis {
        Some(b) => {
            if b.rows() != n_a || b.cols() != n_a {
                return Err(Error::DimensionMismatch { expected: n_a, found: b.rows() });
            }
            let defect = b.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::InvalidInput(format!("ancilla basis is not unitary ({defect:.3e})")));
            }
            b.clone()
        }
        None => ComplexMatrix::identity(n_a),
    };
    let mut d = ComplexMatrix::zeros(n, n_a);
    if n_a >= n {
        let s = rho.sqrt();
        for i in 0..n {
            for r in 0..n {
                for a in 0..n_a {
                    d[(r, a)] += s[(r, i)] * basis[(a, i)];
                }
            }
        }
    } else {
        let e = rho.eigen();
        for (slot, k) in (0..n).rev().take(rank).enumerate() {
            let sk = e.vector(k);
            let c = e.values[k].max(0.0).sqrt();
            for r in 0..n {
                for a in 0..n_a {
                    d[(r, a)] += sk[r] * basis[(a, slot)] * c;
                }
            }
        }
    }
    let mut v = linalg::matrix_to_vector(&d);
    let nv = norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    Purification::from_vector(v, n, n_a)
}

/// A vector tangent to the unit sphere at a purification: `Re<Psi|v> = 0`.
#[derive(Clone, Debug)]
pub struct CompositeTangent {
    vector: Vec<C64>,
}

impl CompositeTangent {
    pub fn new(base: &Purification, vector: Vec<C64>) -> Result<Self> {
        base.check_len(&vector)?;
        let ov = inner(base.vector(), &vector).re;
        if ov.abs() > tol::TANGENT * norm(&vector).max(1.0) {
            return Err(Error::NotOrthogonal(ov));
        }
        Ok(Self { vector })
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vector)
    }
}

/// Vertical component `(1 (x) K)|Psi>` of an arbitrary composite vector,
/// with `K = -i B`. Valid at any Schmidt rank.
#[derive(Clone, Debug)]
pub struct VerticalPart {
    pub vector: Vec<C64>,
    /// Hermitian `B` on the ancilla, standard basis.
    pub generator: ComplexMatrix,
}

/// Orthogonal projection (real inner product) onto the vertical space
/// `{(1 (x) K)|Psi> : K skew-Hermitian}`.
pub fn vertical_projection(psi: &Purification, v: &[C64]) -> Result<VerticalPart> {
    psi.check_len(v)?;
    let (n, n_a) = (psi.n, psi.n_a);
    let s = &psi.schmidt;
    let r = s.rank;
    let sq = &s.coefficients;
    let c = psi.schmidt_coefficients(v)?;
    // kt[(l, k)] = K in the ancilla Schmidt basis
    let mut kt = ComplexMatrix::zeros(n_a, n_a);
    for k in 0..r {
        for l in 0..n_a {
            if l < r {
                if l < k {
                    continue;
                }
                let z = (c[(k, l)] * sq[k] - c[(l, k)].conj() * sq[l]) / (sq[k] * sq[k] + sq[l] * sq[l]);
                kt[(l, k)] = z;
                kt[(k, l)] = -z.conj();
            } else {
                let z = c[(k, l)] / sq[k];
                kt[(l, k)] = z;
                kt[(k, l)] = -z.conj();
            }
        }
    }
    let mut vc = ComplexMatrix::zeros(n, n_a);
    for k in 0..r {
        for l in 0..n_a {
            vc[(k, l)] = kt[(l, k)] * sq[k];
        }
    }
    let vector = psi.from_schmidt_coefficients(&vc);
    let b_basis = kt.scale(C64::new(0.0, 1.0));
    let generator = b_basis.conjugate_by(&s.ancilla).hermitian_part();
    Ok(VerticalPart { vector, generator })
}

/// Horizontal/vertical split of a tangent at a full-rank purification.
#[derive(Clone, Debug)]
pub struct TangentSplit {
    /// `H_S (x) 1 |Psi>`.
    pub horizontal: Vec<C64>,
    /// `-i (1 (x) B) |Psi>`.
    pub vertical: Vec<C64>,
    /// Hermitian `H_S` with `<H_S>_Psi = 0`.
    pub system_generator: ComplexMatrix,
    /// Hermitian `B` on the ancilla.
    pub ancilla_generator: ComplexMatrix,
}

/// Splits a tangent into its horizontal and vertical components. Requires
/// full Schmidt rank.
pub fn decompose_tangent(psi: &Purification, psi_dot: &CompositeTangent) -> Result<TangentSplit> {
    let (n, n_a) = (psi.n, psi.n_a);
    if psi.schmidt.rank < n {
        return Err(Error::RankDeficientSchmidt { rank: psi.schmidt.rank, n });
    }
    let vert = vertical_projection(psi, psi_dot.vector())?;
    let horizontal = linalg::sub_vec(psi_dot.vector(), &vert.vector);
    let ch = psi.schmidt_coefficients(&horizontal)?;
    let sq = &psi.schmidt.coefficients;
    let mut h = ComplexMatrix::from_fn(n, n, |k, l| ch[(k, l)] / sq[l]).hermitian_part();
    let mean: f64 = (0..n).map(|k| h[(k, k)].re * sq[k] * sq[k]).sum();
    for k in 0..n {
        h[(k, k)] -= mean;
    }
    let system_generator = h.conjugate_by(&psi.schmidt.system).hermitian_part();
    debug_assert_eq!(horizontal.len(), n * n_a);
    Ok(TangentSplit { horizontal, vertical: vert.vector, system_generator, ancilla_generator: vert.generator })
}

/// `d pi(v) = tr_A (|Psi><v| + |v><Psi|)`, the induced change of the reduced state.
pub fn project_tangent(psi: &Purification, v: &[C64]) -> Result<ComplexMatrix> {
    let a = linalg::reduced_outer(psi.vector(), v, psi.n, psi.n_a)?;
    Ok(&a + &a.adjoint())
}

// ---------------------------------------------------------------------------
// Uhlmann optimization

#[derive(Clone, Debug)]
pub struct UhlmannResult {
    /// `max |<Psi|Phi>|` over purifications `Phi` of the second state.
    pub overlap: f64,
    /// Maximizing purification, phased so that `<Psi|Phi>` is real.
    pub phi: Purification,
    pub iterations: usize,
}

/// Maximizes `|<Psi_rho|(1 (x) U)Phi_sigma>|` over ancilla unitaries by
/// alternating polar updates from random starting unitaries.
pub fn uhlmann_optimize(rho: &DensityMatrix, sigma: &DensityMatrix, restarts: usize, seed: u64) -> Result<UhlmannResult> {
    let n = rho.dim();
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: sigma.dim() });
    }
    let psi = purify(rho, n, None)?;
    let phi0 = purify(sigma, n, None)?;
    let a = vector_to_matrix(psi.vector(), n, n)?;
    let b0 = vector_to_matrix(phi0.vector(), n, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, ComplexMatrix, usize)> = None;
    for _ in 0..restarts.max(1) {
        let u0 = random::unitary(n, &mut rng);
        let mut b = &b0 * &u0.transpose();
        let mut overlap = (&a.adjoint() * &b).trace().norm();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < tol::UHLMANN_MAX_ITER {
            iterations += 1;
            let o = &a.adjoint() * &b;
            let w = linalg::polar_unitary(&o)
                .map_err(|e| Error::ConvergenceFailure(format!("polar update failed: {e}")))?;
            b = &b * &w.adjoint();
            let next = (&a.adjoint() * &b).trace().norm();
            let delta = (next - overlap).abs();
            overlap = next;
            if delta < tol::UHLMANN_STOP {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure("Uhlmann iteration cap reached".into()));
        }
        if best.as_ref().is_none_or(|(o, _, _)| overlap > *o) {
            best = Some((overlap, b, iterations));
        }
    }
    let (overlap, b, iterations) = best.expect("at least one restart");
    let ph = (&a.adjoint() * &b).trace();
    let phase = if ph.norm() > 0.0 { ph.conj() / ph.norm() } else { C64::new(1.0, 0.0) };
    let mut v = linalg::matrix_to_vector(&b);
    for z in v.iter_mut() {
        *z *= phase;
    }
    let phi = Purification::from_vector(v, n, n)?;
    Ok(UhlmannResult { overlap, phi, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn qubit_pair() -> (DensityMatrix, DensityMatrix) {
        (DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap(), DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap())
    }

    #[test]
    fn validation_errors() {
        let not_h = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]);
        assert!(matches!(DensityMatrix::new(not_h), Err(Error::NotHermitian(_))));
        assert!(matches!(DensityMatrix::from_diagonal(&[1.2, -0.2]), Err(Error::NotPsd(_))));
        assert!(matches!(DensityMatrix::from_diagonal(&[0.5, 0.6]), Err(Error::InvalidTrace(_))));
        assert!(DensityMatrix::from_diagonal(&[1.0 + 1e-12, -1e-12]).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let (rho, _) = qubit_pair();
        let s = serde_json::to_string(&rho).unwrap();
        assert!(s.contains("\"n\":2"));
        let back: DensityMatrix = serde_json::from_str(&s).unwrap();
        assert!(back.distance_to(&rho) == 0.0);
        let bad = r#"{"n":2,"re":[[0.5,0.0],[0.0,0.6]],"im":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(bad).is_err());
    }

    #[test]
    fn fixture_fidelity_and_distances() {
        let (rho, sigma) = qubit_pair();
        let sf = 0.28f64.sqrt() + 0.18f64.sqrt();
        assert!((fidelity(&rho, &sigma) - sf * sf).abs() < 1e-14);
        assert!((fidelity(&rho, &sigma) - 0.908999).abs() < 1e-6);
        // scalar oracle: arccos and sqrt(2 - 2x) of sqrt(.28) + sqrt(.18)
        assert!((bures_angle(&rho, &sigma) - 0.306_437_383_428_909_5).abs() < 1e-12);
        assert!((bures_distance(&rho, &sigma) - 0.305_239_804_334_734_1).abs() < 1e-12);
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let mut r = rng(1);
        let a = random::ket(3, &mut r);
        let b = random::ket(3, &mut r);
        let f = fidelity(&DensityMatrix::pure(&a).unwrap(), &DensityMatrix::pure(&b).unwrap());
        assert!((f - inner(&a, &b).norm_sqr()).abs() < 1e-12, "{f} {}", inner(&a, &b).norm_sqr());
    }

    #[test]
    fn metric_of_maximally_mixed_qubit() {
        let rho = DensityMatrix::maximally_mixed(2);
        let z = TangentOperator::new(ComplexMatrix::from_real_diagonal(&[0.5, -0.5])).unwrap();
        assert!((bures_metric(&rho, &z, &z).unwrap() - 0.25).abs() < 1e-15);
        let l = sld(&rho, &z, SldMode::Strict).unwrap();
        assert!((&l - &ComplexMatrix::from_real_diagonal(&[1.0, -1.0])).frobenius_norm() < 1e-15);
    }

    #[test]
    fn metric_matches_small_distances() {
        let mut r = rng(7);
        for n in [2, 3] {
            let rho = random::density_matrix(n, &mut r);
            let dot = random::traceless_hermitian(n, &mut r).scale_real(0.2);
            let t = TangentOperator::new(dot.clone()).unwrap();
            let g = bures_metric(&rho, &t, &t).unwrap();
            let eps = 1e-3;
            let fwd = DensityMatrix::new(rho.matrix() + &dot.scale_real(eps)).unwrap();
            let bwd = DensityMatrix::new(rho.matrix() - &dot.scale_real(eps)).unwrap();
            let d2 = (bures_angle(&rho, &fwd).powi(2) + bures_angle(&rho, &bwd).powi(2)) / 2.0;
            assert!((d2 / (eps * eps) - g).abs() < 1e-5 * g, "n={n} {} {g}", d2 / (eps * eps));
        }
    }

    #[test]
    fn sld_solves_lyapunov_equation() {
        let mut r = rng(8);
        let rho = random::density_matrix(3, &mut r);
        let t = TangentOperator::new(random::traceless_hermitian(3, &mut r)).unwrap();
        let l = sld(&rho, &t, SldMode::Strict).unwrap();
        let lhs = l.anticommutator(rho.matrix()).scale_real(0.5);
        assert!((&lhs - t.matrix()).frobenius_norm() < 1e-12);
        let singular = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let tz = TangentOperator::new(ComplexMatrix::from_real_diagonal(&[1.0, -1.0])).unwrap();
        assert!(matches!(sld(&singular, &tz, SldMode::Strict), Err(Error::SingularState(_))));
        assert!(sld(&singular, &tz, SldMode::SupportRestricted).is_ok());
    }

    #[test]
    fn purification_examples() {
        let (rho, _) = qubit_pair();
        let p = purify(&rho, 2, None).unwrap();
        let v = p.vector();
        assert!((v[0].re - 0.7f64.sqrt()).abs() < 1e-15);
        assert!((v[3].re - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(v[1].norm() < 1e-15 && v[2].norm() < 1e-15);

        let bell = purify(&DensityMatrix::maximally_mixed(2), 2, None).unwrap();
        let s = 0.5f64.sqrt();
        assert!((bell.vector()[0].re - s).abs() < 1e-15 && (bell.vector()[3].re - s).abs() < 1e-15);

        let pure = DensityMatrix::pure(&random::ket(3, &mut rng(3))).unwrap();
        let pp = purify(&pure, 1, None).unwrap();
        assert!(pp.is_product());
        assert!(pp.reduced_state().unwrap().distance_to(&pure) < 1e-12);

        assert!(matches!(purify(&rho, 1, None), Err(Error::AncillaTooSmall { .. })));
    }

    #[test]
    fn purification_reduces_and_schmidt_reconstructs() {
        let mut r = rng(9);
        for (n, n_a) in [(2, 2), (3, 3), (2, 4), (3, 5)] {
            let rho = random::density_matrix(n, &mut r);
            let basis = random::unitary(n_a, &mut r);
            let p = purify(&rho, n_a, Some(&basis)).unwrap();
            assert!(p.reduced_state().unwrap().distance_to(&rho) < 1e-12);
            let c = p.schmidt_coefficients(p.vector()).unwrap();
            for k in 0..n {
                for l in 0..n_a {
                    let expect = if k == l { p.schmidt().coefficients[k] } else { 0.0 };
                    assert!((c[(k, l)] - C64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn vertical_vectors_leave_reduced_state_fixed() {
        let mut r = rng(10);
        let rho = random::density_matrix(3, &mut r);
        let p = purify(&rho, 4, None).unwrap();
        let b = random::hermitian(4, &mut r);
        let v = linalg::apply_ancilla(&b.scale(C64::new(0.0, -1.0)), p.vector(), 3).unwrap();
        assert!(project_tangent(&p, &v).unwrap().frobenius_norm() < 1e-12);
        let vp = vertical_projection(&p, &v).unwrap();
        assert!(norm(&linalg::sub_vec(&vp.vector, &v)) < 1e-12);
    }

    #[test]
    fn horizontal_vectors_have_no_vertical_part() {
        let mut r = rng(11);
        let rho = random::density_matrix(3, &mut r);
        let p = purify(&rho, 3, None).unwrap();
        let mut h = random::hermitian(3, &mut r);
        let mean = rho.expectation(&h).re;
        h = &h - &ComplexMatrix::identity(3).scale_real(mean);
        let v = linalg::apply_system(&h, p.vector(), 3).unwrap();
        let t = CompositeTangent::new(&p, v.clone()).unwrap();
        let split = decompose_tangent(&p, &t).unwrap();
        assert!(norm(&split.vertical) < 1e-12);
        assert!((&split.system_generator - &h).frobenius_norm() < 1e-10);
    }

    #[test]
    fn decomposition_is_orthogonal_and_isometric() {
        let mut r = rng(12);
        let rho = random::density_matrix(3, &mut r);
        let p = purify(&rho, 3, None).unwrap();
        let mut v = random::ket(9, &mut r);
        let ov = inner(p.vector(), &v).re;
        v = linalg::combine(C64::new(1.0, 0.0), &v, C64::new(-ov, 0.0), p.vector());
        let t = CompositeTangent::new(&p, v.clone()).unwrap();
        let s = decompose_tangent(&p, &t).unwrap();
        assert!(inner(&s.horizontal, &s.vertical).re.abs() < 1e-12);
        let nh = norm(&s.horizontal);
        let nv = norm(&s.vertical);
        assert!((nh * nh + nv * nv - t.norm().powi(2)).abs() < 1e-12);
        let hs = linalg::apply_system(&s.system_generator, p.vector(), 3).unwrap();
        assert!(norm(&linalg::sub_vec(&hs, &s.horizontal)) < 1e-10);
        let rdot = TangentOperator::new(project_tangent(&p, &s.horizontal).unwrap()).unwrap();
        let g = bures_metric(&rho, &rdot, &rdot).unwrap();
        assert!((g - nh * nh).abs() < 1e-10);
    }

    #[test]
    fn decompose_rejects_rank_deficient() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let p = purify(&pure, 2, None).unwrap();
        let t = CompositeTangent::new(&p, vec![C64::new(0.0, 0.0); 4]).unwrap();
        assert!(matches!(decompose_tangent(&p, &t), Err(Error::RankDeficientSchmidt { .. })));
    }

    #[test]
    fn uhlmann_reaches_root_fidelity() {
        let mut r = rng(13);
        for n in [2, 3] {
            let rho = random::density_matrix(n, &mut r);
            let sigma = random::density_matrix(n, &mut r);
            let res = uhlmann_optimize(&rho, &sigma, 3, 42).unwrap();
            assert!((res.overlap - root_fidelity(&rho, &sigma)).abs() < 1e-10);
            assert!(res.phi.reduced_state().unwrap().distance_to(&sigma) < 1e-10);
            let ov = inner(purify(&rho, n, None).unwrap().vector(), res.phi.vector());
            assert!(ov.im.abs() < 1e-12 && ov.re > 0.0);
        }
    }
}
