//! Bures geodesics between invertible states.
//!
//! With `sqrt(sigma) sqrt(rho) = U Lambda` (polar decomposition) every
//! Hermitian unitary `V` commuting with `Lambda` labels one geodesic from
//! `rho` to `sigma`:
//!
//! ```text
//! M       = rho^{-1/2} Lambda V rho^{-1/2}
//! cos th  = tr(Lambda V)
//! X(t)    = (sin t M + sin(th - t)) / sin th
//! g(t)    = X(t) rho X(t)
//! ```
//!
//! For non-degenerate `Lambda` there are `2^n` of them, one per sign vector.
//! Sign vectors are indexed along the eigenbasis of `Lambda` sorted by
//! descending eigenvalue, so the last entry belongs to the smallest one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::linalg::{self, eig_hermitian, inner, norm, ComplexMatrix, HermitianEigen};
use crate::states::DensityMatrix;
use crate::{tol, Error, Result, C64};

/// Eigenvalues of `V` in the descending eigenbasis of `Lambda`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("sign vector entries must be +1 or -1".into()));
        }
        Ok(Self(signs))
    }

    pub fn all_plus(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_minus(n: usize) -> Self {
        Self(vec![-1; n])
    }

    /// Sign pattern number `index` in `0..2^n`; bit `k` set means entry `k` is `-1`.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|k| if index >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// Number of `-1` entries.
    pub fn minus_count(&self) -> usize {
        self.0.iter().filter(|&&s| s < 0).count()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::InvalidInput(format!("unexpected character {c:?} in sign vector"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(signs)
    }
}

/// Anything of the form `t -> X(t) rho X(t)` with
/// `X(t) = (sin t M + sin(th - t)) / sin th`.
pub trait GeodesicPath {
    /// Start point `rho`.
    fn base(&self) -> &DensityMatrix;
    /// The operator `M`, Hermitian.
    fn operator(&self) -> &ComplexMatrix;
    /// Parameter value `th` at which the path reaches its target.
    fn length(&self) -> f64;

    fn x_operator(&self, tau: f64) -> ComplexMatrix {
        let th = self.length();
        let n = self.base().dim();
        let s = th.sin();
        let mut x = self.operator().scale_real(tau.sin() / s);
        x += &ComplexMatrix::identity(n).scale_real((th - tau).sin() / s);
        x
    }

    /// `dX/dt`.
    fn x_derivative(&self, tau: f64) -> ComplexMatrix {
        let th = self.length();
        let n = self.base().dim();
        let s = th.sin();
        let mut x = self.operator().scale_real(tau.cos() / s);
        x += &ComplexMatrix::identity(n).scale_real(-(th - tau).cos() / s);
        x
    }

    /// `X(t) rho X(t)` without validation.
    fn evaluate_matrix(&self, tau: f64) -> ComplexMatrix {
        let x = self.x_operator(tau);
        (&(&x * self.base().matrix()) * &x).hermitian_part()
    }

    /// `d/dt X rho X`.
    fn velocity(&self, tau: f64) -> ComplexMatrix {
        let x = self.x_operator(tau);
        let xd = self.x_derivative(tau);
        let a = &(&xd * self.base().matrix()) * &x;
        (&a + &a.adjoint()).hermitian_part()
    }

    /// The state at parameter `tau`. The curve is `pi`-periodic, so any real
    /// `tau` is accepted.
    fn evaluate(&self, tau: f64) -> Result<DensityMatrix> {
        DensityMatrix::new_clamped(self.evaluate_matrix(tau))
    }
}

/// Cluster label per entry of a sorted list, splitting at gaps above `DEGENERATE`.
fn cluster_labels(sorted: &[f64]) -> Vec<usize> {
    let mut labels = Vec::with_capacity(sorted.len());
    let mut c = 0;
    for (k, x) in sorted.iter().enumerate() {
        if k > 0 && (sorted[k - 1] - x).abs() > tol::DEGENERATE {
            c += 1;
        }
        labels.push(c);
    }
    labels
}

/// `"{0.5, 0.5} {0.2}"`: eigenvalues of `Lambda` grouped by cluster.
fn describe_clusters(lambda: &[f64], labels: &[usize]) -> String {
    let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
    for (l, &c) in lambda.iter().zip(labels) {
        match groups.iter_mut().find(|g| g.0 == c) {
            Some(g) => g.1.push(format!("{l:.9}")),
            None => groups.push((c, vec![format!("{l:.9}")])),
        }
    }
    groups.iter().map(|g| format!("{{{}}}", g.1.join(", "))).collect::<Vec<_>>().join(" ")
}

/// Shared data of a pair of invertible endpoints.
#[derive(Clone, Debug)]
struct Endpoints {
    rho: DensityMatrix,
    sigma: DensityMatrix,
    rho_inv_sqrt: ComplexMatrix,
    polar_unitary: ComplexMatrix,
    /// Eigenvalues of `Lambda`, descending.
    lambda: Vec<f64>,
    /// Matching eigenvectors as columns.
    basis: ComplexMatrix,
    /// Cluster label of each descending index.
    cluster: Vec<usize>,
}

impl Endpoints {
    fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        let n = rho.dim();
        if sigma.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: sigma.dim() });
        }
        rho.require_invertible()?;
        sigma.require_invertible()?;
        if rho.distance_to(sigma) < 1e-12 {
            return Err(Error::StatesEqual);
        }
        let o = &sigma.sqrt() * &rho.sqrt();
        let p = linalg::polar(&o)?;
        let e: &HermitianEigen = &p.modulus_eigen;
        let clusters = e.clusters(tol::DEGENERATE);
        let mut asc_cluster = vec![0; n];
        for (c, r) in clusters.iter().enumerate() {
            for k in r.clone() {
                asc_cluster[k] = c;
            }
        }
        let lambda: Vec<f64> = (0..n).rev().map(|k| e.values[k]).collect();
        let basis = ComplexMatrix::from_columns(&(0..n).rev().map(|k| e.vector(k)).collect::<Vec<_>>());
        let cluster = (0..n).rev().map(|k| asc_cluster[k]).collect();
        Ok(Self {
            rho: rho.clone(),
            sigma: sigma.clone(),
            rho_inv_sqrt: rho.inv_sqrt()?,
            polar_unitary: p.unitary,
            lambda,
            basis,
            cluster,
        })
    }

    fn is_degenerate(&self) -> bool {
        let mut seen = self.cluster.clone();
        seen.dedup();
        seen.len() < self.cluster.len()
    }

    fn degenerate(&self) -> Error {
        Error::DegenerateLambda { clusters: describe_clusters(&self.lambda, &self.cluster) }
    }

    fn spec(&self, signs: &SignVector) -> Result<GeodesicSpec> {
        let n = self.rho.dim();
        if signs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: signs.len() });
        }
        let s = signs.as_slice();
        for i in 0..n {
            for j in i + 1..n {
                if self.cluster[i] == self.cluster[j] && s[i] != s[j] {
                    return Err(self.degenerate());
                }
            }
        }
        let v_diag: Vec<C64> = s.iter().map(|&x| C64::new(f64::from(x), 0.0)).collect();
        let lv_diag: Vec<C64> = s.iter().zip(&self.lambda).map(|(&x, &l)| C64::new(f64::from(x) * l, 0.0)).collect();
        let b = &self.basis;
        let v = ComplexMatrix::from_diagonal(&v_diag).conjugate_by(b).hermitian_part();
        let lv = ComplexMatrix::from_diagonal(&lv_diag).conjugate_by(b).hermitian_part();
        let m = (&(&self.rho_inv_sqrt * &lv) * &self.rho_inv_sqrt).hermitian_part();
        let cos_theta: f64 = lv_diag.iter().map(|z| z.re).sum();
        let theta = cos_theta.clamp(-1.0, 1.0).acos();
        if theta.sin() < 1e-12 {
            return Err(Error::Numerical("geodesic length is 0 or pi".into()));
        }
        Ok(GeodesicSpec {
            rho: self.rho.clone(),
            sigma: self.sigma.clone(),
            signs: signs.clone(),
            lambda: self.lambda.clone(),
            lambda_basis: self.basis.clone(),
            polar_unitary: self.polar_unitary.clone(),
            v,
            m,
            theta,
        })
    }
}

/// One geodesic from `rho` to `sigma`.
#[derive(Clone, Debug)]
pub struct GeodesicSpec {
    rho: DensityMatrix,
    sigma: DensityMatrix,
    signs: SignVector,
    lambda: Vec<f64>,
    lambda_basis: ComplexMatrix,
    polar_unitary: ComplexMatrix,
    v: ComplexMatrix,
    m: ComplexMatrix,
    theta: f64,
}

impl GeodesicSpec {
    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn signs(&self) -> &SignVector {
        &self.signs
    }

    /// Geodesic length `theta_V`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Eigenvalues of `Lambda = |sqrt(sigma) sqrt(rho)|`, descending.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Eigenvectors of `Lambda` as columns, matching [`GeodesicSpec::lambda`].
    pub fn lambda_basis(&self) -> &ComplexMatrix {
        &self.lambda_basis
    }

    /// `Lambda` as a matrix.
    pub fn lambda_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&self.lambda).conjugate_by(&self.lambda_basis).hermitian_part()
    }

    /// Unitary factor `U` of `sqrt(sigma) sqrt(rho) = U Lambda`.
    pub fn polar_unitary(&self) -> &ComplexMatrix {
        &self.polar_unitary
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn m(&self) -> &ComplexMatrix {
        &self.m
    }
}

impl GeodesicPath for GeodesicSpec {
    fn base(&self) -> &DensityMatrix {
        &self.rho
    }
    fn operator(&self) -> &ComplexMatrix {
        &self.m
    }
    fn length(&self) -> f64 {
        self.theta
    }
}

/// Geodesic from `rho` to `sigma` with the given sign vector.
pub fn build_geodesic(rho: &DensityMatrix, sigma: &DensityMatrix, signs: &SignVector) -> Result<GeodesicSpec> {
    Endpoints::new(rho, sigma)?.spec(signs)
}

/// Shortest geodesic, `V = 1`.
pub fn shortest_geodesic(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<GeodesicSpec> {
    build_geodesic(rho, sigma, &SignVector::all_plus(rho.dim()))
}

/// All `2^n` geodesics, sorted by length. Requires non-degenerate `Lambda`.
pub fn enumerate_geodesics(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Vec<GeodesicSpec>> {
    let ends = Endpoints::new(rho, sigma)?;
    let n = rho.dim();
    if n > 16 {
        return Err(Error::InvalidInput(format!("enumeration of 2^{n} geodesics is not supported")));
    }
    if ends.is_degenerate() {
        return Err(ends.degenerate());
    }
    let mut out = (0..1usize << n).map(|i| ends.spec(&SignVector::from_index(i, n))).collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Commuting endpoints

fn common_eigenbasis(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ComplexMatrix> {
    let n = rho.dim();
    let e = rho.eigen();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for r in e.clusters(tol::DEGENERATE) {
        let block: Vec<Vec<C64>> = r.clone().map(|k| e.vector(k)).collect();
        let p = ComplexMatrix::from_columns(&block);
        let restricted = (&(&p.adjoint() * sigma.matrix()) * &p).hermitian_part();
        let re = eig_hermitian(&restricted)?;
        let rotated = &p * &re.vectors;
        for j in 0..block.len() {
            cols.push(rotated.column(j));
        }
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

/// State at `tau` on the geodesic between commuting states, from the scalar
/// population formula in their common eigenbasis.
pub fn evaluate_commuting(rho: &DensityMatrix, sigma: &DensityMatrix, signs: &SignVector, tau: f64) -> Result<DensityMatrix> {
    let n = rho.dim();
    if sigma.dim() != n || signs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: sigma.dim().max(signs.len()) });
    }
    rho.require_invertible()?;
    sigma.require_invertible()?;
    let c = rho.matrix().commutator(sigma.matrix()).frobenius_norm();
    if c > 1e-10 {
        return Err(Error::NonCommuting(c));
    }
    if rho.distance_to(sigma) < 1e-12 {
        return Err(Error::StatesEqual);
    }
    let basis = common_eigenbasis(rho, sigma)?;
    let diag = |m: &ComplexMatrix| -> Vec<f64> {
        (0..n).map(|k| inner(&basis.column(k), &m.mul_vec(&basis.column(k))).re.max(0.0)).collect()
    };
    let p = diag(rho.matrix());
    let q = diag(sigma.matrix());
    let lambda: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[j].total_cmp(&lambda[i]));
    let mut v = vec![0.0; n];
    for (slot, &k) in order.iter().enumerate() {
        v[k] = f64::from(signs.as_slice()[slot]);
    }
    for i in 0..n {
        for j in 0..n {
            if (lambda[i] - lambda[j]).abs() <= tol::DEGENERATE && v[i] != v[j] {
                let sorted: Vec<f64> = order.iter().map(|&k| lambda[k]).collect();
                let labels = cluster_labels(&sorted);
                return Err(Error::DegenerateLambda { clusters: describe_clusters(&sorted, &labels) });
            }
        }
    }
    let cos_theta: f64 = (0..n).map(|k| lambda[k] * v[k]).sum();
    let theta = cos_theta.clamp(-1.0, 1.0).acos();
    let s = theta.sin();
    let pops: Vec<f64> = (0..n)
        .map(|k| (((theta - tau).sin() * p[k].sqrt() + v[k] * tau.sin() * q[k].sqrt()) / s).powi(2))
        .collect();
    let d = ComplexMatrix::from_real_diagonal(&pops).conjugate_by(&basis);
    DensityMatrix::new_clamped(d)
}

// ---------------------------------------------------------------------------
// Pure target

/// Geodesic from an invertible `rho` to a pure state `|phi><phi|`, reached
/// at `theta_1 = arccos sqrt(<phi|rho|phi>)`.
#[derive(Clone, Debug)]
pub struct PureTargetGeodesic {
    rho: DensityMatrix,
    phi: Vec<C64>,
    theta1: f64,
    m: ComplexMatrix,
}

/// Builds the geodesic from `rho` to the pure state `phi`.
pub fn geodesic_to_pure(rho: &DensityMatrix, phi: &[C64]) -> Result<PureTargetGeodesic> {
    let n = rho.dim();
    if phi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phi.len() });
    }
    rho.require_invertible()?;
    let nv = norm(phi);
    if (nv - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(nv));
    }
    let c = inner(phi, &rho.matrix().mul_vec(phi)).re;
    if c <= 1e-14 {
        return Err(Error::OrthogonalTarget);
    }
    let theta1 = c.min(1.0).sqrt().acos();
    if theta1 < 1e-12 {
        return Err(Error::StatesEqual);
    }
    let m = ComplexMatrix::outer(phi, phi).scale_real(1.0 / theta1.cos());
    Ok(PureTargetGeodesic { rho: rho.clone(), phi: phi.to_vec(), theta1, m })
}

impl PureTargetGeodesic {
    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn target(&self) -> &[C64] {
        &self.phi
    }

    /// Closed form written with the anticommutator of `rho` and `|phi><phi|`.
    pub fn evaluate_closed_form(&self, tau: f64) -> ComplexMatrix {
        let t1 = self.theta1;
        let p = ComplexMatrix::outer(&self.phi, &self.phi);
        let a = (t1 - tau).sin();
        let b = tau.sin();
        let mut out = self.rho.matrix().scale_real(a * a);
        out += &p.scale_real(b * b);
        out += &self.rho.matrix().anticommutator(&p).scale_real(a * b / t1.cos());
        out.scale_real(1.0 / (t1.sin() * t1.sin()))
    }

    /// Where the path meets the boundary again, with kernel `|phi>`.
    pub fn second_boundary_time(&self) -> f64 {
        self.theta1 + PI / 2.0
    }

    /// Whether `phi` is an eigenvector of `rho`.
    pub fn target_is_eigenvector(&self) -> bool {
        let rp = self.rho.matrix().mul_vec(&self.phi);
        let c = inner(&self.phi, &rp);
        norm(&linalg::combine(C64::new(1.0, 0.0), &rp, -c, &self.phi)) < 1e-10
    }

    /// `Pi rho Pi / sin^2 theta_1` with `Pi` the projector orthogonal to `phi`.
    pub fn complement_state(&self) -> Result<DensityMatrix> {
        let n = self.rho.dim();
        let pi = &ComplexMatrix::identity(n) - &ComplexMatrix::outer(&self.phi, &self.phi);
        let s = self.theta1.sin();
        DensityMatrix::new_clamped((&(&pi * self.rho.matrix()) * &pi).scale_real(1.0 / (s * s)))
    }
}

impl GeodesicPath for PureTargetGeodesic {
    fn base(&self) -> &DensityMatrix {
        &self.rho
    }
    fn operator(&self) -> &ComplexMatrix {
        &self.m
    }
    fn length(&self) -> f64 {
        self.theta1
    }
}

// ---------------------------------------------------------------------------
// Boundary intersections

/// A parameter where the closed geodesic leaves the invertible states.
#[derive(Clone, Debug)]
pub struct BoundaryIntersection {
    pub tau: f64,
    /// Eigenvalue of `M` responsible for this intersection.
    pub mu: f64,
    pub multiplicity: usize,
    /// Orthonormal basis of the kernel of the state at `tau`, as columns.
    pub kernel_basis: ComplexMatrix,
    pub state: DensityMatrix,
}

/// One intersection per distinct eigenvalue `mu` of `M`, at
/// `cot tau = (cos th - mu) / sin th`, sorted by `tau` in `(0, pi)`.
pub fn boundary_intersections<P: GeodesicPath>(path: &P) -> Result<Vec<BoundaryIntersection>> {
    let e = eig_hermitian(path.operator())?;
    let th = path.length();
    let (s, c) = th.sin_cos();
    let scale = e.values.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    let mut out = Vec::new();
    for r in e.clusters(tol::DEGENERATE * scale) {
        let m = r.len();
        let mu = r.clone().map(|k| e.values[k]).sum::<f64>() / m as f64;
        let mut tau = s.atan2(c - mu);
        if m == 1 {
            tau = polish(path, tau);
        }
        if tau <= 1e-12 || tau >= PI - 1e-12 {
            continue;
        }
        let kernel_basis = ComplexMatrix::from_columns(&r.clone().map(|k| e.vector(k)).collect::<Vec<_>>());
        let state = path.evaluate(tau)?;
        out.push(BoundaryIntersection { tau, mu, multiplicity: m, kernel_basis, state });
    }
    out.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    Ok(out)
}

/// One Newton step on `det X(tau)` at a simple root.
fn polish<P: GeodesicPath>(path: &P, tau: f64) -> f64 {
    let det = |t: f64| linalg::determinant(&path.x_operator(t)).re;
    let h = 1e-7;
    let d = det(tau);
    let dd = (det(tau + h) - det(tau - h)) / (2.0 * h);
    if dd == 0.0 || !dd.is_finite() {
        return tau;
    }
    let step = d / dd;
    if step.is_finite() && step.abs() < 1e-6 {
        tau - step
    } else {
        tau
    }
}

// ---------------------------------------------------------------------------
// Time shift

/// The same geodesic re-anchored at `rho_t = g(t)`, as a geodesic from
/// `rho_t` to `sigma`. The sign vector of the result is read off the
/// explicitly computed `V_t = Lambda_t^{-1} sqrt(rho_t) M X(t)^{-1} sqrt(rho_t)`.
pub fn time_shift(spec: &GeodesicSpec, t: f64) -> Result<GeodesicSpec> {
    let th = spec.theta;
    if !(0.0..th).contains(&t) {
        return Err(Error::InvalidInput(format!("shift {t} outside [0, {th})")));
    }
    if t == 0.0 {
        return Ok(spec.clone());
    }
    let x = spec.x_operator(t);
    let xe = eig_hermitian(&x)?;
    let xmin = xe.values.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));
    if xmin <= tol::RANK {
        return Err(Error::AtBoundary);
    }
    let rho_t = spec.evaluate(t)?;
    if !rho_t.is_invertible() {
        return Err(Error::AtBoundary);
    }
    let x_inv = xe.map(|v| 1.0 / v);
    let m_t = &spec.m * &x_inv;
    let ends = Endpoints::new(&rho_t, &spec.sigma)?;
    let sq = rho_t.sqrt();
    let lam_inv = ComplexMatrix::from_real_diagonal(&ends.lambda.iter().map(|l| 1.0 / l).collect::<Vec<_>>())
        .conjugate_by(&ends.basis);
    let v_t = &(&(&lam_inv * &sq) * &m_t) * &sq;
    let n = rho_t.dim();
    let herm = (&v_t - &v_t.adjoint()).frobenius_norm();
    let invol = (&(&v_t * &v_t) - &ComplexMatrix::identity(n)).frobenius_norm();
    let lam = ComplexMatrix::from_real_diagonal(&ends.lambda).conjugate_by(&ends.basis);
    let comm = v_t.commutator(&lam).frobenius_norm();
    if herm > 1e-6 || invol > 1e-6 || comm > 1e-6 {
        return Err(Error::Numerical(format!(
            "shifted V is not a Hermitian unitary commuting with Lambda ({herm:.1e}, {invol:.1e}, {comm:.1e})"
        )));
    }
    let signs = SignVector::new(
        (0..n)
            .map(|k| {
                let b = ends.basis.column(k);
                if inner(&b, &v_t.mul_vec(&b)).re >= 0.0 { 1 } else { -1 }
            })
            .collect(),
    )?;
    let shifted = ends.spec(&signs)?;
    let dm = (&shifted.m - &m_t).frobenius_norm();
    let dth = (shifted.theta - (th - t)).abs();
    if dm > 1e-6 * spec.m.frobenius_norm().max(1.0) || dth > 1e-8 {
        return Err(Error::Numerical(format!("time shift inconsistent (|dM| {dm:.1e}, |dtheta| {dth:.1e})")));
    }
    Ok(shifted)
}
