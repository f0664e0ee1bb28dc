//! Dense complex linear algebra.
//!
//! Matrices are small (a few hundred rows at most), so everything is a
//! row-major `Vec<Complex64>` and the Hermitian eigensolver is cyclic Jacobi,
//! which keeps eigenvectors orthonormal to machine precision.
//!
//! Composite system-ancilla vectors use the index `i * n_a + a`, system index
//! `i`, ancilla index `a`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::{tol, Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate real and imaginary row lists.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let rows = re.len();
        if im.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, found: im.len() });
        }
        let cols = re.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for (r, i) in re.iter().zip(im) {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            if i.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: i.len() });
            }
            data.extend(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)));
        }
        Ok(Self { rows, cols, data })
    }

    /// Splits into real and imaginary row lists.
    pub fn to_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let re = (0..self.rows).map(|i| self.row(i).iter().map(|z| z.re).collect()).collect();
        let im = (0..self.rows).map(|i| self.row(i).iter().map(|z| z.im).collect()).collect();
        (re, im)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    /// `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `tr(A^dagger B)`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Relative Frobenius deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut d = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        d.sqrt() / norm
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// `U A U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// Largest deviation of `A^dagger A` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let g = &self.adjoint() * self;
        (&g - &Self::identity(self.cols)).frobenius_norm()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

// ---------------------------------------------------------------------------
// Vectors

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `alpha a + beta b`.
pub fn combine(alpha: C64, a: &[C64], beta: C64, b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
}

pub fn scale_vec(s: C64, a: &[C64]) -> Vec<C64> {
    a.iter().map(|z| s * z).collect()
}

pub fn sub_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    combine(ONE, a, -ONE, b)
}

pub fn real_vec(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&r| C64::new(r, 0.0)).collect()
}

/// Orthonormal basis whose leading columns are the given orthonormal
/// vectors, completed by Gram-Schmidt over the standard basis in index order.
pub fn complete_unitary(leading: &[Vec<C64>], dim: usize) -> Result<ComplexMatrix> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for v in leading {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        let mut w = v.clone();
        for b in &basis {
            let c = inner(b, &w);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nw = norm(&w);
        if (nw - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(nw));
        }
        basis.push(scale_vec(C64::new(1.0 / nw, 0.0), &w));
    }
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = vec![ZERO; dim];
        w[k] = ONE;
        // two passes keep the completion orthonormal to machine precision
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-6 {
            basis.push(scale_vec(C64::new(1.0 / nw, 0.0), &w));
        }
    }
    if basis.len() != dim {
        return Err(Error::Numerical("basis completion failed".into()));
    }
    Ok(ComplexMatrix::from_columns(&basis))
}

// ---------------------------------------------------------------------------
// Tensor products and partial traces

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn check_composite(w: &ComplexMatrix, n: usize, n_a: usize) -> Result<()> {
    if !w.is_square() || w.rows != n * n_a {
        return Err(Error::DimensionMismatch { expected: n * n_a, found: w.rows });
    }
    Ok(())
}

/// Trace over the ancilla factor of an operator on `C^n (x) C^n_a`.
pub fn partial_trace_ancilla(w: &ComplexMatrix, n: usize, n_a: usize) -> Result<ComplexMatrix> {
    check_composite(w, n, n_a)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| (0..n_a).map(|a| w[(i * n_a + a, j * n_a + a)]).sum()))
}

/// Trace over the system factor of an operator on `C^n (x) C^n_a`.
pub fn partial_trace_system(w: &ComplexMatrix, n: usize, n_a: usize) -> Result<ComplexMatrix> {
    check_composite(w, n, n_a)?;
    Ok(ComplexMatrix::from_fn(n_a, n_a, |a, b| (0..n).map(|i| w[(i * n_a + a, i * n_a + b)]).sum()))
}

/// Reshapes a composite vector into its `n x n_a` coefficient matrix.
pub fn vector_to_matrix(v: &[C64], n: usize, n_a: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n_a {
        return Err(Error::DimensionMismatch { expected: n * n_a, found: v.len() });
    }
    ComplexMatrix::from_vec(n, n_a, v.to_vec())
}

pub fn matrix_to_vector(m: &ComplexMatrix) -> Vec<C64> {
    m.data.clone()
}

/// `tr_A |a><b|` for composite vectors, computed without forming the outer product.
pub fn reduced_outer(a: &[C64], b: &[C64], n: usize, n_a: usize) -> Result<ComplexMatrix> {
    let am = vector_to_matrix(a, n, n_a)?;
    let bm = vector_to_matrix(b, n, n_a)?;
    Ok(&am * &bm.adjoint())
}

/// Applies `A (x) 1` to a composite vector.
pub fn apply_system(a: &ComplexMatrix, v: &[C64], n_a: usize) -> Result<Vec<C64>> {
    let n = a.rows;
    let m = vector_to_matrix(v, a.cols, n_a)?;
    let out = a * &m;
    debug_assert_eq!(out.rows, n);
    Ok(out.data)
}

/// Applies `1 (x) B` to a composite vector.
pub fn apply_ancilla(b: &ComplexMatrix, v: &[C64], n: usize) -> Result<Vec<C64>> {
    let m = vector_to_matrix(v, n, b.cols)?;
    Ok((&m * &b.transpose()).data)
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver and matrix functions

/// Eigendecomposition `A = V diag(values) V^dagger` with ascending values.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(values)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        self.map_complex(|x| C64::new(f(x), 0.0))
    }

    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += v[(i, k)] * fv[k] * v[(j, k)].conj();
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Groups ascending eigenvalues into clusters whose neighbours differ by
    /// at most `gap`. Returns index ranges into `values`.
    pub fn clusters(&self, gap: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len() || self.values[k] - self.values[k - 1] > gap {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Orthogonal projector onto the span of eigenvectors in `range`.
    pub fn projector(&self, range: std::ops::Range<usize>) -> ComplexMatrix {
        let n = self.dim();
        let mut p = ComplexMatrix::zeros(n, n);
        for k in range {
            p += &ComplexMatrix::outer(&self.vector(k), &self.vector(k));
        }
        p
    }
}

/// Diagonalizes a Hermitian matrix. The input is symmetrized first; its
/// relative Frobenius deviation from Hermiticity must be within
/// [`tol::HERMITIAN`].
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    let defect = a.hermiticity_defect();
    if !defect.is_finite() || defect > tol::HERMITIAN {
        return Err(Error::NotHermitian(defect));
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    jacobi(a.hermitian_part())
}

fn jacobi(mut a: ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.rows;
    let mut v = ComplexMatrix::identity(n);
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let scale = a.frobenius_norm();
    let mut converged = n <= 1 || scale == 0.0;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            converged = true;
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) || r < 1e-300 {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                rotated = true;
                let e = apq / r;
                let zeta = (aqq - app) / (2.0 * r);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -e.conj() * s;
                let jqq = e.conj() * c;
                for k in 0..n {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = x * jpp + y * jqp;
                    a[(k, q)] = x * jpq + y * jqq;
                }
                for k in 0..n {
                    let x = a[(p, k)];
                    let y = a[(q, k)];
                    a[(p, k)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, k)] = jpq.conj() * x + jqq.conj() * y;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * jpp + y * jqp;
                    v[(k, q)] = x * jpq + y * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        // fix the phase: largest component real and positive
        let mut best = 0;
        for k in 1..n {
            if col[k].norm() > col[best].norm() + 1e-12 {
                best = k;
            }
        }
        let ph = col[best].conj() / col[best].norm();
        for z in col.iter_mut() {
            *z *= ph;
        }
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

/// `e^{-i t H}` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = eig_hermitian(h)?;
    Ok(e.map_complex(|x| C64::from_polar(1.0, -t * x)))
}

/// Square root of a positive semidefinite matrix; eigenvalues in
/// `[-tol::PSD, 0)` are clamped to zero.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eig_hermitian(a)?;
    psd_check(&e)?;
    Ok(e.map(|x| x.max(0.0).sqrt()))
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt_pd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eig_hermitian(a)?;
    psd_check(&e)?;
    let min = e.values[0];
    if min <= tol::RANK {
        return Err(Error::RankDeficient(min));
    }
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

pub(crate) fn psd_check(e: &HermitianEigen) -> Result<()> {
    match e.values.first() {
        Some(&min) if min < -tol::PSD => Err(Error::NotPsd(min)),
        _ => Ok(()),
    }
}

/// Polar decomposition `O = U P` with `P = |O| = sqrt(O^dagger O)`.
#[derive(Clone, Debug)]
pub struct Polar {
    pub unitary: ComplexMatrix,
    pub modulus: ComplexMatrix,
    /// Eigendecomposition of the modulus.
    pub modulus_eigen: HermitianEigen,
}

/// Polar decomposition of an invertible square matrix.
pub fn polar(o: &ComplexMatrix) -> Result<Polar> {
    if !o.is_square() {
        return Err(Error::DimensionMismatch { expected: o.rows, found: o.cols });
    }
    let gram = (&o.adjoint() * o).hermitian_part();
    let g = eig_hermitian(&gram)?;
    let singular: Vec<f64> = g.values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let smin = singular.first().copied().unwrap_or(0.0);
    let smax = singular.last().copied().unwrap_or(0.0);
    if smin <= tol::RANK * smax.max(1.0) {
        return Err(Error::RankDeficient(smin));
    }
    let modulus_eigen = HermitianEigen { values: singular, vectors: g.vectors };
    let modulus = modulus_eigen.reconstruct();
    let inv = modulus_eigen.map(|x| 1.0 / x);
    let unitary = o * &inv;
    Ok(Polar { unitary, modulus, modulus_eigen })
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(o: &ComplexMatrix) -> Result<ComplexMatrix> {
    polar(o).map(|p| p.unitary)
}

// ---------------------------------------------------------------------------
// LU based routines

fn lu(a: &ComplexMatrix) -> (ComplexMatrix, Vec<usize>, f64, f64) {
    let n = a.rows;
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if m[(i, k)].norm() > m[(piv, k)].norm() {
                piv = i;
            }
        }
        if piv != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let p = m[(k, k)];
        min_pivot = min_pivot.min(p.norm());
        if p == ZERO {
            continue;
        }
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            m[(i, k)] = f;
            for j in k + 1..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
        }
    }
    (m, perm, sign, min_pivot)
}

pub fn determinant(a: &ComplexMatrix) -> C64 {
    assert!(a.is_square());
    let (m, _, sign, _) = lu(a);
    (0..a.rows).fold(C64::new(sign, 0.0), |acc, i| acc * m[(i, i)])
}

/// Inverse by LU with partial pivoting.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    let n = a.rows;
    let (m, perm, _, min_pivot) = lu(a);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    if min_pivot <= 1e-14 * scale {
        return Err(Error::RankDeficient(min_pivot));
    }
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let mut x: Vec<C64> = (0..n).map(|i| if perm[i] == col { ONE } else { ZERO }).collect();
        for i in 0..n {
            for k in 0..i {
                let t = m[(i, k)] * x[k];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = m[(i, k)] * x[k];
                x[i] -= t;
            }
            x[i] /= m[(i, i)];
        }
        inv.set_column(col, &x);
    }
    Ok(inv)
}

/// Sines of the principal angles between the column spans of two matrices
/// with orthonormal columns, largest first.
pub fn principal_angle_sines(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, found: b.rows });
    }
    let pb = b * &b.adjoint();
    let resid = &a.clone() - &(&pb * a);
    let g = eig_hermitian(&(&resid.adjoint() * &resid).hermitian_part())?;
    let mut s: Vec<f64> = g.values.iter().map(|x| x.max(0.0).sqrt()).collect();
    s.reverse();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 8, 16] {
            let h = random::hermitian(n, &mut rng);
            let e = eig_hermitian(&h).unwrap();
            assert!((&e.reconstruct() - &h).frobenius_norm() < 1e-12 * h.frobenius_norm().max(1.0));
            assert!(e.vectors.unitarity_defect() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::from_vec(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap();
        let e = eig_hermitian(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrt_of_diagonal_and_clamp() {
        let a = ComplexMatrix::from_real_diagonal(&[4.0, 0.25, -1e-12]);
        let s = sqrt_psd(&a).unwrap();
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-15);
        assert!((s[(1, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(s[(2, 2)].re, 0.0);
        let bad = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(sqrt_psd(&bad), Err(Error::NotPsd(_))));
    }

    #[test]
    fn polar_of_diagonal_product() {
        // sqrt(diag(.4,.6)) sqrt(diag(.7,.3)) is already positive
        let o = ComplexMatrix::from_real_diagonal(&[0.28f64.sqrt(), 0.18f64.sqrt()]);
        let p = polar(&o).unwrap();
        assert!((&p.unitary - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-14);
        assert!((&p.modulus - &o).frobenius_norm() < 1e-14);
    }

    #[test]
    fn polar_random_is_unitary_times_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 4] {
            let o = random::ginibre(n, &mut rng);
            let p = polar(&o).unwrap();
            assert!(p.unitary.unitarity_defect() < 1e-10);
            assert!((&(&p.unitary * &p.modulus) - &o).frobenius_norm() < 1e-10);
            assert!(p.modulus_eigen.values[0] > 0.0);
        }
    }

    #[test]
    fn polar_rejects_singular() {
        let o = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(polar(&o), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn kron_and_partial_traces() {
        let a = ComplexMatrix::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let b = ComplexMatrix::from_real_rows(&[&[0.5, 0.0, 0.2], &[0.0, 0.25, 0.0], &[0.2, 0.0, 0.25]]);
        let w = kron(&a, &b);
        let ta = partial_trace_ancilla(&w, 2, 3).unwrap();
        let ts = partial_trace_system(&w, 2, 3).unwrap();
        assert!((&ta - &a.scale(b.trace())).frobenius_norm() < 1e-15);
        assert!((&ts - &b.scale(a.trace())).frobenius_norm() < 1e-15);
        assert!(matches!(partial_trace_ancilla(&w, 3, 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let bell = vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let r = reduced_outer(&bell, &bell, 2, 2).unwrap();
        assert!((&r - &ComplexMatrix::identity(2).scale_real(0.5)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn local_application_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random::ginibre(2, &mut rng);
        let b = random::ginibre(3, &mut rng);
        let v = random::ket(6, &mut rng);
        let lhs = apply_system(&a, &v, 3).unwrap();
        let rhs = kron(&a, &ComplexMatrix::identity(3)).mul_vec(&v);
        assert!(norm(&sub_vec(&lhs, &rhs)) < 1e-14);
        let lhs = apply_ancilla(&b, &v, 2).unwrap();
        let rhs = kron(&ComplexMatrix::identity(2), &b).mul_vec(&v);
        assert!(norm(&sub_vec(&lhs, &rhs)) < 1e-14);
    }

    #[test]
    fn determinant_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::ginibre(4, &mut rng);
        let inv = inverse(&a).unwrap();
        assert!((&(&a * &inv) - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-12);
        let d = determinant(&a) * determinant(&inv);
        assert!((d - ONE).norm() < 1e-12);
        let diag = ComplexMatrix::from_real_diagonal(&[2.0, -3.0, 0.5]);
        assert!((determinant(&diag) - c(-3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unitary_completion_keeps_leading_columns() {
        let s = 0.5f64.sqrt();
        let lead = vec![vec![c(s, 0.), c(0., 0.), c(s, 0.), c(0., 0.)]];
        let u = complete_unitary(&lead, 4).unwrap();
        assert!(u.unitarity_defect() < 1e-14);
        assert!(norm(&sub_vec(&u.column(0), &lead[0])) < 1e-15);
    }

    #[test]
    fn expm_of_pauli_y_is_rotation() {
        let y = ComplexMatrix::from_vec(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap();
        let t = 0.37;
        let u = expm_hermitian(&y, t).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]);
        assert!((&u - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn principal_angles_of_equal_and_orthogonal_spans() {
        let e0 = ComplexMatrix::from_columns(&[vec![ONE, ZERO]]);
        let e1 = ComplexMatrix::from_columns(&[vec![ZERO, ONE]]);
        assert!(principal_angle_sines(&e0, &e0).unwrap()[0] < 1e-15);
        assert!((principal_angle_sines(&e0, &e1).unwrap()[0] - 1.0).abs() < 1e-15);
    }
}
