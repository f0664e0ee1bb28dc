//! Random states and operators for tests, restarts and Monte Carlo.
//!
//! All generators take an explicit RNG so callers control seeding.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{complete_unitary, ComplexMatrix};
use crate::states::DensityMatrix;
use crate::C64;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Square matrix of independent standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(n, rng).hermitian_part()
}

pub fn traceless_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let h = hermitian(n, rng);
    let t = h.trace().re / n as f64;
    &h - &ComplexMatrix::identity(n).scale_real(t)
}

/// Haar-random unit vector.
pub fn ket<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let nv = crate::linalg::norm(&v);
    v.into_iter().map(|z| z / nv).collect()
}

/// Haar-random unitary from Gram-Schmidt on Gaussian columns.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let ov = crate::linalg::inner(c, &v);
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= ov * y;
                }
            }
        }
        let nv = crate::linalg::norm(&v);
        if nv > 1e-6 {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    complete_unitary(&cols, n).expect("orthonormal columns")
}

/// Random full-rank state `G G^dagger / tr(G G^dagger)`.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    loop {
        let g = ginibre(n, rng);
        let w = &g * &g.adjoint();
        let w = w.scale_real(1.0 / w.trace().re);
        if let Ok(d) = DensityMatrix::new(w) {
            if d.min_eigenvalue() > 1e-4 {
                return d;
            }
        }
    }
}

/// Random POVM with `k` elements `S^{-1/2} G_j S^{-1/2}`, `S = sum_j G_j`.
pub fn povm_elements<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let gs: Vec<ComplexMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(n, rng);
            (&g * &g.adjoint()).hermitian_part()
        })
        .collect();
    let mut s = ComplexMatrix::zeros(n, n);
    for g in &gs {
        s += g;
    }
    let r = crate::linalg::inv_sqrt_pd(&s).expect("sum of Gram matrices is invertible");
    gs.iter().map(|g| (&(&r * g) * &r).hermitian_part()).collect()
}
