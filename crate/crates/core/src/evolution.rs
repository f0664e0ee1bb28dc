//! Physical realization of geodesics.
//!
//! A horizontal great circle `cos t |Psi> + sin t |Psi'>` in purification
//! space is generated by the rank-two Hamiltonian
//! `H = -i(|Psi><Psi'| - |Psi'><Psi|)`, whose propagator has the closed form
//! `1 + (cos t - 1) P - sin t (|Psi><Psi'| - |Psi'><Psi|)` with `P` the
//! projector onto `span{Psi, Psi'}`. Tracing out the ancilla gives the
//! geodesic; starting from a product state it gives a channel family.
//!
//! Circuits use wire 0 as the most significant bit of the register label.
//! For a `d`-qubit system with a `d`-qubit ancilla, wires `0..d` carry the
//! system and `d..2d` the ancilla, so register index `k_S 2^d + k_A` matches
//! the system-major composite layout used everywhere else.

use serde::{Deserialize, Serialize};

use crate::geodesics::GeodesicPath;
use crate::linalg::{self, complete_unitary, inner, norm, ComplexMatrix};
use crate::states::{purify, vertical_projection, DensityMatrix, Purification};
use crate::{tol, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// Geodesic Hamiltonian

/// `H = -i(|Psi><Psi'| - |Psi'><Psi|)` for orthonormal `Psi`, horizontal `Psi'`.
#[derive(Clone, Debug)]
pub struct GeodesicHamiltonian {
    psi: Purification,
    psi_dot: Vec<C64>,
}

impl GeodesicHamiltonian {
    /// Validates `|Psi'| = 1`, `<Psi|Psi'> = 0` and horizontality.
    pub fn new(psi: Purification, psi_dot: Vec<C64>) -> Result<Self> {
        let dim = psi.n() * psi.n_a();
        if psi_dot.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi_dot.len() });
        }
        let nd = norm(&psi_dot);
        if (nd - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(nd));
        }
        let ov = inner(psi.vector(), &psi_dot).norm();
        if ov > tol::TANGENT {
            return Err(Error::NotOrthogonal(ov));
        }
        let vert = norm(&vertical_projection(&psi, &psi_dot)?.vector);
        if vert > tol::HORIZONTAL * nd {
            return Err(Error::NotHorizontal(vert));
        }
        // Orthonormalize the accepted pair so the closed-form propagator is unitary to rounding.
        let c = inner(psi.vector(), &psi_dot);
        let mut psi_dot: Vec<C64> = psi_dot.iter().zip(psi.vector()).map(|(q, p)| q - c * p).collect();
        let nq = norm(&psi_dot);
        psi_dot.iter_mut().for_each(|q| *q /= nq);
        Ok(Self { psi, psi_dot })
    }

    /// Hamiltonian whose projected orbit is the given geodesic, lifted from
    /// the canonical purification of its base point.
    pub fn from_path<P: GeodesicPath>(path: &P) -> Result<Self> {
        let rho = path.base();
        let n = rho.dim();
        let psi = purify(rho, n, None)?;
        let th = path.length();
        let mut hs = path.operator().clone();
        hs = &hs - &ComplexMatrix::identity(n).scale_real(th.cos());
        let hs = hs.scale_real(1.0 / th.sin());
        let psi_dot = linalg::apply_system(&hs, psi.vector(), n)?;
        Self::new(psi, psi_dot)
    }

    pub fn base(&self) -> &Purification {
        &self.psi
    }

    pub fn tangent(&self) -> &[C64] {
        &self.psi_dot
    }

    pub fn n(&self) -> usize {
        self.psi.n()
    }

    pub fn n_a(&self) -> usize {
        self.psi.n_a()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let a = ComplexMatrix::outer(self.psi.vector(), &self.psi_dot);
        (&a - &a.adjoint()).scale(-I)
    }

    /// `e^{-i tau H} v` from the closed form.
    pub fn propagate(&self, tau: f64, v: &[C64]) -> Vec<C64> {
        let p = self.psi.vector();
        let q = &self.psi_dot;
        let a = inner(p, v);
        let b = inner(q, v);
        let (s, c) = tau.sin_cos();
        let cp = (c - 1.0) * a - s * b;
        let cq = (c - 1.0) * b + s * a;
        v.iter().zip(p).zip(q).map(|((x, y), z)| x + cp * y + cq * z).collect()
    }

    /// `cos tau |Psi> + sin tau |Psi'>`.
    pub fn evolve_pure(&self, tau: f64) -> Vec<C64> {
        let (s, c) = tau.sin_cos();
        linalg::combine(C64::new(c, 0.0), self.psi.vector(), C64::new(s, 0.0), &self.psi_dot)
    }

    /// `e^{-i tau H}` as a dense matrix.
    pub fn unitary(&self, tau: f64) -> ComplexMatrix {
        let dim = self.psi_dot.len();
        let p = self.psi.vector();
        let q = &self.psi_dot;
        let (s, c) = tau.sin_cos();
        let mut u = ComplexMatrix::identity(dim);
        let proj = &ComplexMatrix::outer(p, p) + &ComplexMatrix::outer(q, q);
        u += &proj.scale_real(c - 1.0);
        let a = ComplexMatrix::outer(p, q);
        u += &(&a - &a.adjoint()).scale_real(-s);
        u
    }

    /// The same Hamiltonian described from the point `t` of its orbit.
    pub fn rebased(&self, t: f64) -> Result<Self> {
        let (s, c) = t.sin_cos();
        let p = self.evolve_pure(t);
        let q = linalg::combine(C64::new(-s, 0.0), self.psi.vector(), C64::new(c, 0.0), &self.psi_dot);
        let psi = Purification::from_vector(p, self.n(), self.n_a())?;
        Self::new(psi, q)
    }
}

/// `tr_A e^{-i tau H} |Psi><Psi| e^{i tau H}`.
pub fn project_evolution(h: &GeodesicHamiltonian, tau: f64) -> Result<DensityMatrix> {
    let v = h.evolve_pure(tau);
    DensityMatrix::new_clamped(linalg::reduced_outer(&v, &v, h.n(), h.n_a())?)
}

/// Channels `nu -> tr_A e^{-i tau H} (nu (x) |alpha><alpha|) e^{i tau H}`
/// for a Hamiltonian whose base vector is `|psi> (x) |alpha>`.
#[derive(Clone, Debug)]
pub struct ChannelFamily {
    hamiltonian: GeodesicHamiltonian,
    ancilla: Vec<C64>,
}

impl ChannelFamily {
    pub fn new(hamiltonian: GeodesicHamiltonian) -> Result<Self> {
        if !hamiltonian.base().is_product() {
            return Err(Error::NotProductBase);
        }
        let ancilla = hamiltonian.base().schmidt().ancilla.column(0);
        Ok(Self { hamiltonian, ancilla })
    }

    pub fn hamiltonian(&self) -> &GeodesicHamiltonian {
        &self.hamiltonian
    }

    pub fn ancilla(&self) -> &[C64] {
        &self.ancilla
    }

    /// The channel at `tau` applied to an arbitrary operator.
    pub fn apply_operator(&self, tau: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (n, n_a) = (self.hamiltonian.n(), self.hamiltonian.n_a());
        if a.rows() != n || a.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.rows() });
        }
        let w = linalg::kron(a, &ComplexMatrix::outer(&self.ancilla, &self.ancilla));
        let u = self.hamiltonian.unitary(tau);
        linalg::partial_trace_ancilla(&w.conjugate_by(&u), n, n_a)
    }

    pub fn apply(&self, tau: f64, nu: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new_clamped(self.apply_operator(tau, nu.matrix())?)
    }

    /// Choi matrix `sum_ij |i><j| (x) M(|i><j|)`.
    pub fn choi(&self, tau: f64) -> Result<ComplexMatrix> {
        let n = self.hamiltonian.n();
        let mut out = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let mut e = ComplexMatrix::zeros(n, n);
                e[(i, j)] = C64::new(1.0, 0.0);
                let m = self.apply_operator(tau, &e)?;
                for k in 0..n {
                    for l in 0..n {
                        out[(i * n + k, j * n + l)] = m[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Applies the channel at `tau` of a Hamiltonian with product base vector.
pub fn cptp_map(h: &GeodesicHamiltonian, tau: f64, nu: &DensityMatrix) -> Result<DensityMatrix> {
    ChannelFamily::new(h.clone())?.apply(tau, nu)
}

// ---------------------------------------------------------------------------
// Circuits

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// `e^{-i theta sigma_y}`, one parameter.
    Ry,
    /// Wires `[control, target]`.
    Cnot,
    /// One-qubit unitary; params are `re, im` pairs of the row-major entries.
    U1q,
    /// Dense unitary on the listed wires, first wire most significant.
    Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub params: Vec<f64>,
}

impl Gate {
    pub fn ry(wire: usize, theta: f64) -> Self {
        Self { kind: GateKind::Ry, wires: vec![wire], params: vec![theta] }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cnot, wires: vec![control, target], params: Vec::new() }
    }

    /// `U1q` for one wire, `Block` otherwise.
    pub fn unitary(wires: Vec<usize>, u: &ComplexMatrix) -> Self {
        let params = u.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
        let kind = if wires.len() == 1 { GateKind::U1q } else { GateKind::Block };
        Self { kind, wires, params }
    }

    /// Matrix acting on the gate's wires.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let k = self.wires.len();
        let bad = |msg: &str| Error::InvalidCircuit(format!("{:?} gate: {msg}", self.kind));
        match self.kind {
            GateKind::Ry => {
                if k != 1 || self.params.len() != 1 {
                    return Err(bad("needs one wire and one parameter"));
                }
                let (s, c) = self.params[0].sin_cos();
                Ok(ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]]))
            }
            GateKind::Cnot => {
                if k != 2 || !self.params.is_empty() {
                    return Err(bad("needs two wires and no parameters"));
                }
                let mut m = ComplexMatrix::zeros(4, 4);
                for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    m[(r, c)] = C64::new(1.0, 0.0);
                }
                Ok(m)
            }
            GateKind::U1q | GateKind::Block => {
                if self.kind == GateKind::U1q && k != 1 {
                    return Err(bad("needs exactly one wire"));
                }
                if k == 0 {
                    return Err(bad("needs at least one wire"));
                }
                let dim = 1usize << k;
                if self.params.len() != 2 * dim * dim {
                    return Err(bad(&format!("expected {} parameters", 2 * dim * dim)));
                }
                let data = self.params.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
                let m = ComplexMatrix::from_vec(dim, dim, data)?;
                let defect = m.unitarity_defect();
                if defect > 1e-9 {
                    return Err(bad(&format!("matrix is not unitary ({defect:.2e})")));
                }
                Ok(m)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits > tol::MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: self.qubits, limit: tol::MAX_QUBITS });
        }
        for g in &self.gates {
            for (i, &w) in g.wires.iter().enumerate() {
                if w >= self.qubits {
                    return Err(Error::InvalidCircuit(format!("wire {w} out of range")));
                }
                if g.wires[..i].contains(&w) {
                    return Err(Error::InvalidCircuit(format!("wire {w} repeated in one gate")));
                }
            }
            g.matrix()?;
        }
        Ok(())
    }
}

fn apply_gate(state: &mut [C64], qubits: usize, wires: &[usize], u: &ComplexMatrix) {
    let k = wires.len();
    let pos: Vec<usize> = wires.iter().map(|&w| qubits - 1 - w).collect();
    let mask: usize = pos.iter().map(|&p| 1usize << p).sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|l| (0..k).map(|j| ((l >> (k - 1 - j)) & 1) << pos[j]).sum())
        .collect();
    let mut local = vec![C64::new(0.0, 0.0); 1 << k];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, &o) in offsets.iter().enumerate() {
            local[l] = state[base | o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            state[base | o] = u.row(r).iter().zip(&local).map(|(a, b)| a * b).sum();
        }
    }
}

/// Runs a circuit on a dense statevector, from `|0...0>` by default.
pub fn simulate_statevector(circuit: &Circuit, input: Option<&[C64]>) -> Result<Vec<C64>> {
    circuit.validate()?;
    let dim = 1usize << circuit.qubits;
    let mut state = match input {
        Some(v) => {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            v.to_vec()
        }
        None => {
            let mut s = vec![C64::new(0.0, 0.0); dim];
            s[0] = C64::new(1.0, 0.0);
            s
        }
    };
    for g in &circuit.gates {
        apply_gate(&mut state, circuit.qubits, &g.wires, &g.matrix()?);
    }
    Ok(state)
}

/// How the circuit prepares the tangent `U_SA |1>|0>`.
#[derive(Clone, Debug)]
pub enum CircuitRecipe {
    /// `U_S` with real amplitudes `alpha_k` followed by C-NOTs from system
    /// to ancilla. Joins commuting states.
    Commuting { alpha: Vec<f64> },
    /// `U_A` on the ancilla followed by C-NOTs from ancilla to system; the
    /// tangent is `sum_k sqrt(p_k) |w_{k xor 1}>|k>`.
    Entangling,
    /// `U_SA` as one dense block with tangent `H_S (x) 1 |Psi>`.
    General { system_generator: ComplexMatrix },
}

/// A qubit circuit whose output, after tracing the ancilla, runs along a
/// geodesic through `rho`.
#[derive(Clone, Debug)]
pub struct CircuitGeodesic {
    d: usize,
    rho: DensityMatrix,
    psi: Vec<C64>,
    psi_dot: Vec<C64>,
    system_generator: ComplexMatrix,
    preparation: Vec<Gate>,
}

fn qubit_count(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Builds `U_SA` for `rho` on `d = log2 n` system qubits and as many ancillas.
pub fn build_circuit_geodesic(rho: &DensityMatrix, recipe: &CircuitRecipe) -> Result<CircuitGeodesic> {
    let n = rho.dim();
    let d = qubit_count(n)?;
    if 2 * d > tol::MAX_QUBITS {
        return Err(Error::TooManyQubits { qubits: 2 * d, limit: tol::MAX_QUBITS });
    }
    rho.require_invertible()?;
    let e = rho.eigen();
    let p: Vec<f64> = (0..n).rev().map(|k| e.values[k]).collect();
    let sqrt_p: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
    let w = ComplexMatrix::from_columns(&(0..n).rev().map(|k| e.vector(k)).collect::<Vec<_>>());
    let mut psi = vec![C64::new(0.0, 0.0); n * n];
    for k in 0..n {
        let wk = w.column(k);
        for i in 0..n {
            psi[i * n + k] = wk[i] * sqrt_p[k];
        }
    }
    let sys: Vec<usize> = (0..d).collect();
    let anc: Vec<usize> = (d..2 * d).collect();
    let mut gates = Vec::new();
    let system_generator = match recipe {
        CircuitRecipe::Commuting { alpha } => {
            if alpha.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: alpha.len() });
            }
            let ov: f64 = alpha.iter().zip(&sqrt_p).map(|(a, s)| a * s).sum();
            if ov.abs() > tol::TANGENT {
                return Err(Error::NotOrthogonal(ov));
            }
            let na = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
            if (na - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(na));
            }
            let us = complete_unitary(&[linalg::real_vec(&sqrt_p), linalg::real_vec(alpha)], n)?;
            gates.push(Gate::unitary(sys.clone(), &us));
            for i in 0..d {
                gates.push(Gate::cnot(i, d + i));
            }
            let h: Vec<f64> = alpha.iter().zip(&sqrt_p).map(|(a, s)| a / s).collect();
            ComplexMatrix::from_real_diagonal(&h).conjugate_by(&w)
        }
        CircuitRecipe::Entangling => {
            let ua = complete_unitary(&[linalg::real_vec(&sqrt_p)], n)?;
            gates.push(Gate::unitary(anc.clone(), &ua));
            for i in 0..d {
                gates.push(Gate::cnot(d + i, i));
            }
            let flip = ComplexMatrix::from_fn(n, n, |i, j| C64::new(if i == j ^ 1 { 1.0 } else { 0.0 }, 0.0));
            flip.conjugate_by(&w)
        }
        CircuitRecipe::General { system_generator } => {
            if system_generator.rows() != n || system_generator.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: system_generator.rows() });
            }
            let dh = system_generator.hermiticity_defect();
            if dh > tol::HERMITIAN {
                return Err(Error::NotHermitian(dh));
            }
            system_generator.hermitian_part()
        }
    };
    let psi_dot = linalg::apply_system(&system_generator, &psi, n)?;
    let ov = inner(&psi, &psi_dot).norm();
    if ov > tol::TANGENT {
        return Err(Error::NotOrthogonal(ov));
    }
    let nd = norm(&psi_dot);
    if (nd - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(nd));
    }
    match recipe {
        CircuitRecipe::General { .. } => {
            let mut u = complete_unitary(&[psi.clone(), psi_dot.clone()], n * n)?;
            if n > 1 {
                let c1 = u.column(1);
                let cn = u.column(n);
                u.set_column(1, &cn);
                u.set_column(n, &c1);
            }
            let all: Vec<usize> = (0..2 * d).collect();
            gates.push(Gate::unitary(all, &u));
        }
        _ => gates.push(Gate::unitary(sys, &w)),
    }
    Ok(CircuitGeodesic { d, rho: rho.clone(), psi, psi_dot, system_generator, preparation: gates })
}

impl CircuitGeodesic {
    pub fn system_qubits(&self) -> usize {
        self.d
    }

    /// `sum_k sqrt(p_k) |w_k>|k>`.
    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn psi_dot(&self) -> &[C64] {
        &self.psi_dot
    }

    /// `H_S` with `|Psi'> = H_S (x) 1 |Psi>`.
    pub fn system_generator(&self) -> &ComplexMatrix {
        &self.system_generator
    }

    /// Gates realizing `U_SA`.
    pub fn preparation(&self) -> &[Gate] {
        &self.preparation
    }

    /// `Ry(tau)` on the lowest-order system wire followed by `U_SA`.
    pub fn circuit(&self, tau: f64) -> Circuit {
        let mut c = Circuit::new(2 * self.d);
        c.push(Gate::ry(self.d - 1, tau));
        for g in &self.preparation {
            c.push(g.clone());
        }
        c
    }

    /// Reduced system state produced by [`CircuitGeodesic::circuit`].
    pub fn simulate(&self, tau: f64) -> Result<DensityMatrix> {
        let v = simulate_statevector(&self.circuit(tau), None)?;
        let n = 1usize << self.d;
        DensityMatrix::new_clamped(linalg::reduced_outer(&v, &v, n, n)?)
    }

    /// `X rho X` with `X = cos tau + sin tau H_S`.
    pub fn closed_form(&self, tau: f64) -> ComplexMatrix {
        let n = self.rho.dim();
        let (s, c) = tau.sin_cos();
        let mut x = self.system_generator.scale_real(s);
        x += &ComplexMatrix::identity(n).scale_real(c);
        (&(&x * self.rho.matrix()) * &x).hermitian_part()
    }

    pub fn hamiltonian(&self) -> Result<GeodesicHamiltonian> {
        let n = self.rho.dim();
        let psi = Purification::from_vector(self.psi.clone(), n, n)?;
        GeodesicHamiltonian::new(psi, self.psi_dot.clone())
    }
}

/// Probe circuit on `probes` system qubits (wires `0..N`) paired with
/// ancillas (wires `N..2N`): prepares
/// `(|e+>^N + e^{i phase} |e->^N) / sqrt 2` with `|e+-> = U_SA |y+->|0>`, then
/// imprints `Ry(angle)` on every pair, i.e. `e^{-i angle H_g}` per pair.
pub fn probe_circuit(rho: &DensityMatrix, probes: usize, phase: f64, angle: f64) -> Result<Circuit> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    if probes == 0 {
        return Err(Error::InvalidInput("at least one probe qubit is required".into()));
    }
    if 2 * probes > tol::MAX_QUBITS {
        return Err(Error::TooManyQubits { qubits: 2 * probes, limit: tol::MAX_QUBITS });
    }
    let pair = build_circuit_geodesic(rho, &CircuitRecipe::Entangling)?;
    let s = 0.5f64.sqrt();
    let hadamard = ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]);
    let phase_gate = ComplexMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, phase)]);
    let y_basis = ComplexMatrix::from_vec(2, 2, vec![C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, -s)])?;
    let mut c = Circuit::new(2 * probes);
    c.push(Gate::unitary(vec![0], &hadamard));
    for j in 1..probes {
        c.push(Gate::cnot(0, j));
    }
    c.push(Gate::unitary(vec![0], &phase_gate));
    for j in 0..probes {
        c.push(Gate::unitary(vec![j], &y_basis));
        c.push(Gate::ry(j, angle));
        for g in pair.preparation() {
            let wires = g.wires.iter().map(|&w| if w == 0 { j } else { probes + j }).collect();
            c.push(Gate { kind: g.kind, wires, params: g.params.clone() });
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{geodesic_to_pure, shortest_geodesic, build_geodesic, SignVector};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn fixture_h() -> GeodesicHamiltonian {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
        GeodesicHamiltonian::from_path(&shortest_geodesic(&rho, &sigma).unwrap()).unwrap()
    }

    #[test]
    fn closed_form_propagator_is_exponential() {
        let h = fixture_h();
        for tau in [0.3, 1.7, -2.2] {
            let exact = linalg::expm_hermitian(&h.matrix(), tau).unwrap();
            assert!((&exact - &h.unitary(tau)).frobenius_norm() < 1e-12);
        }
        assert!((&h.unitary(2.0 * PI) - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-12);
        let e = linalg::eig_hermitian(&h.matrix()).unwrap();
        let expect = [-1.0, 0.0, 0.0, 1.0];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_orbit_is_the_geodesic() {
        let mut r = ChaCha8Rng::seed_from_u64(31);
        let rho = random::density_matrix(3, &mut r);
        let sigma = random::density_matrix(3, &mut r);
        let g = build_geodesic(&rho, &sigma, &"+-+".parse::<SignVector>().unwrap()).unwrap();
        let h = GeodesicHamiltonian::from_path(&g).unwrap();
        for k in 0..10 {
            let tau = k as f64 * PI / 9.0;
            let a = project_evolution(&h, tau).unwrap();
            assert!((a.matrix() - &g.evaluate_matrix(tau)).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_tangents() {
        let h = fixture_h();
        let psi = h.base().clone();
        let not_unit: Vec<C64> = h.tangent().iter().map(|z| z * 2.0).collect();
        assert!(matches!(GeodesicHamiltonian::new(psi.clone(), not_unit), Err(Error::NotNormalized(_))));
        let along = psi.vector().to_vec();
        assert!(matches!(GeodesicHamiltonian::new(psi.clone(), along), Err(Error::NotOrthogonal(_))));
        // purely vertical direction generated by an ancilla flip
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let v = linalg::apply_ancilla(&x.scale(-I), psi.vector(), 2).unwrap();
        let v: Vec<C64> = v.iter().map(|z| z / norm(&v)).collect();
        assert!(matches!(GeodesicHamiltonian::new(psi, v), Err(Error::NotHorizontal(_))));
    }

    #[test]
    fn rebasing_leaves_the_hamiltonian_unchanged() {
        let h = fixture_h();
        let h2 = h.rebased(0.7).unwrap();
        assert!((&h.matrix() - &h2.matrix()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn channel_from_pure_point_is_cptp() {
        let mut r = ChaCha8Rng::seed_from_u64(32);
        let rho = random::density_matrix(2, &mut r);
        let phi = random::ket(2, &mut r);
        let path = geodesic_to_pure(&rho, &phi).unwrap();
        let h = GeodesicHamiltonian::from_path(&path).unwrap();
        assert!(matches!(ChannelFamily::new(h.clone()), Err(Error::NotProductBase)));
        let at_pure = h.rebased(path.theta1()).unwrap();
        let ch = ChannelFamily::new(at_pure).unwrap();
        let pure = DensityMatrix::pure(&phi).unwrap();
        // running the channel backwards by theta_1 returns to rho
        let back = ch.apply(-path.theta1(), &pure).unwrap();
        assert!(back.distance_to(&rho) < 1e-10);
        for k in 0..10 {
            let tau = k as f64 * 0.6;
            let choi = ch.choi(tau).unwrap();
            let e = linalg::eig_hermitian(&choi).unwrap();
            assert!(e.values[0] > -1e-10);
            let tr = linalg::partial_trace_ancilla(&choi, 2, 2).unwrap();
            assert!((&tr - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn gate_conventions() {
        let mut c = Circuit::new(2);
        c.push(Gate::ry(0, PI / 2.0));
        let v = simulate_statevector(&c, None).unwrap();
        // e^{-i pi/2 sigma_y}|0> = |1> on wire 0, the most significant bit
        assert!((v[2] - C64::new(1.0, 0.0)).norm() < 1e-15);
        c.push(Gate::cnot(0, 1));
        let v = simulate_statevector(&c, None).unwrap();
        assert!((v[3] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let json = r#"{"qubits":2,"gates":[{"kind":"ry","wires":[0],"params":[0.5]},{"kind":"cnot","wires":[0,1],"params":[]}]}"#;
        let parsed: Circuit = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.gates[1].kind, GateKind::Cnot);
        let bad = Circuit { qubits: 1, gates: vec![Gate::cnot(0, 1)] };
        assert!(matches!(bad.validate(), Err(Error::InvalidCircuit(_))));
        assert!(matches!(Circuit::new(13).validate(), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn circuit_recipes_prepare_psi_and_tangent() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let a = (0.3f64).sqrt();
        let b = -(0.7f64).sqrt();
        for recipe in [CircuitRecipe::Commuting { alpha: vec![a, b] }, CircuitRecipe::Entangling] {
            let cg = build_circuit_geodesic(&rho, &recipe).unwrap();
            let v0 = simulate_statevector(&cg.circuit(0.0), None).unwrap();
            assert!(norm(&linalg::sub_vec(&v0, cg.psi())) < 1e-12);
            let v1 = simulate_statevector(&cg.circuit(PI / 2.0), None).unwrap();
            assert!(norm(&linalg::sub_vec(&v1, cg.psi_dot())) < 1e-12);
            assert!(cg.hamiltonian().is_ok());
        }
        let ok = build_circuit_geodesic(&DensityMatrix::maximally_mixed(3), &CircuitRecipe::Entangling);
        assert!(matches!(ok, Err(Error::DimensionNotPowerOfTwo(3))));
    }

    #[test]
    fn commuting_recipe_stays_diagonal() {
        let mut r = ChaCha8Rng::seed_from_u64(33);
        let rho = random::density_matrix(4, &mut r);
        let e = rho.eigen();
        let sqrt_p: Vec<f64> = (0..4).rev().map(|k| e.values[k].sqrt()).collect();
        let mut alpha = vec![0.3, -0.2, 0.5, 0.1];
        let ov: f64 = alpha.iter().zip(&sqrt_p).map(|(a, s)| a * s).sum();
        for (a, s) in alpha.iter_mut().zip(&sqrt_p) {
            *a -= ov * s;
        }
        let na = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        alpha.iter_mut().for_each(|a| *a /= na);
        let cg = build_circuit_geodesic(&rho, &CircuitRecipe::Commuting { alpha }).unwrap();
        for tau in [0.2, 0.9, 2.0] {
            let s = cg.simulate(tau).unwrap();
            assert!(s.matrix().commutator(rho.matrix()).frobenius_norm() < 1e-10);
            assert!((s.matrix() - &cg.closed_form(tau)).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn general_recipe_follows_the_requested_geodesic() {
        let mut r = ChaCha8Rng::seed_from_u64(34);
        let rho = random::density_matrix(2, &mut r);
        let sigma = random::density_matrix(2, &mut r);
        let g = shortest_geodesic(&rho, &sigma).unwrap();
        let th = g.theta();
        let hs = (g.m() - &ComplexMatrix::identity(2).scale_real(th.cos())).scale_real(1.0 / th.sin());
        let cg = build_circuit_geodesic(&rho, &CircuitRecipe::General { system_generator: hs }).unwrap();
        let out = cg.simulate(th).unwrap();
        assert!(out.distance_to(&sigma) < 1e-10);
    }

    #[test]
    fn probe_circuit_single_pair_reproduces_pair_orbit() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let pair = build_circuit_geodesic(&rho, &CircuitRecipe::Entangling).unwrap();
        let h = pair.hamiltonian().unwrap();
        let c = probe_circuit(&rho, 1, 0.0, 0.4).unwrap();
        let v = simulate_statevector(&c, None).unwrap();
        let s = 0.5f64.sqrt();
        let e_plus = linalg::combine(C64::new(s, 0.0), pair.psi(), C64::new(0.0, s), pair.psi_dot());
        let e_minus = linalg::combine(C64::new(s, 0.0), pair.psi(), C64::new(0.0, -s), pair.psi_dot());
        let input = linalg::combine(C64::new(s, 0.0), &e_plus, C64::new(s, 0.0), &e_minus);
        let expect = linalg::expm_hermitian(&h.matrix(), 0.4).unwrap().mul_vec(&input);
        assert!(norm(&linalg::sub_vec(&v, &expect)) < 1e-12);
    }
}
