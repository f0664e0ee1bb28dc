//! End-to-end acceptance checks shared by the test suite and `selfcheck`.
//!
//! Every check uses fixed seeds, so repeated runs give identical reports.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evolution::{build_circuit_geodesic, project_evolution, ChannelFamily, CircuitRecipe, GeodesicHamiltonian};
use crate::geodesics::{boundary_intersections, enumerate_geodesics, geodesic_to_pure, shortest_geodesic, GeodesicPath, GeodesicSpec};
use crate::linalg::{self, eig_hermitian, inner, ComplexMatrix};
use crate::metrology::{
    cfi, geodesic_interval, heisenberg_scan, optimal_povm, qfi, qfi_pure_variance, qfi_pythagoras, qfi_variational,
    run_experiment, EstimationExperiment, MleConfig, ParametrizedFamily, Povm,
};
use crate::states::{
    bures_metric, purify, root_fidelity, sld, uhlmann_optimize, CompositeTangent, DensityMatrix, SldMode, TangentOperator,
};
use crate::{random, Result, C64};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {} ({:.2} s)", self.id, self.name, self.detail, self.seconds)
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(usize, &str, Check); 10] = [
    (1, "endpoints and unit speed", endpoints_and_speed),
    (2, "geodesic count and lengths", fixture_lengths),
    (3, "boundary census", boundary_census),
    (4, "Hamiltonian lift and channels", hamiltonian_lift),
    (5, "circuit agreement", circuit_agreement),
    (6, "QFI identities", qfi_identities),
    (7, "metrology optimality", metrology_optimality),
    (8, "Cramer-Rao saturation", cramer_rao),
    (9, "Heisenberg scaling", heisenberg),
    (10, "Uhlmann oracle", uhlmann),
];

/// Runs one criterion by number.
pub fn run(id: usize) -> Option<CriterionResult> {
    let &(id, name, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CriterionResult { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run(c.0)).collect()
}

fn fixture() -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((DensityMatrix::from_diagonal(&[0.7, 0.3])?, DensityMatrix::from_diagonal(&[0.4, 0.6])?))
}

/// Random invertible pairs: `qubits` in dimension 2 then `qutrits` in dimension 3.
fn random_pairs(seed: u64, qubits: usize, qutrits: usize) -> Vec<(DensityMatrix, DensityMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (n, count) in [(2, qubits), (3, qutrits)] {
        for _ in 0..count {
            let a = random::density_matrix(n, &mut rng);
            let b = random::density_matrix(n, &mut rng);
            out.push((a, b));
        }
    }
    out
}

fn speed_defect(g: &GeodesicSpec, tau: f64, base: &DensityMatrix) -> Result<f64> {
    let h = 1e-5;
    let v = (&g.evaluate_matrix(tau + h) - &g.evaluate_matrix(tau - h)).scale_real(0.5 / h);
    let t = TangentOperator::with_tolerance(v, 1e-8)?;
    Ok((4.0 * bures_metric(base, &t, &t)? - 4.0).abs())
}

fn endpoints_and_speed() -> Result<(bool, String)> {
    let start = Instant::now();
    let (mut end, mut speed, mut count) = (0.0f64, 0.0f64, 0);
    for (rho, sigma) in random_pairs(101, 25, 10) {
        for g in enumerate_geodesics(&rho, &sigma)? {
            end = end.max((&g.evaluate_matrix(0.0) - rho.matrix()).frobenius_norm());
            end = end.max((&g.evaluate_matrix(g.theta()) - sigma.matrix()).frobenius_norm());
            speed = speed.max(speed_defect(&g, 0.0, &rho)?);
            speed = speed.max(speed_defect(&g, g.theta(), &sigma)?);
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = end <= 1e-9 && speed <= 1e-4 && secs < 30.0;
    Ok((ok, format!("{count} geodesics, max endpoint error {end:.2e}, max |4g-4| {speed:.2e}")))
}

fn fixture_lengths() -> Result<(bool, String)> {
    let (rho, sigma) = fixture()?;
    let specs = enumerate_geodesics(&rho, &sigma)?;
    // scalar oracle: cos th = sum_k s_k sqrt(p_k q_k) for commuting states
    let (a, b) = ((0.7f64 * 0.4).sqrt(), (0.3f64 * 0.6).sqrt());
    let mut oracle: Vec<f64> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|(s, t)| (s * a + t * b).acos())
        .collect();
    oracle.sort_by(f64::total_cmp);
    let mut dev = 0.0f64;
    for (g, o) in specs.iter().zip(&oracle) {
        dev = dev.max((g.theta() - o).abs());
    }
    let lambda_min = specs[0].lambda().iter().copied().fold(f64::INFINITY, f64::min);
    let rel = (specs[1].theta().cos() - (specs[0].theta().cos() - 2.0 * lambda_min)).abs();
    let thetas: Vec<String> = specs.iter().map(|g| format!("{:.7}", g.theta())).collect();
    let ok = specs.len() == 4 && dev <= 1e-5 && rel <= 1e-10;
    Ok((ok, format!("{} geodesics, theta = {{{}}}, max |dtheta| {dev:.1e}, cos relation {rel:.1e}", specs.len(), thetas.join(", "))))
}

/// Zeros of `det X` on `(0, pi]` by a uniform scan and bisection.
fn det_zeros(g: &GeodesicSpec) -> Vec<f64> {
    let det = |t: f64| linalg::determinant(&g.x_operator(t)).re;
    let steps = 4000;
    let mut out = Vec::new();
    let mut prev_t = 1e-9;
    let mut prev = det(prev_t);
    for k in 1..=steps {
        let t = PI * k as f64 / steps as f64;
        let d = det(t);
        if d == 0.0 {
            out.push(t);
        } else if prev != 0.0 && (d > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = det(mid);
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev = d;
    }
    out
}

fn boundary_census() -> Result<(bool, String)> {
    let (rho, sigma) = fixture()?;
    let mut pairs = vec![(rho, sigma)];
    pairs.extend(random_pairs(103, 5, 3));
    let (mut ok, mut specs, mut worst_angle, mut worst_tau) = (true, 0, 0.0f64, 0.0f64);
    for (rho, sigma) in pairs {
        for g in enumerate_geodesics(&rho, &sigma)? {
            specs += 1;
            let n = rho.dim();
            let em = eig_hermitian(g.m())?;
            let clusters = em.clusters(1e-8);
            let zeros = det_zeros(&g);
            let hits = boundary_intersections(&g)?;
            ok &= zeros.len() == clusters.len() && hits.len() == clusters.len();
            for (z, h) in zeros.iter().zip(&hits) {
                worst_tau = worst_tau.max((z - h.tau).abs());
            }
            for h in &hits {
                let m = h.multiplicity;
                ok &= h.state.rank() == n - m;
                // kernel from the state itself, against M's eigenspace for mu
                let es = h.state.eigen();
                let kernel = ComplexMatrix::from_columns(&(0..m).map(|k| es.vector(k)).collect::<Vec<_>>());
                let r = clusters.iter().find(|r: &&std::ops::Range<usize>| (*r).clone().any(|k: usize| (em.values[k] - h.mu).abs() < 1e-8));
                let Some(r) = r else {
                    ok = false;
                    continue;
                };
                let eigspace = ComplexMatrix::from_columns(&r.clone().map(|k| em.vector(k)).collect::<Vec<_>>());
                for s in linalg::principal_angle_sines(&kernel, &eigspace)? {
                    worst_angle = worst_angle.max(s);
                }
            }
            let before = hits.iter().filter(|h| h.tau < g.theta()).map(|h| h.multiplicity).sum::<usize>();
            ok &= before == g.signs().minus_count();
        }
    }
    ok &= worst_angle <= 1e-7 && worst_tau <= 1e-8;
    Ok((ok, format!("{specs} specs, max kernel angle sine {worst_angle:.1e}, max |tau_scan - tau| {worst_tau:.1e}")))
}

fn hamiltonian_lift() -> Result<(bool, String)> {
    let (rho, sigma) = fixture()?;
    let mut pairs = vec![(rho, sigma)];
    pairs.extend(random_pairs(104, 4, 3));
    let (mut lift, mut period) = (0.0f64, 0.0f64);
    let mut specs = 0;
    for (rho, sigma) in &pairs {
        for g in enumerate_geodesics(rho, sigma)? {
            specs += 1;
            let h = GeodesicHamiltonian::from_path(&g)?;
            for k in 0..20 {
                let tau = PI * k as f64 / 19.0;
                let a = project_evolution(&h, tau)?;
                lift = lift.max((a.matrix() - &g.evaluate_matrix(tau)).frobenius_norm());
                let v0 = h.evolve_pure(tau);
                let v1 = h.propagate(tau + 2.0 * PI, h.base().vector());
                period = period.max(linalg::norm(&linalg::sub_vec(&v0, &v1)));
            }
        }
    }
    let mut choi_min = f64::INFINITY;
    let mut trace_dev = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for (rho, _) in pairs.iter().take(3) {
        let phi = random::ket(rho.dim(), &mut rng);
        let path = geodesic_to_pure(rho, &phi)?;
        let ch = ChannelFamily::new(GeodesicHamiltonian::from_path(&path)?.rebased(path.theta1())?)?;
        let n = rho.dim();
        for k in 0..10 {
            let tau = 0.3 + 0.6 * k as f64;
            let c = ch.choi(tau)?;
            choi_min = choi_min.min(eig_hermitian(&c)?.values[0]);
            let tr = linalg::partial_trace_ancilla(&c, n, n)?;
            trace_dev = trace_dev.max((&tr - &ComplexMatrix::identity(n)).frobenius_norm());
        }
    }
    let ok = lift <= 1e-8 && period <= 1e-12 && choi_min >= -1e-10 && trace_dev <= 1e-10;
    Ok((
        ok,
        format!("{specs} specs, max lift error {lift:.1e}, 2pi drift {period:.1e}, min Choi eigenvalue {choi_min:.1e}, trace defect {trace_dev:.1e}"),
    ))
}

fn balanced_alpha(rho: &DensityMatrix, raw: &[f64]) -> Vec<f64> {
    let n = rho.dim();
    let sqrt_p: Vec<f64> = (0..n).rev().map(|k| rho.eigen().values[k].sqrt()).collect();
    let ov: f64 = raw.iter().zip(&sqrt_p).map(|(a, s)| a * s).sum();
    let mut alpha: Vec<f64> = raw.iter().zip(&sqrt_p).map(|(a, s)| a - ov * s).collect();
    let na = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    alpha.iter_mut().for_each(|a| *a /= na);
    alpha
}

fn circuit_agreement() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let states = [DensityMatrix::from_diagonal(&[0.7, 0.3])?, random::density_matrix(4, &mut rng)];
    let mut worst = 0.0f64;
    let mut runs = 0;
    for rho in &states {
        let raw: Vec<f64> = (0..rho.dim()).map(|k| if k % 2 == 0 { 1.0 } else { -0.5 }).collect();
        let recipes = [CircuitRecipe::Commuting { alpha: balanced_alpha(rho, &raw) }, CircuitRecipe::Entangling];
        for recipe in recipes {
            let cg = build_circuit_geodesic(rho, &recipe)?;
            let h = cg.hamiltonian()?;
            for k in 0..10 {
                let tau = PI * k as f64 / 9.0;
                let sim = cg.simulate(tau)?;
                worst = worst.max((sim.matrix() - &cg.closed_form(tau)).frobenius_norm());
                worst = worst.max((sim.matrix() - project_evolution(&h, tau)?.matrix()).frobenius_norm());
            }
            runs += 1;
        }
    }
    Ok((worst <= 1e-8, format!("{runs} circuits (d = 1, 2), max deviation {worst:.1e}")))
}

fn qfi_identities() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut eq55 = 0.0f64;
    for k in 0..50 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let rho = random::density_matrix(n, &mut rng);
        let d = TangentOperator::new(random::traceless_hermitian(n, &mut rng))?;
        let l = sld(&rho, &d, SldMode::Strict)?;
        let q = (&(rho.matrix() * &l) * &l).trace().re;
        let g = 4.0 * bures_metric(&rho, &d, &d)?;
        eq55 = eq55.max((q - g).abs() / (1.0 + q));
    }
    let (mut pyth, mut var) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let rho = random::density_matrix(2, &mut rng);
        let psi = purify(&rho, 2, None)?;
        let h = random::hermitian(4, &mut rng);
        let hv = h.mul_vec(psi.vector());
        let mean = inner(psi.vector(), &hv).re;
        let dpsi: Vec<C64> = hv.iter().zip(psi.vector()).map(|(u, p)| (u - p * mean) * C64::new(0.0, -1.0)).collect();
        let split = qfi_pythagoras(&psi, &CompositeTangent::new(&psi, dpsi)?)?;
        pyth = pyth.max((split.qfi_probe + split.leaked - split.qfi_pure).abs());
        pyth = pyth.max((split.qfi_pure - qfi_pure_variance(psi.vector(), &h)?).abs());
        var = var.max((qfi_variational(&psi, &h, 0.0)?.value - split.qfi_probe).abs());
    }
    let ok = eq55 <= 1e-8 && pyth <= 1e-10 && var <= 1e-6;
    Ok((ok, format!("SLD vs metric {eq55:.1e}, Pythagoras {pyth:.1e}, variational {var:.1e}")))
}

fn metrology_optimality() -> Result<(bool, String)> {
    let (rho, sigma) = fixture()?;
    let mut pairs = vec![(rho, sigma)];
    pairs.extend(random_pairs(107, 3, 2));
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    let (mut qdev, mut worst_ratio, mut excess) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (rho, sigma) in &pairs {
        let g = shortest_geodesic(rho, sigma)?;
        let th = g.theta();
        let n = rho.dim();
        for delta in [1.0, 0.5] {
            let povm = optimal_povm(&g)?;
            let fam = ParametrizedFamily::geodesic(g.clone(), delta);
            let target = 4.0 * delta * delta;
            let randoms: Vec<Povm> =
                (0..100).map(|k| Povm::new(random::povm_elements(n, 2 + k % 3, &mut rng))).collect::<Result<_>>()?;
            for k in 0..10 {
                let x = (0.05 + 0.1 * k as f64) * th / delta;
                let q = qfi(&fam, x, SldMode::Strict)?;
                qdev = qdev.max((q - target).abs() / target);
                worst_ratio = worst_ratio.min(cfi(&fam, &povm, x)? / q);
                if k % 3 == 0 {
                    for p in &randoms {
                        excess = excess.max(cfi(&fam, p, x)? - q);
                    }
                }
            }
        }
    }
    let ok = qdev <= 1e-6 && worst_ratio >= 1.0 - 1e-6 && excess <= 1e-8;
    Ok((ok, format!("max QFI rel. deviation {qdev:.1e}, min CFI/QFI {worst_ratio:.9}, max CFI-QFI over random POVMs {excess:.1e}")))
}

fn cramer_rao() -> Result<(bool, String)> {
    let start = Instant::now();
    let (rho, sigma) = fixture()?;
    let g = shortest_geodesic(&rho, &sigma)?;
    let x_true = 0.5 * g.theta();
    let (lo, hi) = geodesic_interval(&g, 1.0, x_true)?;
    let povm = optimal_povm(&g)?;
    let exp = EstimationExperiment {
        family: ParametrizedFamily::geodesic(g, 1.0),
        povm,
        x_true,
        n_meas: 10_000,
        replicates: 200,
        seed: 0,
        mle: MleConfig::new(lo, hi),
    };
    let r = run_experiment(&exp)?;
    let ratio = r.delta_x / r.crb;
    let secs = start.elapsed().as_secs_f64();
    let ok = (ratio - 1.0).abs() <= 0.1 && secs < 60.0;
    Ok((ok, format!("dx = {:.4e}, CRB = {:.4e}, ratio {ratio:.4}", r.delta_x, r.crb)))
}

fn heisenberg() -> Result<(bool, String)> {
    let rho = DensityMatrix::from_diagonal(&[0.7, 0.3])?;
    let rows = heisenberg_scan(&rho, &[1, 2, 3, 4], 1.0, 0.0)?;
    let (mut dev, mut leak) = (0.0f64, 0.0f64);
    for row in &rows {
        let n2 = (row.probes * row.probes) as f64;
        for s in &row.samples {
            dev = dev.max((s.qfi - n2).abs());
            leak = leak.max(s.leaked);
        }
    }
    let q: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.samples[0].qfi)).collect();
    Ok((dev <= 1e-6 && leak <= 1e-8, format!("QFI(N=1..4) = {{{}}}, max |QFI - N^2| {dev:.1e}, max leaked {leak:.1e}", q.join(", "))))
}

fn uhlmann() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (k, (rho, sigma)) in random_pairs(110, 10, 10).iter().enumerate() {
        let r = uhlmann_optimize(rho, sigma, 4, k as u64)?;
        worst = worst.max((r.overlap - root_fidelity(rho, sigma)).abs());
    }
    Ok((worst <= 1e-7, format!("20 pairs, max |sqrtF_opt - sqrtF| {worst:.1e}")))
}
