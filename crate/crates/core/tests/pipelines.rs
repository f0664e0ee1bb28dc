//! Cross-module checks: circuits against the analytic ensemble and the
//! Fisher information of simulated probe states.

use bures_geo::evolution::{probe_circuit, simulate_statevector};
use bures_geo::linalg::{self, inner};
use bures_geo::metrology::{probe_state, qfi_at, ProbeEnsembleSpec};
use bures_geo::states::{DensityMatrix, SldMode, TangentOperator};

fn rho() -> DensityMatrix {
    DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap()
}

#[test]
fn probe_circuit_matches_analytic_ensemble() {
    let delta = 0.5;
    for probes in 1..=3 {
        let spec = ProbeEnsembleSpec::uniform(rho(), probes, 2.0 * delta, 0.4);
        for x in [0.1, 0.35, 0.8] {
            let c = probe_circuit(&rho(), probes, 0.4, x * delta).unwrap();
            let v = simulate_statevector(&c, None).unwrap();
            let st = probe_state(&spec, x).unwrap();
            let ov = inner(st.purification.vector(), &v).norm();
            assert!((ov - 1.0).abs() < 1e-12, "N={probes} x={x}: overlap {ov}");
        }
    }
}

#[test]
fn two_probe_circuit_reaches_heisenberg_qfi() {
    let probes = 2;
    let n = 1usize << probes;
    let reduced = |a: f64| {
        let v = simulate_statevector(&probe_circuit(&rho(), probes, 0.0, a).unwrap(), None).unwrap();
        linalg::reduced_outer(&v, &v, n, n).unwrap()
    };
    // the angle a is x Delta with Delta = 1, so the gap per pair is 2 and Delta_N = 2
    let a = 0.3;
    let h = 1e-5;
    let d = (&reduced(a + h) - &reduced(a - h)).scale_real(0.5 / h);
    let state = DensityMatrix::new_clamped(reduced(a)).unwrap();
    let q = qfi_at(&state, &TangentOperator::with_tolerance(d, 1e-8).unwrap(), SldMode::Strict).unwrap();
    assert!((q - 16.0).abs() < 1e-5, "{q}");
}
