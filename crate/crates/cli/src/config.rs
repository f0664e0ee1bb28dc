//! Metrology configuration files.

use serde::{Deserialize, Serialize};

use bures_geo::states::MatrixJson;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetrologyConfig {
    pub family: Option<FamilyConfig>,
    pub povm: Option<PovmConfig>,
    pub x_true: Option<f64>,
    #[serde(rename = "N_meas", alias = "n_meas")]
    pub n_meas: Option<u64>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    /// Search interval of the estimator; geodesic families default to the
    /// arc between the boundary hits around `x_true`.
    pub interval: Option<[f64; 2]>,
    /// Points at which QFI and CFI are tabulated.
    pub qfi_samples: Option<Vec<f64>>,
    pub heisenberg: Option<HeisenbergConfig>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICATES: usize = 200;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `rho_x = gamma(x delta)`.
    Geodesic { rho: MatrixJson, sigma: MatrixJson, signs: Option<String>, delta: Option<f64> },
    /// `rho_x = e^{-i x G} rho e^{i x G}`.
    Unitary { rho: MatrixJson, generator: MatrixJson },
    /// `rho_x = tr_A e^{-i x H} |Psi><Psi| e^{i x H}` on the canonical
    /// purification of `rho`, differentiated numerically.
    Custom { rho: MatrixJson, hamiltonian: MatrixJson, step: Option<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PovmConfig {
    /// `"optimal"` or `"computational"`.
    Named(String),
    Explicit { elements: Vec<MatrixJson> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergConfig {
    /// Qubit state whose geodesic each pair follows.
    pub rho: MatrixJson,
    pub probes: Vec<usize>,
    pub gap: Option<f64>,
    pub phase: Option<f64>,
    /// Sample points; defaults depend on the ensemble size.
    pub x: Option<Vec<f64>>,
}
