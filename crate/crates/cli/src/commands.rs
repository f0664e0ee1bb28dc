//! Subcommand implementations.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use bures_geo::acceptance;
use bures_geo::evolution::{
    build_circuit_geodesic, project_evolution, simulate_statevector, Circuit, CircuitRecipe, GeodesicHamiltonian,
};
use bures_geo::geodesics::{
    boundary_intersections, build_geodesic, enumerate_geodesics, shortest_geodesic, GeodesicPath, GeodesicSpec,
    SignVector,
};
use bures_geo::linalg::{self, ComplexMatrix};
use bures_geo::metrology::{
    cfi, geodesic_interval, heisenberg_point, heisenberg_samples, optimal_povm, qfi, run_experiment,
    EstimationExperiment, HeisenbergRow, MleConfig, ParametrizedFamily, Povm, ProbeEnsembleSpec,
};
use bures_geo::states::{bures_angle, bures_distance, fidelity as fidelity_of, purify, DensityMatrix, MatrixJson, SldMode};
use bures_geo::C64;

use crate::config::{FamilyConfig, MetrologyConfig, PovmConfig, DEFAULT_REPLICATES, DEFAULT_SEED};
use crate::output::{csv_float, to_json, write_csv, write_json, RunManifest};
use crate::{CliError, Variant};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json(path.to_path_buf(), e))
}

fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let m: MatrixJson = read_json(path)?;
    Ok(DensityMatrix::try_from(m)?)
}

fn parse_signs(s: &str) -> Result<SignVector, CliError> {
    Ok(s.parse::<SignVector>()?)
}

fn select_geodesic(rho: &DensityMatrix, sigma: &DensityMatrix, signs: Option<&str>) -> Result<GeodesicSpec, CliError> {
    Ok(match signs {
        Some(s) => build_geodesic(rho, sigma, &parse_signs(s)?)?,
        None => shortest_geodesic(rho, sigma)?,
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Prints to stdout or writes the file plus a manifest.
fn emit<T: Serialize>(command: &str, args: serde_json::Value, value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            print!("{}", to_json(value));
            Ok(())
        }
        Some(path) => {
            let mut manifest = RunManifest::new(command, args, None);
            write_json(path, value)?;
            manifest.outputs.push(path.to_path_buf());
            manifest.finish(&manifest_path(path))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FidelityOut {
    fidelity: f64,
    bures_angle: f64,
    bures_distance: f64,
}

pub fn fidelity(rho: &Path, sigma: &Path, json: Option<&Path>) -> Result<(), CliError> {
    let a = read_state(rho)?;
    let b = read_state(sigma)?;
    if a.dim() != b.dim() {
        return Err(bures_geo::Error::DimensionMismatch { expected: a.dim(), found: b.dim() }.into());
    }
    let out = FidelityOut { fidelity: fidelity_of(&a, &b), bures_angle: bures_angle(&a, &b), bures_distance: bures_distance(&a, &b) };
    println!("fidelity       {}", out.fidelity);
    println!("bures_angle    {}", out.bures_angle);
    println!("bures_distance {}", out.bures_distance);
    if let Some(path) = json {
        let args = serde_json::json!({ "rho": rho, "sigma": sigma });
        let mut manifest = RunManifest::new("fidelity", args, None);
        write_json(path, &out)?;
        manifest.outputs.push(path.to_path_buf());
        manifest.finish(&manifest_path(path))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

pub struct GeodesicArgs {
    pub rho: PathBuf,
    pub sigma: PathBuf,
    pub signs: Option<String>,
    pub enumerate: bool,
    pub samples: usize,
    pub intersections: bool,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl VectorJson {
    fn new(v: &[C64]) -> Self {
        Self { re: v.iter().map(|z| z.re).collect(), im: v.iter().map(|z| z.im).collect() }
    }
}

#[derive(Serialize)]
struct SampleOut {
    tau: f64,
    state: MatrixJson,
}

#[derive(Serialize)]
struct IntersectionOut {
    tau: f64,
    mu: f64,
    multiplicity: usize,
    rank: usize,
    kernel_basis: Vec<VectorJson>,
    state: MatrixJson,
}

#[derive(Serialize)]
struct SpecOut {
    rho: MatrixJson,
    sigma: MatrixJson,
    signs: String,
    #[serde(rename = "theta_V")]
    theta: f64,
    lambda: Vec<f64>,
    m: MatrixJson,
}

#[derive(Serialize)]
struct GeodesicOut {
    spec: SpecOut,
    samples: Vec<SampleOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intersections: Option<Vec<IntersectionOut>>,
}

fn describe_geodesic(g: &GeodesicSpec, samples: usize, intersections: bool) -> Result<GeodesicOut, CliError> {
    let th = g.theta();
    let taus: Vec<f64> = match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        k => (0..k).map(|j| th * j as f64 / (k - 1) as f64).collect(),
    };
    let samples = taus
        .into_iter()
        .map(|tau| Ok(SampleOut { tau, state: MatrixJson::from_matrix(g.evaluate(tau)?.matrix()) }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let intersections = if intersections {
        let hits = boundary_intersections(g)?;
        Some(
            hits.into_iter()
                .map(|h| IntersectionOut {
                    tau: h.tau,
                    mu: h.mu,
                    multiplicity: h.multiplicity,
                    rank: h.state.rank(),
                    kernel_basis: (0..h.kernel_basis.cols()).map(|j| VectorJson::new(&h.kernel_basis.column(j))).collect(),
                    state: MatrixJson::from_matrix(h.state.matrix()),
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(GeodesicOut {
        spec: SpecOut {
            rho: MatrixJson::from_matrix(g.rho().matrix()),
            sigma: MatrixJson::from_matrix(g.sigma().matrix()),
            signs: g.signs().to_string(),
            theta: th,
            lambda: g.lambda().to_vec(),
            m: MatrixJson::from_matrix(g.m()),
        },
        samples,
        intersections,
    })
}

/// One geodesic object, or an array of them sorted by length with `--enumerate`.
pub fn geodesic(args: &GeodesicArgs) -> Result<(), CliError> {
    let rho = read_state(&args.rho)?;
    let sigma = read_state(&args.sigma)?;
    let specs = if args.enumerate {
        enumerate_geodesics(&rho, &sigma)?
    } else {
        vec![select_geodesic(&rho, &sigma, args.signs.as_deref())?]
    };
    let geodesics = specs
        .iter()
        .map(|g| describe_geodesic(g, args.samples, args.intersections))
        .collect::<Result<Vec<_>, _>>()?;
    if args.out.is_some() {
        for g in &geodesics {
            println!("{} theta {}", g.spec.signs, g.spec.theta);
        }
    }
    let call = serde_json::json!({
        "rho": args.rho, "sigma": args.sigma, "signs": args.signs, "enumerate": args.enumerate,
        "samples": args.samples, "intersections": args.intersections,
    });
    if args.enumerate {
        emit("geodesic", call, &geodesics, args.out.as_deref())
    } else {
        emit("geodesic", call, &geodesics[0], args.out.as_deref())
    }
}

// ---------------------------------------------------------------------------

pub struct EvolveArgs {
    pub rho: PathBuf,
    pub sigma: Option<PathBuf>,
    pub signs: Option<String>,
    pub tau: Option<f64>,
    pub circuit: Option<PathBuf>,
    pub variant: Variant,
    pub alpha: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvolveOut {
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signs: Option<String>,
    state: MatrixJson,
    /// Largest Frobenius distance between routes that should agree.
    max_route_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    circuit: Option<PathBuf>,
}

/// Routes must agree to this Frobenius distance.
const ROUTE_TOLERANCE: f64 = 1e-8;

fn system_generator(g: &GeodesicSpec) -> ComplexMatrix {
    let th = g.theta();
    let n = g.rho().dim();
    (g.m() - &ComplexMatrix::identity(n).scale_real(th.cos())).scale_real(1.0 / th.sin())
}

fn check_routes(dev: f64) -> Result<(), CliError> {
    if dev > ROUTE_TOLERANCE {
        return Err(bures_geo::Error::Numerical(format!("evolution routes disagree by {dev:.3e}")).into());
    }
    Ok(())
}

pub fn evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let rho = read_state(&args.rho)?;
    let sigma = args.sigma.as_deref().map(read_state).transpose()?;
    let spec = match &sigma {
        Some(s) => Some(select_geodesic(&rho, s, args.signs.as_deref())?),
        None => None,
    };
    let call = serde_json::json!({
        "rho": args.rho, "sigma": args.sigma, "signs": args.signs, "tau": args.tau,
        "circuit": args.circuit, "variant": format!("{:?}", args.variant).to_lowercase(), "alpha": args.alpha,
    });
    let out = match &args.circuit {
        None => {
            let g = spec.ok_or_else(|| CliError::Usage("a target state is required with --tau".into()))?;
            let tau = args.tau.expect("clap requires --tau without --circuit");
            let h = GeodesicHamiltonian::from_path(&g)?;
            let state = project_evolution(&h, tau)?;
            let mut dev = (state.matrix() - &g.evaluate_matrix(tau)).frobenius_norm();
            if rho.dim().is_power_of_two() {
                let cg = build_circuit_geodesic(&rho, &CircuitRecipe::General { system_generator: system_generator(&g) })?;
                dev = dev.max((state.matrix() - cg.simulate(tau)?.matrix()).frobenius_norm());
            }
            check_routes(dev)?;
            EvolveOut {
                tau,
                theta: Some(g.theta()),
                signs: Some(g.signs().to_string()),
                state: MatrixJson::from_matrix(state.matrix()),
                max_route_deviation: dev,
                circuit: None,
            }
        }
        Some(path) => {
            let recipe = match args.variant {
                Variant::General => {
                    let g = spec.as_ref().ok_or_else(|| CliError::Usage("the general variant needs a target state".into()))?;
                    CircuitRecipe::General { system_generator: system_generator(g) }
                }
                Variant::Commuting => {
                    let alpha = args
                        .alpha
                        .clone()
                        .ok_or_else(|| CliError::Usage("the commuting variant needs --alpha".into()))?;
                    CircuitRecipe::Commuting { alpha }
                }
                Variant::Entangling => CircuitRecipe::Entangling,
            };
            let general = matches!(args.variant, Variant::General);
            let tau = match (args.tau, &spec) {
                (Some(t), _) => t,
                (None, Some(g)) if general => g.theta(),
                _ => PI / 2.0,
            };
            let cg = build_circuit_geodesic(&rho, &recipe)?;
            write_json(path, &cg.circuit(tau))?;
            let reread: Circuit = read_json(path)?;
            let v = simulate_statevector(&reread, None)?;
            let n = rho.dim();
            let state = DensityMatrix::new_clamped(linalg::reduced_outer(&v, &v, n, n)?)?;
            let h = cg.hamiltonian()?;
            let mut dev = (state.matrix() - project_evolution(&h, tau)?.matrix()).frobenius_norm();
            if let (true, Some(g)) = (general, &spec) {
                dev = dev.max((state.matrix() - &g.evaluate_matrix(tau)).frobenius_norm());
            }
            check_routes(dev)?;
            EvolveOut {
                tau,
                theta: spec.as_ref().filter(|_| general).map(|g| g.theta()),
                signs: spec.as_ref().filter(|_| general).map(|g| g.signs().to_string()),
                state: MatrixJson::from_matrix(state.matrix()),
                max_route_deviation: dev,
                circuit: Some(path.clone()),
            }
        }
    };
    emit("evolve", call, &out, args.out.as_deref())
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct QfiSample {
    x: f64,
    qfi: f64,
    cfi: f64,
    /// The state was singular and the SLD was restricted to its support.
    support_restricted: bool,
}

#[derive(Serialize)]
struct ExperimentOut {
    x_true: f64,
    n_meas: u64,
    replicates: usize,
    seed: u64,
    interval: [f64; 2],
    mean: f64,
    delta_x: f64,
    crb: f64,
    ratio: f64,
    qfi: f64,
    cfi: f64,
    x_est: Vec<f64>,
}

#[derive(Serialize)]
struct MetrologyOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<ExperimentOut>,
    qfi_samples: Vec<QfiSample>,
    heisenberg: Vec<HeisenbergRow>,
}

struct Built {
    family: ParametrizedFamily,
    optimal: Option<Povm>,
    default_interval: Option<Box<dyn Fn(f64) -> Result<(f64, f64), CliError>>>,
    default_samples: Vec<f64>,
    dim: usize,
}

fn build_family(cfg: &FamilyConfig) -> Result<Built, CliError> {
    match cfg {
        FamilyConfig::Geodesic { rho, sigma, signs, delta } => {
            let rho = DensityMatrix::try_from(rho.clone())?;
            let sigma = DensityMatrix::try_from(sigma.clone())?;
            let g = select_geodesic(&rho, &sigma, signs.as_deref())?;
            let delta = delta.unwrap_or(1.0);
            if !(delta > 0.0) {
                return Err(CliError::Usage("family.delta must be positive".into()));
            }
            let th = g.theta();
            let optimal = Some(optimal_povm(&g)?);
            let g2 = g.clone();
            let interval = move |x: f64| -> Result<(f64, f64), CliError> { Ok(geodesic_interval(&g2, delta, x)?) };
            Ok(Built {
                family: ParametrizedFamily::geodesic(g, delta),
                optimal,
                default_interval: Some(Box::new(interval)),
                default_samples: (0..10).map(|k| (0.05 + 0.1 * k as f64) * th / delta).collect(),
                dim: rho.dim(),
            })
        }
        FamilyConfig::Unitary { rho, generator } => {
            let rho = DensityMatrix::try_from(rho.clone())?;
            let dim = rho.dim();
            let family = ParametrizedFamily::unitary(rho, generator.to_matrix()?)?;
            Ok(Built { family, optimal: None, default_interval: None, default_samples: Vec::new(), dim })
        }
        FamilyConfig::Custom { rho, hamiltonian, step } => {
            let rho = DensityMatrix::try_from(rho.clone())?;
            let n = rho.dim();
            let h = hamiltonian.to_matrix()?;
            if h.rows() != n * n {
                return Err(bures_geo::Error::DimensionMismatch { expected: n * n, found: h.rows() }.into());
            }
            let dh = h.hermiticity_defect();
            if dh > bures_geo::tol::HERMITIAN {
                return Err(bures_geo::Error::NotHermitian(dh).into());
            }
            let eh = linalg::eig_hermitian(&h.hermitian_part())?;
            let psi = purify(&rho, n, None)?.vector().to_vec();
            let mut family = ParametrizedFamily::new(move |x| {
                let v = eh.map_complex(|e| C64::from_polar(1.0, -x * e)).mul_vec(&psi);
                DensityMatrix::new_clamped(linalg::reduced_outer(&v, &v, n, n)?)
            });
            if let Some(s) = step {
                family = family.with_step(*s);
            }
            Ok(Built { family, optimal: None, default_interval: None, default_samples: Vec::new(), dim: n })
        }
    }
}

fn build_povm(cfg: Option<&PovmConfig>, built: &mut Built) -> Result<Povm, CliError> {
    match cfg {
        None => built
            .optimal
            .take()
            .ok_or_else(|| CliError::Usage("povm is required for families other than geodesic".into())),
        Some(PovmConfig::Named(name)) => match name.as_str() {
            "optimal" => built
                .optimal
                .take()
                .ok_or_else(|| CliError::Usage("the optimal POVM is defined for geodesic families only".into())),
            "computational" => Ok(Povm::computational(built.dim)),
            other => Err(CliError::Usage(format!("unknown POVM {other:?}"))),
        },
        Some(PovmConfig::Explicit { elements }) => {
            let m = elements.iter().map(|e| e.to_matrix()).collect::<Result<Vec<_>, _>>()?;
            Ok(Povm::new(m)?)
        }
    }
}

fn qfi_sample(family: &ParametrizedFamily, povm: &Povm, x: f64) -> Result<QfiSample, CliError> {
    let (q, restricted) = match qfi(family, x, SldMode::Strict) {
        Ok(q) => (q, false),
        Err(bures_geo::Error::SingularState(_)) => (qfi(family, x, SldMode::SupportRestricted)?, true),
        Err(e) => return Err(e.into()),
    };
    Ok(QfiSample { x, qfi: q, cfi: cfi(family, povm, x)?, support_restricted: restricted })
}

pub fn metrology(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg: MetrologyConfig = read_json(config_path)?;
    if cfg.family.is_none() && cfg.heisenberg.is_none() {
        return Err(CliError::Usage("config needs a family, a heisenberg block, or both".into()));
    }
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let config_value = serde_json::to_value(&cfg).map_err(|e| CliError::Json(config_path.to_path_buf(), e))?;
    let mut manifest = RunManifest::new("metrology", config_value, Some(seed));
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(out_dir.to_path_buf(), e))?;

    let mut result = MetrologyOut { experiment: None, qfi_samples: Vec::new(), heisenberg: Vec::new() };
    if let Some(fam_cfg) = &cfg.family {
        let mut built = build_family(fam_cfg)?;
        let povm = build_povm(cfg.povm.as_ref(), &mut built)?;
        let x_true = cfg.x_true.ok_or_else(|| CliError::Usage("x_true is required".into()))?;
        let n_meas = cfg.n_meas.ok_or_else(|| CliError::Usage("N_meas is required".into()))?;
        let interval = match (cfg.interval, &built.default_interval) {
            (Some([a, b]), _) => (a, b),
            (None, Some(f)) => f(x_true)?,
            (None, None) => return Err(CliError::Usage("interval is required for this family".into())),
        };
        let exp = EstimationExperiment {
            family: built.family.clone(),
            povm: povm.clone(),
            x_true,
            n_meas,
            replicates: cfg.replicates.unwrap_or(DEFAULT_REPLICATES),
            seed,
            mle: MleConfig::new(interval.0, interval.1),
        };
        let r = run_experiment(&exp)?;
        println!("delta_x {}  crb {}  ratio {}", r.delta_x, r.crb, r.delta_x / r.crb);
        let xs = cfg.qfi_samples.clone().unwrap_or_else(|| {
            if built.default_samples.is_empty() {
                vec![x_true]
            } else {
                built.default_samples.clone()
            }
        });
        for x in xs {
            result.qfi_samples.push(qfi_sample(&built.family, &povm, x)?);
        }
        result.experiment = Some(ExperimentOut {
            x_true,
            n_meas,
            replicates: exp.replicates,
            seed,
            interval: [interval.0, interval.1],
            mean: r.mean,
            delta_x: r.delta_x,
            crb: r.crb,
            ratio: r.delta_x / r.crb,
            qfi: r.qfi,
            cfi: r.cfi,
            x_est: r.estimates,
        });
    }
    if let Some(h) = &cfg.heisenberg {
        let rho = DensityMatrix::try_from(h.rho.clone())?;
        for &n in &h.probes {
            let spec = ProbeEnsembleSpec::uniform(rho.clone(), n, h.gap.unwrap_or(1.0), h.phase.unwrap_or(0.0));
            let xs = h.x.clone().unwrap_or_else(|| heisenberg_samples(&spec));
            let row = heisenberg_point(&spec, &xs)?;
            let q: Vec<String> = row.samples.iter().map(|s| format!("{}", s.qfi)).collect();
            println!("N = {n}  QFI {}  predicted {}", q.join(" "), row.qfi_predicted);
            result.heisenberg.push(row);
        }
    }

    let results_path = out_dir.join("results.json");
    write_json(&results_path, &result)?;
    manifest.outputs.push(results_path);
    if let Some(e) = &result.experiment {
        let rows: Vec<Vec<String>> = e.x_est.iter().enumerate().map(|(k, x)| vec![k.to_string(), csv_float(*x)]).collect();
        let p = out_dir.join("replicates.csv");
        write_csv(&p, &["replicate", "x_est"], &rows)?;
        manifest.outputs.push(p);
        let rows: Vec<Vec<String>> = result
            .qfi_samples
            .iter()
            .map(|s| vec![csv_float(s.x), csv_float(s.qfi), csv_float(s.cfi), s.support_restricted.to_string()])
            .collect();
        let p = out_dir.join("qfi.csv");
        write_csv(&p, &["x", "qfi", "cfi", "support_restricted"], &rows)?;
        manifest.outputs.push(p);
    }
    if !result.heisenberg.is_empty() {
        let rows: Vec<Vec<String>> = result
            .heisenberg
            .iter()
            .flat_map(|r| {
                r.samples.iter().map(move |s| {
                    vec![r.probes.to_string(), csv_float(s.x), csv_float(s.qfi), csv_float(r.qfi_predicted), csv_float(s.leaked)]
                })
            })
            .collect();
        let p = out_dir.join("heisenberg.csv");
        write_csv(&p, &["probes", "x", "qfi", "qfi_predicted", "leaked"], &rows)?;
        manifest.outputs.push(p);
    }
    manifest.finish(&out_dir.join("manifest.json"))
}

// ---------------------------------------------------------------------------

pub fn selfcheck(criterion: Option<usize>) -> Result<(), CliError> {
    let results = match criterion {
        Some(id) => vec![acceptance::run(id).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?],
        None => acceptance::run_all(),
    };
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Selfcheck(failed));
    }
    Ok(())
}
