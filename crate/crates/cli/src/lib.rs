//! Experiment configuration, instantiation, and the seed-sweep runner
//! behind the `nsdo` binary.
//!
//! Configs are JSON documents (see `docs/config.md` for the schema); runs
//! are deterministic given the config and seeds, and outputs are written
//! atomically per seed.

mod runner;
mod sweep;

pub use runner::{constants_lines, run_experiment, ExperimentOutput, RunFlags, Summary};
pub use sweep::{sweep_csv, sweep_table, SweepAxis, SweepRow};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use nsdo::network::{parse_edge_list, GossipMatrix, Network};
use nsdo::numerics::{l2_norm, Vector};
use nsdo::objectives::worst_case::{
    worst_case_global, worst_case_local, LowerBoundEnvelope, WorstCaseGlobalInstance,
};
use nsdo::objectives::{GaussianStream, ObjectiveOracle, ProblemInstance};
use nsdo::solver::{exact_median_optimum, geometric_median};
use nsdo::Error as CoreError;

/// Configuration-level failures carry the offending field so the CLI can
/// exit with a field-level message and status 2.
#[derive(Debug)]
pub enum ConfigError {
    Field { field: String, message: String },
    Core(CoreError),
    Io(std::io::Error),
    Parse(serde_json::Error),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Field { field, message } => write!(f, "config field `{field}`: {message}"),
            ConfigError::Core(e) => write!(f, "{e}"),
            ConfigError::Io(e) => write!(f, "io error: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<CoreError> for ConfigError {
    fn from(e: CoreError) -> Self {
        ConfigError::Core(e)
    }
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e)
    }
}

pub(crate) fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

/// Top-level experiment description.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub network: NetworkSpec,
    pub algorithm: AlgorithmSpec,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Problem document: `{kind, d, n, params, R, seed}`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: String,
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub params: ProblemParams,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Per-node anchor vectors for `abs_deviation`/`euclidean`; generated
    /// from `seed` inside the half-radius ball when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<Vec<f64>>>,
    /// Slope for `linear`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,
    /// Worst-case constructions: the target time horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_time: Option<f64>,
    /// `worst_case_global`: target global Lipschitz constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_global: Option<f64>,
    /// `worst_case_local`: target eigengap and local-average constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_local_avg: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub target_gamma: Option<f64>,
    pub tau: f64,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(default)]
    pub constants: ConstantsSpec,
    /// MSPD only: honor per-node compute times in the inner loop.
    #[serde(default)]
    pub heterogeneous: bool,
    /// `cp_exact` only: proximal tolerance (default 1e-8).
    #[serde(default)]
    pub inner_tol: Option<f64>,
}

/// Either the literal string `"auto"` (derive all constants from ε via the
/// header formulas) or explicit overrides.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ConstantsSpec {
    Tag(String),
    Manual(ManualConstants),
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec::Tag("auto".into())
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ManualConstants {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub outer: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub gossip_or_samples: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub inner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl ConstantsSpec {
    pub fn manual(&self) -> Result<Option<&ManualConstants>, ConfigError> {
        match self {
            ConstantsSpec::Tag(tag) if tag == "auto" => Ok(None),
            ConstantsSpec::Tag(other) => Err(field_err(
                "algorithm.constants",
                format!("expected \"auto\" or an override object, got \"{other}\""),
            )),
            ConstantsSpec::Manual(m) => Ok(Some(m)),
        }
    }
}

/// Algorithms the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Naive,
    Drs,
    Mspd,
    CpExact,
}

impl AlgorithmKind {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "naive" => Ok(AlgorithmKind::Naive),
            "drs" => Ok(AlgorithmKind::Drs),
            "mspd" => Ok(AlgorithmKind::Mspd),
            "cp_exact" => Ok(AlgorithmKind::CpExact),
            other => Err(field_err(
                "algorithm.name",
                format!("unknown algorithm `{other}`; expected naive | drs | mspd | cp_exact"),
            )),
        }
    }
}

/// A fully instantiated experiment: problem, network, gossip matrix, and
/// the optimum-value provenance.
pub struct Instantiated {
    pub problem: ProblemInstance,
    pub network: Network,
    pub gossip: GossipMatrix,
    pub envelope: Option<LowerBoundEnvelope>,
    /// Human-readable origin of `problem.optimum_value`.
    pub optimum_provenance: String,
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(ConfigError::Parse)
}

fn generated_anchors(spec: &ProblemSpec) -> Vec<Vector> {
    let stream = GaussianStream::new(spec.seed);
    (0..spec.n)
        .map(|i| {
            let raw = stream.gaussian_vector(i as u64, 0, spec.d);
            let norm = l2_norm(&raw).max(1e-12);
            // Spread anchors over the half-radius ball.
            let scale = spec.radius / 2.0 * (i as f64 + 1.0) / spec.n as f64;
            raw * (scale / norm)
        })
        .collect()
}

fn anchors_from_spec(spec: &ProblemSpec) -> Result<Vec<Vector>, ConfigError> {
    match &spec.params.anchors {
        Some(list) => {
            if list.len() != spec.n {
                return Err(field_err(
                    "problem.params.anchors",
                    format!("need {} anchors, got {}", spec.n, list.len()),
                ));
            }
            list.iter()
                .map(|a| {
                    if a.len() != spec.d {
                        Err(field_err(
                            "problem.params.anchors",
                            format!("anchor dimension {} != d = {}", a.len(), spec.d),
                        ))
                    } else {
                        Ok(Array1::from(a.clone()))
                    }
                })
                .collect()
        }
        None => Ok(generated_anchors(spec)),
    }
}

fn build_network(spec: &NetworkSpec) -> Result<Network, ConfigError> {
    let need_n = || {
        spec.n
            .ok_or_else(|| field_err("network.n", "required for this network kind"))
    };
    let net = match spec.kind.as_str() {
        "path" => Network::path(need_n()?, spec.tau)?,
        "cycle" => Network::cycle(need_n()?, spec.tau)?,
        "complete" => Network::complete(need_n()?, spec.tau)?,
        "star" => Network::star(need_n()?, spec.tau)?,
        "file" => {
            let path = spec
                .file
                .as_ref()
                .ok_or_else(|| field_err("network.file", "required for kind = \"file\""))?;
            let text = std::fs::read_to_string(path)?;
            let (n, edges, _weights) = parse_edge_list(&text)?;
            Network::new(n, edges, spec.tau)?
        }
        "eigengap" => {
            let gamma = spec.target_gamma.ok_or_else(|| {
                field_err("network.target_gamma", "required for kind = \"eigengap\"")
            })?;
            let (net, _) = nsdo::network::graph_with_eigengap(gamma)?;
            // Rebuild with the requested delay; the construction used τ = 1.
            Network::new(net.n(), net.edges().to_vec(), spec.tau)?
        }
        other => {
            return Err(field_err(
                "network.kind",
                format!("unknown kind `{other}`; expected path | cycle | complete | star | file | eigengap"),
            ))
        }
    };
    match &spec.rho {
        Some(rho) => Ok(net.with_compute_times(rho.clone())?),
        None => Ok(net),
    }
}

fn gossip_for(net: &Network, spec: &NetworkSpec) -> Result<GossipMatrix, ConfigError> {
    if net.n() == 1 {
        return Ok(GossipMatrix::trivial());
    }
    if spec.kind == "file" {
        let path = spec.file.as_ref().expect("checked in build_network");
        let text = std::fs::read_to_string(path)?;
        let (_, _, weights) = parse_edge_list(&text)?;
        return Ok(GossipMatrix::laplacian(net, &weights)?);
    }
    Ok(GossipMatrix::laplacian(
        net,
        &vec![1.0; net.edges().len()],
    )?)
}

/// Moves the two worst-case pieces onto a pair of nodes realizing the
/// network diameter.
fn place_worst_case(
    instance: WorstCaseGlobalInstance,
    net: &Network,
) -> Result<ProblemInstance, ConfigError> {
    let n = net.n();
    let mut best = (0usize, n - 1, 0usize);
    for u in 0..n {
        for v in (u + 1)..n {
            let d = net.set_distance(&[u], &[v])?;
            if d > best.2 {
                best = (u, v, d);
            }
        }
    }
    let (head, tail, dist) = best;
    if dist != net.diameter()? {
        return Err(field_err("network", "failed to realize the diameter"));
    }
    let mut locals = vec![ObjectiveOracle::zero(instance.problem.dimension); n];
    locals[head] = instance.problem.locals[instance.head_node].clone();
    locals[tail] = instance.problem.locals[instance.tail_node].clone();
    let rebuilt = ProblemInstance::new(
        instance.problem.dimension,
        locals,
        instance.problem.radius,
        instance.problem.lipschitz_global,
    )?
    .with_optimum(
        instance.problem.optimum_value.expect("closed form attached"),
        instance.problem.optimum_point.clone(),
    );
    Ok(rebuilt)
}

/// Builds the problem, network, and gossip matrix a config describes, and
/// attaches an exact `f̄*` (closed form where available, otherwise a
/// certified oracle solve) unless `skip_oracle` is set.
pub fn instantiate(
    config: &ExperimentConfig,
    skip_oracle: bool,
) -> Result<Instantiated, ConfigError> {
    if config.epsilon <= 0.0 {
        return Err(field_err("epsilon", "must be positive"));
    }
    if config.seeds.is_empty() {
        return Err(field_err("seeds", "must be non-empty"));
    }
    let spec = &config.problem;
    if spec.radius <= 0.0 {
        return Err(field_err("problem.R", "must be positive"));
    }

    // The decentralized worst-case construction dictates its own graph.
    if spec.kind == "worst_case_local" {
        let gamma = spec
            .params
            .target_gamma
            .ok_or_else(|| field_err("problem.params.target_gamma", "required"))?;
        let l_ell = spec
            .params
            .lipschitz_local_avg
            .ok_or_else(|| field_err("problem.params.lipschitz_local_avg", "required"))?;
        let t = spec
            .params
            .target_time
            .ok_or_else(|| field_err("problem.params.target_time", "required"))?;
        let inst = worst_case_local(gamma, l_ell, t, config.network.tau, spec.d, spec.radius)?;
        let mut network =
            Network::new(inst.network.n(), inst.network.edges().to_vec(), config.network.tau)?;
        if let Some(rho) = &config.network.rho {
            network = network.with_compute_times(rho.clone())?;
        }
        return Ok(Instantiated {
            problem: inst.problem,
            network,
            gossip: inst.gossip,
            envelope: Some(inst.envelope),
            optimum_provenance: "closed_form".into(),
        });
    }

    let network = build_network(&config.network)?;
    if network.n() != spec.n {
        return Err(field_err(
            "problem.n",
            format!("problem has {} nodes but the network has {}", spec.n, network.n()),
        ));
    }
    let gossip = gossip_for(&network, &config.network)?;

    let (problem, envelope, provenance) = match spec.kind.as_str() {
        "abs_deviation" => {
            let anchors = anchors_from_spec(spec)?;
            let locals: Vec<_> = anchors
                .iter()
                .map(|a| ObjectiveOracle::abs_deviation(a.clone()))
                .collect();
            let lipschitz_global = (spec.d as f64).sqrt();
            let mut problem =
                ProblemInstance::new(spec.d, locals, spec.radius, lipschitz_global)?;
            let mut provenance = "none";
            if spec.d == 1 {
                let points: Vec<f64> = anchors.iter().map(|a| a[0]).collect();
                let (theta, value) = exact_median_optimum(&points, spec.radius);
                problem = problem.with_optimum(value, Some(Array1::from(vec![theta])));
                provenance = "exact_median";
            } else {
                // Coordinate-wise medians are exact when they stay feasible.
                let mut point = Array1::zeros(spec.d);
                for j in 0..spec.d {
                    let coords: Vec<f64> = anchors.iter().map(|a| a[j]).collect();
                    let (theta, _) = exact_median_optimum(&coords, f64::INFINITY.min(1e18));
                    point[j] = theta;
                }
                if l2_norm(&point) <= spec.radius {
                    let value = problem.average_value(&point);
                    problem = problem.with_optimum(value, Some(point));
                    provenance = "coordinatewise_median";
                }
            }
            (problem, None, provenance.to_string())
        }
        "euclidean" => {
            let anchors = anchors_from_spec(spec)?;
            let locals: Vec<_> = anchors
                .iter()
                .map(|a| ObjectiveOracle::euclidean_distance(a.clone(), 1.0))
                .collect();
            let mut problem = ProblemInstance::new(spec.d, locals, spec.radius, 1.0)?;
            let mut provenance = "none".to_string();
            if !skip_oracle {
                let cv = geometric_median(&anchors, spec.radius, 1e-8)?;
                if l2_norm(&cv.point) <= spec.radius {
                    problem = problem.with_optimum(cv.value, Some(cv.point));
                    provenance = "geometric_median".into();
                }
            }
            (problem, None, provenance)
        }
        "linear" => {
            let slope = match &spec.params.slope {
                Some(s) if s.len() == spec.d => Array1::from(s.clone()),
                Some(s) => {
                    return Err(field_err(
                        "problem.params.slope",
                        format!("length {} != d = {}", s.len(), spec.d),
                    ))
                }
                None => {
                    let raw = GaussianStream::new(spec.seed).gaussian_vector(0, 0, spec.d);
                    let norm = l2_norm(&raw).max(1e-12);
                    raw / norm
                }
            };
            let locals: Vec<_> = (0..spec.n)
                .map(|_| ObjectiveOracle::linear(slope.clone()))
                .collect();
            let lipschitz = l2_norm(&slope);
            let optimum_point = -&slope * (spec.radius / l2_norm(&slope).max(1e-300));
            let value = -spec.radius * l2_norm(&slope);
            let problem = ProblemInstance::new(spec.d, locals, spec.radius, lipschitz)?
                .with_optimum(value, Some(optimum_point));
            (problem, None, "closed_form".to_string())
        }
        "worst_case_global" => {
            let t = spec
                .params
                .target_time
                .ok_or_else(|| field_err("problem.params.target_time", "required"))?;
            let l_g = spec
                .params
                .lipschitz_global
                .ok_or_else(|| field_err("problem.params.lipschitz_global", "required"))?;
            let diameter = network.diameter()?;
            let inst = worst_case_global(
                t,
                diameter,
                config.network.tau,
                l_g,
                spec.n,
                spec.d,
                spec.radius,
            )?;
            let envelope = inst.envelope;
            let problem = place_worst_case(inst, &network)?;
            (problem, Some(envelope), "closed_form".to_string())
        }
        other => {
            return Err(field_err(
                "problem.kind",
                format!(
                    "unknown kind `{other}`; expected abs_deviation | euclidean | linear | \
                     worst_case_global | worst_case_local"
                ),
            ))
        }
    };

    Ok(Instantiated {
        problem,
        network,
        gossip,
        envelope,
        optimum_provenance: provenance,
    })
}
