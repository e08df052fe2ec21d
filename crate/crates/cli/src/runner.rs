//! Seed-sweep execution and output files: `trace_<seed>.csv`,
//! `bounds.json`, `summary.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nsdo::drs::{run_drs, run_naive_subgradient, DrsConfig, RunOptions, RunOutcome};
use nsdo::harness::{
    compare_bounds, drs_time_accounting, mean_and_stderr, mspd_time_accounting,
    naive_time_accounting, BoundReport, CostModel, UpperBoundSpec,
};
use nsdo::mspd::{run_chambolle_pock_exact, run_mspd, MspdConfig};
use nsdo::network::{accelerated_eigengap, gossip_average};

use crate::{
    field_err, AlgorithmKind, ConfigError, ExperimentConfig, Instantiated, ManualConstants,
};

/// Command-line toggles for `run`.
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub seeds_override: Option<Vec<u64>>,
    pub out_override: Option<PathBuf>,
    pub print_constants: bool,
    /// Skip the oracle solve and the bounds report.
    pub no_bounds: bool,
}

/// Resolved per-algorithm constants for one experiment.
enum ResolvedAlgorithm {
    Naive,
    Drs(DrsConfig),
    Mspd(MspdConfig),
    CpExact {
        cfg: MspdConfig,
        inner_tol: f64,
    },
}

fn resolve_algorithm(
    config: &ExperimentConfig,
    inst: &Instantiated,
) -> Result<(AlgorithmKind, ResolvedAlgorithm), ConfigError> {
    let kind = AlgorithmKind::parse(&config.algorithm.name)?;
    let manual = config.algorithm.constants.manual()?;
    let resolved = match kind {
        AlgorithmKind::Naive => ResolvedAlgorithm::Naive,
        AlgorithmKind::Drs => {
            let mut cfg = DrsConfig::from_target_accuracy(
                config.epsilon,
                inst.problem.radius,
                inst.problem.lipschitz_global,
                inst.problem.dimension,
                0,
            )?;
            if let Some(m) = manual {
                apply_drs_overrides(&mut cfg, m)?;
            }
            ResolvedAlgorithm::Drs(cfg)
        }
        AlgorithmKind::Mspd | AlgorithmKind::CpExact => {
            let mut cfg = MspdConfig::from_target_accuracy(
                config.epsilon,
                inst.problem.radius,
                inst.problem.lipschitz_local_avg(),
                &inst.gossip,
                inst.network.tau(),
            )?;
            cfg.heterogeneous = config.algorithm.heterogeneous;
            if let Some(m) = manual {
                apply_mspd_overrides(&mut cfg, m);
            }
            if kind == AlgorithmKind::Mspd {
                ResolvedAlgorithm::Mspd(cfg)
            } else {
                ResolvedAlgorithm::CpExact {
                    cfg,
                    inner_tol: config.algorithm.inner_tol.unwrap_or(1e-8),
                }
            }
        }
    };
    Ok((kind, resolved))
}

fn apply_drs_overrides(cfg: &mut DrsConfig, m: &ManualConstants) -> Result<(), ConfigError> {
    if let Some(t) = m.outer {
        cfg.iterations = t;
    }
    if let Some(k) = m.gossip_or_samples {
        cfg.samples_per_node = k;
    }
    if m.inner.is_some() || m.eta.is_some() || m.sigma.is_some() {
        return Err(field_err(
            "algorithm.constants",
            "drs accepts only T and K overrides",
        ));
    }
    Ok(())
}

fn apply_mspd_overrides(cfg: &mut MspdConfig, m: &ManualConstants) {
    if let Some(t) = m.outer {
        cfg.outer_iterations = t;
    }
    if let Some(k) = m.gossip_or_samples {
        cfg.gossip_steps = k;
    }
    if let Some(mm) = m.inner {
        cfg.inner_iterations = mm;
    }
    if let Some(eta) = m.eta {
        cfg.primal_step = eta;
    }
    if let Some(sigma) = m.sigma {
        cfg.dual_step = sigma;
    }
}

/// Renders the derived constants the way `--print-constants` shows them.
pub fn constants_lines(
    config: &ExperimentConfig,
    inst: &Instantiated,
) -> Result<Vec<String>, ConfigError> {
    let (kind, resolved) = resolve_algorithm(config, inst)?;
    let mut lines = vec![format!("algorithm={}", config.algorithm.name)];
    match &resolved {
        ResolvedAlgorithm::Naive => {
            let budget = ((inst.problem.radius * inst.problem.lipschitz_global / config.epsilon)
                .powi(2))
            .ceil() as usize;
            lines.push(format!("iterations={budget}"));
        }
        ResolvedAlgorithm::Drs(cfg) => {
            lines.push(format!("T={}", cfg.iterations));
            lines.push(format!("K={}", cfg.samples_per_node));
        }
        ResolvedAlgorithm::Mspd(cfg) | ResolvedAlgorithm::CpExact { cfg, .. } => {
            lines.push(format!("K={}", cfg.gossip_steps));
            lines.push(format!("T={}", cfg.outer_iterations));
            lines.push(format!("M={}", cfg.inner_iterations));
            lines.push(format!("c1={}", cfg.contraction));
            lines.push(format!("eta={}", cfg.primal_step));
            lines.push(format!("sigma={}", cfg.dual_step));
        }
    }
    let _ = kind;
    Ok(lines)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub final_mean_gap: Option<f64>,
    pub final_stderr: Option<f64>,
    pub total_simulated_time: f64,
    /// Closed-form accounting for the same constants; equals the simulated
    /// time exactly.
    pub accounting_time: f64,
    pub optimum_value: Option<f64>,
    pub optimum_provenance: String,
    /// MSPD-family only: worst per-node gap after gossip-averaging the
    /// final iterates over the network.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_gossip_max_node_gap: Option<f64>,
}

pub struct ExperimentOutput {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub bounds: Option<BoundReport>,
    pub trace_paths: Vec<PathBuf>,
}

fn atomic_write(path: &Path, contents: &str) -> Result<(), ConfigError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn run_one_seed(
    config: &ExperimentConfig,
    inst: &Instantiated,
    resolved: &ResolvedAlgorithm,
    seed: u64,
) -> Result<RunOutcome, ConfigError> {
    let mut clock = CostModel::new(&inst.network);
    let opts = RunOptions::default();
    let outcome = match resolved {
        ResolvedAlgorithm::Naive => run_naive_subgradient(
            &inst.problem,
            &inst.network,
            config.epsilon,
            seed,
            &mut clock,
            opts,
        )?,
        ResolvedAlgorithm::Drs(cfg) => {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            run_drs(&inst.problem, &inst.network, &cfg, &mut clock, opts)?
        }
        ResolvedAlgorithm::Mspd(cfg) => {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            run_mspd(
                &inst.problem,
                &inst.network,
                &inst.gossip,
                &cfg,
                &mut clock,
                opts,
            )?
        }
        ResolvedAlgorithm::CpExact { cfg, inner_tol } => run_chambolle_pock_exact(
            &inst.problem,
            &inst.network,
            &inst.gossip,
            cfg.primal_step,
            cfg.dual_step,
            cfg.outer_iterations,
            cfg.gossip_steps,
            *inner_tol,
            &mut clock,
            opts,
        )?,
    };
    Ok(outcome)
}

/// Runs the experiment a config describes: one run per seed (fanned out
/// across threads), trace/bounds/summary files in the output directory.
pub fn run_experiment(
    config: &ExperimentConfig,
    flags: &RunFlags,
) -> Result<ExperimentOutput, ConfigError> {
    let mut config = config.clone();
    if let Some(seeds) = &flags.seeds_override {
        config.seeds = seeds.clone();
    }
    let inst = crate::instantiate(&config, flags.no_bounds)?;
    let (kind, resolved) = resolve_algorithm(&config, &inst)?;

    let out_dir = flags
        .out_override
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    // Seed fan-out: each worker owns its run end to end.
    let seeds = config.seeds.clone();
    let mut outcomes: Vec<Option<Result<RunOutcome, ConfigError>>> =
        (0..seeds.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &seed in &seeds {
            let config = &config;
            let inst = &inst;
            let resolved = &resolved;
            handles.push(scope.spawn(move || run_one_seed(config, inst, resolved, seed)));
        }
        for (slot, handle) in outcomes.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("seed worker panicked"));
        }
    });
    let outcomes: Vec<RunOutcome> = outcomes
        .into_iter()
        .map(|o| o.expect("all slots filled"))
        .collect::<Result<_, _>>()?;

    // Gap column needs a reference value; fall back to raw objective values
    // (f* = 0) when bounds are skipped and no closed form exists.
    let f_star = inst.problem.optimum_value.unwrap_or(0.0);
    let mut trace_paths = Vec::new();
    for (seed, outcome) in seeds.iter().zip(&outcomes) {
        let path = out_dir.join(format!("trace_{seed}.csv"));
        atomic_write(&path, &outcome.trace.to_csv(f_star))?;
        trace_paths.push(path);
    }

    let traces: Vec<_> = outcomes.iter().map(|o| o.trace.clone()).collect();
    let bounds = if flags.no_bounds || inst.problem.optimum_value.is_none() {
        None
    } else {
        let upper = match &resolved {
            ResolvedAlgorithm::Naive => UpperBoundSpec::Naive {
                radius: inst.problem.radius,
                lipschitz_global: inst.problem.lipschitz_global,
            },
            ResolvedAlgorithm::Drs(cfg) => UpperBoundSpec::Drs {
                radius: cfg.radius,
                lipschitz_global: cfg.lipschitz_global,
                dimension: cfg.dimension,
                samples_per_node: cfg.samples_per_node,
            },
            ResolvedAlgorithm::Mspd(cfg) => UpperBoundSpec::Mspd {
                radius: cfg.radius,
                lipschitz_local_avg: cfg.lipschitz_local_avg,
                accelerated_eigengap: accelerated_eigengap(&inst.gossip, cfg.gossip_steps)?,
                inner_iterations: cfg.inner_iterations,
            },
            ResolvedAlgorithm::CpExact { cfg, .. } => UpperBoundSpec::ChambollePockExact {
                radius: cfg.radius,
                lipschitz_local_avg: cfg.lipschitz_local_avg,
                accelerated_eigengap: accelerated_eigengap(&inst.gossip, cfg.gossip_steps)?,
            },
        };
        let report = compare_bounds(&traces, &inst.problem, &upper, inst.envelope.as_ref())?;
        atomic_write(
            &out_dir.join("bounds.json"),
            &serde_json::to_string_pretty(&report).expect("serializable report"),
        )?;
        Some(report)
    };

    let final_gaps: Vec<f64> = outcomes
        .iter()
        .map(|o| o.trace.final_output_gap(f_star))
        .collect();
    let (mean_gap, stderr) = mean_and_stderr(&final_gaps);
    let total_time = outcomes
        .first()
        .map(|o| o.trace.total_time())
        .unwrap_or(0.0);
    let depth = inst.network.spanning_tree()?.max_depth();
    let accounting_time = match &resolved {
        ResolvedAlgorithm::Naive => {
            let budget = ((inst.problem.radius * inst.problem.lipschitz_global / config.epsilon)
                .powi(2))
            .ceil()
            .max(1.0) as usize;
            naive_time_accounting(budget, depth, inst.network.tau())
        }
        ResolvedAlgorithm::Drs(cfg) => drs_time_accounting(
            cfg.iterations,
            cfg.samples_per_node,
            depth,
            inst.network.tau(),
        ),
        ResolvedAlgorithm::Mspd(cfg) => mspd_time_accounting(
            cfg.outer_iterations,
            cfg.gossip_steps,
            cfg.inner_iterations,
            inst.network.tau(),
        ),
        ResolvedAlgorithm::CpExact { cfg, .. } => cfg.outer_iterations as f64
            * (cfg.gossip_steps as f64 * inst.network.tau() + 1.0),
    };

    // MSPD-family: also report the per-node picture after averaging the
    // final iterates over the network.
    let post_gossip_max_node_gap = match (&resolved, kind) {
        (ResolvedAlgorithm::Mspd(cfg), _) | (ResolvedAlgorithm::CpExact { cfg, .. }, _)
            if inst.problem.optimum_value.is_some() =>
        {
            let outcome = &outcomes[0];
            let (averaged, _) = gossip_average(
                &outcome.per_node,
                &inst.gossip,
                cfg.gossip_steps,
                1e-9 * inst.problem.radius.max(1.0),
            )?;
            Some(
                averaged
                    .iter()
                    .map(|theta| inst.problem.average_value(theta) - f_star)
                    .fold(f64::NEG_INFINITY, f64::max),
            )
        }
        _ => None,
    };

    let summary = Summary {
        algorithm: config.algorithm.name.clone(),
        seeds: seeds.clone(),
        epsilon: config.epsilon,
        final_mean_gap: if inst.problem.optimum_value.is_some() {
            Some(mean_gap)
        } else {
            None
        },
        final_stderr: if inst.problem.optimum_value.is_some() {
            Some(stderr)
        } else {
            None
        },
        total_simulated_time: total_time,
        accounting_time,
        optimum_value: inst.problem.optimum_value,
        optimum_provenance: inst.optimum_provenance.clone(),
        post_gossip_max_node_gap,
    };
    atomic_write(
        &out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("serializable summary"),
    )?;

    Ok(ExperimentOutput {
        out_dir,
        summary,
        bounds,
        trace_paths,
    })
}
