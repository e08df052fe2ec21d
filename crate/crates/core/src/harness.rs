//! The simulator's cost model, run traces, and bound-comparison reports.
//!
//! Time semantics: one subgradient evaluation costs `ρ_i` time units on
//! node `i`, one edge traversal costs `τ`; work inside a phase is charged
//! as the maximum over nodes (it runs in parallel), and sequential phases
//! add up. Nothing else is ever charged, so total simulated times equal
//! closed-form accounting identities exactly.

use serde::Serialize;

use crate::network::{Network, SpanningTree};
use crate::objectives::worst_case::LowerBoundEnvelope;
use crate::objectives::ProblemInstance;
use crate::{Error, Result};

/// Simulated clock plus work counters for one run.
#[derive(Debug, Clone)]
pub struct CostModel {
    time: f64,
    tau: f64,
    rho: Vec<f64>,
    subgradients: Vec<u64>,
    messages: u64,
}

impl CostModel {
    pub fn new(net: &Network) -> Self {
        CostModel {
            time: 0.0,
            tau: net.tau(),
            rho: net.rho().to_vec(),
            subgradients: vec![0; net.n()],
            messages: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn subgradient_counts(&self) -> &[u64] {
        &self.subgradients
    }

    pub fn messages(&self) -> u64 {
        self.messages
    }

    /// Charges one parallel compute phase: node `i` performs `counts[i]`
    /// subgradient evaluations, the phase lasts `max_i counts_i · ρ_i`.
    pub fn charge_parallel_compute(&mut self, counts: &[u64]) -> f64 {
        assert_eq!(counts.len(), self.rho.len());
        let elapsed = counts
            .iter()
            .zip(&self.rho)
            .map(|(&c, &r)| c as f64 * r)
            .fold(0.0, f64::max);
        for (s, &c) in self.subgradients.iter_mut().zip(counts) {
            *s += c;
        }
        self.time += elapsed;
        elapsed
    }

    /// Charges a broadcast (or aggregation) along the tree: `depth · τ`,
    /// one vector message per tree edge.
    pub fn charge_tree_broadcast(&mut self, tree: &SpanningTree) -> f64 {
        let elapsed = tree.max_depth() as f64 * self.tau;
        self.time += elapsed;
        self.messages += tree.n() as u64 - 1;
        elapsed
    }

    /// Charges `steps` synchronous gossip rounds: `steps · τ`, one vector
    /// message per support edge per round.
    pub fn charge_gossip_rounds(&mut self, support_edges: usize, steps: usize) -> f64 {
        let elapsed = steps as f64 * self.tau;
        self.time += elapsed;
        self.messages += (steps * support_edges) as u64;
        elapsed
    }
}

/// One trace sample: everything the harness needs to compare against
/// bounds later.
#[derive(Debug, Clone)]
pub struct TraceSample {
    pub time: f64,
    /// Completed outer iterations when the sample was taken (0 = initial).
    pub iteration: usize,
    /// `f̄(θ_{i,t})` per node.
    pub per_node_value: Vec<f64>,
    /// `f̄` at the algorithm's reported output iterate (running average for
    /// averaging methods).
    pub output_value: f64,
    /// `(1/n) Σ ‖θ_i − mean‖₂`.
    pub consensus_residual: f64,
    pub subgradients: Vec<u64>,
    pub messages: u64,
}

/// Time series of one run plus identification metadata.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub seed: u64,
    pub config_digest: String,
    pub samples: Vec<TraceSample>,
}

impl RunTrace {
    pub fn new(algorithm: impl Into<String>, seed: u64, config_digest: impl Into<String>) -> Self {
        RunTrace {
            algorithm: algorithm.into(),
            seed,
            config_digest: config_digest.into(),
            samples: Vec::new(),
        }
    }

    /// Appends a sample; times must be strictly increasing and recorded
    /// values finite.
    pub fn record(&mut self, sample: TraceSample) {
        if let Some(last) = self.samples.last() {
            assert!(
                sample.time > last.time,
                "trace times must be strictly increasing ({} then {})",
                last.time,
                sample.time
            );
        }
        assert!(
            sample.output_value.is_finite()
                && sample.per_node_value.iter().all(|v| v.is_finite()),
            "trace values must be finite"
        );
        self.samples.push(sample);
    }

    pub fn total_time(&self) -> f64 {
        self.samples.last().map(|s| s.time).unwrap_or(0.0)
    }

    pub fn final_output_gap(&self, f_star: f64) -> f64 {
        self.samples
            .last()
            .map(|s| s.output_value - f_star)
            .unwrap_or(f64::NAN)
    }

    /// CSV with header `time,node,gap,consensus,subgrads,messages`, one row
    /// per (sample, node).
    pub fn to_csv(&self, f_star: f64) -> String {
        let mut out = String::from("time,node,gap,consensus,subgrads,messages\n");
        for s in &self.samples {
            for (node, value) in s.per_node_value.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    s.time,
                    node,
                    value - f_star,
                    s.consensus_residual,
                    s.subgradients[node],
                    s.messages
                ));
            }
        }
        out
    }
}

/// Which theorem-style upper bound applies to a run.
#[derive(Debug, Clone, Copy)]
pub enum UpperBoundSpec {
    /// Seed-averaged smoothing bound `10 R L_g d^{1/4} / t + 5 R L_g / √(tK)`.
    Drs {
        radius: f64,
        lipschitz_global: f64,
        dimension: usize,
        samples_per_node: usize,
    },
    /// Deterministic primal-dual bound `(R L_ℓ / √γ(P_K(W))) (1/t + 1/M)`.
    Mspd {
        radius: f64,
        lipschitz_local_avg: f64,
        accelerated_eigengap: f64,
        inner_iterations: usize,
    },
    /// Exact-prox variant: the `1/M` term vanishes.
    ChambollePockExact {
        radius: f64,
        lipschitz_local_avg: f64,
        accelerated_eigengap: f64,
    },
    /// Projected subgradient with step `R/(L√(t+1))`, uniform averaging:
    /// `1.5 R L_g √(t+1) / t`.
    Naive { radius: f64, lipschitz_global: f64 },
}

impl UpperBoundSpec {
    /// Bound value after `t` completed iterations (`None` before the first).
    pub fn evaluate(&self, iterations: usize) -> Option<f64> {
        if iterations == 0 {
            return None;
        }
        let t = iterations as f64;
        Some(match *self {
            UpperBoundSpec::Drs {
                radius,
                lipschitz_global,
                dimension,
                samples_per_node,
            } => {
                let d4 = (dimension as f64).powf(0.25);
                10.0 * radius * lipschitz_global * d4 / t
                    + 5.0 * radius * lipschitz_global / (t * samples_per_node as f64).sqrt()
            }
            UpperBoundSpec::Mspd {
                radius,
                lipschitz_local_avg,
                accelerated_eigengap,
                inner_iterations,
            } => {
                radius * lipschitz_local_avg / accelerated_eigengap.sqrt()
                    * (1.0 / t + 1.0 / inner_iterations as f64)
            }
            UpperBoundSpec::ChambollePockExact {
                radius,
                lipschitz_local_avg,
                accelerated_eigengap,
            } => radius * lipschitz_local_avg / (accelerated_eigengap.sqrt() * t),
            UpperBoundSpec::Naive {
                radius,
                lipschitz_global,
            } => 1.5 * radius * lipschitz_global * (t + 1.0).sqrt() / t,
        })
    }

    /// Whether the bound holds in expectation only (so violations are
    /// judged against mean + 2·stderr).
    pub fn is_stochastic(&self) -> bool {
        matches!(self, UpperBoundSpec::Drs { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpperBoundSpec::Drs { .. } => "drs_smoothing_rate",
            UpperBoundSpec::Mspd { .. } => "mspd_primal_dual_rate",
            UpperBoundSpec::ChambollePockExact { .. } => "chambolle_pock_exact_rate",
            UpperBoundSpec::Naive { .. } => "naive_subgradient_rate",
        }
    }
}

/// Per-sample bound comparison.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSample {
    pub time: f64,
    pub iteration: usize,
    pub mean_gap: f64,
    pub stderr: f64,
    /// Smallest per-node gap across seeds (what lower envelopes constrain).
    pub min_node_gap: f64,
    pub upper_bound: Option<f64>,
    pub lower_envelope: Option<f64>,
    pub upper_violation: bool,
    pub lower_violation: bool,
}

/// Bound-comparison report over a family of seed runs.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub algorithm: String,
    pub bound_name: String,
    pub envelope: Option<String>,
    pub f_star: f64,
    pub seeds: usize,
    pub samples: Vec<BoundSample>,
    pub upper_violations: usize,
    pub lower_violations: usize,
}

/// Compares aligned seed traces against the applicable upper bound and,
/// when the instance carries one, the lower-bound envelope inside its
/// validity horizon.
///
/// All traces must come from the same deterministic schedule (identical
/// sample times); the problem must carry an exact `f̄*`.
pub fn compare_bounds(
    traces: &[RunTrace],
    problem: &ProblemInstance,
    upper: &UpperBoundSpec,
    envelope: Option<&LowerBoundEnvelope>,
) -> Result<BoundReport> {
    let f_star = problem.optimum_value.ok_or(Error::MissingOptimum)?;
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParameter("need at least one trace".into()))?;
    for t in traces {
        if t.samples.len() != first.samples.len() {
            return Err(Error::SizeMismatch(
                "seed traces have differing sample counts".into(),
            ));
        }
    }

    let mut samples = Vec::with_capacity(first.samples.len());
    let mut upper_violations = 0;
    let mut lower_violations = 0;
    for idx in 0..first.samples.len() {
        let time = first.samples[idx].time;
        let iteration = first.samples[idx].iteration;
        let gaps: Vec<f64> = traces
            .iter()
            .map(|t| t.samples[idx].output_value - f_star)
            .collect();
        let (mean_gap, stderr) = mean_and_stderr(&gaps);
        let min_node_gap = traces
            .iter()
            .flat_map(|t| t.samples[idx].per_node_value.iter())
            .map(|v| v - f_star)
            .fold(f64::INFINITY, f64::min);

        let upper_bound = upper.evaluate(iteration);
        let slack = if upper.is_stochastic() {
            2.0 * stderr
        } else {
            1e-12
        };
        let upper_violation = upper_bound.is_some_and(|b| mean_gap > b + slack);

        let lower_envelope = envelope
            .filter(|e| time < e.horizon())
            .map(|e| e.evaluate(time));
        let lower_violation = lower_envelope.is_some_and(|e| min_node_gap < e - 1e-12);

        upper_violations += upper_violation as usize;
        lower_violations += lower_violation as usize;
        samples.push(BoundSample {
            time,
            iteration,
            mean_gap,
            stderr,
            min_node_gap,
            upper_bound,
            lower_envelope,
            upper_violation,
            lower_violation,
        });
    }

    Ok(BoundReport {
        algorithm: first.algorithm.clone(),
        bound_name: upper.name().into(),
        envelope: envelope.map(|e| e.kind_name().into()),
        f_star,
        seeds: traces.len(),
        samples,
        upper_violations,
        lower_violations,
    })
}

/// Sample mean and standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Closed-form total time of a DRS run: `T (2·depth·τ + K)` when all
/// compute times are 1.
pub fn drs_time_accounting(iterations: usize, samples: usize, depth: usize, tau: f64) -> f64 {
    iterations as f64 * (2.0 * depth as f64 * tau + samples as f64)
}

/// Closed-form total time of naive distributed subgradient:
/// `iters (2·depth·τ + 1)`.
pub fn naive_time_accounting(iterations: usize, depth: usize, tau: f64) -> f64 {
    iterations as f64 * (2.0 * depth as f64 * tau + 1.0)
}

/// Closed-form total time of MSPD: `T (K τ + M)`.
pub fn mspd_time_accounting(outer: usize, gossip_steps: usize, inner: usize, tau: f64) -> f64 {
    outer as f64 * (gossip_steps as f64 * tau + inner as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_compute_charges_the_max() {
        let net = Network::path(2, 1.0)
            .unwrap()
            .with_compute_times(vec![1.0, 2.0])
            .unwrap();
        let mut clock = CostModel::new(&net);
        // {10, 20} evaluations at times-per-subgradient {1, 2} → max(10, 40).
        let elapsed = clock.charge_parallel_compute(&[10, 20]);
        assert_eq!(elapsed, 40.0);
        assert_eq!(clock.time(), 40.0);
        assert_eq!(clock.subgradient_counts(), &[10, 20]);

        assert_eq!(clock.charge_parallel_compute(&[0, 0]), 0.0);
    }

    #[test]
    fn broadcast_and_gossip_charges() {
        let star = Network::star(4, 2.0).unwrap();
        let tree = star.spanning_tree().unwrap();
        let mut clock = CostModel::new(&star);
        assert_eq!(clock.charge_tree_broadcast(&tree), 2.0);

        let mut clock2 = CostModel::new(&Network::path(3, 0.5).unwrap());
        assert_eq!(clock2.charge_gossip_rounds(2, 3), 1.5);
        assert_eq!(clock2.messages(), 6);

        // End-rooted path depth: force it by hand-building the tree.
        let tree = SpanningTree {
            root: 0,
            parent: vec![None, Some(0), Some(1), Some(2), Some(3)],
            depth: vec![0, 1, 2, 3, 4],
        };
        let mut clock3 = CostModel::new(&Network::path(5, 1.0).unwrap());
        assert_eq!(clock3.charge_tree_broadcast(&tree), 4.0);
    }

    #[test]
    fn trace_rejects_non_increasing_times() {
        let mut trace = RunTrace::new("x", 0, "");
        trace.record(TraceSample {
            time: 1.0,
            iteration: 1,
            per_node_value: vec![0.0],
            output_value: 0.0,
            consensus_residual: 0.0,
            subgradients: vec![0],
            messages: 0,
        });
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            trace.record(TraceSample {
                time: 1.0,
                iteration: 2,
                per_node_value: vec![0.0],
                output_value: 0.0,
                consensus_residual: 0.0,
                subgradients: vec![0],
                messages: 0,
            });
        }));
        assert!(result.is_err());
    }

    #[test]
    fn compare_bounds_requires_optimum() {
        use crate::objectives::ObjectiveOracle;
        use ndarray::array;
        let p = ProblemInstance::new(
            1,
            vec![ObjectiveOracle::abs_deviation(array![0.0])],
            1.0,
            1.0,
        )
        .unwrap();
        let trace = RunTrace::new("naive", 0, "");
        let err = compare_bounds(
            &[trace],
            &p,
            &UpperBoundSpec::Naive {
                radius: 1.0,
                lipschitz_global: 1.0,
            },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingOptimum));
    }

    #[test]
    fn mean_and_stderr_basics() {
        let (m, se) = mean_and_stderr(&[1.0, 1.0, 1.0]);
        assert_eq!(m, 1.0);
        assert_eq!(se, 0.0);
        let (m, se) = mean_and_stderr(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((se - 1.0 / 2.0f64.sqrt() * 2.0f64.sqrt() / 2.0f64.sqrt()).abs() < 1e-12
            || se > 0.0);
    }
}
