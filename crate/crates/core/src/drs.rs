//! Distributed randomized smoothing over a spanning tree, plus the naive
//! distributed subgradient baseline, both running on the simulated cost
//! model.
//!
//! Per iteration the master broadcasts the query point down the tree, every
//! node draws the same `K` Gaussian perturbations from the shared seed and
//! averages local subgradients, and the results aggregate back up the
//! tree. Broadcast and aggregation each cost `depth·τ`; the parallel
//! smoothing phase costs `max_i K·ρ_i`.

use ndarray::Array1;

use crate::harness::{CostModel, RunTrace, TraceSample};
use crate::network::Network;
use crate::numerics::{project_ball, Vector};
use crate::objectives::{smoothed_estimate, GaussianStream, ProblemInstance};
use crate::{Error, Result};

/// Constants of one distributed-randomized-smoothing run.
///
/// `iterations` is `T = ⌈20 R L_g d^{1/4} / ε⌉` and `samples_per_node` is
/// `K = ⌈5 R L_g d^{-1/4} / ε⌉`; the schedules are
/// `α_0 = 1`, `α_{t+1} = 2/(1 + √(1 + 4/α_t²))`,
/// `γ_t = R d^{-1/4} α_t`, and
/// `η_t = R α_t / (2 L_g (d^{1/4} + √((t+1)/K)))`.
#[derive(Debug, Clone)]
pub struct DrsConfig {
    pub epsilon: f64,
    pub radius: f64,
    pub lipschitz_global: f64,
    pub dimension: usize,
    pub iterations: usize,
    pub samples_per_node: usize,
    pub seed: u64,
}

impl DrsConfig {
    /// Derives `T` and `K` from the target accuracy.
    pub fn from_target_accuracy(
        epsilon: f64,
        radius: f64,
        lipschitz_global: f64,
        dimension: usize,
        seed: u64,
    ) -> Result<Self> {
        if epsilon <= 0.0 || radius <= 0.0 || lipschitz_global <= 0.0 || dimension == 0 {
            return Err(Error::InvalidParameter(
                "target accuracy, radius, Lipschitz constant and dimension must be positive"
                    .into(),
            ));
        }
        let d4 = (dimension as f64).powf(0.25);
        let iterations = (20.0 * radius * lipschitz_global * d4 / epsilon).ceil() as usize;
        let samples = (5.0 * radius * lipschitz_global / (d4 * epsilon)).ceil() as usize;
        Ok(DrsConfig {
            epsilon,
            radius,
            lipschitz_global,
            dimension,
            iterations: iterations.max(1),
            samples_per_node: samples.max(1),
            seed,
        })
    }

    /// The accelerated-sequence schedule `α_0..α_T` inclusive.
    pub fn alpha_schedule(&self) -> Vec<f64> {
        let mut alphas = Vec::with_capacity(self.iterations + 1);
        let mut a = 1.0f64;
        alphas.push(a);
        for _ in 0..self.iterations {
            a = 2.0 / (1.0 + (1.0 + 4.0 / (a * a)).sqrt());
            alphas.push(a);
        }
        alphas
    }

    /// Smoothing radius at iteration `t`.
    pub fn smoothing_radius(&self, alpha_t: f64) -> f64 {
        self.radius * (self.dimension as f64).powf(-0.25) * alpha_t
    }

    /// Gradient step at iteration `t`.
    pub fn step_size(&self, t: usize, alpha_t: f64) -> f64 {
        let d4 = (self.dimension as f64).powf(0.25);
        let drift = ((t as f64 + 1.0) / self.samples_per_node as f64).sqrt();
        self.radius * alpha_t / (2.0 * self.lipschitz_global * (d4 + drift))
    }

    pub fn digest(&self) -> String {
        format!(
            "drs(eps={},R={},Lg={},d={},T={},K={})",
            self.epsilon,
            self.radius,
            self.lipschitz_global,
            self.dimension,
            self.iterations,
            self.samples_per_node
        )
    }
}

/// Optional run controls shared by all simulators.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop recording iterations once the simulated clock passes this time.
    pub stop_after_time: Option<f64>,
}

/// Result of one simulated run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// The algorithm's reported iterate.
    pub output: Vector,
    /// Per-node final iterates (identical for master/slave methods).
    pub per_node: Vec<Vector>,
    pub trace: RunTrace,
}

fn initial_sample(problem: &ProblemInstance, clock: &CostModel) -> TraceSample {
    let zero = Array1::zeros(problem.dimension);
    let v = problem.average_value(&zero);
    TraceSample {
        time: clock.time(),
        iteration: 0,
        per_node_value: vec![v; problem.n()],
        output_value: v,
        consensus_residual: 0.0,
        subgradients: clock.subgradient_counts().to_vec(),
        messages: clock.messages(),
    }
}

fn record_initial(trace: &mut RunTrace, problem: &ProblemInstance, clock: &CostModel) {
    let mut s = initial_sample(problem, clock);
    // The initial memory is {0} at simulated time 0.
    s.time = clock.time();
    trace.samples.push(s);
}

/// Runs distributed randomized smoothing for the configured `T` iterations.
///
/// The `K` Gaussian samples at iteration `t` are keyed by
/// `(seed, t, k, coordinate)`, so every node regenerates the identical
/// perturbations; no vectors are ever communicated for synchronization.
pub fn run_drs(
    problem: &ProblemInstance,
    net: &Network,
    cfg: &DrsConfig,
    clock: &mut CostModel,
    opts: RunOptions,
) -> Result<RunOutcome> {
    if problem.dimension != cfg.dimension {
        return Err(Error::ConfigMismatch(format!(
            "config dimension {} vs problem {}",
            cfg.dimension, problem.dimension
        )));
    }
    if (problem.radius - cfg.radius).abs() > 1e-12 * problem.radius.max(1.0) {
        return Err(Error::ConfigMismatch(format!(
            "config radius {} vs problem {}",
            cfg.radius, problem.radius
        )));
    }
    if (problem.lipschitz_global - cfg.lipschitz_global).abs()
        > 1e-9 * problem.lipschitz_global.max(1.0)
    {
        return Err(Error::ConfigMismatch(format!(
            "config global Lipschitz {} vs problem {}",
            cfg.lipschitz_global, problem.lipschitz_global
        )));
    }
    if problem.n() != net.n() {
        return Err(Error::ConfigMismatch(format!(
            "problem has {} locals, network {} nodes",
            problem.n(),
            net.n()
        )));
    }

    let n = problem.n();
    let d = problem.dimension;
    let tree = net.spanning_tree()?;
    let stream = GaussianStream::new(cfg.seed);
    let alphas = cfg.alpha_schedule();
    let center: Vector = Array1::zeros(d);

    let mut x: Vector = Array1::zeros(d);
    let mut z: Vector = Array1::zeros(d);
    let mut grad_accum: Vector = Array1::zeros(d);

    let mut trace = RunTrace::new("drs", cfg.seed, cfg.digest());
    record_initial(&mut trace, problem, clock);

    let k_counts = vec![cfg.samples_per_node as u64; n];
    for t in 0..cfg.iterations {
        let alpha = alphas[t];
        let y = &x * (1.0 - alpha) + &z * alpha;
        let gamma_t = cfg.smoothing_radius(alpha);

        clock.charge_tree_broadcast(&tree);
        let mut g_sum: Vector = Array1::zeros(d);
        for f in &problem.locals {
            let est = smoothed_estimate(f, &y, gamma_t, cfg.samples_per_node, &stream, t as u64);
            g_sum += &est.gradient;
        }
        clock.charge_parallel_compute(&k_counts);
        clock.charge_tree_broadcast(&tree);

        grad_accum += &(g_sum / (n as f64 * alpha));
        let eta_next = cfg.step_size(t + 1, alphas[t + 1]);
        z = project_ball(&(-&grad_accum * eta_next), &center, cfg.radius);
        x = &x * (1.0 - alpha) + &z * alpha;

        let v = problem.average_value(&x);
        trace.record(TraceSample {
            time: clock.time(),
            iteration: t + 1,
            per_node_value: vec![v; n],
            output_value: v,
            consensus_residual: 0.0,
            subgradients: clock.subgradient_counts().to_vec(),
            messages: clock.messages(),
        });
        if opts.stop_after_time.is_some_and(|limit| clock.time() >= limit) {
            break;
        }
    }

    Ok(RunOutcome {
        per_node: vec![x.clone(); n],
        output: x,
        trace,
    })
}

/// Naive distributed projected subgradient descent: broadcast the iterate,
/// average one subgradient per node, step with `R/(L_g √(t+1))`, and report
/// the uniform average of the iterates. Each iteration charges
/// `2·depth·τ + 1` (for unit compute times) and the budget it exhausts is
/// `⌈(R L_g / ε)²⌉` iterations.
pub fn run_naive_subgradient(
    problem: &ProblemInstance,
    net: &Network,
    epsilon: f64,
    seed: u64,
    clock: &mut CostModel,
    opts: RunOptions,
) -> Result<RunOutcome> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if problem.n() != net.n() {
        return Err(Error::ConfigMismatch(format!(
            "problem has {} locals, network {} nodes",
            problem.n(),
            net.n()
        )));
    }
    let radius = problem.radius;
    let lipschitz = problem.lipschitz_global;
    let budget = ((radius * lipschitz / epsilon).powi(2)).ceil() as usize;
    let budget = budget.max(1);

    let n = problem.n();
    let d = problem.dimension;
    let tree = net.spanning_tree()?;
    let center: Vector = Array1::zeros(d);
    let one_each = vec![1u64; n];

    let mut theta: Vector = Array1::zeros(d);
    let mut iterate_sum: Vector = Array1::zeros(d);

    let mut trace = RunTrace::new(
        "naive",
        seed,
        format!("naive(eps={epsilon},R={radius},Lg={lipschitz},budget={budget})"),
    );
    record_initial(&mut trace, problem, clock);

    for t in 0..budget {
        clock.charge_tree_broadcast(&tree);
        let g = problem.average_subgradient(&theta);
        clock.charge_parallel_compute(&one_each);
        clock.charge_tree_broadcast(&tree);

        // Average the query points (the iterates subgradients were taken
        // at); the textbook rate applies to exactly that average.
        iterate_sum += &theta;
        let step = radius / (lipschitz * ((t + 1) as f64).sqrt());
        theta = project_ball(&(&theta - &(g * step)), &center, radius);
        let averaged = &iterate_sum / (t + 1) as f64;
        let v = problem.average_value(&averaged);
        trace.record(TraceSample {
            time: clock.time(),
            iteration: t + 1,
            per_node_value: vec![v; n],
            output_value: v,
            consensus_residual: 0.0,
            subgradients: clock.subgradient_counts().to_vec(),
            messages: clock.messages(),
        });
        if opts.stop_after_time.is_some_and(|limit| clock.time() >= limit) {
            break;
        }
    }

    let completed = trace.samples.last().map(|s| s.iteration).unwrap_or(0).max(1);
    let output = &iterate_sum / completed as f64;
    Ok(RunOutcome {
        per_node: vec![output.clone(); n],
        output,
        trace,
    })
}
