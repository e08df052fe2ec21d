//! Multi-step primal-dual: a Chambolle–Pock outer loop over the consensus
//! saddle-point formulation, with Chebyshev-accelerated gossip for the dual
//! update and an inner projected-subgradient approximation of the proximal
//! step. A reference variant solves the proximal step to a certified
//! tolerance for cross-checking.

use ndarray::Array1;

use crate::harness::{CostModel, RunTrace, TraceSample};
use crate::network::{accelerated_gossip, accelerated_lambda_max, GossipMatrix, Network};
use crate::numerics::{l2_norm, project_ball, Vector};
use crate::objectives::{ObjectiveKind, ObjectiveOracle, ProblemInstance};
use crate::{Error, Result};

pub use crate::drs::{RunOptions, RunOutcome};

/// Constants of one multi-step primal-dual run.
///
/// `gossip_steps = max(1, ⌊1/√γ(W)⌋)`, `T = M = ⌈4 R L_ℓ / ε⌉`,
/// `c₁ = (1−√γ)/(1+√γ)`, `η = (nR/L_ℓ)(1−c₁^K)/(1+c₁^K)`, and the dual
/// step is the header value `(1+c₁^{2K})/(τ(1−c₁^K)²)` capped at
/// `1/(η λ₁(P_K(W)))` so the step-size condition `σ η λ₁ ≤ 1` always
/// holds.
#[derive(Debug, Clone)]
pub struct MspdConfig {
    pub epsilon: f64,
    pub radius: f64,
    pub lipschitz_local_avg: f64,
    pub gossip_steps: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub contraction: f64,
    pub primal_step: f64,
    pub dual_step: f64,
    /// When set, node `i` runs `⌈M/ρ_i⌉` inner steps instead of `M`.
    pub heterogeneous: bool,
    pub seed: u64,
}

impl MspdConfig {
    pub fn from_target_accuracy(
        epsilon: f64,
        radius: f64,
        lipschitz_local_avg: f64,
        gossip: &GossipMatrix,
        tau: f64,
    ) -> Result<Self> {
        if epsilon <= 0.0 || radius <= 0.0 || lipschitz_local_avg <= 0.0 {
            return Err(Error::InvalidParameter(
                "target accuracy, radius and Lipschitz constant must be positive".into(),
            ));
        }
        let n = gossip.order() as f64;
        let gamma = gossip.eigengap()?;
        let gossip_steps = ((1.0 / gamma.sqrt()).floor() as usize).max(1);
        let iterations = (4.0 * radius * lipschitz_local_avg / epsilon).ceil() as usize;
        let iterations = iterations.max(1);
        let contraction = (1.0 - gamma.sqrt()) / (1.0 + gamma.sqrt());
        let ck = contraction.powi(gossip_steps as i32);
        let primal_step = n * radius / lipschitz_local_avg * (1.0 - ck) / (1.0 + ck);

        let lambda_pk = accelerated_lambda_max(gossip, gossip_steps)?;
        let cap = if lambda_pk > 0.0 {
            1.0 / (primal_step * lambda_pk)
        } else {
            f64::INFINITY
        };
        let header = if tau > 0.0 {
            (1.0 + ck * ck) / (tau * (1.0 - ck) * (1.0 - ck))
        } else {
            f64::INFINITY
        };
        let dual_step = match (header.is_finite(), cap.is_finite()) {
            (false, false) => 0.0,
            _ => header.min(cap),
        };
        Ok(MspdConfig {
            epsilon,
            radius,
            lipschitz_local_avg,
            gossip_steps,
            outer_iterations: iterations,
            inner_iterations: iterations,
            contraction,
            primal_step,
            dual_step,
            heterogeneous: false,
            seed: 0,
        })
    }

    pub fn digest(&self) -> String {
        format!(
            "mspd(eps={},R={},Lell={},K={},T={},M={},eta={},sigma={})",
            self.epsilon,
            self.radius,
            self.lipschitz_local_avg,
            self.gossip_steps,
            self.outer_iterations,
            self.inner_iterations,
            self.primal_step,
            self.dual_step
        )
    }
}

/// `M` projected-subgradient steps for the proximal subproblem
/// `argmin_{θ ∈ B(R)} (1/n) f(θ) − θ·y + ‖θ − θ_t‖²/(2η)`, with the
/// strongly-convex step schedule `2/(m+2)` folded into the printed
/// recurrence.
pub fn inner_prox_subgradient(
    f: &ObjectiveOracle,
    dual: &Vector,
    anchor: &Vector,
    primal_step: f64,
    n: usize,
    steps: usize,
    radius: f64,
) -> Vector {
    assert!(steps >= 1);
    let center: Vector = Array1::zeros(anchor.len());
    let mut current = anchor.clone();
    for m in 0..steps {
        let mf = m as f64;
        let g = f.subgradient(&current);
        let bracket = &(g * (primal_step / n as f64)) - &(dual * primal_step) - anchor;
        let next = &current * (mf / (mf + 2.0)) - &(bracket * (2.0 / (mf + 2.0)));
        current = project_ball(&next, &center, radius);
    }
    current
}

fn consensus_residual(columns: &[Vector]) -> f64 {
    let n = columns.len();
    let d = columns[0].len();
    let mut mean: Vector = Array1::zeros(d);
    for c in columns {
        mean += c;
    }
    mean /= n as f64;
    columns.iter().map(|c| l2_norm(&(c - &mean))).sum::<f64>() / n as f64
}

fn check_orders(problem: &ProblemInstance, net: &Network, gossip: &GossipMatrix) -> Result<()> {
    if problem.n() != gossip.order() || net.n() != gossip.order() {
        return Err(Error::ConfigMismatch(format!(
            "problem has {} locals, network {} nodes, gossip order {}",
            problem.n(),
            net.n(),
            gossip.order()
        )));
    }
    Ok(())
}

struct PrimalDualLoop<'a> {
    problem: &'a ProblemInstance,
    gossip: &'a GossipMatrix,
    dual_step: f64,
    theta: Vec<Vector>,
    theta_prev: Vec<Vector>,
    dual: Vec<Vector>,
    iterate_sum: Vector,
}

impl<'a> PrimalDualLoop<'a> {
    fn new(problem: &'a ProblemInstance, gossip: &'a GossipMatrix, dual_step: f64) -> Self {
        let n = problem.n();
        let d = problem.dimension;
        PrimalDualLoop {
            problem,
            gossip,
            dual_step,
            theta: vec![Array1::zeros(d); n],
            theta_prev: vec![Array1::zeros(d); n],
            dual: vec![Array1::zeros(d); n],
            iterate_sum: Array1::zeros(d),
        }
    }

    /// Dual ascent through the accelerated gossip of the extrapolated
    /// primal columns.
    fn dual_update(&mut self, gossip_steps: usize) -> Result<()> {
        let extrapolated: Vec<Vector> = self
            .theta
            .iter()
            .zip(&self.theta_prev)
            .map(|(cur, prev)| &(cur * 2.0) - prev)
            .collect();
        let mixed = accelerated_gossip(&extrapolated, self.gossip, gossip_steps)?;
        for (y, m) in self.dual.iter_mut().zip(mixed) {
            y.scaled_add(-self.dual_step, &m);
        }
        Ok(())
    }

    fn commit_primal(&mut self, new_theta: Vec<Vector>) {
        self.theta_prev = std::mem::replace(&mut self.theta, new_theta);
        for c in &self.theta {
            self.iterate_sum += c;
        }
    }

    fn averaged_output(&self, completed: usize) -> Vector {
        &self.iterate_sum / (self.problem.n() * completed.max(1)) as f64
    }

    fn sample(&self, clock: &CostModel, iteration: usize) -> TraceSample {
        let avg = self.averaged_output(iteration);
        TraceSample {
            time: clock.time(),
            iteration,
            per_node_value: self
                .theta
                .iter()
                .map(|c| self.problem.average_value(c))
                .collect(),
            output_value: self.problem.average_value(&avg),
            consensus_residual: consensus_residual(&self.theta),
            subgradients: clock.subgradient_counts().to_vec(),
            messages: clock.messages(),
        }
    }
}

fn record_initial(trace: &mut RunTrace, problem: &ProblemInstance, clock: &CostModel) {
    let zero = Array1::zeros(problem.dimension);
    let v = problem.average_value(&zero);
    trace.samples.push(TraceSample {
        time: clock.time(),
        iteration: 0,
        per_node_value: vec![v; problem.n()],
        output_value: v,
        consensus_residual: 0.0,
        subgradients: clock.subgradient_counts().to_vec(),
        messages: clock.messages(),
    });
}

/// Runs MSPD for `T` outer iterations; returns the double average
/// `θ̄_T = (1/(nT)) Σ_{t=1..T} Σ_i θ_i^t` and the per-node final iterates.
pub fn run_mspd(
    problem: &ProblemInstance,
    net: &Network,
    gossip: &GossipMatrix,
    cfg: &MspdConfig,
    clock: &mut CostModel,
    opts: RunOptions,
) -> Result<RunOutcome> {
    check_orders(problem, net, gossip)?;
    let n = problem.n();
    let support_edges = net.edges().len();

    let inner_steps: Vec<usize> = if cfg.heterogeneous {
        clock
            .rho()
            .iter()
            .map(|r| ((cfg.inner_iterations as f64 / r).ceil() as usize).max(1))
            .collect()
    } else {
        vec![cfg.inner_iterations; n]
    };
    let inner_counts: Vec<u64> = inner_steps.iter().map(|&s| s as u64).collect();

    let mut state = PrimalDualLoop::new(problem, gossip, cfg.dual_step);
    let mut trace = RunTrace::new("mspd", cfg.seed, cfg.digest());
    record_initial(&mut trace, problem, clock);

    for t in 0..cfg.outer_iterations {
        state.dual_update(cfg.gossip_steps)?;
        clock.charge_gossip_rounds(support_edges, cfg.gossip_steps);

        let new_theta: Vec<Vector> = (0..n)
            .map(|i| {
                inner_prox_subgradient(
                    &problem.locals[i],
                    &state.dual[i],
                    &state.theta[i],
                    cfg.primal_step,
                    n,
                    inner_steps[i],
                    cfg.radius,
                )
            })
            .collect();
        clock.charge_parallel_compute(&inner_counts);
        state.commit_primal(new_theta);

        trace.record(state.sample(clock, t + 1));
        if opts.stop_after_time.is_some_and(|limit| clock.time() >= limit) {
            break;
        }
    }

    let completed = trace.samples.last().map(|s| s.iteration).unwrap_or(0);
    Ok(RunOutcome {
        output: state.averaged_output(completed),
        per_node: state.theta.clone(),
        trace,
    })
}

/// Proximal subproblem solved exactly (closed forms plus a boundary
/// multiplier bisection) or, for oracle kinds without a usable structure,
/// by the certified strongly-convex subgradient method.
fn exact_prox(
    f: &ObjectiveOracle,
    dual: &Vector,
    anchor: &Vector,
    primal_step: f64,
    n: usize,
    radius: f64,
    tol: f64,
) -> Result<Vector> {
    let d = anchor.len();
    let center: Vector = Array1::zeros(d);
    // Fold the linear dual term into the quadratic: the subproblem is
    // (1/n) f(θ) + ‖θ − z‖²/(2η) with z = θ_t + η y.
    let z = anchor + &(dual * primal_step);

    // θ(λ) minimizes the ridge-shifted subproblem with multiplier λ on the
    // ball constraint.
    let solution_at = |lambda: f64| -> Option<Vector> {
        let shrink = 1.0 + lambda * primal_step;
        let eta_l = primal_step / shrink;
        let z_l = &z / shrink;
        match f.kind() {
            ObjectiveKind::Zero => Some(z_l),
            ObjectiveKind::Linear { slope } => Some(&z_l - &(slope * (eta_l / n as f64))),
            ObjectiveKind::EuclideanDistance { anchor: c, scale } => {
                let threshold = scale * eta_l / n as f64;
                let u = &z_l - c;
                let nu = l2_norm(&u);
                if nu <= threshold {
                    Some(c.clone())
                } else {
                    Some(c + &(u * (1.0 - threshold / nu)))
                }
            }
            ObjectiveKind::AbsDeviation { anchor: c } => {
                let threshold = eta_l / n as f64;
                let mut out = Array1::zeros(d);
                for j in 0..d {
                    let v = z_l[j] - c[j];
                    out[j] = c[j] + v.signum() * (v.abs() - threshold).max(0.0);
                }
                Some(out)
            }
            _ => None,
        }
    };

    if let Some(unconstrained) = solution_at(0.0) {
        if l2_norm(&unconstrained) <= radius * (1.0 + 1e-15) {
            return Ok(unconstrained);
        }
        // The norm of θ(λ) decreases continuously to 0; bracket and bisect.
        let mut hi = 1.0;
        while l2_norm(&solution_at(hi).expect("closed form")) > radius {
            hi *= 2.0;
            if hi > 1e18 {
                return Err(Error::NonBracketing { target: radius });
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if l2_norm(&solution_at(mid).expect("closed form")) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(project_ball(
            &solution_at(hi).expect("closed form"),
            &center,
            radius,
        ));
    }

    // Fallback: certified projected subgradient on the 1/η-strongly-convex
    // subproblem, returning the weighted average with its a-priori
    // certificate 2G²η/M ≤ tol.
    let lipschitz_phi =
        f.lipschitz() / n as f64 + l2_norm(dual) + 2.0 * radius / primal_step;
    let steps = (2.0 * lipschitz_phi * lipschitz_phi * primal_step / tol).ceil() as usize;
    if steps > 20_000_000 {
        return Err(Error::InvalidParameter(format!(
            "exact prox fallback would need {steps} subgradient steps; \
             loosen inner_tol or use a structured oracle"
        )));
    }
    let mut current = anchor.clone();
    let mut weighted: Vector = Array1::zeros(d);
    let mut weight_sum = 0.0;
    for m in 0..steps {
        let mf = m as f64;
        weighted += &(&current * (mf + 1.0));
        weight_sum += mf + 1.0;
        let g = f.subgradient(&current);
        let grad_phi = &(g / n as f64) - dual + &((&current - anchor) / primal_step);
        let step = 2.0 * primal_step / (mf + 2.0);
        current = project_ball(&(&current - &(grad_phi * step)), &center, radius);
    }
    Ok(project_ball(&(weighted / weight_sum), &center, radius))
}

/// The outer loop with the proximal step solved to `inner_tol`; a reference
/// implementation used in tests to cross-check [`run_mspd`].
pub fn run_chambolle_pock_exact(
    problem: &ProblemInstance,
    net: &Network,
    gossip: &GossipMatrix,
    primal_step: f64,
    dual_step: f64,
    outer_iterations: usize,
    gossip_steps: usize,
    inner_tol: f64,
    clock: &mut CostModel,
    opts: RunOptions,
) -> Result<RunOutcome> {
    check_orders(problem, net, gossip)?;
    let lambda_pk = accelerated_lambda_max(gossip, gossip_steps)?;
    if dual_step * primal_step * lambda_pk > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "step sizes violate σηλ₁ ≤ 1: {}",
            dual_step * primal_step * lambda_pk
        )));
    }
    let n = problem.n();
    let support_edges = net.edges().len();
    let one_each = vec![1u64; n];

    let mut state = PrimalDualLoop::new(problem, gossip, dual_step);
    let mut trace = RunTrace::new(
        "cp_exact",
        0,
        format!("cp_exact(eta={primal_step},sigma={dual_step},T={outer_iterations},K={gossip_steps},tol={inner_tol})"),
    );
    record_initial(&mut trace, problem, clock);

    for t in 0..outer_iterations {
        state.dual_update(gossip_steps)?;
        clock.charge_gossip_rounds(support_edges, gossip_steps);

        let new_theta: Vec<Vector> = (0..n)
            .map(|i| {
                exact_prox(
                    &problem.locals[i],
                    &state.dual[i],
                    &state.theta[i],
                    primal_step,
                    n,
                    problem.radius,
                    inner_tol,
                )
            })
            .collect::<Result<_>>()?;
        // An exact proximal evaluation is one oracle call in the time model.
        clock.charge_parallel_compute(&one_each);
        state.commit_primal(new_theta);

        trace.record(state.sample(clock, t + 1));
        if opts.stop_after_time.is_some_and(|limit| clock.time() >= limit) {
            break;
        }
    }

    let completed = trace.samples.last().map(|s| s.iteration).unwrap_or(0);
    Ok(RunOutcome {
        output: state.averaged_output(completed),
        per_node: state.theta.clone(),
        trace,
    })
}
