//! Worst-case problem instances and their lower-bound envelopes.
//!
//! The global construction aggregates two difficult functions — a max-type
//! term bounding local computation and a coordinate-chain term bounding
//! communication — placed on the two designated nodes; every other node
//! holds the zero function. The decentralized variant splits those two
//! functions uniformly over two node sets of a prescribed-eigengap graph,
//! leaving the average objective unchanged.

use ndarray::Array1;

use crate::network::{graph_with_eigengap, GossipMatrix, Network};
use crate::numerics::Vector;
use crate::objectives::{ObjectiveOracle, ProblemInstance};
use crate::{Error, Result};

/// Parameters of the two-piece difficult function.
///
/// `pair_count` is the number of coupled coordinate pairs in the chain
/// (`k`), `max_block` the width of the max-term block (`l`); the coefficient
/// names follow the construction: chain weight `wc_gamma`, max weight
/// `delta`, linear tilt `beta`, quadratic curvature `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct WorstCaseParams {
    pub wc_gamma: f64,
    pub delta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub pair_count: usize,
    pub max_block: usize,
}

impl WorstCaseParams {
    /// `(β−γ)² + γ²/(2k) + δ²/l`, the squared scale of the optimum.
    pub fn optimum_scale_sq(&self) -> f64 {
        let k = self.pair_count as f64;
        let l = self.max_block as f64;
        (self.beta - self.wc_gamma).powi(2)
            + self.wc_gamma.powi(2) / (2.0 * k)
            + self.delta.powi(2) / l
    }

    /// Closed-form optimum value of the averaged objective over `n` nodes:
    /// `−(1/(2αn)) [(β−γ)² + γ²/(2k) + δ²/l]`.
    pub fn optimum_value(&self, n: usize) -> f64 {
        -self.optimum_scale_sq() / (2.0 * self.alpha * n as f64)
    }

    /// The analytic minimizer: first coordinate `(β−γ)/α`, then an equal
    /// block of `2k` coordinates at `γ/(2kα)`, then an equal block of `l`
    /// coordinates at `−δ/(lα)`, zeros elsewhere.
    pub fn optimum_point(&self, dimension: usize) -> Vector {
        let k = self.pair_count;
        let l = self.max_block;
        assert!(dimension > 2 * k + l);
        let mut x = Array1::zeros(dimension);
        x[0] = (self.beta - self.wc_gamma) / self.alpha;
        let mid = self.wc_gamma / (2.0 * k as f64 * self.alpha);
        for i in 1..=2 * k {
            x[i] = mid;
        }
        let tail = -self.delta / (l as f64 * self.alpha);
        for i in (2 * k + 1)..=(2 * k + l) {
            x[i] = tail;
        }
        x
    }

    /// Upper bound on the Lipschitz constant of the averaged objective over
    /// the ball of radius `radius`: `(β + 2√(2k+1)γ + δ + αR)/n`.
    pub fn global_lipschitz_bound(&self, n: usize, radius: f64) -> f64 {
        let k = self.pair_count as f64;
        (self.beta
            + 2.0 * (2.0 * k + 1.0).sqrt() * self.wc_gamma
            + self.delta
            + self.alpha * radius)
            / n as f64
    }

    fn head_lipschitz(&self) -> f64 {
        // Chain pairs are coordinate-disjoint: norm at most γ√(2k); plus the
        // max-term unit vector of weight δ.
        self.wc_gamma * (2.0 * self.pair_count as f64).sqrt() + self.delta
    }

    fn tail_lipschitz(&self, radius: f64) -> f64 {
        self.wc_gamma * (2.0 * self.pair_count as f64).sqrt()
            + self.beta
            + self.alpha * radius
    }
}

/// Which half of the split a node holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseRole {
    /// Even-pair chain plus the max block (node i₀ side).
    Head,
    /// Odd-pair chain, linear tilt, and the quadratic (node i₁ side).
    Tail,
}

pub(crate) fn piece_value(p: &WorstCaseParams, role: WorstCaseRole, x: &Vector) -> f64 {
    let k = p.pair_count;
    match role {
        WorstCaseRole::Head => {
            let chain: f64 = (1..=k).map(|i| (x[2 * i - 1] - x[2 * i - 2]).abs()).sum();
            let block_max = ((2 * k + 1)..=(2 * k + p.max_block))
                .map(|j| x[j])
                .fold(f64::NEG_INFINITY, f64::max);
            p.wc_gamma * chain + p.delta * block_max
        }
        WorstCaseRole::Tail => {
            let chain: f64 = (1..=k).map(|i| (x[2 * i] - x[2 * i - 1]).abs()).sum();
            let sq = x.iter().map(|v| v * v).sum::<f64>();
            p.wc_gamma * chain - p.beta * x[0] + 0.5 * p.alpha * sq
        }
    }
}

pub(crate) fn piece_subgradient(
    p: &WorstCaseParams,
    role: WorstCaseRole,
    scale: f64,
    x: &Vector,
) -> Vector {
    let k = p.pair_count;
    let mut g = Array1::zeros(x.len());
    match role {
        WorstCaseRole::Head => {
            for i in 1..=k {
                let (hi, lo) = (2 * i - 1, 2 * i - 2);
                let s = sign_zero(x[hi] - x[lo]);
                g[hi] += p.wc_gamma * s;
                g[lo] -= p.wc_gamma * s;
            }
            // Lowest index attaining the max.
            let mut best = 2 * k + 1;
            for j in (2 * k + 2)..=(2 * k + p.max_block) {
                if x[j] > x[best] {
                    best = j;
                }
            }
            g[best] += p.delta;
        }
        WorstCaseRole::Tail => {
            for i in 1..=k {
                let (hi, lo) = (2 * i, 2 * i - 1);
                let s = sign_zero(x[hi] - x[lo]);
                g[hi] += p.wc_gamma * s;
                g[lo] -= p.wc_gamma * s;
            }
            g[0] -= p.beta;
            g += &(x * p.alpha);
        }
    }
    g * scale
}

fn sign_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Global lower-bound envelope:
/// `(R L_g / 36) · sqrt(1/(1 + t/(2Δτ))² + 1/(1 + t))`.
pub fn envelope_global(t: f64, radius: f64, lipschitz_global: f64, delta_tau: f64) -> f64 {
    debug_assert!(t >= 0.0 && delta_tau > 0.0);
    let comm = 1.0 / (1.0 + t / (2.0 * delta_tau));
    let comp = 1.0 / (1.0 + t);
    radius * lipschitz_global / 36.0 * (comm * comm + comp).sqrt()
}

/// Decentralized lower-bound envelope:
/// `(R L_ℓ / 108) · sqrt(1/(1 + 2t√γ/τ)² + 1/(1 + t))`.
pub fn envelope_local(
    t: f64,
    radius: f64,
    lipschitz_local_avg: f64,
    eigengap: f64,
    tau: f64,
) -> f64 {
    debug_assert!(t >= 0.0 && tau > 0.0 && eigengap > 0.0);
    let comm = 1.0 / (1.0 + 2.0 * t * eigengap.sqrt() / tau);
    let comp = 1.0 / (1.0 + t);
    radius * lipschitz_local_avg / 108.0 * (comm * comm + comp).sqrt()
}

/// A time-indexed gap lower bound attached to a worst-case instance, valid
/// for simulated times strictly below `horizon`.
#[derive(Debug, Clone, Copy)]
pub enum LowerBoundEnvelope {
    Global {
        radius: f64,
        lipschitz_global: f64,
        delta_tau: f64,
        horizon: f64,
    },
    Local {
        radius: f64,
        lipschitz_local_avg: f64,
        eigengap: f64,
        tau: f64,
        horizon: f64,
    },
}

impl LowerBoundEnvelope {
    pub fn evaluate(&self, t: f64) -> f64 {
        match *self {
            LowerBoundEnvelope::Global {
                radius,
                lipschitz_global,
                delta_tau,
                ..
            } => envelope_global(t, radius, lipschitz_global, delta_tau),
            LowerBoundEnvelope::Local {
                radius,
                lipschitz_local_avg,
                eigengap,
                tau,
                ..
            } => envelope_local(t, radius, lipschitz_local_avg, eigengap, tau),
        }
    }

    /// Validity horizon `min{l, 2kΔτ}` (with Δ the relevant distance).
    pub fn horizon(&self) -> f64 {
        match *self {
            LowerBoundEnvelope::Global { horizon, .. }
            | LowerBoundEnvelope::Local { horizon, .. } => horizon,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LowerBoundEnvelope::Global { .. } => "global",
            LowerBoundEnvelope::Local { .. } => "local",
        }
    }
}

/// A master/slave worst-case instance with its envelope.
#[derive(Debug, Clone)]
pub struct WorstCaseGlobalInstance {
    pub problem: ProblemInstance,
    pub params: WorstCaseParams,
    /// Node holding the head piece (i₀); place at distance `diameter` from
    /// `tail_node` on the actual network.
    pub head_node: usize,
    pub tail_node: usize,
    /// The construction's target global Lipschitz constant (the envelope's
    /// constant).
    pub target_lipschitz_global: f64,
    pub envelope: LowerBoundEnvelope,
}

fn chain_and_block_sizes(target_time: f64, delta_tau: f64) -> Result<(usize, usize)> {
    if target_time.is_nan() || target_time < 0.0 || !target_time.is_finite() {
        return Err(Error::InvalidParameter("target time must be finite, >= 0".into()));
    }
    if delta_tau <= 0.0 {
        return Err(Error::InvalidParameter(
            "need a positive diameter-delay product".into(),
        ));
    }
    let k = (target_time / (2.0 * delta_tau)).floor() as usize + 1;
    let l = target_time.floor() as usize + 1;
    Ok((k, l))
}

fn build_params(
    k: usize,
    l: usize,
    lipschitz_target: f64,
    n: usize,
    radius: f64,
) -> WorstCaseParams {
    let kf = k as f64;
    let wc_gamma = lipschitz_target * n as f64 / (9.0 * kf.sqrt());
    let delta = lipschitz_target * n as f64 / 9.0;
    let beta = wc_gamma * (1.0 + 1.0 / (2.0 * kf).sqrt());
    let mut params = WorstCaseParams {
        wc_gamma,
        delta,
        beta,
        alpha: 1.0,
        pair_count: k,
        max_block: l,
    };
    // α is the free parameter fixed by the target radius: R = ‖θ*‖ forces
    // α = sqrt((β−γ)² + γ²/(2k) + δ²/l) / R.
    params.alpha = params.optimum_scale_sq().sqrt() / radius;
    debug_assert!(params.beta >= params.wc_gamma * (1.0 + 1.0 / (2.0 * kf)));
    params
}

/// Builds the master/slave worst-case instance for a target time horizon.
///
/// The chain length is `k = ⌊t/(2Δτ)⌋ + 1` and the max block `l = ⌊t⌋ + 1`,
/// so the envelope is valid for all simulated times below
/// `min{l, 2kΔτ} > t`. Node 0 holds the head piece, node `n−1` the tail
/// piece, all other nodes the zero function.
pub fn worst_case_global(
    target_time: f64,
    diameter: usize,
    tau: f64,
    lipschitz_global: f64,
    n: usize,
    dimension: usize,
    radius: f64,
) -> Result<WorstCaseGlobalInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    if lipschitz_global <= 0.0 || radius <= 0.0 {
        return Err(Error::InvalidParameter(
            "Lipschitz constant and radius must be positive".into(),
        ));
    }
    let delta_tau = diameter as f64 * tau;
    let (k, l) = chain_and_block_sizes(target_time, delta_tau)?;
    if dimension <= 2 * k + l {
        return Err(Error::DimensionTooSmall {
            required: 2 * k + l + 1,
            got: dimension,
        });
    }
    let params = build_params(k, l, lipschitz_global, n, radius);

    let mut locals = Vec::with_capacity(n);
    for node in 0..n {
        if node == 0 {
            locals.push(ObjectiveOracle::worst_case_piece(
                dimension,
                params,
                WorstCaseRole::Head,
                1.0,
                params.head_lipschitz(),
            ));
        } else if node == n - 1 {
            locals.push(ObjectiveOracle::worst_case_piece(
                dimension,
                params,
                WorstCaseRole::Tail,
                1.0,
                params.tail_lipschitz(radius),
            ));
        } else {
            locals.push(ObjectiveOracle::zero(dimension));
        }
    }

    // Store the tightest valid global constant; the loose per-piece bound
    // can exceed the l2-average for tiny n.
    let provisional = ProblemInstance::new(dimension, locals.clone(), radius, 0.0)?;
    let stored_global = params
        .global_lipschitz_bound(n, radius)
        .min(provisional.lipschitz_local_avg());
    let optimum = params.optimum_point(dimension);
    let problem = ProblemInstance::new(dimension, locals, radius, stored_global)?
        .with_optimum(params.optimum_value(n), Some(optimum));

    let horizon = (l as f64).min(2.0 * k as f64 * delta_tau);
    Ok(WorstCaseGlobalInstance {
        problem,
        params,
        head_node: 0,
        tail_node: n - 1,
        target_lipschitz_global: lipschitz_global,
        envelope: LowerBoundEnvelope::Global {
            radius,
            lipschitz_global,
            delta_tau,
            horizon,
        },
    })
}

/// A decentralized worst-case instance on a prescribed-eigengap graph.
#[derive(Debug, Clone)]
pub struct WorstCaseLocalInstance {
    pub problem: ProblemInstance,
    pub network: Network,
    pub gossip: GossipMatrix,
    pub params: WorstCaseParams,
    pub head_nodes: Vec<usize>,
    pub tail_nodes: Vec<usize>,
    /// Hop distance between the two node sets on the gossip support.
    pub split_distance: usize,
    pub envelope: LowerBoundEnvelope,
}

/// Builds the decentralized worst-case instance: a prescribed-eigengap
/// graph, the two difficult pieces split uniformly (weight `1/m`) over the
/// `m` first and `m` last nodes, and the decentralized envelope.
///
/// The averaged objective is pointwise identical to the unsplit
/// master/slave construction with `n = n_γ` nodes and `Δ = d(I₀, I₁)`.
pub fn worst_case_local(
    target_eigengap: f64,
    lipschitz_local_avg: f64,
    target_time: f64,
    tau: f64,
    dimension: usize,
    radius: f64,
) -> Result<WorstCaseLocalInstance> {
    if lipschitz_local_avg <= 0.0 || radius <= 0.0 {
        return Err(Error::InvalidParameter(
            "Lipschitz constant and radius must be positive".into(),
        ));
    }
    let (network, gossip) = graph_with_eigengap(target_eigengap)?;
    let n = network.n();
    let m = (n + 1) / 3;
    let head_nodes: Vec<usize> = (0..m).collect();
    let tail_nodes: Vec<usize> = (n - m..n).collect();
    let split_distance = network.set_distance(&head_nodes, &tail_nodes)?;

    // Splitting over m nodes each multiplies local constants by 1/m and the
    // l2-average satisfies L_ℓ ≤ √(n/m)·L_g ≤ 3·L_g, so constructing from
    // L_g = L_ℓ/3 keeps the actual average below the target.
    let lipschitz_global_target = lipschitz_local_avg / 3.0;
    let delta_tau = split_distance as f64 * tau;
    let (k, l) = chain_and_block_sizes(target_time, delta_tau)?;
    if dimension <= 2 * k + l {
        return Err(Error::DimensionTooSmall {
            required: 2 * k + l + 1,
            got: dimension,
        });
    }
    let params = build_params(k, l, lipschitz_global_target, n, radius);

    let scale = 1.0 / m as f64;
    let mut locals = Vec::with_capacity(n);
    for node in 0..n {
        if head_nodes.contains(&node) {
            locals.push(ObjectiveOracle::worst_case_piece(
                dimension,
                params,
                WorstCaseRole::Head,
                scale,
                scale * params.head_lipschitz(),
            ));
        } else if tail_nodes.contains(&node) {
            locals.push(ObjectiveOracle::worst_case_piece(
                dimension,
                params,
                WorstCaseRole::Tail,
                scale,
                scale * params.tail_lipschitz(radius),
            ));
        } else {
            locals.push(ObjectiveOracle::zero(dimension));
        }
    }

    let provisional = ProblemInstance::new(dimension, locals.clone(), radius, 0.0)?;
    let actual_local_avg = provisional.lipschitz_local_avg();
    let stored_global = params
        .global_lipschitz_bound(n, radius)
        .min(actual_local_avg);
    let optimum = params.optimum_point(dimension);
    let problem = ProblemInstance::new(dimension, locals, radius, stored_global)?
        .with_optimum(params.optimum_value(n), Some(optimum));

    let eigengap = gossip.eigengap()?;
    let horizon = (l as f64).min(2.0 * k as f64 * delta_tau);
    Ok(WorstCaseLocalInstance {
        problem,
        network,
        gossip,
        params,
        head_nodes,
        tail_nodes,
        split_distance,
        envelope: LowerBoundEnvelope::Local {
            radius,
            lipschitz_local_avg: actual_local_avg,
            eigengap,
            tau,
            horizon,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{l2_norm, project_ball};
    use crate::objectives::GaussianStream;
    use ndarray::Array1;

    #[test]
    fn assembled_average_matches_closed_form_at_optimum() {
        for (t, diam, tau, lg, n, d, r) in [
            (4.0, 2, 1.0, 1.0, 4, 12, 1.0),
            (6.0, 3, 0.5, 2.0, 6, 16, 2.0),
            (2.0, 1, 2.0, 1.0, 2, 8, 1.0),
            (10.0, 2, 1.0, 0.5, 5, 24, 3.0),
        ] {
            let inst = worst_case_global(t, diam, tau, lg, n, d, r).unwrap();
            let theta_star = inst.problem.optimum_point.clone().unwrap();
            let assembled = inst.problem.average_value(&theta_star);
            let closed = inst.problem.optimum_value.unwrap();
            assert!(
                (assembled - closed).abs() <= 1e-9 * closed.abs().max(1.0),
                "assembled {assembled} vs closed {closed}"
            );
            // The optimum sits exactly on the ball boundary.
            assert!((l2_norm(&theta_star) - r).abs() <= 1e-9 * r);
            // The closed form requires β ≥ γ(1 + 1/(2k)).
            let p = &inst.params;
            assert!(p.beta >= p.wc_gamma * (1.0 + 1.0 / (2.0 * p.pair_count as f64)));
        }
    }

    #[test]
    fn average_vanishes_at_origin() {
        let inst = worst_case_global(4.0, 2, 1.0, 1.0, 4, 12, 1.0).unwrap();
        let zero = Array1::zeros(12);
        assert_eq!(inst.problem.average_value(&zero), 0.0);
    }

    #[test]
    fn dimension_too_small_is_reported() {
        let err = worst_case_global(4.0, 2, 1.0, 1.0, 4, 5, 1.0).unwrap_err();
        match err {
            crate::Error::DimensionTooSmall { required, got } => {
                assert!(required > got);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn local_split_keeps_average_and_constants() {
        let inst = worst_case_local(0.05, 1.0, 3.0, 1.0, 10, 1.0).unwrap();
        let n = inst.network.n();
        assert!(n >= 3);
        assert_eq!(inst.head_nodes.len(), inst.tail_nodes.len());

        // Same average as the unsplit construction on the same geometry.
        let global = worst_case_global(
            3.0,
            inst.split_distance,
            1.0,
            1.0 / 3.0,
            n,
            10,
            1.0,
        )
        .unwrap();
        let stream = GaussianStream::new(8);
        let center = Array1::zeros(10);
        for i in 0..1000u64 {
            let x = project_ball(&stream.gaussian_vector(i, 0, 10), &center, 1.0);
            let a = inst.problem.average_value(&x);
            let b = global.problem.average_value(&x);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }

        // L_ℓ ≤ 3 L_g with the construction's own global bound.
        let l_ell = inst.problem.lipschitz_local_avg();
        let l_g = inst.params.global_lipschitz_bound(n, 1.0);
        assert!(l_ell <= 3.0 * l_g + 1e-12, "L_ell {l_ell} vs 3L_g {}", 3.0 * l_g);
        assert!(l_ell <= 1.0 + 1e-12, "actual average stays below the target");

        // Split-distance bound: 1/√γ ≤ 3 d(I₀,I₁)/√2.
        let gamma = inst.gossip.eigengap().unwrap();
        assert!(
            1.0 / gamma.sqrt() <= 3.0 * inst.split_distance as f64 / 2.0f64.sqrt() + 1e-9
        );
    }

    #[test]
    fn local_large_eigengap_uses_three_nodes() {
        let inst = worst_case_local(0.5, 1.0, 2.0, 1.0, 10, 1.0).unwrap();
        assert_eq!(inst.network.n(), 3);
    }

    #[test]
    fn envelope_values() {
        // Both fractions equal 1 at t = 0.
        let e0 = envelope_global(0.0, 1.0, 1.0, 1.0);
        assert!((e0 - 2.0f64.sqrt() / 36.0).abs() < 1e-15);

        // Direct arithmetic: R=36, L=1, Δτ=1, t=2 → sqrt(1/4 + 1/3).
        let e2 = envelope_global(2.0, 36.0, 1.0, 1.0);
        assert!((e2 - (7.0f64 / 12.0).sqrt()).abs() < 1e-12);

        // Decreasing to zero on a grid.
        let mut prev = f64::INFINITY;
        for step in 0..60 {
            let t = step as f64 * 5.0;
            let e = envelope_global(t, 1.0, 1.0, 2.0);
            assert!(e > 0.0 && e < prev);
            prev = e;
        }
        let mut prev = f64::INFINITY;
        for step in 0..60 {
            let t = step as f64 * 5.0;
            let e = envelope_local(t, 1.0, 1.0, 0.1, 1.0);
            assert!(e > 0.0 && e < prev);
            prev = e;
        }
    }
}
