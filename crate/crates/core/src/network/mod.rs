//! Graph model, spanning trees, gossip matrices and their invariants, and
//! the prescribed-eigengap graph construction.

mod gossip;

pub use gossip::{
    accelerated_eigengap, accelerated_gossip, accelerated_lambda_max,
    accelerated_polynomial_eigenvalues, accelerated_polynomial_matrix, averaging_matrix,
    gossip_average,
};

use ndarray::Array1;

use crate::numerics::{symmetric_eigendecomposition, SpectralSummary, SymmetricMatrix};
use crate::{Error, Result};

/// An undirected connected communication graph with a uniform per-edge
/// delay `τ` and per-node compute times `ρ_i` (time units per subgradient,
/// default 1).
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize)>,
    tau: f64,
    rho: Vec<f64>,
}

impl Network {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empty network".into()));
        }
        if tau < 0.0 || !tau.is_finite() {
            return Err(Error::InvalidParameter("edge delay must be >= 0".into()));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !normalized.contains(&e) {
                normalized.push(e);
            }
        }
        let net = Network {
            n,
            edges: normalized,
            tau,
            rho: vec![1.0; n],
        };
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    /// Replaces the per-node compute times.
    pub fn with_compute_times(mut self, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != self.n {
            return Err(Error::SizeMismatch("compute-time vector length".into()));
        }
        if rho.iter().any(|r| r.is_nan() || *r <= 0.0 || !r.is_finite()) {
            return Err(Error::InvalidParameter("compute times must be positive".into()));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn path(n: usize, tau: f64) -> Result<Self> {
        Network::new(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(), tau)
    }

    pub fn cycle(n: usize, tau: f64) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((n - 1, 0));
        Network::new(n, edges, tau)
    }

    pub fn complete(n: usize, tau: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Network::new(n, edges, tau)
    }

    /// Star with node 0 at the center.
    pub fn star(n: usize, tau: f64) -> Result<Self> {
        Network::new(n, (1..n).map(|i| (0, i)).collect(), tau)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    fn bfs_depths(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut depth = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            depth[s] = Some(0);
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if depth[v].is_none() {
                    depth[v] = Some(depth[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_depths(&[0]).iter().all(Option::is_some)
    }

    /// Maximum over node pairs of the shortest-path hop count.
    pub fn diameter(&self) -> Result<usize> {
        let mut best = 0;
        for s in 0..self.n {
            for d in self.bfs_depths(&[s]) {
                best = best.max(d.ok_or(Error::Disconnected)?);
            }
        }
        Ok(best)
    }

    /// Shortest hop distance between two node sets.
    pub fn set_distance(&self, from: &[usize], to: &[usize]) -> Result<usize> {
        let depth = self.bfs_depths(from);
        to.iter()
            .filter_map(|&v| depth[v])
            .min()
            .ok_or(Error::Disconnected)
    }

    /// Breadth-first spanning tree rooted at the node of minimum
    /// eccentricity (ties broken toward the lowest id). The broadcast time
    /// along the tree is `depth·τ ≤ Δτ`.
    pub fn spanning_tree(&self) -> Result<SpanningTree> {
        let mut root = 0;
        let mut best_ecc = usize::MAX;
        for s in 0..self.n {
            let depths = self.bfs_depths(&[s]);
            let ecc = depths
                .iter()
                .map(|d| d.ok_or(Error::Disconnected))
                .try_fold(0usize, |m, d| d.map(|d| m.max(d)))?;
            if ecc < best_ecc {
                best_ecc = ecc;
                root = s;
            }
        }

        let adj = self.adjacency();
        let mut parent = vec![None; self.n];
        let mut depth = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        depth[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        Ok(SpanningTree {
            root,
            parent,
            depth,
        })
    }
}

/// A rooted spanning tree used for broadcast/aggregation.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl SpanningTree {
    pub fn n(&self) -> usize {
        self.depth.len()
    }

    /// Tree height: the number of edge levels a broadcast traverses.
    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }
}

/// A gossip matrix: symmetric positive semi-definite, supported on the
/// network's edges, with kernel exactly the constant vectors. Carries its
/// verified spectrum.
#[derive(Debug, Clone)]
pub struct GossipMatrix {
    matrix: SymmetricMatrix,
    spectrum: SpectralSummary,
}

impl GossipMatrix {
    /// Validates the three gossip assumptions against the given edge
    /// support and caches the spectrum.
    pub fn from_symmetric(matrix: SymmetricMatrix, edges: &[(usize, usize)]) -> Result<Self> {
        let n = matrix.order();
        if n == 1 {
            // Degenerate single-node case: the zero matrix, eigengap
            // convention 1, gossip acts as the zero map.
            let spectrum = symmetric_eigendecomposition(&matrix)?;
            if matrix.entry(0, 0) != 0.0 {
                return Err(Error::GossipAssumption(
                    "assumption 2 (kernel must contain constants): single node requires W = 0"
                        .into(),
                ));
            }
            return Ok(GossipMatrix { matrix, spectrum });
        }

        // Assumption 3: support restricted to edges and the diagonal.
        for i in 0..n {
            for j in (i + 1)..n {
                if matrix.entry(i, j) != 0.0 && !edges.contains(&(i, j)) {
                    return Err(Error::GossipAssumption(format!(
                        "assumption 3 (edge support): non-zero entry at non-edge ({i},{j})"
                    )));
                }
            }
        }

        let spectrum = symmetric_eigendecomposition(&matrix)?;
        let scale = spectrum
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);

        // Assumption 1: positive semi-definite.
        if spectrum.eigenvalues[0] < -1e-9 * scale {
            return Err(Error::GossipAssumption(format!(
                "assumption 1 (PSD): negative eigenvalue {}",
                spectrum.eigenvalues[0]
            )));
        }

        // Assumption 2: kernel is exactly the constants.
        let ones = Array1::from_elem(n, 1.0);
        let w_ones = matrix.mul_vec(&ones);
        let residual = w_ones.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if residual > 1e-9 * scale {
            return Err(Error::GossipAssumption(format!(
                "assumption 2 (kernel contains constants): ‖W·1‖∞ = {residual}"
            )));
        }
        match spectrum.zero_count() {
            1 => {}
            0 => {
                return Err(Error::GossipAssumption(
                    "assumption 2 (kernel contains constants): no zero eigenvalue".into(),
                ))
            }
            _ => return Err(Error::DisconnectedSupport),
        }

        Ok(GossipMatrix { matrix, spectrum })
    }

    /// The single-node convention: a 1×1 zero matrix with eigengap 1.
    pub fn trivial() -> Self {
        let matrix = SymmetricMatrix::zeros(1);
        let spectrum = symmetric_eigendecomposition(&matrix).expect("1x1 decomposition");
        GossipMatrix { matrix, spectrum }
    }

    /// Weighted graph Laplacian: `L_ii = Σ_j w_ij`, `L_ij = −w_ij`.
    pub fn laplacian(net: &Network, weights: &[f64]) -> Result<Self> {
        if weights.len() != net.edges().len() {
            return Err(Error::SizeMismatch("one weight per edge required".into()));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter("edge weights must be >= 0".into()));
        }
        let n = net.n();
        let mut dense = ndarray::Array2::zeros((n, n));
        for (&(u, v), &w) in net.edges().iter().zip(weights) {
            dense[[u, v]] -= w;
            dense[[v, u]] -= w;
            dense[[u, u]] += w;
            dense[[v, v]] += w;
        }
        GossipMatrix::from_symmetric(SymmetricMatrix::from_array(dense)?, net.edges())
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralSummary {
        &self.spectrum
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.largest()
    }

    /// Normalized eigengap `λ_{n-1}(W)/λ_1(W)`; 1 by convention for the
    /// single-node matrix.
    pub fn eigengap(&self) -> Result<f64> {
        if self.order() == 1 {
            return Ok(1.0);
        }
        self.spectrum.normalized_eigengap()
    }

    /// Right-multiplies the column family by `W`: out_i = Σ_j x_j W_{ji}.
    pub fn apply_columns(&self, columns: &[crate::numerics::Vector]) -> Vec<crate::numerics::Vector> {
        let n = self.order();
        assert_eq!(columns.len(), n);
        let d = columns.first().map(|c| c.len()).unwrap_or(0);
        let mut out = vec![Array1::zeros(d); n];
        for i in 0..n {
            for j in 0..n {
                let w = self.matrix.entry(i, j);
                if w != 0.0 {
                    out[i].scaled_add(w, &columns[j]);
                }
            }
        }
        out
    }
}

/// `x_n = (1 − cos(π/n)) / (1 + cos(π/n))`, the eigengap of the unit-weight
/// path Laplacian on `n` nodes.
pub fn path_eigengap(n: usize) -> f64 {
    let c = (std::f64::consts::PI / n as f64).cos();
    (1.0 - c) / (1.0 + c)
}

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_INTERVAL_TOL: f64 = 1e-8;

/// Builds a graph and gossip matrix whose eigengap hits the target within
/// 1e-6.
///
/// For targets ≥ 1/3 this is the 3-node totally connected graph with the
/// edge (v₁,v₃) reweighted by `a ∈ [0,1]`; otherwise the linear graph of
/// `n_γ` nodes (the smallest n with `x_n ≥ γ > x_{n+1}`) with the first
/// edge reweighted. Both branches locate `a` by bisection; the size bound
/// `γ ≥ 2/(n_γ + 1)²` always holds.
pub fn graph_with_eigengap(target: f64) -> Result<(Network, GossipMatrix)> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidParameter(
            "target eigengap must lie in (0, 1]".into(),
        ));
    }

    let (net, weights_of): (Network, Box<dyn Fn(f64) -> Vec<f64>>) = if target >= 1.0 / 3.0 {
        // Edges normalize to (0,1), (0,2), (1,2); weight a goes on (0,2).
        let net = Network::complete(3, 1.0)?;
        let edges = net.edges().to_vec();
        let f = move |a: f64| {
            edges
                .iter()
                .map(|&e| if e == (0, 2) { a } else { 1.0 })
                .collect()
        };
        (net, Box::new(f))
    } else {
        let mut size = 3;
        while path_eigengap(size + 1) >= target {
            size += 1;
        }
        debug_assert!(path_eigengap(size) >= target && target > path_eigengap(size + 1));
        let net = Network::path(size, 1.0)?;
        let m = net.edges().len();
        let f = move |a: f64| {
            (0..m)
                .map(|i| if i == 0 { 1.0 - a } else { 1.0 })
                .collect()
        };
        (net, Box::new(f))
    };

    let gap_at = |a: f64| -> Result<f64> {
        GossipMatrix::laplacian(&net, &weights_of(a))?.eigengap()
    };

    // On the 3-node branch the gap increases from 1/3 (a=0) to 1 (a=1); on
    // the linear branch it decreases from x_n (a=0) toward 0 (a→1). Pick
    // endpoints so the bracket always satisfies f(lo) <= target <= f(hi).
    let increasing = target >= 1.0 / 3.0;
    let (mut lo, mut hi) = if increasing { (0.0, 1.0) } else { (1.0, 0.0) };

    // Endpoint shortcuts keep exact targets exact.
    let gap_start = gap_at(0.0)?;
    if (gap_start - target).abs() <= 1e-12 {
        let gossip = GossipMatrix::laplacian(&net, &weights_of(0.0))?;
        return Ok((net, gossip));
    }
    if increasing {
        let gap_one = gap_at(1.0)?;
        if (gap_one - target).abs() <= 1e-12 {
            let gossip = GossipMatrix::laplacian(&net, &weights_of(1.0))?;
            return Ok((net, gossip));
        }
        if !(gap_start <= target && target <= gap_one) {
            return Err(Error::NonBracketing { target });
        }
    } else if gap_start < target {
        return Err(Error::NonBracketing { target });
    }

    let mut a = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        a = 0.5 * (lo + hi);
        let gap = gap_at(a)?;
        if (gap - target).abs() <= 1e-9 {
            break;
        }
        if gap < target {
            lo = a;
        } else {
            hi = a;
        }
        if (hi - lo).abs() <= BISECTION_INTERVAL_TOL * 1e-4 {
            break;
        }
    }

    let gossip = GossipMatrix::laplacian(&net, &weights_of(a))?;
    let achieved = gossip.eigengap()?;
    if (achieved - target).abs() > 1e-6 {
        return Err(Error::NonBracketing { target });
    }
    debug_assert!(target >= 2.0 / ((net.n() as f64 + 1.0).powi(2)));
    Ok((net, gossip))
}

/// Parses the edge-list text format `"n m\nu v w\n..."` (1-indexed node
/// ids, float weights). Returns node count, edges, and weights.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(usize, usize)>, Vec<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::GraphFormat("missing header line".into()))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::GraphFormat("header must start with node count".into()))?;
    let m: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::GraphFormat("header must give edge count".into()))?;
    let mut edges = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (idx, line) in lines.enumerate() {
        let mut parts = line.split_whitespace();
        let u: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::GraphFormat(format!("edge line {} malformed", idx + 1)))?;
        let v: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::GraphFormat(format!("edge line {} malformed", idx + 1)))?;
        let w: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::GraphFormat(format!("edge line {} malformed", idx + 1)))?;
        if u == 0 || v == 0 || u > n || v > n {
            return Err(Error::GraphFormat(format!(
                "edge line {} references node outside 1..={n}",
                idx + 1
            )));
        }
        edges.push((u - 1, v - 1));
        weights.push(w);
    }
    if edges.len() != m {
        return Err(Error::GraphFormat(format!(
            "header promised {m} edges, found {}",
            edges.len()
        )));
    }
    Ok((n, edges, weights))
}

/// Formats a weighted edge list in the `"n m\nu v w\n..."` format
/// (1-indexed).
pub fn format_edge_list(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> String {
    let mut out = format!("{} {}\n", n, edges.len());
    for (&(u, v), &w) in edges.iter().zip(weights) {
        out.push_str(&format!("{} {} {}\n", u + 1, v + 1, w));
    }
    out
}
