//! Non-smooth distributed convex optimization: algorithms, worst-case
//! instances, and a simulated time-cost harness.
//!
//! The crate minimizes an average `f̄ = (1/n) Σ f_i` of convex Lipschitz
//! functions held by the nodes of a network, over a Euclidean ball, and
//! accounts for time the way a distributed system would: one time unit per
//! subgradient evaluation, `τ` per edge traversal, parallel work charged as
//! the maximum over nodes.
//!
//! Modules:
//! - [`numerics`]: dense symmetric eigensolver, Chebyshev polynomials, ball
//!   projections.
//! - [`objectives`]: convex function oracles, Gaussian smoothing with
//!   shared-seed reproducibility, and worst-case instance generators with
//!   their lower-bound envelopes ([`objectives::worst_case`]).
//! - [`network`]: graphs, spanning trees, gossip matrices, the
//!   prescribed-eigengap construction, and Chebyshev-accelerated gossip.
//! - [`drs`]: distributed randomized smoothing (master/slave) and the naive
//!   distributed subgradient baseline.
//! - [`mspd`]: multi-step primal-dual (decentralized) and an exact-prox
//!   Chambolle–Pock reference variant.
//! - [`solver`]: certified centralized solvers used as independent oracles.
//! - [`harness`]: cost model, run traces, and bound-comparison reports.

pub mod drs;
pub mod harness;
pub mod mspd;
pub mod network;
pub mod numerics;
pub mod objectives;
pub mod solver;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
