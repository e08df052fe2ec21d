use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("matrix is not symmetric at ({i},{j}): {a} != {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("matrix has non-finite entries")]
    NonFiniteEntries,

    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    EigenNoConvergence { sweeps: usize, residual: f64 },

    #[error("eigenpair residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    EigenResidual { residual: f64, tolerance: f64 },

    #[error("gossip matrix has disconnected support (more than one zero eigenvalue)")]
    DisconnectedSupport,

    #[error("gossip matrix violates assumption: {0}")]
    GossipAssumption(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("dimension too small: need d >= {required}, got {got}")]
    DimensionTooSmall { required: usize, got: usize },

    #[error("bisection bracket does not contain the target {target}")]
    NonBracketing { target: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("configuration does not match the problem instance: {0}")]
    ConfigMismatch(String),

    #[error("problem has no exact optimum value; attach a certified oracle solve first")]
    MissingOptimum,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph file: {0}")]
    GraphFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
