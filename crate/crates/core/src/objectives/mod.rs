//! Convex function oracles (evaluation + subgradient), Gaussian smoothing
//! estimators with shared-seed reproducibility, and the worst-case instance
//! generators of [`worst_case`].
//!
//! Subgradient tie-breaking is deterministic everywhere: max-type terms pick
//! the lowest index attaining the max, and `|x|` at the kink returns 0. Any
//! selection is valid by convex analysis; a fixed one makes runs
//! reproducible.

pub mod worst_case;

use ndarray::Array1;

use crate::numerics::{l2_norm, Vector};
use crate::{Error, Result};
use worst_case::{WorstCaseParams, WorstCaseRole};

/// One convex local function: evaluation, one chosen subgradient per point,
/// and its Lipschitz constant (over the feasible ball for the worst-case
/// pieces, globally for the rest).
#[derive(Debug, Clone)]
pub struct ObjectiveOracle {
    dimension: usize,
    lipschitz: f64,
    kind: ObjectiveKind,
}

#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    /// Identically zero.
    Zero,
    /// `f(x) = a · x`.
    Linear { slope: Vector },
    /// `f(x) = Σ_j |x_j − a_j|`.
    AbsDeviation { anchor: Vector },
    /// `f(x) = c · ‖x − a‖₂`.
    EuclideanDistance { anchor: Vector, scale: f64 },
    /// `f(x) = max_i (s_i · x + b_i)`.
    MaxAffine { slopes: Vec<Vector>, offsets: Vec<f64> },
    /// One half of the two-node worst-case split (see [`worst_case`]).
    WorstCase {
        params: WorstCaseParams,
        role: WorstCaseRole,
        scale: f64,
    },
}

impl ObjectiveOracle {
    pub fn zero(dimension: usize) -> Self {
        ObjectiveOracle {
            dimension,
            lipschitz: 0.0,
            kind: ObjectiveKind::Zero,
        }
    }

    pub fn linear(slope: Vector) -> Self {
        let lipschitz = l2_norm(&slope);
        ObjectiveOracle {
            dimension: slope.len(),
            lipschitz,
            kind: ObjectiveKind::Linear { slope },
        }
    }

    /// Coordinate-wise absolute deviation from `anchor`; Lipschitz constant
    /// is `√d` (all coordinate signs can align).
    pub fn abs_deviation(anchor: Vector) -> Self {
        let d = anchor.len();
        ObjectiveOracle {
            dimension: d,
            lipschitz: (d as f64).sqrt(),
            kind: ObjectiveKind::AbsDeviation { anchor },
        }
    }

    pub fn euclidean_distance(anchor: Vector, scale: f64) -> Self {
        ObjectiveOracle {
            dimension: anchor.len(),
            lipschitz: scale,
            kind: ObjectiveKind::EuclideanDistance { anchor, scale },
        }
    }

    pub fn max_affine(slopes: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        if slopes.is_empty() || slopes.len() != offsets.len() {
            return Err(Error::InvalidParameter(
                "max_affine needs matching non-empty slopes/offsets".into(),
            ));
        }
        let dimension = slopes[0].len();
        if slopes.iter().any(|s| s.len() != dimension) {
            return Err(Error::SizeMismatch("max_affine slope dimensions".into()));
        }
        let lipschitz = slopes.iter().map(l2_norm).fold(0.0f64, f64::max);
        Ok(ObjectiveOracle {
            dimension,
            lipschitz,
            kind: ObjectiveKind::MaxAffine { slopes, offsets },
        })
    }

    pub(crate) fn worst_case_piece(
        dimension: usize,
        params: WorstCaseParams,
        role: WorstCaseRole,
        scale: f64,
        lipschitz: f64,
    ) -> Self {
        ObjectiveOracle {
            dimension,
            lipschitz,
            kind: ObjectiveKind::WorstCase {
                params,
                role,
                scale,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn value(&self, x: &Vector) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        match &self.kind {
            ObjectiveKind::Zero => 0.0,
            ObjectiveKind::Linear { slope } => slope.dot(x),
            ObjectiveKind::AbsDeviation { anchor } => x
                .iter()
                .zip(anchor.iter())
                .map(|(xi, ai)| (xi - ai).abs())
                .sum(),
            ObjectiveKind::EuclideanDistance { anchor, scale } => scale * l2_norm(&(x - anchor)),
            ObjectiveKind::MaxAffine { slopes, offsets } => slopes
                .iter()
                .zip(offsets)
                .map(|(s, b)| s.dot(x) + b)
                .fold(f64::NEG_INFINITY, f64::max),
            ObjectiveKind::WorstCase {
                params,
                role,
                scale,
            } => scale * worst_case::piece_value(params, *role, x),
        }
    }

    /// One deterministic subgradient at `x`.
    pub fn subgradient(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.len(), self.dimension);
        match &self.kind {
            ObjectiveKind::Zero => Array1::zeros(self.dimension),
            ObjectiveKind::Linear { slope } => slope.clone(),
            ObjectiveKind::AbsDeviation { anchor } => {
                let mut g = Array1::zeros(self.dimension);
                for (gi, (xi, ai)) in g.iter_mut().zip(x.iter().zip(anchor.iter())) {
                    *gi = signum_zero(xi - ai);
                }
                g
            }
            ObjectiveKind::EuclideanDistance { anchor, scale } => {
                let diff = x - anchor;
                let norm = l2_norm(&diff);
                if norm == 0.0 {
                    Array1::zeros(self.dimension)
                } else {
                    diff * (*scale / norm)
                }
            }
            ObjectiveKind::MaxAffine { slopes, offsets } => {
                let mut best = 0usize;
                let mut best_val = f64::NEG_INFINITY;
                for (i, (s, b)) in slopes.iter().zip(offsets).enumerate() {
                    let v = s.dot(x) + b;
                    if v > best_val {
                        best_val = v;
                        best = i;
                    }
                }
                slopes[best].clone()
            }
            ObjectiveKind::WorstCase {
                params,
                role,
                scale,
            } => worst_case::piece_subgradient(params, *role, *scale, x),
        }
    }
}

/// `sign(v)` with the kink tie-break: 0 at 0.
fn signum_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The distributed problem: `n` local oracles over the ball `B₂(R)`
/// centered at the origin.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dimension: usize,
    pub locals: Vec<ObjectiveOracle>,
    /// Radius of the feasible ball around θ₀ = 0.
    pub radius: f64,
    /// Lipschitz constant of the average `f̄` (assumption A1).
    pub lipschitz_global: f64,
    /// Exact optimum value when known (closed form or certified oracle).
    pub optimum_value: Option<f64>,
    pub optimum_point: Option<Vector>,
}

impl ProblemInstance {
    pub fn new(
        dimension: usize,
        locals: Vec<ObjectiveOracle>,
        radius: f64,
        lipschitz_global: f64,
    ) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::InvalidParameter("need at least one local".into()));
        }
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        if locals.iter().any(|f| f.dimension() != dimension) {
            return Err(Error::SizeMismatch("local oracle dimensions".into()));
        }
        let instance = ProblemInstance {
            dimension,
            locals,
            radius,
            lipschitz_global,
            optimum_value: None,
            optimum_point: None,
        };
        // A1 is weaker than A2: the global constant never exceeds the
        // ℓ₂-average of the local ones.
        if instance.lipschitz_global > instance.lipschitz_local_avg() + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "global Lipschitz {} exceeds local l2-average {}",
                instance.lipschitz_global,
                instance.lipschitz_local_avg()
            )));
        }
        Ok(instance)
    }

    pub fn with_optimum(mut self, value: f64, point: Option<Vector>) -> Self {
        self.optimum_value = Some(value);
        self.optimum_point = point;
        self
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    /// `L_ℓ = sqrt((1/n) Σ L_i²)`, recomputed from the locals.
    pub fn lipschitz_local_avg(&self) -> f64 {
        let n = self.locals.len() as f64;
        (self.locals.iter().map(|f| f.lipschitz().powi(2)).sum::<f64>() / n).sqrt()
    }

    /// `f̄(x) = (1/n) Σ f_i(x)`.
    pub fn average_value(&self, x: &Vector) -> f64 {
        self.locals.iter().map(|f| f.value(x)).sum::<f64>() / self.locals.len() as f64
    }

    /// One subgradient of `f̄` at `x` (average of the locals' choices).
    pub fn average_subgradient(&self, x: &Vector) -> Vector {
        let mut g = Array1::zeros(self.dimension);
        for f in &self.locals {
            g += &f.subgradient(x);
        }
        g / self.locals.len() as f64
    }
}

/// Counter-based deterministic Gaussian stream.
///
/// Every draw is keyed by `(seed, iteration, sample, coordinate)`, so any
/// party holding the seed regenerates the identical variables without
/// communication; position is part of the key, not mutable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianStream {
    seed: u64,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn mix(mut z: u64) -> u64 {
        z ^= z >> 30;
        z = z.wrapping_mul(0xBF58476D1CE4E5B9);
        z ^= z >> 27;
        z = z.wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        z
    }

    fn word(&self, iteration: u64, sample: u64, counter: u64) -> u64 {
        let mut h = Self::mix(self.seed ^ 0x9E3779B97F4A7C15);
        h = Self::mix(h ^ iteration.wrapping_mul(0xD1B54A32D192ED03));
        h = Self::mix(h ^ sample.wrapping_mul(0x8CB92BA72F3D8DD7));
        Self::mix(h ^ counter.wrapping_mul(0x2545F4914F6CDD1D))
    }

    /// Uniform in the open interval (0, 1).
    fn uniform(&self, iteration: u64, sample: u64, counter: u64) -> f64 {
        let bits = self.word(iteration, sample, counter) >> 11;
        (bits as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// One standard normal coordinate via Box–Muller.
    pub fn standard_normal(&self, iteration: u64, sample: u64, coordinate: u64) -> f64 {
        let u1 = self.uniform(iteration, sample, 2 * coordinate);
        let u2 = self.uniform(iteration, sample, 2 * coordinate + 1);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// A standard Gaussian vector of length `d` at key `(iteration, sample)`.
    pub fn gaussian_vector(&self, iteration: u64, sample: u64, d: usize) -> Vector {
        Array1::from_iter((0..d).map(|j| self.standard_normal(iteration, sample, j as u64)))
    }
}

/// Monte-Carlo estimate of the smoothed function `f^γ(θ) = E[f(θ + γX)]` and
/// its gradient estimator, the empirical mean of `K` sampled subgradients.
#[derive(Debug, Clone)]
pub struct SmoothingEstimate {
    pub value: f64,
    pub gradient: Vector,
    pub sample_count: usize,
    pub smoothing_radius: f64,
    /// Seed material: the stream seed and the iteration key used, enough to
    /// recompute every draw.
    pub seed: u64,
    pub iteration: u64,
}

/// Samples `K` Gaussian perturbations from the stream at key
/// `(iteration, k)` and averages values and subgradients of `f` at
/// `θ + γ X_k`.
pub fn smoothed_estimate(
    f: &ObjectiveOracle,
    theta: &Vector,
    gamma: f64,
    samples: usize,
    stream: &GaussianStream,
    iteration: u64,
) -> SmoothingEstimate {
    assert!(samples >= 1, "need at least one sample");
    assert!(gamma >= 0.0, "smoothing radius must be non-negative");
    let d = f.dimension();
    let mut value = 0.0;
    let mut gradient: Vector = Array1::zeros(d);
    for k in 0..samples {
        let point = if gamma == 0.0 {
            theta.clone()
        } else {
            theta + &(stream.gaussian_vector(iteration, k as u64, d) * gamma)
        };
        value += f.value(&point);
        gradient += &f.subgradient(&point);
    }
    SmoothingEstimate {
        value: value / samples as f64,
        gradient: gradient / samples as f64,
        sample_count: samples,
        smoothing_radius: gamma,
        seed: stream.seed(),
        iteration,
    }
}

/// Outcome of a Monte-Carlo check of the smoothing sandwich
/// `f(θ) ≤ f^γ(θ) ≤ f(θ) + γ L_g √d`.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub estimate: f64,
    /// Confidence half-width: three standard errors of the sample mean.
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// Estimates `f^γ(θ)` with `K` samples and reports whether the estimate sits
/// inside the sandwich up to the confidence half-width.
pub fn smoothing_sandwich_check(
    f: &ObjectiveOracle,
    theta: &Vector,
    gamma: f64,
    lipschitz_global: f64,
    samples: usize,
    stream: &GaussianStream,
    iteration: u64,
) -> SandwichReport {
    assert!(gamma > 0.0, "sandwich check needs gamma > 0");
    assert!(samples >= 2);
    let d = f.dimension();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..samples {
        let point = theta + &(stream.gaussian_vector(iteration, k as u64, d) * gamma);
        let v = f.value(&point);
        sum += v;
        sum_sq += v * v;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let variance = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    let stderr = (variance / nf).sqrt();
    let lower = f.value(theta);
    let upper = lower + gamma * lipschitz_global * (d as f64).sqrt();
    let half_width = 3.0 * stderr;
    SandwichReport {
        estimate: mean,
        half_width,
        lower,
        upper,
        within: mean >= lower - half_width && mean <= upper + half_width,
    }
}
