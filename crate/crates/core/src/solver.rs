//! Certified centralized solvers used as independent oracles: exact medians
//! for one-dimensional absolute-deviation objectives, a Weiszfeld geometric
//! median with a duality-gap certificate, and a strongly-convex projected
//! subgradient method with an a-priori iteration-count certificate.

use ndarray::Array1;

use crate::numerics::{l2_norm, project_ball, Vector};
use crate::objectives::ProblemInstance;
use crate::{Error, Result};

/// A solve result whose `value` is guaranteed to sit within `residual` of
/// the true optimum value.
#[derive(Debug, Clone)]
pub struct CertifiedValue {
    pub point: Vector,
    pub value: f64,
    pub residual: f64,
}

/// Exact optimum of `f̄(θ) = (1/n) Σ |θ − a_i|` over the interval
/// `[−radius, radius]`: the clamped median.
pub fn exact_median_optimum(anchors: &[f64], radius: f64) -> (f64, f64) {
    assert!(!anchors.is_empty() && radius > 0.0);
    let mut sorted = anchors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let theta = median.clamp(-radius, radius);
    let value = anchors.iter().map(|a| (theta - a).abs()).sum::<f64>() / n as f64;
    (theta, value)
}

/// Geometric median of the anchors over the ball of radius `radius`
/// (Weiszfeld iteration). Certificate: by convexity the gap is at most
/// `‖∇f̄(θ)‖ · 2R`, so the iteration stops once the gradient norm is small
/// enough. Errors if an anchor itself is optimal within tolerance cannot be
/// certified away — anchors in general position converge quickly.
pub fn geometric_median(anchors: &[Vector], radius: f64, tol: f64) -> Result<CertifiedValue> {
    assert!(!anchors.is_empty());
    let n = anchors.len() as f64;
    let d = anchors[0].len();
    let value_at = |x: &Vector| -> f64 {
        anchors.iter().map(|a| l2_norm(&(x - a))).sum::<f64>() / n
    };

    // Anchor optimality test: a candidate anchor location of multiplicity m
    // is optimal iff the pull of the remaining anchors has norm at most m.
    for candidate in anchors {
        let mut pull: Vector = Array1::zeros(d);
        let mut multiplicity = 0.0;
        for a in anchors {
            let diff = candidate - a;
            let norm = l2_norm(&diff);
            if norm == 0.0 {
                multiplicity += 1.0;
            } else {
                pull += &(diff / norm);
            }
        }
        if l2_norm(&pull) <= multiplicity {
            return Ok(CertifiedValue {
                value: value_at(candidate),
                point: candidate.clone(),
                residual: 0.0,
            });
        }
    }

    let grad_tol = tol / (2.0 * radius);
    let mut x: Vector = Array1::zeros(d);
    for a in anchors {
        x += a;
    }
    x /= n;
    for _ in 0..1_000_000 {
        let mut numer: Vector = Array1::zeros(d);
        let mut denom = 0.0;
        let mut grad: Vector = Array1::zeros(d);
        let mut hit_anchor = false;
        for a in anchors {
            let diff = &x - a;
            let dist = l2_norm(&diff);
            if dist < 1e-14 {
                hit_anchor = true;
                break;
            }
            numer += &(a / dist);
            denom += 1.0 / dist;
            grad += &(diff / dist);
        }
        if hit_anchor {
            // Nudge off the anchor; it already failed the optimality test.
            x[0] += 1e-9;
            continue;
        }
        grad /= n;
        if l2_norm(&grad) <= grad_tol {
            let value = value_at(&x);
            return Ok(CertifiedValue {
                point: x,
                value,
                residual: tol,
            });
        }
        x = numer / denom;
    }
    Err(Error::InvalidParameter(format!(
        "geometric median did not certify tolerance {tol}"
    )))
}

/// Minimizes a `mu`-strongly-convex average objective over the feasible
/// ball by projected subgradient steps `2/(μ(m+2))` with the weighted
/// averaging that yields the `2L²/(μ(M+1))` certificate. The iteration
/// count is chosen a priori from the requested tolerance.
pub fn certified_strongly_convex_solve(
    problem: &ProblemInstance,
    mu: f64,
    tol: f64,
) -> Result<CertifiedValue> {
    if mu <= 0.0 || tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "strong convexity and tolerance must be positive".into(),
        ));
    }
    let lipschitz = problem.lipschitz_global;
    let needed = (2.0 * lipschitz * lipschitz / (mu * tol)).ceil();
    if !(needed <= 50_000_000.0) {
        return Err(Error::InvalidParameter(format!(
            "certified solve needs {needed:.0} iterations; tolerance too tight"
        )));
    }
    let iterations = needed as usize + 1;

    let d = problem.dimension;
    let center: Vector = Array1::zeros(d);
    let mut x: Vector = Array1::zeros(d);
    let mut weighted: Vector = Array1::zeros(d);
    let mut weight_sum = 0.0;
    let mut best_value = problem.average_value(&x);

    for m in 0..iterations {
        let w = (m + 1) as f64;
        weighted += &(&x * w);
        weight_sum += w;

        let g = problem.average_subgradient(&x);
        let step = 2.0 / (mu * (m as f64 + 2.0));
        x = project_ball(&(&x - &(g * step)), &center, problem.radius);
        let v = problem.average_value(&x);
        if v < best_value {
            best_value = v;
        }
    }
    let averaged = weighted / weight_sum;
    let value_avg = problem.average_value(&averaged);
    let (point, value) = if value_avg <= best_value {
        (averaged, value_avg)
    } else {
        (x, best_value)
    };
    Ok(CertifiedValue {
        point,
        value,
        residual: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::worst_case::worst_case_global;
    use crate::objectives::ObjectiveOracle;
    use ndarray::array;

    #[test]
    fn median_odd_even_and_clamped() {
        let (theta, value) = exact_median_optimum(&[-1.0, 0.0, 2.0], 5.0);
        assert_eq!(theta, 0.0);
        assert!((value - 1.0).abs() < 1e-15);

        let (theta, _) = exact_median_optimum(&[0.0, 1.0], 5.0);
        assert_eq!(theta, 0.5);

        let (theta, _) = exact_median_optimum(&[4.0, 6.0, 8.0], 2.0);
        assert_eq!(theta, 2.0);
    }

    #[test]
    fn geometric_median_of_triangle() {
        // Equilateral triangle: the median is the centroid.
        let h = 3.0f64.sqrt() / 2.0;
        let anchors = vec![array![0.0, 0.0], array![1.0, 0.0], array![0.5, h]];
        let cv = geometric_median(&anchors, 2.0, 1e-10).unwrap();
        let centroid = array![0.5, h / 3.0];
        assert!(l2_norm(&(&cv.point - &centroid)) < 1e-6);
    }

    #[test]
    fn geometric_median_detects_anchor_optimum() {
        // A heavily dominated configuration: three co-located anchors out
        // of four make their location optimal.
        let anchors = vec![
            array![0.0, 0.0],
            array![0.0, 0.0],
            array![0.0, 0.0],
            array![1.0, 0.0],
        ];
        let cv = geometric_median(&anchors, 2.0, 1e-10).unwrap();
        assert_eq!(cv.residual, 0.0);
        assert!(l2_norm(&cv.point) < 1e-15);
    }

    #[test]
    fn strongly_convex_solve_reaches_known_minimum() {
        // f̄(θ) = ‖θ − c‖₂ + boundary-free quadratic via worst-case tail is
        // overkill here; use a simple strongly convex check instead:
        // max-affine + quadratic is not in the oracle set, so take the
        // worst-case instance and compare against its closed form.
        let inst = worst_case_global(4.0, 2, 1.0, 1.0, 4, 12, 1.0).unwrap();
        let mu = inst.params.alpha / 4.0;
        let cv = certified_strongly_convex_solve(&inst.problem, mu, 5e-5).unwrap();
        let closed = inst.problem.optimum_value.unwrap();
        assert!(
            (cv.value - closed).abs() <= 1e-4,
            "certified {} vs closed form {closed}",
            cv.value
        );
        // One-sided: the certified value can only overshoot the optimum.
        assert!(cv.value >= closed - 1e-12);
    }

    #[test]
    fn strongly_convex_solve_rejects_silly_tolerance() {
        let oracle = ObjectiveOracle::abs_deviation(array![0.0]);
        let p = crate::objectives::ProblemInstance::new(1, vec![oracle], 1.0, 1.0).unwrap();
        assert!(certified_strongly_convex_solve(&p, 1e-12, 1e-12).is_err());
    }
}
