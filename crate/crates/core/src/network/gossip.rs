//! Chebyshev-accelerated gossip and linear gossip averaging.
//!
//! One gossip round multiplies the node-column family by the gossip matrix;
//! `K` rounds evaluate a degree-`K` polynomial. Acceleration uses
//! `P_K(x) = 1 − T_K(c₂(1−x))/T_K(c₂)` on the rescaled matrix
//! `W̃ = c₃ W`, `c₂ = (1+γ)/(1−γ)`, `c₃ = 2/((1+γ)λ₁(W))`, which maps the
//! non-zero spectrum into the Chebyshev window and boosts the eigengap to
//! at least 1/4 for `K = ⌊1/√γ⌋`.

use ndarray::Array1;

use super::GossipMatrix;
use crate::numerics::{chebyshev_t, l2_norm, SymmetricMatrix, Vector};
use crate::{Error, Result};

fn check_columns(columns: &[Vector], gossip: &GossipMatrix) -> Result<usize> {
    if columns.len() != gossip.order() {
        return Err(Error::SizeMismatch(format!(
            "expected {} node columns, got {}",
            gossip.order(),
            columns.len()
        )));
    }
    Ok(columns.first().map(|c| c.len()).unwrap_or(0))
}

/// Applies `X ↦ X · P_K(W̃)` by the three-term Chebyshev recurrence, using
/// exactly `K` multiplications by the gossip matrix.
///
/// Degenerate cases: a single-node matrix yields the zero map; eigengap 1
/// falls back to one plain (normalized) gossip multiplication.
pub fn accelerated_gossip(
    columns: &[Vector],
    gossip: &GossipMatrix,
    steps: usize,
) -> Result<Vec<Vector>> {
    assert!(steps >= 1, "need at least one gossip step");
    let d = check_columns(columns, gossip)?;
    let n = gossip.order();
    if n == 1 || gossip.lambda_max() <= 0.0 {
        return Ok(vec![Array1::zeros(d); n]);
    }
    let gamma = gossip.eigengap()?;
    let lambda_max = gossip.lambda_max();
    if gamma >= 1.0 - 1e-12 {
        // c₂ degenerates; a single normalized multiplication is exact here.
        let applied = gossip.apply_columns(columns);
        return Ok(applied.into_iter().map(|c| c / lambda_max).collect());
    }

    let c2 = (1.0 + gamma) / (1.0 - gamma);
    let c3 = 2.0 / ((1.0 + gamma) * lambda_max);

    // mul(X) = X (I − W̃) with W̃ = c₃ W.
    let shift_mul = |x: &[Vector]| -> Vec<Vector> {
        let wx = gossip.apply_columns(x);
        x.iter()
            .zip(wx)
            .map(|(xi, wxi)| xi - &(wxi * c3))
            .collect()
    };

    let mut a_prev = 1.0;
    let mut a_cur = c2;
    let mut z_prev: Vec<Vector> = columns.to_vec();
    let mut z_cur: Vec<Vector> = shift_mul(columns)
        .into_iter()
        .map(|c| c * c2)
        .collect();
    for _ in 1..steps {
        let a_next = 2.0 * c2 * a_cur - a_prev;
        let mut z_next = shift_mul(&z_cur);
        for (zn, zp) in z_next.iter_mut().zip(&z_prev) {
            *zn *= 2.0 * c2;
            *zn -= zp;
        }
        a_prev = a_cur;
        a_cur = a_next;
        z_prev = z_cur;
        z_cur = z_next;
    }

    Ok(columns
        .iter()
        .zip(z_cur)
        .map(|(x, z)| x - &(z / a_cur))
        .collect())
}

/// The polynomial applied by [`accelerated_gossip`], evaluated at one
/// eigenvalue of `W`.
fn polynomial_value(lambda: f64, gamma: f64, lambda_max: f64, steps: usize) -> f64 {
    if gamma >= 1.0 - 1e-12 {
        return lambda / lambda_max;
    }
    let c2 = (1.0 + gamma) / (1.0 - gamma);
    let c3 = 2.0 / ((1.0 + gamma) * lambda_max);
    1.0 - chebyshev_t(steps, c2 * (1.0 - c3 * lambda)) / chebyshev_t(steps, c2)
}

/// Eigenvalues of `P_K(W̃)`, one per eigenvalue of `W`, in the same
/// (ascending-in-`W`) order.
pub fn accelerated_polynomial_eigenvalues(gossip: &GossipMatrix, steps: usize) -> Result<Vec<f64>> {
    if gossip.order() == 1 || gossip.lambda_max() <= 0.0 {
        return Ok(vec![0.0; gossip.order()]);
    }
    let gamma = gossip.eigengap()?;
    let lambda_max = gossip.lambda_max();
    Ok(gossip
        .spectrum()
        .eigenvalues
        .iter()
        .map(|&l| polynomial_value(l, gamma, lambda_max, steps))
        .collect())
}

/// Normalized eigengap of `P_K(W̃)` from the mapped spectrum.
pub fn accelerated_eigengap(gossip: &GossipMatrix, steps: usize) -> Result<f64> {
    if gossip.order() == 1 {
        return Ok(1.0);
    }
    let mapped = accelerated_polynomial_eigenvalues(gossip, steps)?;
    let top = mapped.iter().fold(0.0f64, |m, v| m.max(*v));
    let zero_tol = 1e-9 * top.max(1e-300);
    let smallest_nonzero = mapped
        .iter()
        .filter(|v| v.abs() > zero_tol)
        .fold(f64::INFINITY, |m, v| m.min(*v));
    if !smallest_nonzero.is_finite() || top <= 0.0 {
        return Err(Error::DisconnectedSupport);
    }
    Ok(smallest_nonzero / top)
}

/// Largest eigenvalue of `P_K(W̃)` (the spectral norm used by the
/// primal-dual step-size condition).
pub fn accelerated_lambda_max(gossip: &GossipMatrix, steps: usize) -> Result<f64> {
    Ok(accelerated_polynomial_eigenvalues(gossip, steps)?
        .into_iter()
        .fold(0.0f64, f64::max))
}

/// Materializes `P_K(W̃)` as a dense symmetric matrix by feeding the
/// identity columns through the gossip recurrence. Independent of the
/// closed-form eigenvalue mapping, so the two routes can check each other.
pub fn accelerated_polynomial_matrix(gossip: &GossipMatrix, steps: usize) -> Result<SymmetricMatrix> {
    let n = gossip.order();
    let basis: Vec<Vector> = (0..n)
        .map(|j| Array1::from_shape_fn(n, |i| if i == j { 1.0 } else { 0.0 }))
        .collect();
    let cols = accelerated_gossip(&basis, gossip, steps)?;
    // Column j of the result is P e_j; symmetrize away round-off.
    Ok(SymmetricMatrix::from_fn(n, |i, j| {
        0.5 * (cols[j][i] + cols[i][j])
    }))
}

/// The averaging matrix `W′ = I − c₃ P_K(W̃)` with
/// `c₃ = (1 + c₁^{2K})/(1 + c₁^K)²`: bi-stochastic, PSD, and with
/// `λ₂(W′) ≤ 3/4` when `K = ⌊1/√γ(W)⌋`.
pub fn averaging_matrix(gossip: &GossipMatrix, steps: usize) -> Result<SymmetricMatrix> {
    let n = gossip.order();
    let p = accelerated_polynomial_matrix(gossip, steps)?;
    let scale = averaging_scale(gossip, steps)?;
    Ok(SymmetricMatrix::from_fn(n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - scale * p.entry(i, j)
    }))
}

fn averaging_scale(gossip: &GossipMatrix, steps: usize) -> Result<f64> {
    let gamma = gossip.eigengap()?;
    if gamma >= 1.0 - 1e-12 {
        return Ok(1.0);
    }
    let c1 = (1.0 - gamma.sqrt()) / (1.0 + gamma.sqrt());
    let ck = c1.powi(steps as i32);
    Ok((1.0 + ck * ck) / ((1.0 + ck) * (1.0 + ck)))
}

/// Repeatedly multiplies the per-node values by `W′` until every node sits
/// within `tol` of the true mean; returns the values and the number of
/// rounds used.
pub fn gossip_average(
    values: &[Vector],
    gossip: &GossipMatrix,
    steps: usize,
    tol: f64,
) -> Result<(Vec<Vector>, usize)> {
    assert!(tol > 0.0);
    let d = check_columns(values, gossip)?;
    let n = gossip.order();
    let mut mean: Vector = Array1::zeros(d);
    for v in values {
        mean += v;
    }
    mean /= n as f64;

    let deviation = |vals: &[Vector]| -> f64 {
        vals.iter()
            .map(|v| l2_norm(&(v - &mean)))
            .fold(0.0, f64::max)
    };

    let scale = averaging_scale(gossip, steps)?;
    let mut current = values.to_vec();
    let mut rounds = 0;
    const MAX_ROUNDS: usize = 100_000;
    while deviation(&current) > tol {
        let p = accelerated_gossip(&current, gossip, steps)?;
        for (c, pi) in current.iter_mut().zip(p) {
            c.scaled_add(-scale, &pi);
        }
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(Error::InvalidParameter(format!(
                "gossip averaging did not reach tol {tol} within {MAX_ROUNDS} rounds"
            )));
        }
    }
    Ok((current, rounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{graph_with_eigengap, GossipMatrix, Network};
    use crate::objectives::GaussianStream;

    fn path_gossip(n: usize) -> GossipMatrix {
        let net = Network::path(n, 1.0).unwrap();
        GossipMatrix::laplacian(&net, &vec![1.0; n - 1]).unwrap()
    }

    fn random_columns(n: usize, d: usize, seed: u64) -> Vec<Vector> {
        let s = GaussianStream::new(seed);
        (0..n).map(|i| s.gaussian_vector(i as u64, 0, d)).collect()
    }

    #[test]
    fn constant_columns_are_annihilated() {
        let w = path_gossip(6);
        let cols: Vec<Vector> = vec![ndarray::array![1.5, -2.0]; 6];
        let out = accelerated_gossip(&cols, &w, 3).unwrap();
        for c in out {
            assert!(c.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn single_step_matches_closed_form() {
        // P₁(x) = 1 − c₂(1−x)/c₂ = x, so one accelerated step is exactly
        // multiplication by W̃ = c₃ W.
        let w = path_gossip(5);
        let gamma = w.eigengap().unwrap();
        let c3 = 2.0 / ((1.0 + gamma) * w.lambda_max());
        let cols = random_columns(5, 3, 11);
        let got = accelerated_gossip(&cols, &w, 1).unwrap();
        let want = w.apply_columns(&cols);
        for (g, wv) in got.iter().zip(want) {
            let diff = g - &(wv * c3);
            assert!(diff.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn mean_is_preserved_through_the_polynomial() {
        // P_K(W̃)·1 = 0, so the column sum of the output vanishes and
        // X − output keeps the mean.
        let w = path_gossip(7);
        let cols = random_columns(7, 4, 5);
        let out = accelerated_gossip(&cols, &w, 4).unwrap();
        let mut total = Array1::zeros(4);
        for c in &out {
            total += c;
        }
        assert!(total.iter().all(|v: &f64| v.abs() < 1e-10));
    }

    #[test]
    fn polynomial_matrix_agrees_with_eigenvalue_map() {
        let w = path_gossip(10);
        let k = 3;
        let p = accelerated_polynomial_matrix(&w, k).unwrap();
        let s = crate::numerics::symmetric_eigendecomposition(&p).unwrap();
        let mut mapped = accelerated_polynomial_eigenvalues(&w, k).unwrap();
        mapped.sort_by(f64::total_cmp);
        for (got, want) in s.eigenvalues.iter().zip(mapped) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn acceleration_boosts_path20_eigengap() {
        let w = path_gossip(20);
        let gamma = w.eigengap().unwrap();
        let k = (1.0 / gamma.sqrt()).floor() as usize;
        let boosted = accelerated_eigengap(&w, k).unwrap();
        assert!(boosted >= 0.25, "boosted eigengap {boosted}");
    }

    #[test]
    fn trivial_gossip_is_zero_map() {
        let w = GossipMatrix::trivial();
        let cols = vec![ndarray::array![1.0, 2.0]];
        let out = accelerated_gossip(&cols, &w, 1).unwrap();
        assert!(out[0].iter().all(|v| *v == 0.0));
        assert_eq!(w.eigengap().unwrap(), 1.0);
    }

    #[test]
    fn averaging_reaches_the_mean() {
        let w = path_gossip(20);
        let gamma = w.eigengap().unwrap();
        let k = (1.0 / gamma.sqrt()).floor() as usize;
        let cols = random_columns(20, 2, 3);
        let mut mean: Vector = Array1::zeros(2);
        for c in &cols {
            mean += c;
        }
        mean /= 20.0;

        let (out, rounds) = gossip_average(&cols, &w, k, 1e-9).unwrap();
        assert!(rounds > 0);
        for c in &out {
            assert!(l2_norm(&(c - &mean)) <= 1e-9);
        }

        // Already-averaged input needs zero rounds.
        let constant: Vec<Vector> = vec![mean.clone(); 20];
        let (_, rounds) = gossip_average(&constant, &w, k, 1e-9).unwrap();
        assert_eq!(rounds, 0);
    }

    #[test]
    fn averaging_contracts_at_three_quarters() {
        let w = path_gossip(20);
        let gamma = w.eigengap().unwrap();
        let k = (1.0 / gamma.sqrt()).floor() as usize;
        let wp = averaging_matrix(&w, k).unwrap();
        let s = crate::numerics::symmetric_eigendecomposition(&wp).unwrap();
        // Largest eigenvalue 1 (constants), second largest <= 3/4.
        let n = s.eigenvalues.len();
        assert!((s.eigenvalues[n - 1] - 1.0).abs() < 1e-9);
        assert!(s.eigenvalues[n - 2] <= 0.75 + 1e-9, "λ₂ = {}", s.eigenvalues[n - 2]);
        // PSD.
        assert!(s.eigenvalues[0] >= -1e-9);

        // Measured per-round contraction on random inputs.
        let cols = random_columns(20, 2, 31);
        let mut mean: Vector = Array1::zeros(2);
        for c in &cols {
            mean += c;
        }
        mean /= 20.0;
        let residual = |vals: &[Vector]| -> f64 {
            vals.iter().map(|v| l2_norm(&(v - &mean))).fold(0.0, f64::max)
        };
        let mut current = cols;
        let mut res = residual(&current);
        for _ in 0..25 {
            let mut next = vec![Array1::zeros(2); 20];
            for i in 0..20 {
                for j in 0..20 {
                    next[i].scaled_add(wp.entry(i, j), &current[j]);
                }
            }
            current = next;
            let next_res = residual(&current);
            assert!(next_res <= 0.75 * res + 1e-12, "{next_res} vs {res}");
            res = next_res;
        }
    }

    #[test]
    fn averaging_on_lemma_graph() {
        let (_, w) = graph_with_eigengap(0.05).unwrap();
        let gamma = w.eigengap().unwrap();
        let k = ((1.0 / gamma.sqrt()).floor() as usize).max(1);
        let cols = random_columns(w.order(), 3, 9);
        let (out, _) = gossip_average(&cols, &w, k, 1e-8).unwrap();
        let mut mean: Vector = Array1::zeros(3);
        for c in &cols {
            mean += c;
        }
        mean /= w.order() as f64;
        for c in &out {
            assert!(l2_norm(&(c - &mean)) <= 1e-8);
        }
    }
}
