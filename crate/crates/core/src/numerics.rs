//! Dense symmetric linear algebra, Chebyshev polynomials, and Euclidean
//! projections used by every other module.
//!
//! The eigensolver is a cyclic Jacobi iteration: at desk scale (n ≤ 256) it
//! is plenty fast, fully deterministic for a fixed input, and accurate to
//! near machine precision, which the spectral contracts below rely on.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// A point of parameter space. Length must equal the ambient dimension of
/// the problem at hand; coordinates are finite.
pub type Vector = Array1<f64>;

/// Relative threshold below which an eigenvalue counts as zero for kernel
/// checks.
pub const ZERO_EIGENVALUE_REL_TOL: f64 = 1e-9;

/// Residual tolerance for verified eigenpairs: `‖Mv − λv‖ ≤ tol · max(1, λ_max)`.
const EIGENPAIR_REL_TOL: f64 = 1e-9;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Dense symmetric matrix. Construction enforces exact symmetry so
/// `entry(i, j) == entry(j, i)` bit-for-bit.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    data: Array2<f64>,
}

impl SymmetricMatrix {
    /// Builds from a generator called once per unordered pair `(i, j)` with
    /// `i <= j`; the value is mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        SymmetricMatrix { data }
    }

    /// Validates an existing square array: finite entries, exact symmetry.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let (n, m) = data.dim();
        if n != m {
            return Err(Error::NotSquare(n, m));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntries);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[[i, j]] != data[[j, i]] {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        a: data[[i, j]],
                        b: data[[j, i]],
                    });
                }
            }
        }
        Ok(SymmetricMatrix { data })
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        self.data.dot(v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Verified full spectrum of a symmetric matrix.
///
/// Eigenvalues are sorted ascending; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns. `residual` is the largest
/// `‖Mv − λv‖₂` over all pairs, checked against
/// `1e-9 · max(1, |λ|_max)` at construction.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
    pub residual: f64,
}

impl SpectralSummary {
    /// Largest eigenvalue (`λ_1` in the usual largest-first indexing).
    pub fn largest(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Second-smallest eigenvalue (`λ_{n-1}` largest-first).
    pub fn second_smallest(&self) -> f64 {
        self.eigenvalues[1.min(self.eigenvalues.len() - 1)]
    }

    /// Number of eigenvalues that count as zero relative to the largest
    /// magnitude.
    pub fn zero_count(&self) -> usize {
        let scale = self
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        self.eigenvalues
            .iter()
            .filter(|v| v.abs() <= ZERO_EIGENVALUE_REL_TOL * scale)
            .count()
    }

    /// Ratio of smallest non-zero to largest eigenvalue, the normalized
    /// eigengap. Errors if more than one eigenvalue is numerically zero
    /// (disconnected support) or the matrix is degenerate.
    pub fn normalized_eigengap(&self) -> Result<f64> {
        let n = self.eigenvalues.len();
        if n < 2 {
            return Err(Error::DisconnectedSupport);
        }
        if self.zero_count() > 1 {
            return Err(Error::DisconnectedSupport);
        }
        let top = self.largest();
        if top <= 0.0 {
            return Err(Error::DisconnectedSupport);
        }
        Ok(self.second_smallest() / top)
    }
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Deterministic for a fixed input; every returned pair satisfies
/// `‖Mv − λv‖₂ ≤ 1e-9 · max(1, |λ|_max)`.
pub fn symmetric_eigendecomposition(m: &SymmetricMatrix) -> Result<SpectralSummary> {
    let n = m.order();
    if n == 0 {
        return Err(Error::NotSquare(0, 0));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }

    let mut a = m.data.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale = m.frobenius_norm().max(1e-300);
    let target = 1e-14 * scale;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_JACOBI_SWEEPS {
        sweeps += 1;
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[[i, p]];
                        let aiq = a[[i, q]];
                        a[[i, p]] = c * aip - s * aiq;
                        a[[p, i]] = a[[i, p]];
                        a[[i, q]] = s * aip + c * aiq;
                        a[[q, i]] = a[[i, q]];
                    }
                }
                a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[[i, j]] * a[[i, j]];
            }
        }
        return Err(Error::EigenNoConvergence {
            sweeps,
            residual: off.sqrt(),
        });
    }

    // Sort ascending, permute eigenvectors to match, and fix signs so a
    // fixed input always yields the identical summary.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0usize;
        let mut best = 0.0f64;
        for i in 0..n {
            let m = v[[i, src]].abs();
            if m > best {
                best = m;
                pivot = i;
            }
        }
        let sign = if v[[pivot, src]] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[[i, col]] = sign * v[[i, src]];
        }
    }

    let lambda_scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = EIGENPAIR_REL_TOL * lambda_scale.max(1.0);
    let mut residual = 0.0f64;
    for col in 0..n {
        let vec = eigenvectors.column(col).to_owned();
        let mv = m.data.dot(&vec);
        let r = (&mv - &(eigenvalues[col] * &vec))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
    }
    if residual > tolerance {
        return Err(Error::EigenResidual {
            residual,
            tolerance,
        });
    }

    Ok(SpectralSummary {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

/// Chebyshev polynomial of the first kind, `T_k(x)`, via the three-term
/// recurrence `T_0 = 1`, `T_1 = x`, `T_{k+1}(x) = 2x T_k(x) - T_{k-1}(x)`.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Orthogonal projection onto the closed ball of radius `radius` around
/// `center`: returns `x` unchanged inside the ball, otherwise the radial
/// rescaling onto the sphere.
pub fn project_ball(x: &Vector, center: &Vector, radius: f64) -> Vector {
    debug_assert!(radius > 0.0);
    let offset = x - center;
    let norm = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= radius {
        x.clone()
    } else {
        center + &(offset * (radius / norm))
    }
}

/// Euclidean norm.
pub fn l2_norm(x: &Vector) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn path3_laplacian() -> SymmetricMatrix {
        SymmetricMatrix::from_array(array![
            [1.0, -1.0, 0.0],
            [-1.0, 2.0, -1.0],
            [0.0, -1.0, 1.0]
        ])
        .unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let m = SymmetricMatrix::from_array(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = symmetric_eigendecomposition(&m).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path3_spectrum() {
        let s = symmetric_eigendecomposition(&path3_laplacian()).unwrap();
        let expected = [0.0, 1.0, 3.0];
        for (got, want) in s.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
        // Normalized eigengap of the 3-node path is 1/3.
        let gap = s.normalized_eigengap().unwrap();
        assert!((gap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn complete3_eigengap_is_one() {
        let m = SymmetricMatrix::from_array(array![
            [2.0, -1.0, -1.0],
            [-1.0, 2.0, -1.0],
            [-1.0, -1.0, 2.0]
        ])
        .unwrap();
        let s = symmetric_eigendecomposition(&m).unwrap();
        assert!((s.normalized_eigengap().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycle5_spectrum_matches_circulant_closed_form() {
        // Unit-weight 5-cycle Laplacian: eigenvalues 2 - 2cos(2πk/5).
        let n = 5;
        let m = SymmetricMatrix::from_fn(n, |i, j| {
            if i == j {
                2.0
            } else if (j + n - i) % n == 1 || (i + n - j) % n == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let s = symmetric_eigendecomposition(&m).unwrap();
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in s.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn path_n_eigengap_closed_form() {
        // γ(P_n Laplacian) = (1 - cos(π/n)) / (1 + cos(π/n)).
        for n in [4usize, 7, 12] {
            let m = SymmetricMatrix::from_fn(n, |i, j| {
                if i == j {
                    if i == 0 || i == n - 1 {
                        1.0
                    } else {
                        2.0
                    }
                } else if j == i + 1 {
                    -1.0
                } else {
                    0.0
                }
            });
            let s = symmetric_eigendecomposition(&m).unwrap();
            let c = (std::f64::consts::PI / n as f64).cos();
            let want = (1.0 - c) / (1.0 + c);
            let got = s.normalized_eigengap().unwrap();
            assert!((got - want).abs() < 1e-10, "n={n}: got {got}, want {want}");
        }
    }

    #[test]
    fn eigengap_rejects_disconnected_support() {
        // Two isolated edges: Laplacian has a two-dimensional kernel.
        let m = SymmetricMatrix::from_array(array![
            [1.0, -1.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
            [0.0, 0.0, -1.0, 1.0]
        ])
        .unwrap();
        let s = symmetric_eigendecomposition(&m).unwrap();
        assert!(matches!(
            s.normalized_eigengap(),
            Err(Error::DisconnectedSupport)
        ));
    }

    #[test]
    fn chebyshev_small_orders() {
        assert_eq!(chebyshev_t(0, 0.7), 1.0);
        assert_eq!(chebyshev_t(1, 0.7), 0.7);
        assert_eq!(chebyshev_t(2, 2.0), 7.0); // 2x^2 - 1
    }

    #[test]
    fn chebyshev_cosine_identity() {
        // T_k(cos θ) == cos(kθ) to 1e-10 for θ in [0, π], k <= 50.
        for k in 0..=50usize {
            for step in 0..=20 {
                let theta = std::f64::consts::PI * step as f64 / 20.0;
                let got = chebyshev_t(k, theta.cos());
                let want = (k as f64 * theta).cos();
                assert!(
                    (got - want).abs() < 1e-10,
                    "k={k} θ={theta}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn projection_examples() {
        let zero = Array1::zeros(2);
        let inside = array![0.3, -0.4];
        assert_eq!(project_ball(&inside, &zero, 1.0), inside);

        let p = project_ball(&array![2.0, 0.0], &zero, 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);

        let p = project_ball(&array![3.0, 4.0], &zero, 2.0);
        assert!((p[0] - 1.2).abs() < 1e-12 && (p[1] - 1.6).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(
            xs in prop::collection::vec(-10.0f64..10.0, 4),
            ys in prop::collection::vec(-10.0f64..10.0, 4),
            r in 0.1f64..5.0,
        ) {
            let x = Array1::from(xs);
            let y = Array1::from(ys);
            let c = Array1::zeros(4);
            let px = project_ball(&x, &c, r);
            let ppx = project_ball(&px, &c, r);
            let drift = l2_norm(&(&ppx - &px));
            prop_assert!(drift <= 1e-12);

            let py = project_ball(&y, &c, r);
            prop_assert!(l2_norm(&(&px - &py)) <= l2_norm(&(&x - &y)) + 1e-12);
        }

        #[test]
        fn eigendecomposition_reconstructs(
            n in 2usize..=16,
            seed in 0u64..1000,
        ) {
            // Deterministic pseudo-random symmetric matrix.
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let m = SymmetricMatrix::from_fn(n, |_, _| next() * 4.0);
            let s = symmetric_eigendecomposition(&m).unwrap();

            let mut recon = Array2::<f64>::zeros((n, n));
            for k in 0..n {
                let v = s.eigenvectors.column(k);
                for i in 0..n {
                    for j in 0..n {
                        recon[[i, j]] += s.eigenvalues[k] * v[i] * v[j];
                    }
                }
            }
            let diff = (&recon - m.as_array()).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(diff <= 1e-8 * m.frobenius_norm().max(1e-12));
        }
    }

    #[test]
    fn eigendecomposition_reconstructs_n64() {
        let n = 64;
        let mut state = 0xDEADBEEFu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = SymmetricMatrix::from_fn(n, |_, _| next() * 2.0);
        let s = symmetric_eigendecomposition(&m).unwrap();
        let mut recon = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            let v = s.eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    recon[[i, j]] += s.eigenvalues[k] * v[i] * v[j];
                }
            }
        }
        let diff = (&recon - m.as_array())
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-8 * m.frobenius_norm());
    }
}
