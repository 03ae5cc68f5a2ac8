//! Small dense linear-algebra kernel on top of `nalgebra`: symmetric
//! eigenvalues, numerical rank, and the minimum-norm least-squares solve
//! `A†v` used by every block projection.
//!
//! Singular value decompositions use one-sided (Hestenes) Jacobi rotations,
//! which stay accurate on the exactly rank-deficient blocks that incidence
//! matrices produce.
//!
//! One rank convention is used throughout: a singular value (or eigenvalue)
//! counts as zero when it does not exceed
//! `max(rows, cols) · ε · σ_max`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Rank cut-off for a `rows × cols` matrix whose largest singular value or
/// eigenvalue magnitude is `scale`.
pub fn rank_tolerance(rows: usize, cols: usize, scale: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * scale
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    if !s.is_square() {
        return Err(Error::NotSquareSymmetric("square"));
    }
    let scale = s.amax();
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            if (s[(i, j)] - s[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSquareSymmetric("symmetric"));
            }
        }
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange {
            quantity: "matrix entry",
            value: f64::NAN,
        });
    }
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = SymmetricEigen::new(s.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest entry of an ascending list that exceeds the rank tolerance for a
/// `len × len` problem with the given reference scale.
pub fn min_nonzero(values: &[f64], reference_scale: f64) -> Result<f64> {
    let tol = rank_tolerance(values.len(), values.len(), reference_scale.abs());
    values.iter().copied().find(|&v| v > tol).ok_or(Error::RankZero)
}

const MAX_SWEEPS: usize = 80;

/// `A = U·diag(σ)·Vᵀ` with `k = min(rows, cols)` columns in `U` and `V`.
struct Svd {
    u: DenseMatrix,
    sigma: Vec<f64>,
    v: DenseMatrix,
}

/// One-sided Jacobi on the columns of a tall matrix: rotate column pairs
/// until every pair is orthogonal to working precision.
fn jacobi_tall(a: &DenseMatrix) -> Svd {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            w.column_mut(j).unscale_mut(s);
        }
    }
    Svd { u: w, sigma, v }
}

fn svd(a: &DenseMatrix) -> Svd {
    if a.nrows() >= a.ncols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose());
        Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    }
}

struct ThinSvd {
    u: DenseMatrix,
    v: DenseMatrix,
    // reciprocal singular values, zero below the rank tolerance
    inv_sigma: Vec<f64>,
}

fn thin_svd(a: &DenseMatrix) -> ThinSvd {
    let (rows, cols) = a.shape();
    let Svd { u, sigma, v } = svd(a);
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let tol = rank_tolerance(rows, cols, sigma_max);
    let inv_sigma = sigma.iter().map(|&s| if s > tol { 1.0 / s } else { 0.0 }).collect();
    ThinSvd { u, v, inv_sigma }
}

/// Minimum-norm least-squares solution `A†v`.
pub fn min_norm_lstsq(a: &DenseMatrix, v: &Vector) -> Result<Vector> {
    if a.nrows() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {} entries",
            a.nrows(),
            v.len()
        )));
    }
    if a.is_empty() {
        return Ok(Vector::zeros(a.ncols()));
    }
    let svd = thin_svd(a);
    let mut coeffs = svd.u.tr_mul(v);
    for (c, &inv) in coeffs.iter_mut().zip(&svd.inv_sigma) {
        *c *= inv;
    }
    Ok(&svd.v * coeffs)
}

/// Moore–Penrose pseudoinverse, with the same rank tolerance as
/// [`min_norm_lstsq`].
pub fn pseudo_inverse(a: &DenseMatrix) -> DenseMatrix {
    if a.is_empty() {
        return DenseMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = thin_svd(a);
    let mut scaled_u_t = svd.u.transpose();
    for (mut row, &inv) in scaled_u_t.row_iter_mut().zip(&svd.inv_sigma) {
        row *= inv;
    }
    &svd.v * scaled_u_t
}

/// Singular values, descending.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s = svd(a).sigma;
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest nonzero singular value squared, `σ²_min+(A)`.
pub fn min_nonzero_singular_value_sq(a: &DenseMatrix) -> Result<f64> {
    let s = singular_values(a);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(a.nrows(), a.ncols(), sigma_max);
    s.iter()
        .rev()
        .copied()
        .find(|&v| v > tol)
        .map(|v| v * v)
        .ok_or(Error::RankZero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn eigenvalue_examples() {
        let id = DenseMatrix::identity(3, 3);
        assert!(close(&symmetric_eigenvalues(&id).unwrap(), &[1.0; 3], 1e-14));

        let lp3 = DenseMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        assert!(close(&symmetric_eigenvalues(&lp3).unwrap(), &[0.0, 1.0, 3.0], 1e-12));

        let lk4 = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 3.0 } else { -1.0 });
        assert!(close(
            &symmetric_eigenvalues(&lk4).unwrap(),
            &[0.0, 4.0, 4.0, 4.0],
            1e-12
        ));
    }

    #[test]
    fn eigenvalues_reject_bad_shapes() {
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(2, 3)).is_err());
        let asym = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(symmetric_eigenvalues(&asym).is_err());
    }

    #[test]
    fn min_nonzero_examples() {
        assert_eq!(min_nonzero(&[0.0, 2.0, 2.0], 2.0).unwrap(), 2.0);
        let p4 = [1e-18, 0.5858, 2.0, 3.4142];
        assert_eq!(min_nonzero(&p4, 3.4142).unwrap(), 0.5858);
        assert!(matches!(min_nonzero(&[0.0, 0.0], 0.0), Err(Error::RankZero)));
        assert_eq!(min_nonzero(&[-1e-16, 1e-16, 1.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn lstsq_examples() {
        let a = DenseMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let x = min_norm_lstsq(&a, &Vector::from_vec(vec![2.0])).unwrap();
        assert!(close(x.as_slice(), &[1.0, -1.0], 1e-14));

        let id = DenseMatrix::identity(3, 3);
        let v = Vector::from_vec(vec![3.0, -1.0, 0.5]);
        assert!(close(min_norm_lstsq(&id, &v).unwrap().as_slice(), v.as_slice(), 1e-14));

        let rank1 = DenseMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let x = min_norm_lstsq(&rank1, &Vector::from_vec(vec![1.0, -1.0])).unwrap();
        assert!(close(x.as_slice(), &[0.5, -0.5], 1e-14));

        assert!(min_norm_lstsq(&id, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn pseudo_inverse_matches_lstsq() {
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 1.0]);
        let v = Vector::from_vec(vec![1.0, 0.0, -2.0]);
        let via_pinv = pseudo_inverse(&a) * &v;
        let via_solve = min_norm_lstsq(&a, &v).unwrap();
        assert!((via_pinv - via_solve).norm() < 1e-12);
    }

    #[test]
    fn lstsq_on_exactly_rank_deficient_product() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = DenseMatrix::from_fn(9, 2, |_, _| normal()) * DenseMatrix::from_fn(2, 6, |_, _| normal());
        let w = Vector::from_fn(9, |_, _| normal());
        let x = min_norm_lstsq(&a, &w).unwrap();
        // normal equations and row-space membership, checked via AᵀA eigenvectors
        assert!((a.tr_mul(&a) * &x - a.tr_mul(&w)).norm() < 1e-10 * a.tr_mul(&w).norm());
        let eig = SymmetricEigen::new(a.tr_mul(&a));
        let top = eig.eigenvalues.amax();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 1e-9 * top {
                assert!(x.dot(&eig.eigenvectors.column(k)).abs() < 1e-12 * x.norm());
            }
        }
    }

    #[test]
    fn min_nonzero_singular_value_of_rank_deficient_matrix() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((min_nonzero_singular_value_sq(&a).unwrap() - 4.0).abs() < 1e-12);
    }

    /// Random `rows × cols` matrix of rank at most `rank`.
    fn low_rank(rows: usize, cols: usize, rank: usize, entries: &[f64]) -> DenseMatrix {
        let left = DenseMatrix::from_iterator(rows, rank, entries[..rows * rank].iter().copied());
        let right = DenseMatrix::from_iterator(rank, cols, entries[rows * rank..][..rank * cols].iter().copied());
        left * right
    }

    proptest! {
        #[test]
        fn penrose_identities(entries in prop::collection::vec(-3.0f64..3.0, 6 * 3 + 3 * 4)) {
            let a = low_rank(6, 4, 3, &entries);
            let pinv = DenseMatrix::from_columns(
                &(0..6)
                    .map(|c| {
                        let e = Vector::from_fn(6, |i, _| if i == c { 1.0 } else { 0.0 });
                        min_norm_lstsq(&a, &e).unwrap()
                    })
                    .collect::<Vec<_>>(),
            );
            let scale = a.norm().max(1.0) * pinv.norm().max(1.0);
            prop_assert!((&a * &pinv * &a - &a).norm() <= 1e-9 * scale * a.norm().max(1.0));
            prop_assert!((&pinv * &a * &pinv - &pinv).norm() <= 1e-9 * scale * pinv.norm().max(1.0));
        }

        #[test]
        fn solution_is_orthogonal_to_kernel(
            entries in prop::collection::vec(-3.0f64..3.0, 6 * 3 + 3 * 4),
            rhs in prop::collection::vec(-5.0f64..5.0, 6),
        ) {
            let a = low_rank(6, 4, 3, &entries);
            let w = Vector::from_vec(rhs);
            let x = min_norm_lstsq(&a, &w).unwrap();
            // kernel directions from an independent route: eigenvectors of AᵀA
            let gram = a.tr_mul(&a);
            let eig = SymmetricEigen::new(gram.clone());
            let top = eig.eigenvalues.amax();
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda <= 1e-9 * top {
                    let kernel_dir = eig.eigenvectors.column(k);
                    prop_assert!(x.dot(&kernel_dir).abs() <= 1e-9 * x.norm().max(1.0));
                }
            }
            let sigma_max = top.sqrt();
            // normal equations
            let lhs = a.tr_mul(&a) * &x;
            let rhs = a.tr_mul(&w);
            prop_assert!((lhs - &rhs).norm() <= 1e-9 * rhs.norm().max(1.0) * sigma_max.max(1.0));
        }

        #[test]
        fn svd_recomposes_rank_deficient_matrices(
            entries in prop::collection::vec(-3.0f64..3.0, 9 * 2 + 2 * 6),
            wide in any::<bool>(),
        ) {
            let tall = low_rank(9, 6, 2, &entries);
            let a = if wide { tall.transpose() } else { tall };
            let Svd { u, sigma, v } = svd(&a);
            let recomposed = &u * DenseMatrix::from_diagonal(&Vector::from_vec(sigma.clone())) * v.transpose();
            prop_assert!((recomposed - &a).norm() <= 1e-12 * a.norm().max(1.0));
            let k = sigma.len();
            prop_assert!((v.tr_mul(&v) - DenseMatrix::identity(k, k)).amax() <= 1e-12);
            let smax = sigma.iter().copied().fold(0.0, f64::max);
            let mut nonzero = 0;
            for (j, &s) in sigma.iter().enumerate() {
                if s > rank_tolerance(9, 6, smax) {
                    nonzero += 1;
                    prop_assert!((u.column(j).norm() - 1.0).abs() <= 1e-12);
                }
            }
            prop_assert!(nonzero <= 2);
        }

        #[test]
        fn psd_eigenvalues_are_nonnegative(entries in prop::collection::vec(-2.0f64..2.0, 20)) {
            let b = DenseMatrix::from_iterator(4, 5, entries);
            let s = &b * b.transpose();
            let values = symmetric_eigenvalues(&s).unwrap();
            let lmax = *values.last().unwrap();
            prop_assert!(values[0] >= -1e-10 * lmax.max(1.0));
        }
    }
}
