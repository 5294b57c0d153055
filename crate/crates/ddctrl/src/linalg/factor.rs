//! Positive-semidefinite factorizations: pivoted Cholesky for weight
//! factoring and a blocked Cholesky used by the SDP barrier on larger
//! Newton systems.

use super::{Mat, SymmetricMatrix};
use crate::error::{Error, Result};

/// Factors a PSD matrix as Q = CᵀC with C of full row rank (rank(Q) rows),
/// via diagonally pivoted Cholesky. Zero eigendirections are dropped.
///
/// Returns `Error::Spec` when a diagonal pivot goes genuinely negative.
pub fn psd_factor(q: &SymmetricMatrix, rel_tol: f64) -> Result<Mat> {
    let n = q.dim();
    let mut a = q.as_mat().clone();
    let scale = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1.0);
    let stop_tol = rel_tol * scale;
    let neg_tol = 1e-8 * scale;

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0usize;
    for k in 0..n {
        // largest remaining diagonal entry; ties keep natural order
        let mut piv = k;
        for j in k + 1..n {
            if a[(j, j)] > a[(piv, piv)] {
                piv = j;
            }
        }
        let d = a[(piv, piv)];
        if d < -neg_tol {
            return Err(Error::Spec(format!(
                "matrix is indefinite (pivot {d:.3e} at step {k})"
            )));
        }
        if d <= stop_tol {
            // remaining block must be numerically zero / PSD-negligible
            for j in k..n {
                if a[(j, j)] < -neg_tol {
                    return Err(Error::Spec(format!(
                        "matrix is indefinite (trailing diagonal {:.3e})",
                        a[(j, j)]
                    )));
                }
            }
            break;
        }
        if piv != k {
            a.swap_rows(k, piv);
            a.swap_columns(k, piv);
            perm.swap(k, piv);
        }
        let root = d.sqrt();
        a[(k, k)] = root;
        for i in k + 1..n {
            a[(i, k)] /= root;
        }
        // full symmetric trailing update so later pivot swaps stay consistent
        for j in k + 1..n {
            let ljk = a[(j, k)];
            for i in k + 1..n {
                a[(i, j)] -= a[(i, k)] * ljk;
            }
        }
        rank = k + 1;
    }

    // C[r, perm[i]] = L[i, r]  so that CᵀC reproduces Q in original order
    let mut c = Mat::zeros(rank, n);
    for r in 0..rank {
        for i in r..n {
            c[(r, perm[i])] = a[(i, r)];
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_factors_to_identity() {
        let q = SymmetricMatrix::identity(3);
        let c = psd_factor(&q, 1e-12).unwrap();
        assert_eq!(c, Mat::identity(3, 3));
    }

    #[test]
    fn rank_one_diagonal() {
        let q = SymmetricMatrix::new(dmatrix![4.0, 0.0; 0.0, 0.0]).unwrap();
        let c = psd_factor(&q, 1e-12).unwrap();
        assert_eq!(c.nrows(), 1);
        assert!((c - dmatrix![2.0, 0.0]).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_gives_empty_factor() {
        let q = SymmetricMatrix::zeros(3);
        let c = psd_factor(&q, 1e-12).unwrap();
        assert_eq!(c.nrows(), 0);
        assert_eq!(c.ncols(), 3);
    }

    #[test]
    fn indefinite_rejected() {
        let q = SymmetricMatrix::new(dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
        assert!(psd_factor(&q, 1e-12).is_err());
    }

    #[test]
    fn random_psd_roundtrip() {
        let mut rng = crate::rng::SplitMix64::new(17);
        for _ in 0..20 {
            let n = 1 + rng.below(8);
            let r = 1 + rng.below(n);
            let half = Mat::from_fn(r, n, |_, _| rng.uniform(-2.0, 2.0));
            let q = SymmetricMatrix::new(half.transpose() * &half).unwrap();
            let c = psd_factor(&q, 1e-12).unwrap();
            assert!((c.transpose() * &c - q.as_mat()).norm() <= 1e-10 * q.as_mat().norm().max(1.0));
            assert!(c.nrows() <= r);
        }
    }


}

