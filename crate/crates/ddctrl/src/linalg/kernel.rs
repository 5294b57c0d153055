//! Null spaces, numerical rank, minimum-norm solves and constrained right
//! inverses, all through SVD with a shared rank threshold.

use super::Mat;
use crate::error::{Error, Result};
use nalgebra::linalg::SVD;

/// Relative singular-value threshold: σ below σ_max·max(rows,cols)·RANK_REL_TOL
/// counts as zero.
pub const RANK_REL_TOL: f64 = 1e-12;

const SVD_MAX_ITER: usize = 4_000;

fn svd_of(m: &Mat) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITER).ok_or(Error::Numerical {
        what: "SVD iteration",
        iterations: SVD_MAX_ITER,
    })
}

fn sv_threshold(m: &Mat, singular: &[f64], rel: f64) -> f64 {
    let smax = singular.iter().copied().fold(0.0, f64::max);
    smax * m.nrows().max(m.ncols()) as f64 * rel
}

/// Numerical rank at the default threshold.
pub fn numerical_rank(m: &Mat) -> Result<usize> {
    numerical_rank_scaled(m, 0.0)
}

/// Numerical rank with an external magnitude reference: singular values are
/// compared against max(σ_max, scale)·max(dims)·RANK_REL_TOL. Needed when
/// `m` is the product of larger matrices and may consist entirely of
/// round-off residue.
pub fn numerical_rank_scaled(m: &Mat, scale: f64) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let svd = svd_of(m)?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max).max(scale);
    let tol = smax * m.nrows().max(m.ncols()) as f64 * RANK_REL_TOL;
    Ok(sv.iter().filter(|s| **s > tol).count())
}

/// Orthonormal basis of the right null space of `m`, one basis vector per
/// column; a matrix with zero columns when `m` has full column rank.
pub fn kernel_basis(m: &Mat) -> Result<Mat> {
    kernel_basis_with_tol(m, RANK_REL_TOL)
}

/// [`kernel_basis`] with an explicit relative rank threshold.
pub fn kernel_basis_with_tol(m: &Mat, rel: f64) -> Result<Mat> {
    let t = m.ncols();
    if t == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if m.nrows() == 0 {
        return Ok(Mat::identity(t, t));
    }
    let svd = svd_of(m)?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let tol = sv_threshold(m, &sv, rel);
    let v_t = svd.v_t.as_ref().expect("svd computed with vectors");
    // rows of v_t with non-negligible singular values span the row space
    let kept: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol).collect();
    let rank = kept.len();
    if rank == t {
        return Ok(Mat::zeros(t, 0));
    }
    // Orthonormal complement of the row space via the projector I - VᵀV;
    // its unit eigenvalues give well-conditioned eigenvectors even when the
    // thin SVD cannot produce trailing right-singular vectors directly.
    let mut proj = Mat::identity(t, t);
    for &i in &kept {
        let row = v_t.row(i);
        for a in 0..t {
            for b in 0..t {
                proj[(a, b)] -= row[a] * row[b];
            }
        }
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(proj, f64::EPSILON, SVD_MAX_ITER).ok_or(
        Error::Numerical {
            what: "projector eigendecomposition",
            iterations: SVD_MAX_ITER,
        },
    )?;
    let mut cols: Vec<usize> = (0..t).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    cols.sort_unstable();
    debug_assert_eq!(cols.len(), t - rank);
    let mut basis = Mat::zeros(t, cols.len());
    for (out, &i) in cols.iter().enumerate() {
        basis.set_column(out, &eig.eigenvectors.column(i));
    }
    Ok(basis)
}

/// Minimum-norm solution X of A·X = B (per column), plus the residual
/// ‖A·X − B‖_F of the least-squares fit.
pub fn min_norm_solve(a: &Mat, b: &Mat) -> Result<(Mat, f64)> {
    if a.nrows() != b.nrows() {
        return Err(Error::dimension(
            "min_norm_solve",
            format!("{} rhs rows", a.nrows()),
            format!("{}", b.nrows()),
        ));
    }
    if a.ncols() == 0 {
        return Ok((Mat::zeros(0, b.ncols()), b.norm()));
    }
    if a.nrows() == 0 {
        return Ok((Mat::zeros(a.ncols(), b.ncols()), 0.0));
    }
    let svd = svd_of(a)?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let tol = sv_threshold(a, &sv, RANK_REL_TOL);
    let u = svd.u.as_ref().expect("svd computed with vectors");
    let v_t = svd.v_t.as_ref().expect("svd computed with vectors");
    // X = V Σ⁺ Uᵀ B
    let mut ut_b = u.transpose() * b;
    for (i, s) in sv.iter().enumerate() {
        let f = if *s > tol { 1.0 / s } else { 0.0 };
        ut_b.row_mut(i).scale_mut(f);
    }
    let x = v_t.transpose() * ut_b;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Finds G with M·G = I and Z·G = 0 when the stacked system is solvable
/// (minimum-norm particular solution); `None` otherwise.
pub fn constrained_right_inverse(m: &Mat, z: &Mat) -> Result<Option<Mat>> {
    let t = m.ncols();
    if z.ncols() != t {
        return Err(Error::dimension(
            "constrained_right_inverse",
            format!("{t} columns"),
            format!("{}", z.ncols()),
        ));
    }
    let p = m.nrows();
    let q = z.nrows();
    let mut stacked = Mat::zeros(p + q, t);
    stacked.view_mut((0, 0), (p, t)).copy_from(m);
    stacked.view_mut((p, 0), (q, t)).copy_from(z);
    let mut rhs = Mat::zeros(p + q, p);
    rhs.view_mut((0, 0), (p, p)).copy_from(&Mat::identity(p, p));
    let (g, _) = min_norm_solve(&stacked, &rhs)?;
    let res_m = (m * &g - Mat::identity(p, p)).norm();
    let res_z = (z * &g).norm();
    if res_m <= 1e-10 && res_z <= 1e-10 {
        Ok(Some(g))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn kernel_of_row_selector() {
        let m = dmatrix![1.0, 0.0];
        let b = kernel_basis(&m).unwrap();
        assert_eq!(b.shape(), (2, 1));
        assert!(b[(0, 0)].abs() < 1e-14);
        assert!((b[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_of_invertible_is_empty() {
        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        let b = kernel_basis(&m).unwrap();
        assert_eq!(b.ncols(), 0);
    }

    #[test]
    fn kernel_of_ones_row() {
        let m = dmatrix![1.0, 1.0];
        let b = kernel_basis(&m).unwrap();
        assert_eq!(b.shape(), (2, 1));
        assert!((&m * &b).norm() < 1e-14);
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        assert!((b[(0, 0)].abs() - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn kernel_orthonormal_and_annihilating() {
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..30 {
            let rows = 1 + rng.below(6);
            let cols = 1 + rng.below(10);
            let m = Mat::from_fn(rows, cols, |_, _| rng.uniform(-3.0, 3.0));
            let b = kernel_basis(&m).unwrap();
            if b.ncols() > 0 {
                assert!((&m * &b).norm() <= 1e-10 * m.norm().max(1e-300));
                let gram = b.transpose() * &b;
                assert!((gram - Mat::identity(b.ncols(), b.ncols())).norm() < 1e-12);
            }
            let rank = numerical_rank(&m).unwrap();
            assert_eq!(b.ncols(), cols - rank);
        }
    }

    #[test]
    fn right_inverse_simple() {
        let g = constrained_right_inverse(&dmatrix![1.0, 0.0], &dmatrix![0.0, 1.0])
            .unwrap()
            .unwrap();
        assert!((g - dmatrix![1.0; 0.0]).norm() < 1e-12);
    }

    #[test]
    fn right_inverse_conflict_absent() {
        assert!(constrained_right_inverse(&dmatrix![1.0], &dmatrix![1.0])
            .unwrap()
            .is_none());
    }

    #[test]
    fn right_inverse_two_by_two() {
        let g = constrained_right_inverse(&dmatrix![1.0, 1.0], &dmatrix![1.0, -1.0])
            .unwrap()
            .unwrap();
        assert!((g - dmatrix![0.5; 0.5]).norm() < 1e-12);
    }

    #[test]
    fn right_inverse_residual_invariant() {
        let mut rng = crate::rng::SplitMix64::new(13);
        for _ in 0..30 {
            let t = 3 + rng.below(8);
            let p = 1 + rng.below(3);
            let q = 1 + rng.below(2);
            let m = Mat::from_fn(p, t, |_, _| rng.uniform(-2.0, 2.0));
            let z = Mat::from_fn(q, t, |_, _| rng.uniform(-2.0, 2.0));
            if let Some(g) = constrained_right_inverse(&m, &z).unwrap() {
                assert!((&m * &g - Mat::identity(p, p)).norm() <= 1e-10);
                assert!((&z * &g).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn min_norm_picks_smallest_solution() {
        // x + y = 2 has min-norm solution (1, 1)
        let (x, res) = min_norm_solve(&dmatrix![1.0, 1.0], &dmatrix![2.0]).unwrap();
        assert!(res < 1e-12);
        assert!((x - dmatrix![1.0; 1.0]).norm() < 1e-12);
    }
}
