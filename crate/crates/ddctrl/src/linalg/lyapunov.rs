//! Discrete Lyapunov equation AᵀPA - P + Q = 0 for Schur-stable A.

use super::{is_schur_stable, Mat, SymmetricMatrix, SCHUR_TOL};
use crate::error::{Error, Result};

/// Dimension threshold below which the vectorized Kronecker solve is used;
/// larger problems go through the doubling iteration.
const KRON_MAX_DIM: usize = 30;

/// Solves AᵀPA - P + Q = 0 for symmetric P, requiring A Schur stable.
///
/// Residual is driven to ≤ 1e-10·max(1, ‖Q‖_F); if Q ⪰ 0 the solution is the
/// observability-type Gramian Σ (Aᵀ)ᵗ Q Aᵗ and is positive semidefinite.
pub fn solve_discrete_lyapunov(a: &Mat, q: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = a.nrows();
    if a.ncols() != n || q.dim() != n {
        return Err(Error::dimension(
            "solve_discrete_lyapunov",
            format!("A {n}x{n}, Q {n}x{n}"),
            format!("A {}x{}, Q {}x{}", a.nrows(), a.ncols(), q.dim(), q.dim()),
        ));
    }
    if !is_schur_stable(a, SCHUR_TOL)? {
        return Err(Error::Domain(
            "Lyapunov solve requires a Schur-stable coefficient matrix".into(),
        ));
    }
    let p = if n <= KRON_MAX_DIM {
        kron_solve(a, q.as_mat())?
    } else {
        doubling(a, q.as_mat())?
    };
    let p = SymmetricMatrix::new(p)?;
    let qn = q.as_mat().norm().max(1.0);
    let residual = (a.transpose() * p.as_mat() * a - p.as_mat() + q.as_mat()).norm();
    if residual > 1e-10 * qn {
        return Err(Error::Numerical {
            what: "Lyapunov residual",
            iterations: 0,
        });
    }
    Ok(p)
}

/// (I - Aᵀ ⊗ Aᵀ) vec(P) = vec(Q), solved densely via LU.
fn kron_solve(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let at = a.transpose();
    let mut sys = Mat::identity(n * n, n * n) - at.kronecker(&at);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let lu = sys.clone().lu();
    let sol = lu.solve(&rhs).ok_or(Error::Numerical {
        what: "Lyapunov Kronecker system",
        iterations: 0,
    })?;
    sys.fill(0.0); // large scratch no longer needed
    Ok(Mat::from_column_slice(n, n, sol.as_slice()))
}

/// Doubling iteration: P ← P + MᵀPM, M ← M², starting from P = Q, M = A.
/// After k rounds P holds the partial sum over t < 2^k.
fn doubling(a: &Mat, q: &Mat) -> Result<Mat> {
    let mut p = q.clone();
    let mut m = a.clone();
    for _ in 0..200 {
        let update = m.transpose() * &p * &m;
        let step = update.norm();
        p += update;
        m = &m * &m;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical {
                what: "Lyapunov doubling iteration",
                iterations: 200,
            });
        }
        if step <= 0.25e-10 * p.norm().max(1.0) && m.norm() < 1.0 {
            // one refinement pass tightens the truncated tail
            p = a.transpose() * &p * a + q;
            return Ok(p);
        }
    }
    Err(Error::Numerical {
        what: "Lyapunov doubling iteration",
        iterations: 200,
    })
}
