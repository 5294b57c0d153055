//! Discrete algebraic Riccati equation, solved by the plain fixed-point
//! recursion. Used as the model-based optimal-cost baseline.

use super::{is_schur_stable, Mat, SymmetricMatrix, SCHUR_TOL};
use crate::error::{Error, Result};
use nalgebra::Cholesky;

const MAX_ITER: usize = 10_000;
const STEP_TOL: f64 = 1e-12;

/// Solves AᵀPA - P - AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q = 0 starting from P = Q and
/// returns (P, K_opt) with K_opt = -(R + BᵀPB)⁻¹BᵀPA.
///
/// Stabilizability of (A, B) is assumed, not checked; a non-convergent
/// recursion surfaces as `Error::Convergence`.
pub fn solve_dare(
    a: &Mat,
    b: &Mat,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
) -> Result<(SymmetricMatrix, Mat)> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.dim() != n || r.dim() != m {
        return Err(Error::dimension(
            "solve_dare",
            format!("A {n}x{n}, B {n}x{m}, Q {n}x{n}, R {m}x{m}"),
            format!(
                "A {}x{}, B {}x{}, Q {}, R {}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                q.dim(),
                r.dim()
            ),
        ));
    }

    let mut p = q.as_mat().clone();
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let btp = b.transpose() * &p;
        let gram = r.as_mat() + &btp * b;
        let chol = Cholesky::new(gram).ok_or_else(|| Error::Domain(
            "R + BᵀPB not positive definite in Riccati recursion".into(),
        ))?;
        let btpa = &btp * a;
        let gain = chol.solve(&btpa); // (R + BᵀPB)⁻¹ BᵀPA
        let next = a.transpose() * &p * a - btpa.transpose() * &gain + q.as_mat();
        let next = (&next + next.transpose()) * 0.5;
        last_step = (&next - &p).norm();
        let done = last_step <= STEP_TOL * p.norm().max(1.0);
        p = next;
        if !p.iter().all(|v| v.is_finite()) || p.norm() > 1e100 {
            return Err(Error::Convergence {
                iterations: MAX_ITER,
                residual: f64::INFINITY,
            });
        }
        if done {
            let btp = b.transpose() * &p;
            let gram = r.as_mat() + &btp * b;
            let chol = Cholesky::new(gram).ok_or_else(|| Error::Domain(
                "R + BᵀPB not positive definite at Riccati fixed point".into(),
            ))?;
            let k_opt = -chol.solve(&(&btp * a));
            let p = SymmetricMatrix::new(p)?;
            let residual = dare_residual(a, b, q, r, &p);
            if residual > 1e-8 * p.as_mat().norm().max(1.0) {
                return Err(Error::Convergence {
                    iterations: MAX_ITER,
                    residual,
                });
            }
            if !is_schur_stable(&(a + b * &k_opt), SCHUR_TOL)? {
                return Err(Error::Domain(
                    "Riccati gain does not stabilize; (A, B) likely not stabilizable".into(),
                ));
            }
            return Ok((p, k_opt));
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITER,
        residual: last_step,
    })
}

/// Frobenius norm of the Riccati defect at P.
pub fn dare_residual(a: &Mat, b: &Mat, q: &SymmetricMatrix, r: &SymmetricMatrix, p: &SymmetricMatrix) -> f64 {
    let pm = p.as_mat();
    let btp = b.transpose() * pm;
    let gram = r.as_mat() + &btp * b;
    let inv = match Cholesky::new(gram) {
        Some(c) => c.inverse(),
        None => return f64::INFINITY,
    };
    (a.transpose() * pm * a - pm - (a.transpose() * pm * b) * inv * (&btp * a) + q.as_mat()).norm()
}
