//! Model-based ground truth: exact LQR / H2 closed-loop costs via Lyapunov
//! equations, suboptimality checks for a known system, and the Riccati
//! optimal-cost baseline. Every data-driven result in this crate can be
//! cross-checked here.

use crate::error::{Error, Result};
use crate::linalg::{
    is_schur_stable, solve_dare, solve_discrete_lyapunov, spectral_radius, Mat, SymmetricMatrix,
    SCHUR_TOL,
};
use crate::system::LtiSystem;
use nalgebra::DVector;

/// Relative slack on the strict cost comparison, to keep boundary cases from
/// flapping; the raw difference is reported alongside.
pub const COST_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationReport {
    pub stable: bool,
    pub closed_loop_spectral_radius: f64,
    /// Exact closed-loop cost (None when the loop is unstable).
    pub cost: Option<f64>,
    pub gamma: f64,
    pub pass: bool,
    /// cost − γ (negative when the bound holds).
    pub cost_minus_gamma: Option<f64>,
    /// Residual of the Lyapunov equation used for the cost.
    pub lyapunov_residual: Option<f64>,
}

/// Exact LQR cost x₀ᵀP x₀ with (A+BK)ᵀP(A+BK) − P + Q + KᵀRK = 0.
pub fn lqr_cost(
    sys: &LtiSystem,
    k: &Mat,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
) -> Result<f64> {
    let (p, _) = lqr_cost_gramian(sys, k, q, r)?;
    Ok((x0.transpose() * p.as_mat() * x0)[(0, 0)])
}

fn lqr_cost_gramian(
    sys: &LtiSystem,
    k: &Mat,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
) -> Result<(SymmetricMatrix, f64)> {
    let a_cl = &sys.a + &sys.b * k;
    if !is_schur_stable(&a_cl, SCHUR_TOL)? {
        return Err(Error::Domain(format!(
            "closed loop is not Schur stable (rho = {:.6})",
            spectral_radius(&a_cl)?
        )));
    }
    let cost_q = SymmetricMatrix::new(q.as_mat() + k.transpose() * r.as_mat() * k)?;
    let p = solve_discrete_lyapunov(&a_cl, &cost_q)?;
    let residual = (a_cl.transpose() * p.as_mat() * &a_cl - p.as_mat() + cost_q.as_mat()).norm();
    Ok((p, residual))
}

/// Exact squared H2 norm trace(EᵀPE) of the closed loop, with P the
/// observability Gramian of (A+BK, C+DK).
pub fn h2_cost(sys: &LtiSystem, k: &Mat) -> Result<f64> {
    let (p, _) = h2_gramian(sys, k)?;
    let e = sys
        .e
        .as_ref()
        .ok_or_else(|| Error::Spec("H2 cost requires a disturbance matrix E".into()))?;
    Ok((e.transpose() * p.as_mat() * e).trace())
}

fn h2_gramian(sys: &LtiSystem, k: &Mat) -> Result<(SymmetricMatrix, f64)> {
    let (c, d) = sys.output_pair()?;
    let a_cl = &sys.a + &sys.b * k;
    if !is_schur_stable(&a_cl, SCHUR_TOL)? {
        return Err(Error::Domain(format!(
            "closed loop is not Schur stable (rho = {:.6})",
            spectral_radius(&a_cl)?
        )));
    }
    let c_cl = c + d * k;
    let obs = SymmetricMatrix::new(c_cl.transpose() * &c_cl)?;
    let p = solve_discrete_lyapunov(&a_cl, &obs)?;
    let residual = (a_cl.transpose() * p.as_mat() * &a_cl - p.as_mat() + obs.as_mat()).norm();
    Ok((p, residual))
}

/// Truncated impulse-response H2 cost Σ_t trace(T_K(t)ᵀ T_K(t)) with
/// T_K(t) = (C+DK)(A+BK)ᵗE; an independent cross-check for [`h2_cost`].
pub fn h2_cost_impulse_sum(sys: &LtiSystem, k: &Mat, horizon: usize) -> Result<f64> {
    let (c, d) = sys.output_pair()?;
    let e = sys
        .e
        .as_ref()
        .ok_or_else(|| Error::Spec("H2 cost requires a disturbance matrix E".into()))?;
    let a_cl = &sys.a + &sys.b * k;
    let c_cl = c + d * k;
    let mut power = e.clone(); // (A+BK)^t E
    let mut total = 0.0;
    for _ in 0..=horizon {
        let tk = &c_cl * &power;
        total += tk.norm_squared();
        power = &a_cl * power;
    }
    Ok(total)
}

/// Suboptimality check for a known system: stable closed loop and exact cost
/// strictly below γ.
pub fn check_suboptimal_lqr(
    sys: &LtiSystem,
    k: &Mat,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
    gamma: f64,
) -> Result<VerificationReport> {
    let a_cl = &sys.a + &sys.b * k;
    let rho = spectral_radius(&a_cl)?;
    let stable = rho < 1.0 - SCHUR_TOL;
    if !stable {
        return Ok(VerificationReport {
            stable,
            closed_loop_spectral_radius: rho,
            cost: None,
            gamma,
            pass: false,
            cost_minus_gamma: None,
            lyapunov_residual: None,
        });
    }
    let (p, residual) = lqr_cost_gramian(sys, k, q, r)?;
    let cost = (x0.transpose() * p.as_mat() * x0)[(0, 0)];
    let pass = cost < gamma - COST_SLACK * gamma.abs().max(1.0);
    Ok(VerificationReport {
        stable,
        closed_loop_spectral_radius: rho,
        cost: Some(cost),
        gamma,
        pass,
        cost_minus_gamma: Some(cost - gamma),
        lyapunov_residual: Some(residual),
    })
}

/// H2 analogue of [`check_suboptimal_lqr`]: trace(EᵀPE) < γ.
pub fn check_suboptimal_h2(sys: &LtiSystem, k: &Mat, gamma: f64) -> Result<VerificationReport> {
    let a_cl = &sys.a + &sys.b * k;
    let rho = spectral_radius(&a_cl)?;
    let stable = rho < 1.0 - SCHUR_TOL;
    if !stable {
        return Ok(VerificationReport {
            stable,
            closed_loop_spectral_radius: rho,
            cost: None,
            gamma,
            pass: false,
            cost_minus_gamma: None,
            lyapunov_residual: None,
        });
    }
    let (p, residual) = h2_gramian(sys, k)?;
    let e = sys
        .e
        .as_ref()
        .ok_or_else(|| Error::Spec("H2 check requires a disturbance matrix E".into()))?;
    let cost = (e.transpose() * p.as_mat() * e).trace();
    let pass = cost < gamma - COST_SLACK * gamma.abs().max(1.0);
    Ok(VerificationReport {
        stable,
        closed_loop_spectral_radius: rho,
        cost: Some(cost),
        gamma,
        pass,
        cost_minus_gamma: Some(cost - gamma),
        lyapunov_residual: Some(residual),
    })
}

/// Optimal cost x₀ᵀ P★ x₀ from the Riccati solution.
pub fn optimal_lqr_cost(
    sys: &LtiSystem,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
) -> Result<f64> {
    let (p, _) = solve_dare(&sys.a, &sys.b, q, r)?;
    Ok((x0.transpose() * p.as_mat() * x0)[(0, 0)])
}

/// Riccati optimal cost and gain together.
pub fn optimal_lqr(
    sys: &LtiSystem,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
) -> Result<(f64, Mat)> {
    let (p, k) = solve_dare(&sys.a, &sys.b, q, r)?;
    Ok(((x0.transpose() * p.as_mat() * x0)[(0, 0)], k))
}

/// Model-based feasibility of the suboptimal-LQR conditions at γ: a
/// suboptimal gain exists iff the optimal cost is strictly below γ.
pub fn model_based_lqr_feasible(
    sys: &LtiSystem,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
    gamma: f64,
) -> Result<bool> {
    let opt = optimal_lqr_cost(sys, q, r, x0)?;
    Ok(opt < gamma - COST_SLACK * gamma.abs().max(1.0))
}
