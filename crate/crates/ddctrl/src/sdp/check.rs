//! Independent feasibility diagnostics for a candidate point.

use super::problem::SdpProblem;
use crate::error::{Error, Result};
use crate::linalg::{psd_margin, SymmetricMatrix};
use nalgebra::DVector;

/// Margin slack allowed below the required ε when re-checking a point.
pub const MARGIN_SLACK: f64 = 1e-9;
/// Absolute tolerance on scalar equality residuals.
pub const EQUALITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BlockDiagnostic {
    pub label: String,
    pub dim: usize,
    pub lambda_min: f64,
    pub eps: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub blocks: Vec<BlockDiagnostic>,
    pub eq_residuals: Vec<f64>,
    pub max_eq_residual: f64,
    pub feasible: bool,
}

/// Evaluates every block and equality at `x` and applies the solver's
/// acceptance thresholds.
pub fn check_point(problem: &SdpProblem, x: &DVector<f64>) -> Result<CheckReport> {
    if x.len() != problem.layout.dim() {
        return Err(Error::dimension(
            "check_point",
            format!("decision vector of length {}", problem.layout.dim()),
            format!("{}", x.len()),
        ));
    }
    let mut blocks = Vec::with_capacity(problem.inequalities.len());
    for ineq in &problem.inequalities {
        let value = ineq.eval(&problem.layout, x);
        let lambda_min = psd_margin(&SymmetricMatrix::new(value)?);
        blocks.push(BlockDiagnostic {
            label: ineq.label.clone(),
            dim: ineq.dim,
            lambda_min,
            eps: ineq.eps,
            ok: lambda_min >= ineq.eps - MARGIN_SLACK,
        });
    }
    let eq_residuals: Vec<f64> = problem
        .equalities
        .iter()
        .map(|eq| {
            (eq.coeffs.iter().map(|(i, c)| c * x[*i]).sum::<f64>() - eq.rhs).abs()
        })
        .collect();
    let max_eq_residual = eq_residuals.iter().copied().fold(0.0, f64::max);
    let feasible = blocks.iter().all(|b| b.ok) && max_eq_residual <= EQUALITY_SLACK;
    Ok(CheckReport {
        blocks,
        eq_residuals,
        max_eq_residual,
        feasible,
    })
}
