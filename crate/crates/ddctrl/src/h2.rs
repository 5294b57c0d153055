//! Data-driven H2 suboptimal control with measured disturbances:
//! disturbance-aware stabilization, the two informativity conditions
//! (zero-output and identified-E), and certificate re-verification.

use crate::error::{Error, Result};
use crate::linalg::{
    constrained_right_inverse, is_schur_stable, solve_discrete_lyapunov, Mat, SymmetricMatrix,
    SCHUR_TOL,
};
use crate::lqr::{
    build_informativity_lmis, embed, extract_theta_y, gain_from_certificate, place_sym_corner,
    selector, Controller, LqrProblem, SolveDiag, Synthesis,
};
use crate::sdp::{
    self, AffineMatrixInequality, DecisionLayout, EpsPolicy, SdpProblem, SolveStatus,
    SolverSettings, VarKind,
};
use crate::system::{weighted_output_data, DataRecord};
use nalgebra::Cholesky;

/// Performance-output data for the H2 problem; C and D are known.
#[derive(Debug, Clone)]
pub struct H2Spec {
    pub c: Mat,
    pub d: Mat,
    pub gamma: f64,
}

impl H2Spec {
    pub fn new(c: Mat, d: Mat, gamma: f64) -> Result<Self> {
        if c.nrows() != d.nrows() {
            return Err(Error::dimension(
                "H2Spec",
                format!("C and D with equal row counts ({})", c.nrows()),
                format!("{}", d.nrows()),
            ));
        }
        if !(gamma > 0.0) {
            return Err(Error::Spec("gamma must be positive".into()));
        }
        Ok(H2Spec { c, d, gamma })
    }
}

/// Which informativity condition produced the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H2Condition {
    /// Zero-output condition: Z₋ and W₋ both annihilated, H2 cost 0.
    I,
    /// Identified-E condition with the trace bound.
    Ii,
}

impl H2Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            H2Condition::I => "i",
            H2Condition::Ii => "ii",
        }
    }
}

#[derive(Debug, Clone)]
pub struct H2Certificate {
    pub condition: H2Condition,
    pub theta: Mat,
    /// Right inverse of W₋ annihilating [X₋; U₋] (condition ii).
    pub w_dagger: Option<Mat>,
    /// Trace variable of the coupling block (condition ii), d×d symmetric.
    pub y_trace: Option<Mat>,
    /// Solution of the data Lyapunov equation for the extracted loop.
    pub p_from_data: Option<Mat>,
    /// Identified disturbance matrix E = X₊W₋† (condition ii).
    pub e_identified: Option<Mat>,
    /// Certified bound on the H2 cost (0 for condition i, trace(Y) for ii).
    pub trace_bound: f64,
}

/// Outcome of one condition attempt.
#[derive(Debug, Clone)]
pub enum H2Outcome {
    Feasible(Box<Controller>, Box<H2Certificate>),
    Infeasible(SolveDiag),
    Inconclusive(SolveDiag),
}

impl H2Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, H2Outcome::Feasible(_, _))
    }

    pub fn diagnostics(&self) -> Option<&SolveDiag> {
        match self {
            H2Outcome::Feasible(c, _) => Some(&c.diagnostics),
            H2Outcome::Infeasible(d) | H2Outcome::Inconclusive(d) => Some(d),
        }
    }
}

/// Joint outcome of [`synthesize_h2`]: first successful condition wins;
/// otherwise both sub-statuses are reported.
#[derive(Debug, Clone)]
pub enum H2Synthesis {
    Feasible(Box<Controller>, Box<H2Certificate>),
    NotFeasible {
        outcome_i: H2Outcome,
        outcome_ii: H2Outcome,
        /// True when both conditions were certified infeasible (as opposed
        /// to numerically inconclusive).
        conclusive: bool,
    },
}

impl H2Synthesis {
    pub fn controller(&self) -> Option<(&Controller, &H2Certificate)> {
        match self {
            H2Synthesis::Feasible(c, cert) => Some((c, cert)),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, H2Synthesis::Feasible(_, _))
    }
}

fn require_w(data: &DataRecord) -> Result<&Mat> {
    data.w_minus().ok_or_else(|| {
        Error::Spec(
            "H2 synthesis requires measured disturbance data W; for disturbance-free \
             problems use the LQR path"
                .into(),
        )
    })
}

/// Stabilization for all systems explaining (U₋, W₋, X): the stability block
/// with W₋Θ = 0 enforced.
pub fn stabilization_with_disturbance(
    data: &DataRecord,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<Synthesis> {
    let w = require_w(data)?;
    let problem = build_informativity_lmis(data, None, Some(w), eps)?;
    run_stability(&problem, data, settings)
}

fn run_stability(problem: &LqrProblem, data: &DataRecord, settings: &SolverSettings) -> Result<Synthesis> {
    let res = sdp::solve(&problem.sdp, settings)?;
    match res.status {
        SolveStatus::Feasible => {
            let x = res.x.as_ref().expect("feasible point");
            let (theta, y) = extract_theta_y(problem, data, x);
            match gain_from_certificate(data, &theta, &y) {
                Ok(k) => Ok(Synthesis::Feasible(Box::new(Controller {
                    k,
                    theta,
                    y,
                    gamma_bound: None,
                    achieved_gamma: None,
                    eps: problem.eps,
                    diagnostics: SolveDiag::from_result(&res),
                }))),
                Err(e) => {
                    let mut diag = SolveDiag::from_result(&res);
                    diag.status = SolveStatus::Inconclusive;
                    diag.message = format!("certificate extraction failed: {e}");
                    Ok(Synthesis::Inconclusive(diag))
                }
            }
        }
        SolveStatus::Infeasible => Ok(Synthesis::Infeasible(SolveDiag::from_result(&res))),
        SolveStatus::Inconclusive => Ok(Synthesis::Inconclusive(SolveDiag::from_result(&res))),
    }
}

/// Condition (i): some right inverse annihilates both W₋ and Z₋, making the
/// closed-loop output identically zero (H2 cost 0).
pub fn condition_i(
    data: &DataRecord,
    spec: &H2Spec,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<H2Outcome> {
    let w = require_w(data)?;
    let z = weighted_output_data(data, &spec.c, &spec.d)?;
    let mut annihilate = Mat::zeros(w.nrows() + z.nrows(), data.len());
    annihilate
        .view_mut((0, 0), (w.nrows(), data.len()))
        .copy_from(w);
    annihilate
        .view_mut((w.nrows(), 0), (z.nrows(), data.len()))
        .copy_from(&z);
    let problem = build_informativity_lmis(data, None, Some(&annihilate), eps)?;
    match run_stability(&problem, data, settings)? {
        Synthesis::Feasible(mut ctrl) => {
            // closed-loop output C + DK vanishes by construction; verify
            let c_cl = &spec.c + &spec.d * &ctrl.k;
            if c_cl.norm() > 1e-8 {
                let mut diag = ctrl.diagnostics.clone();
                diag.status = SolveStatus::Inconclusive;
                diag.message = format!(
                    "condition (i) point does not zero the output (‖C+DK‖ = {:.3e})",
                    c_cl.norm()
                );
                return Ok(H2Outcome::Inconclusive(diag));
            }
            ctrl.achieved_gamma = Some(0.0);
            let cert = H2Certificate {
                condition: H2Condition::I,
                theta: ctrl.theta.clone(),
                w_dagger: None,
                y_trace: None,
                p_from_data: None,
                e_identified: None,
                trace_bound: 0.0,
            };
            Ok(H2Outcome::Feasible(ctrl, Box::new(cert)))
        }
        Synthesis::Infeasible(d) => Ok(H2Outcome::Infeasible(d)),
        Synthesis::Inconclusive(d) => Ok(H2Outcome::Inconclusive(d)),
    }
}

/// Right inverse of W₋ annihilated by the stacked [X₋; U₋]; when it exists
/// the disturbance matrix is identified as E = X₊W₋†.
pub fn disturbance_right_inverse(data: &DataRecord) -> Result<Option<Mat>> {
    let w = require_w(data)?;
    let n = data.state_dim();
    let m = data.input_dim();
    let t = data.len();
    let mut stacked = Mat::zeros(n + m, t);
    stacked.view_mut((0, 0), (n, t)).copy_from(data.x_minus());
    stacked.view_mut((n, 0), (m, t)).copy_from(data.u_minus());
    constrained_right_inverse(w, &stacked)
}

/// Condition (ii): E is identified from the disturbance data and the data
/// Lyapunov/trace blocks certify the cost bound.
pub fn condition_ii(
    data: &DataRecord,
    spec: &H2Spec,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<H2Outcome> {
    let w = require_w(data)?;
    let n = data.state_dim();
    let d_dim = w.nrows();
    let gamma = spec.gamma;

    let Some(w_dag) = disturbance_right_inverse(data)? else {
        return Ok(H2Outcome::Infeasible(SolveDiag {
            status: SolveStatus::Infeasible,
            iterations: 0,
            margins: Vec::new(),
            worst_margin: f64::NEG_INFINITY,
            objective: None,
            margin_bracket: None,
            message: "no right inverse of W annihilating [X; U]: E is not identifiable \
                      from the data"
                .into(),
        }));
    };
    let e_hat = data.x_plus() * &w_dag; // n×d

    let Some(param) = crate::lqr::theta_param(data.x_minus(), Some(w))? else {
        return Ok(H2Outcome::Infeasible(SolveDiag {
            status: SolveStatus::Infeasible,
            iterations: 0,
            margins: Vec::new(),
            worst_margin: f64::NEG_INFINITY,
            objective: None,
            margin_bracket: None,
            message: "X restricted to ker(W) lacks full row rank: no admissible right \
                      inverse exists"
                .into(),
        }));
    };

    let z = weighted_output_data(data, &spec.c, &spec.d)?;
    let p_rows = z.nrows();
    let kernel_cols = param.kernel_cols();

    let mut layout = DecisionLayout::new();
    let y = layout.add("Y", VarKind::Symmetric(n))?;
    let c_var = if kernel_cols > 0 {
        Some(layout.add("C", VarKind::General(kernel_cols, n))?)
    } else {
        None
    };
    let y_tr = layout.add("Ytrace", VarKind::Symmetric(d_dim))?;
    let mut problem = SdpProblem::new(layout);
    let mut max_eps: f64 = 0.0;

    // stability/output block [Y, ΘᵀX₊ᵀ, ΘᵀZ₋ᵀ; X₊Θ, Y, 0; Z₋Θ, 0, I]
    {
        let dim = 2 * n + p_rows;
        let mut constant = Mat::zeros(dim, dim);
        constant
            .view_mut((2 * n, 2 * n), (p_rows, p_rows))
            .copy_from(&Mat::identity(p_rows, p_rows));
        let e = eps.eps_for(&constant);
        max_eps = max_eps.max(e);
        let mut blk = AffineMatrixInequality::new("stability-output", constant, e)?;
        let xp_by = data.x_plus() * &param.base_y;
        let mut left_y = embed(dim, 0, &(Mat::identity(n, n) * 0.5));
        left_y.view_mut((n, 0), (n, n)).copy_from(&xp_by);
        if p_rows > 0 {
            let z_by = &z * &param.base_y;
            left_y.view_mut((2 * n, 0), (p_rows, n)).copy_from(&z_by);
        }
        blk.place(y, left_y, selector(dim, 0, n));
        place_sym_corner(&mut blk, y, dim, n, n);
        if let Some(cv) = c_var {
            let xp_bc = data.x_plus() * &param.base_c;
            let mut left_c = embed(dim, n, &xp_bc);
            if p_rows > 0 {
                let z_bc = &z * &param.base_c;
                left_c
                    .view_mut((2 * n, 0), (p_rows, kernel_cols))
                    .copy_from(&z_bc);
            }
            blk.place(cv, left_c, selector(dim, 0, n));
        }
        problem.inequalities.push(blk);
    }

    // coupling block [Y_tr, Êᵀ; Ê, Y]
    {
        let dim = d_dim + n;
        let mut constant = Mat::zeros(dim, dim);
        constant
            .view_mut((d_dim, 0), (n, d_dim))
            .copy_from(&e_hat);
        constant
            .view_mut((0, d_dim), (d_dim, n))
            .copy_from(&e_hat.transpose());
        let e = eps.eps_for(&constant);
        max_eps = max_eps.max(e);
        let mut blk = AffineMatrixInequality::new("identified-E coupling", constant, e)?;
        place_sym_corner(&mut blk, y_tr, dim, 0, d_dim);
        place_sym_corner(&mut blk, y, dim, d_dim, n);
        problem.inequalities.push(blk);
    }

    // trace bound γ − trace(Y_tr) ⪰ ε
    {
        let constant = Mat::from_element(1, 1, gamma);
        let e = eps.eps_for(&constant);
        max_eps = max_eps.max(e);
        let mut blk = AffineMatrixInequality::new("trace-bound", constant, e)?;
        for i in 0..d_dim {
            let mut left = Mat::zeros(1, d_dim);
            left[(0, i)] = -0.5;
            let mut right = Mat::zeros(d_dim, 1);
            right[(i, 0)] = 1.0;
            blk.place(y_tr, left, right);
        }
        problem.inequalities.push(blk);
    }

    let res = sdp::solve(&problem, settings)?;
    match res.status {
        SolveStatus::Feasible => {
            let x = res.x.as_ref().expect("feasible point");
            let y_val = problem.layout.matrix_value(y, x);
            let c_val = c_var.map(|cv| problem.layout.matrix_value(cv, x));
            let y_tr_val = problem.layout.matrix_value(y_tr, x);
            let theta = param.theta(&y_val, c_val.as_ref());
            let k = match gain_from_certificate(data, &theta, &y_val) {
                Ok(k) => k,
                Err(e) => {
                    let mut diag = SolveDiag::from_result(&res);
                    diag.status = SolveStatus::Inconclusive;
                    diag.message = format!("certificate extraction failed: {e}");
                    return Ok(H2Outcome::Inconclusive(diag));
                }
            };
            // exact data-consistent H2 cost of the extracted loop
            let chol = Cholesky::new(y_val.clone()).expect("Y ≻ 0 at a feasible point");
            let x_dag = chol.solve(&theta.transpose()).transpose();
            let a_cl = data.x_plus() * &x_dag;
            let z_cl = &z * &x_dag;
            let exact = match solve_discrete_lyapunov(
                &a_cl,
                &SymmetricMatrix::new(z_cl.transpose() * &z_cl)?,
            ) {
                Ok(p) => {
                    let cost = (e_hat.transpose() * p.as_mat() * &e_hat).trace();
                    Some((p.as_mat().clone(), cost))
                }
                Err(_) => None,
            };
            let (p_from_data, exact_cost) = match exact {
                Some((p, c)) => (Some(p), Some(c)),
                None => (None, None),
            };
            let trace_bound = y_tr_val.trace();
            let ctrl = Controller {
                k,
                theta: theta.clone(),
                y: y_val,
                gamma_bound: Some(trace_bound),
                achieved_gamma: exact_cost,
                eps: max_eps,
                diagnostics: SolveDiag::from_result(&res),
            };
            let cert = H2Certificate {
                condition: H2Condition::Ii,
                theta,
                w_dagger: Some(w_dag),
                y_trace: Some(y_tr_val),
                p_from_data,
                e_identified: Some(e_hat),
                trace_bound,
            };
            Ok(H2Outcome::Feasible(Box::new(ctrl), Box::new(cert)))
        }
        SolveStatus::Infeasible => Ok(H2Outcome::Infeasible(SolveDiag::from_result(&res))),
        SolveStatus::Inconclusive => Ok(H2Outcome::Inconclusive(SolveDiag::from_result(&res))),
    }
}

/// Tries condition (i) first (zero output, no E identification needed),
/// then condition (ii).
pub fn synthesize_h2(
    data: &DataRecord,
    spec: &H2Spec,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<H2Synthesis> {
    require_w(data)?;
    if spec.c.ncols() != data.state_dim() || spec.d.ncols() != data.input_dim() {
        return Err(Error::dimension(
            "synthesize_h2",
            format!(
                "C with {} and D with {} columns",
                data.state_dim(),
                data.input_dim()
            ),
            format!("{} and {}", spec.c.ncols(), spec.d.ncols()),
        ));
    }
    let outcome_i = condition_i(data, spec, eps, settings)?;
    if let H2Outcome::Feasible(c, cert) = outcome_i {
        return Ok(H2Synthesis::Feasible(c, cert));
    }
    let outcome_ii = condition_ii(data, spec, eps, settings)?;
    if let H2Outcome::Feasible(c, cert) = outcome_ii {
        return Ok(H2Synthesis::Feasible(c, cert));
    }
    let conclusive = matches!(outcome_i, H2Outcome::Infeasible(_))
        && matches!(outcome_ii, H2Outcome::Infeasible(_));
    Ok(H2Synthesis::NotFeasible {
        outcome_i,
        outcome_ii,
        conclusive,
    })
}

/// Re-checks an H2 certificate in the data Lyapunov form: X₋† = Θ(X₋Θ)⁻¹,
/// the annihilation/right-inverse identities, and either the zero-output
/// property (condition i) or the trace bound through the exact solution of
/// the data Lyapunov equation (condition ii).
pub fn verify_h2_certificate(
    data: &DataRecord,
    cert: &H2Certificate,
    spec: &H2Spec,
    gamma: f64,
) -> Result<bool> {
    let w = require_w(data)?;
    let n = data.state_dim();
    let y = data.x_minus() * &cert.theta;
    let y = (&y + y.transpose()) * 0.5;
    let chol = Cholesky::new(y).ok_or_else(|| {
        Error::Certificate("X₋Θ is not symmetric positive definite".into())
    })?;
    let x_dag = chol.solve(&cert.theta.transpose()).transpose();

    let right_inv = (data.x_minus() * &x_dag - Mat::identity(n, n)).norm();
    if right_inv > 1e-8 * (n as f64).sqrt().max(1.0) {
        return Ok(false);
    }
    if (w * &x_dag).norm() > 1e-8 {
        return Ok(false);
    }
    let a_cl = data.x_plus() * &x_dag;
    if !is_schur_stable(&a_cl, SCHUR_TOL)? {
        return Ok(false);
    }
    let z = weighted_output_data(data, &spec.c, &spec.d)?;
    let z_cl = &z * &x_dag;
    match cert.condition {
        H2Condition::I => Ok(z_cl.norm() <= 1e-8),
        H2Condition::Ii => {
            let Some(w_dag) = &cert.w_dagger else {
                return Err(Error::Certificate(
                    "condition (ii) certificate lacks the W right inverse".into(),
                ));
            };
            // right-inverse identities for W₋†
            if (w * w_dag - Mat::identity(w.nrows(), w.nrows())).norm() > 1e-8 {
                return Ok(false);
            }
            if (data.x_minus() * w_dag).norm() > 1e-8 || (data.u_minus() * w_dag).norm() > 1e-8 {
                return Ok(false);
            }
            // data Lyapunov equation and the trace bound
            let p = solve_discrete_lyapunov(
                &a_cl,
                &SymmetricMatrix::new(z_cl.transpose() * &z_cl)?,
            )?;
            let e_hat = data.x_plus() * w_dag;
            let trace = (e_hat.transpose() * p.as_mat() * &e_hat).trace();
            Ok(trace < gamma * (1.0 + 1e-9) + 1e-12)
        }
    }
}
