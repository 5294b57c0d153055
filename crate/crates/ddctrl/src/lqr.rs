//! Data-driven suboptimal LQR: informativity tests and gain synthesis
//! through dense LMIs in the (Y, Θ) variables, for all systems consistent
//! with the measured data.
//!
//! The synthesis LMIs constrain Y = X₋Θ to be symmetric positive definite,
//! so Θ is reparameterized as Θ = B_y·Y + B_c·C with X₋·B_y = I and
//! X₋·B_c = 0 (and optionally W·B_y = W·B_c = 0 for rows W that must be
//! annihilated). This keeps every LMI block affine in (Y, C) while
//! eliminating the coupling equality exactly. When X₋ (restricted to the
//! annihilated rows) lacks full numerical row rank the parameterization
//! does not exist; the equivalent equality-constrained formulation in Θ is
//! solved instead and the margin search decides the outcome.

use crate::error::{Error, Result};
use crate::linalg::{
    is_schur_stable, kernel_basis, numerical_rank_scaled, psd_factor, psd_margin,
    solve_discrete_lyapunov, Mat, SymmetricMatrix, RANK_REL_TOL, SCHUR_TOL,
};
use crate::sdp::{
    self, AffineMatrixInequality, DecisionLayout, EpsPolicy, LinearEquality, Objective,
    SdpProblem, SolveResult, SolveStatus, SolverSettings, VarId, VarKind,
};
use crate::system::DataRecord;
use nalgebra::{Cholesky, DVector};

/// Cost data for the suboptimal LQR problem.
#[derive(Debug, Clone)]
pub struct LqrSpec {
    pub q: SymmetricMatrix,
    pub r: SymmetricMatrix,
    pub x0: DVector<f64>,
    /// Required cost bound; absent when the bound itself is minimized.
    pub gamma: Option<f64>,
}

impl LqrSpec {
    pub fn new(
        q: SymmetricMatrix,
        r: SymmetricMatrix,
        x0: DVector<f64>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        if q.dim() != x0.len() {
            return Err(Error::dimension(
                "LqrSpec",
                format!("x0 of length {}", q.dim()),
                format!("{}", x0.len()),
            ));
        }
        if psd_margin(&q) < -1e-10 {
            return Err(Error::Spec("Q must be positive semidefinite".into()));
        }
        if psd_margin(&r) <= 0.0 {
            return Err(Error::Spec("R must be positive definite".into()));
        }
        if let Some(g) = gamma {
            if !(g > 0.0) {
                return Err(Error::Spec("gamma must be positive".into()));
            }
        }
        Ok(LqrSpec { q, r, x0, gamma })
    }
}

/// Synthesized gain with its LMI certificate.
#[derive(Debug, Clone)]
pub struct Controller {
    pub k: Mat,
    /// Certificate variables: Θ (T×n) and Y = X₋Θ ≻ 0.
    pub theta: Mat,
    pub y: Mat,
    /// Certificate cost bound x₀ᵀY⁻¹x₀ (absent for pure stabilization).
    pub gamma_bound: Option<f64>,
    /// Exact data-consistent closed-loop cost of `k` (absent for pure
    /// stabilization).
    pub achieved_gamma: Option<f64>,
    /// Largest strictness margin ε used across the blocks.
    pub eps: f64,
    pub diagnostics: SolveDiag,
}

/// Condensed solver diagnostics attached to every synthesis outcome.
#[derive(Debug, Clone)]
pub struct SolveDiag {
    pub status: SolveStatus,
    pub iterations: usize,
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub objective: Option<f64>,
    pub margin_bracket: Option<(f64, f64)>,
    pub message: String,
}

impl SolveDiag {
    pub(crate) fn from_result(res: &SolveResult) -> Self {
        SolveDiag {
            status: res.status,
            iterations: res.iterations,
            margins: res.margins.clone(),
            worst_margin: res.worst_margin,
            objective: res.objective,
            margin_bracket: res.margin_bracket,
            message: res.message.clone(),
        }
    }
}

/// Outcome of a synthesis attempt: the absence of a controller
/// distinguishes certified infeasibility from numerical inconclusiveness.
#[derive(Debug, Clone)]
pub enum Synthesis {
    Feasible(Box<Controller>),
    Infeasible(SolveDiag),
    Inconclusive(SolveDiag),
}

impl Synthesis {
    pub fn controller(&self) -> Option<&Controller> {
        match self {
            Synthesis::Feasible(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Synthesis::Feasible(_))
    }

    pub fn diagnostics(&self) -> SolveDiag {
        match self {
            Synthesis::Feasible(c) => c.diagnostics.clone(),
            Synthesis::Infeasible(d) | Synthesis::Inconclusive(d) => d.clone(),
        }
    }
}

/// Factors the weights as Q = C_wᵀC_w (rank(Q) rows) and R = D_wᵀD_w, so
/// that the stacked output matrices [C_w; 0] and [0; D_w] have zero cross
/// term by construction.
pub fn factor_weights(q: &SymmetricMatrix, r: &SymmetricMatrix) -> Result<(Mat, Mat)> {
    let c_w = psd_factor(q, RANK_REL_TOL)?;
    let chol = Cholesky::new(r.as_mat().clone())
        .ok_or_else(|| Error::Spec("R must be positive definite".into()))?;
    let d_w = chol.l().transpose();
    Ok((c_w, d_w))
}

/// Θ-parameterization Θ = B_y·Y + B_c·C restricted to the rows that must be
/// annihilated; `None` when the restricted X₋ loses row rank.
#[derive(Debug, Clone)]
pub(crate) struct ThetaParam {
    pub base_y: Mat,
    pub base_c: Mat,
}

impl ThetaParam {
    pub fn theta(&self, y: &Mat, c: Option<&Mat>) -> Mat {
        let mut th = &self.base_y * y;
        if let Some(c) = c {
            if c.nrows() > 0 {
                th += &self.base_c * c;
            }
        }
        th
    }

    pub fn kernel_cols(&self) -> usize {
        self.base_c.ncols()
    }
}

pub(crate) fn theta_param(x_minus: &Mat, annihilate: Option<&Mat>) -> Result<Option<ThetaParam>> {
    let t = x_minus.ncols();
    let n = x_minus.nrows();
    let n_w = match annihilate {
        Some(w) if w.nrows() > 0 => kernel_basis(w)?,
        _ => Mat::identity(t, t),
    };
    // The restricted data may be pure round-off (X₋ inside the annihilated
    // row space), so rank is judged on the scale of X₋ itself.
    let x_tilde = x_minus * &n_w; // n × s
    if numerical_rank_scaled(&x_tilde, x_minus.norm())? < n {
        return Ok(None);
    }
    // minimum-norm right inverse of X̃ via SVD (the normal equations would
    // square the conditioning and fail genuinely usable data)
    let (g, _) = crate::linalg::min_norm_solve(&x_tilde, &Mat::identity(n, n))?;
    let base_y = &n_w * g;
    if (x_minus * &base_y - Mat::identity(n, n)).norm() > 1e-9 {
        return Ok(None);
    }
    if let Some(w) = annihilate {
        if (w * &base_y).norm() > 1e-9 * w.norm().max(1.0) {
            return Ok(None);
        }
    }
    let n_tilde = kernel_basis(&x_tilde)?; // s × (s − n)
    let base_c = &n_w * n_tilde;
    Ok(Some(ThetaParam { base_y, base_c }))
}

/// k×r embedding that writes an r-row block at `row_offset`.
pub(crate) fn embed(dim: usize, row_offset: usize, block: &Mat) -> Mat {
    let mut m = Mat::zeros(dim, block.ncols());
    m.view_mut((row_offset, 0), (block.nrows(), block.ncols()))
        .copy_from(block);
    m
}

/// c×k selector reading columns `col_offset..col_offset+c`.
pub(crate) fn selector(dim: usize, col_offset: usize, c: usize) -> Mat {
    let mut m = Mat::zeros(c, dim);
    for i in 0..c {
        m[(i, col_offset + i)] = 1.0;
    }
    m
}

/// Assembled LMI problem plus the variable mapping needed for extraction.
pub struct LqrProblem {
    pub sdp: SdpProblem,
    pub(crate) kind: FormulationKind,
    pub gamma_var: Option<VarId>,
    /// Largest ε across the blocks (reported with results).
    pub eps: f64,
}

pub(crate) enum FormulationKind {
    /// Variables (Y, C); Θ reconstructed through the parameterization.
    Reduced {
        param: ThetaParam,
        y: VarId,
        c: Option<VarId>,
    },
    /// Variables Θ with symmetry equalities (rank-deficient X₋ fallback).
    Generic { theta: VarId },
}

/// Builds the suboptimal-LQR LMIs over the data: the (2n+p)-dimensional
/// stability/cost block, the (n+1)-dimensional initial-condition block, the
/// coupling X₋Θ = Y and, when minimizing, γ as a decision variable with a
/// 1e-12 floor.
pub fn build_lqr_lmis(
    data: &DataRecord,
    spec: &LqrSpec,
    minimize: bool,
    eps: EpsPolicy,
) -> Result<LqrProblem> {
    let n = data.state_dim();
    let t = data.len();
    if spec.q.dim() != n {
        return Err(Error::dimension(
            "build_lqr_lmis",
            format!("Q of dimension {n}"),
            format!("{}", spec.q.dim()),
        ));
    }
    if spec.r.dim() != data.input_dim() {
        return Err(Error::dimension(
            "build_lqr_lmis",
            format!("R of dimension {}", data.input_dim()),
            format!("{}", spec.r.dim()),
        ));
    }
    if !minimize && spec.gamma.is_none() {
        return Err(Error::Spec(
            "fixed-gamma synthesis requires spec.gamma".into(),
        ));
    }
    let (c_w, d_w) = factor_weights(&spec.q, &spec.r)?;
    let z_minus = {
        let upper = &c_w * data.x_minus();
        let lower = &d_w * data.u_minus();
        let mut z = Mat::zeros(upper.nrows() + lower.nrows(), t);
        z.view_mut((0, 0), (upper.nrows(), t)).copy_from(&upper);
        z.view_mut((upper.nrows(), 0), (lower.nrows(), t))
            .copy_from(&lower);
        z
    };
    build_informativity_lmis(data, Some((&z_minus, spec, minimize)), None, eps)
}

/// Shared builder for the LQR blocks and the cost-free stabilization block;
/// `annihilate` adds rows that Θ must annihilate (disturbance data).
pub(crate) fn build_informativity_lmis(
    data: &DataRecord,
    cost: Option<(&Mat, &LqrSpec, bool)>,
    annihilate: Option<&Mat>,
    eps: EpsPolicy,
) -> Result<LqrProblem> {
    let n = data.state_dim();
    let t = data.len();
    let x_minus = data.x_minus();
    let x_plus = data.x_plus();

    match theta_param(x_minus, annihilate)? {
        Some(param) => {
            let kernel_cols = param.kernel_cols();
            let mut layout = DecisionLayout::new();
            let y = layout.add("Y", VarKind::Symmetric(n))?;
            let c_var = if kernel_cols > 0 {
                Some(layout.add("C", VarKind::General(kernel_cols, n))?)
            } else {
                None
            };
            let gamma_var = match cost {
                Some((_, _, true)) => Some(layout.add("gamma", VarKind::Scalar)?),
                _ => None,
            };
            let mut problem = SdpProblem::new(layout);
            let mut max_eps: f64 = 0.0;

            let xp_by = x_plus * &param.base_y; // n×n
            let xp_bc = x_plus * &param.base_c; // n×k

            match cost {
                None => {
                    // stability block [Y, ΘᵀX₊ᵀ; X₊Θ, Y]
                    let dim = 2 * n;
                    let constant = Mat::zeros(dim, dim);
                    let e = eps.eps_for(&constant);
                    max_eps = max_eps.max(e);
                    let mut blk = AffineMatrixInequality::new("stability", constant, e)?;
                    // left factors sharing the column selector are merged so
                    // the Hessian assembly sees fewer placement pairs
                    let mut left_y = embed(dim, 0, &(Mat::identity(n, n) * 0.5));
                    left_y.view_mut((n, 0), (n, n)).copy_from(&xp_by);
                    blk.place(y, left_y, selector(dim, 0, n));
                    place_sym_corner(&mut blk, y, dim, n, n);
                    if let Some(cv) = c_var {
                        blk.place(cv, embed(dim, n, &xp_bc), selector(dim, 0, n));
                    }
                    problem.inequalities.push(blk);
                }
                Some((z_minus, spec, minimize)) => {
                    let p = z_minus.nrows();
                    let dim = 2 * n + p;
                    let z_by = z_minus * &param.base_y; // p×n
                    let z_bc = z_minus * &param.base_c; // p×k
                    let mut constant = Mat::zeros(dim, dim);
                    constant
                        .view_mut((2 * n, 2 * n), (p, p))
                        .copy_from(&Mat::identity(p, p));
                    let e = eps.eps_for(&constant);
                    max_eps = max_eps.max(e);
                    let mut blk = AffineMatrixInequality::new("stability-cost", constant, e)?;
                    let mut left_y = embed(dim, 0, &(Mat::identity(n, n) * 0.5));
                    left_y.view_mut((n, 0), (n, n)).copy_from(&xp_by);
                    if p > 0 {
                        left_y.view_mut((2 * n, 0), (p, n)).copy_from(&z_by);
                    }
                    blk.place(y, left_y, selector(dim, 0, n));
                    place_sym_corner(&mut blk, y, dim, n, n);
                    if let Some(cv) = c_var {
                        let k = param.kernel_cols();
                        let mut left_c = embed(dim, n, &xp_bc);
                        if p > 0 {
                            left_c.view_mut((2 * n, 0), (p, k)).copy_from(&z_bc);
                        }
                        blk.place(cv, left_c, selector(dim, 0, n));
                    }
                    problem.inequalities.push(blk);

                    // initial-condition block [γ, x₀ᵀ; x₀, Y]
                    let dim2 = n + 1;
                    let mut constant2 = Mat::zeros(dim2, dim2);
                    for i in 0..n {
                        constant2[(0, i + 1)] = spec.x0[i];
                        constant2[(i + 1, 0)] = spec.x0[i];
                    }
                    if !minimize {
                        constant2[(0, 0)] = spec.gamma.expect("checked by caller");
                    }
                    let e2 = eps.eps_for(&constant2);
                    max_eps = max_eps.max(e2);
                    let mut blk2 =
                        AffineMatrixInequality::new("initial-condition", constant2, e2)?;
                    place_sym_corner(&mut blk2, y, dim2, 1, n);
                    if let Some(gv) = gamma_var {
                        let mut coeff = Mat::zeros(dim2, dim2);
                        coeff[(0, 0)] = 1.0;
                        blk2.add_scalar(gv, coeff);
                    }
                    problem.inequalities.push(blk2);

                    if let Some(gv) = gamma_var {
                        // γ ≥ 1e-12 keeps the objective bounded below
                        let mut floor = AffineMatrixInequality::new(
                            "gamma-floor",
                            Mat::from_element(1, 1, -1e-12),
                            0.0,
                        )?;
                        floor.add_scalar(gv, Mat::from_element(1, 1, 1.0));
                        problem.inequalities.push(floor);
                        problem.objective = Some(Objective {
                            coeffs: vec![(problem.layout.var(gv).offset, 1.0)],
                        });
                    }
                }
            }
            Ok(LqrProblem {
                sdp: problem,
                kind: FormulationKind::Reduced {
                    param,
                    y,
                    c: c_var,
                },
                gamma_var,
                eps: max_eps,
            })
        }
        None => {
            // X₋ (restricted to the annihilated rows) lacks full row rank:
            // pose the equality-constrained Θ formulation and let the margin
            // search certify the outcome.
            let mut layout = DecisionLayout::new();
            let theta = layout.add("Theta", VarKind::General(t, n))?;
            let gamma_var = match cost {
                Some((_, _, true)) => Some(layout.add("gamma", VarKind::Scalar)?),
                _ => None,
            };
            let mut problem = SdpProblem::new(layout);
            let mut max_eps: f64 = 0.0;

            let half_xm = x_minus * 0.5;
            match cost {
                None => {
                    let dim = 2 * n;
                    let constant = Mat::zeros(dim, dim);
                    let e = eps.eps_for(&constant);
                    max_eps = max_eps.max(e);
                    let mut blk = AffineMatrixInequality::new("stability", constant, e)?;
                    blk.place(theta, embed(dim, 0, &half_xm), selector(dim, 0, n));
                    blk.place(theta, embed(dim, n, &half_xm), selector(dim, n, n));
                    blk.place(theta, embed(dim, n, x_plus), selector(dim, 0, n));
                    problem.inequalities.push(blk);
                }
                Some((z_minus, spec, minimize)) => {
                    let p = z_minus.nrows();
                    let dim = 2 * n + p;
                    let mut constant = Mat::zeros(dim, dim);
                    constant
                        .view_mut((2 * n, 2 * n), (p, p))
                        .copy_from(&Mat::identity(p, p));
                    let e = eps.eps_for(&constant);
                    max_eps = max_eps.max(e);
                    let mut blk = AffineMatrixInequality::new("stability-cost", constant, e)?;
                    blk.place(theta, embed(dim, 0, &half_xm), selector(dim, 0, n));
                    blk.place(theta, embed(dim, n, &half_xm), selector(dim, n, n));
                    blk.place(theta, embed(dim, n, x_plus), selector(dim, 0, n));
                    if p > 0 {
                        blk.place(theta, embed(dim, 2 * n, z_minus), selector(dim, 0, n));
                    }
                    problem.inequalities.push(blk);

                    let dim2 = n + 1;
                    let mut constant2 = Mat::zeros(dim2, dim2);
                    for i in 0..n {
                        constant2[(0, i + 1)] = spec.x0[i];
                        constant2[(i + 1, 0)] = spec.x0[i];
                    }
                    if !minimize {
                        constant2[(0, 0)] = spec.gamma.expect("checked by caller");
                    }
                    let e2 = eps.eps_for(&constant2);
                    max_eps = max_eps.max(e2);
                    let mut blk2 =
                        AffineMatrixInequality::new("initial-condition", constant2, e2)?;
                    blk2.place(theta, embed(dim2, 1, &half_xm), selector(dim2, 1, n));
                    if let Some(gv) = gamma_var {
                        let mut coeff = Mat::zeros(dim2, dim2);
                        coeff[(0, 0)] = 1.0;
                        blk2.add_scalar(gv, coeff);
                        problem.objective = Some(Objective {
                            coeffs: vec![(problem.layout.var(gv).offset, 1.0)],
                        });
                    }
                    problem.inequalities.push(blk2);
                }
            }

            // symmetry equalities skew(X₋Θ) = 0
            for i in 0..n {
                for j in 0..i {
                    let mut coeffs = Vec::with_capacity(2 * t);
                    for tt in 0..t {
                        coeffs.push((
                            problem.layout.entry_index(theta, tt, j),
                            x_minus[(i, tt)],
                        ));
                        coeffs.push((
                            problem.layout.entry_index(theta, tt, i),
                            -x_minus[(j, tt)],
                        ));
                    }
                    problem.equalities.push(LinearEquality { coeffs, rhs: 0.0 });
                }
            }
            // annihilation equalities W·Θ = 0
            if let Some(w) = annihilate {
                for r in 0..w.nrows() {
                    for j in 0..n {
                        let coeffs = (0..t)
                            .map(|tt| (problem.layout.entry_index(theta, tt, j), w[(r, tt)]))
                            .collect();
                        problem.equalities.push(LinearEquality { coeffs, rhs: 0.0 });
                    }
                }
            }
            Ok(LqrProblem {
                sdp: problem,
                kind: FormulationKind::Generic { theta },
                gamma_var,
                eps: max_eps,
            })
        }
    }
}

/// Symmetric corner placement of Y at rows/cols `offset..offset+n`.
pub(crate) fn place_sym_corner(blk: &mut AffineMatrixInequality, y: VarId, dim: usize, offset: usize, n: usize) {
    let half = Mat::identity(n, n) * 0.5;
    blk.place(y, embed(dim, offset, &half), selector(dim, offset, n));
}

/// Extracts (Θ, Y) from a feasible decision vector.
pub(crate) fn extract_theta_y(problem: &LqrProblem, data: &DataRecord, x: &DVector<f64>) -> (Mat, Mat) {
    match &problem.kind {
        FormulationKind::Reduced { param, y, c } => {
            let y_val = problem.sdp.layout.matrix_value(*y, x);
            let c_val = c.map(|cv| problem.sdp.layout.matrix_value(cv, x));
            let theta = param.theta(&y_val, c_val.as_ref());
            (theta, y_val)
        }
        FormulationKind::Generic { theta } => {
            let th = problem.sdp.layout.matrix_value(*theta, x);
            let y = data.x_minus() * &th;
            let y = (&y + y.transpose()) * 0.5;
            (th, y)
        }
    }
}

/// Gain extraction K = U₋Θ(X₋Θ)⁻¹ through an SPD solve.
pub(crate) fn gain_from_certificate(data: &DataRecord, theta: &Mat, y: &Mat) -> Result<Mat> {
    let chol = Cholesky::new(y.clone()).ok_or_else(|| {
        Error::Certificate("certificate Y is not positive definite".into())
    })?;
    let ut = data.u_minus() * theta; // m×n
    Ok(chol.solve(&ut.transpose()).transpose())
}

fn controller_from_solution(
    problem: &LqrProblem,
    data: &DataRecord,
    spec: Option<&LqrSpec>,
    res: &SolveResult,
) -> Result<Controller> {
    let x = res.x.as_ref().expect("feasible result carries a point");
    let (theta, y) = extract_theta_y(problem, data, x);
    let k = gain_from_certificate(data, &theta, &y)?;
    let chol = Cholesky::new(y.clone())
        .ok_or_else(|| Error::Certificate("certificate Y is not positive definite".into()))?;

    let (gamma_bound, achieved_gamma) = match spec {
        None => (None, None),
        Some(spec) => {
            let y_inv_x0 = chol.solve(&Mat::from_column_slice(spec.x0.len(), 1, spec.x0.as_slice()));
            let bound = (spec.x0.transpose() * y_inv_x0)[(0, 0)];
            // exact data-consistent closed-loop cost of K
            let x_dag = chol.solve(&theta.transpose()).transpose(); // Θ Y⁻¹, T×n
            let a_cl = data.x_plus() * &x_dag;
            if !is_schur_stable(&a_cl, SCHUR_TOL)? {
                return Err(Error::Certificate(
                    "extracted closed loop is not Schur stable".into(),
                ));
            }
            let cost_q = SymmetricMatrix::new(
                spec.q.as_mat() + k.transpose() * spec.r.as_mat() * &k,
            )?;
            let p = solve_discrete_lyapunov(&a_cl, &cost_q)?;
            let cost = (spec.x0.transpose() * p.as_mat() * &spec.x0)[(0, 0)];
            (Some(bound), Some(cost))
        }
    };
    Ok(Controller {
        k,
        theta,
        y,
        gamma_bound,
        achieved_gamma,
        eps: problem.eps,
        diagnostics: SolveDiag::from_result(res),
    })
}

fn run(problem: &LqrProblem, data: &DataRecord, spec: Option<&LqrSpec>, settings: &SolverSettings) -> Result<Synthesis> {
    let res = sdp::solve(&problem.sdp, settings)?;
    match res.status {
        SolveStatus::Feasible => match controller_from_solution(problem, data, spec, &res) {
            Ok(c) => Ok(Synthesis::Feasible(Box::new(c))),
            Err(e) => {
                let mut diag = SolveDiag::from_result(&res);
                diag.status = SolveStatus::Inconclusive;
                diag.message = format!("feasible point failed certificate extraction: {e}");
                Ok(Synthesis::Inconclusive(diag))
            }
        },
        SolveStatus::Infeasible => Ok(Synthesis::Infeasible(SolveDiag::from_result(&res))),
        SolveStatus::Inconclusive => Ok(Synthesis::Inconclusive(SolveDiag::from_result(&res))),
    }
}

/// Fixed-γ suboptimal LQR synthesis. Infeasible means the data are not
/// informative for this γ at the strictness margin ε.
pub fn synthesize_lqr(
    data: &DataRecord,
    spec: &LqrSpec,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<Synthesis> {
    if spec.gamma.is_none() {
        return Err(Error::Spec("synthesize_lqr requires spec.gamma".into()));
    }
    let problem = build_lqr_lmis(data, spec, false, eps)?;
    run(&problem, data, Some(spec), settings)
}

/// Minimizes γ subject to the informativity LMIs. The returned controller's
/// `achieved_gamma` is the exact closed-loop cost of the extracted gain;
/// the raw SDP objective is kept in the diagnostics.
pub fn minimize_gamma_lqr(
    data: &DataRecord,
    q: &SymmetricMatrix,
    r: &SymmetricMatrix,
    x0: &DVector<f64>,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<Synthesis> {
    let spec = LqrSpec::new(q.clone(), r.clone(), x0.clone(), None)?;
    let problem = build_lqr_lmis(data, &spec, true, eps)?;
    run(&problem, data, Some(&spec), settings)
}

/// Cost-free stabilization informativity (the stability block alone).
pub fn stabilization_informativity(
    data: &DataRecord,
    eps: EpsPolicy,
    settings: &SolverSettings,
) -> Result<Synthesis> {
    let problem = build_informativity_lmis(data, None, None, eps)?;
    run(&problem, data, None, settings)
}

/// Re-checks a certificate in the original nonlinear form: reconstructs
/// X₋† = ΘY⁻¹ and P = Y⁻¹, then verifies the right-inverse identity, the
/// strict closed-loop Lyapunov inequality and the cost bound.
pub fn verify_lqr_certificate(
    data: &DataRecord,
    controller: &Controller,
    spec: &LqrSpec,
    gamma: f64,
) -> Result<bool> {
    let n = data.state_dim();
    let chol = Cholesky::new(controller.y.clone())
        .ok_or_else(|| Error::Certificate("certificate Y is singular".into()))?;
    let x_dag = chol.solve(&controller.theta.transpose()).transpose(); // ΘY⁻¹
    let p = chol.inverse();

    let right_inv = (data.x_minus() * &x_dag - Mat::identity(n, n)).norm();
    if right_inv > 1e-8 * (n as f64).sqrt().max(1.0) {
        return Ok(false);
    }
    let a_cl = data.x_plus() * &x_dag;
    let k_form = data.u_minus() * &x_dag;
    let lyap = a_cl.transpose() * &p * &a_cl - &p
        + spec.q.as_mat()
        + k_form.transpose() * spec.r.as_mat() * &k_form;
    let lyap = SymmetricMatrix::new(lyap)?;
    // strict inequality: λ_max < 0 up to round-off on the certificate scale
    let lam_max = -psd_margin(&SymmetricMatrix::new(-lyap.as_mat().clone())?);
    if lam_max >= 1e-10 * (1.0 + p.norm()) {
        return Ok(false);
    }
    let cost_bound = (spec.x0.transpose() * &p * &spec.x0)[(0, 0)];
    Ok(cost_bound < gamma * (1.0 + 1e-9) + 1e-12)
}


#[cfg(test)]
mod annihilation_tests {
    use super::*;
    use nalgebra::dmatrix;

    // When X₋ lies inside the annihilated row space, the restricted data are
    // pure round-off; the builder must fall back to the equality form and
    // the margin search must certify infeasibility.
    #[test]
    fn annihilated_x_rows_are_certified_infeasible() {
        let sys = crate::system::LtiSystem::with_all(
            dmatrix![0.5],
            dmatrix![1.0],
            Some(dmatrix![1.0]),
            None,
            None,
        )
        .unwrap();
        let mut rng = crate::rng::SplitMix64::new(19);
        let inputs = Mat::from_fn(1, 6, |_, _| rng.uniform(0.0, 1.0));
        let dist = Mat::from_fn(1, 6, |_, _| rng.uniform(0.0, 1.0));
        let x0 = nalgebra::dvector![rng.uniform(0.0, 1.0)];
        let data = crate::system::simulate(&sys, &x0, &inputs, Some(&dist)).unwrap();
        let mut annihilate = Mat::zeros(3, 6);
        annihilate
            .view_mut((0, 0), (1, 6))
            .copy_from(data.w_minus().unwrap());
        annihilate.view_mut((1, 0), (1, 6)).copy_from(data.x_minus());
        annihilate.view_mut((2, 0), (1, 6)).copy_from(data.u_minus());
        assert!(theta_param(data.x_minus(), Some(&annihilate))
            .unwrap()
            .is_none());
        let problem =
            build_informativity_lmis(&data, None, Some(&annihilate), EpsPolicy::Auto).unwrap();
        assert!(!problem.sdp.equalities.is_empty());
        let res = crate::sdp::solve(&problem.sdp, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, crate::sdp::SolveStatus::Infeasible);
    }
}
