//! Log-det barrier solver for strict-LMI feasibility and linear-objective
//! problems.
//!
//! Feasibility is decided through margin maximization: maximize t subject to
//! every shifted block G_j(x) ⪰ t·I, where G_j already absorbs the required
//! strictness margin ε_j. A positive t certifies an interior point;
//! Infeasible is claimed only when the margin-maximization optimum is
//! certified below zero through the barrier duality gap. Linear objectives
//! are minimized by plain path-following from the phase-1 point; γ-type
//! variables enter the blocks affinely so no bisection is needed.

use super::problem::{AffineMatrixInequality, SdpProblem, VarKind};
use crate::error::Result;
use crate::linalg::Mat;
use nalgebra::{Cholesky, DVector};

#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative duality-measure stopping tolerance.
    pub tol: f64,
    /// Global Newton iteration budget.
    pub max_iter: usize,
    /// Factor by which the barrier parameter shrinks between stages.
    pub mu_shrink: f64,
    /// Newton-decrement² threshold that ends a centering stage.
    pub inner_tol: f64,
    /// Newton iterations allowed within one stage.
    pub max_inner: usize,
    /// Early-exit margin for feasibility searches; `None` derives one from
    /// the block scales.
    pub feas_target: Option<f64>,
    /// Bound |x_i| ≤ box_radius imposed by the barrier. Keeps the margin
    /// search bounded when variables (such as a free cost level) could
    /// otherwise run off; infeasibility claims with an active box are
    /// demoted to Inconclusive.
    pub box_radius: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-9,
            max_iter: 500,
            mu_shrink: 30.0,
            inner_tol: 5e-3,
            max_inner: 30,
            feas_target: None,
            box_radius: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Decision vector (present whenever an interior point was found).
    pub x: Option<DVector<f64>>,
    pub objective: Option<f64>,
    /// Total Newton iterations spent.
    pub iterations: usize,
    /// λ_min of each block F_j at the returned point.
    pub margins: Vec<f64>,
    /// min_j (λ_min F_j − ε_j) at the returned point.
    pub worst_margin: f64,
    pub eq_residual: f64,
    /// Bracket on the margin-maximization optimum (in shifted units, i.e.
    /// relative to the ε_j), when the phase-1 solve ran to convergence.
    pub margin_bracket: Option<(f64, f64)>,
    pub message: String,
}

impl SolveResult {
    fn empty(status: SolveStatus, message: impl Into<String>) -> Self {
        SolveResult {
            status,
            x: None,
            objective: None,
            iterations: 0,
            margins: Vec::new(),
            worst_margin: f64::NEG_INFINITY,
            eq_residual: 0.0,
            margin_bracket: None,
            message: message.into(),
        }
    }
}

/// Scope guard that flushes subnormal floats to zero on x86-64 while the
/// solver runs. Barrier Hessians near degenerate optima are riddled with
/// subnormals, and their microcoded arithmetic dominates the runtime
/// otherwise; the solver's tolerances are far above the subnormal range.
struct DenormalGuard {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

#[cfg(target_arch = "x86_64")]
fn read_mxcsr() -> u32 {
    let mut v: u32 = 0;
    unsafe {
        core::arch::asm!("stmxcsr [{}]", in(reg) &mut v, options(nostack));
    }
    v
}

#[cfg(target_arch = "x86_64")]
fn write_mxcsr(v: u32) {
    unsafe {
        core::arch::asm!("ldmxcsr [{}]", in(reg) &v, options(nostack));
    }
}

impl DenormalGuard {
    fn new() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            let saved = read_mxcsr();
            write_mxcsr(saved | 0x8040); // FTZ | DAZ
            DenormalGuard { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        DenormalGuard {}
    }
}

impl Drop for DenormalGuard {
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        write_mxcsr(self.saved);
    }
}

/// Solves the problem with the given settings.
pub fn solve(problem: &SdpProblem, settings: &SolverSettings) -> Result<SolveResult> {
    let _denormals = DenormalGuard::new();
    problem.validate()?;
    let dim = problem.layout.dim();

    // Equality preprocessing: particular solution + row-orthonormal basis.
    let eq = build_equalities(problem)?;
    let (x_part, eq) = match eq {
        EqOutcome::Inconsistent(residual) => {
            let mut r = SolveResult::empty(
                SolveStatus::Infeasible,
                format!("equality constraints are inconsistent (residual {residual:.3e})"),
            );
            r.eq_residual = residual;
            return Ok(r);
        }
        EqOutcome::Data(xp, eq) => (xp, eq),
    };

    if problem.inequalities.is_empty() {
        let obj = problem
            .objective
            .as_ref()
            .map(|o| o.dense(dim).dot(&x_part));
        let mut r = SolveResult::empty(SolveStatus::Feasible, "no matrix inequalities");
        r.worst_margin = f64::INFINITY;
        r.eq_residual = eq_residual(problem, &x_part);
        r.objective = obj;
        r.x = Some(x_part);
        return Ok(r);
    }

    // Objective scalars that appear in every block through a PSD coefficient
    // can always be raised to satisfy their blocks; excluding those blocks
    // from the margin search keeps it bounded (a free cost level would
    // otherwise be pushed to infinity by the log-det barrier).
    let deferred_vars = deferrable_scalars(problem);
    let deferred_offsets: Vec<usize> = deferred_vars
        .iter()
        .map(|&v| problem.layout.var(v).offset)
        .collect();
    let is_deferred_block = |b: &AffineMatrixInequality| {
        b.scalar_terms.iter().any(|t| deferred_vars.contains(&t.var))
    };
    // Shifted blocks G_j = F_j − ε_j·I in an extended problem with the
    // margin variable t added to every non-deferred block.
    let mut ext = problem.clone();
    ext.objective = None;
    let all_deferred = ext.inequalities.iter().all(|b| is_deferred_block(b));
    if !all_deferred {
        ext.inequalities.retain(|b| !is_deferred_block(b));
    }
    for ineq in &mut ext.inequalities {
        ineq.constant -= Mat::identity(ineq.dim, ineq.dim) * ineq.eps;
        ineq.eps = 0.0;
    }
    let t_id = ext.layout.add("__margin_t", VarKind::Scalar)?;
    let t_index = ext.layout.var(t_id).offset;
    for ineq in &mut ext.inequalities {
        ineq.add_scalar(t_id, -Mat::identity(ineq.dim, ineq.dim));
    }

    let nu: f64 = ext.inequalities.iter().map(|b| b.dim as f64).sum::<f64>()
        + 2.0 * ext.layout.dim() as f64;
    let feas_target = settings.feas_target.unwrap_or_else(|| {
        let scale = ext
            .inequalities
            .iter()
            .map(|b| b.constant.norm())
            .fold(0.0, f64::max);
        let eps_scale = problem
            .inequalities
            .iter()
            .map(|b| b.eps)
            .fold(0.0, f64::max);
        (1e-5 * (1.0 + scale)).max(50.0 * eps_scale)
    });

    // Initial extended point: particular solution with t below all margins.
    let mut x0 = DVector::zeros(dim + 1);
    x0.rows_mut(0, dim).copy_from(&x_part);
    let margins0 = block_min_eigs(&ext, &x0, Some(t_index));
    let worst0 = margins0.iter().copied().fold(f64::INFINITY, f64::min);
    if !worst0.is_finite() {
        return Ok(SolveResult::empty(
            SolveStatus::Inconclusive,
            "could not evaluate block spectra at the initial point",
        ));
    }
    x0[t_index] = (worst0 - 0.1f64.max(0.1 * worst0.abs())).max(-0.9 * settings.box_radius);

    let mut c1 = DVector::zeros(dim + 1);
    c1[t_index] = -1.0; // maximize t
    // widen the equality matrix with a zero column for the margin variable
    let eq_ext = eq.as_ref().map(|data| {
        let mut e = Mat::zeros(data.e.nrows(), dim + 1);
        e.view_mut((0, 0), (data.e.nrows(), dim)).copy_from(&data.e);
        EqData { e, b: data.b.clone() }
    });
    let eps_scale = problem
        .inequalities
        .iter()
        .map(|b| b.eps)
        .fold(f64::INFINITY, f64::min)
        .max(1e-12);
    let mut work = Work::new(&ext, eq_ext.as_ref(), settings);
    let band = (0.25 * eps_scale).max(4.0 * settings.tol);
    // strictness suffices for feasibility: exit on any strictly interior
    // point, well before the margin search tops out
    let margin_exit = feas_target.min(
        (4.0 * problem
            .inequalities
            .iter()
            .map(|b| b.eps)
            .fold(0.0, f64::max))
        .max(1e-7 * (1.0 + feas_target)),
    );
    let phase1 =
        work.barrier_minimize(&c1, x0, Some((t_index, feas_target, margin_exit)), Some(band));

    let t_hat = phase1.x[t_index];
    // the achieved margin can run ahead of the slack variable t
    let m_hat = work.true_margin(&phase1.x, t_index).max(t_hat);
    let gap1 = nu * phase1.mu * 2.0;
    let bracket = phase1.converged.then_some((m_hat, t_hat + gap1));

    let mut feasible_point = m_hat > 0.0;
    let mut iterations = phase1.newton_steps;
    let mut x_lifted = phase1.x.rows(0, dim).into_owned();

    // Lift the deferred scalars: smallest ladder value whose blocks clear
    // the margin target, with mild headroom so phase 2 starts interior but
    // close to the eventual optimum.
    if feasible_point && !deferred_offsets.is_empty() {
        let shifted = problem_shifted(problem);
        let lift_target = (m_hat.min(feas_target) * 0.25).max(1e-12);
        let worst_at = |x: &DVector<f64>| -> f64 {
            shifted
                .inequalities
                .iter()
                .filter(|b| is_deferred_block(b))
                .map(|b| {
                    crate::linalg::psd_margin(
                        &crate::linalg::SymmetricMatrix::new(b.eval(&shifted.layout, x))
                            .expect("square block"),
                    )
                })
                .fold(f64::INFINITY, f64::min)
        };
        let base: Vec<f64> = deferred_offsets.iter().map(|&o| x_lifted[o].max(1.0)).collect();
        let set = |x: &mut DVector<f64>, scale: f64| {
            for (&off, &b) in deferred_offsets.iter().zip(&base) {
                x[off] = b * scale;
            }
        };
        let mut hi = 1.0f64;
        let mut lifted_ok = false;
        for _ in 0..60 {
            set(&mut x_lifted, hi);
            if worst_at(&x_lifted) > lift_target {
                lifted_ok = true;
                break;
            }
            hi *= 2.0;
            if deferred_offsets
                .iter()
                .zip(&base)
                .any(|(_, &b)| b * hi > 0.5 * settings.box_radius)
            {
                break;
            }
        }
        if lifted_ok && hi > 1.0 {
            // shave the ladder overshoot back down
            let mut lo = hi / 2.0;
            for _ in 0..8 {
                let mid = 0.5 * (lo + hi);
                set(&mut x_lifted, mid);
                if worst_at(&x_lifted) > lift_target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            set(&mut x_lifted, hi * 1.5);
        }
        if !lifted_ok {
            feasible_point = false;
        }
    }

    if !feasible_point {
        let box_active = phase1.x.amax() >= 0.99 * settings.box_radius;
        let status = if phase1.converged && t_hat + gap1 < 0.0 && m_hat <= 0.0 && !box_active {
            SolveStatus::Infeasible
        } else {
            SolveStatus::Inconclusive
        };
        let msg = if status == SolveStatus::Infeasible {
            let scope = if deferred_offsets.is_empty() {
                ""
            } else {
                " (certified on the blocks not containing the cost level)"
            };
            format!(
                "margin maximization optimum certified below the strictness margin \
                 (best margin = {m_hat:.3e}, upper bound {:.3e}){scope}",
                t_hat + gap1
            )
        } else if phase1.resolution_plateau {
            format!(
                "margin settled at {m_hat:.3e}, within the strictness resolution band; \
                 not decidable at this epsilon"
            )
        } else if phase1.exhausted {
            "iteration budget exhausted before feasibility could be decided".into()
        } else {
            format!("margin maximization stalled at margin = {m_hat:.3e}")
        };
        let mut r = SolveResult::empty(status, msg);
        r.iterations = iterations;
        r.margin_bracket = bracket;
        return Ok(r);
    }

    // A strictly feasible point of the original problem.
    let x_feas = x_lifted;

    let (x_final, objective, status, message) = match &problem.objective {
        None => {
            let msg = if phase1.early_exit {
                "feasible point found (margin search exited early)".to_string()
            } else {
                format!("feasible; margin-maximization value {t_hat:.3e}")
            };
            (x_feas, None, SolveStatus::Feasible, msg)
        }
        Some(obj) => {
            let c = obj.dense(dim);
            let mut work2 = Work::new(problem_shifted(problem), eq.as_ref(), settings);
            work2.newton_budget = settings.max_iter.saturating_sub(iterations).max(20);
            let phase2 = work2.barrier_minimize(&c, x_feas, None, None);
            iterations += phase2.newton_steps;
            let obj_val = c.dot(&phase2.x);
            let status = if phase2.converged {
                SolveStatus::Feasible
            } else if phase2.exhausted {
                SolveStatus::Inconclusive
            } else {
                SolveStatus::Feasible
            };
            let msg = if phase2.converged {
                "objective minimized to tolerance".to_string()
            } else if phase2.exhausted {
                "iteration budget exhausted during objective descent".to_string()
            } else {
                "objective descent stalled; returning best interior point".to_string()
            };
            (phase2.x, Some(obj_val), status, msg)
        }
    };

    let margins = final_margins(problem, &x_final);
    let worst = problem
        .inequalities
        .iter()
        .zip(&margins)
        .map(|(b, m)| m - b.eps)
        .fold(f64::INFINITY, f64::min);
    Ok(SolveResult {
        status,
        objective,
        eq_residual: eq_residual(problem, &x_final),
        x: Some(x_final),
        iterations,
        margins,
        worst_margin: worst,
        margin_bracket: bracket,
        message,
    })
}

/// Scalar objective variables with positive cost whose every appearance is
/// through a PSD coefficient; raising them can only help feasibility.
fn deferrable_scalars(problem: &SdpProblem) -> Vec<super::problem::VarId> {
    let Some(obj) = &problem.objective else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (id, def) in problem.layout.vars().iter().enumerate() {
        if def.kind != VarKind::Scalar {
            continue;
        }
        let in_obj = obj
            .coeffs
            .iter()
            .any(|(i, c)| *i == def.offset && *c > 0.0);
        if !in_obj {
            continue;
        }
        if problem
            .inequalities
            .iter()
            .any(|b| b.mat_terms.iter().any(|t| t.var == id))
        {
            continue;
        }
        let mut appears = false;
        let mut all_psd = true;
        for b in &problem.inequalities {
            for st in &b.scalar_terms {
                if st.var == id {
                    appears = true;
                    let margin = crate::linalg::psd_margin(
                        &crate::linalg::SymmetricMatrix::new(st.coeff.clone())
                            .expect("square coefficient"),
                    );
                    if margin < -1e-12 * st.coeff.norm().max(1.0) {
                        all_psd = false;
                    }
                }
            }
        }
        if appears && all_psd {
            out.push(id);
        }
    }
    out
}

/// Problem with the ε margins folded into the constants (for phase 2 the
/// shifted blocks must stay ≻ 0).
fn problem_shifted(problem: &SdpProblem) -> SdpProblem {
    let mut p = problem.clone();
    for ineq in &mut p.inequalities {
        ineq.constant -= Mat::identity(ineq.dim, ineq.dim) * ineq.eps;
        ineq.eps = 0.0;
    }
    p
}

enum EqOutcome {
    Inconsistent(f64),
    Data(DVector<f64>, Option<EqData>),
}

struct EqData {
    /// Row-orthonormal equality matrix.
    e: Mat,
    /// Right-hand side in the compressed basis (e·x_particular).
    b: DVector<f64>,
}

impl EqData {
    /// Minimum-norm correction back onto the equality manifold.
    fn project(&self, x: &mut DVector<f64>) {
        let r = &self.b - &self.e * &*x;
        *x += self.e.transpose() * r;
    }
}

fn build_equalities(problem: &SdpProblem) -> Result<EqOutcome> {
    let dim = problem.layout.dim();
    let rows = problem.equalities.len();
    if rows == 0 {
        return Ok(EqOutcome::Data(DVector::zeros(dim), None));
    }
    let mut e0 = Mat::zeros(rows, dim);
    let mut b = Mat::zeros(rows, 1);
    for (r, eq) in problem.equalities.iter().enumerate() {
        for (i, v) in &eq.coeffs {
            e0[(r, *i)] += v;
        }
        b[(r, 0)] = eq.rhs;
    }
    let (xp, residual) = crate::linalg::min_norm_solve(&e0, &b)?;
    if residual > 1e-9 * b.norm().max(1.0) {
        return Ok(EqOutcome::Inconsistent(residual));
    }
    // Row-orthonormal compression of E through the kernel complement.
    let kernel = crate::linalg::kernel_basis(&e0)?; // dim × (dim − r)
    let rank = dim - kernel.ncols();
    let xp = DVector::from_column_slice(xp.as_slice());
    if rank == 0 {
        return Ok(EqOutcome::Data(xp, None));
    }
    // Orthonormal row space of E = orthonormal complement of its kernel.
    let row_space = crate::linalg::kernel_basis(&kernel.transpose())?; // dim × rank
    let e = row_space.transpose();
    let b = &e * &xp;
    Ok(EqOutcome::Data(xp, Some(EqData { e, b })))
}

fn eq_residual(problem: &SdpProblem, x: &DVector<f64>) -> f64 {
    problem
        .equalities
        .iter()
        .map(|eq| {
            let v: f64 = eq.coeffs.iter().map(|(i, c)| c * x[*i]).sum::<f64>() - eq.rhs;
            v.abs()
        })
        .fold(0.0, f64::max)
}

/// λ_min of every block of `p` at x (skipping the margin shift variable when
/// present, which must be zero in x).
fn block_min_eigs(p: &SdpProblem, x: &DVector<f64>, _t_index: Option<usize>) -> Vec<f64> {
    p.inequalities
        .iter()
        .map(|b| {
            let s = b.eval(&p.layout, x);
            crate::linalg::psd_margin(&crate::linalg::SymmetricMatrix::new(s).unwrap())
        })
        .collect()
}

fn final_margins(problem: &SdpProblem, x: &DVector<f64>) -> Vec<f64> {
    problem
        .inequalities
        .iter()
        .map(|b| {
            let s = b.eval(&problem.layout, x);
            crate::linalg::psd_margin(&crate::linalg::SymmetricMatrix::new(s).unwrap())
        })
        .collect()
}

struct PhaseOutcome {
    x: DVector<f64>,
    mu: f64,
    newton_steps: usize,
    converged: bool,
    exhausted: bool,
    early_exit: bool,
    /// Margin search settled inside the strictness-resolution band without
    /// a decidable sign.
    resolution_plateau: bool,
}

/// Per-solve workspace: owns the (already shifted) problem view and the
/// assembly buffers.
struct Work<'a> {
    problem: ProblemRef<'a>,
    eq: Option<&'a EqData>,
    settings: &'a SolverSettings,
    newton_budget: usize,
    nu: f64,
    nu_blocks: f64,
    /// Warm start for the Tikhonov ladder (relative to the scaled system).
    lam_hint: std::cell::Cell<f64>,
}

enum ProblemRef<'a> {
    Borrowed(&'a SdpProblem),
    Owned(SdpProblem),
}

impl ProblemRef<'_> {
    fn get(&self) -> &SdpProblem {
        match self {
            ProblemRef::Borrowed(p) => p,
            ProblemRef::Owned(p) => p,
        }
    }
}

impl<'a> Work<'a> {
    fn new(problem: impl Into<ProblemRef<'a>>, eq: Option<&'a EqData>, settings: &'a SolverSettings) -> Self {
        let problem = problem.into();
        let nu_blocks: f64 = problem.get().inequalities.iter().map(|b| b.dim as f64).sum();
        // the box contributes two one-dimensional barrier terms per variable
        let nu = nu_blocks + 2.0 * problem.get().layout.dim() as f64;
        Work {
            problem,
            eq,
            settings,
            newton_budget: settings.max_iter,
            nu,
            nu_blocks,
            lam_hint: std::cell::Cell::new(0.0),
        }
    }

    /// Path-following minimization of cᵀx over the interior of the blocks,
    /// starting from a strictly feasible x0. `early` = (margin-variable
    /// index, slack threshold, true-margin threshold): the search stops as
    /// soon as either the slack variable or the actual worst block margin
    /// clears its threshold.
    fn barrier_minimize(
        &mut self,
        c: &DVector<f64>,
        x0: DVector<f64>,
        early: Option<(usize, f64, f64)>,
        resolution_band: Option<f64>,
    ) -> PhaseOutcome {
        let problem = self.problem.get();
        let trace = std::env::var("DDCTRL_SDP_TRACE").is_ok();
        let mut t_assemble = 0.0f64;
        let mut t_newton = 0.0f64;
        let mut t_search = 0.0f64;
        let phase_start = std::time::Instant::now();
        let mut x = x0;
        if let Some(eq) = self.eq {
            eq.project(&mut x);
        }
        let mut steps = 0usize;
        let obj0 = c.dot(&x).abs().max(1.0);
        let mut mu = obj0 / self.nu_blocks.max(1.0);
        let mut converged = false;
        let mut exhausted = false;
        let mut early_exit = false;
        let mut resolution_plateau = false;

        'stages: loop {
            let mut centered = false;
            for _ in 0..self.settings.max_inner {
                if let Some((idx, t_thr, m_thr)) = early {
                    if x[idx] > t_thr || self.true_margin(&x, idx) > m_thr {
                        early_exit = true;
                        break 'stages;
                    }
                }
                if steps >= self.newton_budget {
                    exhausted = true;
                    break 'stages;
                }
                let t0 = std::time::Instant::now();
                let Some((g_bar, h)) = assemble(problem, &x, self.settings.box_radius) else {
                    break 'stages;
                };
                t_assemble += t0.elapsed().as_secs_f64();
                let g = &g_bar + c / mu;
                let t1 = std::time::Instant::now();
                let Some(dx) = self.newton_direction(&h, &g) else {
                    break 'stages;
                };
                t_newton += t1.elapsed().as_secs_f64();
                let dec2 = (-g.dot(&dx)).max(0.0);
                steps += 1;
                // loose centering far from the target gap, tight near it
                let stage_tol = if self.nu * mu
                    <= self.settings.tol * c.dot(&x).abs().max(1.0) * self.settings.mu_shrink
                {
                    self.settings.inner_tol
                } else {
                    0.05
                };
                if dec2 * 0.5 <= stage_tol {
                    centered = true;
                    break;
                }
                let t2 = std::time::Instant::now();
                let f0 = match eval_merit(problem, &x, c, mu, self.settings.box_radius) {
                    Some(f) => f,
                    None => break 'stages,
                };
                let gdx = g.dot(&dx);
                // near the feasibility exit threshold there is no point in
                // overshooting an unbounded margin objective
                let mut alpha0 = 1.0;
                if let Some((idx, t_thr, _)) = early {
                    if dx[idx] > 0.0 {
                        let cap = t_thr + 4.0 * (1.0 + t_thr.abs());
                        if x[idx] + dx[idx] > cap {
                            alpha0 = ((cap - x[idx]) / dx[idx]).clamp(1e-12, 1.0);
                        }
                    }
                }
                match line_search(
                    problem,
                    &x,
                    &dx,
                    f0,
                    gdx,
                    c,
                    mu,
                    alpha0,
                    self.eq,
                    self.settings.box_radius,
                ) {
                    Some(xn) => x = xn,
                    None => break 'stages,
                }
                t_search += t2.elapsed().as_secs_f64();
            }
            let scale = c.dot(&x).abs().max(1.0);
            if self.nu * mu <= self.settings.tol * scale {
                converged = centered;
                break;
            }
            if resolution_band.is_some() && centered {
                let obj = c.dot(&x); // −t̂
                // the bracket (t̂, t̂ + 2νμ) is already below zero: certified
                if obj > 0.0 && 2.0 * self.nu * mu < obj {
                    converged = true;
                    break;
                }
            }
            // a margin optimum bracketed inside the resolution band cannot be
            // decided either way; stop refining
            if let Some(band) = resolution_band {
                let obj = c.dot(&x);
                if obj > 0.0 && obj <= band && self.nu * mu <= 0.25 * band {
                    resolution_plateau = true;
                    break;
                }
            }
            if !centered && steps >= self.newton_budget {
                exhausted = true;
                break;
            }
            if trace {
                eprintln!(
                    "  stage done: mu={mu:.3e} steps={steps} obj={:.6e}",
                    c.dot(&x)
                );
            }
            mu /= self.settings.mu_shrink;
        }
        if trace {
            eprintln!(
                "phase: steps={steps} total={:.2}s assemble={t_assemble:.2}s newton={t_newton:.2}s search={t_search:.2}s",
                phase_start.elapsed().as_secs_f64()
            );
        }
        PhaseOutcome {
            x,
            mu,
            newton_steps: steps,
            converged,
            exhausted,
            early_exit,
            resolution_plateau,
        }
    }

    /// Smallest actual block margin min_j λ_min(G_j) at x, recovered from
    /// the t-shifted blocks (used for early feasibility exits).
    fn true_margin(&self, x: &DVector<f64>, t_index: usize) -> f64 {
        let problem = self.problem.get();
        let t = x[t_index];
        problem
            .inequalities
            .iter()
            .map(|b| {
                let val = b.eval(&problem.layout, x);
                crate::linalg::SymmetricMatrix::new(val)
                    .map(|m| crate::linalg::psd_margin(&m))
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .fold(f64::INFINITY, f64::min)
            + t
    }

    /// Solves H dx = -g (projected onto the equality manifold when present).
    /// The system is Jacobi-scaled before factoring, with an adaptive
    /// Tikhonov ladder warm-started from the previous step.
    fn newton_direction(&self, h: &Mat, g: &DVector<f64>) -> Option<DVector<f64>> {
        let n = h.nrows();
        if h.iter().any(|v| !v.is_finite()) {
            return None;
        }
        // symmetric diagonal scaling: Hs = D⁻¹ H D⁻¹ with D = sqrt(diag H)
        let mut d = vec![0.0f64; n];
        for i in 0..n {
            d[i] = h[(i, i)].abs().sqrt().max(1e-150);
        }
        let mut hs = h.clone();
        for j in 0..n {
            for i in 0..n {
                let v = hs[(i, j)] / (d[i] * d[j]);
                hs[(i, j)] = if v.abs() < 1e-180 { 0.0 } else { v };
            }
        }
        let mut lam = self.lam_hint.get();
        if lam < 1e-14 {
            lam = 0.0;
        }
        for _ in 0..14 {
            let mut hr = hs.clone();
            if lam > 0.0 {
                for i in 0..n {
                    hr[(i, i)] += lam;
                }
            }
            if let Some(chol) = Cholesky::new(hr) {
                // keep most of the successful damping as next step's hint
                self.lam_hint.set(lam * 0.3);
                // scaled solve: dx = D⁻¹ · (Hs + λ)⁻¹ · D⁻¹(-g), equalities
                // handled in the scaled coordinates as well
                return Some(self.solve_with_factor_scaled(&chol, g, &d));
            }
            lam = if lam == 0.0 { 1e-13 } else { lam * 30.0 };
            if lam > 1e3 {
                break;
            }
        }
        None
    }

    fn solve_with_factor_scaled(
        &self,
        chol: &Cholesky<f64, nalgebra::Dyn>,
        g: &DVector<f64>,
        d: &[f64],
    ) -> DVector<f64> {
        let n = g.len();
        let gs = DVector::from_fn(n, |i, _| g[i] / d[i]);
        match self.eq {
            None => {
                let y = chol.solve(&(-&gs));
                DVector::from_fn(n, |i, _| y[i] / d[i])
            }
            Some(eq) => {
                // equality rows in scaled coordinates: (E D⁻¹) xs = b
                let e = &eq.e;
                let rows = e.nrows();
                let base = chol.solve(&(-&gs));
                let mut es = Mat::zeros(rows, n);
                for r in 0..rows {
                    for i in 0..n {
                        es[(r, i)] = e[(r, i)] / d[i];
                    }
                }
                let hinv_et = chol.solve(&es.transpose());
                let gram = &es * &hinv_et;
                let rhs = &es * &base;
                let xs = match Cholesky::new(gram) {
                    Some(ch) => {
                        let lam = ch.solve(&rhs);
                        &base - &hinv_et * lam
                    }
                    None => base,
                };
                DVector::from_fn(n, |i, _| xs[i] / d[i])
            }
        }
    }
}
impl<'a> From<&'a SdpProblem> for ProblemRef<'a> {
    fn from(p: &'a SdpProblem) -> Self {
        ProblemRef::Borrowed(p)
    }
}

impl<'a> From<SdpProblem> for ProblemRef<'a> {
    fn from(p: SdpProblem) -> Self {
        ProblemRef::Owned(p)
    }
}

/// cᵀx/μ + Σ −ln det S_j + box barrier; None when any block or the box
/// bound is violated.
fn eval_merit(
    problem: &SdpProblem,
    x: &DVector<f64>,
    c: &DVector<f64>,
    mu: f64,
    box_radius: f64,
) -> Option<f64> {
    let mut f = c.dot(x) / mu;
    for v in x.iter() {
        let lo = box_radius + v;
        let hi = box_radius - v;
        if lo <= 0.0 || hi <= 0.0 {
            return None;
        }
        f -= lo.ln() + hi.ln();
    }
    for b in &problem.inequalities {
        let s = b.eval(&problem.layout, x);
        let chol = Cholesky::new(s)?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for i in 0..b.dim {
            let d = l[(i, i)];
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            logdet += d.ln();
        }
        f -= 2.0 * logdet;
    }
    f.is_finite().then_some(f)
}

/// Per-step bound on barrier growth; stops descent steps from diving deep
/// into a boundary region that the objective term makes look attractive.
const BARRIER_GROWTH_CAP: f64 = 5.0;

#[allow(clippy::too_many_arguments)]
fn line_search(
    problem: &SdpProblem,
    x: &DVector<f64>,
    dx: &DVector<f64>,
    f0: f64,
    gdx: f64,
    c: &DVector<f64>,
    mu: f64,
    alpha0: f64,
    eq: Option<&EqData>,
    box_radius: f64,
) -> Option<DVector<f64>> {
    let phi0 = f0 - c.dot(x) / mu;
    for capped in [true, false] {
        let mut alpha = alpha0;
        for _ in 0..60 {
            let mut xt = x + dx * alpha;
            if let Some(eq) = eq {
                eq.project(&mut xt);
            }
            if let Some(f) = eval_merit(problem, &xt, c, mu, box_radius) {
                let phi_ok = !capped || f - c.dot(&xt) / mu <= phi0 + BARRIER_GROWTH_CAP;
                if phi_ok && f <= f0 + 0.25 * alpha * gdx {
                    return Some(xt);
                }
            }
            alpha *= 0.5;
        }
    }
    None
}

/// Flat decision-vector index of entry (i, j) of a variable, as a lookup
/// table addressed by j·rows + i. Symmetric blocks map (i, j) and (j, i) to
/// the same packed coordinate, which realizes the direction e_i e_jᵀ + e_j e_iᵀ
/// when both orders are visited.
fn index_table(offset: usize, kind: VarKind) -> Vec<usize> {
    match kind {
        VarKind::Scalar => vec![offset],
        VarKind::General(r, c) => {
            let mut t = vec![0usize; r * c];
            for j in 0..c {
                for i in 0..r {
                    t[j * r + i] = offset + j * r + i;
                }
            }
            t
        }
        VarKind::Symmetric(sdim) => {
            let mut t = vec![0usize; sdim * sdim];
            for j in 0..sdim {
                for i in 0..sdim {
                    let (a, b) = if i >= j { (i, j) } else { (j, i) };
                    t[j * sdim + i] = offset + b * (2 * sdim - b + 1) / 2 + (a - b);
                }
            }
            t
        }
    }
}

/// Gradient and Hessian of the barrier Σ_j −ln det S_j(x) plus the box
/// terms; None when any block leaves the cone.
fn assemble(problem: &SdpProblem, x: &DVector<f64>, box_radius: f64) -> Option<(DVector<f64>, Mat)> {
    let layout = &problem.layout;
    let dim = layout.dim();
    let mut grad: DVector<f64> = DVector::zeros(dim);
    let mut hess = Mat::zeros(dim, dim);

    // box barrier: −ln(R−x_i) − ln(R+x_i)
    for i in 0..dim {
        let hi = box_radius - x[i];
        let lo = box_radius + x[i];
        if hi <= 0.0 || lo <= 0.0 {
            return None;
        }
        grad[i] += 1.0 / hi - 1.0 / lo;
        hess[(i, i)] += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }

    for block in &problem.inequalities {
        let s = block.eval(layout, x);
        let chol = Cholesky::new(s)?;
        let sinv = chol.inverse();

        // per-term precomputations
        let n_mat = block.mat_terms.len();
        let mut sinv_l = Vec::with_capacity(n_mat);
        let mut sinv_rt = Vec::with_capacity(n_mat);
        for t in &block.mat_terms {
            sinv_l.push(&sinv * &t.left);
            sinv_rt.push(&sinv * t.right.transpose());
        }
        let mut w_mats = Vec::with_capacity(block.scalar_terms.len());
        for t in &block.scalar_terms {
            w_mats.push(&sinv * &t.coeff * &sinv);
        }
        let tables: Vec<Vec<usize>> = block
            .mat_terms
            .iter()
            .map(|t| {
                let def = layout.var(t.var);
                index_table(def.offset, def.kind)
            })
            .collect();

        // gradient of the matrix terms: −2·(LᵀS⁻¹Rᵀ)[i,j] onto coordinate (i,j)
        for (ti, t) in block.mat_terms.iter().enumerate() {
            let gv = t.left.transpose() * &sinv_rt[ti] * 2.0; // r×c
            let (r, c) = layout.var(t.var).kind.shape();
            let lut = &tables[ti];
            for j in 0..c {
                for i in 0..r {
                    grad[lut[j * r + i]] -= gv[(i, j)];
                }
            }
        }
        for t in &block.scalar_terms {
            let mut tr = 0.0;
            for a in 0..block.dim {
                for b in 0..block.dim {
                    tr += sinv[(a, b)] * t.coeff[(a, b)];
                }
            }
            grad[layout.var(t.var).offset] -= tr;
        }

        // Hessian of the matrix terms, over ordered term pairs:
        // H[(i,j),(k,l)] += 2(A[j,k]·B[l,i] + C[j,l]·D[k,i])
        let hess_data = hess.as_mut_slice(); // column-major dim×dim
        for (ta_i, ta) in block.mat_terms.iter().enumerate() {
            let (ra, ca) = layout.var(ta.var).kind.shape();
            let lut_a = &tables[ta_i];
            for (tb_i, tb) in block.mat_terms.iter().enumerate() {
                let (rb, cb) = layout.var(tb.var).kind.shape();
                let lut_b = &tables[tb_i];
                let a_g = &ta.right * &sinv_l[tb_i]; // c_a × r_b
                let b_g = &tb.right * &sinv_l[ta_i]; // c_b × r_a
                let c_g = &ta.right * &sinv_rt[tb_i]; // c_a × c_b
                let d_g = sinv_l[tb_i].transpose() * &ta.left; // r_b × r_a
                // contiguous row copies for the inner loop
                let mut b_rows = vec![0.0; cb * ra];
                for l in 0..cb {
                    for i in 0..ra {
                        b_rows[l * ra + i] = b_g[(l, i)];
                    }
                }
                let mut d_rows = vec![0.0; rb * ra];
                for k in 0..rb {
                    for i in 0..ra {
                        d_rows[k * ra + i] = d_g[(k, i)];
                    }
                }
                // rows of the A-variable are contiguous in the decision
                // vector from index ja (general: whole column; symmetric:
                // packed lower part), with the i < ja part scattered
                let a_kind = layout.var(ta.var).kind;
                for ja in 0..ca {
                    let lut_a_col = &lut_a[ja * ra..(ja + 1) * ra];
                    let dense_from = match a_kind {
                        VarKind::Symmetric(_) => ja,
                        _ => 0,
                    };
                    let dense_base = lut_a_col[dense_from];
                    for lb in 0..cb {
                        let c_coef = 2.0 * c_g[(ja, lb)];
                        let b_row = &b_rows[lb * ra..(lb + 1) * ra];
                        for kb in 0..rb {
                            let a_coef = 2.0 * a_g[(ja, kb)];
                            let d_row = &d_rows[kb * ra..(kb + 1) * ra];
                            let col = lut_b[lb * rb + kb];
                            let col_base = col * dim;
                            for ia in 0..dense_from {
                                hess_data[col_base + lut_a_col[ia]] +=
                                    a_coef * b_row[ia] + c_coef * d_row[ia];
                            }
                            let dst = &mut hess_data
                                [col_base + dense_base..col_base + dense_base + ra - dense_from];
                            let bseg = &b_row[dense_from..ra];
                            let dseg = &d_row[dense_from..ra];
                            for ((h, bv), dv) in dst.iter_mut().zip(bseg).zip(dseg) {
                                *h += a_coef * bv + c_coef * dv;
                            }
                        }
                    }
                }
            }
        }
        // matrix × scalar and scalar × matrix
        for (ts_i, ts) in block.scalar_terms.iter().enumerate() {
            let w = &w_mats[ts_i];
            let s_off = layout.var(ts.var).offset;
            for (tm_i, tm) in block.mat_terms.iter().enumerate() {
                let (r, c) = layout.var(tm.var).kind.shape();
                let lut = &tables[tm_i];
                let gw = tm.left.transpose() * w * tm.right.transpose() * 2.0; // r×c
                for j in 0..c {
                    for i in 0..r {
                        let idx = lut[j * r + i];
                        let val = gw[(i, j)];
                        hess[(idx, s_off)] += val;
                        hess[(s_off, idx)] += val;
                    }
                }
            }
        }
        // scalar × scalar
        for (sa_i, sa) in block.scalar_terms.iter().enumerate() {
            let off_a = layout.var(sa.var).offset;
            for sb in block.scalar_terms.iter() {
                let off_b = layout.var(sb.var).offset;
                let mut tr = 0.0;
                for a in 0..block.dim {
                    for b in 0..block.dim {
                        tr += w_mats[sa_i][(a, b)] * sb.coeff[(a, b)];
                    }
                }
                hess[(off_a, off_b)] += tr;
            }
        }
    }
    // flush near-underflow values; subnormal arithmetic is microcoded and
    // poisons every downstream pass
    for v in hess.iter_mut() {
        if v.abs() < 1e-180 {
            *v = 0.0;
        }
    }
    for v in grad.iter_mut() {
        if v.abs() < 1e-180 {
            *v = 0.0;
        }
    }
    Some((grad, hess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::{
        AffineMatrixInequality, DecisionLayout, LinearEquality, Objective,
    };

    fn scalar_layout() -> (DecisionLayout, usize) {
        let mut layout = DecisionLayout::new();
        let x = layout.add("x", VarKind::Scalar).unwrap();
        (layout, x)
    }

    /// Gradient / Hessian of the barrier against central finite differences.
    #[test]
    fn assembly_matches_finite_differences() {
        let mut rng = crate::rng::SplitMix64::new(77);
        for trial in 0..6 {
            let mut layout = DecisionLayout::new();
            let y = layout.add("Y", VarKind::Symmetric(2)).unwrap();
            let th = layout.add("T", VarKind::General(3, 2)).unwrap();
            let s = layout.add("s", VarKind::Scalar).unwrap();
            let k = 4;
            let mut problem = SdpProblem::new(layout);
            let rand_mat = |r: usize, c: usize, rng: &mut crate::rng::SplitMix64| {
                Mat::from_fn(r, c, |_, _| rng.uniform(-0.4, 0.4))
            };
            let mut blocks = Vec::new();
            for b in 0..2 {
                let mut ineq = AffineMatrixInequality::new(
                    format!("b{b}"),
                    Mat::identity(k, k) * (3.0 + b as f64),
                    0.0,
                )
                .unwrap();
                ineq.place(y, rand_mat(k, 2, &mut rng), rand_mat(2, k, &mut rng));
                ineq.place(th, rand_mat(k, 3, &mut rng), rand_mat(2, k, &mut rng));
                ineq.place(th, rand_mat(k, 3, &mut rng), rand_mat(2, k, &mut rng));
                let coeff = rand_mat(k, k, &mut rng);
                ineq.add_scalar(s, (&coeff + coeff.transpose()) * 0.5);
                blocks.push(ineq);
            }
            problem.inequalities = blocks;

            let dim = problem.layout.dim();
            let x = DVector::from_fn(dim, |_, _| rng.uniform(-0.15, 0.15));
            let (grad, hess) = assemble(&problem, &x, 1e8).expect("interior");
            let phi = |x: &DVector<f64>| -> f64 {
                let zero = DVector::zeros(dim);
                eval_merit(&problem, x, &zero, 1.0, 1e8).expect("interior")
            };
            let h = 2e-6;
            for i in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (phi(&xp) - phi(&xm)) / (2.0 * h);
                assert!(
                    (fd - grad[i]).abs() <= 2e-5 * (1.0 + fd.abs()),
                    "trial {trial} grad[{i}]: fd {fd} vs {g}",
                    g = grad[i]
                );
                // Hessian row via gradient differences
                let (gp, _) = assemble(&problem, &xp, 1e8).unwrap();
                let (gm, _) = assemble(&problem, &xm, 1e8).unwrap();
                for j in 0..dim {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert!(
                        (fd2 - hess[(i, j)]).abs() <= 5e-4 * (1.0 + fd2.abs()),
                        "trial {trial} hess[{i},{j}]: fd {fd2} vs {hv}",
                        hv = hess[(i, j)]
                    );
                }
            }
            // Hessian symmetric
            assert!((&hess - hess.transpose()).norm() <= 1e-9 * hess.norm());
        }
    }

    #[test]
    fn scalar_objective_example() {
        // minimize x s.t. [[x,1],[1,x]] ⪰ 1e-6·I; optimum x = 1 + 1e-6
        let (layout, x) = scalar_layout();
        let mut problem = SdpProblem::new(layout);
        let mut constant = Mat::zeros(2, 2);
        constant[(0, 1)] = 1.0;
        constant[(1, 0)] = 1.0;
        let mut ineq = AffineMatrixInequality::new("disk", constant, 1e-6).unwrap();
        ineq.add_scalar(x, Mat::identity(2, 2));
        problem.inequalities.push(ineq);
        problem.objective = Some(Objective {
            coeffs: vec![(0, 1.0)],
        });
        let res = solve(&problem, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Feasible);
        let x_star = res.x.as_ref().unwrap()[0];

        // brute-force oracle: smallest grid x with margin ≥ ε
        let mut oracle = f64::NAN;
        let mut xs = 0.999;
        while xs < 1.2 {
            if xs - 1.0 >= 1e-6 {
                oracle = xs;
                break;
            }
            xs += 1e-7;
        }
        assert!((x_star - oracle).abs() <= 1e-6 + 2e-7, "x* = {x_star}, oracle {oracle}");
        assert!(res.objective.unwrap() <= 1.0 + 1e-4);
        assert!(res.worst_margin >= -1e-9);
    }

    #[test]
    fn infeasible_diag_example() {
        // diag(x, -1-x) ⪰ 0 needs x ≥ 0 and x ≤ -1
        let (layout, x) = scalar_layout();
        let mut problem = SdpProblem::new(layout);
        let mut constant = Mat::zeros(2, 2);
        constant[(1, 1)] = -1.0;
        let mut coeff = Mat::zeros(2, 2);
        coeff[(0, 0)] = 1.0;
        coeff[(1, 1)] = -1.0;
        let mut ineq = AffineMatrixInequality::new("diag", constant, 0.0).unwrap();
        ineq.add_scalar(x, coeff);
        problem.inequalities.push(ineq);
        let res = solve(&problem, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        let (lo, hi) = res.margin_bracket.unwrap();
        assert!(hi < 0.0, "bracket ({lo}, {hi})");
        // the true max-margin optimum -0.5 (at x = -0.5) lies in the bracket
        assert!(lo <= -0.5 + 1e-6 && -0.5 <= hi, "bracket ({lo}, {hi})");
    }

    #[test]
    fn empty_constraints_feasible() {
        let (layout, _) = scalar_layout();
        let mut problem = SdpProblem::new(layout);
        problem.objective = Some(Objective { coeffs: vec![] });
        let res = solve(&problem, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Feasible);
        assert_eq!(res.objective, Some(0.0));
    }

    #[test]
    fn feasibility_search_returns_interior_point() {
        // [[x,1],[1,x]] ⪰ 0.5·I is satisfied on x ≥ 1.5-ish; no objective
        let (layout, x) = scalar_layout();
        let mut problem = SdpProblem::new(layout);
        let mut constant = Mat::zeros(2, 2);
        constant[(0, 1)] = 1.0;
        constant[(1, 0)] = 1.0;
        let mut ineq = AffineMatrixInequality::new("disk", constant, 0.5).unwrap();
        ineq.add_scalar(x, Mat::identity(2, 2));
        problem.inequalities.push(ineq);
        let res = solve(&problem, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Feasible);
        assert!(res.worst_margin >= -1e-9);
        let xv = res.x.unwrap()[0];
        assert!(xv - 1.0 >= 0.5 - 1e-9, "x = {xv}");
    }

    #[test]
    fn equality_constrained_objective() {
        // minimize x + y s.t. x = y and [[x,1],[1,y]] ⪰ 1e-6·I → x = y = 1+1e-6
        let mut layout = DecisionLayout::new();
        let x = layout.add("x", VarKind::Scalar).unwrap();
        let y = layout.add("y", VarKind::Scalar).unwrap();
        let (xi, yi) = (layout.var(x).offset, layout.var(y).offset);
        let mut problem = SdpProblem::new(layout);
        let mut constant = Mat::zeros(2, 2);
        constant[(0, 1)] = 1.0;
        constant[(1, 0)] = 1.0;
        let mut cx = Mat::zeros(2, 2);
        cx[(0, 0)] = 1.0;
        let mut cy = Mat::zeros(2, 2);
        cy[(1, 1)] = 1.0;
        let mut ineq = AffineMatrixInequality::new("disk", constant, 1e-6).unwrap();
        ineq.add_scalar(x, cx);
        ineq.add_scalar(y, cy);
        problem.inequalities.push(ineq);
        problem.equalities.push(LinearEquality {
            coeffs: vec![(xi, 1.0), (yi, -1.0)],
            rhs: 0.0,
        });
        problem.objective = Some(Objective {
            coeffs: vec![(xi, 1.0), (yi, 1.0)],
        });
        let res = solve(&problem, &SolverSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Feasible);
        let xv = res.x.as_ref().unwrap()[xi];
        let yv = res.x.as_ref().unwrap()[yi];
        assert!(
            (xv - yv).abs() <= 1e-8,
            "x = {xv}, y = {yv}, eq_residual = {:.3e}, msg = {}",
            res.eq_residual,
            res.message
        );
        assert!((xv - 1.0).abs() <= 1e-4, "x = {xv}");
        assert!(res.eq_residual <= 1e-8);
    }

    #[test]
    fn shrinking_eps_never_flips_feasible_to_infeasible() {
        // family: [[x,1],[1,x]] ⪰ ε·I together with x ≤ 1.001
        for keep_feasible in [true, false] {
            let mut last_feasible = false;
            for eps_exp in [2i32, 3, 4, 5, 6, 8] {
                let eps = 10f64.powi(-eps_exp);
                let (layout, x) = scalar_layout();
                let mut problem = SdpProblem::new(layout);
                let mut constant = Mat::zeros(2, 2);
                constant[(0, 1)] = 1.0;
                constant[(1, 0)] = 1.0;
                let mut ineq = AffineMatrixInequality::new("disk", constant, eps).unwrap();
                ineq.add_scalar(x, Mat::identity(2, 2));
                problem.inequalities.push(ineq);
                let cap = if keep_feasible { 1.001 } else { 1.00001 };
                let mut capblk =
                    AffineMatrixInequality::new("cap", Mat::from_element(1, 1, cap), 0.0).unwrap();
                capblk.add_scalar(x, Mat::from_element(1, 1, -1.0));
                problem.inequalities.push(capblk);
                let res = solve(&problem, &SolverSettings::default()).unwrap();
                let feas = res.status == SolveStatus::Feasible;
                if last_feasible {
                    assert!(feas, "shrinking eps to 1e-{eps_exp} flipped feasibility");
                }
                last_feasible = feas;
            }
            let _ = keep_feasible;
        }
    }

    #[test]
    fn random_constructed_feasible_problems_are_solved() {
        let mut rng = crate::rng::SplitMix64::new(55);
        for trial in 0..10 {
            let mut layout = DecisionLayout::new();
            let y = layout.add("Y", VarKind::Symmetric(3)).unwrap();
            let t = layout.add("T", VarKind::General(2, 3)).unwrap();
            let dim = layout.dim();
            let k = 5;
            let mut problem = SdpProblem::new(layout);
            let x_star = DVector::from_fn(dim, |_, _| rng.uniform(-1.0, 1.0));
            for b in 0..2 {
                let left_y = Mat::from_fn(k, 3, |_, _| rng.uniform(-0.5, 0.5));
                let right_y = Mat::from_fn(3, k, |_, _| rng.uniform(-0.5, 0.5));
                let left_t = Mat::from_fn(k, 2, |_, _| rng.uniform(-0.5, 0.5));
                let right_t = Mat::from_fn(3, k, |_, _| rng.uniform(-0.5, 0.5));
                let mut ineq =
                    AffineMatrixInequality::new(format!("b{b}"), Mat::zeros(k, k), 1e-8).unwrap();
                ineq.place(y, left_y, right_y);
                ineq.place(t, left_t, right_t);
                // choose the constant so that x_star is strictly interior
                let val = ineq.eval(&problem.layout, &x_star);
                let lift = crate::linalg::psd_margin(
                    &crate::linalg::SymmetricMatrix::new(val.clone()).unwrap(),
                );
                ineq.constant = Mat::identity(k, k) * (0.5 - lift.min(0.0) + 0.1);
                problem.inequalities.push(ineq);
            }
            let res = solve(&problem, &SolverSettings::default()).unwrap();
            assert_eq!(res.status, SolveStatus::Feasible, "trial {trial}");
            assert!(res.worst_margin >= -1e-9);
            // soundness: every feasible result passes the independent check
            let report = crate::sdp::check_point(&problem, res.x.as_ref().unwrap()).unwrap();
            assert!(report.feasible, "trial {trial}: {report:?}");
        }
    }
}
