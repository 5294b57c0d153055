//! Dense strict-LMI feasibility and minimization over matrix decision
//! variables, with scalar linear equalities and a log-det barrier solver.

mod check;
mod problem;
mod solver;

pub use check::{check_point, BlockDiagnostic, CheckReport, EQUALITY_SLACK, MARGIN_SLACK};
pub use problem::{
    AffineMatrixInequality, DecisionLayout, EpsPolicy, LinearEquality, MatTerm, Objective,
    ScalarTerm, SdpProblem, VarDef, VarId, VarKind,
};
pub use solver::{solve, SolveResult, SolveStatus, SolverSettings};
