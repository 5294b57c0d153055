//! Problem data for dense LMI feasibility / minimization: decision layouts,
//! affine matrix inequalities built from structured placements, scalar
//! equalities and an optional linear objective.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use nalgebra::DVector;

/// Kind of a decision-variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Symmetric s×s block; s(s+1)/2 free entries (lower triangle, row-major).
    Symmetric(usize),
    /// General r×c block; r·c free entries (row-major).
    General(usize, usize),
    /// Single scalar.
    Scalar,
}

impl VarKind {
    pub fn free_len(&self) -> usize {
        match *self {
            VarKind::Symmetric(s) => s * (s + 1) / 2,
            VarKind::General(r, c) => r * c,
            VarKind::Scalar => 1,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            VarKind::Symmetric(s) => (s, s),
            VarKind::General(r, c) => (r, c),
            VarKind::Scalar => (1, 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
}

/// Identifier of a variable block within a layout.
pub type VarId = usize;

/// Named variable blocks vectorized into one decision vector.
#[derive(Debug, Clone, Default)]
pub struct DecisionLayout {
    vars: Vec<VarDef>,
    dim: usize,
}

impl DecisionLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, kind: VarKind) -> Result<VarId> {
        let name = name.into();
        if self.vars.iter().any(|v| v.name == name) {
            return Err(Error::Spec(format!("duplicate variable name '{name}'")));
        }
        let offset = self.dim;
        self.dim += kind.free_len();
        self.vars.push(VarDef { name, kind, offset });
        Ok(self.vars.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id]
    }

    pub fn by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Flat index of entry (i, j) of a variable. General blocks are stored
    /// column-major and symmetric blocks as packed lower columns, so sweeps
    /// over the row index are contiguous.
    pub fn entry_index(&self, id: VarId, i: usize, j: usize) -> usize {
        let v = &self.vars[id];
        match v.kind {
            VarKind::Symmetric(s) => {
                let (i, j) = if i >= j { (i, j) } else { (j, i) };
                v.offset + j * (2 * s - j + 1) / 2 + (i - j)
            }
            VarKind::General(r, _) => v.offset + j * r + i,
            VarKind::Scalar => v.offset,
        }
    }

    /// Reconstructs the matrix value of a variable from the decision vector.
    pub fn matrix_value(&self, id: VarId, x: &DVector<f64>) -> Mat {
        let v = &self.vars[id];
        match v.kind {
            VarKind::Symmetric(s) => {
                let mut m = Mat::zeros(s, s);
                for j in 0..s {
                    let colstart = v.offset + j * (2 * s - j + 1) / 2;
                    for i in j..s {
                        let val = x[colstart + (i - j)];
                        m[(i, j)] = val;
                        m[(j, i)] = val;
                    }
                }
                m
            }
            VarKind::General(r, c) => {
                let mut m = Mat::zeros(r, c);
                for j in 0..c {
                    for i in 0..r {
                        m[(i, j)] = x[v.offset + j * r + i];
                    }
                }
                m
            }
            VarKind::Scalar => Mat::from_element(1, 1, x[v.offset]),
        }
    }

    pub fn scalar_value(&self, id: VarId, x: &DVector<f64>) -> f64 {
        x[self.vars[id].offset]
    }
}

/// Structured placement L·V·R + Rᵀ·Vᵀ·Lᵀ of a matrix variable inside a block.
#[derive(Debug, Clone)]
pub struct MatTerm {
    pub var: VarId,
    /// k×r factor applied on the left.
    pub left: Mat,
    /// c×k factor applied on the right.
    pub right: Mat,
}

/// Coefficient matrix of a scalar variable inside a block.
#[derive(Debug, Clone)]
pub struct ScalarTerm {
    pub var: VarId,
    pub coeff: Mat,
}

/// One constraint block: constant + Σ placements ⪰ eps·I.
#[derive(Debug, Clone)]
pub struct AffineMatrixInequality {
    pub label: String,
    pub dim: usize,
    pub constant: Mat,
    pub mat_terms: Vec<MatTerm>,
    pub scalar_terms: Vec<ScalarTerm>,
    /// Required margin: the block value must satisfy F(x) ⪰ eps·I.
    pub eps: f64,
}

impl AffineMatrixInequality {
    pub fn new(label: impl Into<String>, constant: Mat, eps: f64) -> Result<Self> {
        if constant.nrows() != constant.ncols() {
            return Err(Error::dimension(
                "AffineMatrixInequality",
                "square constant block",
                format!("{}x{}", constant.nrows(), constant.ncols()),
            ));
        }
        if (&constant - constant.transpose()).norm() > 1e-12 * constant.norm().max(1.0) {
            return Err(Error::Spec(format!(
                "constant block of '{}' is not symmetric",
                label.into()
            )));
        }
        Ok(AffineMatrixInequality {
            label: label.into(),
            dim: constant.nrows(),
            constant,
            mat_terms: Vec::new(),
            scalar_terms: Vec::new(),
            eps,
        })
    }

    /// Adds L·V·R + Rᵀ·Vᵀ·Lᵀ. For a placement on the diagonal that should
    /// read as sym(L₀·V·R₀) the caller halves one factor.
    pub fn place(&mut self, var: VarId, left: Mat, right: Mat) -> &mut Self {
        debug_assert_eq!(left.nrows(), self.dim);
        debug_assert_eq!(right.ncols(), self.dim);
        self.mat_terms.push(MatTerm { var, left, right });
        self
    }

    pub fn add_scalar(&mut self, var: VarId, coeff: Mat) -> &mut Self {
        debug_assert_eq!(coeff.nrows(), self.dim);
        debug_assert_eq!(coeff.ncols(), self.dim);
        self.scalar_terms.push(ScalarTerm { var, coeff });
        self
    }

    /// Evaluates the block at the decision vector.
    pub fn eval(&self, layout: &DecisionLayout, x: &DVector<f64>) -> Mat {
        let mut s = self.constant.clone();
        for t in &self.mat_terms {
            let v = layout.matrix_value(t.var, x);
            let lvr = &t.left * v * &t.right;
            s += &lvr + lvr.transpose();
        }
        for t in &self.scalar_terms {
            let val = layout.scalar_value(t.var, x);
            s += &t.coeff * val;
        }
        s
    }
}

/// Scalar linear equality Σ coeffs·x = rhs over flat decision indices.
#[derive(Debug, Clone)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Linear objective: minimize Σ coeffs·x.
#[derive(Debug, Clone, Default)]
pub struct Objective {
    pub coeffs: Vec<(usize, f64)>,
}

impl Objective {
    pub fn dense(&self, dim: usize) -> DVector<f64> {
        let mut c = DVector::zeros(dim);
        for (i, v) in &self.coeffs {
            c[*i] += v;
        }
        c
    }
}

/// Feasibility / minimization problem over strict LMIs.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub layout: DecisionLayout,
    pub inequalities: Vec<AffineMatrixInequality>,
    pub equalities: Vec<LinearEquality>,
    pub objective: Option<Objective>,
}

impl SdpProblem {
    pub fn new(layout: DecisionLayout) -> Self {
        SdpProblem {
            layout,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            objective: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.layout.dim();
        for ineq in &self.inequalities {
            for t in &ineq.mat_terms {
                if t.var >= self.layout.vars().len() {
                    return Err(Error::Spec(format!(
                        "block '{}' references unknown variable {}",
                        ineq.label, t.var
                    )));
                }
                let (r, c) = self.layout.var(t.var).kind.shape();
                if t.left.ncols() != r || t.right.nrows() != c {
                    return Err(Error::dimension(
                        "SdpProblem::validate",
                        format!("placement factors {}x{r} and {c}x{}", ineq.dim, ineq.dim),
                        format!(
                            "{}x{} and {}x{}",
                            t.left.nrows(),
                            t.left.ncols(),
                            t.right.nrows(),
                            t.right.ncols()
                        ),
                    ));
                }
            }
            for t in &ineq.scalar_terms {
                if t.var >= self.layout.vars().len()
                    || self.layout.var(t.var).kind != VarKind::Scalar
                {
                    return Err(Error::Spec(format!(
                        "block '{}' scalar term references a non-scalar variable",
                        ineq.label
                    )));
                }
            }
        }
        for eq in &self.equalities {
            if eq.coeffs.iter().any(|(i, _)| *i >= dim) {
                return Err(Error::Spec("equality references out-of-range index".into()));
            }
        }
        if let Some(obj) = &self.objective {
            if obj.coeffs.iter().any(|(i, _)| *i >= dim) {
                return Err(Error::Spec("objective references out-of-range index".into()));
            }
        }
        Ok(())
    }

    /// Default per-block strictness margin: 1e-8·(1 + ‖constant‖₂).
    pub fn default_eps(constant: &Mat) -> f64 {
        let spectral = if constant.nrows() == 0 {
            0.0
        } else {
            crate::linalg::spectral_radius(&(constant.clone()))
                .unwrap_or_else(|_| constant.norm())
        };
        1e-8 * (1.0 + spectral)
    }
}

/// Strictness margin selection for generated problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsPolicy {
    /// 1e-8·(1 + ‖constant‖₂) per block.
    Auto,
    /// Same fixed margin for every block.
    Fixed(f64),
}

impl EpsPolicy {
    pub fn eps_for(&self, constant: &Mat) -> f64 {
        match self {
            EpsPolicy::Auto => SdpProblem::default_eps(constant),
            EpsPolicy::Fixed(e) => *e,
        }
    }
}

impl Default for EpsPolicy {
    fn default() -> Self {
        EpsPolicy::Auto
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn layout_offsets_and_roundtrip() {
        let mut layout = DecisionLayout::new();
        let y = layout.add("Y", VarKind::Symmetric(2)).unwrap();
        let th = layout.add("Theta", VarKind::General(3, 2)).unwrap();
        let g = layout.add("gamma", VarKind::Scalar).unwrap();
        assert_eq!(layout.dim(), 3 + 6 + 1);

        let x = dvector![1.0, 2.0, 3.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 7.5];
        let ym = layout.matrix_value(y, &x);
        // packed lower columns: (0,0), (1,0), (1,1)
        assert_eq!(ym[(0, 0)], 1.0);
        assert_eq!(ym[(1, 0)], 2.0);
        assert_eq!(ym[(0, 1)], 2.0);
        assert_eq!(ym[(1, 1)], 3.0);
        let tm = layout.matrix_value(th, &x);
        // column-major: (0,0), (1,0), (2,0), (0,1), (1,1), (2,1)
        assert_eq!(tm[(0, 0)], 10.0);
        assert_eq!(tm[(1, 0)], 20.0);
        assert_eq!(tm[(0, 1)], 40.0);
        assert_eq!(tm[(2, 1)], 60.0);
        assert_eq!(layout.scalar_value(g, &x), 7.5);
        assert_eq!(layout.entry_index(y, 0, 1), layout.entry_index(y, 1, 0));
        assert_eq!(layout.entry_index(th, 2, 1), 8);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut layout = DecisionLayout::new();
        layout.add("Y", VarKind::Scalar).unwrap();
        assert!(layout.add("Y", VarKind::Scalar).is_err());
    }

    #[test]
    fn block_eval_matches_manual() {
        let mut layout = DecisionLayout::new();
        let th = layout.add("T", VarKind::General(2, 1)).unwrap();
        let mut ineq =
            AffineMatrixInequality::new("blk", Mat::identity(2, 2), 0.0).unwrap();
        // place V (2x1) into the block as L V R + (L V R)ᵀ
        let left = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let right = Mat::from_row_slice(1, 2, &[0.0, 1.0]);
        ineq.place(th, left.clone(), right.clone());
        let x = dvector![3.0, 4.0];
        let v = layout.matrix_value(th, &x);
        let manual = Mat::identity(2, 2) + (&left * &v * &right) + (&left * &v * &right).transpose();
        assert_eq!(ineq.eval(&layout, &x), manual);
    }
}
