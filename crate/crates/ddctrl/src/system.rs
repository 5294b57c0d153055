//! Systems, measured trajectories and explanation sets: everything needed to
//! reason about which systems are consistent with the recorded data.

use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, min_norm_solve, numerical_rank, Mat};
use crate::rng::SplitMix64;

pub use crate::linalg::SymmetricMatrix;

/// Discrete-time linear system x⁺ = A x + B u (+ E w), optionally with a
/// performance output z = C x + D u.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: Mat,
    pub b: Mat,
    pub e: Option<Mat>,
    pub c: Option<Mat>,
    pub d: Option<Mat>,
}

impl LtiSystem {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        LtiSystem::with_all(a, b, None, None, None)
    }

    pub fn with_all(
        a: Mat,
        b: Mat,
        e: Option<Mat>,
        c: Option<Mat>,
        d: Option<Mat>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dimension(
                "LtiSystem",
                "square A",
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        if b.nrows() != n {
            return Err(Error::dimension(
                "LtiSystem",
                format!("B with {n} rows"),
                format!("{}", b.nrows()),
            ));
        }
        if let Some(e) = &e {
            if e.nrows() != n {
                return Err(Error::dimension(
                    "LtiSystem",
                    format!("E with {n} rows"),
                    format!("{}", e.nrows()),
                ));
            }
        }
        if let Some(c) = &c {
            if c.ncols() != n {
                return Err(Error::dimension(
                    "LtiSystem",
                    format!("C with {n} columns"),
                    format!("{}", c.ncols()),
                ));
            }
        }
        if let (Some(c), Some(d)) = (&c, &d) {
            if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
                return Err(Error::dimension(
                    "LtiSystem",
                    format!("D of size {}x{}", c.nrows(), b.ncols()),
                    format!("{}x{}", d.nrows(), d.ncols()),
                ));
            }
        }
        for (name, m) in [
            ("A", Some(&a)),
            ("B", Some(&b)),
            ("E", e.as_ref()),
            ("C", c.as_ref()),
            ("D", d.as_ref()),
        ] {
            if let Some(m) = m {
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain(format!(
                        "system matrix {name} has non-finite entries"
                    )));
                }
            }
        }
        Ok(LtiSystem { a, b, e, c, d })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.e.as_ref().map_or(0, |e| e.ncols())
    }

    /// The (C, D) pair; H2 use rejects systems carrying only one of them.
    pub fn output_pair(&self) -> Result<(&Mat, &Mat)> {
        match (&self.c, &self.d) {
            (Some(c), Some(d)) => Ok((c, d)),
            (None, None) => Err(Error::Spec("system has no performance output (C, D)".into())),
            _ => Err(Error::Spec(
                "C and D must both be present for H2 use".into(),
            )),
        }
    }
}

/// Measured input/state data, with optional measured disturbances.
///
/// A record built from one trajectory keeps the raw X (T+1 columns) and
/// derives X₋ / X₊ as exact column slices. Concatenating segments stores the
/// partitions directly, since a stitched X would fake a transition across
/// the segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    u: Mat,
    x_minus: Mat,
    x_plus: Mat,
    w: Option<Mat>,
    x_full: Option<Mat>,
}

impl DataRecord {
    pub fn new(u: Mat, x: Mat, w: Option<Mat>) -> Result<Self> {
        let t = u.ncols();
        if t < 1 {
            return Err(Error::Format("data must contain at least one sample".into()));
        }
        if x.ncols() != t + 1 {
            return Err(Error::Format(format!(
                "state data has {} columns but input data implies {} (T+1 for T={t})",
                x.ncols(),
                t + 1
            )));
        }
        let x_minus = x.columns(0, t).into_owned();
        let x_plus = x.columns(1, t).into_owned();
        Self::from_partitions_impl(u, x_minus, x_plus, w, Some(x))
    }

    /// Builds a record directly from the partitions (segment concatenation).
    pub fn from_partitions(u: Mat, x_minus: Mat, x_plus: Mat, w: Option<Mat>) -> Result<Self> {
        Self::from_partitions_impl(u, x_minus, x_plus, w, None)
    }

    fn from_partitions_impl(
        u: Mat,
        x_minus: Mat,
        x_plus: Mat,
        w: Option<Mat>,
        x_full: Option<Mat>,
    ) -> Result<Self> {
        let t = u.ncols();
        if t < 1 {
            return Err(Error::Format("data must contain at least one sample".into()));
        }
        if x_minus.ncols() != t || x_plus.ncols() != t || x_minus.nrows() != x_plus.nrows() {
            return Err(Error::Format(format!(
                "state partitions must both be n x {t}; got {}x{} and {}x{}",
                x_minus.nrows(),
                x_minus.ncols(),
                x_plus.nrows(),
                x_plus.ncols()
            )));
        }
        if let Some(w) = &w {
            if w.ncols() != t {
                return Err(Error::Format(format!(
                    "disturbance data has {} columns, expected T = {t}",
                    w.ncols()
                )));
            }
        }
        for (name, m) in [
            ("U", Some(&u)),
            ("X-", Some(&x_minus)),
            ("X+", Some(&x_plus)),
            ("W", w.as_ref()),
        ] {
            if let Some(m) = m {
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Format(format!("{name} data has non-finite entries")));
                }
            }
        }
        Ok(DataRecord {
            u,
            x_minus,
            x_plus,
            w,
            x_full,
        })
    }

    /// Column-concatenates several independently recorded segments.
    pub fn concat(segments: &[DataRecord]) -> Result<DataRecord> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Format("no data segments provided".into()))?;
        if segments.len() == 1 {
            return Ok(first.clone());
        }
        let (n, m) = (first.state_dim(), first.input_dim());
        let has_w = first.w.is_some();
        let total: usize = segments.iter().map(|s| s.len()).sum();
        let mut u = Mat::zeros(m, total);
        let mut xm = Mat::zeros(n, total);
        let mut xp = Mat::zeros(n, total);
        let mut w = if has_w {
            Some(Mat::zeros(first.disturbance_dim(), total))
        } else {
            None
        };
        let mut at = 0;
        for seg in segments {
            if seg.state_dim() != n || seg.input_dim() != m || seg.w.is_some() != has_w {
                return Err(Error::Format(
                    "data segments disagree on signal dimensions".into(),
                ));
            }
            let t = seg.len();
            u.view_mut((0, at), (m, t)).copy_from(&seg.u);
            xm.view_mut((0, at), (n, t)).copy_from(&seg.x_minus);
            xp.view_mut((0, at), (n, t)).copy_from(&seg.x_plus);
            if let (Some(w), Some(sw)) = (w.as_mut(), seg.w.as_ref()) {
                w.view_mut((0, at), (sw.nrows(), t)).copy_from(sw);
            }
            at += t;
        }
        DataRecord::from_partitions(u, xm, xp, w)
    }

    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.u.ncols() == 0
    }

    pub fn state_dim(&self) -> usize {
        self.x_minus.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.w.as_ref().map_or(0, |w| w.nrows())
    }

    pub fn u_minus(&self) -> &Mat {
        &self.u
    }

    pub fn x_minus(&self) -> &Mat {
        &self.x_minus
    }

    pub fn x_plus(&self) -> &Mat {
        &self.x_plus
    }

    pub fn w_minus(&self) -> Option<&Mat> {
        self.w.as_ref()
    }

    /// Raw state trajectory, available when the record came from a single
    /// trajectory rather than concatenated segments.
    pub fn x_full(&self) -> Option<&Mat> {
        self.x_full.as_ref()
    }

    /// Stacked data matrix [X₋; U₋] or [X₋; U₋; W₋].
    pub fn stacked(&self) -> Mat {
        let n = self.state_dim();
        let m = self.input_dim();
        let d = self.disturbance_dim();
        let t = self.len();
        let mut s = Mat::zeros(n + m + d, t);
        s.view_mut((0, 0), (n, t)).copy_from(&self.x_minus);
        s.view_mut((n, 0), (m, t)).copy_from(&self.u);
        if let Some(w) = &self.w {
            s.view_mut((n + m, 0), (d, t)).copy_from(w);
        }
        s
    }
}

/// Affine set of systems consistent with a data record.
#[derive(Debug, Clone)]
pub struct ExplanationSet {
    /// One consistent [A B] (or [A B E]) block, minimum-norm representative.
    pub particular: Mat,
    /// Orthonormal directions v (as rows) with v·stacked = 0; any row of a
    /// homogeneous solution [A₀ B₀ (E₀)] is a combination of these.
    pub kernel: Mat,
    /// True iff the data pin the system down uniquely.
    pub unique: bool,
    /// Dimensions (n, m, d) of the explained systems.
    pub dims: (usize, usize, usize),
}

impl ExplanationSet {
    /// Reassembles an [A B (E)] block into an `LtiSystem`.
    pub fn system_from_block(&self, block: &Mat) -> Result<LtiSystem> {
        let (n, m, d) = self.dims;
        let a = block.columns(0, n).into_owned();
        let b = block.columns(n, m).into_owned();
        let e = if d > 0 {
            Some(block.columns(n + m, d).into_owned())
        } else {
            None
        };
        LtiSystem::with_all(a, b, e, None, None)
    }
}

/// Simulates `sys` from `x0` under the given inputs (and disturbances, which
/// must be present exactly when the system has an E matrix).
pub fn simulate(
    sys: &LtiSystem,
    x0: &nalgebra::DVector<f64>,
    inputs: &Mat,
    disturbances: Option<&Mat>,
) -> Result<DataRecord> {
    let n = sys.state_dim();
    let m = sys.input_dim();
    let t = inputs.ncols();
    if x0.len() != n {
        return Err(Error::dimension(
            "simulate",
            format!("x0 of length {n}"),
            format!("{}", x0.len()),
        ));
    }
    if inputs.nrows() != m {
        return Err(Error::dimension(
            "simulate",
            format!("{m} input rows"),
            format!("{}", inputs.nrows()),
        ));
    }
    match (&sys.e, disturbances) {
        (Some(e), Some(w)) => {
            if w.nrows() != e.ncols() || w.ncols() != t {
                return Err(Error::dimension(
                    "simulate",
                    format!("{}x{t} disturbance data", e.ncols()),
                    format!("{}x{}", w.nrows(), w.ncols()),
                ));
            }
        }
        (None, None) => {}
        (Some(_), None) => {
            return Err(Error::Spec("system has E; disturbance data required".into()))
        }
        (None, Some(_)) => {
            return Err(Error::Spec("disturbance data given but system has no E".into()))
        }
    }
    let mut x = Mat::zeros(n, t + 1);
    x.set_column(0, x0);
    for k in 0..t {
        let mut next = &sys.a * x.column(k) + &sys.b * inputs.column(k);
        if let (Some(e), Some(w)) = (&sys.e, disturbances) {
            next += e * w.column(k);
        }
        x.set_column(k + 1, &next);
    }
    DataRecord::new(inputs.clone(), x, disturbances.cloned())
}

/// True iff `sys` reproduces the data: ‖X₊ − [A B (E)]·stacked‖_F within
/// `tol·max(1, ‖X₊‖_F)`.
pub fn explains(sys: &LtiSystem, data: &DataRecord, tol: f64) -> Result<bool> {
    let n = data.state_dim();
    let m = data.input_dim();
    let d = data.disturbance_dim();
    if sys.state_dim() != n || sys.input_dim() != m || sys.disturbance_dim() != d {
        return Err(Error::dimension(
            "explains",
            format!("system with n={n}, m={m}, d={d}"),
            format!(
                "n={}, m={}, d={}",
                sys.state_dim(),
                sys.input_dim(),
                sys.disturbance_dim()
            ),
        ));
    }
    let mut block = Mat::zeros(n, n + m + d);
    block.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    block.view_mut((0, n), (n, m)).copy_from(&sys.b);
    if let Some(e) = &sys.e {
        block.view_mut((0, n + m), (n, d)).copy_from(e);
    }
    let residual = (data.x_plus() - block * data.stacked()).norm();
    Ok(residual <= tol * data.x_plus().norm().max(1.0))
}

/// Default relative consistency tolerance for explanation sets.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Builds the explanation set Σ from a data record.
pub fn explanation_set(data: &DataRecord) -> Result<ExplanationSet> {
    explanation_set_with_tol(data, CONSISTENCY_TOL)
}

pub fn explanation_set_with_tol(data: &DataRecord, tol: f64) -> Result<ExplanationSet> {
    let stacked = data.stacked();
    let x_plus = data.x_plus();
    // particular solves M·stacked = X₊, i.e. stackedᵀ·Mᵀ = X₊ᵀ
    let (mt, _) = min_norm_solve(&stacked.transpose(), &x_plus.transpose())?;
    let particular = mt.transpose();
    let residual = (&particular * &stacked - x_plus).norm();
    let threshold = tol * x_plus.norm().max(1.0);
    if residual > threshold {
        return Err(Error::Consistency {
            residual,
            tol: threshold,
        });
    }
    let kernel = kernel_basis(&stacked.transpose())?;
    let unique = kernel.ncols() == 0;
    Ok(ExplanationSet {
        particular,
        kernel: kernel.transpose(),
        unique,
        dims: (data.state_dim(), data.input_dim(), data.disturbance_dim()),
    })
}

/// Draws `count` systems from the explanation set: the particular solution
/// plus deterministic random combinations of the kernel directions, with
/// coefficients uniform on [-10, 10].
pub fn sample_explanations(es: &ExplanationSet, count: usize, seed: u64) -> Vec<LtiSystem> {
    let (n, _, _) = es.dims;
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    for idx in 0..count.max(1) {
        let mut block = es.particular.clone();
        if idx > 0 && es.kernel.nrows() > 0 {
            for row in 0..n {
                for k in 0..es.kernel.nrows() {
                    let coeff = rng.uniform(-10.0, 10.0);
                    for col in 0..block.ncols() {
                        block[(row, col)] += coeff * es.kernel[(k, col)];
                    }
                }
            }
        }
        out.push(
            es.system_from_block(&block)
                .expect("kernel directions preserve dimensions"),
        );
    }
    out
}

/// Rank diagnostics for a data record.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentifiabilityReport {
    pub samples: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub disturbance_dim: usize,
    pub rank_x_minus: usize,
    /// X₋ full row rank, hence a right inverse exists.
    pub right_inverse_exists: bool,
    pub rank_stacked: usize,
    pub rank_required_for_identification: usize,
    pub unique: bool,
}

pub fn identifiability_report(data: &DataRecord) -> Result<IdentifiabilityReport> {
    let rank_x = numerical_rank(data.x_minus())?;
    let rank_stacked = numerical_rank(&data.stacked())?;
    let needed = data.state_dim() + data.input_dim() + data.disturbance_dim();
    Ok(IdentifiabilityReport {
        samples: data.len(),
        state_dim: data.state_dim(),
        input_dim: data.input_dim(),
        disturbance_dim: data.disturbance_dim(),
        rank_x_minus: rank_x,
        right_inverse_exists: rank_x == data.state_dim(),
        rank_stacked,
        rank_required_for_identification: needed,
        unique: rank_stacked == needed,
    })
}

/// Weighted output data Z₋ = C·X₋ + D·U₋.
pub fn weighted_output_data(data: &DataRecord, c: &Mat, d: &Mat) -> Result<Mat> {
    let n = data.state_dim();
    let m = data.input_dim();
    if c.ncols() != n || d.ncols() != m || c.nrows() != d.nrows() {
        return Err(Error::dimension(
            "weighted_output_data",
            format!("C p x {n}, D p x {m}"),
            format!(
                "C {}x{}, D {}x{}",
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            ),
        ));
    }
    Ok(c * data.x_minus() + d * data.u_minus())
}
