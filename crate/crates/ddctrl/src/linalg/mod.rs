//! Dense real matrix kernels shared by the rest of the crate: spectra,
//! definiteness, Lyapunov / Riccati solvers, kernels and constrained right
//! inverses. Everything operates on `nalgebra::DMatrix<f64>`.

mod factor;
mod kernel;
mod lyapunov;
mod riccati;
mod spectra;

pub use factor::psd_factor;
pub use kernel::{
    constrained_right_inverse, kernel_basis, kernel_basis_with_tol, min_norm_solve,
    numerical_rank, numerical_rank_scaled, RANK_REL_TOL,
};
pub use lyapunov::solve_discrete_lyapunov;
pub use riccati::{dare_residual, solve_dare};
pub use spectra::{is_schur_stable, psd_margin, spectral_radius, SCHUR_TOL};

use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

/// Symmetric matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    m: Mat,
}

impl SymmetricMatrix {
    /// Builds from an arbitrary square matrix as (M + Mᵀ)/2.
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dimension(
                "SymmetricMatrix::new",
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymmetricMatrix { m: sym })
    }

    pub fn identity(dim: usize) -> Self {
        SymmetricMatrix {
            m: Mat::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            m: Mat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.m
    }

    pub fn into_mat(self) -> Mat {
        self.m
    }
}

impl From<SymmetricMatrix> for Mat {
    fn from(s: SymmetricMatrix) -> Mat {
        s.m
    }
}

/// Checks that every entry is finite; used at API boundaries.
pub fn check_finite(context: &'static str, m: &Mat) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        Err(Error::Domain(format!("{context}: non-finite entry")))
    } else {
        Ok(())
    }
}

/// Frobenius norm shorthand.
pub fn fro(m: &Mat) -> f64 {
    m.norm()
}
