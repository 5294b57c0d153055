//! Eigenvalue-based queries: spectral radius, Schur stability, definiteness
//! margins.

use super::{Mat, SymmetricMatrix};
use crate::error::{Error, Result};
use nalgebra::linalg::{Schur, SymmetricEigen};

/// Default strictness tolerance for Schur stability tests.
pub const SCHUR_TOL: f64 = 1e-9;

const EIG_MAX_ITER: usize = 4_000;

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::dimension(
            "spectral_radius",
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    super::check_finite("spectral_radius", m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    // Scale so QR iteration shifts behave uniformly across magnitudes.
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let scaled = m / scale;
    let schur = Schur::try_new(scaled, f64::EPSILON, EIG_MAX_ITER).ok_or(Error::Numerical {
        what: "eigenvalue QR iteration",
        iterations: EIG_MAX_ITER,
    })?;
    let eigs = schur.complex_eigenvalues();
    let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(rho * scale)
}

/// True iff every eigenvalue lies strictly inside the unit disk, with
/// boundary excluded by `tol` (spectral radius < 1 - tol).
pub fn is_schur_stable(m: &Mat, tol: f64) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0 - tol)
}

/// Smallest eigenvalue of a symmetric matrix. M ≻ εI iff the result > ε.
pub fn psd_margin(m: &SymmetricMatrix) -> f64 {
    symmetric_min_eig(m.as_mat())
}

/// Smallest eigenvalue of a matrix assumed symmetric.
pub(crate) fn symmetric_min_eig(m: &Mat) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
        .unwrap_or_else(|| SymmetricEigen::new(m.clone()));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    // Brute-force polynomial root finder (Durand-Kerner) used as an
    // independent oracle for small characteristic polynomials.
    fn poly_roots_max_modulus(coeffs: &[f64]) -> f64 {
        // coeffs: monic polynomial c[0] + c[1] x + ... + x^n
        use nalgebra::Complex;
        let n = coeffs.len();
        let mut roots: Vec<Complex<f64>> = (0..n)
            .map(|k| Complex::new(0.4, 0.9).powu(k as u32 + 1))
            .collect();
        let eval = |z: Complex<f64>| -> Complex<f64> {
            let mut p = Complex::new(1.0, 0.0);
            for c in coeffs.iter().rev() {
                p = p * z + Complex::new(*c, 0.0);
            }
            p
        };
        for _ in 0..200 {
            let prev = roots.clone();
            for i in 0..n {
                let mut denom = Complex::new(1.0, 0.0);
                for (j, r) in prev.iter().enumerate() {
                    if j != i {
                        denom *= prev[i] - r;
                    }
                }
                roots[i] = prev[i] - eval(prev[i]) / denom;
            }
        }
        roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_has_radius_one() {
        assert_eq!(spectral_radius(&Mat::identity(2, 2)).unwrap(), 1.0);
    }

    #[test]
    fn zero_matrix_has_radius_zero() {
        assert_eq!(spectral_radius(&Mat::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn rotation_like_matrix_radius_half() {
        // characteristic polynomial x^2 + 0.25, roots ±0.5i
        let m = dmatrix![0.0, 1.0; -0.25, 0.0];
        let rho = spectral_radius(&m).unwrap();
        let oracle = poly_roots_max_modulus(&[0.25, 0.0]);
        assert!((oracle - 0.5).abs() < 1e-12);
        assert!((rho - 0.5).abs() < 1e-12, "rho = {rho}");
    }

    #[test]
    fn non_square_rejected() {
        assert!(spectral_radius(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn schur_stability_boundary_excluded() {
        assert!(is_schur_stable(&(Mat::identity(2, 2) * 0.5), SCHUR_TOL).unwrap());
        assert!(!is_schur_stable(&Mat::identity(2, 2), SCHUR_TOL).unwrap());
        assert!(is_schur_stable(&dmatrix![0.1], SCHUR_TOL).unwrap());
    }

    #[test]
    fn psd_margin_examples() {
        let id = SymmetricMatrix::identity(3);
        assert!((psd_margin(&id) - 1.0).abs() < 1e-14);
        let d = SymmetricMatrix::new(dmatrix![2.0, 0.0; 0.0, -3.0]).unwrap();
        assert!((psd_margin(&d) + 3.0).abs() < 1e-14);
        let m = SymmetricMatrix::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
        assert!((psd_margin(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radius_scales_linearly() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..20 {
            let n = 2 + rng.below(5);
            let m = Mat::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
            let c = rng.uniform(-4.0, 4.0);
            let r1 = spectral_radius(&(&m * c)).unwrap();
            let r0 = spectral_radius(&m).unwrap();
            assert!((r1 - c.abs() * r0).abs() <= 1e-9 * (1.0 + r0));
        }
    }
}
