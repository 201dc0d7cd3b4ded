//! Thin wrappers around dense Hermitian linear algebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    vals
}

/// Full Hermitian eigendecomposition `m = V diag(λ) V^H`.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Hermiticity defect `max |m − m^H|` entrywise.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Checks that `m` is Hermitian to `tol` (entrywise, relative to the largest
/// entry) and returns its eigendecomposition.
pub fn checked_hermitian_eigen(m: &DMatrix<C64>, tol: f64) -> Result<(DVector<f64>, DMatrix<C64>)> {
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > tol * scale {
        return Err(Error::InvalidInput(alloc::format!(
            "matrix is not Hermitian: defect {defect:.3e} over scale {scale:.3e}"
        )));
    }
    Ok(hermitian_eigen(m))
}

/// Solves the Hermitian positive semi-definite system `g x = b` by spectral
/// pseudo-inverse, truncating eigenvalues below `rel_cut` times the largest.
pub fn psd_solve(g: &DMatrix<C64>, b: &DVector<C64>, rel_cut: f64) -> DVector<C64> {
    let (vals, vecs) = hermitian_eigen(g);
    let top = vals.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut x = DVector::zeros(b.len());
    for k in 0..vals.len() {
        let l = vals[k];
        if l <= rel_cut * top || l <= 0.0 {
            continue;
        }
        let col = vecs.column(k);
        let coeff = col.dotc(b) / C64::new(l, 0.0);
        x += DVector::from(col) * coeff;
    }
    x
}

/// Condition estimate of a PSD matrix: largest over smallest positive
/// eigenvalue (infinite when singular).
pub fn psd_condition(g: &DMatrix<C64>) -> f64 {
    let vals = hermitian_eigenvalues(g);
    let top = vals.iter().fold(0.0f64, |a, &v| a.max(v));
    let bottom = vals
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if bottom.is_finite() && bottom > 0.0 {
        top / bottom
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_known_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
            ],
        );
        let vals = hermitian_eigenvalues(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.25),
                C64::new(0.0, -1.0),
                C64::new(0.5, -0.25),
                C64::new(-2.0, 0.0),
                C64::new(0.0, 0.5),
                C64::new(0.0, 1.0),
                C64::new(0.0, -0.5),
                C64::new(0.75, 0.0),
            ],
        );
        let (vals, vecs) = checked_hermitian_eigen(&m, 1e-12).unwrap();
        let mut rec = DMatrix::<C64>::zeros(3, 3);
        for k in 0..3 {
            let col = vecs.column(k);
            rec += DMatrix::from(&col * col.adjoint()) * C64::new(vals[k], 0.0);
        }
        let err = (&m - &rec).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn psd_solve_recovers_coefficients() {
        let g = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.5, 0.5),
                C64::new(0.5, -0.5),
                C64::new(1.0, 0.0),
            ],
        );
        let x_true = DVector::from_vec(alloc::vec![C64::new(1.0, -1.0), C64::new(0.0, 2.0)]);
        let b = &g * &x_true;
        let x = psd_solve(&g, &b, 1e-14);
        assert!((&x - &x_true).norm() < 1e-10);
    }
}
