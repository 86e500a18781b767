//! Dense complex linear algebra shared by the filters.
//!
//! Hermitian systems are solved through a Cholesky factorization; when that
//! fails (the matrix is numerically indefinite) we fall back to LU with
//! partial pivoting. Nothing in the crate forms an explicit inverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `exp(j * 2 * pi * cycles)`.
#[inline]
pub fn cis_cycles(cycles: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * cycles).sin_cos();
    Complex64::new(c, s)
}

enum Factor {
    Cholesky(Cholesky<Complex64, Dyn>),
    Lu(LU<Complex64, Dyn, Dyn>),
}

/// A factored Hermitian (ideally positive definite) matrix.
pub struct HermitianSolver {
    factor: Factor,
}

impl HermitianSolver {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::from_ref(&matrix)
    }

    /// As [`HermitianSolver::new`], copying `matrix` only once.
    pub fn from_ref(matrix: &CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let mut herm = matrix.clone();
        for i in 0..herm.nrows() {
            herm[(i, i)].im = 0.0;
        }
        // Complex square roots never fail, so nalgebra's factorization of an
        // indefinite matrix "succeeds" with a non-real diagonal; reject that.
        let chol = Cholesky::new(herm).filter(|c| {
            c.l_dirty()
                .diagonal()
                .iter()
                .all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re)
        });
        match chol {
            Some(chol) => Ok(Self {
                factor: Factor::Cholesky(chol),
            }),
            None => {
                let lu = matrix.clone().lu();
                let condition = lu_condition_estimate(&lu);
                if !lu.is_invertible() || !condition.is_finite() || condition > 1e15 {
                    return Err(Error::Factorization { condition });
                }
                Ok(Self {
                    factor: Factor::Lu(lu),
                })
            }
        }
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.factor, Factor::Cholesky(_))
    }

    pub fn solve(&self, rhs: &CVec) -> CVec {
        match &self.factor {
            Factor::Cholesky(chol) => chol.solve(rhs),
            // invertibility was checked at construction
            Factor::Lu(lu) => lu.solve(rhs).expect("LU factor is invertible"),
        }
    }
}

fn lu_condition_estimate(lu: &LU<Complex64, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let diag: Vec<f64> = u.diagonal().iter().map(|z| z.norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `matrix * x = rhs` for a Hermitian `matrix`.
pub fn solve_hermitian(matrix: CMat, rhs: &CVec) -> Result<CVec> {
    Ok(HermitianSolver::new(matrix)?.solve(rhs))
}

/// `a (x) b` for column vectors.
pub fn kron(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm();
    if denom == 0.0 {
        a.norm()
    } else {
        (a - b).norm() / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_path_solves_spd_system() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(4.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(1.0, -1.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let b = CVec::from_vec(vec![ONE, Complex64::new(0.0, 2.0)]);
        let solver = HermitianSolver::new(a.clone()).unwrap();
        assert!(solver.is_cholesky());
        let x = solver.solve(&b);
        assert!((&a * x - b).norm() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_falls_back_to_lu() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), ONE * 2.0, ONE * 2.0, ONE],
        );
        let b = CVec::from_vec(vec![ONE, ONE]);
        let solver = HermitianSolver::new(a.clone()).unwrap();
        assert!(!solver.is_cholesky());
        assert!((&a * solver.solve(&b) - b).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CMat::zeros(3, 3);
        assert!(matches!(
            HermitianSolver::new(a),
            Err(Error::Factorization { .. })
        ));
    }

    #[test]
    fn kron_ordering_is_outer_major() {
        let a = CVec::from_vec(vec![ONE, ONE * 2.0]);
        let b = CVec::from_vec(vec![ONE, ONE * 10.0, ONE * 100.0]);
        let k = kron(&a, &b);
        let expect = [1.0, 10.0, 100.0, 2.0, 20.0, 200.0];
        for (z, e) in k.iter().zip(expect) {
            assert_eq!(z.re, e);
        }
    }
}
