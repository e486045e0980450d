//! Thin wrappers over `faer` dense decompositions with crate errors.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use crate::error::{GrushinError, Result};

fn dense_err(what: &str, e: impl std::fmt::Debug) -> GrushinError {
    GrushinError::Dense(format!("{what}: {e:?}"))
}

/// Eigenvalues of a Hermitian matrix, ascending. Reads the lower triangle.
pub fn hermitian_eigenvalues(a: &Mat<c64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| dense_err("hermitian eigenvalues", e))
}

/// Eigenpairs of a Hermitian matrix, ascending; eigenvectors are the columns.
pub fn hermitian_eigen(a: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| dense_err("hermitian eigen", e))?;
    let values = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| dense_err("symmetric eigenvalues", e))
}

pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| dense_err("symmetric eigen", e))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues of a general real matrix.
pub fn general_eigenvalues(a: &Mat<f64>) -> Result<Vec<c64>> {
    a.eigenvalues().map_err(|e| dense_err("eigenvalues", e))
}

/// Eigenpairs of a general real matrix (complex eigenvectors as columns).
pub fn general_eigen(a: &Mat<f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let evd = a.eigen().map_err(|e| dense_err("eigen", e))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues of a general complex matrix.
pub fn complex_eigenvalues(a: &Mat<c64>) -> Result<Vec<c64>> {
    a.eigenvalues().map_err(|e| dense_err("complex eigenvalues", e))
}

/// Singular values, descending.
pub fn singular_values(a: &Mat<c64>) -> Result<Vec<f64>> {
    a.singular_values().map_err(|e| dense_err("singular values", e))
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &Mat<c64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub struct ComplexLu {
    lu: faer::linalg::solvers::PartialPivLu<c64>,
    n: usize,
}

impl ComplexLu {
    pub fn new(a: &Mat<c64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(GrushinError::Dense("LU of a non-square matrix".into()));
        }
        Ok(Self {
            lu: a.partial_piv_lu(),
            n: a.nrows(),
        })
    }

    pub fn solve(&self, rhs: &[c64]) -> Vec<c64> {
        let b = Mat::<c64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves A X = B for a block of right-hand sides.
    pub fn solve_mat(&self, rhs: &Mat<c64>) -> Mat<c64> {
        self.lu.solve(rhs)
    }

    /// Solves A^H x = rhs.
    pub fn solve_adjoint(&self, rhs: &[c64]) -> Vec<c64> {
        let mut b = Mat::<c64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_adjoint_in_place(b.as_mut());
        (0..self.n).map(|i| b[(i, 0)]).collect()
    }
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_eigenvalues_of_diagonal() {
        let a = Mat::<c64>::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new((3 - i) as f64, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let ev = hermitian_eigenvalues(&a).unwrap();
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let a = Mat::<c64>::from_fn(4, 4, |i, j| {
            c64::new(
                if i == j { 4.0 } else { 0.3 * (i as f64 - j as f64) },
                0.1 * (i + 2 * j) as f64,
            )
        });
        let lu = ComplexLu::new(&a).unwrap();
        let b: Vec<c64> = (0..4).map(|k| c64::new(k as f64, 1.0)).collect();
        let x = lu.solve(&b);
        for i in 0..4 {
            let r: c64 = (0..4).map(|j| a[(i, j)] * x[j]).sum();
            assert!((r - b[i]).norm() < 1e-12);
        }
        let y = lu.solve_adjoint(&b);
        for i in 0..4 {
            let r: c64 = (0..4).map(|j| a[(j, i)].conj() * y[j]).sum();
            assert!((r - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn general_eigenvalues_of_rotation() {
        let a = Mat::<f64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -1.0,
            (1, 0) => 1.0,
            _ => 0.0,
        });
        let mut ev = general_eigenvalues(&a).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - c64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - c64::new(0.0, 1.0)).norm() < 1e-12);
    }
}
