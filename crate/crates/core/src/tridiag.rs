//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for eigenvalues
//! and inverse iteration for eigenvectors.

use crate::error::{invalid, GrushinError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

const MAX_BISECTION_STEPS: usize = 256;
const MAX_INVERSE_STEPS: usize = 12;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("empty tridiagonal matrix"));
        }
        if off.len() + 1 != diag.len() {
            return Err(invalid(format!(
                "off-diagonal length {} does not match diagonal length {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite tridiagonal entry"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn pivot_floor(&self) -> f64 {
        let scale = self
            .off
            .iter()
            .map(|e| e * e)
            .fold(1.0, f64::max);
        scale * f64::MIN_POSITIVE / f64::EPSILON
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) to relative tolerance `rel_tol`.
    pub fn eigenvalue(&self, k: usize, rel_tol: f64) -> Result<f64> {
        if k >= self.len() {
            return Err(invalid(format!(
                "eigenvalue index {k} out of range for size {}",
                self.len()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        let abs_floor = 2.0 * self.pivot_floor();
        for _ in 0..MAX_BISECTION_STEPS {
            let width = hi - lo;
            if width <= rel_tol * lo.abs().max(hi.abs()) || width <= abs_floor {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(GrushinError::NoConvergence(format!(
            "bisection for eigenvalue {k} stalled in [{lo}, {hi}]"
        )))
    }

    /// Unit-norm eigenvector for the eigenvalue `lambda`, by inverse iteration.
    pub fn inverse_iteration(&self, lambda: f64, against: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let lu = TridiagonalLu::factor(self, lambda);
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.37 * ((i as f64) * 0.618_034).sin())
            .collect();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs());
        let tol = 16.0 * (n as f64).sqrt() * f64::EPSILON * scale.max(1.0) + 4e-12 * lambda.abs();
        for step in 0..MAX_INVERSE_STEPS {
            lu.solve(&mut x);
            for v in against {
                let d: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= d * vi);
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(GrushinError::NoConvergence(
                    "inverse iteration produced a degenerate vector".into(),
                ));
            }
            x.iter_mut().for_each(|v| *v /= norm);
            let tx = self.matvec(&x);
            let resid = tx
                .iter()
                .zip(&x)
                .map(|(t, v)| (t - lambda * v).powi(2))
                .sum::<f64>()
                .sqrt();
            if resid <= tol && step >= 1 {
                return Ok(x);
            }
        }
        Err(GrushinError::NoConvergence(format!(
            "inverse iteration for eigenvalue {lambda} did not reach residual {tol:.1e}"
        )))
    }

    /// The `k` smallest eigenpairs with unit Euclidean eigenvectors, ascending.
    pub fn smallest_eigenpairs(&self, k: usize, rel_tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let k = k.min(self.len());
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for j in 0..k {
            let lambda = self.eigenvalue(j, rel_tol)?;
            // orthogonalize only against numerically close predecessors
            let close: Vec<Vec<f64>> = out
                .iter()
                .filter(|(mu, _)| (lambda - mu).abs() <= 1e-6 * lambda.abs().max(1.0))
                .map(|(_, v)| v.clone())
                .collect();
            let v = self.inverse_iteration(lambda, &close)?;
            out.push((lambda, v));
        }
        Ok(out)
    }
}

/// LU factorization of a shifted tridiagonal matrix with partial pivoting.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON
            * t.diag
                .iter()
                .chain(t.off.iter())
                .fold(0.0f64, |a, v| a.max(v.abs()))
                .max(f64::MIN_POSITIVE);
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = tiny.copysign(*v);
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in 0..n {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            let got = t.eigenvalue(k, 1e-14).unwrap();
            assert!((got - exact).abs() < 1e-12, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn sturm_count_brackets() {
        let t = laplacian(10);
        assert_eq!(t.sturm_count(-1.0), 0);
        assert_eq!(t.sturm_count(5.0), 10);
        let l3 = t.eigenvalue(3, 1e-14).unwrap();
        assert_eq!(t.sturm_count(l3 - 1e-9), 3);
        assert_eq!(t.sturm_count(l3 + 1e-9), 4);
    }

    #[test]
    fn eigenvectors_orthonormal_with_small_residual() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.3).sin()).collect();
        let t = SymTridiagonal::new(diag, vec![-1.0; n - 1]).unwrap();
        let pairs = t.smallest_eigenpairs(6, 1e-14).unwrap();
        for (i, (li, vi)) in pairs.iter().enumerate() {
            let r: f64 = t
                .matvec(vi)
                .iter()
                .zip(vi)
                .map(|(a, b)| (a - li * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-9);
            for (lj, vj) in pairs.iter().skip(i + 1) {
                assert!(lj > li);
                let d: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
                assert!(d.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pivoting_solver_handles_indefinite_shift() {
        let t = SymTridiagonal::new(vec![1.0, -3.0, 0.5, 2.0], vec![4.0, 0.1, -2.0]).unwrap();
        let lu = TridiagonalLu::factor(&t, 0.25);
        let x_true = vec![1.0, -2.0, 0.5, 3.0];
        let mut b: Vec<f64> = t
            .matvec(&x_true)
            .iter()
            .zip(&x_true)
            .map(|(a, x)| a - 0.25 * x)
            .collect();
        lu.solve(&mut b);
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
    }
}
