//! Functional calculus on the truncated eigenbasis.
//!
//! States are coefficient vectors aligned with `SpectralBasis::pairs`; every
//! propagator is a diagonal multiplier. Physical samples live on the basis x-grid
//! times a uniform y-grid of [0, 2π), with the basis functions φ_{m,n}(x)e^{iny}/√(2π).

use std::f64::consts::PI;

use num_complex::Complex64 as c64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{invalid, precondition, Result};
use crate::spectral::SpectralBasis;

/// Relative round-trip residual above which `expand` warns.
pub const TRUNCATION_WARN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub basis_id: u64,
    pub coeffs: Vec<c64>,
}

impl StateVector {
    pub fn zeros(basis: &SpectralBasis) -> Self {
        Self {
            basis_id: basis.id(),
            coeffs: vec![c64::new(0.0, 0.0); basis.len()],
        }
    }

    /// The basis element with index `j`.
    pub fn unit(basis: &SpectralBasis, j: usize) -> Result<Self> {
        if j >= basis.len() {
            return Err(invalid(format!("mode index {j} outside basis of size {}", basis.len())));
        }
        let mut s = Self::zeros(basis);
        s.coeffs[j] = c64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_coeffs(basis: &SpectralBasis, coeffs: Vec<c64>) -> Result<Self> {
        let s = Self {
            basis_id: basis.id(),
            coeffs,
        };
        s.check(basis)?;
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn check(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(precondition("state belongs to a different basis"));
        }
        if self.coeffs.len() != basis.len() {
            return Err(precondition(format!(
                "state has {} coefficients, basis has {}",
                self.coeffs.len(),
                basis.len()
            )));
        }
        if self.coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(invalid("state has non-finite coefficients"));
        }
        Ok(())
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn map(&self, f: impl Fn(usize, c64) -> c64) -> StateVector {
        StateVector {
            basis_id: self.basis_id,
            coeffs: self.coeffs.iter().enumerate().map(|(j, c)| f(j, *c)).collect(),
        }
    }
}

/// Complex samples on (basis x-grid) × (uniform y-grid), row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<c64>,
}

impl Field2D {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![c64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn from_fn(xs: &[f64], ny: usize, f: impl Fn(f64, f64) -> c64) -> Self {
        let ys = y_points(ny);
        let mut data = Vec::with_capacity(xs.len() * ny);
        for &x in xs {
            data.extend(ys.iter().map(|&y| f(x, y)));
        }
        Self {
            nx: xs.len(),
            ny,
            data,
        }
    }

    pub fn at(&self, i: usize, l: usize) -> c64 {
        self.data[i * self.ny + l]
    }

    /// Discrete L² norm with x-spacing `hx`.
    pub fn l2_norm(&self, hx: f64) -> f64 {
        let dy = 2.0 * PI / self.ny as f64;
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * hx * dy).sqrt()
    }
}

pub fn y_points(ny: usize) -> Vec<f64> {
    (0..ny).map(|l| 2.0 * PI * l as f64 / ny as f64).collect()
}

fn wrap(n: i64, ny: usize) -> usize {
    n.rem_euclid(ny as i64) as usize
}

fn check_y_resolution(basis: &SpectralBasis, ny: usize) -> Result<()> {
    let need = 2 * basis.max_abs_n() as usize + 1;
    if ny < need {
        return Err(precondition(format!(
            "y-grid of {ny} points aliases modes up to |n| = {}; need at least {need}",
            basis.max_abs_n()
        )));
    }
    Ok(())
}

/// Coefficients a_{m,n} = ⟨u, φ_{m,n}e^{iny}/√(2π)⟩ by the grid quadrature.
pub fn expand(field: &Field2D, basis: &SpectralBasis) -> Result<StateVector> {
    let state = project(field, basis)?;
    let norm = field.l2_norm(basis.grid().spacing());
    if norm > 0.0 {
        let back = synthesize(&state, basis, field.ny)?;
        let diff = Field2D {
            nx: field.nx,
            ny: field.ny,
            data: field.data.iter().zip(&back.data).map(|(a, b)| a - b).collect(),
        };
        let residual = diff.l2_norm(basis.grid().spacing()) / norm;
        if residual > TRUNCATION_WARN {
            log::warn!("expand: relative truncation residual {residual:.3e} exceeds {TRUNCATION_WARN}");
        }
    }
    Ok(state)
}

fn project(field: &Field2D, basis: &SpectralBasis) -> Result<StateVector> {
    let nx = basis.grid().len();
    if field.nx != nx {
        return Err(precondition(format!(
            "field has {} x-samples, basis grid has {nx}",
            field.nx
        )));
    }
    check_y_resolution(basis, field.ny)?;
    let ny = field.ny;
    let fft = FftPlanner::new().plan_fft_forward(ny);
    let mut rows = field.data.clone();
    let exec = basis.options().exec;
    exec.for_each_chunk_mut(&mut rows, ny, |_, row| fft.process(row));
    let weight = basis.grid().spacing() * (2.0 * PI / ny as f64) / (2.0 * PI).sqrt();
    let coeffs = exec.map_slice(basis.pairs(), |p| {
        let col = wrap(p.n, ny);
        let s: c64 = p
            .eigenfunction
            .iter()
            .enumerate()
            .map(|(i, phi)| rows[i * ny + col] * *phi)
            .sum();
        s * weight
    });
    Ok(StateVector {
        basis_id: basis.id(),
        coeffs,
    })
}

/// Samples of Σ a_{m,n} φ_{m,n}(x) e^{iny}/√(2π) on the basis grid × `ny` y-points.
pub fn synthesize(state: &StateVector, basis: &SpectralBasis, ny: usize) -> Result<Field2D> {
    state.check(basis)?;
    check_y_resolution(basis, ny)?;
    let nx = basis.grid().len();
    let fft = FftPlanner::new().plan_fft_inverse(ny);
    let mut field = Field2D::zeros(nx, ny);
    let norm = 1.0 / (2.0 * PI).sqrt();
    basis.options().exec.for_each_chunk_mut(&mut field.data, ny, |i, row| {
        for (p, a) in basis.pairs().iter().zip(&state.coeffs) {
            row[wrap(p.n, ny)] += a * (p.eigenfunction[i] * norm);
        }
        fft.process(row);
    });
    Ok(field)
}

/// Entrywise multiplication of coefficients by g(λ²).
pub fn apply_spectral_multiplier(
    basis: &SpectralBasis,
    state: &StateVector,
    g: impl Fn(f64) -> f64,
) -> Result<StateVector> {
    state.check(basis)?;
    let pairs = basis.pairs();
    let out = state.map(|j, c| c * g(pairs[j].lambda_sq));
    out.check(basis)?;
    Ok(out)
}

/// Multiplies coefficient (m, n) by χ₀(scale·n).
pub fn fourier_y_cutoff(
    basis: &SpectralBasis,
    state: &StateVector,
    chi0: &CutoffProfile,
    scale: f64,
) -> Result<StateVector> {
    state.check(basis)?;
    let pairs = basis.pairs();
    Ok(state.map(|j, c| c * chi0.eval(scale * pairs[j].n as f64)))
}

/// Telescoping split by y-frequency: with decreasing scales s₁ > s₂ > … the pieces are
/// χ₀(s₁n)v, (χ₀(s₂n) - χ₀(s₁n))v, …, (1 - χ₀(s_k n))v. They sum to v exactly.
pub fn y_frequency_decomposition(
    basis: &SpectralBasis,
    state: &StateVector,
    chi0: &CutoffProfile,
    scales: &[f64],
) -> Result<Vec<StateVector>> {
    state.check(basis)?;
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("decomposition scales must be strictly decreasing"));
    }
    let pairs = basis.pairs();
    let mut pieces = Vec::with_capacity(scales.len() + 1);
    let mut prev = vec![0.0; pairs.len()];
    for &s in scales {
        let cur: Vec<f64> = pairs.iter().map(|p| chi0.eval(s * p.n as f64)).collect();
        pieces.push(state.map(|j, c| c * (cur[j] - prev[j])));
        prev = cur;
    }
    pieces.push(state.map(|j, c| c * (1.0 - prev[j])));
    Ok(pieces)
}

/// λ^{2s} for each basis pair.
pub fn frequencies(basis: &SpectralBasis, s: u32) -> Vec<f64> {
    basis
        .pairs()
        .iter()
        .map(|p| p.lambda_sq.powi(s as i32))
        .collect()
}

/// Coefficients times e^{-itλ^{2s}}.
pub fn schrodinger_step(basis: &SpectralBasis, state: &StateVector, t: f64, s: u32) -> Result<StateVector> {
    state.check(basis)?;
    let w = frequencies(basis, s);
    Ok(state.map(|j, c| c * c64::from_polar(1.0, -t * w[j])))
}

/// Coefficients times e^{-tλ^{2s}}.
pub fn heat_step(basis: &SpectralBasis, state: &StateVector, t: f64, s: u32) -> Result<StateVector> {
    if !(t >= 0.0) {
        return Err(invalid(format!("heat step needs t >= 0, got {t}")));
    }
    state.check(basis)?;
    let w = frequencies(basis, s);
    Ok(state.map(|j, c| c * (-t * w[j]).exp()))
}

/// Boundary values of a basis function through the discrete Dirichlet ghost-node relation:
/// the first FD row of (-D² + n²|x|^{2γ} - λ²)φ = 0 fixes φ₀ = 2φ₁ - φ₂ + h²(V₁ - λ²)φ₁.
fn ghost_values(basis: &SpectralBasis, j: usize) -> (f64, f64) {
    let p = &basis.pairs()[j];
    let g = basis.grid();
    let h = g.spacing();
    let xs = g.points();
    let f = &p.eigenfunction;
    let n = f.len();
    let gamma = basis.params().gamma;
    let v = |x: f64| (p.n as f64).powi(2) * x.abs().powf(2.0 * gamma);
    let at = |k: usize| if k < n { f[k] } else { 0.0 };
    let left = 2.0 * at(0) - at(1) + h * h * (v(xs[0]) - p.lambda_sq) * at(0);
    let right = if n >= 2 {
        2.0 * f[n - 1] - f[n - 2] + h * h * (v(xs[n - 1]) - p.lambda_sq) * f[n - 1]
    } else {
        left
    };
    (left, right)
}

/// max over y of |((-Δ_γ)^k u)(±1, y)|.
pub fn boundary_trace(basis: &SpectralBasis, state: &StateVector, k: u32) -> Result<f64> {
    state.check(basis)?;
    let ny = (4 * (basis.max_abs_n() as usize + 1)).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_inverse(ny);
    let mut left = vec![c64::new(0.0, 0.0); ny];
    let mut right = left.clone();
    let norm = 1.0 / (2.0 * PI).sqrt();
    for (j, (p, a)) in basis.pairs().iter().zip(&state.coeffs).enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let (gl, gr) = ghost_values(basis, j);
        let w = a * p.lambda_sq.powi(k as i32) * norm;
        left[wrap(p.n, ny)] += w * gl;
        right[wrap(p.n, ny)] += w * gr;
    }
    fft.process(&mut left);
    fft.process(&mut right);
    Ok(left
        .iter()
        .chain(right.iter())
        .fold(0.0, |m, v| m.max(v.norm())))
}

/// Default spectral window ψ on the h²λ² axis: plateau [0.55, 1.9], support (0.5, 2).
pub fn default_window() -> CutoffProfile {
    CutoffProfile::smooth_bump([0.5, 2.0], [0.55, 1.9]).expect("static bump")
}

/// g(λ²) = ψ(h²λ²), the multiplier of ψ(h²Δ_γ) with ψ even.
pub fn window_multiplier(psi: &CutoffProfile, h: f64) -> impl Fn(f64) -> f64 + '_ {
    move |l2| psi.eval(h * h * l2)
}

/// χ₀ for the localization in D_y: one on |ζ| ≤ (2C₁)^{(γ+1)/2}, zero beyond twice that.
pub fn locdy_cutoff(c1: f64, gamma: f64) -> Result<CutoffProfile> {
    let c = (2.0 * c1).powf(0.5 * (gamma + 1.0));
    CutoffProfile::symmetric(c, 2.0 * c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocdyReport {
    pub h: f64,
    pub c1: f64,
    pub retained: usize,
    /// Largest |ψ(h²λ²)(1 - χ₀(h^{γ+1}n))| over the basis.
    pub max_residual: f64,
    /// Pairs in the window violating |n|^{2/(γ+1)} ≤ C₁λ².
    pub inequality_violations: usize,
}

/// Per-pair check that ψ(h²Δ_γ)(1 - χ₀(h^{γ+1}D_y)) vanishes on the basis.
pub fn locdy_check(basis: &SpectralBasis, psi: &CutoffProfile, h: f64, c1: f64) -> Result<LocdyReport> {
    let gamma = basis.params().gamma;
    let chi0 = locdy_cutoff(c1, gamma)?;
    let e = 2.0 / (gamma + 1.0);
    let mut report = LocdyReport {
        h,
        c1,
        retained: 0,
        max_residual: 0.0,
        inequality_violations: 0,
    };
    for p in basis.pairs() {
        let w = psi.eval(h * h * p.lambda_sq);
        if w == 0.0 {
            continue;
        }
        report.retained += 1;
        let r = (w * (1.0 - chi0.eval(h.powf(gamma + 1.0) * p.n as f64))).abs();
        report.max_residual = report.max_residual.max(r);
        if (p.n.unsigned_abs() as f64).powf(e) > c1 * p.lambda_sq * (1.0 + 1e-12) {
            report.inequality_violations += 1;
        }
    }
    Ok(report)
}

/// Classical RK4 for i a' = ω a from a(0) = 1, the single-mode oracle.
pub fn rk4_mode(omega: f64, t: f64, dt: f64) -> c64 {
    let steps = (t / dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let f = |a: c64| c64::new(0.0, -omega) * a;
    let mut a = c64::new(1.0, 0.0);
    for _ in 0..steps {
        let k1 = f(a);
        let k2 = f(a + k1 * (0.5 * dt));
        let k3 = f(a + k2 * (0.5 * dt));
        let k4 = f(a + k3 * dt);
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_basis, GrushinParams, Grid1D};

    fn basis() -> SpectralBasis {
        let p = GrushinParams::new(1.0, 1).unwrap();
        build_basis(&p, 8.0, &Grid1D::interior(64).unwrap()).unwrap()
    }

    #[test]
    fn basis_element_round_trip() {
        let b = basis();
        let j = b.pairs().iter().position(|p| p.n == 0 && p.m == 1).unwrap();
        let u = StateVector::unit(&b, j).unwrap();
        let f = synthesize(&u, &b, 256).unwrap();
        let back = expand(&f, &b).unwrap();
        assert!(back.distance(&u) < 1e-12);
    }

    #[test]
    fn zero_field_expands_to_zero() {
        let b = basis();
        let f = Field2D::zeros(b.grid().len(), 256);
        assert_eq!(expand(&f, &b).unwrap().norm(), 0.0);
    }

    #[test]
    fn rejects_aliasing_y_grid() {
        let b = basis();
        let f = Field2D::zeros(b.grid().len(), 4);
        assert!(expand(&f, &b).is_err());
    }

    #[test]
    fn multiplier_calculus_is_multiplicative() {
        let b = basis();
        let u = StateVector::from_coeffs(
            &b,
            (0..b.len()).map(|j| c64::new(1.0 / (j + 1) as f64, 0.5)).collect(),
        )
        .unwrap();
        let twice = apply_spectral_multiplier(&b, &apply_spectral_multiplier(&b, &u, |l| l).unwrap(), |l| l).unwrap();
        let once = apply_spectral_multiplier(&b, &u, |l| l * l).unwrap();
        assert!(twice.distance(&once) <= 1e-12 * once.norm());
        assert_eq!(apply_spectral_multiplier(&b, &u, |_| 1.0).unwrap(), u);
    }

    #[test]
    fn semigroup_laws() {
        let b = basis();
        let u = StateVector::from_coeffs(&b, vec![c64::new(0.3, -0.1); b.len()]).unwrap();
        let a = schrodinger_step(&b, &schrodinger_step(&b, &u, 0.3, 1).unwrap(), 0.7, 1).unwrap();
        let c = schrodinger_step(&b, &u, 1.0, 1).unwrap();
        assert!(a.distance(&c) < 1e-12);
        assert!((c.norm() - u.norm()).abs() < 1e-12);
        let h = heat_step(&b, &heat_step(&b, &u, 0.3, 1).unwrap(), 0.7, 1).unwrap();
        let g = heat_step(&b, &u, 1.0, 1).unwrap();
        assert!(h.distance(&g) < 1e-12);
        assert!(g.norm() <= u.norm());
        assert!(heat_step(&b, &u, -1.0, 1).is_err());
    }

    #[test]
    fn decomposition_reconstructs() {
        let b = basis();
        let u = StateVector::from_coeffs(&b, vec![c64::new(1.0, 1.0); b.len()]).unwrap();
        let chi = CutoffProfile::symmetric(1.0, 2.0).unwrap();
        let pieces = y_frequency_decomposition(&b, &u, &chi, &[0.5, 0.2, 0.05]).unwrap();
        let mut sum = StateVector::zeros(&b);
        for p in &pieces {
            for (s, c) in sum.coeffs.iter_mut().zip(&p.coeffs) {
                *s += c;
            }
        }
        assert!(sum.distance(&u) < 1e-14);
    }

    #[test]
    fn basis_elements_have_small_trace() {
        let b = basis();
        for j in 0..b.len() {
            let u = StateVector::unit(&b, j).unwrap();
            assert!(boundary_trace(&b, &u, 0).unwrap() < 1e-8);
        }
        assert_eq!(boundary_trace(&b, &StateVector::zeros(&b), 0).unwrap(), 0.0);
    }

    #[test]
    fn rk4_oracle_tracks_phase() {
        let a = rk4_mode(3.0, 1.0, 1e-4);
        assert!((a - c64::from_polar(1.0, -3.0)).norm() < 1e-12);
    }
}
