//! Odd extension to the doubled torus [-1, 3) × 𝕋, the averaged operator
//! Δ_M = ∂ₓ² + M∂_y², and the conjugation w₀ = (1 - hQ∂_y²)v₀ with Q = b(x)m(hD_x).
//!
//! Grids on the doubled torus are x_i = -1 + 4i/N_x with N_x = 2k, k odd, so that
//! x = ±1 are nodes and the kinks of ã² at x ∈ {0, 2} are not.

use std::f64::consts::PI;

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::dense::hermitian_eigenvalues;
use crate::error::{invalid, precondition, Result};
use crate::observability::ObservationRegion;
use crate::quadrature::simpson;

/// Dirichlet tolerance at x = ±1 relative to the field maximum.
pub const DIRICHLET_TOL: f64 = 1e-8;
/// Allowed mass outside the multiplier supports.
pub const LOCALIZATION_TOL: f64 = 1e-6;

/// Samples of f on x_i = -1 + 2i/k, i = 0..=k (k odd), times a uniform y-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletField {
    pub k: usize,
    pub ny: usize,
    /// Row-major in x, (k + 1) × ny.
    pub data: Vec<c64>,
}

impl DirichletField {
    pub fn from_fn(k: usize, ny: usize, f: impl Fn(f64, f64) -> c64) -> Result<Self> {
        check_k(k)?;
        let mut data = Vec::with_capacity((k + 1) * ny);
        for i in 0..=k {
            let x = -1.0 + 2.0 * i as f64 / k as f64;
            for l in 0..ny {
                data.push(f(x, 2.0 * PI * l as f64 / ny as f64));
            }
        }
        Ok(Self { k, ny, data })
    }

    /// L²((-1,1) × 𝕋) by the trapezoid rule in x (endpoint values vanish).
    pub fn norm(&self) -> f64 {
        let dx = 2.0 / self.k as f64;
        let dy = 2.0 * PI / self.ny as f64;
        let mut s = 0.0;
        for i in 0..=self.k {
            let w = if i == 0 || i == self.k { 0.5 } else { 1.0 };
            s += w * self.data[i * self.ny..(i + 1) * self.ny].iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        (s * dx * dy).sqrt()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 || k % 2 == 0 {
        return Err(invalid(format!("k = {k} must be odd and >= 3 (N_x = 2k avoids x = 0, 2)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    OddExtended,
    Generic,
}

/// Samples on the doubled torus, N_x = 2k points in x.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<c64>,
    pub parity: Parity,
}

impl ExtendedField {
    pub fn zeros(nx: usize, ny: usize) -> Result<Self> {
        if nx % 2 != 0 {
            return Err(invalid("N_x must be even"));
        }
        check_k(nx / 2)?;
        Ok(Self {
            nx,
            ny,
            data: vec![c64::new(0.0, 0.0); nx * ny],
            parity: Parity::Generic,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        -1.0 + 4.0 * i as f64 / self.nx as f64
    }

    pub fn dx(&self) -> f64 {
        4.0 / self.nx as f64
    }

    pub fn at(&self, i: usize, l: usize) -> c64 {
        self.data[i * self.ny + l]
    }

    /// Periodic L² norm on [-1, 3) × 𝕋.
    pub fn norm(&self) -> f64 {
        l2(&self.data, self.dx(), 2.0 * PI / self.ny as f64)
    }

    /// max |f̃(x, y) + f̃(2 - x, y)|.
    pub fn parity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nx {
            let j = (self.nx - i) % self.nx;
            for l in 0..self.ny {
                worst = worst.max((self.at(i, l) + self.at(j, l)).norm());
            }
        }
        worst
    }
}

fn l2(data: &[c64], dx: f64, dy: f64) -> f64 {
    (data.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dy).sqrt()
}

/// f̃ = f on |x| ≤ 1 and f̃(x, y) = -f(2 - x, y) on 1 ≤ x ≤ 3.
pub fn odd_extend(f: &DirichletField) -> Result<ExtendedField> {
    let k = f.k;
    let ny = f.ny;
    let scale = f.data.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let edge = f.data[..ny]
        .iter()
        .chain(&f.data[k * ny..])
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if edge > DIRICHLET_TOL * scale {
        return Err(precondition(format!(
            "field does not vanish at x = ±1 (relative {:.2e})",
            edge / scale
        )));
    }
    let nx = 2 * k;
    let mut out = ExtendedField::zeros(nx, ny)?;
    for i in 0..nx {
        for l in 0..ny {
            // x_i = -1 + 2i/k; for i > k the mirror point 2 - x_i sits at index 2k - i
            out.data[i * ny + l] = if i <= k {
                f.data[i * ny + l]
            } else {
                -f.data[(nx - i) * ny + l]
            };
        }
    }
    out.parity = Parity::OddExtended;
    Ok(out)
}

/// Random Dirichlet field Σ c_{m,n} sin(mπ(x+1)/2) e^{iny} with |n| ≤ n_max, m ≤ m_max.
pub fn random_dirichlet_field(k: usize, ny: usize, m_max: usize, n_max: i64, seed: u64) -> Result<DirichletField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::new();
    for m in 1..=m_max {
        for n in -n_max..=n_max {
            coeffs.push((m, n, c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    DirichletField::from_fn(k, ny, |x, y| {
        coeffs
            .iter()
            .map(|&(m, n, c)| c * (m as f64 * PI * (x + 1.0) / 2.0).sin() * c64::from_polar(1.0, n as f64 * y))
            .sum()
    })
}

/// M = ½∫_{-1}^1 |x|^{2γ} = 1/(2γ+1).
pub fn mean_value(gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0) {
        return Err(invalid("gamma must be >= 1"));
    }
    Ok(1.0 / (2.0 * gamma + 1.0))
}

/// ã(x)² on the doubled torus: |x|^{2γ} on [-1,1], |2-x|^{2γ} on [1,3], 4-periodic.
pub fn extended_coefficient_sq(gamma: f64, x: f64) -> f64 {
    let z = (x + 1.0).rem_euclid(4.0) - 1.0;
    let r = if z <= 1.0 { z.abs() } else { (2.0 - z).abs() };
    r.powf(2.0 * gamma)
}

/// G(x) = ∫_{-1}^x (M - ã²), closed form.
fn primitive_real(gamma: f64, x: f64) -> f64 {
    let m = 1.0 / (2.0 * gamma + 1.0);
    let g = |x: f64| m * (x + 1.0) - (x.signum() * x.abs().powf(2.0 * gamma + 1.0) + 1.0) * m;
    if x <= 1.0 {
        g(x)
    } else {
        -g(2.0 - x)
    }
}

/// b(x) = (1/2i)∫_{-1}^x (M - ã(z)²) dz on [-1, 3].
pub fn primitive_b(gamma: f64, x: f64) -> Result<c64> {
    if !(gamma >= 1.0) {
        return Err(invalid("gamma must be >= 1"));
    }
    if !(-1.0..=3.0).contains(&x) {
        return Err(invalid(format!("x = {x} outside [-1, 3]")));
    }
    Ok(c64::new(0.0, -0.5 * primitive_real(gamma, x)))
}

/// Composite Simpson primitive with `nodes` intervals per unit length; the oracle for [`primitive_b`].
pub fn primitive_b_quadrature(gamma: f64, x: f64, nodes: usize) -> Result<c64> {
    let m = mean_value(gamma)?;
    let len = x + 1.0;
    if len <= 0.0 {
        return Ok(c64::new(0.0, 0.0));
    }
    // split at the kinks so Simpson sees smooth pieces
    let mut cuts = vec![-1.0];
    for c in [0.0, 1.0, 2.0] {
        if c < x {
            cuts.push(c);
        }
    }
    cuts.push(x);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b - a) * nodes as f64).ceil() as usize).max(2) * 2;
        let h = (b - a) / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| m - extended_coefficient_sq(gamma, a + i as f64 * h))
            .collect();
        acc += simpson(&vals, h);
    }
    Ok(c64::new(0.0, -0.5 * acc))
}

/// Dyadic 2D FFT helpers over the row-major (x, y) layout.
fn fft2(data: &mut [c64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (fx, fy) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    for row in data.chunks_mut(ny) {
        fy.process(row);
    }
    let mut col = vec![c64::new(0.0, 0.0); nx];
    for l in 0..ny {
        for i in 0..nx {
            col[i] = data[i * ny + l];
        }
        fx.process(&mut col);
        for i in 0..nx {
            data[i * ny + l] = col[i];
        }
    }
    if inverse {
        let s = 1.0 / (nx * ny) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

fn signed(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// (ξ, η) at FFT index (j, l); x has period 4, y period 2π.
fn frequency(j: usize, l: usize, nx: usize, ny: usize) -> (f64, f64) {
    (0.5 * PI * signed(j, nx), signed(l, ny))
}

fn apply_symbol(data: &[c64], nx: usize, ny: usize, sym: impl Fn(f64, f64) -> c64) -> Vec<c64> {
    let mut coeffs_hat = data.to_vec();
    fft2(&mut coeffs_hat, nx, ny, false);
    for j in 0..nx {
        for l in 0..ny {
            let (xi, eta) = frequency(j, l, nx, ny);
            coeffs_hat[j * ny + l] *= sym(xi, eta);
        }
    }
    fft2(&mut coeffs_hat, nx, ny, true);
    coeffs_hat
}

/// Localization multipliers ψ₁ on 1/4 < |ξ| < 4, ψ₂ on 1/8 < |ξ| < 8 (ψ₂ = 1 on supp ψ₁),
/// and χ₀ = 1 on |η| ≤ 1, 0 on |η| ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub psi1: CutoffProfile,
    pub psi2: CutoffProfile,
    pub chi0: CutoffProfile,
}

impl Default for Localization {
    fn default() -> Self {
        Self {
            psi1: CutoffProfile::smooth_bump([0.25, 4.0], [0.5, 2.0]).expect("static profile"),
            psi2: CutoffProfile::smooth_bump([0.125, 8.0], [0.25, 4.0]).expect("static profile"),
            chi0: CutoffProfile::symmetric(1.0, 2.0).expect("static profile"),
        }
    }
}

/// Smallest N_x = 2k (k odd) resolving |ξ| ≤ 8/h with a factor-two margin.
pub fn torus_points_for(h: f64) -> usize {
    let jmax = (8.0 / h / (0.5 * PI)).ceil() as usize;
    let mut k = 2 * jmax + 1;
    if k % 2 == 0 {
        k += 1;
    }
    2 * k
}

/// Random field ψ₁(hD_x)χ₀(h^ε D_y)g for a seeded white-noise g.
pub fn random_localized_field(h: f64, epsilon: f64, loc: &Localization, seed: u64) -> Result<ExtendedField> {
    let nx = torus_points_for(h);
    let eta_max = (2.0 * h.powf(-epsilon)).ceil() as usize;
    let ny = (4 * eta_max + 1).max(16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ExtendedField::zeros(nx, ny)?;
    for v in f.data.iter_mut() {
        *v = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let he = h.powf(epsilon);
    f.data = apply_symbol(&f.data, nx, ny, |xi, eta| {
        c64::new(loc.psi1.eval((h * xi).abs()) * loc.chi0.eval(he * eta), 0.0)
    });
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub h: f64,
    pub epsilon: f64,
    pub v0_norm: f64,
    pub r_before: f64,
    pub r_after: f64,
    /// ‖(h²Δ_M + 1)v₀‖, the averaged-equation residual before conjugation.
    pub r_averaged: f64,
    /// ‖w₀ - v₀‖ / ‖v₀‖.
    pub correction: f64,
    /// r_after / (r_before + h^{3-4ε}‖v₀‖).
    pub ratio: f64,
}

/// r_before = ‖(h²P_a + 1)v₀‖ and r_after = ‖(h²Δ_M + 1)w₀‖.
pub fn conjugated_residual(
    v0: &ExtendedField,
    gamma: f64,
    h: f64,
    epsilon: f64,
    loc: &Localization,
) -> Result<ResidualReport> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h must lie in (0, 1)"));
    }
    let m = mean_value(gamma)?;
    let (nx, ny) = (v0.nx, v0.ny);
    let dx = v0.dx();
    let dy = 2.0 * PI / ny as f64;
    let norm = v0.norm();
    if norm == 0.0 {
        return Err(precondition("v0 vanishes"));
    }
    let he = h.powf(epsilon);
    let outside = apply_symbol(&v0.data, nx, ny, |xi, eta| {
        c64::new(1.0 - loc.psi2.eval((h * xi).abs()) * loc.chi0.eval(he * eta).ceil().min(1.0), 0.0)
    });
    let leak = l2(&outside, dx, dy) / norm;
    if leak > LOCALIZATION_TOL {
        return Err(precondition(format!("v0 not localized: relative mass {leak:.2e} outside the multiplier supports")));
    }
    let a2: Vec<f64> = (0..nx).map(|i| extended_coefficient_sq(gamma, v0.x(i))).collect();
    let dxx = apply_symbol(&v0.data, nx, ny, |xi, _| c64::new(1.0 - h * h * xi * xi, 0.0));
    let dyy = apply_symbol(&v0.data, nx, ny, |_, eta| c64::new(-eta * eta, 0.0));
    let before: Vec<c64> = (0..nx * ny)
        .map(|p| dxx[p] + dyy[p] * (h * h * a2[p / ny]))
        .collect();
    // Q∂_y²v₀ = b(x)·m(hD_x)∂_y²v₀, m(ξ) = ψ₂(ξ)/ξ
    let mq = apply_symbol(&v0.data, nx, ny, |xi, eta| {
        let s = h * xi;
        if s == 0.0 {
            c64::new(0.0, 0.0)
        } else {
            c64::new(loc.psi2.eval(s.abs()) / s * (-eta * eta), 0.0)
        }
    });
    let b: Vec<c64> = (0..nx)
        .map(|i| primitive_b(gamma, v0.x(i)))
        .collect::<Result<_>>()?;
    let corr: Vec<c64> = (0..nx * ny).map(|p| b[p / ny] * mq[p] * h).collect();
    let w0: Vec<c64> = v0.data.iter().zip(&corr).map(|(v, c)| v - c).collect();
    let after = apply_symbol(&w0, nx, ny, |xi, eta| {
        c64::new(1.0 - h * h * xi * xi - h * h * m * eta * eta, 0.0)
    });
    let averaged = apply_symbol(&v0.data, nx, ny, |xi, eta| {
        c64::new(1.0 - h * h * xi * xi - h * h * m * eta * eta, 0.0)
    });
    let r_before = l2(&before, dx, dy);
    let r_after = l2(&after, dx, dy);
    Ok(ResidualReport {
        h,
        epsilon,
        v0_norm: norm,
        r_before,
        r_after,
        r_averaged: l2(&averaged, dx, dy),
        correction: l2(&corr, dx, dy) / norm,
        ratio: r_after / (r_before + h.powf(3.0 - 4.0 * epsilon) * norm),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub constant: f64,
    pub calibration_max: f64,
    pub rows: Vec<ResidualReport>,
    pub holds: bool,
}

/// Calibrates on `calibration` seeds, then checks r_after ≤ C(r_before + h^{3-4ε}‖v₀‖)
/// for every (h, seed) in the test set with the frozen constant `constant`.
pub fn residual_check(
    gamma: f64,
    epsilon: f64,
    hs: &[f64],
    calibration: &[u64],
    tests: &[u64],
    constant: f64,
) -> Result<ResidualCheck> {
    let loc = Localization::default();
    let mut calibration_max = 0.0f64;
    for &seed in calibration {
        for &h in hs {
            let v = random_localized_field(h, epsilon, &loc, seed)?;
            calibration_max = calibration_max.max(conjugated_residual(&v, gamma, h, epsilon, &loc)?.ratio);
        }
    }
    let mut rows = Vec::new();
    for &h in hs {
        for &seed in tests {
            let v = random_localized_field(h, epsilon, &loc, seed)?;
            rows.push(conjugated_residual(&v, gamma, h, epsilon, &loc)?);
        }
    }
    let holds = calibration_max <= constant && rows.iter().all(|r| r.ratio <= constant);
    Ok(ResidualCheck {
        constant,
        calibration_max,
        rows,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatTorusRow {
    pub h: f64,
    pub alpha: f64,
    pub window: usize,
    pub cost: f64,
}

/// Least eigenvalue of P_ω + h^{-2α}(1 - h²(ξ² + Mη²))² over e^{iξx}e^{iηy} on the
/// doubled torus with ψ(h²(ξ² + Mη²)) > 0. P_ω is block diagonal in ξ.
pub fn flat_torus_cost(
    region: &ObservationRegion,
    gamma: f64,
    h: f64,
    alpha: f64,
    psi: &CutoffProfile,
) -> Result<FlatTorusRow> {
    let m = mean_value(gamma)?;
    let t = h.powf(-2.0 * alpha);
    let lam_max = psi.support[1] / (h * h);
    let jmax = (lam_max.sqrt() / (0.5 * PI)).ceil() as i64;
    let nmax = (lam_max / m).sqrt().ceil() as i64;
    let mut best = f64::INFINITY;
    let mut window = 0;
    for j in -jmax..=jmax {
        let xi = 0.5 * PI * j as f64;
        let etas: Vec<i64> = (-nmax..=nmax)
            .filter(|&n| psi.eval(h * h * (xi * xi + m * (n * n) as f64)) > 0.0)
            .collect();
        if etas.is_empty() {
            continue;
        }
        window += etas.len();
        let d: Vec<f64> = etas
            .iter()
            .map(|&n| 1.0 - h * h * (xi * xi + m * (n * n) as f64))
            .collect();
        let a = faer::Mat::<c64>::from_fn(etas.len(), etas.len(), |p, q| {
            let diag = if p == q { t * d[p] * d[p] } else { 0.0 };
            region.fourier_factor(etas[p] - etas[q]) + c64::new(diag, 0.0)
        });
        best = best.min(hermitian_eigenvalues(&a)?[0]);
    }
    if window == 0 {
        return Err(precondition(format!("empty window at h = {h}")));
    }
    Ok(FlatTorusRow {
        h,
        alpha,
        window,
        cost: best,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatTorusCheck {
    pub rows: Vec<FlatTorusRow>,
    /// max/min of the α = 2 costs across h.
    pub spread: f64,
    pub stable: bool,
}

pub fn flat_torus_resolvent_check(
    region: &ObservationRegion,
    gamma: f64,
    hs: &[f64],
    psi: &CutoffProfile,
) -> Result<FlatTorusCheck> {
    let rows: Vec<FlatTorusRow> = hs
        .iter()
        .map(|&h| flat_torus_cost(region, gamma, h, 2.0, psi))
        .collect::<Result<_>>()?;
    let hi = rows.iter().map(|r| r.cost).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.cost).fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    Ok(FlatTorusCheck {
        stable: lo > 0.0 && spread <= 2.0,
        rows,
        spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::default_window;

    #[test]
    fn extension_norm_identity_on_sine() {
        let f = DirichletField::from_fn(101, 8, |x, _| c64::new((PI * (x + 1.0) / 2.0).sin(), 0.0)).unwrap();
        let e = odd_extend(&f).unwrap();
        assert!((e.norm() / f.norm() - 2f64.sqrt()).abs() < 1e-10);
        assert!(e.parity_defect() < 1e-12);
    }

    #[test]
    fn extension_of_zero_and_rejections() {
        let z = DirichletField::from_fn(11, 4, |_, _| c64::new(0.0, 0.0)).unwrap();
        assert!(odd_extend(&z).unwrap().data.iter().all(|v| v.norm() == 0.0));
        let bad = DirichletField::from_fn(11, 4, |_, _| c64::new(1.0, 0.0)).unwrap();
        assert!(odd_extend(&bad).is_err());
        assert!(DirichletField::from_fn(10, 4, |_, _| c64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn seam_derivatives_match() {
        for k in [51usize, 101] {
            let f = DirichletField::from_fn(k, 1, |x, _| c64::new((PI * (x + 1.0) / 2.0).sin() * (1.0 + x), 0.0)).unwrap();
            let e = odd_extend(&f).unwrap();
            let h = 2.0 / k as f64;
            let left = (3.0 * e.at(k, 0) - 4.0 * e.at(k - 1, 0) + e.at(k - 2, 0)) / (2.0 * h);
            let right = (-3.0 * e.at(k, 0) + 4.0 * e.at(k + 1, 0) - e.at(k + 2, 0)) / (2.0 * h);
            // exact derivative at x = 1: d/dx[sin(π(x+1)/2)(1+x)] = -π
            assert!((left - right).norm() < 1e-12);
            assert!((left.re + PI).abs() < 20.0 * h * h);
        }
    }

    #[test]
    fn mean_values() {
        assert!((mean_value(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mean_value(2.0).unwrap() - 0.2).abs() < 1e-15);
        for g in [1.0, 2.0, 3.0] {
            let n = 40000;
            let h = 4.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| extended_coefficient_sq(g, -1.0 + i as f64 * h)).collect();
            let q = 0.25 * simpson(&v, h);
            assert!((q - mean_value(g).unwrap()).abs() < 1e-10, "{q}");
        }
    }

    #[test]
    fn primitive_b_values() {
        for g in [1.0, 2.0, 3.0] {
            assert!(primitive_b(g, -1.0).unwrap().norm() < 1e-15);
            assert!(primitive_b(g, 3.0).unwrap().norm() < 1e-10);
        }
        assert!(primitive_b(1.0, 0.0).unwrap().norm() < 1e-15);
        for &x in &[-0.7, 0.2, 0.9] {
            let closed = c64::new(0.0, -0.5) * ((x + 1.0) / 3.0 - (x * x * x + 1.0) / 3.0);
            assert!((primitive_b(1.0, x).unwrap() - closed).norm() < 1e-14);
        }
    }

    #[test]
    fn primitive_b_matches_quadrature_and_derivative() {
        for g in [1.0, 1.5, 3.0] {
            let mut worst = 0.0f64;
            let mut peak = (0.0f64, 0.0f64);
            for i in 0..=400 {
                let x = -1.0 + i as f64 / 100.0;
                let a = primitive_b(g, x).unwrap();
                let b = primitive_b_quadrature(g, x, 1000).unwrap();
                worst = worst.max((a - b).norm());
                peak.0 = peak.0.max(a.norm());
                peak.1 = peak.1.max(b.norm());
            }
            assert!(worst < 1e-8 && (peak.0 - peak.1).abs() < 1e-8);
            let m = mean_value(g).unwrap();
            let d = 1e-4;
            for &x in &[-0.5, 0.3, 1.7, 2.5] {
                let fd = (primitive_b(g, x + d).unwrap() - primitive_b(g, x - d).unwrap()) / (2.0 * d);
                let want = c64::new(0.0, -0.5) * (m - extended_coefficient_sq(g, x));
                assert!((fd - want).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_frequency_eigenfield_has_no_correction() {
        let h = 1.0 / 8.0;
        let nx = torus_points_for(h);
        let mut v = ExtendedField::zeros(nx, 16).unwrap();
        // ξ = 1/h exactly: j = 4/(πh)... use the nearest lattice point and compare both residuals
        let xi = 0.5 * PI * (1.0 / h / (0.5 * PI)).round();
        for i in 0..nx {
            for l in 0..16 {
                v.data[i * 16 + l] = c64::from_polar(1.0, xi * v.x(i));
            }
        }
        let r = conjugated_residual(&v, 1.0, h, 0.1, &Localization::default()).unwrap();
        assert!(r.correction < 1e-14);
        assert!((r.r_after - r.r_before).abs() < 1e-10 * r.v0_norm);
    }

    #[test]
    fn correction_is_small_and_residual_bounded() {
        let loc = Localization::default();
        let h = 1.0 / 32.0;
        let v = random_localized_field(h, 0.1, &loc, 3).unwrap();
        let r = conjugated_residual(&v, 1.0, h, 0.1, &loc).unwrap();
        assert!(r.correction < 10.0 * h.powf(1.0 - 0.2));
        assert!(r.r_after / r.v0_norm < r.r_before / r.v0_norm + 10.0 * h.powf(3.0 - 0.4));
    }

    #[test]
    fn flat_torus_full_region_and_collapse() {
        let psi = default_window();
        let full = flat_torus_cost(&ObservationRegion::full(), 1.0, 0.125, 2.0, &psi).unwrap();
        assert!(full.cost >= 1.0 - 1e-12);
        let strip = ObservationRegion::new(1.0, 1.0 + PI).unwrap();
        let chk = flat_torus_resolvent_check(&strip, 1.0, &[0.125, 0.0625], &psi).unwrap();
        assert!(chk.rows.iter().all(|r| r.cost > 0.0));
    }
}
