//! Damped wave ∂ₜ²u - Δ_γu + 𝟙_ω∂ₜu = 0 on the truncated eigenbasis.
//!
//! Coefficients are kept in energy coordinates a = Λu, v = ∂ₜu, so that
//! E = Σλ²|u_j|² + Σ|v_j|² is the Euclidean norm² and the generator reads
//! 𝒜 = [[0, Λ], [-Λ, -B]] with B = P_ω.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::dense::{complex_eigenvalues, hermitian_eigenvalues, singular_values, vec_norm, ComplexLu};
use crate::error::{invalid, precondition, GrushinError, Result};
use crate::exec::Exec;
use crate::observability::{omega_matrix, window_indices, ObservationRegion};
use crate::quadrature::{linear_fit, simpson};
use crate::spectral::SpectralBasis;

/// Resolvent norms above this count as a near-singular point.
pub const NEAR_SINGULAR: f64 = 1e12;
/// Eigenvalues with |Re| below this count as purely imaginary.
pub const IMAGINARY_AXIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DampedSystem {
    pub basis_id: u64,
    pub gamma: f64,
    /// λ_j = √(λ²_j), all positive.
    pub lambda: Vec<f64>,
    pub lambda_sq: Vec<f64>,
    pub damping: Mat<c64>,
    pub damping_norm: f64,
}

impl DampedSystem {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Dense 2N × 2N generator.
    pub fn generator(&self) -> Mat<c64> {
        let n = self.dim();
        Mat::<c64>::from_fn(2 * n, 2 * n, |i, j| {
            let z = c64::new(0.0, 0.0);
            match (i < n, j < n) {
                (true, true) => z,
                (true, false) => {
                    if j - n == i {
                        c64::new(self.lambda[i], 0.0)
                    } else {
                        z
                    }
                }
                (false, true) => {
                    if i - n == j {
                        c64::new(-self.lambda[j], 0.0)
                    } else {
                        z
                    }
                }
                (false, false) => -self.damping[(i - n, j - n)],
            }
        })
    }

    /// Energy coordinates (Λu₀, u₁) of Cauchy data given as basis coefficients.
    pub fn energy_coordinates(&self, u0: &[c64], u1: &[c64]) -> Result<Vec<c64>> {
        let n = self.dim();
        if u0.len() != n || u1.len() != n {
            return Err(invalid(format!("Cauchy data of length ({}, {}) for dimension {n}", u0.len(), u1.len())));
        }
        let mut out: Vec<c64> = u0.iter().zip(&self.lambda).map(|(c, l)| c * *l).collect();
        out.extend_from_slice(u1);
        Ok(out)
    }

    /// E(𝒜X) for X in energy coordinates.
    pub fn graph_energy(&self, x: &[c64]) -> f64 {
        let n = self.dim();
        let (a, v) = x.split_at(n);
        let bv = self.apply_damping(v);
        let top: f64 = v.iter().zip(&self.lambda).map(|(c, l)| (c * *l).norm_sqr()).sum();
        let bottom: f64 = (0..n).map(|j| (a[j] * self.lambda[j] + bv[j]).norm_sqr()).sum();
        top + bottom
    }

    fn apply_damping(&self, v: &[c64]) -> Vec<c64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.damping[(i, j)] * v[j]).sum())
            .collect()
    }
}

/// Generator on the basis with damping 𝟙_ω; `None` means no damping.
pub fn assemble_damped(basis: &SpectralBasis, region: Option<&ObservationRegion>) -> Result<DampedSystem> {
    if basis.is_empty() {
        return Err(precondition("damped system on an empty basis"));
    }
    let n = basis.len();
    let lambda_sq = basis.lambda_sq();
    if lambda_sq.iter().any(|l| *l <= 0.0) {
        return Err(precondition("energy coordinates need λ² > 0"));
    }
    let (damping, damping_norm) = match region {
        None => (Mat::<c64>::zeros(n, n), 0.0),
        Some(r) => {
            let b = omega_matrix(basis, r)?;
            let ev = hermitian_eigenvalues(&b)?;
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            if lo < -1e-10 || hi > 1.0 + 1e-10 {
                return Err(GrushinError::Dense(format!(
                    "damping spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]"
                )));
            }
            (b, hi)
        }
    };
    Ok(DampedSystem {
        basis_id: basis.id(),
        gamma: basis.params().gamma,
        lambda: lambda_sq.iter().map(|l| l.sqrt()).collect(),
        lambda_sq,
        damping,
        damping_norm,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_real: f64,
    pub min_abs_real: f64,
}

/// Dense eigenvalues of 𝒜 as (Re, Im) pairs sorted by Im.
pub fn generator_spectrum(sys: &DampedSystem) -> Result<SpectrumSummary> {
    let mut ev = complex_eigenvalues(&sys.generator())?;
    ev.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let max_real = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_abs_real = ev.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectrumSummary {
        eigenvalues: ev.iter().map(|z| [z.re, z.im]).collect(),
        max_real,
        min_abs_real,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// ⟨Bv, v⟩ at each stored time.
    pub dissipation: Vec<f64>,
    pub initial_graph_energy: f64,
    /// Largest relative one-step energy increase.
    pub max_step_increase: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolveSettings {
    pub t_end: f64,
    pub dt: f64,
    /// Store every `stride`-th step.
    pub stride: usize,
}

/// One step of the fourth-order Gauss-Legendre method, which for a linear
/// system is the (2,2) Padé map (I - dt𝒜/2 + dt²𝒜²/12)⁻¹(I + dt𝒜/2 + dt²𝒜²/12).
/// It is algebraically stable: energy never grows, and it is conserved without damping.
pub fn step_matrix(sys: &DampedSystem, dt: f64) -> Result<Mat<c64>> {
    let a = sys.generator();
    let a2 = &a * &a;
    let dim = a.nrows();
    let p = Mat::<c64>::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c64::new(id, 0.0) + a[(i, j)] * (0.5 * dt) + a2[(i, j)] * (dt * dt / 12.0)
    });
    let q = Mat::<c64>::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c64::new(id, 0.0) - a[(i, j)] * (0.5 * dt) + a2[(i, j)] * (dt * dt / 12.0)
    });
    Ok(ComplexLu::new(&q)?.solve_mat(&p))
}

fn matrix_power(m: &Mat<c64>, mut k: usize) -> Mat<c64> {
    let dim = m.nrows();
    let mut result = Mat::<c64>::identity(dim, dim);
    let mut base = m.to_owned();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Batch evolution (columns of `x0`, energy coordinates), sampled every `stride` steps.
/// `max_step_increase` is measured between stored samples.
fn evolve_batch(sys: &DampedSystem, x0: &Mat<c64>, settings: &EvolveSettings) -> Result<Vec<EnergyTrace>> {
    let n = sys.dim();
    if x0.nrows() != 2 * n {
        return Err(invalid("initial states have the wrong dimension"));
    }
    if !(settings.dt > 0.0 && settings.t_end > 0.0) {
        return Err(invalid("dt and T must be positive"));
    }
    let cols = x0.ncols();
    let steps = (settings.t_end / settings.dt).round().max(1.0) as usize;
    let dt = settings.t_end / steps as f64;
    let stride = settings.stride.clamp(1, steps);
    let one = step_matrix(sys, dt)?;
    let jump = matrix_power(&one, stride);
    let rest = steps % stride;
    let energy = |x: &Mat<c64>, j: usize| (0..2 * n).map(|i| x[(i, j)].norm_sqr()).sum::<f64>();
    let dissip = |x: &Mat<c64>| -> Vec<f64> {
        let v = x.subrows(n, n);
        let bv = &sys.damping * v;
        (0..cols)
            .map(|j| (0..n).map(|i| (v[(i, j)].conj() * bv[(i, j)]).re).sum())
            .collect()
    };
    let mut traces: Vec<EnergyTrace> = (0..cols)
        .map(|j| {
            let col: Vec<c64> = (0..2 * n).map(|i| x0[(i, j)]).collect();
            EnergyTrace {
                times: vec![0.0],
                energies: vec![energy(x0, j)],
                dissipation: Vec::new(),
                initial_graph_energy: sys.graph_energy(&col),
                max_step_increase: 0.0,
                dt,
            }
        })
        .collect();
    for (tr, d) in traces.iter_mut().zip(dissip(x0)) {
        tr.dissipation.push(d);
    }
    let mut x = x0.to_owned();
    let mut k = 0;
    while k < steps {
        let (m, adv) = if k + stride <= steps {
            (&jump, stride)
        } else {
            (&one, 1)
        };
        x = m * &x;
        k += adv;
        if adv == 1 && rest > 0 && k < steps {
            continue;
        }
        let d = dissip(&x);
        for j in 0..cols {
            let e = energy(&x, j);
            let last = *traces[j].energies.last().unwrap();
            if last > 0.0 {
                traces[j].max_step_increase = traces[j].max_step_increase.max((e - last) / last);
            }
            traces[j].times.push(k as f64 * dt);
            traces[j].energies.push(e);
            traces[j].dissipation.push(d[j]);
        }
    }
    if traces.iter().any(|t| t.energies.iter().any(|e| !e.is_finite())) {
        return Err(GrushinError::Integration("energy blew up; reduce dt".into()));
    }
    Ok(traces)
}

/// Evolves Cauchy data (u₀, u₁) given as basis coefficients.
pub fn evolve_damped(sys: &DampedSystem, u0: &[c64], u1: &[c64], settings: &EvolveSettings) -> Result<EnergyTrace> {
    let x = sys.energy_coordinates(u0, u1)?;
    let m = Mat::<c64>::from_fn(x.len(), 1, |i, _| x[i]);
    Ok(evolve_batch(sys, &m, settings)?.remove(0))
}

/// E(t₂) - E(t₁) + 2∫⟨Bv,v⟩ over the whole trace, by Simpson on uniform samples.
pub fn dissipation_defect(trace: &EnergyTrace) -> f64 {
    let n = trace.times.len();
    if n < 2 {
        return 0.0;
    }
    let h = trace.times[1] - trace.times[0];
    let integral = simpson(&trace.dissipation, h);
    trace.energies[n - 1] - trace.energies[0] + 2.0 * integral
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    /// Slope of log E^{1/2} against log t.
    pub slope: f64,
    /// max over the window of E^{1/2} t^{1/(2γ)} / E(𝒜U₀)^{1/2}.
    pub bound: f64,
    /// The local slope stayed below -1/γ over the last half of the window.
    pub exponential_tail: bool,
}

pub fn decay_fit(trace: &EnergyTrace, window: [f64; 2], gamma: f64) -> Result<DecayFit> {
    let [t1, t2] = window;
    if !(t1 >= 1.0 && t2 > t1) {
        return Err(invalid(format!("decay window {window:?} needs 1 <= t1 < t2")));
    }
    if trace.times.last().copied().unwrap_or(0.0) < t2 - 1e-9 {
        return Err(precondition(format!("trace ends before t = {t2}")));
    }
    if !(trace.initial_graph_energy > 0.0) {
        return Err(precondition("E(𝒜U₀) vanishes"));
    }
    let mut lt = Vec::new();
    let mut le = Vec::new();
    let mut bound = 0.0f64;
    for (&t, &e) in trace.times.iter().zip(&trace.energies) {
        if t < t1 - 1e-12 || t > t2 + 1e-12 || e <= 0.0 {
            continue;
        }
        lt.push(t.ln());
        le.push(0.5 * e.ln());
        bound = bound.max(e.sqrt() * t.powf(0.5 / gamma) / trace.initial_graph_energy.sqrt());
    }
    if lt.len() < 3 {
        return Err(precondition("fewer than three samples in the decay window"));
    }
    let (_, slope, _) = linear_fit(&lt, &le);
    let half = lt.len() / 2;
    let tail_slope = linear_fit(&lt[half..], &le[half..]).1;
    Ok(DecayFit {
        window,
        slope,
        bound,
        exponential_tail: tail_slope < -1.0 / gamma,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub gamma: f64,
    pub modes_scanned: usize,
    pub worst_mode: usize,
    pub short: DecayFit,
    pub long: DecayFit,
    /// long.bound / short.bound.
    pub stability: f64,
}

/// Scans u₀ = e_j (u₁ = 0) over the `count` lowest modes, picks the one with the
/// largest bound quantity on `short`, and compares it on `long`.
pub fn decay_scan(
    sys: &DampedSystem,
    count: usize,
    short: [f64; 2],
    long: [f64; 2],
    dt: f64,
) -> Result<DecayReport> {
    let n = sys.dim();
    let count = count.min(n);
    if count == 0 {
        return Err(precondition("no modes to scan"));
    }
    let x0 = Mat::<c64>::from_fn(2 * n, count, |i, j| {
        if i == j {
            c64::new(sys.lambda[j], 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let settings = EvolveSettings {
        t_end: long[1],
        dt,
        stride: (0.1 / dt).round().max(1.0) as usize,
    };
    let traces = evolve_batch(sys, &x0, &settings)?;
    let mut worst = 0;
    let mut best = f64::NEG_INFINITY;
    for (j, tr) in traces.iter().enumerate() {
        let f = decay_fit(tr, short, sys.gamma)?;
        if f.bound > best {
            best = f.bound;
            worst = j;
        }
    }
    let s = decay_fit(&traces[worst], short, sys.gamma)?;
    let l = decay_fit(&traces[worst], long, sys.gamma)?;
    Ok(DecayReport {
        gamma: sys.gamma,
        modes_scanned: count,
        worst_mode: worst,
        stability: l.bound / s.bound,
        short: s,
        long: l,
    })
}

/// (iλ - 𝒜) as a dense matrix.
#[cfg(test)]
fn shifted(sys: &DampedSystem, lambda: f64) -> Mat<c64> {
    let mut m = sys.generator();
    m.iter_mut_neg();
    let dim = m.nrows();
    for i in 0..dim {
        m[(i, i)] += c64::new(0.0, lambda);
    }
    m
}

#[cfg(test)]
trait NegInPlace {
    fn iter_mut_neg(&mut self);
}

#[cfg(test)]
impl NegInPlace for Mat<c64> {
    fn iter_mut_neg(&mut self) {
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                self[(i, j)] = -self[(i, j)];
            }
        }
    }
}

/// ‖(iλ - 𝒜)⁻¹‖ in the energy norm, by power iteration on R*R.
///
/// R is applied through the Schur complement K(λ) = Λ² - λ² + iλB:
/// v = K⁻¹(iλg - Λf), a = (f + Λv)/(iλ); R* uses v = -K^{-*}(iλg - Λf), a = (Λv - f)/(iλ).
pub fn resolvent_norm(sys: &DampedSystem, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda != 0.0) {
        return Err(invalid("λ must be finite and nonzero"));
    }
    let n = sys.dim();
    let il = c64::new(0.0, lambda);
    let k = Mat::<c64>::from_fn(n, n, |i, j| {
        let d = if i == j { sys.lambda_sq[i] - lambda * lambda } else { 0.0 };
        c64::new(d, 0.0) + il * sys.damping[(i, j)]
    });
    let lu = ComplexLu::new(&k)?;
    let lam = &sys.lambda;
    let apply = |x: &[c64], adjoint: bool| -> Vec<c64> {
        let (f, g) = x.split_at(n);
        let rhs: Vec<c64> = (0..n).map(|i| il * g[i] - f[i] * lam[i]).collect();
        let mut out = Vec::with_capacity(2 * n);
        if adjoint {
            let v: Vec<c64> = lu.solve_adjoint(&rhs).into_iter().map(|z| -z).collect();
            out.extend((0..n).map(|i| (v[i] * lam[i] - f[i]) / il));
            out.extend(v);
        } else {
            let v = lu.solve(&rhs);
            out.extend((0..n).map(|i| (f[i] + v[i] * lam[i]) / il));
            out.extend(v);
        }
        out
    };
    let dim = 2 * n;
    let mut x: Vec<c64> = (0..dim)
        .map(|i| c64::new(1.0 + (i as f64 * 0.618_033_988_7).fract(), 0.0))
        .collect();
    let nx = vec_norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let y = apply(&x, false);
        let s = vec_norm(&y);
        if !s.is_finite() || s > NEAR_SINGULAR {
            return Err(GrushinError::Dense(format!("iλ - 𝒜 nearly singular at λ = {lambda}")));
        }
        let z = apply(&y, true);
        let nz = vec_norm(&z);
        x = z.iter().map(|v| v / nz).collect();
        if (s - sigma).abs() <= 1e-12 * s {
            sigma = s;
            break;
        }
        sigma = s;
    }
    Ok(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventPeak {
    pub lambda: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub range: [f64; 2],
    pub min_abs_real: f64,
    pub peaks: Vec<ResolventPeak>,
    /// Largest peak per unit-width λ bin.
    pub envelope: Vec<ResolventPeak>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Resonant peaks of ‖(iλ - 𝒜)⁻¹‖ at λ = Im μ for generator eigenvalues μ in the range.
/// In each unit-width bin only the `per_bin` eigenvalues closest to the axis are evaluated.
pub fn resolvent_sweep(sys: &DampedSystem, range: [f64; 2], per_bin: usize, exec: Exec) -> Result<ResolventSweep> {
    let [lo, hi] = range;
    if !(lo >= 1.0 && hi > lo) {
        return Err(invalid(format!("sweep range {range:?} needs 1 <= lo < hi")));
    }
    let gen_spectrum = generator_spectrum(sys)?;
    if gen_spectrum.min_abs_real < IMAGINARY_AXIS_TOL && sys.damping_norm > 0.0 {
        log::warn!("generator has an eigenvalue within {IMAGINARY_AXIS_TOL} of the imaginary axis");
    }
    let mut inside: Vec<[f64; 2]> = gen_spectrum
        .eigenvalues
        .iter()
        .copied()
        .filter(|z| z[1] >= lo && z[1] <= hi)
        .collect();
    inside.sort_by(|a, b| a[1].floor().total_cmp(&b[1].floor()).then(a[0].abs().total_cmp(&b[0].abs())));
    let mut locs: Vec<f64> = Vec::new();
    let mut taken = 0;
    let mut bin = f64::NAN;
    for z in &inside {
        if z[1].floor() != bin {
            bin = z[1].floor();
            taken = 0;
        }
        if taken < per_bin.max(1) {
            locs.push(z[1]);
            taken += 1;
        }
    }
    locs.sort_by(f64::total_cmp);
    let norms = exec.map_slice(&locs, |&l| resolvent_norm(sys, l));
    let peaks: Vec<ResolventPeak> = locs
        .iter()
        .zip(norms)
        .map(|(&lambda, n)| n.map(|norm| ResolventPeak { lambda, norm }))
        .collect::<Result<_>>()?;
    let mut envelope: Vec<ResolventPeak> = Vec::new();
    for p in &peaks {
        let bin = p.lambda.floor();
        match envelope.last_mut() {
            Some(e) if e.lambda.floor() == bin => {
                if p.norm > e.norm {
                    *e = *p;
                }
            }
            _ => envelope.push(*p),
        }
    }
    let (intercept, slope, r2) = if envelope.len() >= 2 {
        let x: Vec<f64> = envelope.iter().map(|p| p.lambda.ln()).collect();
        let y: Vec<f64> = envelope.iter().map(|p| p.norm.ln()).collect();
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(ResolventSweep {
        range,
        min_abs_real: gen_spectrum.min_abs_real,
        peaks,
        envelope,
        slope,
        intercept,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhRow {
    pub h: f64,
    pub window: usize,
    pub sigma_min: f64,
    /// σ_min / h^{γ+1}.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhReport {
    pub rows: Vec<PhRow>,
    /// c fitted at the first (coarsest) h.
    pub c: f64,
    /// σ_min ≥ c·h^{γ+1}/2 at every other h.
    pub holds: bool,
}

/// σ_min of P_h = h²Λ² - 1 + i h^{γ+1} B restricted to the ψ-window.
pub fn ph_smallest_singular(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
    h: f64,
) -> Result<PhRow> {
    let idx = window_indices(basis, psi, h);
    if idx.is_empty() {
        return Err(precondition(format!("empty window at h = {h}")));
    }
    let sub = basis.select(&idx)?;
    let b = omega_matrix(&sub, region)?;
    let g1 = basis.params().gamma + 1.0;
    let damp = h.powf(g1);
    let lsq = sub.lambda_sq();
    let p = Mat::<c64>::from_fn(idx.len(), idx.len(), |i, j| {
        let diag = if i == j { h * h * lsq[i] - 1.0 } else { 0.0 };
        c64::new(diag, 0.0) + c64::new(0.0, damp) * b[(i, j)]
    });
    let sv = singular_values(&p)?;
    let sigma = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PhRow {
        h,
        window: idx.len(),
        sigma_min: sigma,
        ratio: sigma / damp,
    })
}

pub fn ph_companion(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
    hs: &[f64],
) -> Result<PhReport> {
    let rows: Vec<PhRow> = hs
        .iter()
        .map(|&h| ph_smallest_singular(basis, region, psi, h))
        .collect::<Result<_>>()?;
    let c = rows.first().map(|r| r.ratio).ok_or_else(|| invalid("no h values"))?;
    let holds = rows.iter().all(|r| r.ratio >= 0.5 * c);
    Ok(PhReport { rows, c, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observability::grid_for_cutoff;
    use crate::propagators::default_window;
    use crate::spectral::{build_basis, Grid1D, GrushinParams};
    use std::f64::consts::PI;

    fn basis(gamma: f64, cutoff: f64) -> SpectralBasis {
        let p = GrushinParams::new(gamma, 1).unwrap();
        build_basis(&p, cutoff, &Grid1D::interior(grid_for_cutoff(cutoff, 80)).unwrap()).unwrap()
    }

    fn strip() -> ObservationRegion {
        ObservationRegion::new(1.0, 1.0 + PI).unwrap()
    }

    fn first_mode(n: usize) -> (Vec<c64>, Vec<c64>) {
        let mut u0 = vec![c64::new(0.0, 0.0); n];
        u0[0] = c64::new(1.0, 0.0);
        (u0, vec![c64::new(0.0, 0.0); n])
    }

    #[test]
    fn undamped_conserves_energy() {
        let b = basis(1.0, 8.0);
        let sys = assemble_damped(&b, None).unwrap();
        let (u0, u1) = first_mode(sys.dim());
        let tr = evolve_damped(&sys, &u0, &u1, &EvolveSettings { t_end: 50.0, dt: 0.01, stride: 100 }).unwrap();
        let e0 = tr.energies[0];
        assert!(tr.energies.iter().all(|e| (e - e0).abs() < 1e-10 * e0));
        let fit = decay_fit(&tr, [1.0, 50.0], 1.0).unwrap();
        assert!(fit.slope.abs() < 1e-9);
    }

    #[test]
    fn full_circle_damping_is_identity() {
        let b = basis(1.0, 6.0);
        let sys = assemble_damped(&b, Some(&ObservationRegion::full())).unwrap();
        for i in 0..sys.dim() {
            for j in 0..sys.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sys.damping[(i, j)] - c64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_in_closed_left_half_plane() {
        let sys = assemble_damped(&basis(1.0, 12.0), Some(&strip())).unwrap();
        let s = generator_spectrum(&sys).unwrap();
        assert!(s.max_real < 1e-10, "{}", s.max_real);
        assert!(s.min_abs_real > IMAGINARY_AXIS_TOL);
    }

    #[test]
    fn damped_energy_decreases_and_dissipation_identity_holds() {
        let sys = assemble_damped(&basis(1.0, 8.0), Some(&strip())).unwrap();
        let (u0, u1) = first_mode(sys.dim());
        let tr = evolve_damped(&sys, &u0, &u1, &EvolveSettings { t_end: 10.0, dt: 0.005, stride: 2 }).unwrap();
        assert!(tr.max_step_increase < 1e-10);
        assert!(tr.energies.windows(2).all(|w| w[1] < w[0]));
        assert!(dissipation_defect(&tr).abs() < 1e-8 * tr.energies[0]);
    }

    #[test]
    fn half_step_agrees() {
        let sys = assemble_damped(&basis(1.0, 12.0), Some(&strip())).unwrap();
        let (u0, u1) = first_mode(sys.dim());
        let a = evolve_damped(&sys, &u0, &u1, &EvolveSettings { t_end: 20.0, dt: 0.01, stride: 2000 }).unwrap();
        let b = evolve_damped(&sys, &u0, &u1, &EvolveSettings { t_end: 20.0, dt: 0.005, stride: 4000 }).unwrap();
        let (ea, eb) = (*a.energies.last().unwrap(), *b.energies.last().unwrap());
        assert!((ea - eb).abs() < 1e-8 * a.energies[0], "{ea} vs {eb}");
    }

    #[test]
    fn resolvent_matches_dense_svd_and_decays_off_resonance() {
        let sys = assemble_damped(&basis(1.0, 6.0), Some(&strip())).unwrap();
        for &l in &[2.3, 4.1] {
            let sv = singular_values(&shifted(&sys, l)).unwrap();
            let dense = 1.0 / sv.iter().copied().fold(f64::INFINITY, f64::min);
            let power = resolvent_norm(&sys, l).unwrap();
            assert!((dense - power).abs() < 1e-8 * dense, "{dense} vs {power}");
        }
        let far = resolvent_norm(&sys, 1e3).unwrap();
        assert!((far * 1e3 - 1.0).abs() < 0.05);
    }

    #[test]
    fn ph_companion_runs() {
        let b = basis(1.0, 20.0);
        let rep = ph_companion(&b, &strip(), &default_window(), &[0.5, 0.25, 0.125]).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows.iter().all(|r| r.sigma_min > 0.0));
    }
}
