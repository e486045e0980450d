//! Traveling wave packets built from rescaled ground states, and the quantities
//! that show they escape observation.
//!
//! v_n(t,x,y) = (2π)^{-1/2} Σ_k ψ(h_n k) e^{iyk - itμ₀^s k^{2s/(γ+1)}} p_γ(k, x)
//! with h_n = 2^{-n} and p_γ(k,x) = k^{1/(2(γ+1))} φ_γ(k^{1/(γ+1)} x).

use std::f64::consts::PI;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{invalid, precondition, Result};
use crate::exec::Exec;
use crate::ground_state::{lambda_gamma, rescaled_ground_state, rescaled_ground_state_derivative, GroundState};
use crate::observability::ObservationRegion;
use crate::propagators::{y_points, Field2D};
use crate::quadrature::{composite_gauss, gauss_legendre, simpson};

/// |∂_wΦ_m| below this triggers the near-stationary warning.
pub const STATIONARY_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacketConfig {
    pub n: u32,
    pub psi: CutoffProfile,
    pub chi: CutoffProfile,
    pub t0: f64,
    pub gamma: f64,
    pub s: u32,
    /// Allows s < (γ+1)/2; the Poisson machinery stays critical-only.
    pub experimental: bool,
}

/// ψ ∈ C_c^∞ on (1/2, 1).
pub fn default_psi() -> CutoffProfile {
    CutoffProfile::smooth_bump([0.5, 1.0], [0.625, 0.875]).expect("static profile")
}

/// χ ≡ 1 on |x| ≤ 1/4, ≡ 0 on |x| ≥ 1/2.
pub fn default_chi() -> CutoffProfile {
    CutoffProfile::symmetric(0.25, 0.5).expect("static profile")
}

impl WavePacketConfig {
    /// Critical packet s = (γ+1)/2 with T₀ = 0.5·a₁/μ₀^s.
    pub fn critical(gamma: f64, n: u32, region: &ObservationRegion, mu0: f64) -> Result<Self> {
        let s2 = gamma + 1.0;
        if (s2 - s2.round()).abs() > 1e-12 || s2.round() as u32 % 2 != 0 {
            return Err(precondition(format!("(γ+1)/2 is not an integer for γ = {gamma}")));
        }
        let s = (s2.round() as u32) / 2;
        let cfg = Self {
            n,
            psi: default_psi(),
            chi: default_chi(),
            t0: 0.5 * region.a1 / mu0.powi(s as i32),
            gamma,
            s,
            experimental: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_critical(&self) -> bool {
        (2.0 * self.s as f64 - (self.gamma + 1.0)).abs() < 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 30 {
            return Err(invalid(format!("dyadic index n = {} outside 1..=30", self.n)));
        }
        if !self.is_critical() && !self.experimental {
            return Err(precondition(format!(
                "s = {} differs from (γ+1)/2 = {}; enable the experimental flag",
                self.s,
                0.5 * (self.gamma + 1.0)
            )));
        }
        if 2.0 * self.s as f64 > self.gamma + 1.0 + 1e-12 {
            return Err(precondition("s above (γ+1)/2 is not covered by the construction"));
        }
        if self.psi.support[0] < 0.5 || self.psi.support[1] > 1.0 {
            return Err(invalid(format!("ψ support {:?} not inside [1/2, 1]", self.psi.support)));
        }
        if !(self.t0 >= 0.0) {
            return Err(invalid("T0 must be nonnegative"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        0.5f64.powi(self.n as i32)
    }

    /// Integer frequencies with ψ(h k) > 0 and their weights.
    pub fn modes(&self) -> Vec<(u64, f64)> {
        let h = self.h();
        let lo = (self.psi.support[0] / h).floor() as u64;
        let hi = (self.psi.support[1] / h).ceil() as u64;
        (lo.max(1)..=hi)
            .filter_map(|k| {
                let w = self.psi.eval(h * k as f64);
                (w > 0.0).then_some((k, w))
            })
            .collect()
    }

    /// ω_k = λ_γ(k)^s.
    pub fn frequency(&self, gs: &GroundState, k: f64) -> f64 {
        lambda_gamma(gs, k).powi(self.s as i32)
    }
}

fn check_gs(cfg: &WavePacketConfig, gs: &GroundState) -> Result<()> {
    cfg.validate()?;
    if (gs.gamma - cfg.gamma).abs() > 1e-12 {
        return Err(invalid(format!("ground state is for γ = {}, packet for γ = {}", gs.gamma, cfg.gamma)));
    }
    Ok(())
}

/// √(Σ_k ψ(h_n k)²).
pub fn initial_norm(cfg: &WavePacketConfig) -> f64 {
    cfg.modes().iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
}

/// v_n(t, x, y) by direct summation over k.
pub fn packet_value(cfg: &WavePacketConfig, gs: &GroundState, t: f64, x: f64, y: f64) -> Result<c64> {
    check_gs(cfg, gs)?;
    let mut acc = c64::new(0.0, 0.0);
    for (k, w) in cfg.modes() {
        let kf = k as f64;
        let phase = y * kf - t * cfg.frequency(gs, kf);
        acc += c64::from_polar(w * rescaled_ground_state(gs, kf, x)?, phase);
    }
    Ok(acc / (2.0 * PI).sqrt())
}

/// Samples of v_n(t) on xs × uniform y-grid of `ny` points.
pub fn build_packet(cfg: &WavePacketConfig, gs: &GroundState, xs: &[f64], ny: usize, t: f64) -> Result<Field2D> {
    check_gs(cfg, gs)?;
    let kmax = 1usize << cfg.n;
    if ny < 4 * kmax {
        return Err(precondition(format!(
            "packet needs ny >= {} for n = {}, got {ny}",
            4 * kmax,
            cfg.n
        )));
    }
    let modes = cfg.modes();
    let ys = y_points(ny);
    let norm = (2.0 * PI).sqrt();
    let mut field = Field2D::zeros(xs.len(), ny);
    // e^{i(yk - tω_k)} per y, reused across x
    let phases: Vec<Vec<c64>> = modes
        .iter()
        .map(|&(k, _)| {
            let kf = k as f64;
            let om = cfg.frequency(gs, kf);
            ys.iter().map(|&y| c64::from_polar(1.0, y * kf - t * om)).collect()
        })
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let amps: Vec<f64> = modes
            .iter()
            .map(|&(k, w)| rescaled_ground_state(gs, k as f64, x).map(|p| w * p / norm))
            .collect::<Result<_>>()?;
        let row = &mut field.data[i * ny..(i + 1) * ny];
        for (a, ph) in amps.iter().zip(&phases) {
            for (v, e) in row.iter_mut().zip(ph) {
                *v += e * *a;
            }
        }
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PacketQuadrature {
    /// Gauss panels on |x| ≤ 1/2 (χ support) and nodes per panel.
    pub x_panels: usize,
    pub x_order: usize,
    /// Time samples for Simpson on [0, T₀] (made odd).
    pub time_steps: usize,
}

impl Default for PacketQuadrature {
    fn default() -> Self {
        Self {
            x_panels: 32,
            x_order: 16,
            time_steps: 201,
        }
    }
}

/// ∫₀^{T₀}∫_ω |χ v_n / ‖v_n(0)‖|² with the y-integral in closed form.
pub fn omega_mass(cfg: &WavePacketConfig, gs: &GroundState, region: &ObservationRegion, quad: &PacketQuadrature) -> Result<f64> {
    check_gs(cfg, gs)?;
    if !region.avoids_origin() {
        log::warn!("strip ({}, {}) does not avoid a neighborhood of y = 0", region.a1, region.a2);
    }
    let limit = region.a1 / gs.mu0.powi(cfg.s as i32);
    if cfg.t0 >= limit {
        log::warn!("T0 = {} >= a1/μ0^s = {limit}: phase no longer non-stationary", cfg.t0);
    }
    let modes = cfg.modes();
    let norm0 = initial_norm(cfg);
    let (xq, wq) = composite_gauss(-0.5, 0.5, quad.x_panels, quad.x_order);
    let k = modes.len();
    // c_j(x_q) = ψ_j p(k_j, x_q) / (√(2π)‖v‖)
    let mut c = vec![0.0; k * xq.len()];
    for (j, &(kk, w)) in modes.iter().enumerate() {
        for (q, &x) in xq.iter().enumerate() {
            c[j * xq.len() + q] = w * rescaled_ground_state(gs, kk as f64, x)? / ((2.0 * PI).sqrt() * norm0);
        }
    }
    let chi2: Vec<f64> = xq.iter().map(|&x| cfg.chi.eval(x).powi(2)).collect();
    let mut a = vec![0.0; k * k];
    for j in 0..k {
        for l in j..k {
            let v: f64 = (0..xq.len())
                .map(|q| wq[q] * chi2[q] * c[j * xq.len() + q] * c[l * xq.len() + q])
                .sum();
            a[j * k + l] = v;
            a[l * k + j] = v;
        }
    }
    let omegas: Vec<f64> = modes.iter().map(|&(kk, _)| cfg.frequency(gs, kk as f64)).collect();
    let fy: Vec<c64> = (0..k * k)
        .map(|idx| {
            let (j, l) = (idx / k, idx % k);
            region.fourier_factor(modes[j].0 as i64 - modes[l].0 as i64) * (2.0 * PI)
        })
        .collect();
    let steps = quad.time_steps.max(3) | 1;
    let dt = cfg.t0 / (steps - 1) as f64;
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            let t = i as f64 * dt;
            let mut acc = c64::new(0.0, 0.0);
            for j in 0..k {
                for l in 0..k {
                    acc += fy[j * k + l] * c64::from_polar(a[j * k + l], -t * (omegas[j] - omegas[l]));
                }
            }
            acc.re
        })
        .collect();
    if cfg.t0 == 0.0 {
        return Ok(0.0);
    }
    Ok(simpson(&values, dt))
}

/// Same integral by brute-force quadrature in (t, x, y); the oracle for [`omega_mass`].
pub fn omega_mass_direct(
    cfg: &WavePacketConfig,
    gs: &GroundState,
    region: &ObservationRegion,
    quad: &PacketQuadrature,
    y_points_per_strip: usize,
) -> Result<f64> {
    check_gs(cfg, gs)?;
    let norm0 = initial_norm(cfg);
    let (xq, wq) = composite_gauss(-0.5, 0.5, quad.x_panels, quad.x_order);
    let ny = y_points_per_strip.max(3) | 1;
    let dy = region.length() / (ny - 1) as f64;
    let steps = quad.time_steps.max(3) | 1;
    let dt = cfg.t0 / (steps - 1) as f64;
    let mut in_time = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 * dt;
        let mut sx = 0.0;
        for (&x, &w) in xq.iter().zip(&wq) {
            let chi = cfg.chi.eval(x);
            if chi == 0.0 {
                continue;
            }
            let row: Vec<f64> = (0..ny)
                .map(|l| {
                    packet_value(cfg, gs, t, x, region.a1 + l as f64 * dy).map(|v| v.norm_sqr() * chi * chi)
                })
                .collect::<Result<_>>()?;
            sx += w * simpson(&row, dy);
        }
        in_time.push(sx / (norm0 * norm0));
    }
    Ok(simpson(&in_time, dt))
}

/// Per-mode commutator [L_k^s, χ] p_γ(k,·) at x, for s ∈ {1, 2}.
///
/// With L_k = -∂² + k²|x|^{2γ} and L_k F = λF, the first commutator is
/// G = -χ''F - 2χ'F', and for s = 2 the source is λG + L_k G.
fn mode_source(cfg: &WavePacketConfig, gs: &GroundState, k: f64, x: f64) -> Result<f64> {
    let j = cfg.chi.jet(x);
    if j[1..].iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let g = cfg.gamma;
    let lam = lambda_gamma(gs, k);
    let pot = k * k * x.abs().powf(2.0 * g);
    let f0 = rescaled_ground_state(gs, k, x)?;
    let f1 = rescaled_ground_state_derivative(gs, k, x)?;
    let f2 = (pot - lam) * f0;
    let dpot = if x == 0.0 {
        0.0
    } else {
        2.0 * g * k * k * x.abs().powf(2.0 * g - 1.0) * x.signum()
    };
    let f3 = dpot * f0 + (pot - lam) * f1;
    let gx = -j[2] * f0 - 2.0 * j[1] * f1;
    match cfg.s {
        1 => Ok(gx),
        2 => {
            let g2 = -j[4] * f0 - 4.0 * j[3] * f1 - 5.0 * j[2] * f2 - 2.0 * j[1] * f3;
            Ok(lam * gx - g2 + pot * gx)
        }
        s => Err(precondition(format!("commutator source implemented for s <= 2, got s = {s}"))),
    }
}

/// ‖[(-Δ_γ)^s, χ] v_n(t)‖ / ‖v_n(0)‖. Time independent, since the y-modes are
/// orthogonal and only their phases move.
pub fn source_norm(cfg: &WavePacketConfig, gs: &GroundState) -> Result<f64> {
    check_gs(cfg, gs)?;
    let [lo, hi] = [cfg.chi.plateau[1], cfg.chi.support[1]];
    let (xq, wq) = composite_gauss(lo, hi, 64, 16);
    let mut total = 0.0;
    for (k, w) in cfg.modes() {
        let mut per = 0.0;
        for (&x, &wx) in xq.iter().zip(&wq) {
            per += wx * mode_source(cfg, gs, k as f64, x)?.powi(2);
        }
        // χ is even, the integrand too
        total += w * w * 2.0 * per;
    }
    Ok(total.sqrt() / initial_norm(cfg))
}

/// The normalized source f_n(t)/‖v_n(0)‖ sampled on xs × y-grid.
pub fn source_field(cfg: &WavePacketConfig, gs: &GroundState, t: f64, xs: &[f64], ny: usize) -> Result<Field2D> {
    check_gs(cfg, gs)?;
    let modes = cfg.modes();
    let ys = y_points(ny);
    let scale = 1.0 / ((2.0 * PI).sqrt() * initial_norm(cfg));
    let mut field = Field2D::zeros(xs.len(), ny);
    for (i, &x) in xs.iter().enumerate() {
        for &(k, w) in &modes {
            let kf = k as f64;
            let amp = w * mode_source(cfg, gs, kf, x)? * scale;
            if amp == 0.0 {
                continue;
            }
            let om = cfg.frequency(gs, kf);
            for (l, &y) in ys.iter().enumerate() {
                field.data[i * ny + l] += c64::from_polar(amp, y * kf - t * om);
            }
        }
    }
    Ok(field)
}

/// K̂(2πm) = ∫ψ(h_n w) p_γ(w,x) e^{iΦ_m(w)} dw, Φ_m = wy - λ_γ(w)^s t - 2πmw.
pub fn poisson_term(cfg: &WavePacketConfig, gs: &GroundState, m: i64, t: f64, x: f64, y: f64) -> Result<c64> {
    check_gs(cfg, gs)?;
    if !cfg.is_critical() {
        return Err(precondition("the Poisson representation needs s = (γ+1)/2"));
    }
    let h = cfg.h();
    let speed = gs.mu0.powi(cfg.s as i32);
    let dphase = y - 2.0 * PI * m as f64 - t * speed;
    if dphase.abs() < STATIONARY_WARN {
        log::warn!("near-stationary phase: |∂wΦ_{m}| = {:.3e} at t = {t}, y = {y}", dphase.abs());
    }
    let lo = cfg.psi.support[0] / h;
    let hi = cfg.psi.support[1] / h;
    let periods = (hi - lo) * dphase.abs() / (2.0 * PI);
    let panels = (periods.ceil() as usize).max(16);
    let (nodes, weights) = gauss_legendre(40);
    let width = (hi - lo) / panels as f64;
    let mut acc = c64::new(0.0, 0.0);
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (z, wz) in nodes.iter().zip(&weights) {
            let w = a + 0.5 * width * (z + 1.0);
            let amp = cfg.psi.eval(h * w);
            if amp == 0.0 {
                continue;
            }
            let phase = w * y - t * speed * w - 2.0 * PI * m as f64 * w;
            acc += c64::from_polar(0.5 * width * wz * amp * rescaled_ground_state(gs, w, x)?, phase);
        }
    }
    Ok(acc)
}

/// (2π)^{-1/2} Σ_{|m| ≤ m_max} K̂(2πm), which should reproduce [`packet_value`].
pub fn poisson_sum(cfg: &WavePacketConfig, gs: &GroundState, m_max: i64, t: f64, x: f64, y: f64) -> Result<c64> {
    let mut acc = c64::new(0.0, 0.0);
    for m in -m_max..=m_max {
        acc += poisson_term(cfg, gs, m, t, x, y)?;
    }
    Ok(acc / (2.0 * PI).sqrt())
}

/// Midpoint of the band swept by ∂_wΦ/(2π) over (t, y) ∈ [0,T₀]×I, clipped to (0,1).
pub fn poisson_c0(cfg: &WavePacketConfig, gs: &GroundState, region: &ObservationRegion) -> f64 {
    let shift = cfg.t0 * gs.mu0.powi(cfg.s as i32);
    ((region.a1 - shift + region.a2) / (4.0 * PI)).clamp(1e-3, 1.0 - 1e-3)
}

/// Exponent 3γ/(γ+1) - 1/(2(γ+1)) - 1 of h_n in the integration-by-parts bound.
pub fn envelope_exponent(gamma: f64) -> f64 {
    let g1 = gamma + 1.0;
    3.0 * gamma / g1 - 0.5 / g1 - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub m: i64,
    pub bound: f64,
    pub measured: f64,
}

/// (t, x, y) probes inside [0,T₀] × (-1,1) × I.
fn envelope_probes(cfg: &WavePacketConfig, region: &ObservationRegion) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for t in [0.0, 0.5 * cfg.t0, cfg.t0] {
        for y in [region.a1, 0.5 * (region.a1 + region.a2), region.a2] {
            for x in [0.0, 0.25] {
                out.push((t, x, y));
            }
        }
    }
    out
}

/// max over probes of |K̂(2πm)|.
pub fn poisson_magnitude(cfg: &WavePacketConfig, gs: &GroundState, region: &ObservationRegion, m: i64) -> Result<f64> {
    let mut best = 0.0f64;
    for (t, x, y) in envelope_probes(cfg, region) {
        best = best.max(poisson_term(cfg, gs, m, t, x, y)?.norm());
    }
    Ok(best)
}

/// C in |K̂(2πm)| ≤ C h_n^e/|m - c₀|³, fitted at n = 4, m = 1.
pub fn fit_envelope_constant(cfg: &WavePacketConfig, gs: &GroundState, region: &ObservationRegion) -> Result<f64> {
    let ref_cfg = WavePacketConfig { n: 4, ..*cfg };
    let c0 = poisson_c0(&ref_cfg, gs, region);
    let measured = poisson_magnitude(&ref_cfg, gs, region, 1)?;
    Ok(measured * (1.0 - c0).abs().powi(3) / ref_cfg.h().powf(envelope_exponent(cfg.gamma)))
}

pub fn poisson_envelope(
    cfg: &WavePacketConfig,
    gs: &GroundState,
    region: &ObservationRegion,
    ms: &[i64],
    constant: f64,
    exec: Exec,
) -> Result<Vec<EnvelopeRow>> {
    let c0 = poisson_c0(cfg, gs, region);
    let hpow = cfg.h().powf(envelope_exponent(cfg.gamma));
    exec.map_slice(ms, |&m| {
        Ok(EnvelopeRow {
            m,
            bound: constant * hpow / (m as f64 - c0).abs().powi(3),
            measured: poisson_magnitude(cfg, gs, region, m)?,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketDiagnostics {
    pub initial_norm: f64,
    pub omega_mass: f64,
    pub source_norm: f64,
    pub poisson_envelope: Vec<EnvelopeRow>,
}

/// Default m values of the envelope table.
pub const ENVELOPE_MS: [i64; 10] = [-10, -3, -2, -1, 1, 2, 3, 5, 10, 20];

pub fn packet_diagnostics(
    cfg: &WavePacketConfig,
    gs: &GroundState,
    region: &ObservationRegion,
    quad: &PacketQuadrature,
    exec: Exec,
) -> Result<PacketDiagnostics> {
    let constant = fit_envelope_constant(cfg, gs, region)?;
    Ok(PacketDiagnostics {
        initial_norm: initial_norm(cfg),
        omega_mass: omega_mass(cfg, gs, region, quad)?,
        source_norm: source_norm(cfg, gs)?,
        poisson_envelope: poisson_envelope(cfg, gs, region, &ENVELOPE_MS, constant, exec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state_default;
    use std::sync::OnceLock;

    fn gs3() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| solve_ground_state_default(3.0).unwrap())
    }

    fn strip() -> ObservationRegion {
        ObservationRegion::new(1.0, 1.0 + PI).unwrap()
    }

    fn cfg(n: u32) -> WavePacketConfig {
        WavePacketConfig::critical(3.0, n, &strip(), gs3().mu0).unwrap()
    }

    #[test]
    fn rejects_noncritical_without_flag() {
        let mut c = cfg(4);
        c.s = 1;
        assert!(c.validate().is_err());
        c.experimental = true;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn single_mode_modulus_is_flat_in_y_and_t() {
        let mut c = cfg(4);
        c.psi = CutoffProfile::indicator(12.0 / 16.0, 12.0 / 16.0).unwrap();
        assert_eq!(c.modes().len(), 1);
        assert_eq!(initial_norm(&c), 1.0);
        let a = packet_value(&c, gs3(), 0.0, 0.1, 0.0).unwrap().norm();
        let b = packet_value(&c, gs3(), 0.3, 0.1, 2.0).unwrap().norm();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn initial_norm_matches_quadrature_and_doubles() {
        let c = cfg(4);
        let xs: Vec<f64> = (0..801).map(|i| -2.0 + 4.0 * i as f64 / 800.0).collect();
        let f = build_packet(&c, gs3(), &xs, 64, 0.0).unwrap();
        let dy = 2.0 * PI / 64.0;
        let rows: Vec<f64> = (0..xs.len())
            .map(|i| (0..64).map(|l| f.at(i, l).norm_sqr()).sum::<f64>() * dy)
            .collect();
        let q = simpson(&rows, 4.0 / 800.0).sqrt();
        assert!((q - initial_norm(&c)).abs() < 1e-4 * q, "{q} vs {}", initial_norm(&c));
        let r = initial_norm(&cfg(6)) / initial_norm(&cfg(5));
        assert!((r - 2f64.sqrt()).abs() < 0.05 * 2f64.sqrt());
    }

    #[test]
    fn build_packet_rejects_coarse_y_grid() {
        assert!(build_packet(&cfg(5), gs3(), &[0.0], 64, 0.0).is_err());
    }

    #[test]
    fn packet_mass_is_concentrated() {
        let c = cfg(5);
        let scale = 10.0 * c.h().powf(0.25);
        let xs: Vec<f64> = (0..1201).map(|i| -6.0 + 12.0 * i as f64 / 1200.0).collect();
        let f = build_packet(&c, gs3(), &xs, 128, 0.0).unwrap();
        let mut outside = 0.0;
        let mut total = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let m: f64 = (0..128).map(|l| f.at(i, l).norm_sqr()).sum();
            total += m;
            if x.abs() > scale {
                outside += m;
            }
        }
        assert!(outside / total < 1e-4);
    }

    #[test]
    fn omega_mass_matches_direct_quadrature() {
        let c = cfg(4);
        let quad = PacketQuadrature { time_steps: 21, ..Default::default() };
        let fast = omega_mass(&c, gs3(), &strip(), &quad).unwrap();
        let slow = omega_mass_direct(&c, gs3(), &strip(), &PacketQuadrature { x_panels: 16, ..quad }, 401).unwrap();
        assert!((fast - slow).abs() < 1e-6 * fast.abs().max(1e-12), "{fast} vs {slow}");
    }

    #[test]
    fn source_vanishes_for_trivial_chi_and_inside_plateau() {
        let mut c = cfg(4);
        c.chi = CutoffProfile::indicator(-1.0, 1.0).unwrap();
        assert_eq!(source_norm(&c, gs3()).unwrap(), 0.0);
        let c = cfg(4);
        let xs = [0.0, 0.1, 0.2, 0.2499, 0.3];
        let f = source_field(&c, gs3(), 0.1, &xs, 64).unwrap();
        for i in 0..4 {
            assert!((0..64).all(|l| f.at(i, l).norm() == 0.0));
        }
        assert!((0..64).any(|l| f.at(4, l).norm() > 0.0));
    }

    #[test]
    fn source_norm_matches_field_quadrature() {
        let c = cfg(4);
        let xs: Vec<f64> = (0..2001).map(|i| -0.5 + i as f64 / 2000.0).collect();
        let f = source_field(&c, gs3(), 0.2, &xs, 64).unwrap();
        let dy = 2.0 * PI / 64.0;
        let rows: Vec<f64> = (0..xs.len())
            .map(|i| (0..64).map(|l| f.at(i, l).norm_sqr()).sum::<f64>() * dy)
            .collect();
        let q = simpson(&rows, 1.0 / 2000.0).sqrt();
        let s = source_norm(&c, gs3()).unwrap();
        assert!((q - s).abs() < 1e-5 * s, "{q} vs {s}");
    }

    #[test]
    fn poisson_sum_reproduces_packet() {
        let c = cfg(4);
        for &(t, x, y) in &[(0.0, 0.0, 0.2), (0.1, 0.3, 1.5), (0.2, -0.2, 4.0)] {
            let direct = packet_value(&c, gs3(), t, x, y).unwrap();
            let pois = poisson_sum(&c, gs3(), 20, t, x, y).unwrap();
            let scale = direct.norm().max(1e-3 * initial_norm(&c));
            assert!((direct - pois).norm() < 1e-4 * scale, "{direct} vs {pois}");
        }
    }
}
