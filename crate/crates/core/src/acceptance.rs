//! Desk-scale acceptance runs, one [`Item`] per checkable statement.
//!
//! The integration tests and the `suite` subcommand both go through [`Item::run`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::damped::{assemble_damped, decay_scan, generator_spectrum, resolvent_sweep, IMAGINARY_AXIS_TOL};
use crate::error::Result;
use crate::exec::Exec;
use crate::geodesic::{gcc_certify, GccSettings};
use crate::ground_state::{asymptotic_constant, plateau_scan, solve_ground_state_default, GroundState};
use crate::normal_form::{
    flat_torus_resolvent_check, odd_extend, primitive_b, random_dirichlet_field, residual_check,
};
use crate::observability::{
    fit_resolvent_exponent, gramian, gramian_by_quadrature, grid_for_cutoff, regime_scan, ObservationRegion,
    ScanSettings, DEFAULT_THETA,
};
use crate::packets::{omega_mass, packet_value, poisson_sum, source_norm, PacketQuadrature, WavePacketConfig};
use crate::propagators::{default_window, frequencies, rk4_mode, schrodinger_step, StateVector};
use crate::spectral::{
    build_basis, build_basis_with, richardson_fiber_eigenvalues, BasisOptions, Grid1D,
    GrushinParams, SpectralBasis,
};

/// Strip (1, 1 + π) used wherever a criterion does not fix the region.
pub fn default_strip() -> ObservationRegion {
    ObservationRegion::new(1.0, 1.0 + PI).expect("static strip")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Item {
    SpectralCorrectness,
    ScalingLaw,
    GroundStateAsymptotics,
    ResolventExponent,
    TrichotomyGrowth,
    TrichotomyStable,
    TrichotomyCriticalGrowth,
    TrichotomyCriticalStable,
    GccCertification,
    PacketMass,
    PacketSource,
    PacketPoisson,
    DampedSpectrum,
    DampedEnvelope,
    DampedDecay,
    NormalForm,
    OracleEquivalence,
}

impl Item {
    pub const ALL: [Item; 17] = [
        Item::SpectralCorrectness,
        Item::ScalingLaw,
        Item::GroundStateAsymptotics,
        Item::ResolventExponent,
        Item::TrichotomyGrowth,
        Item::TrichotomyStable,
        Item::TrichotomyCriticalGrowth,
        Item::TrichotomyCriticalStable,
        Item::GccCertification,
        Item::PacketMass,
        Item::PacketSource,
        Item::PacketPoisson,
        Item::DampedSpectrum,
        Item::DampedEnvelope,
        Item::DampedDecay,
        Item::NormalForm,
        Item::OracleEquivalence,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Item::SpectralCorrectness => "1",
            Item::ScalingLaw => "2",
            Item::GroundStateAsymptotics => "3",
            Item::ResolventExponent => "4",
            Item::TrichotomyGrowth => "5(a)",
            Item::TrichotomyStable => "5(b)",
            Item::TrichotomyCriticalGrowth => "5(c) growth",
            Item::TrichotomyCriticalStable => "5(c) stabilization",
            Item::GccCertification => "6",
            Item::PacketMass => "7 omega mass",
            Item::PacketSource => "7 source norm",
            Item::PacketPoisson => "7 poisson identity",
            Item::DampedSpectrum => "8 imaginary axis",
            Item::DampedEnvelope => "8 resolvent envelope",
            Item::DampedDecay => "8 decay bound",
            Item::NormalForm => "9",
            Item::OracleEquivalence => "10",
        }
    }

    pub fn criterion(self) -> u32 {
        self.label()
            .split(|c: char| !c.is_ascii_digit())
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    }

    /// Items whose thresholds are out of reach of the desk-scale discretization.
    pub fn known_red(self) -> bool {
        matches!(
            self,
            Item::TrichotomyGrowth
                | Item::TrichotomyCriticalGrowth
                | Item::PacketSource
                | Item::DampedEnvelope
                | Item::DampedDecay
        )
    }

    pub fn run(self, settings: &SuiteSettings) -> Result<Check> {
        let mut check = match self {
            Item::SpectralCorrectness => spectral_correctness()?,
            Item::ScalingLaw => scaling_law()?,
            Item::GroundStateAsymptotics => ground_state_asymptotics()?,
            Item::ResolventExponent => resolvent_exponent(settings)?,
            Item::TrichotomyGrowth => trichotomy_growth(settings)?,
            Item::TrichotomyStable => trichotomy_stable(settings)?,
            Item::TrichotomyCriticalGrowth => trichotomy_critical(settings, true)?,
            Item::TrichotomyCriticalStable => trichotomy_critical(settings, false)?,
            Item::GccCertification => gcc(settings)?,
            Item::PacketMass => packet_mass()?,
            Item::PacketSource => packet_source()?,
            Item::PacketPoisson => packet_poisson()?,
            Item::DampedSpectrum => damped_spectrum()?,
            Item::DampedEnvelope => damped_envelope(settings)?,
            Item::DampedDecay => damped_decay()?,
            Item::NormalForm => normal_form(settings)?,
            Item::OracleEquivalence => oracle_equivalence()?,
        };
        check.item = self;
        Ok(check)
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteSettings {
    pub exec: Exec,
    pub seed: u64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            exec: Exec::Parallel,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub item: Item,
    pub passed: bool,
    pub summary: String,
    /// Named measurements; non-finite values serialize as null.
    pub values: BTreeMap<String, f64>,
}

impl Check {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self {
            item: Item::SpectralCorrectness,
            passed,
            summary: summary.into(),
            values: BTreeMap::new(),
        }
    }

    fn with(mut self, key: impl Into<String>, value: f64) -> Self {
        self.values.insert(key.into(), value);
        self
    }

    /// One line: `criterion 5(b): PASS (...)`.
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {}{} ({})",
            self.item.label(),
            if self.passed { "PASS" } else { "FAIL" },
            if !self.passed && self.item.known_red() { " [known]" } else { "" },
            self.summary
        )
    }
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn spectral_correctness() -> Result<Check> {
    let p = GrushinParams::new(1.0, 1)?;
    let ev = richardson_fiber_eigenvalues(0, &p, 400, 5)?;
    let rel = ev
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let exact = ((k + 1) as f64 * PI / 2.0).powi(2);
            (v - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let mu0 = solve_ground_state_default(1.0)?.mu0;
    let passed = rel < 1e-3 && (mu0 - 1.0).abs() < 1e-6;
    Ok(Check::new(passed, format!("n=0 rel err {rel:.2e}, γ=1 μ0 = {mu0:.9}"))
        .with("n0_rel_error", rel)
        .with("mu0_gamma1", mu0))
}

fn fiber_mu(gamma: f64, n: i64, points: usize) -> Result<f64> {
    let p = GrushinParams::new(gamma, 1)?;
    let ev = richardson_fiber_eigenvalues(n, &p, points, 1)?[0];
    Ok(ev / (n.unsigned_abs() as f64).powf(p.scaling_exponent()))
}

fn scaling_law() -> Result<Check> {
    let mut check = Check::new(true, "");
    let mut parts = Vec::new();
    for gamma in [1.0, 2.0, 3.0] {
        let mus: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| fiber_mu(gamma, n, 1000))
            .collect::<Result<_>>()?;
        let rel = spread(&mus) - 1.0;
        check.passed &= rel < 0.01;
        check = check.with(format!("spread_gamma{gamma}"), rel);
        parts.push(format!("γ={gamma}: {rel:.2e}"));
    }
    check.summary = format!("relative spread over n ∈ {{16,32,64}}: {}", parts.join(", "));
    Ok(check)
}

fn ground_state_asymptotics() -> Result<Check> {
    let g2 = asymptotic_constant(&solve_ground_state_default(2.0)?, [23.0, 24.0]);
    let g3 = asymptotic_constant(&solve_ground_state_default(3.0)?, [9.0, 10.0]);
    let g1 = plateau_scan(&solve_ground_state_default(1.0)?, [3.0, 4.0])?;
    let target = PI.powf(-0.25);
    let err1 = (g1.c_gamma - target).abs() / target;
    let v = |r: &Result<crate::ground_state::AsymptoticFit>| r.as_ref().map(|f| f.variation).unwrap_or(f64::INFINITY);
    let passed = g2.is_ok() && g3.is_ok() && err1 < 1e-3;
    Ok(Check::new(
        passed,
        format!(
            "variation γ=2 {:.2e}, γ=3 {:.2e}; γ=1 plateau rel err {err1:.2e}",
            v(&g2),
            v(&g3)
        ),
    )
    .with("variation_gamma2", v(&g2))
    .with("variation_gamma3", v(&g3))
    .with("gamma1_plateau_rel_error", err1))
}

fn resolvent_exponent(settings: &SuiteSettings) -> Result<Check> {
    let region = default_strip();
    let psi = default_window();
    let mut check = Check::new(true, "");
    let mut parts = Vec::new();
    for (gamma, k) in [(1.0, 5), (2.0, 4)] {
        let hs: Vec<f64> = (1..=k).map(|i| 0.5f64.powi(i)).collect();
        let cutoff = 2f64.sqrt() / hs[k as usize - 1] * 1.001;
        let basis = build_basis_with(
            &GrushinParams::new(gamma, 1)?,
            cutoff,
            &Grid1D::interior(grid_for_cutoff(cutoff, 200))?,
            BasisOptions {
                n_cap: None,
                m_cap: None,
                exec: settings.exec,
            },
        )?;
        let fit = fit_resolvent_exponent(&basis, &region, &psi, &hs, DEFAULT_THETA)?;
        let dev = (fit.exponent - (gamma + 1.0)).abs();
        check.passed &= dev <= 0.4;
        check = check.with(format!("exponent_gamma{gamma}"), fit.exponent);
        parts.push(format!("γ={gamma}: {:.3} (target {})", fit.exponent, gamma + 1.0));
    }
    check.summary = parts.join(", ");
    Ok(check)
}

const TRICHOTOMY_CUTOFFS: [f64; 4] = [10.0, 14.0, 18.0, 22.0];
/// n cap for γ = 3 bases; the uncapped basis at Λ = 22 has ~1.8e5 fibers.
pub const TRICHOTOMY_N_CAP: u64 = 64;

fn scan(gamma: f64, s: u32, horizons: &[f64], settings: &SuiteSettings, n_cap: Option<u64>) -> Result<Vec<Vec<f64>>> {
    let table = regime_scan(
        gamma,
        s,
        horizons,
        &TRICHOTOMY_CUTOFFS,
        &default_strip(),
        &ScanSettings {
            grid_points: 200,
            n_cap,
            exec: settings.exec,
        },
    )?;
    Ok(horizons.iter().map(|&t| table.series(t)).collect())
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
}

fn trichotomy_growth(settings: &SuiteSettings) -> Result<Check> {
    let horizons = [1.0, 4.0, 8.0];
    let series = scan(3.0, 1, &horizons, settings, Some(TRICHOTOMY_N_CAP))?;
    let passed = series.iter().all(|s| strictly_increasing(s));
    let mut check = Check::new(
        passed,
        format!(
            "γ=3, s=1 obs constants along Λ: {}",
            horizons
                .iter()
                .zip(&series)
                .map(|(t, s)| format!("T={t}: [{}]", fmt_series(s)))
                .collect::<Vec<_>>()
                .join("; ")
        ),
    );
    for (t, s) in horizons.iter().zip(&series) {
        check = check.with(format!("last_T{t}"), *s.last().unwrap_or(&f64::NAN));
    }
    Ok(check)
}

fn trichotomy_stable(settings: &SuiteSettings) -> Result<Check> {
    let s = &scan(1.0, 2, &[1.0], settings, None)?[0];
    let ratio = spread(s);
    Ok(Check::new(
        s.iter().all(|x| x.is_finite()) && ratio <= 1.5,
        format!("γ=1, s=2, T=1: [{}], max/min {ratio:.4}", fmt_series(s)),
    )
    .with("max_over_min", ratio))
}

fn trichotomy_critical(settings: &SuiteSettings, growth: bool) -> Result<Check> {
    let mu0 = solve_ground_state_default(1.0)?.mu0;
    let a1 = default_strip().a1;
    let t = if growth { 0.25 * a1 / mu0 } else { 4.0 * a1 / mu0 };
    let s = &scan(1.0, 1, &[t], settings, None)?[0];
    if growth {
        Ok(Check::new(
            strictly_increasing(s),
            format!("γ=1, s=1, T={t:.4}: [{}]", fmt_series(s)),
        )
        .with("horizon", t))
    } else {
        let ratio = spread(s);
        Ok(Check::new(
            s.iter().all(|x| x.is_finite()) && ratio <= 1.5,
            format!("γ=1, s=1, T={t:.4}: [{}], max/min {ratio:.4}", fmt_series(s)),
        )
        .with("horizon", t)
        .with("max_over_min", ratio))
    }
}

fn gcc(settings: &SuiteSettings) -> Result<Check> {
    let region = ObservationRegion::new(1.0, 1.0 + PI / 2.0)?;
    let gs = GccSettings {
        samples: 520,
        seed: settings.seed,
        exec: settings.exec,
        ..GccSettings::default()
    };
    let mut check = Check::new(true, "");
    let mut parts = Vec::new();
    for gamma in [1.0, 2.0] {
        let r = gcc_certify(gamma, &region, 0.2, 200.0, &gs)?;
        let ok = r.samples_tested >= 500
            && r.certified
            && r.max_energy_drift < 1e-8
            && r.window_failures == 0;
        check.passed &= ok;
        check = check
            .with(format!("min_time_fraction_gamma{gamma}"), r.min_time_fraction)
            .with(format!("energy_drift_gamma{gamma}"), r.max_energy_drift)
            .with(format!("min_window_ratio_gamma{gamma}"), r.min_window_ratio);
        parts.push(format!(
            "γ={gamma}: {} runs, min fraction {:.3}, drift {:.1e}, window failures {}",
            r.samples_tested, r.min_time_fraction, r.max_energy_drift, r.window_failures
        ));
    }
    check.summary = parts.join("; ");
    Ok(check)
}

fn packet_setup() -> Result<(GroundState, ObservationRegion)> {
    Ok((solve_ground_state_default(3.0)?, default_strip()))
}

fn packet_mass() -> Result<Check> {
    let (gs, region) = packet_setup()?;
    let masses: Vec<f64> = (4..=7)
        .map(|n| omega_mass(&WavePacketConfig::critical(3.0, n, &region, gs.mu0)?, &gs, &region, &PacketQuadrature::default()))
        .collect::<Result<_>>()?;
    let worst = masses.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    Ok(Check::new(worst <= 0.75, format!("omega mass n=4..7: [{}], worst ratio {worst:.3}", fmt_series(&masses)))
        .with("worst_ratio", worst))
}

fn packet_source() -> Result<Check> {
    let (gs, region) = packet_setup()?;
    let s4 = source_norm(&WavePacketConfig::critical(3.0, 4, &region, gs.mu0)?, &gs)?;
    let s6 = source_norm(&WavePacketConfig::critical(3.0, 6, &region, gs.mu0)?, &gs)?;
    let ratio = s6 / s4;
    Ok(Check::new(ratio < 1.0 / 16.0, format!("source norm n=6 / n=4 = {ratio:.3} (needs < 0.0625)"))
        .with("ratio", ratio))
}

fn packet_poisson() -> Result<Check> {
    let (gs, region) = packet_setup()?;
    let mut worst = 0.0f64;
    for n in 4..=7 {
        let cfg = WavePacketConfig::critical(3.0, n, &region, gs.mu0)?;
        let mut scale = 0.0f64;
        let mut err = 0.0f64;
        for t in [0.0, 0.5 * cfg.t0, cfg.t0] {
            for x in [0.0, 0.1, 0.3] {
                for y in [0.0, 0.5 * cfg.t0 * gs.mu0.powi(2), region.a1] {
                    let d = packet_value(&cfg, &gs, t, x, y)?;
                    let p = poisson_sum(&cfg, &gs, 20, t, x, y)?;
                    scale = scale.max(d.norm());
                    err = err.max((d - p).norm());
                }
            }
        }
        worst = worst.max(err / scale);
    }
    Ok(Check::new(worst < 1e-4, format!("max relative Poisson-sum error {worst:.2e}")).with("relative_error", worst))
}

fn damped_basis(gamma: f64, cutoff: f64) -> Result<SpectralBasis> {
    build_basis(
        &GrushinParams::new(gamma, 1)?,
        cutoff,
        &Grid1D::interior(grid_for_cutoff(cutoff, 80))?,
    )
}

fn damped_spectrum() -> Result<Check> {
    let sys = assemble_damped(&damped_basis(1.0, 20.0)?, Some(&default_strip()))?;
    let gen_spectrum = generator_spectrum(&sys)?;
    Ok(Check::new(
        gen_spectrum.min_abs_real > IMAGINARY_AXIS_TOL,
        format!("dimension {}, min |Re μ| = {:.3e}, max Re μ = {:.3e}", 2 * sys.dim(), gen_spectrum.min_abs_real, gen_spectrum.max_real),
    )
    .with("min_abs_real", gen_spectrum.min_abs_real)
    .with("max_real", gen_spectrum.max_real))
}

fn damped_envelope(settings: &SuiteSettings) -> Result<Check> {
    let sys = assemble_damped(&damped_basis(1.0, 20.0)?, Some(&default_strip()))?;
    let sweep = resolvent_sweep(&sys, [2.0, 18.0], 2, settings.exec)?;
    Ok(Check::new(
        (sweep.slope - 2.0).abs() <= 0.5,
        format!("envelope slope {:.3} (target 2 ± 0.5), r² {:.2}, {} peaks", sweep.slope, sweep.r2, sweep.peaks.len()),
    )
    .with("slope", sweep.slope)
    .with("r2", sweep.r2))
}

fn damped_decay() -> Result<Check> {
    let sys = assemble_damped(&damped_basis(1.0, 18.0)?, Some(&default_strip()))?;
    let r = decay_scan(&sys, 64, [1.0, 10.0], [1.0, 20.0], 0.01)?;
    let ok = r.long.bound.is_finite() && (r.stability - 1.0).abs() <= 0.3;
    Ok(Check::new(
        ok,
        format!(
            "worst mode {}, bound {:.3} on [1,10], {:.3} on [1,20], ratio {:.3}",
            r.worst_mode, r.short.bound, r.long.bound, r.stability
        ),
    )
    .with("short_bound", r.short.bound)
    .with("long_bound", r.long.bound)
    .with("stability", r.stability))
}

/// Frozen residual constant; the calibration maximum is reported next to it.
pub const RESIDUAL_CONSTANT: f64 = 10.0;

fn normal_form(settings: &SuiteSettings) -> Result<Check> {
    let mut ext_err = 0.0f64;
    for i in 0..20 {
        let f = random_dirichlet_field(61, 16, 5, 4, settings.seed.wrapping_add(i))?;
        let e = odd_extend(&f)?;
        ext_err = ext_err.max((e.norm() / f.norm() - 2f64.sqrt()).abs());
    }
    let b3 = [1.0, 2.0, 3.0]
        .iter()
        .map(|&g| primitive_b(g, 3.0).map(|b| b.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let calibration: Vec<u64> = (0..5).map(|i| settings.seed.wrapping_add(1000 + i)).collect();
    let tests: Vec<u64> = (0..20).map(|i| settings.seed.wrapping_add(i)).collect();
    let res = residual_check(1.0, 0.1, &[1.0 / 16.0, 1.0 / 32.0], &calibration, &tests, RESIDUAL_CONSTANT)?;
    let max_ratio = res.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let torus = flat_torus_resolvent_check(&default_strip(), 1.0, &[0.125, 0.0625, 0.03125], &default_window())?;
    let passed = ext_err < 1e-8 && b3 < 1e-10 && res.holds && torus.stable;
    Ok(Check::new(
        passed,
        format!(
            "√2 identity err {ext_err:.1e}, |b(3)| {b3:.1e}, residual ratio {max_ratio:.4} (C = {RESIDUAL_CONSTANT}, calibrated {:.4}), flat-torus spread {:.3}",
            res.calibration_max, torus.spread
        ),
    )
    .with("extension_error", ext_err)
    .with("b3", b3)
    .with("residual_max_ratio", max_ratio)
    .with("residual_calibration", res.calibration_max)
    .with("flat_torus_spread", torus.spread))
}

fn oracle_equivalence() -> Result<Check> {
    let basis = damped_basis(1.0, 8.0)?;
    let region = default_strip();
    let closed = gramian(&basis, &region, 1.0, 1)?;
    let quad = gramian_by_quadrature(&basis, &region, 1.0, 1, 20000)?;
    let n = basis.len();
    let mut gram_err = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            gram_err = gram_err.max((closed.matrix[(j, k)] - quad[(j, k)]).norm());
        }
    }
    let w = frequencies(&basis, 1);
    let mut prop_err = 0.0f64;
    for j in (0..n).step_by((n / 8).max(1)) {
        let state = schrodinger_step(&basis, &StateVector::unit(&basis, j)?, 1.0, 1)?;
        prop_err = prop_err.max((state.coeffs[j] - rk4_mode(w[j], 1.0, 1e-4)).norm());
    }
    let mut mu_err = 0.0f64;
    for (gamma, n) in [(1.0, 256), (2.0, 512)] {
        let gs = solve_ground_state_default(gamma)?;
        let p = GrushinParams::new(gamma, 1)?;
        let ev = richardson_fiber_eigenvalues(n, &p, 2000, 1)?[0];
        let mu = ev / (n as f64).powf(p.scaling_exponent());
        mu_err = mu_err.max((mu - gs.mu0).abs() / gs.mu0);
    }
    let passed = gram_err < 1e-6 && prop_err < 1e-6 && mu_err < 1e-4;
    Ok(Check::new(
        passed,
        format!("Gramian {gram_err:.1e}, propagator {prop_err:.1e}, μ0 rel {mu_err:.1e}"),
    )
    .with("gramian_error", gram_err)
    .with("propagator_error", prop_err)
    .with("mu0_rel_error", mu_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_criteria() {
        assert_eq!(Item::ALL.len(), 17);
        for item in Item::ALL {
            assert!((1..=10).contains(&item.criterion()), "{item}");
        }
        assert_eq!(Item::TrichotomyCriticalStable.criterion(), 5);
        assert_eq!(Item::OracleEquivalence.criterion(), 10);
    }

    #[test]
    fn check_line_format() {
        let mut c = Check::new(false, "x");
        c.item = Item::PacketSource;
        assert_eq!(c.line(), "criterion 7 source norm: FAIL [known] (x)");
    }
}
