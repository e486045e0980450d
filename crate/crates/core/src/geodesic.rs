//! Hamiltonian flow of p = ξ² + |x|^{2γ}η² with hyperbolic reflection at x = ±1.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::exec::Exec;
use crate::observability::ObservationRegion;
use crate::quadrature::linear_fit;

/// Bisection tolerance on |x| - 1 at a wall event.
pub const EVENT_TOL: f64 = 1e-10;
/// |ξ| below this at the wall counts as grazing.
pub const GRAZING_TOL: f64 = 1e-9;
/// Steps are halved while |x| is below this (γ < 2 has a rough force at 0).
pub const ORIGIN_REFINE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
}

impl PhasePoint {
    pub fn energy(&self, gamma: f64) -> f64 {
        self.xi * self.xi + self.x.abs().powf(2.0 * gamma) * self.eta * self.eta
    }

    /// y reduced to [0, 2π).
    pub fn y_mod(&self) -> f64 {
        self.y.rem_euclid(2.0 * PI)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub gamma: f64,
    pub samples: Vec<(f64, PhasePoint)>,
    pub reflections: Vec<f64>,
    pub p0: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, Copy)]
struct Flow {
    gamma: f64,
    eta: f64,
}

impl Flow {
    /// (ẋ, ξ̇, ẏ) at (x, ξ).
    fn rhs(&self, x: f64, xi: f64) -> [f64; 3] {
        let g = self.gamma;
        let ax = x.abs();
        let force = if ax == 0.0 {
            0.0
        } else {
            -2.0 * g * ax.powf(2.0 * (g - 1.0)) * x * self.eta * self.eta
        };
        [2.0 * xi, force, 2.0 * ax.powf(2.0 * g) * self.eta]
    }

    fn rk4(&self, p: &PhasePoint, h: f64) -> PhasePoint {
        let k1 = self.rhs(p.x, p.xi);
        let k2 = self.rhs(p.x + 0.5 * h * k1[0], p.xi + 0.5 * h * k1[1]);
        let k3 = self.rhs(p.x + 0.5 * h * k2[0], p.xi + 0.5 * h * k2[1]);
        let k4 = self.rhs(p.x + h * k3[0], p.xi + h * k3[1]);
        let c = |i: usize| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        PhasePoint {
            x: p.x + c(0),
            xi: p.xi + c(1),
            y: p.y + c(2),
            eta: p.eta,
        }
    }

    /// y-velocity at a point.
    fn ydot(&self, p: &PhasePoint) -> f64 {
        2.0 * p.x.abs().powf(2.0 * self.gamma) * self.eta
    }

    /// One step of length h with wall events; returns the event time offset if any.
    fn step(&self, p: &PhasePoint, h: f64) -> Result<(PhasePoint, Option<f64>)> {
        let plain = |q: &PhasePoint, h: f64| {
            if q.x.abs() < ORIGIN_REFINE && self.gamma < 2.0 {
                let mid = self.rk4(q, 0.5 * h);
                self.rk4(&mid, 0.5 * h)
            } else {
                self.rk4(q, h)
            }
        };
        let cand = plain(p, h);
        if cand.x.abs() <= 1.0 {
            return Ok((cand, None));
        }
        let mut lo = 0.0;
        let mut hi = h;
        let mut hit = cand;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let q = plain(p, mid);
            if q.x.abs() > 1.0 {
                hi = mid;
                hit = q;
            } else {
                lo = mid;
                hit = q;
                if 1.0 - q.x.abs() < EVENT_TOL {
                    break;
                }
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        if (hit.x.abs() - 1.0).abs() > EVENT_TOL.max(1e-9) {
            return Err(GrushinError::Integration(format!(
                "wall bisection failed: |x| - 1 = {:.3e}",
                hit.x.abs() - 1.0
            )));
        }
        if hit.xi.abs() < GRAZING_TOL {
            return Err(GrushinError::Integration("grazing contact with the wall".into()));
        }
        let t_event = lo;
        let reflected = PhasePoint {
            xi: -hit.xi,
            ..hit
        };
        let rest = h - t_event;
        let out = if rest > 0.0 { plain(&reflected, rest) } else { reflected };
        if out.x.abs() > 1.0 {
            return Err(GrushinError::Integration("second wall hit within one step".into()));
        }
        Ok((out, Some(t_event)))
    }
}

fn validate(start: &PhasePoint, gamma: f64, dt: f64) -> Result<()> {
    if !(gamma >= 1.0) {
        return Err(invalid("gamma must be >= 1"));
    }
    if start.x.abs() > 1.0 {
        return Err(precondition(format!("start x = {} outside [-1, 1]", start.x)));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt must be positive"));
    }
    Ok(())
}

/// RK4 integration over [0, T] keeping every `stride`-th step.
pub fn integrate_flow_with(start: PhasePoint, gamma: f64, t_end: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    validate(&start, gamma, dt)?;
    let flow = Flow {
        gamma,
        eta: start.eta,
    };
    let steps = (t_end / dt).ceil() as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let mut p = start;
    let mut samples = vec![(0.0, p)];
    let mut reflections = Vec::new();
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let (q, event) = flow.step(&p, dt)?;
        if let Some(te) = event {
            reflections.push(t0 + te);
        }
        p = q;
        if (k + 1) % stride.max(1) == 0 || k + 1 == steps {
            samples.push((t0 + dt, p));
        }
    }
    Ok(Trajectory {
        gamma,
        samples,
        reflections,
        p0: start.energy(gamma),
        eta0: start.eta,
    })
}

pub fn integrate_flow(start: PhasePoint, gamma: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_flow_with(start, gamma, t_end, dt, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    pub max_energy_drift: f64,
    /// Sign of ẏ equals sign of η₀ wherever x ≠ 0 (y constant when η₀ = 0).
    pub y_monotone: bool,
}

pub fn first_integrals(traj: &Trajectory) -> Result<FirstIntegrals> {
    if traj.samples.is_empty() {
        return Err(precondition("empty trajectory"));
    }
    let p0 = traj.p0;
    let scale = if p0 > 0.0 { p0 } else { 1.0 };
    let drift = traj
        .samples
        .iter()
        .map(|(_, q)| (q.energy(traj.gamma) - p0).abs() / scale)
        .fold(0.0, f64::max);
    let y0 = traj.samples[0].1.y;
    let monotone = traj.samples.windows(2).all(|w| {
        let dy = w[1].1.y - w[0].1.y;
        if traj.eta0 > 0.0 {
            dy >= 0.0
        } else if traj.eta0 < 0.0 {
            dy <= 0.0
        } else {
            (w[1].1.y - y0).abs() < 1e-12
        }
    }) && traj.samples.iter().all(|(_, q)| q.eta == traj.eta0);
    Ok(FirstIntegrals {
        max_energy_drift: drift,
        y_monotone: monotone,
    })
}

/// 2η₀∫₀ᵗ|x|^{2γ} from the stored samples (Hermite-corrected trapezoid).
pub fn y_displacement_quadrature(traj: &Trajectory) -> f64 {
    let g = traj.gamma;
    let f = |q: &PhasePoint| q.x.abs().powf(2.0 * g);
    let df = |q: &PhasePoint| {
        if q.x == 0.0 {
            0.0
        } else {
            2.0 * g * q.x.abs().powf(2.0 * g - 1.0) * q.x.signum() * 2.0 * q.xi
        }
    };
    let mut acc = 0.0;
    for w in traj.samples.windows(2) {
        let (t0, a) = w[0];
        let (t1, b) = w[1];
        let d = t1 - t0;
        // a reflection inside the interval breaks the smoothness of ξ; fall back to trapezoid
        let crossed = traj.reflections.iter().any(|&r| r > t0 && r <= t1);
        acc += 0.5 * d * (f(&a) + f(&b));
        if !crossed {
            acc += d * d / 12.0 * (df(&a) - df(&b));
        }
    }
    2.0 * traj.eta0 * acc
}

/// Per-trajectory statistics collected without storing samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub time_fraction: f64,
    pub hitting_time: Option<f64>,
    pub energy_drift: f64,
    /// min over windows of |Δy| / bound; ≥ 1 means the y-advance inequality holds.
    pub window_ratio: f64,
    pub windows: usize,
    pub reflections: usize,
}

/// Lower bound (b₀δ/(2√p₀))(δ/2)^{2γ} on |Δy| per window of length 3δ/√p₀.
pub fn y_advance_bound(b0: f64, delta: f64, p0: f64, gamma: f64) -> (f64, f64) {
    let window = 3.0 * delta / p0.sqrt();
    let bound = b0 * delta / (2.0 * p0.sqrt()) * (0.5 * delta).powf(2.0 * gamma);
    (window, bound)
}

pub fn run_statistics(
    start: PhasePoint,
    gamma: f64,
    region: &ObservationRegion,
    t_end: f64,
    dt: f64,
    b0: f64,
    delta: f64,
) -> Result<RunStats> {
    validate(&start, gamma, dt)?;
    let flow = Flow {
        gamma,
        eta: start.eta,
    };
    let p0 = start.energy(gamma);
    let (window, bound) = y_advance_bound(b0, delta, p0, gamma);
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let mut p = start;
    let mut inside = if region.contains(p.y) { 1usize } else { 0 };
    let mut hitting = if inside > 0 { Some(0.0) } else { None };
    let mut drift = 0.0f64;
    let mut reflections = 0;
    let mut next_edge = window;
    let mut y_edge = p.y;
    let mut ratio = f64::INFINITY;
    let mut windows = 0;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = t0 + dt;
        let (q, event) = flow.step(&p, dt)?;
        if event.is_some() {
            reflections += 1;
        }
        while next_edge <= t1 && next_edge <= t_end {
            // cubic Hermite in y using ẏ at both ends
            let s = (next_edge - t0) / dt;
            let (ya, yb) = (p.y, q.y);
            let (ma, mb) = (flow.ydot(&p) * dt, flow.ydot(&q) * dt);
            let s2 = s * s;
            let s3 = s2 * s;
            let y = (2.0 * s3 - 3.0 * s2 + 1.0) * ya
                + (s3 - 2.0 * s2 + s) * ma
                + (-2.0 * s3 + 3.0 * s2) * yb
                + (s3 - s2) * mb;
            ratio = ratio.min((y - y_edge).abs() / bound);
            windows += 1;
            y_edge = y;
            next_edge += window;
        }
        p = q;
        if region.contains(p.y) {
            inside += 1;
            if hitting.is_none() {
                hitting = Some(t1);
            }
        }
        drift = drift.max((p.energy(gamma) - p0).abs() / p0);
    }
    Ok(RunStats {
        time_fraction: inside as f64 / (steps + 1) as f64,
        hitting_time: hitting,
        energy_drift: drift,
        window_ratio: ratio,
        windows,
        reflections,
    })
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Randomly shifted Halton points over (x₀, y₀, sign ξ, sign η, |η₀|, p₀) with
/// |η₀| ∈ (b₀, 1/b₀), p₀ ∈ (1/2, 2); points with p₀ < |x₀|^{2γ}η₀² are skipped.
pub fn sample_initial_points(gamma: f64, b0: f64, count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 6] = std::array::from_fn(|_| rng.gen::<f64>());
    let mut out = Vec::with_capacity(count);
    let mut i: u64 = 1;
    while out.len() < count {
        let u: [f64; 6] = std::array::from_fn(|d| (radical_inverse(i, HALTON_BASES[d]) + shift[d]).fract());
        i += 1;
        let x = -1.0 + 2.0 * u[0];
        let y = 2.0 * PI * u[1];
        let eta_abs = b0 + (1.0 / b0 - b0) * u[4];
        let p0 = 0.5 + 1.5 * u[5];
        let pot = x.abs().powf(2.0 * gamma) * eta_abs * eta_abs;
        if !(x.abs() < 1.0) || pot >= p0 || eta_abs <= b0 || eta_abs >= 1.0 / b0 || p0 <= 0.5 {
            continue;
        }
        let xi = (p0 - pot).sqrt() * if u[2] < 0.5 { -1.0 } else { 1.0 };
        let eta = eta_abs * if u[3] < 0.5 { -1.0 } else { 1.0 };
        out.push(PhasePoint { x, y, xi, eta });
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GccReport {
    pub gamma: f64,
    pub t0: f64,
    pub dt: f64,
    /// Empirical c₀: the minimum time fraction.
    pub c0: f64,
    pub samples_tested: usize,
    pub discarded: usize,
    pub min_time_fraction: f64,
    pub worst_initial_point: PhasePoint,
    pub worst_hitting_time: f64,
    pub max_energy_drift: f64,
    pub delta: f64,
    pub min_window_ratio: f64,
    pub window_failures: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GccSettings {
    pub samples: usize,
    pub dt: f64,
    pub delta: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for GccSettings {
    fn default() -> Self {
        Self {
            samples: 500,
            dt: 1e-3,
            delta: 0.1,
            seed: 7,
            exec: Exec::Parallel,
        }
    }
}

pub fn gcc_certify(
    gamma: f64,
    region: &ObservationRegion,
    b0: f64,
    t0: f64,
    settings: &GccSettings,
) -> Result<GccReport> {
    if !(b0 > 0.0 && b0 < 1.0) {
        return Err(invalid("b0 must lie in (0, 1)"));
    }
    if !(t0 > 0.0) {
        return Err(invalid("T0 must be positive"));
    }
    let starts = sample_initial_points(gamma, b0, settings.samples, settings.seed);
    let runs = settings.exec.map_slice(&starts, |s| {
        run_statistics(*s, gamma, region, t0, settings.dt, b0, settings.delta)
    });
    let mut report = GccReport {
        gamma,
        t0,
        dt: settings.dt,
        c0: 1.0,
        samples_tested: 0,
        discarded: 0,
        min_time_fraction: 1.0,
        worst_initial_point: starts[0],
        worst_hitting_time: 0.0,
        max_energy_drift: 0.0,
        delta: settings.delta,
        min_window_ratio: f64::INFINITY,
        window_failures: 0,
        certified: false,
    };
    for (start, run) in starts.iter().zip(runs) {
        let stats = match run {
            Ok(s) => s,
            Err(GrushinError::Integration(msg)) => {
                log::info!("discarding sample {start:?}: {msg}");
                report.discarded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        report.samples_tested += 1;
        if stats.time_fraction < report.min_time_fraction {
            report.min_time_fraction = stats.time_fraction;
            report.worst_initial_point = *start;
        }
        report.worst_hitting_time = report
            .worst_hitting_time
            .max(stats.hitting_time.unwrap_or(f64::INFINITY));
        report.max_energy_drift = report.max_energy_drift.max(stats.energy_drift);
        report.min_window_ratio = report.min_window_ratio.min(stats.window_ratio);
        if stats.window_ratio < 1.0 {
            report.window_failures += 1;
        }
    }
    report.c0 = report.min_time_fraction;
    report.certified = report.samples_tested > 0 && report.min_time_fraction > 0.0;
    if !report.certified {
        log::warn!(
            "GCC violated: trajectory from {:?} never enters the strip",
            report.worst_initial_point
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingRow {
    pub gamma: f64,
    pub worst_hitting_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingTable {
    pub rows: Vec<HittingRow>,
    pub delta_eff: f64,
    /// Slope of ln(worst time) against γ ln(1/δ_eff); diagnostic only.
    pub slope: f64,
}

pub fn hitting_time_scaling(
    gammas: &[f64],
    region: &ObservationRegion,
    b0: f64,
    t0: f64,
    settings: &GccSettings,
) -> Result<HittingTable> {
    let mut rows = Vec::new();
    for &g in gammas {
        let r = gcc_certify(g, region, b0, t0, settings)?;
        rows.push(HittingRow {
            gamma: g,
            worst_hitting_time: r.worst_hitting_time,
        });
    }
    let delta = settings.delta;
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.worst_hitting_time.is_finite() && r.worst_hitting_time > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.gamma * (1.0 / delta).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.worst_hitting_time.ln()).collect();
        linear_fit(&x, &y).1
    } else {
        f64::NAN
    };
    Ok(HittingTable {
        rows,
        delta_eff: delta,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_billiard_reflects_at_half() {
        let start = PhasePoint { x: 0.0, y: 0.3, xi: 1.0, eta: 0.0 };
        let tr = integrate_flow(start, 1.0, 1.0, 1e-3).unwrap();
        assert_eq!(tr.reflections.len(), 1);
        assert!((tr.reflections[0] - 0.5).abs() < 1e-9);
        assert!(tr.samples.iter().all(|(_, q)| q.y == 0.3));
        let (_, end) = tr.samples.last().unwrap();
        assert!(end.x.abs() < 1e-9 && end.xi == -1.0);
    }

    #[test]
    fn eta_is_exactly_constant_and_y_monotone() {
        let start = PhasePoint { x: 0.0, y: 0.0, xi: 1.0, eta: 1.0 };
        let tr = integrate_flow(start, 1.0, 10.0, 1e-3).unwrap();
        let fi = first_integrals(&tr).unwrap();
        assert!(fi.y_monotone);
        assert!(fi.max_energy_drift < 1e-8);
    }

    #[test]
    fn y_displacement_matches_quadrature() {
        let start = PhasePoint { x: 0.3, y: 0.0, xi: -0.8, eta: 1.7 };
        let tr = integrate_flow(start, 2.0, 20.0, 1e-3).unwrap();
        let dy = tr.samples.last().unwrap().1.y - start.y;
        let q = y_displacement_quadrature(&tr);
        assert!((dy - q).abs() < 1e-6 * dy.abs(), "{dy} vs {q}");
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let start = PhasePoint { x: 0.2, y: 1.0, xi: 0.9, eta: 2.0 };
        let fwd = integrate_flow(start, 2.0, 7.0, 1e-3).unwrap();
        let end = fwd.samples.last().unwrap().1;
        let back = integrate_flow(PhasePoint { xi: -end.xi, eta: -end.eta, ..end }, 2.0, 7.0, 1e-3).unwrap();
        let r = back.samples.last().unwrap().1;
        assert!((r.x - start.x).abs() < 1e-6 && (r.y - start.y).abs() < 1e-6);
        assert!((r.xi + start.xi).abs() < 1e-6);
    }

    #[test]
    fn full_circle_fraction_is_one() {
        let rep = gcc_certify(
            1.0,
            &ObservationRegion::full(),
            0.2,
            5.0,
            &GccSettings { samples: 20, ..Default::default() },
        )
        .unwrap();
        assert_eq!(rep.min_time_fraction, 1.0);
    }

    #[test]
    fn samples_respect_the_constraints() {
        for p in sample_initial_points(2.0, 0.2, 200, 1) {
            let e = p.energy(2.0);
            assert!(e > 0.5 && e < 2.0 && p.eta.abs() > 0.2 && p.eta.abs() < 5.0);
        }
    }
}
