//! Whole-line ground state of `Q_γ = -∂_z² + |z|^{2γ}` and its super-exponential tail.
//!
//! The core of the eigenfunction comes from a Dirichlet finite-difference solve on
//! [-R, R]. Beyond a matching point the logarithm of the eigenfunction is continued by
//! integrating the Riccati equation `u' = V - μ₀ - u²` for `u = (log φ)'` backwards,
//! which follows the decaying solution stably and never underflows.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::tridiag::SymTridiagonal;

const RICHARDSON_TOL: f64 = 1e-12;

/// Default half-width max(6, (30(γ+1))^{1/(γ+1)} + 3).
pub fn default_radius(gamma: f64) -> f64 {
    ((30.0 * (gamma + 1.0)).powf(1.0 / (gamma + 1.0)) + 3.0).max(6.0)
}

/// Even interior point count giving spacing ≤ min(0.01, √(0.05/R^{2γ})).
pub fn default_grid_points(gamma: f64, radius: f64) -> usize {
    let h = 0.01f64.min((0.05 / radius.powf(2.0 * gamma)).sqrt());
    let n = (2.0 * radius / h).ceil() as usize;
    n + n % 2
}

fn potential(gamma: f64, z: f64) -> f64 {
    z.abs().powf(2.0 * gamma)
}

fn fd_matrix(gamma: f64, radius: f64, points: usize) -> Result<(SymTridiagonal, f64)> {
    let h = 2.0 * radius / (points as f64 + 1.0);
    let z: Vec<f64> = (1..=points).map(|i| -radius + i as f64 * h).collect();
    let diag = z.iter().map(|&zi| 2.0 / (h * h) + potential(gamma, zi)).collect();
    let off = vec![-1.0 / (h * h); points - 1];
    Ok((SymTridiagonal::new(diag, off)?, h))
}

/// Log-space tail of the ground state on [x_match, x_end].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    x: Vec<f64>,
    log_phi: Vec<f64>,
    slope: Vec<f64>,
}

impl TailTable {
    fn build(gamma: f64, mu0: f64, x_match: f64, log_phi_match: f64, x_end: f64) -> Self {
        let x_far = x_end + 1.0 + 2.0 / x_end.powf(gamma).max(1.0);
        let step = |x: f64| (0.05 / x.powf(gamma)).min(0.01);
        let rhs = |x: f64, u: f64| potential(gamma, x) - mu0 - u * u;
        // WKB start including the prefactor correction
        let v = potential(gamma, x_far) - mu0;
        let dv = 2.0 * gamma * x_far.powf(2.0 * gamma - 1.0);
        let mut u = -v.sqrt() - dv / (4.0 * v);
        let mut l = 0.0;
        let mut x = x_far;
        let mut xs = vec![x];
        let mut us = vec![u];
        let mut ls = vec![l];
        while x > x_match {
            let dx = step(x).min(x - x_match);
            // integrate (u, L) with L' = u backwards by -dx
            let k1u = rhs(x, u);
            let k1l = u;
            let u2 = u - 0.5 * dx * k1u;
            let k2u = rhs(x - 0.5 * dx, u2);
            let k2l = u2;
            let u3 = u - 0.5 * dx * k2u;
            let k3u = rhs(x - 0.5 * dx, u3);
            let k3l = u3;
            let u4 = u - dx * k3u;
            let k4u = rhs(x - dx, u4);
            let k4l = u4;
            u -= dx / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            l -= dx / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l);
            x -= dx;
            if (x - x_match).abs() < 1e-14 {
                x = x_match;
            }
            xs.push(x);
            us.push(u);
            ls.push(l);
        }
        xs.reverse();
        us.reverse();
        ls.reverse();
        let l0 = ls[0];
        let log_phi = ls.iter().map(|v| log_phi_match + (v - l0)).collect();
        Self {
            x: xs,
            log_phi,
            slope: us,
        }
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// (log φ, (log φ)') at x by cubic Hermite interpolation.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        if x < self.start() || x > self.end() {
            return None;
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return Some((self.log_phi[i], self.slope[i])),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let d = x1 - x0;
        let t = (x - x0) / d;
        let (p0, p1) = (self.log_phi[i], self.log_phi[i + 1]);
        let (m0, m1) = (self.slope[i] * d, self.slope[i + 1] * d);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let slope = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / d;
        Some((value, slope))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub gamma: f64,
    /// Richardson-extrapolated ground eigenvalue.
    pub mu0: f64,
    /// Eigenvalue on the sampling grid itself.
    pub mu0_grid: f64,
    pub radius: f64,
    pub spacing: f64,
    /// φ at z_i = -R + (i+1)·spacing.
    pub samples: Vec<f64>,
    pub c_gamma: Option<f64>,
    x_match: f64,
    tail: TailTable,
}

pub fn solve_ground_state(gamma: f64, radius: f64, grid_points: usize) -> Result<GroundState> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(invalid(format!("gamma must be >= 1, got {gamma}")));
    }
    if radius < 6.0 {
        return Err(precondition(format!("radius {radius} below the minimum 6")));
    }
    if grid_points < 16 {
        return Err(invalid("ground-state grid needs at least 16 points"));
    }
    let (t, h) = fd_matrix(gamma, radius, grid_points)?;
    if h * h * radius.powf(2.0 * gamma) >= 0.1 {
        return Err(precondition(format!(
            "grid too coarse: spacing² R^(2γ) = {:.3e} >= 0.1",
            h * h * radius.powf(2.0 * gamma)
        )));
    }
    let mu_grid = t.eigenvalue(0, RICHARDSON_TOL)?;
    let mut phi = t.inverse_iteration(mu_grid, &[])?;
    let norm = (phi.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    let sign = phi[grid_points / 2].signum();
    phi.iter_mut().for_each(|v| *v *= sign / norm);
    if phi.iter().any(|v| *v < -1e-12) {
        return Err(GrushinError::NoConvergence(
            "ground-state eigenvector changes sign".into(),
        ));
    }
    let (tf, _) = fd_matrix(gamma, radius, 2 * grid_points + 1)?;
    let mu_fine = tf.eigenvalue(0, RICHARDSON_TOL)?;
    let mu0 = (4.0 * mu_fine - mu_grid) / 3.0;

    // truncation check: same spacing on [-(R+2), R+2]
    let wider = (2.0 * (radius + 2.0) / h).round() as usize - 1;
    let (tw, _) = fd_matrix(gamma, radius + 2.0, wider)?;
    let mu_wide = tw.eigenvalue(0, RICHARDSON_TOL)?;
    if (mu_wide - mu_grid).abs() > 1e-6 * mu_grid {
        return Err(precondition(format!(
            "radius {radius} too small: μ₀ moves by {:.2e} under R -> R+2",
            (mu_wide - mu_grid).abs()
        )));
    }

    let samples: Vec<f64> = phi.iter().map(|v| v.max(0.0)).collect();
    let x_match = 2.0f64.min(radius - 2.0);
    let core = CoreInterpolant {
        radius,
        spacing: h,
        samples: &samples,
    };
    let log_match = core.value(x_match).ln();
    let x_end = underflow_point(gamma).max(radius);
    let tail = TailTable::build(gamma, mu0, x_match, log_match, x_end);
    Ok(GroundState {
        gamma,
        mu0,
        mu0_grid: mu_grid,
        radius,
        spacing: h,
        samples,
        c_gamma: None,
        x_match,
        tail,
    })
}

/// Solve with the default radius and grid.
pub fn solve_ground_state_default(gamma: f64) -> Result<GroundState> {
    let r = default_radius(gamma);
    solve_ground_state(gamma, r, default_grid_points(gamma, r))
}

/// Where x^{γ+1}/(γ+1) reaches 750, past which φ underflows in double precision.
fn underflow_point(gamma: f64) -> f64 {
    (750.0 * (gamma + 1.0)).powf(1.0 / (gamma + 1.0))
}

struct CoreInterpolant<'a> {
    radius: f64,
    spacing: f64,
    samples: &'a [f64],
}

impl CoreInterpolant<'_> {
    /// Sample value with implicit Dirichlet zeros at ±R.
    fn sample(&self, i: isize) -> f64 {
        if i <= 0 || i as usize > self.samples.len() {
            0.0
        } else {
            self.samples[i as usize - 1]
        }
    }

    fn stencil(&self, z: f64) -> (isize, f64) {
        let s = (z + self.radius) / self.spacing;
        let i = s.floor() as isize;
        (i, s - i as f64)
    }

    /// Four-point Lagrange interpolation.
    fn value(&self, z: f64) -> f64 {
        let (i, t) = self.stencil(z);
        let f = [
            self.sample(i - 1),
            self.sample(i),
            self.sample(i + 1),
            self.sample(i + 2),
        ];
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        f.iter().zip(&w).map(|(a, b)| a * b).sum()
    }

    fn derivative(&self, z: f64) -> f64 {
        let (i, t) = self.stencil(z);
        let f = [
            self.sample(i - 1),
            self.sample(i),
            self.sample(i + 1),
            self.sample(i + 2),
        ];
        let w = [
            -(3.0 * t * t - 6.0 * t + 2.0) / 6.0,
            (3.0 * t * t - 4.0 * t - 1.0) / 2.0,
            -(3.0 * t * t - 2.0 * t - 2.0) / 2.0,
            (3.0 * t * t - 1.0) / 6.0,
        ];
        f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / self.spacing
    }
}

impl GroundState {
    fn core(&self) -> CoreInterpolant<'_> {
        CoreInterpolant {
            radius: self.radius,
            spacing: self.spacing,
            samples: &self.samples,
        }
    }

    pub fn tail(&self) -> &TailTable {
        &self.tail
    }

    pub fn matching_point(&self) -> f64 {
        self.x_match
    }

    /// Grid abscissae of the samples.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.samples.len())
            .map(|i| -self.radius + i as f64 * self.spacing)
            .collect()
    }

    /// log φ(z); -∞ beyond the tail table.
    pub fn log_value(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= self.x_match {
            self.core().value(a).ln()
        } else {
            self.tail.eval(a).map(|(l, _)| l).unwrap_or(f64::NEG_INFINITY)
        }
    }

    /// φ(z), interpolated in the core and continued by the tail beyond the matching point.
    pub fn value(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= self.x_match {
            self.core().value(a)
        } else {
            self.tail.eval(a).map(|(l, _)| l.exp()).unwrap_or(0.0)
        }
    }

    /// φ'(z).
    pub fn derivative(&self, z: f64) -> f64 {
        let a = z.abs();
        let d = if a <= self.x_match {
            self.core().derivative(a)
        } else {
            self.tail
                .eval(a)
                .map(|(l, u)| u * l.exp())
                .unwrap_or(0.0)
        };
        if z < 0.0 {
            -d
        } else {
            d
        }
    }

    /// Copy with the log-space tail extended to at least `x_end`.
    pub fn with_tail_to(&self, x_end: f64) -> GroundState {
        if x_end <= self.tail.end() {
            return self.clone();
        }
        let log_match = self.core().value(self.x_match).ln();
        let mut out = self.clone();
        out.tail = TailTable::build(self.gamma, self.mu0, self.x_match, log_match, x_end);
        out
    }

    /// Prefactor exponent p in φ(x) ~ c x^{-p} e^{-x^{γ+1}/(γ+1)}.
    ///
    /// For γ > 1 this is γ/2. For γ = 1 the WKB integral ∫μ₀/(2x) adds a logarithm and
    /// the exponent becomes (1 - μ₀)/2.
    pub fn prefactor_exponent(&self) -> f64 {
        if (self.gamma - 1.0).abs() < 1e-12 {
            0.5 * (1.0 - self.mu0)
        } else {
            0.5 * self.gamma
        }
    }

    /// r(x) = φ(x)·x^p·exp(x^{γ+1}/(γ+1)), evaluated in log space.
    pub fn plateau_profile(&self, x: f64) -> f64 {
        let g1 = self.gamma + 1.0;
        (self.log_value(x) + self.prefactor_exponent() * x.ln() + x.powf(g1) / g1).exp()
    }

    /// Quadrature norm ∫φ² over the sampling grid.
    pub fn sample_norm(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub c_gamma: f64,
    pub variation: f64,
    pub window: [f64; 2],
    pub profile: Vec<(f64, f64)>,
}

/// Plateau relative-variation threshold.
pub const PLATEAU_TOL: f64 = 1e-3;

/// Mean of r(x) over a window with its relative variation; errors when the variation
/// exceeds 1e-3.
pub fn asymptotic_constant(gs: &GroundState, window: [f64; 2]) -> Result<AsymptoticFit> {
    let fit = plateau_scan(gs, window)?;
    if fit.variation > PLATEAU_TOL {
        return Err(GrushinError::NoPlateau {
            variation: fit.variation,
            threshold: PLATEAU_TOL,
            lo: window[0],
            hi: window[1],
        });
    }
    Ok(fit)
}

/// r(x) statistics over a window without the plateau assertion.
pub fn plateau_scan(gs: &GroundState, window: [f64; 2]) -> Result<AsymptoticFit> {
    let [lo, hi] = window;
    if !(lo > 2.0 && hi >= lo && hi.is_finite()) {
        return Err(precondition(format!(
            "window [{lo}, {hi}] must satisfy 2 < lo <= hi"
        )));
    }
    let gs = gs.with_tail_to(hi + 0.5);
    let count = if hi > lo { 101 } else { 1 };
    let profile: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let x = if count == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            };
            (x, gs.plateau_profile(x))
        })
        .collect();
    let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(GrushinError::NoConvergence(
            "plateau profile is not finite on the window".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    Ok(AsymptoticFit {
        c_gamma: mean,
        variation: (max - min) / mean,
        window,
        profile,
    })
}

/// p_γ(w, x) = |w|^{1/(2(γ+1))} φ(|w|^{1/(γ+1)} x).
pub fn rescaled_ground_state(gs: &GroundState, w: f64, x: f64) -> Result<f64> {
    if w == 0.0 {
        return Err(precondition("w must be nonzero"));
    }
    let a = w.abs();
    let g1 = gs.gamma + 1.0;
    Ok(a.powf(0.5 / g1) * gs.value(a.powf(1.0 / g1) * x))
}

/// ∂ₓ p_γ(w, x).
pub fn rescaled_ground_state_derivative(gs: &GroundState, w: f64, x: f64) -> Result<f64> {
    if w == 0.0 {
        return Err(precondition("w must be nonzero"));
    }
    let a = w.abs();
    let g1 = gs.gamma + 1.0;
    let k = a.powf(1.0 / g1);
    Ok(a.powf(0.5 / g1) * k * gs.derivative(k * x))
}

/// λ_γ(w) = μ₀ |w|^{2/(γ+1)}.
pub fn lambda_gamma(gs: &GroundState, w: f64) -> f64 {
    gs.mu0 * w.abs().powf(2.0 / (gs.gamma + 1.0))
}

/// Variation-of-constants amplitudes of the decaying solution in the frame
/// φ± = x^{-γ/2} e^{±x^{γ+1}/(γ+1)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannTail {
    pub gamma: f64,
    pub mu0: f64,
    pub x0: f64,
    pub terms: usize,
    pub x: Vec<f64>,
    pub a_minus: Vec<f64>,
    /// a₊ e^{2x^{γ+1}/(γ+1)}, which stays bounded.
    pub a_plus_scaled: Vec<f64>,
    /// Sup norms of the individual series terms (k = 1..terms).
    pub term_sups: Vec<f64>,
    /// Fitted C in |a₋ - 1| ≤ C x^{-(γ-1)}.
    pub c_minus: f64,
    /// Fitted C in |a₊| e^{2X} ≤ C x^{-(γ-1)}.
    pub c_plus: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct NeumannOptions {
    pub length: f64,
    pub cells: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            length: 8.0,
            cells: 40_000,
        }
    }
}

impl NeumannTail {
    /// a₊(x), which underflows to 0 far out.
    pub fn a_plus(&self) -> Vec<f64> {
        let g1 = self.gamma + 1.0;
        self.x
            .iter()
            .zip(&self.a_plus_scaled)
            .map(|(x, b)| b * (-2.0 * x.powf(g1) / g1).exp())
            .collect()
    }

    /// log of ψ∞ = a₋φ₋ + a₊φ₊ = (a₋ + a₊e^{2X})φ₋ at each node.
    pub fn log_psi(&self) -> Vec<f64> {
        let g1 = self.gamma + 1.0;
        self.x
            .iter()
            .zip(self.a_minus.iter().zip(&self.a_plus_scaled))
            .map(|(x, (am, bp))| (am + bp).ln() - 0.5 * self.gamma * x.ln() - x.powf(g1) / g1)
            .collect()
    }

    /// Linear interpolation of (a₋, a₊e^{2X}) at x.
    pub fn amplitudes_at(&self, x: f64) -> Option<(f64, f64)> {
        if x < self.x[0] || x > *self.x.last().unwrap() {
            return None;
        }
        let dx = self.x[1] - self.x[0];
        let i = (((x - self.x[0]) / dx).floor() as usize).min(self.x.len() - 2);
        let t = (x - self.x[i]) / dx;
        Some((
            self.a_minus[i] * (1.0 - t) + self.a_minus[i + 1] * t,
            self.a_plus_scaled[i] * (1.0 - t) + self.a_plus_scaled[i + 1] * t,
        ))
    }
}

pub fn neumann_tail(gamma: f64, mu0: f64, x0: f64, terms: usize) -> Result<NeumannTail> {
    neumann_tail_with(gamma, mu0, x0, terms, NeumannOptions::default())
}

/// Iterates a_{k+1}(x) = ∫ₓ^∞ R(z) a_k(z) dz from a₀ = (1, 0) with
/// R = (W/(2z^γ)) [[-1, -e^{2Z}], [e^{-2Z}, 1]], W = μ₀ + (γ/2)(γ/2+1) z^{-2}.
pub fn neumann_tail_with(
    gamma: f64,
    mu0: f64,
    x0: f64,
    terms: usize,
    opts: NeumannOptions,
) -> Result<NeumannTail> {
    if gamma <= 1.0 {
        return Err(precondition("neumann tail needs gamma > 1"));
    }
    if x0 < 2.0 {
        return Err(precondition("neumann tail needs x0 >= 2"));
    }
    if terms == 1 {
        return Err(precondition("terms must be 0 or at least 2"));
    }
    let g1 = gamma + 1.0;
    let c2 = 0.5 * gamma * (0.5 * gamma + 1.0);
    let n = opts.cells;
    let x_end = x0 + opts.length;
    let dx = opts.length / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| x0 + i as f64 * dx).collect();
    let big_z: Vec<f64> = x.iter().map(|v| v.powf(g1) / g1).collect();
    let kappa: Vec<f64> = x
        .iter()
        .map(|v| (mu0 + c2 / (v * v)) / (2.0 * v.powf(gamma)))
        .collect();

    let mut a_minus = vec![1.0; n + 1];
    let mut b_plus = vec![0.0; n + 1];
    // previous term, starting from a₀ = (1, 0)
    let mut am_k = vec![1.0; n + 1];
    let mut bp_k = vec![0.0; n + 1];
    let mut term_sups = Vec::with_capacity(terms);
    let q = mu0 / x0.powf(gamma - 1.0);
    let mut envelope_c = None;
    for k in 0..terms {
        let g: Vec<f64> = am_k.iter().zip(&bp_k).map(|(a, b)| a + b).collect();
        // decay exponent of g_k at the far end, for the analytic tail
        let p = k as f64 * (gamma - 1.0);
        let tail_a = g[n]
            * (0.5 * mu0 * x_end.powf(1.0 - gamma) / (gamma - 1.0 + p)
                + 0.5 * c2 * x_end.powf(-1.0 - gamma) / (gamma + 1.0 + p));
        let mut next_a = vec![0.0; n + 1];
        let mut next_b = vec![0.0; n + 1];
        next_a[n] = -tail_a;
        next_b[n] = kappa[n] * g[n] / (2.0 * x_end.powf(gamma));
        for i in (0..n).rev() {
            let f0 = kappa[i] * g[i];
            let f1 = kappa[i + 1] * g[i + 1];
            next_a[i] = next_a[i + 1] - 0.5 * dx * (f0 + f1);
            // exponentially fitted cell: Z(z) - Z(x_i) ≈ c (z - x_i) on the cell
            let c = (big_z[i + 1] - big_z[i]) / dx;
            let decay = (-2.0 * c * dx).exp();
            let s = 2.0 * c;
            let cell = if s * dx < 1e-8 {
                0.5 * dx * (f0 + f1)
            } else {
                // ∫₀^d (f0 + (f1-f0)t/d) e^{-s t} dt
                let e0 = (1.0 - decay) / s;
                let e1 = (1.0 - decay * (1.0 + s * dx)) / (s * s * dx);
                f0 * e0 + (f1 - f0) * e1
            };
            next_b[i] = decay * next_b[i + 1] + cell;
        }
        let sup = next_a
            .iter()
            .chain(next_b.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if !sup.is_finite() {
            return Err(GrushinError::Divergence {
                term: k + 1,
                sup,
                envelope: f64::NAN,
            });
        }
        let c = *envelope_c.get_or_insert(sup / q);
        let envelope = c * q.powi(k as i32 + 1) * (1.0 + 1e-9);
        if sup > envelope {
            return Err(GrushinError::Divergence {
                term: k + 1,
                sup,
                envelope,
            });
        }
        term_sups.push(sup);
        for i in 0..=n {
            a_minus[i] += next_a[i];
            b_plus[i] += next_b[i];
        }
        am_k = next_a;
        bp_k = next_b;
    }
    let fit = |vals: &[f64], shift: f64| -> f64 {
        x.iter()
            .zip(vals)
            .map(|(xv, v)| (v - shift).abs() * xv.powf(gamma - 1.0))
            .fold(0.0, f64::max)
    };
    let c_minus = fit(&a_minus, 1.0);
    let c_plus = fit(&b_plus, 0.0);
    Ok(NeumannTail {
        gamma,
        mu0,
        x0,
        terms,
        x,
        a_minus,
        a_plus_scaled: b_plus,
        term_sups,
        c_minus,
        c_plus,
    })
}

/// Relative mismatch between ψ∞ and the ground state on [lo, hi] after a
/// least-squares fit of one global scale (in log space).
pub fn tail_match_error(gs: &GroundState, tail: &NeumannTail, lo: f64, hi: f64) -> Result<f64> {
    let gs = gs.with_tail_to(hi + 0.5);
    let log_psi = tail.log_psi();
    let pts: Vec<(f64, f64)> = tail
        .x
        .iter()
        .zip(&log_psi)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, l)| (gs.log_value(*x), *l))
        .collect();
    if pts.len() < 2 {
        return Err(precondition("matching window has fewer than two nodes"));
    }
    let shift = pts.iter().map(|(a, b)| a - b).sum::<f64>() / pts.len() as f64;
    Ok(pts
        .iter()
        .map(|(a, b)| ((b + shift - a).exp() - 1.0).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn harmonic() -> GroundState {
        solve_ground_state(1.0, 8.0, 3200).unwrap()
    }

    #[test]
    fn harmonic_ground_state_matches_gaussian() {
        let gs = harmonic();
        assert!((gs.mu0 - 1.0).abs() < 1e-6, "mu0 = {}", gs.mu0);
        let c = PI.powf(-0.25);
        for z in gs.grid().iter().filter(|z| z.abs() <= 4.0) {
            let exact = c * (-0.5 * z * z).exp();
            assert!((gs.value(*z) - exact).abs() < 1e-5);
        }
    }

    #[test]
    fn ground_state_is_even_and_normalized() {
        let gs = harmonic();
        let n = gs.samples.len();
        for i in 0..n / 2 {
            assert!((gs.samples[i] - gs.samples[n - 1 - i]).abs() < 1e-10);
        }
        assert!((gs.sample_norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_small_radius_and_coarse_grid() {
        assert!(solve_ground_state(1.0, 5.0, 2000).is_err());
        assert!(solve_ground_state(3.0, 7.0, 100).is_err());
    }

    #[test]
    fn tail_continues_core_smoothly() {
        let gs = harmonic();
        let x = gs.matching_point();
        let inside = gs.value(x - 1e-9);
        let outside = gs.value(x + 1e-9);
        assert!((inside - outside).abs() / inside < 1e-6);
        // far tail of the Gaussian
        let exact = -0.25 * PI.ln() - 0.5 * 20.0f64 * 20.0;
        assert!((gs.log_value(20.0) - exact).abs() < 1e-5);
    }

    #[test]
    fn degenerate_window_reproduces_point_value() {
        let gs = harmonic();
        let fit = plateau_scan(&gs, [3.5, 3.5]).unwrap();
        assert_eq!(fit.c_gamma, gs.plateau_profile(3.5));
        assert_eq!(fit.variation, 0.0);
    }

    #[test]
    fn rescaling_identity_and_eigenvalue() {
        let gs = harmonic();
        assert_eq!(rescaled_ground_state(&gs, 1.0, 0.3).unwrap(), gs.value(0.3));
        assert!((lambda_gamma(&gs, 100.0) - 100.0 * gs.mu0).abs() < 1e-12);
        assert!(rescaled_ground_state(&gs, 0.0, 0.3).is_err());
    }

    #[test]
    fn neumann_zero_terms_is_the_frame() {
        let t = neumann_tail(3.0, 1.1448, 2.0, 0).unwrap();
        assert!(t.a_minus.iter().all(|v| *v == 1.0));
        assert!(t.a_plus_scaled.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn neumann_rejects_bad_arguments() {
        assert!(neumann_tail(1.0, 1.0, 2.0, 4).is_err());
        assert!(neumann_tail(3.0, 1.1, 1.0, 4).is_err());
        assert!(neumann_tail(3.0, 1.1, 2.0, 1).is_err());
    }
}
