//! Observability Gramians, quasimode costs and their scaling fits.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::dense::{hermitian_eigen, hermitian_eigenvalues};
use crate::error::{invalid, precondition, GrushinError, Result};
use crate::exec::Exec;
use crate::propagators::frequencies;
use crate::quadrature::linear_fit;
use crate::spectral::{build_basis_with, BasisOptions, Grid1D, GrushinParams, SpectralBasis};

/// Least eigenvalues below this count as numerically singular.
pub const SINGULAR_EIG: f64 = 1e-14;
/// |Δ|·T below which time integrals use the coincident-frequency branch.
pub const DEGENERATE_PHASE: f64 = 1e-8;
/// Largest basis handled by the dense Gramian and damped-wave paths.
pub const MAX_DENSE_DIM: usize = 6000;

/// Horizontal strip (-1, 1) × (a₁, a₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRegion {
    pub a1: f64,
    pub a2: f64,
}

impl ObservationRegion {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        let len = a2 - a1;
        if !(a1.is_finite() && a2.is_finite() && len > 0.0 && len <= 2.0 * PI + 1e-12) {
            return Err(invalid(format!("strip ({a1}, {a2}) must satisfy 0 < a2 - a1 <= 2π")));
        }
        if a1 < 0.0 || a2 > 2.0 * PI + 1e-12 {
            return Err(invalid(format!("strip ({a1}, {a2}) must lie in [0, 2π]")));
        }
        Ok(Self { a1, a2 })
    }

    pub fn full() -> Self {
        Self { a1: 0.0, a2: 2.0 * PI }
    }

    pub fn length(&self) -> f64 {
        self.a2 - self.a1
    }

    pub fn is_full(&self) -> bool {
        (self.length() - 2.0 * PI).abs() < 1e-12
    }

    /// Whether the complement of I contains a neighborhood of y = 0.
    pub fn avoids_origin(&self) -> bool {
        self.a1 > 0.0 && self.a2 < 2.0 * PI
    }

    pub fn contains(&self, y: f64) -> bool {
        let y = y.rem_euclid(2.0 * PI);
        y >= self.a1 && y <= self.a2
    }

    /// (1/2π)∫_I e^{idy} dy.
    pub fn fourier_factor(&self, d: i64) -> c64 {
        if d == 0 || self.is_full() {
            return if d == 0 {
                c64::new(self.length() / (2.0 * PI), 0.0)
            } else {
                c64::new(0.0, 0.0)
            };
        }
        let df = d as f64;
        (c64::from_polar(1.0, df * self.a2) - c64::from_polar(1.0, df * self.a1))
            / c64::new(0.0, 2.0 * PI * df)
    }
}

/// Pairwise x-overlaps ∫φ_jφ_k over the basis grid.
fn x_overlaps(basis: &SpectralBasis) -> Mat<f64> {
    let nx = basis.grid().len();
    let n = basis.len();
    let h = basis.grid().spacing();
    let phi = Mat::<f64>::from_fn(nx, n, |i, j| basis.pairs()[j].eigenfunction[i]);
    let mut x = phi.transpose() * &phi;
    for j in 0..n {
        for i in 0..n {
            x[(i, j)] *= h;
        }
    }
    x
}

/// P_ω with entries ⟨𝟙_ω Φ_j, Φ_k⟩.
pub fn omega_matrix(basis: &SpectralBasis, region: &ObservationRegion) -> Result<Mat<c64>> {
    if basis.is_empty() {
        return Err(precondition("omega matrix of an empty basis"));
    }
    if basis.len() > MAX_DENSE_DIM {
        return Err(precondition(format!(
            "basis dimension {} exceeds the dense limit {MAX_DENSE_DIM}; lower the cutoff or set n_cap",
            basis.len()
        )));
    }
    let pairs = basis.pairs();
    let n = pairs.len();
    if region.is_full() {
        return Ok(Mat::<c64>::from_fn(n, n, |i, j| {
            c64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        }));
    }
    let x = x_overlaps(basis);
    Ok(Mat::<c64>::from_fn(n, n, |j, k| {
        if pairs[j].n == pairs[k].n {
            // orthonormal within a fiber
            let v = if j == k { 1.0 } else { x[(j, k)] };
            region.fourier_factor(0) * v
        } else {
            region.fourier_factor(pairs[j].n - pairs[k].n) * x[(j, k)]
        }
    }))
}

#[derive(Debug, Clone)]
pub struct Gramian {
    pub matrix: Mat<c64>,
    pub horizon: f64,
    pub s: u32,
    pub region: ObservationRegion,
}

/// ∫₀ᵀ e^{iΔt} dt.
pub fn phase_integral(delta: f64, t: f64) -> c64 {
    if (delta * t).abs() < DEGENERATE_PHASE {
        c64::new(t, 0.0)
    } else {
        (c64::from_polar(1.0, delta * t) - 1.0) / c64::new(0.0, delta)
    }
}

pub fn gramian(basis: &SpectralBasis, region: &ObservationRegion, t: f64, s: u32) -> Result<Gramian> {
    let p = omega_matrix(basis, region)?;
    gramian_from_omega(&p, &frequencies(basis, s), region, t, s)
}

/// Gramian from a precomputed P_ω and frequencies ω_j = λ_j^{2s}.
pub fn gramian_from_omega(
    p: &Mat<c64>,
    freqs: &[f64],
    region: &ObservationRegion,
    t: f64,
    s: u32,
) -> Result<Gramian> {
    if !(t > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {t}")));
    }
    let n = freqs.len();
    let matrix = Mat::<c64>::from_fn(n, n, |j, k| p[(j, k)] * phase_integral(freqs[k] - freqs[j], t));
    Ok(Gramian {
        matrix,
        horizon: t,
        s,
        region: *region,
    })
}

/// Oracle: composite Simpson in t of P_ω[j,k] e^{i(ω_k - ω_j)t}.
pub fn gramian_by_quadrature(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    t: f64,
    s: u32,
    steps: usize,
) -> Result<Mat<c64>> {
    let p = omega_matrix(basis, region)?;
    let w = frequencies(basis, s);
    let steps = steps + steps % 2;
    let dt = t / steps as f64;
    let n = w.len();
    Ok(Mat::<c64>::from_fn(n, n, |j, k| {
        let d = w[k] - w[j];
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..=steps {
            let c = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += c64::from_polar(c, d * i as f64 * dt);
        }
        p[(j, k)] * acc * (dt / 3.0)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsConstant {
    pub least_eigenvalue: f64,
    /// 1/least eigenvalue, +∞ when singular.
    pub value: f64,
    pub singular: bool,
}

impl Gramian {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }
}

pub fn obs_constant(g: &Gramian) -> Result<ObsConstant> {
    let ev = g.eigenvalues()?;
    let least = ev.first().copied().unwrap_or(0.0);
    if least < -1e-10 * g.horizon.max(1.0) {
        return Err(precondition(format!(
            "gramian is not positive semidefinite: least eigenvalue {least:.3e}"
        )));
    }
    Ok(classify_least(least))
}

fn classify_least(least: f64) -> ObsConstant {
    if least < SINGULAR_EIG {
        ObsConstant {
            least_eigenvalue: least,
            value: f64::INFINITY,
            singular: true,
        }
    } else {
        ObsConstant {
            least_eigenvalue: least,
            value: 1.0 / least,
            singular: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// s > (γ+1)/2: observable for every T.
    Observable,
    /// s = (γ+1)/2: observable iff T ≥ T_inf.
    Critical,
    /// s < (γ+1)/2: never observable.
    NonObservable,
}

pub fn classify_regime(gamma: f64, s: u32) -> Regime {
    let c = 0.5 * (gamma + 1.0);
    let s = s as f64;
    if (s - c).abs() < 1e-12 {
        Regime::Critical
    } else if s > c {
        Regime::Observable
    } else {
        Regime::NonObservable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Strictly increasing in Λ.
    Growth,
    /// max/min within the plateau factor.
    Plateau,
    Mixed,
}

/// Plateau tolerance: largest max/min ratio counted as stable.
pub const PLATEAU_FACTOR: f64 = 1.5;

/// Plateau wins over growth: a converged constant may still creep up in the last digits.
pub fn classify_trend(values: &[f64]) -> Trend {
    if values.is_empty() || !values.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Trend::Mixed;
    }
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    if max / min <= PLATEAU_FACTOR {
        Trend::Plateau
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Growth
    } else {
        Trend::Mixed
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Interior x-points of every basis grid (rounded up to even).
    pub grid_points: usize,
    pub n_cap: Option<u64>,
    pub exec: Exec,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            grid_points: 200,
            n_cap: None,
            exec: Exec::Parallel,
        }
    }
}

/// Even interior point count resolving Λ with at least `floor` points.
pub fn grid_for_cutoff(cutoff: f64, floor: usize) -> usize {
    let need = (12.0 * cutoff / PI).ceil() as usize;
    let n = need.max(floor);
    n + n % 2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeRow {
    pub horizon: f64,
    pub cutoff: f64,
    pub dimension: usize,
    pub least_eigenvalue: f64,
    pub obs_constant: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeTable {
    pub gamma: f64,
    pub s: u32,
    pub regime: Regime,
    pub region: ObservationRegion,
    pub n_cap: Option<u64>,
    pub rows: Vec<RegimeRow>,
    /// Trend in Λ per horizon, in the order of the horizon list.
    pub trends: Vec<(f64, Trend)>,
}

impl RegimeTable {
    /// Constants along Λ for one horizon.
    pub fn series(&self, horizon: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.horizon == horizon)
            .map(|r| r.obs_constant)
            .collect()
    }
}

pub fn regime_scan(
    gamma: f64,
    s: u32,
    horizons: &[f64],
    cutoffs: &[f64],
    region: &ObservationRegion,
    settings: &ScanSettings,
) -> Result<RegimeTable> {
    let params = GrushinParams::new(gamma, s)?;
    if horizons.is_empty() || cutoffs.is_empty() {
        return Err(invalid("regime scan needs horizons and cutoffs"));
    }
    let mut rows = Vec::new();
    for &cutoff in cutoffs {
        let grid = Grid1D::interior(grid_for_cutoff(cutoff, settings.grid_points))?;
        let basis = build_basis_with(
            &params,
            cutoff,
            &grid,
            BasisOptions {
                n_cap: settings.n_cap,
                m_cap: None,
                exec: settings.exec,
            },
        )?;
        let p = omega_matrix(&basis, region)?;
        let w = frequencies(&basis, s);
        for &t in horizons {
            let g = gramian_from_omega(&p, &w, region, t, s)?;
            let c = obs_constant(&g)?;
            log::debug!("regime scan γ={gamma} s={s} Λ={cutoff} T={t}: C={}", c.value);
            rows.push(RegimeRow {
                horizon: t,
                cutoff,
                dimension: basis.len(),
                least_eigenvalue: c.least_eigenvalue,
                obs_constant: c.value,
                singular: c.singular,
            });
        }
    }
    let mut table = RegimeTable {
        gamma,
        s,
        regime: classify_regime(gamma, s),
        region: *region,
        n_cap: settings.n_cap,
        rows,
        trends: Vec::new(),
    };
    table.trends = horizons
        .iter()
        .map(|&t| (t, classify_trend(&table.series(t))))
        .collect();
    Ok(table)
}

/// Indices of basis pairs with ψ(h²λ²) > 0.
pub fn window_indices(basis: &SpectralBasis, psi: &CutoffProfile, h: f64) -> Vec<usize> {
    basis
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, p)| psi.eval(h * h * p.lambda_sq) > 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Dense solves above this size are pruned by the Schur bound.
pub const DENSE_WINDOW_LIMIT: usize = 2500;
/// Modes with t·d² above this are dropped; λ_min moves by at most 1/K.
pub const PRUNE_K: f64 = 1e4;

fn window_omega(basis: &SpectralBasis, region: &ObservationRegion, idx: &[usize]) -> Result<Mat<c64>> {
    let sub = basis.select(idx)?;
    omega_matrix(&sub, region)
}

/// Least eigenvalue of P_ω + h^{-2α}(1 - h²λ²)² on the ψ-window.
pub fn quasimode_cost(
    h: f64,
    alpha: f64,
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
) -> Result<f64> {
    let idx = window_indices(basis, psi, h);
    if idx.is_empty() {
        return Err(precondition(format!("empty spectral window at h = {h}")));
    }
    let t = h.powf(-2.0 * alpha);
    let d = |j: usize| 1.0 - h * h * basis.pairs()[j].lambda_sq;
    let mut kept = idx.clone();
    if kept.len() > DENSE_WINDOW_LIMIT {
        kept.sort_by(|&a, &b| d(a).abs().total_cmp(&d(b).abs()));
        let limit = kept
            .iter()
            .position(|&j| t * d(j) * d(j) > PRUNE_K)
            .unwrap_or(kept.len());
        kept.truncate(limit.clamp(1, DENSE_WINDOW_LIMIT));
        kept.sort_unstable();
    }
    let p = window_omega(basis, region, &kept)?;
    let mut a = p;
    for (r, &j) in kept.iter().enumerate() {
        a[(r, r)] += t * d(j) * d(j);
    }
    Ok(hermitian_eigenvalues(&a)?[0])
}

/// t* = λ_max(D⁻¹(θ - P_ω)D⁻¹) on a subset of the window.
fn threshold_on(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    h: f64,
    theta: f64,
    subset: &[usize],
) -> Result<f64> {
    let p = window_omega(basis, region, subset)?;
    let dinv: Vec<f64> = subset
        .iter()
        .map(|&j| 1.0 / (1.0 - h * h * basis.pairs()[j].lambda_sq))
        .collect();
    let n = subset.len();
    let m = Mat::<c64>::from_fn(n, n, |i, k| {
        let delta = if i == k { theta } else { 0.0 };
        (c64::new(delta, 0.0) - p[(i, k)]) * (dinv[i] * dinv[k])
    });
    let ev = hermitian_eigenvalues(&m)?;
    Ok(*ev.last().unwrap())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub h: f64,
    pub window: usize,
    pub solved: usize,
    pub t_star: f64,
    pub alpha_star: f64,
}

/// α*(h), where quasimode_cost crosses θ, from t* = h^{-2α*}.
pub fn threshold_exponent(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
    h: f64,
    theta: f64,
) -> Result<ThresholdPoint> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("threshold fraction must lie in (0, 1)"));
    }
    let mut idx = window_indices(basis, psi, h);
    if idx.is_empty() {
        return Err(precondition(format!("empty spectral window at h = {h}")));
    }
    let d = |j: usize| (1.0 - h * h * basis.pairs()[j].lambda_sq).abs();
    if idx.iter().any(|&j| d(j) == 0.0) {
        return Err(precondition("window contains λ² = h⁻² exactly; threshold is infinite"));
    }
    idx.sort_by(|&a, &b| d(a).total_cmp(&d(b)));
    let window = idx.len();
    let mut take = window.min(DENSE_WINDOW_LIMIT / 4).max(1);
    let mut t_star;
    loop {
        let mut subset = idx[..take].to_vec();
        subset.sort_unstable();
        t_star = threshold_on(basis, region, h, theta, &subset)?;
        if take == window {
            break;
        }
        if !(t_star > 0.0) {
            return Err(GrushinError::Unfittable(format!(
                "threshold is not positive on the {take} nearest modes at h = {h}"
            )));
        }
        // grow the set to every mode with t*·d² ≤ K
        let want = idx.partition_point(|&j| t_star * d(j) * d(j) <= PRUNE_K);
        if want <= take {
            break;
        }
        if want > 2 * DENSE_WINDOW_LIMIT {
            return Err(precondition(format!(
                "threshold solve needs {want} modes at h = {h}; window too large"
            )));
        }
        take = want;
    }
    if !(t_star > 1.0) {
        return Err(GrushinError::Unfittable(format!(
            "t* = {t_star:.3e} at h = {h} gives no positive exponent"
        )));
    }
    Ok(ThresholdPoint {
        h,
        window,
        solved: take,
        t_star,
        alpha_star: t_star.ln() / (2.0 * (1.0 / h).ln()),
    })
}

/// Oracle: bisection of quasimode_cost(α) = θ.
pub fn threshold_by_bisection(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
    h: f64,
    theta: f64,
    bracket: [f64; 2],
    tol: f64,
) -> Result<f64> {
    let [mut lo, mut hi] = bracket;
    let f = |a: f64| quasimode_cost(h, a, basis, region, psi).map(|c| c - theta);
    if f(lo)? > 0.0 || f(hi)? < 0.0 {
        return Err(precondition("bisection bracket does not straddle the threshold"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub h_values: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// Intercept of α* = a + b/ln(1/h): the critical exponent estimate.
    pub exponent: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub theta: f64,
    pub points: Vec<ThresholdPoint>,
}

/// Threshold fraction of the full-circle cost floor used by the exponent fit.
pub const DEFAULT_THETA: f64 = 0.1;

pub fn fit_resolvent_exponent(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    psi: &CutoffProfile,
    h_list: &[f64],
    theta: f64,
) -> Result<ScalingFit> {
    if h_list.len() < 4 {
        return Err(precondition(format!(
            "exponent fit needs at least 4 values of h, got {}",
            h_list.len()
        )));
    }
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    for w in hs.windows(2) {
        if ((w[0] / w[1]).log2() - (w[0] / w[1]).log2().round()).abs() > 1e-9 || w[0] == w[1] {
            return Err(invalid("h values must be distinct and dyadically related"));
        }
    }
    let points = basis
        .options()
        .exec
        .map_slice(&hs, |&h| threshold_exponent(basis, region, psi, h, theta))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let alpha: Vec<f64> = points.iter().map(|p| p.alpha_star).collect();
    let increasing = alpha.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = alpha.windows(2).all(|w| w[1] <= w[0]);
    if !(increasing || decreasing) {
        return Err(GrushinError::Unfittable(format!(
            "α*(h) is not monotone in h: {alpha:?}"
        )));
    }
    let u: Vec<f64> = hs.iter().map(|h| 1.0 / (1.0 / h).ln()).collect();
    let (a, b, r2) = linear_fit(&u, &alpha);
    Ok(ScalingFit {
        h_values: hs,
        alpha_star: alpha,
        exponent: a,
        slope: b,
        r_squared: r2,
        theta,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatConstant {
    /// Largest ratio ‖e^{-TA}u₀‖² / ∫₀ᵀ‖e^{-tA}u₀‖²_ω; +∞ when singular.
    pub value: f64,
    pub singular: bool,
    /// Final-state weight carried by the numerical null space of the heat Gramian.
    pub null_weight: f64,
}

/// Relative eigenvalue floor of the heat Gramian.
pub const HEAT_RANK_TOL: f64 = 1e-14;

pub fn heat_final_constant(
    basis: &SpectralBasis,
    region: &ObservationRegion,
    t: f64,
    s: u32,
) -> Result<HeatConstant> {
    if !(t > 0.0) {
        return Err(invalid("heat horizon must be positive"));
    }
    let p = omega_matrix(basis, region)?;
    let w = frequencies(basis, s);
    let n = w.len();
    let hmat = Mat::<c64>::from_fn(n, n, |j, k| {
        let sigma = w[j] + w[k];
        let f = if sigma * t < DEGENERATE_PHASE {
            t
        } else {
            -(-sigma * t).exp_m1() / sigma
        };
        p[(j, k)] * f
    });
    let e: Vec<f64> = w.iter().map(|v| (-2.0 * t * v).exp()).collect();
    let (vals, vecs) = hermitian_eigen(&hmat)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let floor = HEAT_RANK_TOL * top;
    let kept: Vec<usize> = (0..n).filter(|&i| vals[i] > floor).collect();
    let mut null_weight = 0.0f64;
    for i in (0..n).filter(|&i| vals[i] <= floor) {
        let wgt: f64 = (0..n).map(|r| vecs[(r, i)].norm_sqr() * e[r]).sum();
        null_weight = null_weight.max(wgt);
    }
    let k = kept.len();
    let m = Mat::<c64>::from_fn(k, k, |a, b| {
        let (ia, ib) = (kept[a], kept[b]);
        let s: c64 = (0..n).map(|r| vecs[(r, ia)].conj() * vecs[(r, ib)] * e[r]).sum();
        s / (vals[ia] * vals[ib]).sqrt()
    });
    let value = *hermitian_eigenvalues(&m)?.last().unwrap_or(&0.0);
    let singular = null_weight > 1e3 * HEAT_RANK_TOL * e.iter().cloned().fold(0.0, f64::max);
    Ok(HeatConstant {
        value: if singular { f64::INFINITY } else { value },
        singular,
        null_weight,
    })
}

/// Closed form on the full circle: max 2ω e^{-2Tω}/(1 - e^{-2Tω}), ω = λ^{2s}.
pub fn heat_full_circle(basis: &SpectralBasis, t: f64, s: u32) -> f64 {
    frequencies(basis, s)
        .iter()
        .map(|w| 2.0 * w * (-2.0 * t * w).exp() / -(-2.0 * t * w).exp_m1())
        .fold(0.0, f64::max)
}

/// T_inf ≥ a₁/μ₀^s in the critical case.
pub fn tinf_lower_bound(gamma: f64, s: u32, region: &ObservationRegion, mu0: f64) -> Result<f64> {
    if classify_regime(gamma, s) != Regime::Critical {
        return Err(precondition(format!(
            "T_inf bound needs s = (γ+1)/2, got γ = {gamma}, s = {s}"
        )));
    }
    if !region.avoids_origin() {
        return Err(precondition("strip must leave a neighborhood of y = 0 uncovered"));
    }
    Ok(region.a1 / mu0.powi(s as i32))
}

/// t' = h^{2s-1} T.
pub fn localized_time_rescale(h: f64, s: u32, t: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h must be positive"));
    }
    Ok(h.powi(2 * s as i32 - 1) * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::default_window;
    use crate::spectral::build_basis;

    fn small_basis(gamma: f64, s: u32, cutoff: f64) -> SpectralBasis {
        let p = GrushinParams::new(gamma, s).unwrap();
        build_basis(&p, cutoff, &Grid1D::interior(grid_for_cutoff(cutoff, 80)).unwrap()).unwrap()
    }

    #[test]
    fn full_circle_gives_identity_and_inverse_horizon() {
        let b = small_basis(1.0, 1, 6.0);
        let full = ObservationRegion::full();
        let p = omega_matrix(&b, &full).unwrap();
        for j in 0..b.len() {
            assert_eq!(p[(j, j)], c64::new(1.0, 0.0));
        }
        let g = gramian(&b, &full, 2.0, 1).unwrap();
        let c = obs_constant(&g).unwrap();
        assert!((c.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn omega_matrix_structure() {
        let b = small_basis(1.0, 1, 8.0);
        let r = ObservationRegion::new(1.0, 1.0 + PI).unwrap();
        let p = omega_matrix(&b, &r).unwrap();
        let pairs = b.pairs();
        for j in 0..b.len() {
            assert!((p[(j, j)].re - 0.5).abs() < 1e-12);
            for k in 0..b.len() {
                if j != k && pairs[j].n == pairs[k].n {
                    assert!(p[(j, k)].norm() < 1e-8);
                }
            }
        }
        assert!(crate::dense::hermitian_defect(&p) < 1e-12);
    }

    #[test]
    fn closed_form_matches_time_quadrature() {
        let b = small_basis(1.0, 1, 5.0);
        let r = ObservationRegion::new(1.0, 2.5).unwrap();
        let g = gramian(&b, &r, 1.0, 1).unwrap();
        let q = gramian_by_quadrature(&b, &r, 1.0, 1, 2000).unwrap();
        let mut worst = 0.0f64;
        for j in 0..b.len() {
            for k in 0..b.len() {
                worst = worst.max((g.matrix[(j, k)] - q[(j, k)]).norm());
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn enlarging_strip_shrinks_constant() {
        let b = small_basis(1.0, 2, 6.0);
        let small = ObservationRegion::new(1.0, 2.0).unwrap();
        let big = ObservationRegion::new(0.5, 3.0).unwrap();
        let cs = obs_constant(&gramian(&b, &small, 1.0, 2).unwrap()).unwrap();
        let cb = obs_constant(&gramian(&b, &big, 1.0, 2).unwrap()).unwrap();
        assert!(cb.value <= cs.value);
    }

    #[test]
    fn full_circle_quasimode_cost_at_least_one() {
        let b = small_basis(1.0, 1, 12.0);
        let psi = default_window();
        let c = quasimode_cost(0.125, 2.0, &b, &ObservationRegion::full(), &psi).unwrap();
        assert!(c >= 1.0 - 1e-12);
    }

    #[test]
    fn closed_form_threshold_matches_bisection() {
        let b = small_basis(1.0, 1, 12.0);
        let psi = default_window();
        let r = ObservationRegion::new(1.0, 1.0 + PI).unwrap();
        let h = 0.125;
        let pt = threshold_exponent(&b, &r, &psi, h, 0.1).unwrap();
        let a = threshold_by_bisection(&b, &r, &psi, h, 0.1, [0.0, 8.0], 1e-10).unwrap();
        assert!((pt.alpha_star - a).abs() < 1e-6, "{} vs {a}", pt.alpha_star);
    }

    #[test]
    fn heat_full_circle_matches_closed_form() {
        let b = small_basis(1.0, 1, 6.0);
        let v = heat_final_constant(&b, &ObservationRegion::full(), 0.5, 1).unwrap();
        let exact = heat_full_circle(&b, 0.5, 1);
        assert!(!v.singular);
        assert!((v.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn time_bounds_and_rescale() {
        let r = ObservationRegion::new(1.0, 2.0).unwrap();
        assert!((tinf_lower_bound(1.0, 1, &r, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(tinf_lower_bound(1.0, 2, &r, 1.0).is_err());
        assert_eq!(localized_time_rescale(1.0, 1, 3.0).unwrap(), 3.0);
        assert_eq!(localized_time_rescale(0.5, 1, 4.0).unwrap(), 2.0);
        assert_eq!(localized_time_rescale(0.5, 2, 8.0).unwrap(), 1.0);
    }

    #[test]
    fn single_h_fit_is_rejected() {
        let b = small_basis(1.0, 1, 6.0);
        let psi = default_window();
        let r = ObservationRegion::new(1.0, 1.0 + PI).unwrap();
        assert!(fit_resolvent_exponent(&b, &r, &psi, &[0.25], 0.1).is_err());
    }

    #[test]
    fn trend_classification() {
        assert_eq!(classify_trend(&[1.0, 2.0, 3.0]), Trend::Growth);
        assert_eq!(classify_trend(&[2.0, 2.1, 2.05]), Trend::Plateau);
        assert_eq!(classify_trend(&[f64::INFINITY; 3]), Trend::Mixed);
        assert_eq!(classify_trend(&[57.99517, 57.99518]), Trend::Plateau);
    }
}
