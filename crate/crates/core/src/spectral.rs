//! Fourier-fiber eigenproblems of the Grushin operator and the truncated 2D eigenbasis.
//!
//! Each Fourier mode `e^{iny}` reduces `-Δ_γ` to the 1D operator
//! `-∂ₓ² + n²|x|^{2γ}` on (-1, 1) with Dirichlet conditions, discretized by
//! central differences on a uniform interior grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::exec::Exec;
use crate::tridiag::SymTridiagonal;

/// Relative tolerance of the bisection eigenvalue solve.
pub const EIGEN_REL_TOL: f64 = 1e-12;
/// Orthonormality tolerance asserted on fiber eigenvectors.
pub const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrushinParams {
    pub gamma: f64,
    pub s: u32,
}

impl GrushinParams {
    pub fn new(gamma: f64, s: u32) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(invalid(format!("gamma must be >= 1, got {gamma}")));
        }
        if s < 1 {
            return Err(invalid("s must be a positive integer"));
        }
        Ok(Self { gamma, s })
    }

    /// Exponent 2/(γ+1) of the degenerate scaling λ_{m,n} = |n|^{2/(γ+1)} μ_{m,n}.
    pub fn scaling_exponent(&self) -> f64 {
        2.0 / (self.gamma + 1.0)
    }

    /// Whether s equals (γ+1)/2, the critical coupling.
    pub fn is_critical(&self) -> bool {
        (self.s as f64 - 0.5 * (self.gamma + 1.0)).abs() < 1e-12
    }
}

/// Uniform grid of interior points of (-1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    points: Vec<f64>,
    spacing: f64,
}

impl Grid1D {
    /// `n` interior points with spacing 2/(n+1); the Dirichlet endpoints are excluded.
    pub fn interior(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("grid needs at least one point"));
        }
        let spacing = 2.0 / (n as f64 + 1.0);
        let points = (1..=n).map(|i| -1.0 + i as f64 * spacing).collect();
        Ok(Self { points, spacing })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("empty grid"));
        }
        if points.iter().any(|p| !(p.is_finite() && *p > -1.0 && *p < 1.0)) {
            return Err(invalid("grid points must lie strictly inside (-1, 1)"));
        }
        if points.len() == 1 {
            let spacing = 1.0 - points[0].abs();
            return Ok(Self { points, spacing });
        }
        let spacing = points[1] - points[0];
        if spacing <= 0.0 {
            return Err(invalid("grid must be strictly increasing"));
        }
        for w in points.windows(2) {
            if ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing {
                return Err(invalid("grid spacing is not uniform"));
            }
        }
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_node_at_origin(&self) -> bool {
        self.points.iter().any(|p| p.abs() < 1e-12 * self.spacing)
    }
}

/// The discretized fiber operator `-∂ₓ² + n²|x|^{2γ}` for one Fourier mode.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub n: i64,
    pub spacing: f64,
    pub matrix: SymTridiagonal,
}

pub fn assemble_fiber_operator(n: i64, params: &GrushinParams, grid: &Grid1D) -> Result<FiberOperator> {
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    let h = grid.spacing();
    let n2 = (n as f64) * (n as f64);
    let diag = grid
        .points()
        .iter()
        .map(|x| 2.0 / (h * h) + n2 * x.abs().powf(2.0 * params.gamma))
        .collect();
    let off = vec![-1.0 / (h * h); grid.len() - 1];
    Ok(FiberOperator {
        n,
        spacing: h,
        matrix: SymTridiagonal::new(diag, off)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberEigenpair {
    pub n: i64,
    pub m: usize,
    pub lambda_sq: f64,
    pub eigenfunction: Arc<[f64]>,
}

impl FiberEigenpair {
    pub fn lambda(&self) -> f64 {
        self.lambda_sq.sqrt()
    }
}

/// The `m_max` smallest eigenpairs of a fiber operator, L²-normalized under the grid quadrature.
pub fn solve_fiber_spectrum(op: &FiberOperator, m_max: usize) -> Result<Vec<FiberEigenpair>> {
    if m_max == 0 {
        return Err(invalid("m_max must be at least 1"));
    }
    let pairs = op.matrix.smallest_eigenpairs(m_max, EIGEN_REL_TOL)?;
    let scale = op.spacing.sqrt();
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(k, (lambda_sq, v))| {
            let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let sign = v
                .iter()
                .find(|x| x.abs() > 1e-12 * peak)
                .map(|x| x.signum())
                .unwrap_or(1.0);
            let f: Vec<f64> = v.iter().map(|x| sign * x / scale).collect();
            FiberEigenpair {
                n: op.n,
                m: k + 1,
                lambda_sq,
                eigenfunction: f.into(),
            }
        })
        .collect())
}

/// Fiber eigenvalues only (no vectors), the `count` smallest.
pub fn fiber_eigenvalues(n: i64, params: &GrushinParams, grid: &Grid1D, count: usize) -> Result<Vec<f64>> {
    let op = assemble_fiber_operator(n, params, grid)?;
    (0..count.min(grid.len()))
        .map(|k| op.matrix.eigenvalue(k, EIGEN_REL_TOL))
        .collect()
}

/// Fiber eigenvalues extrapolated from spacings h and h/2 (grids of N and 2N+1 points).
pub fn richardson_fiber_eigenvalues(
    n: i64,
    params: &GrushinParams,
    points: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let coarse = fiber_eigenvalues(n, params, &Grid1D::interior(points)?, count)?;
    let fine = fiber_eigenvalues(n, params, &Grid1D::interior(2 * points + 1)?, count)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

/// μ_{m,n} = λ²_{m,n} / |n|^{2/(γ+1)}.
pub fn scaling_check(pair: &FiberEigenpair, params: &GrushinParams) -> Result<f64> {
    if pair.n == 0 {
        return Err(precondition("scaling check needs n != 0"));
    }
    Ok(pair.lambda_sq / (pair.n.unsigned_abs() as f64).powf(params.scaling_exponent()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisOptions {
    pub n_cap: Option<u64>,
    pub m_cap: Option<usize>,
    pub exec: Exec,
}

impl Default for BasisOptions {
    fn default() -> Self {
        Self {
            n_cap: None,
            m_cap: None,
            exec: Exec::Parallel,
        }
    }
}

/// Truncated eigenbasis {φ_{m,n}(x) e^{iny}/√(2π)} sorted by λ².
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    params: GrushinParams,
    grid: Grid1D,
    pairs: Vec<FiberEigenpair>,
    energy_cutoff: f64,
    options: BasisOptions,
    id: u64,
}

fn fingerprint(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Largest spacing accepted for cutoff Λ: 12 points per wavelength 2π/Λ.
pub fn resolution_limit(cutoff: f64) -> f64 {
    2.0 * std::f64::consts::PI / cutoff / 12.0
}

pub fn build_basis(params: &GrushinParams, cutoff: f64, grid: &Grid1D) -> Result<SpectralBasis> {
    build_basis_with(params, cutoff, grid, BasisOptions::default())
}

pub fn build_basis_with(
    params: &GrushinParams,
    cutoff: f64,
    grid: &Grid1D,
    options: BasisOptions,
) -> Result<SpectralBasis> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(invalid("energy cutoff must be positive"));
    }
    let limit = resolution_limit(cutoff);
    if grid.spacing() > limit {
        return Err(GrushinError::UnderResolved {
            spacing: grid.spacing(),
            limit,
            cutoff,
        });
    }
    let bound = cutoff * cutoff;
    let first = |n: i64| -> Result<f64> {
        let op = assemble_fiber_operator(n, params, grid)?;
        op.matrix.eigenvalue(0, EIGEN_REL_TOL)
    };
    if first(0)? > bound {
        return Err(precondition(format!(
            "cutoff {cutoff} lies below the first eigenvalue"
        )));
    }
    // λ_{1,n} grows monotonically in |n|: bracket the last admissible mode.
    let cap = options.n_cap.map(|c| c as i64).unwrap_or(i64::MAX / 4);
    let mut lo: i64 = 0;
    let mut hi: i64 = 1;
    while hi <= cap && first(hi)? <= bound {
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    let mut hi = hi.min(cap.saturating_add(1));
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if first(mid)? <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_max = lo;
    let threshold = next_up(bound);
    let m_cap = options.m_cap.unwrap_or(usize::MAX);
    let fibers: Vec<Result<Vec<FiberEigenpair>>> = options.exec.map_range(n_max as usize + 1, |n| {
        let op = assemble_fiber_operator(n as i64, params, grid)?;
        let count = op.matrix.sturm_count(threshold).min(m_cap);
        if count == 0 {
            return Ok(Vec::new());
        }
        solve_fiber_spectrum(&op, count)
    });
    let mut pairs = Vec::new();
    for fiber in fibers {
        for p in fiber? {
            if p.n != 0 {
                pairs.push(FiberEigenpair {
                    n: -p.n,
                    ..p.clone()
                });
            }
            pairs.push(p);
        }
    }
    pairs.sort_by(|a, b| {
        a.lambda_sq
            .total_cmp(&b.lambda_sq)
            .then(a.n.cmp(&b.n))
            .then(a.m.cmp(&b.m))
    });
    let id = fingerprint(&[
        params.gamma.to_bits(),
        params.s as u64,
        grid.len() as u64,
        cutoff.to_bits(),
        options.n_cap.unwrap_or(0),
        options.m_cap.unwrap_or(0) as u64,
    ]);
    Ok(SpectralBasis {
        params: *params,
        grid: grid.clone(),
        pairs,
        energy_cutoff: cutoff,
        options,
        id,
    })
}

fn next_up(x: f64) -> f64 {
    if x.is_finite() && x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        x
    }
}

impl SpectralBasis {
    pub fn params(&self) -> &GrushinParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn pairs(&self) -> &[FiberEigenpair] {
        &self.pairs
    }

    pub fn energy_cutoff(&self) -> f64 {
        self.energy_cutoff
    }

    pub fn options(&self) -> &BasisOptions {
        &self.options
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn lambda_sq(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda_sq).collect()
    }

    pub fn max_abs_n(&self) -> u64 {
        self.pairs.iter().map(|p| p.n.unsigned_abs()).max().unwrap_or(0)
    }

    /// Sub-basis of the pairs with λ ≤ `cutoff` (nested truncation).
    pub fn truncate(&self, cutoff: f64) -> Result<SpectralBasis> {
        if cutoff > self.energy_cutoff * (1.0 + 1e-12) {
            return Err(precondition(format!(
                "cannot extend basis from cutoff {} to {cutoff}",
                self.energy_cutoff
            )));
        }
        let bound = cutoff * cutoff;
        let pairs: Vec<_> = self
            .pairs
            .iter()
            .filter(|p| p.lambda_sq <= bound)
            .cloned()
            .collect();
        if pairs.is_empty() {
            return Err(precondition("truncation leaves an empty basis"));
        }
        Ok(SpectralBasis {
            params: self.params,
            grid: self.grid.clone(),
            pairs,
            energy_cutoff: cutoff,
            options: self.options,
            id: fingerprint(&[self.id, cutoff.to_bits()]),
        })
    }

    /// Sub-basis of the listed pair indices (kept in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<SpectralBasis> {
        if indices.is_empty() {
            return Err(precondition("selection is empty"));
        }
        let pairs: Vec<_> = indices
            .iter()
            .map(|&i| {
                self.pairs
                    .get(i)
                    .cloned()
                    .ok_or_else(|| invalid(format!("pair index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        let mut words = vec![self.id];
        words.extend(indices.iter().map(|&i| i as u64));
        Ok(SpectralBasis {
            params: self.params,
            grid: self.grid.clone(),
            pairs,
            energy_cutoff: self.energy_cutoff,
            options: self.options,
            id: fingerprint(&words),
        })
    }

    /// Largest deviation of the per-fiber Gram matrices from the identity.
    pub fn fiber_orthonormality_defect(&self) -> f64 {
        let h = self.grid.spacing();
        let mut worst: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            for b in self.pairs.iter().skip(i) {
                if a.n != b.n {
                    continue;
                }
                let d: f64 = a
                    .eigenfunction
                    .iter()
                    .zip(b.eigenfunction.iter())
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
                    * h;
                let target = if a.m == b.m { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// Rows (n, m, λ², μ) for CSV export; μ is NaN on the n = 0 fiber.
    pub fn spectrum_rows(&self) -> Vec<(i64, usize, f64, f64)> {
        self.pairs
            .iter()
            .map(|p| {
                let mu = scaling_check(p, &self.params).unwrap_or(f64::NAN);
                (p.n, p.m, p.lambda_sq, mu)
            })
            .collect()
    }

    pub fn to_document(&self) -> BasisDocument {
        BasisDocument {
            gamma: self.params.gamma,
            s: self.params.s,
            grid: GridDocument {
                a: -1.0,
                b: 1.0,
                points: self.grid.len(),
            },
            energy_cutoff: self.energy_cutoff,
            pairs: self
                .pairs
                .iter()
                .map(|p| PairDocument {
                    n: p.n,
                    m: p.m,
                    lambda_sq: p.lambda_sq,
                    vector: p.eigenfunction.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &BasisDocument) -> Result<SpectralBasis> {
        let params = GrushinParams::new(doc.gamma, doc.s)?;
        let grid = Grid1D::interior(doc.grid.points)?;
        if doc.pairs.is_empty() {
            return Err(invalid("basis document has no pairs"));
        }
        let mut pairs = Vec::with_capacity(doc.pairs.len());
        for p in &doc.pairs {
            if p.vector.len() != grid.len() {
                return Err(invalid(format!(
                    "pair ({}, {}) has {} samples, grid has {}",
                    p.n,
                    p.m,
                    p.vector.len(),
                    grid.len()
                )));
            }
            pairs.push(FiberEigenpair {
                n: p.n,
                m: p.m,
                lambda_sq: p.lambda_sq,
                eigenfunction: p.vector.clone().into(),
            });
        }
        let id = fingerprint(&[
            params.gamma.to_bits(),
            params.s as u64,
            grid.len() as u64,
            doc.energy_cutoff.to_bits(),
            pairs.len() as u64,
        ]);
        Ok(SpectralBasis {
            params,
            grid,
            pairs,
            energy_cutoff: doc.energy_cutoff,
            options: BasisOptions::default(),
            id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDocument {
    pub a: f64,
    pub b: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDocument {
    pub n: i64,
    pub m: usize,
    pub lambda_sq: f64,
    pub vector: Vec<f64>,
}

/// Serialized form of a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub gamma: f64,
    pub s: u32,
    pub grid: GridDocument,
    pub energy_cutoff: f64,
    pub pairs: Vec<PairDocument>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub cutoff: f64,
    pub count: usize,
    /// Pairs with λ in [Λ/√2, √2·Λ].
    pub window_count: usize,
    /// Pairs with λ ≤ Λ and |n| ≥ Λ/b₀.
    pub degenerate_count: usize,
    pub b0: f64,
}

/// #{(m,n): λ_{m,n} ≤ Λ}.
pub fn weyl_count(basis: &SpectralBasis, cutoff: f64) -> Result<usize> {
    if cutoff > basis.energy_cutoff() * (1.0 + 1e-12) {
        return Err(precondition("count cutoff exceeds the basis cutoff"));
    }
    let bound = cutoff * cutoff;
    Ok(basis.pairs.iter().filter(|p| p.lambda_sq <= bound).count())
}

/// Counting report with the window and degenerate-regime diagnostics.
///
/// The window [Λ/√2, √2·Λ] is clipped to the basis cutoff.
pub fn weyl_report(basis: &SpectralBasis, cutoff: f64, b0: f64) -> Result<WeylReport> {
    let count = weyl_count(basis, cutoff)?;
    let lo = cutoff / std::f64::consts::SQRT_2;
    let hi = cutoff * std::f64::consts::SQRT_2;
    let window_count = basis
        .pairs
        .iter()
        .filter(|p| {
            let l = p.lambda();
            l >= lo && l <= hi
        })
        .count();
    let degenerate_count = basis
        .pairs
        .iter()
        .filter(|p| p.lambda() <= cutoff && (p.n.unsigned_abs() as f64) >= cutoff / b0)
        .count();
    Ok(WeylReport {
        cutoff,
        count,
        window_count,
        degenerate_count,
        b0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    pub value: f64,
    pub n: i64,
    pub m: usize,
}

/// sup over pairs with n ≠ 0 of |n|^{2/(γ+1)}/λ²_{m,n}.
pub fn estimate_c1(basis: &SpectralBasis) -> Result<C1Estimate> {
    let e = basis.params().scaling_exponent();
    basis
        .pairs()
        .iter()
        .filter(|p| p.n != 0)
        .map(|p| C1Estimate {
            value: (p.n.unsigned_abs() as f64).powf(e) / p.lambda_sq,
            n: p.n,
            m: p.m,
        })
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| precondition("no pair with n != 0"))
}

/// L² mass of an eigenfunction outside |x| ≤ 2·b₀^{1/γ}, for pairs in the degenerate regime
/// |n| ≥ λ_{m,n}/b₀.
pub fn concentration_profile(pair: &FiberEigenpair, grid: &Grid1D, gamma: f64, b0: f64) -> Result<f64> {
    if !(b0 > 0.0 && b0 < 1.0) {
        return Err(invalid("b0 must lie in (0, 1)"));
    }
    if (pair.n.unsigned_abs() as f64) < pair.lambda() / b0 {
        return Err(precondition(format!(
            "pair (m={}, n={}) is outside the degenerate regime |n| >= λ/b0",
            pair.m, pair.n
        )));
    }
    let radius = 2.0 * b0.powf(1.0 / gamma);
    let (inside, outside) = mass_split(pair, grid, radius);
    Ok(outside / (inside + outside))
}

/// (inside, outside) quadrature masses of an eigenfunction relative to |x| ≤ radius.
pub fn mass_split(pair: &FiberEigenpair, grid: &Grid1D, radius: f64) -> (f64, f64) {
    let h = grid.spacing();
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (x, v) in grid.points().iter().zip(pair.eigenfunction.iter()) {
        if x.abs() <= radius {
            inside += v * v * h;
        } else {
            outside += v * v * h;
        }
    }
    (inside, outside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn three_point_laplacian_entries() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(3).unwrap();
        let op = assemble_fiber_operator(0, &p, &g).unwrap();
        assert_eq!(op.matrix.diag, vec![8.0; 3]);
        assert_eq!(op.matrix.off, vec![-4.0; 2]);
    }

    #[test]
    fn flat_fiber_spectrum_converges() {
        let p = GrushinParams::new(2.0, 1).unwrap();
        let g = Grid1D::interior(400).unwrap();
        let op = assemble_fiber_operator(0, &p, &g).unwrap();
        let pairs = solve_fiber_spectrum(&op, 3).unwrap();
        for (k, pr) in pairs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI / 2.0).powi(2);
            assert!((pr.lambda_sq - exact).abs() / exact < 1e-4);
            assert_eq!(pr.m, k + 1);
        }
    }

    #[test]
    fn eigenfunctions_normalized_with_positive_first_sample() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(200).unwrap();
        let op = assemble_fiber_operator(12, &p, &g).unwrap();
        for pr in solve_fiber_spectrum(&op, 4).unwrap() {
            let norm: f64 = pr.eigenfunction.iter().map(|v| v * v).sum::<f64>() * g.spacing();
            assert!((norm - 1.0).abs() < 1e-10);
            let peak = pr.eigenfunction.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let first = pr.eigenfunction.iter().find(|v| v.abs() > 1e-12 * peak).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn harmonic_fiber_matches_whole_line_value() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(2000).unwrap();
        let ev = fiber_eigenvalues(10, &p, &g, 1).unwrap();
        assert!((ev[0] - 10.0).abs() / 10.0 < 0.01);
    }

    #[test]
    fn scaling_check_rejects_zero_mode() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let pair = FiberEigenpair {
            n: 0,
            m: 1,
            lambda_sq: 2.5,
            eigenfunction: vec![1.0].into(),
        };
        assert!(scaling_check(&pair, &p).is_err());
    }

    #[test]
    fn basis_just_above_ground_energy_is_single_pair() {
        let p = GrushinParams::new(2.0, 1).unwrap();
        let g = Grid1D::interior(200).unwrap();
        let l10 = fiber_eigenvalues(0, &p, &g, 1).unwrap()[0].sqrt();
        let b = build_basis(&p, l10 * (1.0 + 1e-9), &g).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!((b.pairs()[0].n, b.pairs()[0].m), (0, 1));
    }

    #[test]
    fn basis_rejects_coarse_grid() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(20).unwrap();
        assert!(matches!(
            build_basis(&p, 40.0, &g),
            Err(GrushinError::UnderResolved { .. })
        ));
    }

    #[test]
    fn basis_is_symmetric_in_n_and_sorted() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(120).unwrap();
        let b = build_basis(&p, 8.0, &g).unwrap();
        for w in b.pairs().windows(2) {
            assert!(w[0].lambda_sq <= w[1].lambda_sq);
        }
        let pos = b.pairs().iter().filter(|q| q.n > 0).count();
        let neg = b.pairs().iter().filter(|q| q.n < 0).count();
        assert_eq!(pos, neg);
        assert!(b.fiber_orthonormality_defect() < ORTHO_TOL);
    }

    #[test]
    fn weyl_count_below_spectrum_is_zero() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(120).unwrap();
        let b = build_basis(&p, 8.0, &g).unwrap();
        assert_eq!(weyl_count(&b, 1.5).unwrap(), 0);
    }

    #[test]
    fn c1_requires_nonzero_mode() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(200).unwrap();
        let b = build_basis(&p, 1.6, &g).unwrap();
        assert!(estimate_c1(&b).is_err());
    }

    #[test]
    fn document_round_trip() {
        let p = GrushinParams::new(1.0, 1).unwrap();
        let g = Grid1D::interior(60).unwrap();
        let b = build_basis(&p, 5.0, &g).unwrap();
        let back = SpectralBasis::from_document(&b.to_document()).unwrap();
        assert_eq!(back.len(), b.len());
        assert_eq!(back.pairs()[3], b.pairs()[3]);
    }
}
