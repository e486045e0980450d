//! Cutoff profiles: C^∞ plateau bumps and sharp indicators.
//!
//! Smooth transitions use the step S(t) = f(t)/(f(t) + f(1-t)) with f(t) = e^{-1/t}.
//! Derivatives up to order [`JET_ORDER`] - 1 come from truncated Taylor arithmetic,
//! so commutator terms never see finite-difference noise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Number of Taylor coefficients carried (derivatives 0..=4).
pub const JET_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet([f64; JET_ORDER]);

impl Jet {
    fn constant(c: f64) -> Self {
        let mut a = [0.0; JET_ORDER];
        a[0] = c;
        Jet(a)
    }

    fn variable(x: f64, slope: f64) -> Self {
        let mut a = [0.0; JET_ORDER];
        a[0] = x;
        a[1] = slope;
        Jet(a)
    }

    fn add(self, o: Jet) -> Jet {
        let mut a = self.0;
        a.iter_mut().zip(o.0).for_each(|(x, y)| *x += y);
        Jet(a)
    }

    fn neg(self) -> Jet {
        Jet(self.0.map(|v| -v))
    }

    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_ORDER];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..=i).map(|j| self.0[j] * o.0[i - j]).sum();
        }
        Jet(c)
    }

    fn recip(self) -> Jet {
        let a = self.0;
        let mut c = [0.0; JET_ORDER];
        c[0] = 1.0 / a[0];
        for i in 1..JET_ORDER {
            let s: f64 = (1..=i).map(|j| a[j] * c[i - j]).sum();
            c[i] = -s / a[0];
        }
        Jet(c)
    }

    fn exp(self) -> Jet {
        let a = self.0;
        let mut c = [0.0; JET_ORDER];
        c[0] = a[0].exp();
        // c' = c a'  =>  k c_k = Σ j a_j c_{k-j}
        for k in 1..JET_ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * c[k - j]).sum();
            c[k] = s / k as f64;
        }
        Jet(c)
    }

    /// Derivatives f^{(k)} = k! c_k.
    fn derivatives(self) -> [f64; JET_ORDER] {
        let mut d = self.0;
        let mut fact = 1.0;
        for (k, v) in d.iter_mut().enumerate().skip(1) {
            fact *= k as f64;
            *v *= fact;
        }
        d
    }
}

/// e^{-1/t} for t > 0, zero otherwise.
fn flat(t: Jet) -> Jet {
    if t.0[0] <= 0.0 {
        Jet::constant(0.0)
    } else {
        t.recip().neg().exp()
    }
}

/// Smooth step 0 -> 1 on [0, 1].
fn smooth_step(t: Jet) -> Jet {
    let v = t.0[0];
    if v <= 0.0 {
        return Jet::constant(0.0);
    }
    if v >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = flat(t);
    let b = flat(Jet::constant(1.0).add(t.neg()));
    a.mul(a.add(b).recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    SmoothBump,
    Indicator,
}

/// A cutoff equal to 1 on `plateau` and 0 outside `support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub support: [f64; 2],
    pub plateau: [f64; 2],
}

impl CutoffProfile {
    pub fn smooth_bump(support: [f64; 2], plateau: [f64; 2]) -> Result<Self> {
        let [lo, hi] = support;
        let [plo, phi] = plateau;
        if !(lo < plo && plo <= phi && phi < hi) {
            return Err(invalid(format!(
                "bump needs lo < p_lo <= p_hi < hi, got support {support:?} plateau {plateau:?}"
            )));
        }
        Ok(Self {
            kind: CutoffKind::SmoothBump,
            support,
            plateau,
        })
    }

    /// Indicator of the closed interval [lo, hi].
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid("indicator needs lo <= hi"));
        }
        Ok(Self {
            kind: CutoffKind::Indicator,
            support: [lo, hi],
            plateau: [lo, hi],
        })
    }

    /// Even bump equal to 1 on |x| ≤ inner and 0 on |x| ≥ outer.
    pub fn symmetric(inner: f64, outer: f64) -> Result<Self> {
        Self::smooth_bump([-outer, outer], [-inner, inner])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    /// Value and derivatives up to order 4 at x.
    pub fn jet(&self, x: f64) -> [f64; JET_ORDER] {
        let [lo, hi] = self.support;
        let [plo, phi] = self.plateau;
        match self.kind {
            CutoffKind::Indicator => {
                Jet::constant(if x >= lo && x <= hi { 1.0 } else { 0.0 }).0
            }
            CutoffKind::SmoothBump => {
                if x <= lo || x >= hi {
                    Jet::constant(0.0).0
                } else if x < plo {
                    let w = plo - lo;
                    smooth_step(Jet::variable((x - lo) / w, 1.0 / w)).derivatives()
                } else if x > phi {
                    let w = hi - phi;
                    smooth_step(Jet::variable((hi - x) / w, -1.0 / w)).derivatives()
                } else {
                    Jet::constant(1.0).0
                }
            }
        }
    }

    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        assert!(order < JET_ORDER, "derivative order above {}", JET_ORDER - 1);
        self.jet(x)[order]
    }

    /// Whether the profile is identically one on [lo, hi].
    pub fn is_one_on(&self, lo: f64, hi: f64) -> bool {
        self.plateau[0] <= lo && hi <= self.plateau[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = CutoffProfile::smooth_bump([0.5, 2.0], [0.55, 1.9]).unwrap();
        assert_eq!(b.eval(0.4), 0.0);
        assert_eq!(b.eval(1.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        let mid = b.eval(0.525);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&b.eval(1.95)));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = CutoffProfile::symmetric(0.25, 0.5).unwrap();
        for &x in &[0.3, 0.37, 0.42, -0.33, -0.45] {
            let j = b.jet(x);
            for k in 0..4 {
                let d = 1e-5;
                let fd = (b.derivative(x + d, k) - b.derivative(x - d, k)) / (2.0 * d);
                let scale = j[k + 1].abs().max(1.0);
                assert!((fd - j[k + 1]).abs() < 1e-5 * scale, "x={x} k={k} fd={fd} jet={}", j[k + 1]);
            }
        }
    }

    #[test]
    fn derivatives_vanish_on_plateau_and_outside() {
        let b = CutoffProfile::symmetric(0.25, 0.5).unwrap();
        for &x in &[0.0, 0.2, 0.6, -0.7] {
            let j = b.jet(x);
            assert!(j[1..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn rejects_inverted_plateau() {
        assert!(CutoffProfile::smooth_bump([0.0, 1.0], [0.8, 0.2]).is_err());
        assert!(CutoffProfile::smooth_bump([0.0, 1.0], [0.0, 0.5]).is_err());
    }

    #[test]
    fn indicator_is_sharp() {
        let c = CutoffProfile::indicator(1.0, 1.0).unwrap();
        assert_eq!(c.eval(1.0), 1.0);
        assert_eq!(c.eval(1.0 + 1e-12), 0.0);
    }
}
