use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::numerics::{find_root, golden_section_min};

/// Reduced flux `fbar` along the unit direction `zeta`, with primitive `F(u) = int_0^u fbar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFlux {
    fbar: Poly,
    primitive: Poly,
    dfbar: Poly,
    critical: Vec<f64>,
    zeta: Vec<f64>,
}

/// Separate lower bounds of `fbar'` and `fbar` on a sample interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxChecks {
    pub lo: f64,
    pub hi: f64,
    /// `inf fbar'`; uniform convexity of `F` needs this to be positive.
    pub inf_derivative: f64,
    /// `inf fbar`.
    pub inf_value: f64,
}

impl FluxChecks {
    pub fn increasing(&self, c0: f64) -> bool {
        self.inf_derivative >= c0
    }

    pub fn positive(&self, c0: f64) -> bool {
        self.inf_value >= c0
    }
}

impl ReducedFlux {
    pub fn new(fbar: Poly, zeta: Vec<f64>) -> Result<Self> {
        if !fbar.is_finite() {
            return Err(Error::InvalidModel("flux coefficients must be finite".into()));
        }
        let norm = zeta.iter().map(|z| z * z).sum::<f64>().sqrt();
        if zeta.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("zeta must be a unit vector, |zeta| = {norm}")));
        }
        let primitive = fbar.antiderivative();
        let dfbar = fbar.derivative();
        // Critical points of F, used by the exact Godunov flux.
        let critical = fbar.roots_in(-1e6, 1e6);
        Ok(Self { fbar, primitive, dfbar, critical, zeta })
    }

    /// Scalar flux in one dimension.
    pub fn scalar(fbar: Poly) -> Self {
        Self::new(fbar, vec![1.0]).expect("unit direction")
    }

    pub fn fbar_poly(&self) -> &Poly {
        &self.fbar
    }

    pub fn primitive_poly(&self) -> &Poly {
        &self.primitive
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn fbar(&self, u: f64) -> f64 {
        self.fbar.eval(u)
    }

    pub fn dfbar(&self, u: f64) -> f64 {
        self.dfbar.eval(u)
    }

    /// `F(u)`.
    pub fn f(&self, u: f64) -> f64 {
        self.primitive.eval(u)
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical
    }

    pub fn checks(&self, lo: f64, hi: f64) -> FluxChecks {
        let (inf_derivative, _) = self.dfbar.extrema_on(lo, hi);
        let (inf_value, _) = self.fbar.extrema_on(lo, hi);
        FluxChecks { lo, hi, inf_derivative, inf_value }
    }

    /// Largest characteristic speed `max |fbar|` on `[lo, hi]`.
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.fbar.extrema_on(lo.min(hi), lo.max(hi));
        a.abs().max(b.abs())
    }

    /// Godunov interface flux: min of `F` over `[ul, ur]` if `ul <= ur`, max over `[ur, ul]` otherwise.
    pub fn godunov_flux(&self, ul: f64, ur: f64) -> f64 {
        let (a, b) = (ul.min(ur), ul.max(ur));
        let (fa, fb) = (self.f(ul), self.f(ur));
        let inner = self.critical.iter().filter(|&&c| c > a && c < b).map(|&c| self.f(c));
        if ul <= ur {
            inner.fold(fa.min(fb), f64::min)
        } else {
            inner.fold(fa.max(fb), f64::max)
        }
    }

    /// `fbar^{-1}(alpha)` on `[lo, hi]`, clamped; requires `fbar` increasing there.
    pub fn inverse_fbar(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let (flo, fhi) = (self.fbar(lo), self.fbar(hi));
        if alpha <= flo {
            return lo;
        }
        if alpha >= fhi {
            return hi;
        }
        if let Some(u) = self.invert_linear(alpha) {
            return u.clamp(lo, hi);
        }
        find_root(|u| self.fbar(u) - alpha, lo, hi).unwrap_or(lo)
    }

    fn invert_linear(&self, alpha: f64) -> Option<f64> {
        match self.fbar.coeffs() {
            &[c0, c1] if c1 != 0.0 => Some((alpha - c0) / c1),
            _ => None,
        }
    }

    /// `F*(alpha)` restricted to states in `[lo, hi]` (convex `F`).
    pub fn conjugate(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let u = self.inverse_fbar(alpha, lo, hi);
        alpha * u - self.f(u)
    }

    /// Solves `fbar(u) = speed` on `[lo, hi]` where `fbar` is monotone.
    pub fn solve_speed(&self, speed: f64, lo: f64, hi: f64) -> f64 {
        let (a, b) = (lo.min(hi), lo.max(hi));
        if let Some(u) = self.invert_linear(speed) {
            return u.clamp(a, b);
        }
        find_root(|u| self.fbar(u) - speed, a, b)
            .unwrap_or_else(|| golden_section_min(|u| (self.fbar(u) - speed).abs(), a, b, 1e-14).0)
    }
}
