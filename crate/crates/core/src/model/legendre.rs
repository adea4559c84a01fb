//! Numerical convex conjugate on a bounded interval.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::golden_section_min;

/// Samples used by the convexity check and the coarse scan of the supremum.
const CONVEXITY_SAMPLES: usize = 2001;
const SCAN_SAMPLES: usize = 65;

/// `F*(alpha) = sup_{u in [lo, hi]} (alpha u - F(u))` for a convex `F`.
#[derive(Clone)]
pub struct Legendre1d {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
}

impl std::fmt::Debug for Legendre1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Legendre1d").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

/// Checks sampled second differences of `f` on `[lo, hi]`.
pub fn check_convex<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Result<()> {
    let h = (hi - lo) / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| f(lo + h * i as f64)).collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 1..n - 1 {
        let dd = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
        // Roundoff in the second difference scales with |F|.
        if dd < -tol - 8.0 * f64::EPSILON * scale {
            return Err(Error::NonconvexFlux {
                lo: lo + h * (i - 1) as f64,
                hi: lo + h * (i + 1) as f64,
                second_difference: dd,
            });
        }
    }
    Ok(())
}

impl Legendre1d {
    pub fn new<F>(f: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::EmptyInterval { lo, hi });
        }
        check_convex(&f, lo, hi, CONVEXITY_SAMPLES, 1e-10)?;
        Ok(Self { f: Arc::new(f), lo, hi })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Returns `(F*(alpha), argmax)`.
    pub fn eval_with_argmax(&self, alpha: f64) -> (f64, f64) {
        let obj = |u: f64| (self.f)(u) - alpha * u;
        let h = (self.hi - self.lo) / (SCAN_SAMPLES - 1) as f64;
        let mut best = 0;
        let mut best_v = f64::INFINITY;
        for i in 0..SCAN_SAMPLES {
            let v = obj(self.lo + h * i as f64);
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        let a = self.lo + h * best.saturating_sub(1) as f64;
        let b = (self.lo + h * (best + 1) as f64).min(self.hi);
        let (u, v) = golden_section_min(obj, a, b, 1e-13 * (1.0 + self.hi.abs().max(self.lo.abs())));
        (-v, u)
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.eval_with_argmax(alpha).0
    }
}
