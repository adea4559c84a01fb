//! Lax-Oleinik formula for convex fluxes.

use crate::error::{Error, Result};
use crate::model::{Profile, ReducedFlux};
use crate::numerics::{bisect, scan_minimize};

pub const LO_SCAN: usize = 801;

/// Working interval of states and the corresponding speed interval `[fbar(lo), fbar(hi)]`.
fn convex_window(flux: &ReducedFlux, profile: &Profile) -> Result<(f64, f64)> {
    let (lo, hi) = profile
        .range()
        .ok_or_else(|| Error::BadInput("Lax-Oleinik needs a bounded initial profile".into()))?;
    let checks = flux.checks(lo, hi);
    if !(checks.inf_derivative > 0.0) {
        return Err(Error::NonconvexFlux { lo, hi, second_difference: checks.inf_derivative });
    }
    Ok((lo, hi))
}

/// `sigma(t, x)` as `fbar^{-1}(alpha*)`, where `alpha*` minimizes `t F*(alpha) + Phi0(x - t alpha)`.
pub fn lax_oleinik(flux: &ReducedFlux, profile: &Profile, t: f64, x: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 || !x.is_finite() {
        return Err(Error::BadInput(format!("bad point (t, x) = ({t}, {x})")));
    }
    if t == 0.0 {
        return Ok(profile.value(x));
    }
    let (lo, hi) = convex_window(flux, profile)?;
    if lo == hi {
        return Ok(lo);
    }
    let (a, b) = (flux.fbar(lo), flux.fbar(hi));
    let objective = |alpha: f64| t * flux.conjugate(alpha, lo, hi) + profile.antiderivative(x - t * alpha);
    let (alpha, _) = scan_minimize(objective, a, b, LO_SCAN, 1e-13);
    // The first-order condition fbar^{-1}(alpha) = s0(x - t alpha) pins the minimizer down.
    let foc = |alpha: f64| flux.inverse_fbar(alpha, lo, hi) - profile.value(x - t * alpha);
    let width = 2.0 * (b - a) / (LO_SCAN - 1) as f64;
    let (l, r) = ((alpha - width).max(a), (alpha + width).min(b));
    let alpha = match bisect(foc, l, r, 1e-15 * (1.0 + alpha.abs()), 200) {
        Some(br) => {
            let m = br.mid();
            // Between two candidates keep the one with the smaller objective.
            if objective(m) <= objective(alpha) + 1e-12 { m } else { alpha }
        }
        None => alpha,
    };
    Ok(flux.inverse_fbar(alpha, lo, hi))
}
