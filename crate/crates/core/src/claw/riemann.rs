//! Exact Riemann solutions for polynomial fluxes through convex and concave envelopes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{concave_envelope, convex_envelope, EnvelopePiece, ReducedFlux};

pub const ENVELOPE_SAMPLES: usize = 4001;
/// Intermediate states sampled for the chord condition.
pub const OLEINIK_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Wave {
    Shock { speed: f64, minus: f64, plus: f64 },
    /// `state_lo` is the state at `speed_lo`.
    Rarefaction { speed_lo: f64, speed_hi: f64, state_lo: f64, state_hi: f64 },
}

impl Wave {
    pub fn speed_range(&self) -> (f64, f64) {
        match *self {
            Wave::Shock { speed, .. } => (speed, speed),
            Wave::Rarefaction { speed_lo, speed_hi, .. } => (speed_lo, speed_hi),
        }
    }

    pub fn is_shock(&self) -> bool {
        matches!(self, Wave::Shock { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannFan {
    pub left: f64,
    pub right: f64,
    /// Ordered by speed.
    pub waves: Vec<Wave>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanChecks {
    pub speeds_ordered: bool,
    pub max_rh_residual: f64,
    /// Smallest margin of the chord condition over all shocks (negative means violated).
    pub min_oleinik_margin: f64,
}

impl FanChecks {
    pub fn ok(&self) -> bool {
        self.speeds_ordered && self.max_rh_residual <= 1e-10 && self.min_oleinik_margin >= -1e-10
    }
}

impl RiemannFan {
    /// Self-similar value at `xi = x / t`; shocks take their right state at `xi = speed`.
    pub fn value(&self, flux: &ReducedFlux, xi: f64) -> f64 {
        for w in &self.waves {
            match *w {
                Wave::Shock { speed, minus, .. } => {
                    if xi < speed {
                        return minus;
                    }
                }
                Wave::Rarefaction { speed_lo, speed_hi, state_lo, state_hi } => {
                    if xi < speed_lo {
                        return state_lo;
                    }
                    if xi <= speed_hi {
                        return flux.solve_speed(xi, state_lo, state_hi);
                    }
                }
            }
        }
        self.right
    }

    pub fn shocks(&self) -> impl Iterator<Item = &Wave> {
        self.waves.iter().filter(|w| w.is_shock())
    }

    pub fn rarefactions(&self) -> impl Iterator<Item = &Wave> {
        self.waves.iter().filter(|w| !w.is_shock())
    }

    pub fn check(&self, flux: &ReducedFlux) -> FanChecks {
        let speeds_ordered = self.waves.windows(2).all(|w| w[0].speed_range().1 <= w[1].speed_range().0 + 1e-12);
        let mut max_rh: f64 = 0.0;
        let mut margin = f64::INFINITY;
        for w in &self.waves {
            if let Wave::Shock { speed, minus, plus } = *w {
                max_rh = max_rh.max((speed - rh_speed(flux, minus, plus)).abs());
                margin = margin.min(oleinik_margin(flux, minus, plus, speed));
            }
        }
        FanChecks { speeds_ordered, max_rh_residual: max_rh, min_oleinik_margin: margin }
    }
}

/// `(F(b) - F(a)) / (b - a)`, or `fbar(a)` when the states coincide.
pub fn rh_speed(flux: &ReducedFlux, a: f64, b: f64) -> f64 {
    if a == b {
        flux.fbar(a)
    } else {
        (flux.f(b) - flux.f(a)) / (b - a)
    }
}

/// Smallest value of `chord(minus, u) - s` and `s - chord(u, plus)` over interior states `u`.
pub fn oleinik_margin(flux: &ReducedFlux, minus: f64, plus: f64, speed: f64) -> f64 {
    let mut margin = f64::INFINITY;
    for k in 1..=OLEINIK_SAMPLES {
        let u = minus + (plus - minus) * k as f64 / (OLEINIK_SAMPLES + 1) as f64;
        margin = margin
            .min(rh_speed(flux, minus, u) - speed)
            .min(speed - rh_speed(flux, u, plus));
    }
    margin
}

/// Entropy solution of the Riemann problem `left | right` at the origin.
pub fn riemann_fan(flux: &ReducedFlux, left: f64, right: f64) -> Result<RiemannFan> {
    if left == right {
        return Ok(RiemannFan { left, right, waves: Vec::new() });
    }
    let f = |u: f64| flux.f(u);
    let df = |u: f64| flux.fbar(u);
    let mut waves = Vec::new();
    if left < right {
        let env = convex_envelope(f, df, left, right, ENVELOPE_SAMPLES)?;
        for p in &env.pieces {
            waves.push(match *p {
                EnvelopePiece::Follow { lo, hi } => Wave::Rarefaction {
                    speed_lo: flux.fbar(lo),
                    speed_hi: flux.fbar(hi),
                    state_lo: lo,
                    state_hi: hi,
                },
                EnvelopePiece::Bridge { lo, hi } => Wave::Shock { speed: rh_speed(flux, lo, hi), minus: lo, plus: hi },
            });
        }
    } else {
        let env = concave_envelope(f, df, right, left, ENVELOPE_SAMPLES)?;
        for p in env.pieces.iter().rev() {
            waves.push(match *p {
                EnvelopePiece::Follow { lo, hi } => Wave::Rarefaction {
                    speed_lo: flux.fbar(hi),
                    speed_hi: flux.fbar(lo),
                    state_lo: hi,
                    state_hi: lo,
                },
                EnvelopePiece::Bridge { lo, hi } => Wave::Shock { speed: rh_speed(flux, lo, hi), minus: hi, plus: lo },
            });
        }
    }
    Ok(RiemannFan { left, right, waves })
}

/// Value of the Riemann solution at `xi = x / t`.
pub fn riemann_exact(flux: &ReducedFlux, left: f64, right: f64, xi: f64) -> Result<f64> {
    Ok(riemann_fan(flux, left, right)?.value(flux, xi))
}
