//! Focusing initial profile for the flux `F(r) = r^4/12 - r^2/2`.
//!
//! Characteristics launched from `[-2/3, 2/3]` meet at `(x, t) = (0, 1)`, those
//! from `[1, xi]` meet at `(1, t_xi)`. The shock born at `(1, t_xi)` travels left
//! and hits the stationary shock on `x = 0` at `t*`; the profile is frozen at
//! `sigma*` left of `x* = -2t*/(1 + 2t*)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

pub fn flux(r: f64) -> f64 {
    r.powi(4) / 12.0 - 0.5 * r * r
}

pub fn flux_prime(r: f64) -> f64 {
    r.powi(3) / 3.0 - r
}

pub fn flux_second(r: f64) -> f64 {
    r * r - 1.0
}

/// Monotone branches of `F'(r) = c` for `c in [-2/3, 2/3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `r in [1, 2]`
    Upper,
    /// `r in [-1, 1]`
    Middle,
    /// `r in [-2, -1]`
    Lower,
}

/// Solves `r^3/3 - r = c` on the requested branch via the trigonometric form of the cubic.
pub fn invert_flux_prime(c: f64, branch: Branch) -> Result<f64> {
    let arg = 1.5 * c;
    if !(arg.abs() <= 1.0 + 1e-12) {
        return Err(Error::ProfileConstructionFailed(format!(
            "F'(r) = {c} has no solution on the requested branch"
        )));
    }
    let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
    let k = match branch {
        Branch::Upper => 0.0,
        Branch::Middle => 1.0,
        Branch::Lower => 2.0,
    };
    Ok(2.0 * (theta - 2.0 * std::f64::consts::PI * k / 3.0).cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticProfile {
    pub xi: f64,
    pub t_xi: f64,
    pub t_star: f64,
    pub x_star: f64,
    pub sigma_star: f64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    branch: Branch,
    /// `F'(s0(x)) = a x + b` on the piece.
    a: f64,
    b: f64,
}

impl QuarticProfile {
    pub fn new(xi: f64) -> Result<Self> {
        if !(xi > 1.0) || !xi.is_finite() {
            return Err(Error::ProfileConstructionFailed(format!("xi must exceed 1, got {xi}")));
        }
        let t_xi = 1.5 * (xi - 1.0);
        let t_star = collision_time(t_xi)?;
        let x_star = -2.0 * t_star / (1.0 + 2.0 * t_star);
        let sigma_star = invert_flux_prime(2.0 * x_star + 2.0, Branch::Lower)?;
        Ok(Self { xi, t_xi, t_star, x_star, sigma_star })
    }

    fn pieces(&self) -> [Piece; 4] {
        let slope = -2.0 / (3.0 * (self.xi - 1.0));
        [
            Piece { lo: self.x_star, hi: -2.0 / 3.0, branch: Branch::Lower, a: 2.0, b: 2.0 },
            Piece { lo: -2.0 / 3.0, hi: 2.0 / 3.0, branch: Branch::Middle, a: -1.0, b: 0.0 },
            Piece { lo: 2.0 / 3.0, hi: 1.0, branch: Branch::Upper, a: 2.0, b: -2.0 },
            Piece { lo: 1.0, hi: self.xi, branch: Branch::Upper, a: slope, b: -slope },
        ]
    }

    fn piece(&self, x: f64) -> Option<Piece> {
        self.pieces().into_iter().find(|p| x > p.lo && x <= p.hi)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        vec![self.x_star, -2.0 / 3.0, 2.0 / 3.0, 1.0, self.xi]
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.x_star {
            return self.sigma_star;
        }
        match self.piece(x) {
            Some(p) => invert_flux_prime(p.a * x + p.b, p.branch).expect("profile pieces stay in range"),
            None => 1.0,
        }
    }

    /// `s0'(x) = c'(x) / F''(s0(x))`; infinite where `s0 = +-1` inside a piece.
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.x_star {
            return 0.0;
        }
        match self.piece(x) {
            Some(p) => p.a / flux_second(self.value(x)),
            None => 0.0,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.sigma_star.min(-1.0), SQRT3)
    }

    /// Characteristic speed `F'(s0(x))`.
    pub fn speed(&self, x: f64) -> f64 {
        flux_prime(self.value(x))
    }

    /// Left state of the shock launched at `(1, t_xi)` when it sits at `x` at time `t`.
    pub fn s2_left_state(x: f64, t: f64) -> Result<f64> {
        invert_flux_prime((2.0 * x - 2.0) / (1.0 + 2.0 * t), Branch::Upper)
    }

    /// Rankine-Hugoniot speed of that shock, right state 1.
    pub fn s2_speed(x: f64, t: f64) -> Result<f64> {
        let l = Self::s2_left_state(x, t)?;
        Ok(rh_speed(l, 1.0))
    }
}

pub fn rh_speed(a: f64, b: f64) -> f64 {
    if (a - b).abs() < 1e-12 {
        flux_prime(0.5 * (a + b))
    } else {
        (flux(b) - flux(a)) / (b - a)
    }
}

fn rk4_step(t: f64, s: f64, dt: f64) -> Result<f64> {
    let f = |t: f64, s: f64| QuarticProfile::s2_speed(s, t);
    let k1 = f(t, s)?;
    let k2 = f(t + 0.5 * dt, s + 0.5 * dt * k1)?;
    let k3 = f(t + 0.5 * dt, s + 0.5 * dt * k2)?;
    let k4 = f(t + dt, s + dt * k3)?;
    Ok(s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrates the shock path `s2` from `(1, t_xi)` until it reaches `x = 0`.
fn collision_time(t_xi: f64) -> Result<f64> {
    const DT: f64 = 1e-3;
    let (mut t, mut s) = (t_xi, 1.0);
    for _ in 0..100_000_000usize {
        let next = rk4_step(t, s, DT)?;
        if next <= 0.0 {
            let (mut lo, mut hi) = (0.0, DT);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rk4_step(t, s, mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        t += DT;
        s = next;
    }
    Err(Error::ProfileConstructionFailed("shock s2 never reaches x = 0".into()))
}
