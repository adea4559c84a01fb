//! One-dimensional initial profiles `s0`, so that `sigma0(m0, x) = s0(x . zeta)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functions::ScalarFn;
use super::quartic::QuarticProfile;
use crate::error::Result;
use crate::numerics::adaptive_simpson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProfileSpec {
    Smooth(ScalarFn),
    /// `left` for `x < at`, `right` for `x >= at`.
    Step { at: f64, left: f64, right: f64 },
    /// Focusing profile for the flux `r^4/12 - r^2/2`, parametrized by `xi > 1`.
    Quartic { xi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone)]
pub enum Profile {
    Smooth(ScalarFn),
    Step { at: f64, left: f64, right: f64 },
    Quartic(Arc<QuarticProfile>),
}

impl Profile {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        Ok(match spec {
            ProfileSpec::Smooth(f) => Profile::Smooth(f.clone()),
            ProfileSpec::Step { at, left, right } => Profile::Step { at: *at, left: *left, right: *right },
            ProfileSpec::Quartic { xi } => Profile::Quartic(Arc::new(QuarticProfile::new(*xi)?)),
        })
    }

    pub fn spec(&self) -> ProfileSpec {
        match self {
            Profile::Smooth(f) => ProfileSpec::Smooth(f.clone()),
            Profile::Step { at, left, right } => ProfileSpec::Step { at: *at, left: *left, right: *right },
            Profile::Quartic(q) => ProfileSpec::Quartic { xi: q.xi },
        }
    }

    pub fn step(at: f64, left: f64, right: f64) -> Self {
        Profile::Step { at, left, right }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Smooth(f) => f.value(x),
            Profile::Step { at, left, right } => {
                if x < *at {
                    *left
                } else {
                    *right
                }
            }
            Profile::Quartic(q) => q.value(x),
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self {
            Profile::Step { at, left, .. } if x == *at => *left,
            _ => self.value(x),
        }
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        self.value(x)
    }

    /// Distance from `v` to the nearest one-sided limit of the profile at `x`.
    pub fn jump_aware_distance(&self, x: f64, v: f64) -> f64 {
        (v - self.left_limit(x)).abs().min((v - self.right_limit(x)).abs())
    }

    /// Derivative where it exists (zero on the flat parts of a step).
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Smooth(f) => f.d1(x),
            Profile::Step { .. } => 0.0,
            Profile::Quartic(q) => q.derivative(x),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Profile::Step { left, right, .. } if left != right)
    }

    pub fn jumps(&self) -> Vec<Jump> {
        match self {
            Profile::Step { at, left, right } if left != right => {
                vec![Jump { at: *at, left: *left, right: *right }]
            }
            _ => Vec::new(),
        }
    }

    /// `int_a^b s0`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Smooth(f) => f.antiderivative(b) - f.antiderivative(a),
            Profile::Step { at, left, right } => {
                let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                let below = (hi.min(*at) - lo).max(0.0);
                let above = (hi - lo.max(*at)).max(0.0);
                sign * (left * below + right * above)
            }
            Profile::Quartic(q) => {
                let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                let mut knots = vec![lo];
                knots.extend(q.breakpoints().into_iter().filter(|&k| k > lo && k < hi));
                knots.push(hi);
                sign * knots
                    .windows(2)
                    .map(|w| adaptive_simpson(|x| q.value(x), w[0], w[1], 1e-12))
                    .sum::<f64>()
            }
        }
    }

    /// `Phi0(x) = int_0^x s0`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        self.integral(0.0, x)
    }

    /// `[min s0, max s0]` when bounded.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Smooth(f) => f.bounded_range(),
            Profile::Step { left, right, .. } => Some((left.min(*right), left.max(*right))),
            Profile::Quartic(q) => Some(q.range()),
        }
    }

    /// Largest `|s0'|` sampled on `[lo, hi]` (jumps excluded).
    pub fn lipschitz_on(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        match self {
            Profile::Step { .. } => 0.0,
            _ => {
                let n = samples.max(2);
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .map(|x| self.derivative(x).abs())
                    .filter(|d| d.is_finite())
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_limits_and_integral() {
        let p = Profile::step(0.0, -1.0, 1.0);
        assert_eq!(p.value(0.0), 1.0);
        assert_eq!(p.left_limit(0.0), -1.0);
        assert_eq!(p.value(-1e-300), -1.0);
        assert_eq!(p.integral(-1.0, 2.0), 1.0);
        assert_eq!(p.antiderivative(-0.5), 0.5);
        assert_eq!(p.jump_aware_distance(0.0, -1.0), 0.0);
        assert_eq!(p.jumps().len(), 1);
    }

    #[test]
    fn smooth_integral_is_closed_form() {
        let p = Profile::Smooth(ScalarFn::Tanh { scale: 1.0, rate: 1.0, shift: 0.0 });
        let x: f64 = 1.3;
        assert!((p.antiderivative(x) - x.cosh().ln()).abs() < 1e-14);
        assert!((p.antiderivative(-x) - x.cosh().ln()).abs() < 1e-14);
    }
}
