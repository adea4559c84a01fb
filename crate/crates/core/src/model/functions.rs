//! Scalar building blocks (`G`, profiles, `psi`, `phi`) with closed-form derivatives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::measure::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ScalarFn {
    Poly { coeffs: Vec<f64> },
    /// `a + b exp(c s)`
    Exp { a: f64, b: f64, c: f64 },
    /// `scale tanh(rate (s - shift))`
    Tanh { scale: f64, rate: f64, shift: f64 },
    /// `scale atan(rate s)`
    Arctan { scale: f64, rate: f64 },
}

impl ScalarFn {
    pub fn poly(coeffs: Vec<f64>) -> Self {
        ScalarFn::Poly { coeffs }
    }

    pub fn identity() -> Self {
        ScalarFn::poly(vec![0.0, 1.0])
    }

    pub fn as_poly(&self) -> Option<Poly> {
        match self {
            ScalarFn::Poly { coeffs } => Some(Poly::new(coeffs.clone())),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.as_poly().is_some_and(|p| p.is_identity())
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c),
            ScalarFn::Exp { a, b, c } => a + b * (c * s).exp(),
            ScalarFn::Tanh { scale, rate, shift } => scale * (rate * (s - shift)).tanh(),
            ScalarFn::Arctan { scale, rate } => scale * (rate * s).atan(),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Poly { coeffs } => Poly::new(coeffs.clone()).derivative().eval(s),
            ScalarFn::Exp { b, c, .. } => b * c * (c * s).exp(),
            ScalarFn::Tanh { scale, rate, shift } => {
                let th = (rate * (s - shift)).tanh();
                scale * rate * (1.0 - th * th)
            }
            ScalarFn::Arctan { scale, rate } => scale * rate / (1.0 + (rate * s).powi(2)),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Poly { coeffs } => Poly::new(coeffs.clone()).derivative().derivative().eval(s),
            ScalarFn::Exp { b, c, .. } => b * c * c * (c * s).exp(),
            ScalarFn::Tanh { scale, rate, shift } => {
                let th = (rate * (s - shift)).tanh();
                -2.0 * scale * rate * rate * th * (1.0 - th * th)
            }
            ScalarFn::Arctan { scale, rate } => {
                let u = rate * s;
                -2.0 * scale * rate * rate * u / (1.0 + u * u).powi(2)
            }
        }
    }

    /// `int_0^s value`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Poly { coeffs } => Poly::new(coeffs.clone()).antiderivative().eval(s),
            ScalarFn::Exp { a, b, c } => {
                if *c == 0.0 {
                    (a + b) * s
                } else {
                    a * s + b / c * (c * s).exp_m1()
                }
            }
            ScalarFn::Tanh { scale, rate, shift } => {
                if *rate == 0.0 {
                    return 0.0;
                }
                scale / rate * (log_cosh(rate * (s - shift)) - log_cosh(-rate * shift))
            }
            ScalarFn::Arctan { scale, rate } => {
                if *rate == 0.0 {
                    return 0.0;
                }
                let u = rate * s;
                scale * (s * u.atan() - (u * u).ln_1p() / (2.0 * rate))
            }
        }
    }

    /// Image of `[lo, hi]`, exact for monotone families and polynomials.
    pub fn image(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            ScalarFn::Poly { coeffs } => Poly::new(coeffs.clone()).extrema_on(lo, hi),
            _ => {
                let (a, b) = (self.value(lo), self.value(hi));
                (a.min(b), a.max(b))
            }
        }
    }

    /// Bounds of the whole range when finite.
    pub fn bounded_range(&self) -> Option<(f64, f64)> {
        match self {
            ScalarFn::Poly { coeffs } => {
                let p = Poly::new(coeffs.clone());
                (p.degree() == 0).then(|| (p.eval(0.0), p.eval(0.0)))
            }
            ScalarFn::Exp { c, .. } if *c != 0.0 => None,
            ScalarFn::Exp { a, b, .. } => Some((a + b, a + b)),
            ScalarFn::Tanh { scale, .. } => Some((-scale.abs(), scale.abs())),
            ScalarFn::Arctan { scale, .. } => {
                let h = scale.abs() * std::f64::consts::FRAC_PI_2;
                Some((-h, h))
            }
        }
    }

    /// Supremum of `|d1|` when it is available in closed form.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            ScalarFn::Poly { coeffs } => {
                let p = Poly::new(coeffs.clone());
                (p.degree() <= 1).then(|| p.derivative().eval(0.0).abs())
            }
            ScalarFn::Exp { b, c, .. } => (*c == 0.0 || *b == 0.0).then_some(0.0),
            ScalarFn::Tanh { scale, rate, .. } => Some((scale * rate).abs()),
            ScalarFn::Arctan { scale, rate } => Some((scale * rate).abs()),
        }
    }
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Integrand `psi` of moment-type functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Psi {
    /// `atan(|y|^2)`
    ArctanNormSq,
    /// `h(y . direction)`
    Along { direction: Vec<f64>, profile: ScalarFn },
}

impl Psi {
    pub fn value(&self, y: &Point) -> f64 {
        match self {
            Psi::ArctanNormSq => y.norm_squared().atan(),
            Psi::Along { direction, profile } => profile.value(dot(direction, y)),
        }
    }

    pub fn gradient(&self, y: &Point) -> Point {
        match self {
            Psi::ArctanNormSq => {
                let r2 = y.norm_squared();
                y * (2.0 / (1.0 + r2 * r2))
            }
            Psi::Along { direction, profile } => {
                Point::from_column_slice(direction) * profile.d1(dot(direction, y))
            }
        }
    }

    pub fn bounded_range(&self) -> Option<(f64, f64)> {
        match self {
            Psi::ArctanNormSq => Some((0.0, std::f64::consts::FRAC_PI_2)),
            Psi::Along { profile, .. } => profile.bounded_range(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Psi::ArctanNormSq => None,
            Psi::Along { direction, .. } => Some(direction.len()),
        }
    }
}

/// Spatial factor `phi` of separable terminal costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Phi {
    /// `|x|^2 / 2`
    HalfSquare,
    /// `h(x . direction)`
    Along { direction: Vec<f64>, profile: ScalarFn },
}

impl Phi {
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Phi::HalfSquare => 0.5 * x.norm_squared(),
            Phi::Along { direction, profile } => profile.value(dot(direction, x)),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match self {
            Phi::HalfSquare => x.clone(),
            Phi::Along { direction, profile } => {
                Point::from_column_slice(direction) * profile.d1(dot(direction, x))
            }
        }
    }

    pub fn hessian(&self, x: &Point) -> DMatrix<f64> {
        match self {
            Phi::HalfSquare => DMatrix::identity(x.len(), x.len()),
            Phi::Along { direction, profile } => {
                let d = Point::from_column_slice(direction);
                &d * d.transpose() * profile.d2(dot(direction, x))
            }
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Phi::HalfSquare => None,
            Phi::Along { direction, .. } => Some(direction.len()),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &Point) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{adaptive_simpson, central_difference};

    fn families() -> Vec<ScalarFn> {
        vec![
            ScalarFn::poly(vec![1.0, -0.5, 0.25, 0.1]),
            ScalarFn::Exp { a: 1.0, b: 1.0, c: 1.0 },
            ScalarFn::Tanh { scale: 1.5, rate: 2.0, shift: 0.3 },
            ScalarFn::Arctan { scale: 0.7, rate: 1.3 },
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for f in families() {
            for s in [-1.2, -0.1, 0.4, 1.7] {
                let fd1 = central_difference(|u| f.value(u), s, 1e-5);
                let fd2 = central_difference(|u| f.d1(u), s, 1e-5);
                assert!((fd1 - f.d1(s)).abs() < 1e-8, "{f:?} d1 at {s}");
                assert!((fd2 - f.d2(s)).abs() < 1e-8, "{f:?} d2 at {s}");
            }
        }
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        for f in families() {
            for s in [-2.0, 0.5, 3.0] {
                let q = adaptive_simpson(|u| f.value(u), 0.0, s, 1e-13);
                assert!((q - f.antiderivative(s)).abs() < 1e-10, "{f:?} at {s}");
            }
        }
    }

    #[test]
    fn psi_and_phi_gradients() {
        let y = Point::from_vec(vec![0.3, -0.8]);
        let psi = Psi::ArctanNormSq;
        let g = psi.gradient(&y);
        for k in 0..2 {
            let fd = central_difference(
                |h| {
                    let mut z = y.clone();
                    z[k] += h;
                    psi.value(&z)
                },
                0.0,
                1e-6,
            );
            assert!((fd - g[k]).abs() < 1e-9);
        }
        let one = Point::from_element(1, 1.0);
        assert!((Psi::ArctanNormSq.gradient(&one)[0] - 1.0).abs() < 1e-15);
        let phi = Phi::Along { direction: vec![0.6, 0.8], profile: ScalarFn::poly(vec![0.0, 0.0, 0.5]) };
        let h = phi.hessian(&y);
        assert!((h[(0, 1)] - 0.48).abs() < 1e-15);
    }
}
