use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::legendre::{check_convex, Legendre1d};
use super::poly::Poly;
use crate::error::{Error, Result};
use crate::measure::Point;
use crate::numerics::golden_section_min;

/// Default half-width of the momentum interval used for numerical Legendre transforms.
pub const DEFAULT_MOMENTUM_BOUND: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// `H(p) = |p|^2 / 2` on `R^dim`.
    Quadratic { dim: usize },
    /// Convex polynomial `H` on the line; `L` is computed numerically on `[-bound, bound]`.
    Convex1d {
        coeffs: Vec<f64>,
        #[serde(default)]
        momentum_bound: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub enum Hamiltonian {
    Quadratic { dim: usize },
    Convex1d { h: Poly, lagrangian: Legendre1d },
}

impl Hamiltonian {
    pub fn quadratic(dim: usize) -> Self {
        Hamiltonian::Quadratic { dim }
    }

    pub fn convex_1d(h: Poly, momentum_bound: f64) -> Result<Self> {
        if h.degree() < 2 {
            return Err(Error::InvalidModel("1-D Hamiltonian must be at least quadratic".into()));
        }
        let hh = h.clone();
        check_convex(|p| hh.eval(p), -momentum_bound, momentum_bound, 2001, 1e-10)?;
        let hh = h.clone();
        let lagrangian = Legendre1d::new(move |p| hh.eval(p), -momentum_bound, momentum_bound)?;
        Ok(Hamiltonian::Convex1d { h, lagrangian })
    }

    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        match spec {
            HamiltonianSpec::Quadratic { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidModel("dimension must be >= 1".into()));
                }
                Ok(Self::quadratic(*dim))
            }
            HamiltonianSpec::Convex1d { coeffs, momentum_bound } => Self::convex_1d(
                Poly::new(coeffs.clone()),
                momentum_bound.unwrap_or(DEFAULT_MOMENTUM_BOUND),
            ),
        }
    }

    pub fn spec(&self) -> HamiltonianSpec {
        match self {
            Hamiltonian::Quadratic { dim } => HamiltonianSpec::Quadratic { dim: *dim },
            Hamiltonian::Convex1d { h, lagrangian } => HamiltonianSpec::Convex1d {
                coeffs: h.coeffs().to_vec(),
                momentum_bound: Some(lagrangian.domain().1),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::Quadratic { dim } => *dim,
            Hamiltonian::Convex1d { .. } => 1,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Hamiltonian::Quadratic { .. })
    }

    pub fn value(&self, p: &Point) -> f64 {
        match self {
            Hamiltonian::Quadratic { .. } => 0.5 * p.norm_squared(),
            Hamiltonian::Convex1d { h, .. } => h.eval(p[0]),
        }
    }

    pub fn gradient(&self, p: &Point) -> Point {
        match self {
            Hamiltonian::Quadratic { .. } => p.clone(),
            Hamiltonian::Convex1d { h, .. } => Point::from_element(1, h.derivative().eval(p[0])),
        }
    }

    pub fn hessian(&self, p: &Point) -> DMatrix<f64> {
        match self {
            Hamiltonian::Quadratic { dim } => DMatrix::identity(*dim, *dim),
            Hamiltonian::Convex1d { h, .. } => {
                DMatrix::from_element(1, 1, h.derivative().derivative().eval(p[0]))
            }
        }
    }

    /// `DH` as a polynomial in one variable (1-D only).
    pub fn gradient_poly(&self) -> Option<Poly> {
        match self {
            Hamiltonian::Quadratic { dim: 1 } => Some(Poly::identity()),
            Hamiltonian::Quadratic { .. } => None,
            Hamiltonian::Convex1d { h, .. } => Some(h.derivative()),
        }
    }

    /// `L(q) = H*(q)`.
    pub fn lagrangian(&self, q: &Point) -> f64 {
        match self {
            Hamiltonian::Quadratic { .. } => 0.5 * q.norm_squared(),
            Hamiltonian::Convex1d { lagrangian, .. } => lagrangian.eval(q[0]),
        }
    }

    /// `DL(q)`, the maximizing momentum.
    pub fn lagrangian_gradient(&self, q: &Point) -> Point {
        match self {
            Hamiltonian::Quadratic { .. } => q.clone(),
            Hamiltonian::Convex1d { h, lagrangian } => {
                let (lo, hi) = lagrangian.domain();
                let target = q[0];
                let dh = h.derivative();
                let p = crate::numerics::invert_monotone(|p| dh.eval(p), target, lo, hi)
                    .unwrap_or_else(|| golden_section_min(|p| h.eval(p) - target * p, lo, hi, 1e-13).0);
                Point::from_element(1, p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_closed_forms() {
        let h = Hamiltonian::quadratic(2);
        let p = Point::from_vec(vec![1.0, -2.0]);
        assert_eq!(h.value(&p), 2.5);
        assert_eq!(h.lagrangian(&p), 2.5);
        assert_eq!(h.gradient(&p), p);
        assert_eq!(h.hessian(&p), DMatrix::identity(2, 2));
    }

    #[test]
    fn quartic_lagrangian() {
        let h = Hamiltonian::convex_1d(Poly::new(vec![0.0, 0.0, 0.0, 0.0, 0.25]), 10.0).unwrap();
        for q in [-2.0, 0.3, 1.0] {
            let l = h.lagrangian(&Point::from_element(1, q));
            assert!((l - 0.75 * f64::abs(q).powf(4.0 / 3.0)).abs() < 1e-9);
            let dl = h.lagrangian_gradient(&Point::from_element(1, q))[0];
            assert!((dl - q.signum() * f64::abs(q).powf(1.0 / 3.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_nonconvex_hamiltonian() {
        assert!(Hamiltonian::convex_1d(Poly::new(vec![0.0, 0.0, 1.0, 1.0]), 5.0).is_err());
    }

    #[test]
    fn fenchel_young_on_grid() {
        let hs = [
            Hamiltonian::quadratic(1),
            Hamiltonian::convex_1d(Poly::new(vec![0.0, 0.0, 0.5, 0.0, 0.1]), 10.0).unwrap(),
        ];
        for h in &hs {
            for i in -10..=10 {
                for j in -10..=10 {
                    let p = Point::from_element(1, 0.3 * i as f64);
                    let q = Point::from_element(1, 0.4 * j as f64);
                    assert!(h.lagrangian(&q) + h.value(&p) >= p[0] * q[0] - 1e-8);
                }
            }
        }
    }
}
