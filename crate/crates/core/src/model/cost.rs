use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::functions::{Phi, ScalarFn};
use super::poly::Poly;
use crate::measure::Point;

/// Terminal cost `g(x, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TerminalCost {
    /// `g(x, sigma) = f(sigma) . x`, one polynomial per coordinate.
    Linear { f: Vec<Poly> },
    /// `g(x, sigma) = phi(x) G(sigma)`; `G = id` gives `phi(x) sigma`.
    Separable { phi: Phi, outer: ScalarFn },
}

impl TerminalCost {
    pub fn linear_1d(f: Poly) -> Self {
        TerminalCost::Linear { f: vec![f] }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, TerminalCost::Linear { .. })
    }

    /// Dimension fixed by the cost, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            TerminalCost::Linear { f } => Some(f.len()),
            TerminalCost::Separable { phi, .. } => phi.dim(),
        }
    }

    pub fn f_vec(&self, sigma: f64) -> Option<Point> {
        match self {
            TerminalCost::Linear { f } => Some(Point::from_iterator(f.len(), f.iter().map(|p| p.eval(sigma)))),
            _ => None,
        }
    }

    pub fn value(&self, x: &Point, sigma: f64) -> f64 {
        match self {
            TerminalCost::Linear { f } => f.iter().zip(x.iter()).map(|(p, xi)| p.eval(sigma) * xi).sum(),
            TerminalCost::Separable { phi, outer } => phi.value(x) * outer.value(sigma),
        }
    }

    pub fn grad_x(&self, x: &Point, sigma: f64) -> Point {
        match self {
            TerminalCost::Linear { .. } => self.f_vec(sigma).expect("linear"),
            TerminalCost::Separable { phi, outer } => phi.gradient(x) * outer.value(sigma),
        }
    }

    pub fn hess_x(&self, x: &Point, sigma: f64) -> DMatrix<f64> {
        match self {
            TerminalCost::Linear { f } => DMatrix::zeros(f.len(), f.len()),
            TerminalCost::Separable { phi, outer } => phi.hessian(x) * outer.value(sigma),
        }
    }

    /// `d/dsigma D_x g`.
    pub fn dsigma_grad_x(&self, x: &Point, sigma: f64) -> Point {
        match self {
            TerminalCost::Linear { f } => {
                Point::from_iterator(f.len(), f.iter().map(|p| p.derivative().eval(sigma)))
            }
            TerminalCost::Separable { phi, outer } => phi.gradient(x) * outer.d1(sigma),
        }
    }

    /// `d/dsigma g`.
    pub fn dsigma_value(&self, x: &Point, sigma: f64) -> f64 {
        match self {
            TerminalCost::Linear { f } => f
                .iter()
                .zip(x.iter())
                .map(|(p, xi)| p.derivative().eval(sigma) * xi)
                .sum(),
            TerminalCost::Separable { phi, outer } => phi.value(x) * outer.d1(sigma),
        }
    }

    /// Sampled check that `D^2_xx g(x, sigma)` is positive semidefinite.
    pub fn is_convex_at(&self, x: &Point, sigma: f64) -> bool {
        let h = self.hess_x(x, sigma);
        let h = (&h + h.transpose()) * 0.5;
        h.symmetric_eigenvalues().iter().all(|&l| l >= -1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::central_difference;

    #[test]
    fn separable_derivatives() {
        let g = TerminalCost::Separable {
            phi: Phi::HalfSquare,
            outer: ScalarFn::Exp { a: 1.0, b: 1.0, c: 1.0 },
        };
        let x = Point::from_element(1, 0.7);
        let s = 0.2;
        let fd = central_difference(|u| g.value(&Point::from_element(1, u), s), 0.7, 1e-6);
        assert!((fd - g.grad_x(&x, s)[0]).abs() < 1e-8);
        let fd = central_difference(|u| g.grad_x(&x, u)[0], s, 1e-6);
        assert!((fd - g.dsigma_grad_x(&x, s)[0]).abs() < 1e-8);
        assert!(g.is_convex_at(&x, s));
    }

    #[test]
    fn linear_cost() {
        let g = TerminalCost::linear_1d(Poly::new(vec![0.0, 0.0, 1.0]));
        let x = Point::from_element(1, 2.0);
        assert_eq!(g.value(&x, 3.0), 18.0);
        assert_eq!(g.grad_x(&x, 3.0)[0], 9.0);
        assert_eq!(g.dsigma_grad_x(&x, 3.0)[0], 6.0);
        assert!(g.is_convex_at(&x, -5.0));
    }
}
