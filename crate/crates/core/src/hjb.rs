//! Hopf-Lax value `v(t, x, sigma)`, the optimal initial point `x*` and its sensitivity in `sigma`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Point;
use crate::model::{GameModel, TerminalCost};
use crate::numerics::scan_minimize;

pub const NEWTON_MAX_ITER: usize = 100;
/// Accepted residual of the implicit equation, relative to `1 + |x|`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPointResult {
    pub x_star: Point,
    /// Hopf-Lax minimum.
    pub value: f64,
    /// `D_x x*`.
    pub jacobian_dx: DMatrix<f64>,
    pub newton_iterations: usize,
    pub residual: f64,
    /// Whether `g(., sigma)` was convex at `x*` (the minimizer is then unique).
    pub convex: bool,
}

fn check_args(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::BadInput(format!("time must be finite and >= 0, got {t}")));
    }
    if x.len() != model.dim() {
        return Err(Error::UnsupportedDimension { expected: model.dim(), got: x.len() });
    }
    if !sigma.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadInput("non-finite state or sigma".into()));
    }
    Ok(())
}

/// `t L((x - y)/t) + g(y, sigma)`, the Hopf-Lax objective.
pub fn hopf_lax_objective(model: &GameModel, t: f64, x: &Point, y: &Point, sigma: f64) -> f64 {
    if t == 0.0 {
        return if x == y { model.cost.value(y, sigma) } else { f64::INFINITY };
    }
    let q = (x - y) / t;
    t * model.hamiltonian.lagrangian(&q) + model.cost.value(y, sigma)
}

fn implicit_residual(model: &GameModel, t: f64, x: &Point, y: &Point, sigma: f64) -> Point {
    let p = model.cost.grad_x(y, sigma);
    y + model.hamiltonian.gradient(&p) * t - x
}

fn implicit_jacobian(model: &GameModel, t: f64, y: &Point, sigma: f64) -> DMatrix<f64> {
    let d = y.len();
    let p = model.cost.grad_x(y, sigma);
    DMatrix::identity(d, d) + model.hamiltonian.hessian(&p) * model.cost.hess_x(y, sigma) * t
}

/// Damped Newton on `y + t DH(D_x g(y, sigma)) = x`. Returns `(y, iterations, residual)`.
fn newton(model: &GameModel, t: f64, x: &Point, sigma: f64, start: Point) -> Result<(Point, usize, f64)> {
    let scale = 1.0 + x.norm();
    let mut y = start;
    let mut r = implicit_residual(model, t, x, &y, sigma);
    let mut rn = r.norm();
    for it in 0..NEWTON_MAX_ITER {
        if rn <= 1e-14 * scale {
            return Ok((y, it, rn));
        }
        let j = implicit_jacobian(model, t, &y, sigma);
        let inv = j.try_inverse().ok_or(Error::SingularSensitivity)?;
        let step = -(inv * &r);
        let mut lambda = 1.0;
        loop {
            let cand = &y + &step * lambda;
            let rc = implicit_residual(model, t, x, &cand, sigma);
            let rcn = rc.norm();
            if rcn < rn || lambda < 1e-10 {
                if rcn >= rn {
                    // No decrease along the Newton direction; the last accepted iterate stands.
                    return Ok((y, it + 1, rn));
                }
                y = cand;
                r = rc;
                rn = rcn;
                break;
            }
            lambda *= 0.5;
        }
    }
    Ok((y, NEWTON_MAX_ITER, rn))
}

/// Minimizer of the Hopf-Lax objective by direct search, used when Newton stalls.
fn direct_search(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Point {
    let radius = 10.0 * (1.0 + x.amax()) * (1.0 + t);
    match x.len() {
        1 => {
            let f = |y: f64| hopf_lax_objective(model, t, x, &Point::from_element(1, y), sigma);
            let (y, _) = scan_minimize(f, x[0] - radius, x[0] + radius, 4001, 1e-12);
            Point::from_element(1, y)
        }
        d => {
            // Coordinate-wise coarse search followed by a few sweeps of 1-D refinement.
            let mut y = x.clone();
            for _ in 0..20 {
                for k in 0..d {
                    let f = |s: f64| {
                        let mut z = y.clone();
                        z[k] = s;
                        hopf_lax_objective(model, t, x, &z, sigma)
                    };
                    let (s, _) = scan_minimize(f, y[k] - radius, y[k] + radius, 401, 1e-12);
                    y[k] = s;
                }
            }
            y
        }
    }
}

pub fn optimal_point(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Result<OptimalPointResult> {
    check_args(model, t, x, sigma)?;
    let d = x.len();
    let convex_at = |y: &Point| model.cost.is_convex_at(y, sigma);
    if t == 0.0 {
        return Ok(OptimalPointResult {
            x_star: x.clone(),
            value: model.cost.value(x, sigma),
            jacobian_dx: DMatrix::identity(d, d),
            newton_iterations: 0,
            residual: 0.0,
            convex: convex_at(x),
        });
    }
    if let TerminalCost::Linear { .. } = model.cost {
        let f = model.cost.f_vec(sigma).expect("linear cost");
        let drift = model.hamiltonian.gradient(&f);
        let x_star = x - &drift * t;
        let value = t * model.hamiltonian.lagrangian(&drift) + model.cost.value(&x_star, sigma);
        return Ok(OptimalPointResult {
            x_star,
            value,
            jacobian_dx: DMatrix::identity(d, d),
            newton_iterations: 0,
            residual: 0.0,
            convex: true,
        });
    }
    let tol = RESIDUAL_TOL * (1.0 + x.norm());
    let (mut y, mut iters, mut res) = newton(model, t, x, sigma, x.clone())?;
    if res > tol {
        let start = direct_search(model, t, x, sigma);
        let (y2, it2, r2) = newton(model, t, x, sigma, start)?;
        iters += it2;
        if r2 < res {
            y = y2;
            res = r2;
        }
    }
    if res > tol {
        return Err(Error::NewtonDiverged { iterations: iters, residual: res });
    }
    let jac = implicit_jacobian(model, t, &y, sigma)
        .try_inverse()
        .ok_or(Error::SingularSensitivity)?;
    let value = hopf_lax_objective(model, t, x, &y, sigma);
    let convex = convex_at(&y);
    Ok(OptimalPointResult { x_star: y, value, jacobian_dx: jac, newton_iterations: iters, residual: res, convex })
}

/// `v(t, x, sigma) = min_y { t L((x - y)/t) + g(y, sigma) }`.
pub fn hopf_lax_value(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Result<f64> {
    match optimal_point(model, t, x, sigma) {
        Ok(r) => Ok(r.value),
        Err(Error::NewtonDiverged { .. }) | Err(Error::SingularSensitivity) => Err(Error::MinimizationFailed {
            x: x.iter().copied().collect(),
            sigma,
        }),
        Err(e) => Err(e),
    }
}

/// `M(t, z, sigma) = -t (I + t D2H D2g)^{-1} D2H`, evaluated at `(z, sigma)`.
pub fn sensitivity_matrix(model: &GameModel, t: f64, z: &Point, sigma: f64) -> Result<DMatrix<f64>> {
    check_args(model, t, z, sigma)?;
    let d = z.len();
    if t == 0.0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let p = model.cost.grad_x(z, sigma);
    let d2h = model.hamiltonian.hessian(&p);
    let inv = implicit_jacobian(model, t, z, sigma)
        .try_inverse()
        .ok_or(Error::SingularSensitivity)?;
    Ok(inv * d2h * (-t))
}

/// `d/dsigma x*(t, x, sigma) = M(t, x*, sigma) d/dsigma D_x g(x*, sigma)`.
pub fn dsigma_optimal(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Result<Point> {
    let r = optimal_point(model, t, x, sigma)?;
    let m = sensitivity_matrix(model, t, &r.x_star, sigma)?;
    Ok(m * model.cost.dsigma_grad_x(&r.x_star, sigma))
}

/// `D_x v(t, x, sigma) = D_x g(x*, sigma)`.
pub fn value_gradient(model: &GameModel, t: f64, x: &Point, sigma: f64) -> Result<Point> {
    let r = optimal_point(model, t, x, sigma)?;
    Ok(model.cost.grad_x(&r.x_star, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::model::*;
    use crate::numerics::{central_difference, golden_section_min};

    fn p(x: f64) -> Point {
        Point::from_element(1, x)
    }

    fn quadratic_cost() -> GameModel {
        GameModel::from_config(ModelConfig {
            schema_version: 1,
            name: None,
            hamiltonian: HamiltonianSpec::Quadratic { dim: 1 },
            terminal_cost: TerminalCost::Separable { phi: Phi::HalfSquare, outer: ScalarFn::identity() },
            sigma0: SigmaSpec::Moment { psi: Psi::ArctanNormSq },
            flux: None,
            zeta: None,
        })
        .unwrap()
    }

    #[test]
    fn linear_closed_forms() {
        let m = presets::cubic();
        let (t, x, s) = (0.7, 1.3, -0.4);
        let f = s * s;
        let r = optimal_point(&m, t, &p(x), s).unwrap();
        assert_eq!(r.x_star[0], x - t * f);
        let v = hopf_lax_value(&m, t, &p(x), s).unwrap();
        assert!((v - (f * x - t * f * f / 2.0)).abs() < 1e-14);
        let ds = dsigma_optimal(&m, t, &p(x), s).unwrap()[0];
        assert!((ds + t * 2.0 * s).abs() < 1e-14);
        assert_eq!(sensitivity_matrix(&m, t, &p(x), s).unwrap()[(0, 0)], -t);
    }

    #[test]
    fn time_zero_is_terminal_cost() {
        let m = presets::remark_example();
        let r = optimal_point(&m, 0.0, &p(0.8), 0.3).unwrap();
        assert_eq!(r.x_star[0], 0.8);
        assert_eq!(r.value, m.cost.value(&p(0.8), 0.3));
        assert_eq!(sensitivity_matrix(&m, 0.0, &p(0.8), 0.3).unwrap()[(0, 0)], 0.0);
        assert_eq!(dsigma_optimal(&m, 0.0, &p(0.8), 0.3).unwrap()[0], 0.0);
    }

    #[test]
    fn quadratic_cost_closed_form() {
        let m = quadratic_cost();
        let (t, x, s) = (0.9, 1.7, 0.6);
        let r = optimal_point(&m, t, &p(x), s).unwrap();
        assert!((r.x_star[0] - x / (1.0 + s * t)).abs() < 1e-14);
        assert!(r.residual <= RESIDUAL_TOL * (1.0 + x));
        let closed = s * x * x / (2.0 * (1.0 + s * t));
        assert!((r.value - closed).abs() < 1e-13);
        // Independent fine-grid minimization.
        let (_, brute) = golden_section_min(|y| (x - y).powi(2) / (2.0 * t) + s * y * y / 2.0, -5.0, 5.0, 1e-12);
        assert!((brute - closed).abs() < 1e-12);
        assert!((sensitivity_matrix(&m, t, &r.x_star, s).unwrap()[(0, 0)] + t / (1.0 + t * s)).abs() < 1e-14);
    }

    #[test]
    fn case1_sensitivity_and_dsigma() {
        let m = presets::remark_example();
        let g = |s: f64| 1.0 + s.exp();
        let (t, x, s) = (0.8, -1.1, 0.25);
        let xs = optimal_point(&m, t, &p(x), s).unwrap().x_star[0];
        let closed = s.exp() * (-t / (1.0 + t * g(s))) * xs;
        let ds = dsigma_optimal(&m, t, &p(x), s).unwrap()[0];
        assert!((ds - closed).abs() < 1e-13);
        let fd = central_difference(|u| optimal_point(&m, t, &p(x), u).unwrap().x_star[0], s, 1e-5);
        assert!((fd - ds).abs() < 1e-6 * (1.0 + ds.abs()));
    }

    #[test]
    fn flow_property_linear() {
        let m = presets::cubic();
        let (t, s_time, x, sig) = (1.2, 0.5, 0.3, 0.7);
        let f = m.cost.f_vec(sig).unwrap();
        let drift = m.hamiltonian.gradient(&f);
        let lhs = hopf_lax_value(&m, t, &p(x), sig).unwrap();
        let y = p(x) - &drift * (t - s_time);
        let rhs = hopf_lax_value(&m, s_time, &y, sig).unwrap() + (t - s_time) * m.hamiltonian.lagrangian(&drift);
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn envelope_theorem() {
        let m = presets::remark_example();
        let (t, x, s) = (0.6, 1.4, -0.2);
        let fd = central_difference(|u| hopf_lax_value(&m, t, &p(x), u).unwrap(), s, 1e-5);
        let xs = optimal_point(&m, t, &p(x), s).unwrap().x_star;
        let direct = m.cost.dsigma_value(&xs, s);
        assert!((fd - direct).abs() < 1e-6);
    }

    #[test]
    fn non_quadratic_hamiltonian_newton() {
        let m = GameModel::from_config(ModelConfig {
            schema_version: 1,
            name: None,
            hamiltonian: HamiltonianSpec::Convex1d { coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.25], momentum_bound: Some(20.0) },
            terminal_cost: TerminalCost::Separable { phi: Phi::HalfSquare, outer: ScalarFn::identity() },
            sigma0: SigmaSpec::Moment { psi: Psi::ArctanNormSq },
            flux: None,
            zeta: None,
        })
        .unwrap();
        let (t, x, s) = (0.5, 2.0, 1.5);
        let r = optimal_point(&m, t, &p(x), s).unwrap();
        let y = r.x_star[0];
        let grad = s * y;
        assert!((y + t * (grad + grad.powi(3)) - x).abs() < 1e-10 * (1.0 + x));
        let f = |z: f64| hopf_lax_objective(&m, t, &p(x), &p(z), s);
        let (zb, vb) = golden_section_min(f, -5.0, 5.0, 1e-10);
        assert!((zb - y).abs() < 1e-6);
        assert!((vb - r.value).abs() < 1e-8);
    }
}
