//! The monotonicity condition `d/dsigma Sigma0 <= c0 < 1` and its anti-monotone mirror.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{default_sigma_range, sigma_map};
use crate::error::{Error, Result};
use crate::hjb::{dsigma_optimal, optimal_point, sensitivity_matrix};
use crate::measure::{EmpiricalMeasure, Point};
use crate::model::{GameModel, SigmaFunctional, TerminalCost};
use crate::numerics::linspace;

/// Relative step of the central difference in `sigma`.
pub const FD_STEP: f64 = 1e-4;
/// Slack allowed when comparing a sampled supremum with `c0`.
pub const VERDICT_SLACK: f64 = 1e-8;
pub const DEFAULT_SIGMA_POINTS: usize = 41;
pub const DEFAULT_TIME_POINTS: usize = 21;
pub const DEFAULT_MEASURES: usize = 10;
pub const DEFAULT_ATOMS: usize = 8;
pub const DEFAULT_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DSigmaValue {
    pub finite_difference: f64,
    /// `int D_m sigma0(m_{t,sigma})(x*) . d/dsigma x* dm`, when `sigma0` is differentiable.
    pub chain_rule: Option<f64>,
}

/// `d/dsigma Sigma0(sigma, t, m)`.
pub fn dsigma_sigma_map(model: &GameModel, sigma: f64, t: f64, m: &EmpiricalMeasure) -> Result<DSigmaValue> {
    if !model.sigma0.is_differentiable() {
        return Err(Error::NonDifferentiableSigma0);
    }
    if t == 0.0 {
        return Ok(DSigmaValue { finite_difference: 0.0, chain_rule: Some(0.0) });
    }
    let h = FD_STEP * sigma.abs().max(1.0);
    let fd = (sigma_map(model, sigma + h, t, m)? - sigma_map(model, sigma - h, t, m)?) / (2.0 * h);
    let image = m.try_pushforward(|x| optimal_point(model, t, x, sigma).map(|r| r.x_star))?;
    let mut chain = 0.0;
    for ((x, w), y) in m.iter().zip(image.atoms()) {
        let dx = dsigma_optimal(model, t, x, sigma)?;
        chain += w * model.sigma0.lions_derivative(&image, y).dot(&dx);
    }
    Ok(DSigmaValue { finite_difference: fd, chain_rule: Some(chain) })
}

/// `Dpsi(y) . G'(sigma) M(t, y, sigma) Dphi(y)` for `g = phi G(sigma)` and `sigma0 = int psi`, or
/// `G'(s) Dpsi(y) . M(t, y, sigma) Dphi(y)` for `g = phi sigma` and `sigma0 = G(int psi)`.
///
/// `outer_arg` is `s = int psi dm_{t,sigma}` and is required in the second case.
pub fn pointwise_criterion(model: &GameModel, y: &Point, t: f64, sigma: f64, outer_arg: Option<f64>) -> Result<f64> {
    let TerminalCost::Separable { phi, outer: g_cost } = &model.cost else {
        return Err(Error::PresetRequired("separable terminal cost"));
    };
    let m = sensitivity_matrix(model, t, y, sigma)?;
    let core = psi_of(model)?.gradient(y).dot(&(m * phi.gradient(y)));
    match &model.sigma0 {
        SigmaFunctional::Moment { .. } => Ok(g_cost.d1(sigma) * core),
        SigmaFunctional::Composed { outer, .. } if g_cost.is_identity() => {
            let s = outer_arg.ok_or_else(|| Error::BadInput("the composed criterion needs s = int psi dm".into()))?;
            Ok(outer.d1(s) * core)
        }
        _ => Err(Error::PresetRequired("moment sigma0 with phi G(sigma), or composed sigma0 with phi sigma")),
    }
}

fn psi_of(model: &GameModel) -> Result<&crate::model::Psi> {
    match &model.sigma0 {
        SigmaFunctional::Moment { psi } | SigmaFunctional::Composed { psi, .. } => Ok(psi),
        SigmaFunctional::MeanProfile { .. } => Err(Error::PresetRequired("moment or composed sigma0")),
    }
}

fn criterion_applies(model: &GameModel) -> bool {
    match (&model.cost, &model.sigma0) {
        (TerminalCost::Separable { .. }, SigmaFunctional::Moment { .. }) => true,
        (TerminalCost::Separable { outer, .. }, SigmaFunctional::Composed { .. }) => outer.is_identity(),
        _ => false,
    }
}

/// Sample set over which the condition is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityGrid {
    pub sigmas: Vec<f64>,
    pub times: Vec<f64>,
    pub measures: Vec<EmpiricalMeasure>,
}

impl MonotonicityGrid {
    /// `sigma` over `range(sigma0)` widened by 10%, `t` over `[0, t_max]`, random measures from `seed`.
    pub fn default_for(model: &GameModel, t_max: f64, seed: u64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::BadInput(format!("t_max must be positive, got {t_max}")));
        }
        let (lo, hi) = default_sigma_range(model)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let measures = (0..DEFAULT_MEASURES)
            .map(|_| EmpiricalMeasure::random(&mut rng, DEFAULT_ATOMS, model.dim(), DEFAULT_SPREAD))
            .collect();
        Ok(Self {
            sigmas: linspace(lo, hi, DEFAULT_SIGMA_POINTS),
            times: linspace(0.0, t_max, DEFAULT_TIME_POINTS),
            measures,
        })
    }

    pub fn len(&self) -> usize {
        self.sigmas.len() * self.times.len() * self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Monotone { c0: f64 },
    AntiMonotone { c0: f64 },
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleValue {
    pub sigma: f64,
    pub t: f64,
    pub measure: usize,
    #[serde(rename = "dSigma0")]
    pub d_sigma0: f64,
    pub chain_rule: Option<f64>,
    pub criterion_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    #[serde(rename = "sup_dSigma0")]
    pub sup_dsigma0: f64,
    #[serde(rename = "inf_dSigma0")]
    pub inf_dsigma0: f64,
    pub verdict: Verdict,
    pub requested_c0: Option<f64>,
    pub samples: usize,
    pub pointwise_criterion_sup: Option<f64>,
    /// Largest gap between the finite-difference and chain-rule paths.
    pub max_path_discrepancy: Option<f64>,
    pub grid: MonotonicityGrid,
    pub values: Vec<SampleValue>,
}

fn sample(model: &GameModel, sigma: f64, t: f64, m: &EmpiricalMeasure, idx: usize, criterion: bool) -> Result<SampleValue> {
    let d = dsigma_sigma_map(model, sigma, t, m)?;
    let criterion_sup = if criterion {
        let image = m.try_pushforward(|x| optimal_point(model, t, x, sigma).map(|r| r.x_star))?;
        let s = psi_of(model)?;
        let s_val = image.integrate(|y| s.value(y));
        let mut sup = f64::NEG_INFINITY;
        for y in image.atoms() {
            sup = sup.max(pointwise_criterion(model, y, t, sigma, Some(s_val))?);
        }
        Some(sup)
    } else {
        None
    };
    Ok(SampleValue { sigma, t, measure: idx, d_sigma0: d.finite_difference, chain_rule: d.chain_rule, criterion_sup })
}

/// Samples `d/dsigma Sigma0` over the grid and decides the verdict.
///
/// With `c0 < 1` the verdict is `MONOTONE(c0)` or `NEITHER`; with `c0 > 1` it is
/// `ANTI_MONOTONE(c0)` or `NEITHER`. Without `c0` the sampled extremes choose.
pub fn check_monotonicity(model: &GameModel, grid: &MonotonicityGrid, c0: Option<f64>) -> Result<MonotonicityReport> {
    if grid.is_empty() {
        return Err(Error::BadInput("monotonicity grid is empty".into()));
    }
    if let Some(c) = c0 {
        if !c.is_finite() || c == 1.0 {
            return Err(Error::BadInput(format!("c0 must be finite and different from 1, got {c}")));
        }
    }
    if !model.sigma0.is_differentiable() {
        return Err(Error::NonDifferentiableSigma0);
    }
    let criterion = criterion_applies(model);
    let tuples: Vec<(f64, f64, usize)> = grid
        .measures
        .iter()
        .enumerate()
        .flat_map(|(k, _)| grid.times.iter().flat_map(move |&t| grid.sigmas.iter().map(move |&s| (s, t, k))))
        .collect();
    let values: Vec<SampleValue> = tuples
        .par_iter()
        .map(|&(s, t, k)| sample(model, s, t, &grid.measures[k], k, criterion))
        .collect::<Result<Vec<_>>>()?;

    let sup = values.iter().map(|v| v.d_sigma0).fold(f64::NEG_INFINITY, f64::max);
    let inf = values.iter().map(|v| v.d_sigma0).fold(f64::INFINITY, f64::min);
    let pointwise_criterion_sup = criterion.then(|| {
        values.iter().filter_map(|v| v.criterion_sup).fold(f64::NEG_INFINITY, f64::max)
    });
    let max_path_discrepancy = values
        .iter()
        .filter_map(|v| v.chain_rule.map(|c| (c - v.d_sigma0).abs()))
        .reduce(f64::max);
    let verdict = match c0 {
        Some(c) if c < 1.0 => {
            if sup <= c + VERDICT_SLACK { Verdict::Monotone { c0: c } } else { Verdict::Neither }
        }
        Some(c) => {
            if inf >= c - VERDICT_SLACK { Verdict::AntiMonotone { c0: c } } else { Verdict::Neither }
        }
        None if sup < 1.0 => Verdict::Monotone { c0: sup },
        None if inf > 1.0 => Verdict::AntiMonotone { c0: inf },
        None => Verdict::Neither,
    };
    Ok(MonotonicityReport {
        sup_dsigma0: sup,
        inf_dsigma0: inf,
        verdict,
        requested_c0: c0,
        samples: values.len(),
        pointwise_criterion_sup,
        max_path_discrepancy,
        grid: grid.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, ScalarFn};

    fn p(x: f64) -> Point {
        Point::from_element(1, x)
    }

    #[test]
    fn remark_example_criterion_value() {
        let m = presets::remark_example();
        let v = pointwise_criterion(&m, &p(1.0), 1.0, 0.0, None).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(pointwise_criterion(&m, &p(1.0), 0.0, 0.3, None).unwrap(), 0.0);
    }

    #[test]
    fn criterion_needs_a_matching_preset() {
        let m = presets::burgers();
        assert!(matches!(pointwise_criterion(&m, &p(0.0), 1.0, 0.0, None), Err(Error::PresetRequired(_))));
        let c2 = presets::case2_example();
        assert!(matches!(pointwise_criterion(&c2, &p(1.0), 1.0, 0.5, None), Err(Error::BadInput(_))));
    }

    #[test]
    fn case1_paths_agree_with_closed_form() {
        let model = presets::remark_example();
        let m = EmpiricalMeasure::from_scalars(&[-1.5, 0.2, 0.9, 2.5], &[0.1, 0.4, 0.3, 0.2]).unwrap();
        let (s, t): (f64, f64) = (0.3, 0.7);
        let g = 1.0 + s.exp();
        let closed = s.exp()
            * m.integrate(|x| {
                let y = x[0] / (1.0 + t * g);
                let dpsi = 2.0 * y / (1.0 + y.powi(4));
                dpsi * (-t / (1.0 + t * g)) * y
            });
        let d = dsigma_sigma_map(&model, s, t, &m).unwrap();
        assert!((d.chain_rule.unwrap() - closed).abs() < 1e-12);
        assert!((d.finite_difference - closed).abs() < 1e-6);
        let image = m.pushforward(|x| x / (1.0 + t * g)).unwrap();
        let integrated = image.integrate(|y| pointwise_criterion(&model, y, t, s, None).unwrap());
        assert!((integrated - closed).abs() < 1e-6);
    }

    #[test]
    fn case2_paths_agree() {
        let model = presets::case2_example();
        let m = EmpiricalMeasure::from_scalars(&[-1.0, 0.5, 1.7], &[0.3, 0.3, 0.4]).unwrap();
        let (s, t) = (1.4, 0.5);
        let d = dsigma_sigma_map(&model, s, t, &m).unwrap();
        assert!((d.chain_rule.unwrap() - d.finite_difference).abs() < 1e-5);
        let image = m.pushforward(|x| x / (1.0 + t * s)).unwrap();
        let s_val = image.integrate(|y| y[0].powi(2).atan());
        let integrated = image.integrate(|y| pointwise_criterion(&model, y, t, s, Some(s_val)).unwrap());
        assert!((integrated - d.finite_difference).abs() < 1e-6);
    }

    #[test]
    fn linear_closed_form_derivative() {
        let model = presets::tanh();
        let m = EmpiricalMeasure::from_scalars(&[0.1, 0.7], &[0.5, 0.5]).unwrap();
        let (s, t): (f64, f64) = (0.2, 0.6);
        let x = 0.4 - t * s;
        let closed = -t * (1.0 - x.tanh().powi(2));
        let d = dsigma_sigma_map(&model, s, t, &m).unwrap();
        assert!((d.finite_difference - closed).abs() < 1e-7);
        assert!((d.chain_rule.unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn step_profile_is_rejected() {
        let m = EmpiricalMeasure::dirac(p(0.5)).unwrap();
        assert!(matches!(
            dsigma_sigma_map(&presets::burgers(), 0.3, 1.0, &m),
            Err(Error::NonDifferentiableSigma0)
        ));
    }

    #[test]
    fn remark_example_is_monotone_with_zero() {
        let model = presets::remark_example();
        let grid = MonotonicityGrid::default_for(&model, 2.0, 7).unwrap();
        let r = check_monotonicity(&model, &grid, Some(0.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Monotone { c0: 0.0 });
        assert!(r.inf_dsigma0 <= r.sup_dsigma0);
        assert!(r.pointwise_criterion_sup.unwrap() <= 0.0);
        assert!(r.max_path_discrepancy.unwrap() < 1e-5);
    }

    #[test]
    fn steep_decreasing_profile_is_neither() {
        let model = presets::burgers_smooth(ScalarFn::poly(vec![0.0, -2.0]));
        let grid = MonotonicityGrid {
            sigmas: linspace(-1.0, 1.0, 5),
            times: vec![0.0, 1.0],
            measures: vec![EmpiricalMeasure::dirac(p(0.0)).unwrap()],
        };
        let r = check_monotonicity(&model, &grid, None).unwrap();
        assert_eq!(r.verdict, Verdict::Neither);
        assert!((r.sup_dsigma0 - 2.0).abs() < 1e-8);
        let anti = check_monotonicity(&model, &grid, Some(1.5)).unwrap();
        assert_eq!(anti.verdict, Verdict::Neither);
    }

    #[test]
    fn anti_monotone_when_every_time_is_large() {
        let model = presets::burgers_smooth(ScalarFn::poly(vec![0.0, -2.0]));
        let grid = MonotonicityGrid {
            sigmas: linspace(-1.0, 1.0, 5),
            times: vec![1.0, 2.0],
            measures: vec![EmpiricalMeasure::dirac(p(0.3)).unwrap()],
        };
        let r = check_monotonicity(&model, &grid, Some(1.5)).unwrap();
        assert_eq!(r.verdict, Verdict::AntiMonotone { c0: 1.5 });
    }

    #[test]
    fn sign_flip_of_g_flips_criterion() {
        let mut cfg = presets::remark_example().config().clone();
        cfg.terminal_cost = TerminalCost::Separable {
            phi: crate::model::Phi::HalfSquare,
            outer: ScalarFn::Exp { a: -1.0, b: -1.0, c: 1.0 },
        };
        let neg = GameModel::from_config(cfg).unwrap();
        let pos = presets::remark_example();
        // -G makes g concave; M stays defined while 1 + t G != 0.
        let (y, t, s) = (p(0.8), 0.2, 0.1);
        let a = pointwise_criterion(&pos, &y, t, s, None).unwrap();
        let b = pointwise_criterion(&neg, &y, t, s, None).unwrap();
        let m_pos = -t / (1.0 + t * (1.0 + s.exp()));
        let m_neg = -t / (1.0 - t * (1.0 + s.exp()));
        assert!((a / m_pos + b / m_neg).abs() < 1e-12);
    }
}
