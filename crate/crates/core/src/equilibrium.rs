//! Fixed points of `sigma -> Sigma0(sigma, t, m)`, Nash verification and the master field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb::{hopf_lax_objective, hopf_lax_value, optimal_point};
use crate::measure::{EmpiricalMeasure, Point};
use crate::model::GameModel;
use crate::numerics::{bisect, polish_in_bracket};

pub const DEFAULT_N_SCAN: usize = 2001;
/// `|sigma - Sigma0(sigma)|` below this counts as a root.
pub const ROOT_TOL: f64 = 1e-8;
pub const BISECT_TOL: f64 = 1e-10;
/// Roots closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-6;
/// Relative step of the central difference used for `dSigma0`.
pub const DSIGMA_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Search interval; defaults to `range(sigma0)` widened by 10% on each side.
    pub sigma_range: Option<(f64, f64)>,
    pub n_scan: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { sigma_range: None, n_scan: DEFAULT_N_SCAN }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Unique,
    Multiple,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub sigma: f64,
    pub residual: f64,
    #[serde(rename = "dSigma0")]
    pub d_sigma0: f64,
}

/// Sign change of `rho` across a discontinuity of `Sigma0` with no root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpCrossing {
    pub lo: f64,
    pub hi: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// `sigma` matches one of the one-sided limits of `Sigma0` at the jump.
    pub one_sided_root: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub t: f64,
    pub mean: Vec<f64>,
    pub roots: Vec<RootInfo>,
    pub jump_crossings: Vec<JumpCrossing>,
    pub classification: Classification,
    pub scan_range: (f64, f64),
    pub n_scan: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EquilibriumReport {
    pub fn sigmas(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.sigma).collect()
    }
}

/// `Sigma0(sigma, t, m) = sigma0(x*(t, ., sigma)# m)`.
pub fn sigma_map(model: &GameModel, sigma: f64, t: f64, m: &EmpiricalMeasure) -> Result<f64> {
    if m.dim() != model.dim() {
        return Err(Error::UnsupportedDimension { expected: model.dim(), got: m.dim() });
    }
    if t == 0.0 {
        return Ok(model.sigma0.evaluate(m));
    }
    let image = m.try_pushforward(|x| optimal_point(model, t, x, sigma).map(|r| r.x_star))?;
    Ok(model.sigma0.evaluate(&image))
}

/// `rho(sigma) = sigma - Sigma0(sigma, t, m)`.
pub fn rho(model: &GameModel, sigma: f64, t: f64, m: &EmpiricalMeasure) -> Result<f64> {
    Ok(sigma - sigma_map(model, sigma, t, m)?)
}

/// Default search interval for `sigma`.
pub fn default_sigma_range(model: &GameModel) -> Result<(f64, f64)> {
    let (lo, hi) = model.sigma0.range().ok_or_else(|| {
        Error::BadInput("range(sigma0) is unbounded; pass an explicit sigma range".into())
    })?;
    let pad = (0.1 * (hi - lo)).max(0.1);
    Ok((lo - pad, hi + pad))
}

fn d_sigma0(model: &GameModel, sigma: f64, t: f64, m: &EmpiricalMeasure) -> f64 {
    let h = DSIGMA_STEP * sigma.abs().max(1.0);
    match (sigma_map(model, sigma + h, t, m), sigma_map(model, sigma - h, t, m)) {
        (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
        _ => f64::NAN,
    }
}

pub fn find_equilibria(
    model: &GameModel,
    t: f64,
    m: &EmpiricalMeasure,
    opts: &ScanOptions,
) -> Result<EquilibriumReport> {
    if opts.n_scan < 3 {
        return Err(Error::BadScan(opts.n_scan));
    }
    let mut warnings = Vec::new();
    let (lo, hi) = match opts.sigma_range {
        Some(r) => {
            if !(r.0 < r.1) {
                return Err(Error::EmptyInterval { lo: r.0, hi: r.1 });
            }
            if let Some((a, b)) = model.sigma0.range() {
                if r.0 > a || r.1 < b {
                    warnings.push(format!(
                        "sigma range [{}, {}] does not contain range(sigma0) = [{a}, {b}]; roots outside are missed",
                        r.0, r.1
                    ));
                }
            }
            r
        }
        None => default_sigma_range(model)?,
    };
    let n = opts.n_scan;
    let grid: Vec<f64> = crate::numerics::linspace(lo, hi, n);
    let rhos: Vec<f64> = grid
        .par_iter()
        .map(|&s| rho(model, s, t, m))
        .collect::<Result<Vec<_>>>()?;

    let f = |s: f64| rho(model, s, t, m).unwrap_or(f64::NAN);
    let mut candidates: Vec<f64> = Vec::new();
    let mut jump_crossings = Vec::new();
    for i in 0..n {
        if rhos[i].abs() <= ROOT_TOL {
            candidates.push(grid[i]);
        }
        if i + 1 < n {
            let (a, b) = (rhos[i], rhos[i + 1]);
            if a == 0.0 || b == 0.0 || a.signum() == b.signum() {
                continue;
            }
            let Some(br) = bisect(&f, grid[i], grid[i + 1], BISECT_TOL, 200) else {
                continue;
            };
            let s = polish_in_bracket(&f, br, 100);
            let r = f(s);
            if r.abs() <= ROOT_TOL {
                candidates.push(s);
            } else {
                let (rl, rh) = (f(br.lo), f(br.hi));
                jump_crossings.push(JumpCrossing {
                    lo: br.lo,
                    hi: br.hi,
                    rho_lo: rl,
                    rho_hi: rh,
                    one_sided_root: rl.abs().min(rh.abs()) <= 1e-6,
                });
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut roots: Vec<RootInfo> = Vec::new();
    for s in candidates {
        let residual = f(s).abs();
        match roots.last_mut() {
            Some(last) if (s - last.sigma).abs() <= DEDUP_TOL => {
                if residual < last.residual {
                    last.sigma = s;
                    last.residual = residual;
                }
            }
            _ => roots.push(RootInfo { sigma: s, residual, d_sigma0: 0.0 }),
        }
    }
    for r in &mut roots {
        r.d_sigma0 = d_sigma0(model, r.sigma, t, m);
    }
    let classification = match roots.len() {
        0 => Classification::None,
        1 => Classification::Unique,
        _ => Classification::Multiple,
    };
    Ok(EquilibriumReport {
        t,
        mean: m.mean().iter().copied().collect(),
        roots,
        jump_crossings,
        classification,
        scan_range: (lo, hi),
        n_scan: n,
        warnings,
    })
}

/// Outcome of checking a candidate equilibrium against the definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCheck {
    pub ok: bool,
    /// `|sigma - sigma0((x*)# m)|`.
    pub residual: f64,
    /// Largest residual of the implicit first-order equation over the atoms.
    pub first_order_residual: f64,
    /// Largest amount by which a probe point beats `x*` in the Hopf-Lax objective.
    pub minimization_gap: f64,
}

const NASH_PROBES: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// Rebuilds the coupling `(id, x*)# m` and checks the consistency and optimality conditions.
pub fn verify_nash(model: &GameModel, t: f64, m: &EmpiricalMeasure, sigma: f64) -> NashCheck {
    let fail = NashCheck { ok: false, residual: f64::INFINITY, first_order_residual: f64::INFINITY, minimization_gap: f64::INFINITY };
    if !sigma.is_finite() || m.dim() != model.dim() {
        return fail;
    }
    let mut images = Vec::with_capacity(m.len());
    let mut first_order: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for x in m.atoms() {
        let Ok(r) = optimal_point(model, t, x, sigma) else {
            return fail;
        };
        first_order = first_order.max(r.residual);
        let best = hopf_lax_objective(model, t, x, &r.x_star, sigma);
        for &d in &NASH_PROBES {
            for k in 0..x.len() {
                for sgn in [-1.0, 1.0] {
                    let mut y = r.x_star.clone();
                    y[k] += sgn * d * (1.0 + y[k].abs());
                    let v = hopf_lax_objective(model, t, x, &y, sigma);
                    gap = gap.max(best - v);
                }
            }
        }
        images.push(r.x_star);
    }
    let image = EmpiricalMeasure::new(images, m.weights().to_vec()).expect("same weights");
    let residual = (sigma - model.sigma0.evaluate(&image)).abs();
    let scale = 1.0 + m.atoms().iter().map(|a| a.norm()).fold(0.0, f64::max);
    NashCheck {
        ok: residual <= ROOT_TOL && first_order <= crate::hjb::RESIDUAL_TOL * scale && gap <= ROOT_TOL,
        residual,
        first_order_residual: first_order,
        minimization_gap: gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterValue {
    pub value: f64,
    pub sigma: f64,
    pub classification: Classification,
}

/// `u(t, x, m) = v(t, x, sigma(t, m))`; `root_index` picks among multiple equilibria.
pub fn master_field(
    model: &GameModel,
    t: f64,
    x: &Point,
    m: &EmpiricalMeasure,
    root_index: Option<usize>,
    opts: &ScanOptions,
) -> Result<MasterValue> {
    let report = find_equilibria(model, t, m, opts)?;
    let count = report.roots.len();
    let sigma = match (report.classification, root_index) {
        (Classification::None, _) => return Err(Error::NoEquilibrium { t }),
        (_, Some(i)) if i >= count => return Err(Error::RootIndexOutOfRange { index: i, count }),
        (_, Some(i)) => report.roots[i].sigma,
        (Classification::Unique, None) => report.roots[0].sigma,
        (Classification::Multiple, None) => return Err(Error::RootSelectionRequired { count }),
    };
    Ok(MasterValue { value: hopf_lax_value(model, t, x, sigma)?, sigma, classification: report.classification })
}

/// Finite-difference settings for the projected residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    /// Relative step.
    pub h_fd: f64,
    pub scan: ScanOptions,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { h_fd: 1e-4, scan: ScanOptions::default() }
    }
}

/// `sigma_N(t, x_1..x_N)`, the equilibrium at the uniform empirical measure.
pub fn sigma_n(model: &GameModel, t: f64, atoms: &[Point], scan: &ScanOptions) -> Result<f64> {
    let m = EmpiricalMeasure::uniform(atoms.to_vec())?;
    let report = find_equilibria(model, t, &m, scan)?;
    match report.classification {
        Classification::Unique => Ok(report.roots[0].sigma),
        _ => Err(Error::StencilCrossesSingularity),
    }
}

fn step(h_rel: f64, v: f64) -> f64 {
    h_rel * v.abs().max(1.0)
}

/// Time derivative by central differences, or a one-sided second-order formula near `t = 0`.
fn d_dt<F: Fn(f64) -> Result<f64>>(f: F, t: f64, h: f64) -> Result<f64> {
    if t - h >= 0.0 {
        Ok((f(t + h)? - f(t - h)?) / (2.0 * h))
    } else {
        Ok((-3.0 * f(t)? + 4.0 * f(t + h)? - f(t + 2.0 * h)?) / (2.0 * h))
    }
}

fn d_dx<F: Fn(&Point) -> Result<f64>>(f: F, x: &Point, k: usize, h: f64) -> Result<f64> {
    let mut a = x.clone();
    let mut b = x.clone();
    a[k] += h;
    b[k] -= h;
    Ok((f(&a)? - f(&b)?) / (2.0 * h))
}

fn perturb(atoms: &[Point], i: usize, k: usize, d: f64) -> Vec<Point> {
    let mut v = atoms.to_vec();
    v[i][k] += d;
    v
}

/// Residual of `d_t sigma_N + sum_i D_{x_i} sigma_N . DH(D_x v(t, x_i, sigma_N))`.
pub fn nplayer_residual(model: &GameModel, t: f64, atoms: &[Point], opts: &FdOptions) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure("atom list is empty".into()));
    }
    let sigma = sigma_n(model, t, atoms, &opts.scan)?;
    let ht = step(opts.h_fd, t);
    let dt = d_dt(|s| sigma_n(model, s, atoms, &opts.scan), t, ht)?;
    let mut transport = 0.0;
    for (i, xi) in atoms.iter().enumerate() {
        let drift = model.hamiltonian.gradient(&crate::hjb::value_gradient(model, t, xi, sigma)?);
        for k in 0..xi.len() {
            let h = step(opts.h_fd, xi[k]);
            let up = sigma_n(model, t, &perturb(atoms, i, k, h), &opts.scan)?;
            let dn = sigma_n(model, t, &perturb(atoms, i, k, -h), &opts.scan)?;
            transport += (up - dn) / (2.0 * h) * drift[k];
        }
    }
    Ok((dt + transport).abs())
}

/// Master-equation residual at `(t, x, m^N)` with `D_m u(m^N)(x_i) = N D_{x_i} u_N`.
pub fn master_residual(model: &GameModel, t: f64, x: &Point, atoms: &[Point], opts: &FdOptions) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure("atom list is empty".into()));
    }
    let u_n = |s: f64, y: &Point, a: &[Point]| -> Result<f64> {
        let sig = sigma_n(model, s, a, &opts.scan)?;
        hopf_lax_value(model, s, y, sig)
    };
    let sigma = sigma_n(model, t, atoms, &opts.scan)?;
    let ht = step(opts.h_fd, t);
    let du_dt = d_dt(|s| u_n(s, x, atoms), t, ht)?;
    let v_at = |y: &Point| hopf_lax_value(model, t, y, sigma);
    let grad_x = Point::from_iterator(
        x.len(),
        (0..x.len()).map(|k| d_dx(v_at, x, k, step(opts.h_fd, x[k]))).collect::<Result<Vec<_>>>()?,
    );
    let hamiltonian = model.hamiltonian.value(&grad_x);
    let mut nonlocal = 0.0;
    for (i, xi) in atoms.iter().enumerate() {
        let grad_i = Point::from_iterator(
            xi.len(),
            (0..xi.len()).map(|k| d_dx(v_at, xi, k, step(opts.h_fd, xi[k]))).collect::<Result<Vec<_>>>()?,
        );
        let drift = model.hamiltonian.gradient(&grad_i);
        for k in 0..xi.len() {
            let h = step(opts.h_fd, xi[k]);
            let up = u_n(t, x, &perturb(atoms, i, k, h))?;
            let dn = u_n(t, x, &perturb(atoms, i, k, -h))?;
            nonlocal += (up - dn) / (2.0 * h) * drift[k];
        }
    }
    Ok((du_dt + hamiltonian + nonlocal).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn p(x: f64) -> Point {
        Point::from_element(1, x)
    }

    fn at_mean(x: f64) -> EmpiricalMeasure {
        EmpiricalMeasure::dirac(p(x)).unwrap()
    }

    #[test]
    fn burgers_has_no_equilibrium_inside_the_fan() {
        let m = presets::burgers();
        let r = find_equilibria(&m, 1.0, &at_mean(0.5), &ScanOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::None);
        assert!(!r.jump_crossings.is_empty());
        assert_eq!(rho(&m, 0.0, 1.0, &at_mean(0.5)).unwrap(), -1.0);
        assert_eq!(rho(&m, 1.0, 1.0, &at_mean(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn cubic_unique_root_minus_one() {
        let m = presets::cubic();
        let opts = ScanOptions { sigma_range: Some((-2.0, 2.0)), n_scan: 2001 };
        let r = find_equilibria(&m, 1.0, &at_mean(0.5), &opts).unwrap();
        assert_eq!(r.classification, Classification::Unique);
        assert!((r.roots[0].sigma + 1.0).abs() < 1e-12);
        // Brute-force oracle: exact zeros of rho on a fine grid.
        let zeros: Vec<f64> = (0..=40000)
            .map(|i| -2.0 + 4.0 * i as f64 / 40000.0)
            .filter(|&s| rho(&m, s, 1.0, &at_mean(0.5)).unwrap().abs() <= 1e-12)
            .collect();
        assert_eq!(zeros, vec![-1.0]);
        let bad = verify_nash(&m, 1.0, &at_mean(0.5), 1.0);
        assert!(!bad.ok);
        assert_eq!(bad.residual, 2.0);
        assert!(verify_nash(&m, 1.0, &at_mean(0.5), -1.0).ok);
    }

    #[test]
    fn time_zero_fixed_point_is_sigma0() {
        let model = presets::remark_example();
        let m = EmpiricalMeasure::from_scalars(&[-1.0, 0.5, 2.0], &[0.25, 0.5, 0.25]).unwrap();
        let s0 = model.sigma0.evaluate(&m);
        assert_eq!(sigma_map(&model, 0.7, 0.0, &m).unwrap(), s0);
        assert!(verify_nash(&model, 0.0, &m, s0).ok);
        let r = find_equilibria(&model, 0.0, &m, &ScanOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Unique);
        assert!((r.roots[0].sigma - s0).abs() < 1e-12);
    }

    #[test]
    fn case1_sigma_map_closed_form() {
        let model = presets::remark_example();
        let m = EmpiricalMeasure::from_scalars(&[-1.0, 0.5, 2.0], &[0.25, 0.5, 0.25]).unwrap();
        let (s, t): (f64, f64) = (0.4, 0.8);
        let g = 1.0 + s.exp();
        let closed = m.integrate(|y| (y[0] / (1.0 + t * g)).powi(2).atan());
        assert!((sigma_map(&model, s, t, &m).unwrap() - closed).abs() < 1e-14);
    }

    #[test]
    fn bad_scan_and_root_selection_errors() {
        let m = presets::burgers();
        let opts = ScanOptions { sigma_range: None, n_scan: 2 };
        assert!(matches!(find_equilibria(&m, 1.0, &at_mean(0.5), &opts), Err(Error::BadScan(2))));
        let err = master_field(&m, 1.0, &p(0.0), &at_mean(0.5), None, &ScanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoEquilibrium { .. }));
    }

    #[test]
    fn master_field_at_time_zero_and_cubic() {
        let model = presets::remark_example();
        let m = EmpiricalMeasure::from_scalars(&[0.3, 1.2], &[0.5, 0.5]).unwrap();
        let u = master_field(&model, 0.0, &p(0.9), &m, None, &ScanOptions::default()).unwrap();
        let s0 = model.sigma0.evaluate(&m);
        assert!((u.value - model.cost.value(&p(0.9), s0)).abs() < 1e-12);
        let cubic = presets::cubic();
        let u = master_field(&cubic, 1.0, &p(0.2), &at_mean(0.5), None, &ScanOptions::default()).unwrap();
        assert!((u.value - hopf_lax_value(&cubic, 1.0, &p(0.2), -1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nplayer_residual_small_for_single_atom() {
        let model = presets::tanh();
        let r = nplayer_residual(&model, 0.3, &[p(0.2)], &FdOptions::default()).unwrap();
        assert!(r <= 1e-5, "residual {r}");
    }

    #[test]
    fn roots_invariant_under_relabeling_and_splitting() {
        let model = presets::remark_example();
        let a = EmpiricalMeasure::from_scalars(&[0.3, -1.2, 2.0], &[0.5, 0.25, 0.25]).unwrap();
        let b = EmpiricalMeasure::from_scalars(&[2.0, 0.3, -1.2, 0.3], &[0.25, 0.25, 0.25, 0.25]).unwrap();
        let ra = find_equilibria(&model, 0.7, &a, &ScanOptions::default()).unwrap();
        let rb = find_equilibria(&model, 0.7, &b, &ScanOptions::default()).unwrap();
        assert_eq!(ra.roots.len(), rb.roots.len());
        assert!((ra.roots[0].sigma - rb.roots[0].sigma).abs() < 1e-12);
    }
}
