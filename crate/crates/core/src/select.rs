//! Whether the entropy solution picks out a Nash equilibrium at a given terminal time and mean.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claw::characteristics::{trace_characteristics, DiagramOptions, FanCenter};
use crate::claw::godunov::EntropyField;
use crate::claw::lax_oleinik::lax_oleinik;
use crate::claw::riemann::{riemann_fan, RiemannFan};
use crate::equilibrium::{find_equilibria, Classification, ScanOptions};
use crate::error::{Error, Result};
use crate::measure::{EmpiricalMeasure, Point};
use crate::model::{GameModel, Profile, Reduced, ReducedFlux};

pub const DEFAULT_H: f64 = 1e-3;
pub const MIN_TOL: f64 = 1e-6;
/// `tol = max(MIN_TOL, TOL_CELLS h Lip(s0))`.
pub const TOL_CELLS: f64 = 10.0;
/// Residuals in `[tol / AMBIGUITY_FACTOR, tol * AMBIGUITY_FACTOR]` are flagged.
pub const AMBIGUITY_FACTOR: f64 = 2.0;
/// A Godunov value snaps to a characteristic root closer than this fraction of `range(s0)`.
pub const SNAP_FRACTION: f64 = 0.1;
/// Snapshot spacing of the Godunov run used to locate fans.
const TRACK_DT: f64 = 0.02;
const MAX_TRACK_SNAPSHOTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    /// Riemann solution for steps, Lax-Oleinik for convex fluxes, Godunov otherwise.
    Auto,
    RiemannExact,
    LaxOleinik,
    /// Godunov, refined by exact fan values inside detected wedges and by
    /// snapping to the nearest characteristic root elsewhere.
    Godunov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub source: EntropySource,
    /// Resolution scale: Godunov cell size and the `h` in the default tolerance.
    pub h: f64,
    /// Overrides the data-driven tolerance.
    pub tol: Option<f64>,
    pub scan: ScanOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { source: EntropySource::Auto, h: DEFAULT_H, tol: None, scan: ScanOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SelectionClass {
    Selected,
    NoEquilibrium,
    NotSelected,
}

impl SelectionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionClass::Selected => "SELECTED",
            SelectionClass::NoEquilibrium => "NO_EQUILIBRIUM",
            SelectionClass::NotSelected => "NOT_SELECTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    #[serde(rename = "T")]
    pub t: f64,
    /// Scalar mean coordinate `mean . zeta`.
    pub x: f64,
    pub sigma_entropy: f64,
    /// Unrefined Godunov value, when that source is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_godunov: Option<f64>,
    /// `|sigma_e - s0(x - T fbar(sigma_e) |zeta|^2)|`, jump-aware.
    pub residual: f64,
    pub tol: f64,
    pub classification: SelectionClass,
    pub equilibria: Vec<f64>,
    /// Residual too close to the threshold to trust the verdict.
    pub ambiguous: bool,
    /// A fixed point exists only against a one-sided limit of a jump of `s0`.
    pub one_sided_equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub classification: SelectionClass,
    /// First and last sampled mean in the region.
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub model: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub source: EntropySource,
    pub h: f64,
    pub min_tol: f64,
    pub entries: Vec<SelectionEntry>,
    pub regions: Vec<Region>,
}

impl SelectionReport {
    pub fn any_ambiguous(&self) -> bool {
        self.entries.iter().any(|e| e.ambiguous)
    }

    pub fn regions_of(&self, class: SelectionClass) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.classification == class)
    }

    /// Columns `T,x,sigma_entropy,residual,classification,equilibria`, equilibria joined by `;`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["T", "x", "sigma_entropy", "residual", "classification", "equilibria"])?;
        for e in &self.entries {
            let eq: Vec<String> = e.equilibria.iter().map(|s| s.to_string()).collect();
            w.write_record([
                e.t.to_string(),
                e.x.to_string(),
                e.sigma_entropy.to_string(),
                e.residual.to_string(),
                e.classification.as_str().to_string(),
                eq.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Evaluator {
    Riemann { fan: RiemannFan, at: f64 },
    LaxOleinik,
    Field { field: EntropyField, fans: Vec<FanCenter> },
}

enum Raw {
    Exact(f64),
    Field(f64),
}

/// Entropy solution at one terminal time, prepared for a window of means.
pub struct SelectionContext<'a> {
    model: &'a GameModel,
    reduced: Reduced<'a>,
    zeta_sq: f64,
    t: f64,
    opts: SelectionOptions,
    source: EntropySource,
    eval: Evaluator,
}

fn resolve_source(flux: &ReducedFlux, profile: &Profile, wanted: EntropySource) -> EntropySource {
    match wanted {
        EntropySource::Auto => {
            if matches!(profile, Profile::Step { .. }) {
                EntropySource::RiemannExact
            } else {
                let convex = profile.range().is_some_and(|(lo, hi)| flux.checks(lo, hi).inf_derivative > 0.0);
                if convex { EntropySource::LaxOleinik } else { EntropySource::Godunov }
            }
        }
        s => s,
    }
}

impl<'a> SelectionContext<'a> {
    /// Prepares `sigma_e(T, .)` for means in `[x_lo, x_hi]`.
    pub fn new(model: &'a GameModel, t: f64, x_lo: f64, x_hi: f64, opts: SelectionOptions) -> Result<Self> {
        let reduced = model.require_reduced()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::BadInput(format!("terminal time must be positive, got {t}")));
        }
        if !(opts.h > 0.0) {
            return Err(Error::BadInput(format!("h must be positive, got {}", opts.h)));
        }
        if !(x_lo <= x_hi) {
            return Err(Error::EmptyInterval { lo: x_lo, hi: x_hi });
        }
        let (flux, profile) = (reduced.flux, reduced.profile);
        let source = resolve_source(flux, profile, opts.source);
        let eval = match source {
            EntropySource::RiemannExact => match profile {
                Profile::Step { at, left, right } => Evaluator::Riemann { fan: riemann_fan(flux, *left, *right)?, at: *at },
                _ => return Err(Error::BadInput("the exact Riemann source needs a step profile".into())),
            },
            EntropySource::LaxOleinik => Evaluator::LaxOleinik,
            EntropySource::Godunov | EntropySource::Auto => {
                let (lo, hi) = profile
                    .range()
                    .ok_or_else(|| Error::BadInput("Godunov source needs a bounded profile".into()))?;
                let pad = flux.max_speed(lo, hi) * t + 1.0;
                let (a, b) = (x_lo - pad, x_hi + pad);
                let mut d = DiagramOptions::new(a, b, ((b - a) / opts.h).round().max(2.0) as usize, t);
                d.n_snapshots = ((t / TRACK_DT).ceil() as usize).clamp(2, MAX_TRACK_SNAPSHOTS);
                let (diagram, field) = trace_characteristics(flux, profile, &d, &[])?;
                Evaluator::Field { field, fans: diagram.rarefactions }
            }
        };
        let zeta_sq = reduced.zeta.norm_squared();
        Ok(Self { model, reduced, zeta_sq, t, opts, source, eval })
    }

    pub fn source(&self) -> EntropySource {
        self.source
    }

    /// `sigma_e(T, y)` before any snapping.
    pub fn entropy_value(&self, y: f64) -> Result<f64> {
        Ok(match self.raw_value(y)? {
            Raw::Exact(v) | Raw::Field(v) => v,
        })
    }

    fn raw_value(&self, y: f64) -> Result<Raw> {
        let flux = self.reduced.flux;
        Ok(match &self.eval {
            Evaluator::Riemann { fan, at } => Raw::Exact(fan.value(flux, (y - at) / self.t)),
            Evaluator::LaxOleinik => Raw::Exact(lax_oleinik(flux, self.reduced.profile, self.t, y)?),
            Evaluator::Field { field, fans } => {
                let inside = fans.iter().find_map(|f| {
                    let dt = self.t - f.t;
                    let speed = (y - f.x) / dt;
                    (dt > 0.0 && speed >= f.speed_lo && speed <= f.speed_hi)
                        .then(|| flux.solve_speed(speed, f.state_lo, f.state_hi))
                });
                match inside {
                    Some(v) => Raw::Exact(v),
                    None => Raw::Field(interpolate(field, y)),
                }
            }
        })
    }

    /// Tolerance from the slope of `s0` within a few cells of `foot`.
    pub fn tolerance_at(&self, foot: f64) -> f64 {
        if let Some(t) = self.opts.tol {
            return t;
        }
        let h = self.opts.h;
        let p = self.reduced.profile;
        let pts: Vec<f64> = (-5..=5).map(|k| foot + k as f64 * h).collect();
        let jumps = p.jumps();
        let slack = 1e-9 * h;
        let lip = pts
            .windows(2)
            .filter(|w| !jumps.iter().any(|j| j.at >= w[0] - slack && j.at <= w[1] + slack))
            .map(|w| (p.value(w[1]) - p.value(w[0])).abs() / h)
            .fold(0.0, f64::max);
        MIN_TOL.max(TOL_CELLS * h * lip)
    }

    fn residual(&self, y: f64, sigma_e: f64) -> (f64, f64) {
        let foot = y - self.t * self.reduced.flux.fbar(sigma_e) * self.zeta_sq;
        let p = self.reduced.profile;
        let jumps = p.jumps();
        let near_jump = jumps.iter().find(|j| (foot - j.at).abs() <= self.opts.h);
        let r = match near_jump {
            Some(j) => (sigma_e - j.left).abs().min((sigma_e - j.right).abs()),
            None => (sigma_e - p.value(foot)).abs(),
        };
        (r, foot)
    }

    /// Classifies the measure `m` through its scalar mean `mean . zeta`.
    pub fn classify(&self, m: &EmpiricalMeasure) -> Result<SelectionEntry> {
        let y = m.mean().dot(self.reduced.zeta);
        let report = find_equilibria(self.model, self.t, m, &self.opts.scan)?;
        let equilibria = report.sigmas();
        let (sigma_e, sigma_godunov) = match self.raw_value(y)? {
            Raw::Exact(v) => (v, None),
            Raw::Field(v) => {
                let (lo, hi) = self.reduced.profile.range().unwrap_or((v, v));
                let snap = equilibria
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
                    .filter(|s| (s - v).abs() <= SNAP_FRACTION * (hi - lo));
                (snap.unwrap_or(v), Some(v))
            }
        };
        let (residual, foot) = self.residual(y, sigma_e);
        let tol = self.tolerance_at(foot);
        let one_sided_equilibrium = report.jump_crossings.iter().any(|c| c.one_sided_root);
        let near_root = equilibria.iter().any(|s| (s - sigma_e).abs() <= tol);
        let classification = if report.classification == Classification::None {
            SelectionClass::NoEquilibrium
        } else if residual <= tol && near_root {
            SelectionClass::Selected
        } else {
            SelectionClass::NotSelected
        };
        let borderline = residual >= tol / AMBIGUITY_FACTOR && residual <= tol * AMBIGUITY_FACTOR;
        // A small residual with no listed equilibrium nearby contradicts itself.
        let inconsistent = residual <= tol && !near_root && !equilibria.is_empty();
        Ok(SelectionEntry {
            t: self.t,
            x: y,
            sigma_entropy: sigma_e,
            sigma_godunov,
            residual,
            tol,
            classification,
            equilibria,
            ambiguous: (borderline && classification != SelectionClass::NoEquilibrium) || inconsistent,
            one_sided_equilibrium,
        })
    }

    /// Dirac mass at `y zeta / |zeta|^2`, whose scalar mean is `y`.
    pub fn measure_at(&self, y: f64) -> Result<EmpiricalMeasure> {
        let at: Point = self.reduced.zeta * (y / self.zeta_sq);
        EmpiricalMeasure::dirac(at)
    }
}

/// Linear interpolation between cell centres, constant beyond the outer centres.
fn interpolate(field: &EntropyField, y: f64) -> f64 {
    let g = &field.grid;
    let u = field.last();
    let s = (y - g.x_min) / g.h() - 0.5;
    if s <= 0.0 {
        return u[0];
    }
    let i = s.floor() as usize;
    if i + 1 >= u.len() {
        return u[u.len() - 1];
    }
    let w = s - i as f64;
    (1.0 - w) * u[i] + w * u[i + 1]
}

/// Classification of a single measure.
pub fn classify_point(model: &GameModel, t: f64, m: &EmpiricalMeasure, opts: SelectionOptions) -> Result<SelectionEntry> {
    let reduced = model.require_reduced()?;
    let y = m.mean().dot(reduced.zeta);
    SelectionContext::new(model, t, y - 1.0, y + 1.0, opts)?.classify(m)
}

/// Groups consecutive entries with the same class.
pub fn summarize_regions(entries: &[SelectionEntry]) -> Vec<Region> {
    let mut out: Vec<Region> = Vec::new();
    for e in entries {
        match out.last_mut() {
            Some(r) if r.classification == e.classification => {
                r.hi = e.x;
                r.n_points += 1;
            }
            _ => out.push(Region { classification: e.classification, lo: e.x, hi: e.x, n_points: 1 }),
        }
    }
    out
}

/// Classifies Dirac masses at every mean in `x_grid` and aggregates the regions.
pub fn region_scan(model: &GameModel, t: f64, x_grid: &[f64], opts: SelectionOptions) -> Result<SelectionReport> {
    if x_grid.is_empty() {
        return Err(Error::BadInput("empty mean grid".into()));
    }
    let mut xs = x_grid.to_vec();
    xs.sort_by(f64::total_cmp);
    let ctx = SelectionContext::new(model, t, xs[0], xs[xs.len() - 1], opts)?;
    let entries = xs
        .par_iter()
        .map(|&y| ctx.classify(&ctx.measure_at(y)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionReport {
        model: model.name.clone(),
        t,
        source: ctx.source(),
        h: opts.h,
        min_tol: MIN_TOL,
        regions: summarize_regions(&entries),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::numerics::linspace;

    fn dirac(x: f64) -> EmpiricalMeasure {
        EmpiricalMeasure::from_scalars(&[x], &[1.0]).unwrap()
    }

    #[test]
    fn burgers_inside_wedge_has_no_equilibrium() {
        let e = classify_point(&presets::burgers(), 1.0, &dirac(0.5), SelectionOptions::default()).unwrap();
        assert_eq!(e.sigma_entropy, 0.5);
        assert!((e.residual - 0.5).abs() < 1e-12);
        assert!(e.equilibria.is_empty());
        assert_eq!(e.classification, SelectionClass::NoEquilibrium);
    }

    #[test]
    fn cubic_inside_wedge_is_not_selected() {
        let e = classify_point(&presets::cubic(), 1.0, &dirac(0.5), SelectionOptions::default()).unwrap();
        assert!((e.sigma_entropy - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(e.equilibria.len(), 1);
        assert!((e.equilibria[0] + 1.0).abs() < 1e-8);
        assert_eq!(e.classification, SelectionClass::NotSelected);
    }

    #[test]
    fn outside_the_wedges_is_selected() {
        for (m, x) in [(presets::burgers(), -0.5), (presets::burgers(), 1.5), (presets::cubic(), 0.1), (presets::cubic(), 1.3)] {
            let e = classify_point(&m, 1.0, &dirac(x), SelectionOptions::default()).unwrap();
            assert_eq!(e.classification, SelectionClass::Selected, "{} at {x}: {e:?}", m.name);
            assert!(!e.ambiguous);
        }
    }

    #[test]
    fn tanh_is_selected() {
        let m = presets::tanh();
        let r = region_scan(&m, 2.0, &linspace(-3.0, 3.0, 25), SelectionOptions::default()).unwrap();
        assert_eq!(r.source, EntropySource::LaxOleinik);
        assert!(r.entries.iter().all(|e| e.classification == SelectionClass::Selected), "{:?}", r.regions);
    }

    #[test]
    fn burgers_region() {
        let h = 0.01;
        let grid: Vec<f64> = (-100..=200).map(|k| k as f64 * h).collect();
        let r = region_scan(&presets::burgers(), 1.0, &grid, SelectionOptions { h, ..Default::default() }).unwrap();
        let none: Vec<_> = r.regions_of(SelectionClass::NoEquilibrium).collect();
        assert_eq!(none.len(), 1);
        assert!(none[0].lo.abs() <= 1.5 * h && (none[0].hi - 1.0).abs() <= 1.5 * h, "{none:?}");
    }

    #[test]
    fn non_reduced_models_are_refused() {
        let r = classify_point(&presets::remark_example(), 1.0, &dirac(0.0), SelectionOptions::default());
        assert!(matches!(r, Err(Error::ReducedRegimeRequired)));
    }

    #[test]
    fn csv_columns() {
        let r = region_scan(&presets::cubic(), 1.0, &[0.5, 2.0], SelectionOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("T,x,sigma_entropy,residual,classification,equilibria"));
        assert!(lines.next().unwrap().contains("NOT_SELECTED"));
        assert!(lines.next().unwrap().ends_with(",SELECTED,1"));
        assert_eq!(lines.next(), None);
    }
}
