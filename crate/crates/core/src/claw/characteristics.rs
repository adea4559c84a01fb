//! Characteristics, shock curves and rarefaction wedges of the reduced law.

use serde::{Deserialize, Serialize};

use super::fronts::{track_fronts, FrontHistory, Track};
use super::godunov::{godunov_profile, EntropyField, DEFAULT_CFL};
use super::grid::Grid1D;
use super::riemann::{riemann_fan, RiemannFan, Wave};
use crate::error::{Error, Result};
use crate::model::{Profile, ReducedFlux};
use crate::numerics::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramOptions {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub t_max: f64,
    pub n_snapshots: usize,
    pub cfl: f64,
}

impl DiagramOptions {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, t_max: f64) -> Self {
        Self { x_min, x_max, n_cells, t_max, n_snapshots: 200, cfl: DEFAULT_CFL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicLine {
    pub x0: f64,
    pub state: f64,
    pub slope: f64,
    pub t_end: f64,
    pub x_end: f64,
    /// Index of the shock curve the line runs into.
    pub ends_on_shock: Option<usize>,
}

/// Apex `(x, t)` and the speed range of a fan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanCenter {
    pub x: f64,
    pub t: f64,
    pub speed_lo: f64,
    pub speed_hi: f64,
    pub state_lo: f64,
    pub state_hi: f64,
}

impl FanCenter {
    fn from_wave(x: f64, t: f64, w: &Wave) -> Option<Self> {
        match *w {
            Wave::Rarefaction { speed_lo, speed_hi, state_lo, state_hi } => {
                Some(Self { x, t, speed_lo, speed_hi, state_lo, state_hi })
            }
            Wave::Shock { .. } => None,
        }
    }

    fn from_fan(x: f64, t: f64, fan: &RiemannFan) -> Vec<Self> {
        fan.waves.iter().filter_map(|w| Self::from_wave(x, t, w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicDiagram {
    pub t_max: f64,
    pub grid: Grid1D,
    pub characteristics: Vec<CharacteristicLine>,
    pub shocks: Vec<Track>,
    pub rarefactions: Vec<FanCenter>,
    pub history: FrontHistory,
}

/// The plotting layout: `{characteristics: [[x0, slope]], shocks: [[[t, x], ...]], rarefactions: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub characteristics: Vec<[f64; 2]>,
    pub characteristic_ends: Vec<[f64; 2]>,
    pub shocks: Vec<Vec<[f64; 2]>>,
    pub rarefactions: Vec<PlotFan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotFan {
    /// `[x, t]`
    pub apex: [f64; 2],
    pub speed_lo: f64,
    pub speed_hi: f64,
}

impl CharacteristicDiagram {
    pub fn plot_data(&self) -> PlotData {
        PlotData {
            characteristics: self.characteristics.iter().map(|c| [c.x0, c.slope]).collect(),
            characteristic_ends: self.characteristics.iter().map(|c| [c.t_end, c.x_end]).collect(),
            shocks: self.shocks.iter().map(|s| s.integrated.iter().map(|&(t, x)| [t, x]).collect()).collect(),
            rarefactions: self
                .rarefactions
                .iter()
                .map(|f| PlotFan { apex: [f.x, f.t], speed_lo: f.speed_lo, speed_hi: f.speed_hi })
                .collect(),
        }
    }
}

/// Fans emanating from the jumps of `s0` at `t = 0`.
pub fn initial_fans(flux: &ReducedFlux, profile: &Profile) -> Result<Vec<FanCenter>> {
    let mut out = Vec::new();
    for j in profile.jumps() {
        out.extend(FanCenter::from_fan(j.at, 0.0, &riemann_fan(flux, j.left, j.right)?));
    }
    Ok(out)
}

/// Detected shock polyline, extended back to `t = 0` when it starts at a jump of `s0`.
fn shock_polyline(track: &Track, profile: &Profile, h: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = track.points.iter().map(|p| (p.t, p.x)).collect();
    let (t0, x0) = track.birth();
    let back = x0 - track.initial_speed() * t0;
    if profile.jumps().iter().any(|j| (j.at - back).abs() <= 4.0 * h + 0.05 * t0) {
        pts.insert(0, (0.0, back));
    }
    pts
}

/// First time the line `x0 + slope t` crosses the polyline, if it does.
fn first_crossing(x0: f64, slope: f64, poly: &[(f64, f64)], h: f64) -> Option<(f64, f64)> {
    let g = |(t, x): (f64, f64)| x0 + slope * t - x;
    let first = poly[0];
    // Lines focusing into the birth point of a compression shock.
    if first.0 > 0.0 && g(first).abs() <= 2.0 * h {
        return Some(first);
    }
    for w in poly.windows(2) {
        let (a, b) = (g(w[0]), g(w[1]));
        if a == 0.0 {
            return Some(w[0]);
        }
        if a.signum() != b.signum() {
            let s = a / (a - b);
            let t = w[0].0 + s * (w[1].0 - w[0].0);
            return Some((t, x0 + slope * t));
        }
    }
    None
}

/// Runs Godunov on `s0`, tracks its shocks and follows the characteristics from `seeds`.
pub fn trace_characteristics(
    flux: &ReducedFlux,
    profile: &Profile,
    opts: &DiagramOptions,
    seeds: &[f64],
) -> Result<(CharacteristicDiagram, EntropyField)> {
    if !(opts.t_max > 0.0) {
        return Err(Error::BadInput(format!("t_max must be positive, got {}", opts.t_max)));
    }
    if opts.n_snapshots < 2 {
        return Err(Error::BadInput("need at least 2 snapshots".into()));
    }
    let grid = Grid1D::new(opts.x_min, opts.x_max, opts.n_cells)?;
    let h = grid.h();
    let times = linspace(0.0, opts.t_max, opts.n_snapshots + 1);
    let field = godunov_profile(flux, profile, grid, opts.t_max, opts.cfl, &times)?;
    let history = track_fronts(flux, &field)?;

    let mut rarefactions = initial_fans(flux, profile)?;
    for m in &history.merges {
        rarefactions.extend(FanCenter::from_fan(m.x, m.t, &m.fan));
    }

    let polylines: Vec<Vec<(f64, f64)>> = history.tracks.iter().map(|t| shock_polyline(t, profile, h)).collect();
    let characteristics = seeds
        .iter()
        .map(|&x0| {
            let state = profile.value(x0);
            let slope = flux.fbar(state);
            let mut end = (opts.t_max, x0 + slope * opts.t_max);
            let mut on = None;
            for (i, poly) in polylines.iter().enumerate() {
                if let Some(c) = first_crossing(x0, slope, poly, h) {
                    if c.0 < end.0 {
                        end = c;
                        on = Some(i);
                    }
                }
            }
            CharacteristicLine { x0, state, slope, t_end: end.0, x_end: end.1, ends_on_shock: on }
        })
        .collect();

    Ok((
        CharacteristicDiagram {
            t_max: opts.t_max,
            grid,
            characteristics,
            shocks: history.tracks.clone(),
            rarefactions,
            history,
        },
        field,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reachability {
    Reached { origins: Vec<f64>, residual: f64 },
    Rarefaction { center: FanCenter, residual: f64 },
    Ambiguous { residual: f64 },
}

/// Decides whether `sigma_e` at `(t, x)` is carried by a characteristic from `s0` or sits in a fan.
pub fn backward_reachability(
    flux: &ReducedFlux,
    profile: &Profile,
    t: f64,
    x: f64,
    sigma_e: f64,
    fans: &[FanCenter],
    tol: f64,
) -> Reachability {
    let x0 = x - t * flux.fbar(sigma_e);
    let residual = profile.jump_aware_distance(x0, sigma_e);
    if residual <= tol {
        return Reachability::Reached { origins: vec![x0], residual };
    }
    let speed = flux.fbar(sigma_e);
    for c in fans {
        let dt = t - c.t;
        if dt <= 0.0 {
            continue;
        }
        let xi = (x - c.x) / dt;
        let (lo, hi) = (c.speed_lo.min(c.speed_hi), c.speed_lo.max(c.speed_hi));
        let mismatch = (speed - xi).abs();
        if xi >= lo - tol && xi <= hi + tol && mismatch <= tol {
            return Reachability::Rarefaction { center: *c, residual: mismatch };
        }
    }
    Reachability::Ambiguous { residual }
}
