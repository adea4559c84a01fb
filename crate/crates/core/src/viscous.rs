//! Parabolic regularization `d_t sigma + d_x F(sigma) = eps d_xx sigma` and the vanishing-viscosity study.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claw::godunov::godunov;
use crate::claw::grid::Grid1D;
use crate::error::{Error, Result};
use crate::model::{Profile, ReducedFlux};

pub const DEFAULT_CFL: f64 = 0.9;
/// Solves needing more time steps than this are refused.
pub const MAX_STEPS: usize = 20_000_000;
/// Fraction of the padded domain kept for `L1_loc` distances.
pub const WINDOW_FRACTION: f64 = 0.8;
/// The Godunov reference is computed on a grid this many times finer.
pub const REFERENCE_REFINEMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousScheme {
    /// Godunov (upwind) advective flux with explicit centred diffusion.
    UpwindCentered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscousField {
    /// Padded computational grid.
    pub grid: Grid1D,
    /// The domain that was asked for.
    pub requested: (f64, f64),
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub scheme: ViscousScheme,
    pub dt: f64,
    pub steps: usize,
    /// `|mass(T) - mass(0) + int (F(u_right) - F(u_left)) dt|`.
    pub mass_defect: f64,
}

impl ViscousField {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("at least one snapshot")
    }

    /// Largest cell-to-cell jump of the final snapshot.
    pub fn max_jump(&self) -> f64 {
        self.last().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    pub fn extremes(&self) -> (f64, f64) {
        self.values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Central part of the padded domain used for distances.
    pub fn window(&self) -> (f64, f64) {
        central_window(&self.grid)
    }
}

fn central_window(grid: &Grid1D) -> (f64, f64) {
    let mid = 0.5 * (grid.x_min + grid.x_max);
    let half = 0.5 * WINDOW_FRACTION * (grid.x_max - grid.x_min);
    (mid - half, mid + half)
}

/// `grid` widened by at least `pad` on both sides with the same spacing.
fn padded(grid: &Grid1D, pad: f64) -> Result<Grid1D> {
    let h = grid.h();
    let extra = (pad / h).ceil() as usize;
    Grid1D::new(grid.x_min - extra as f64 * h, grid.x_max + extra as f64 * h, grid.n_cells + 2 * extra)
}

fn profile_speed_bound(flux: &ReducedFlux, profile: &Profile, grid: &Grid1D) -> (f64, f64, f64) {
    let (lo, hi) = profile.range().unwrap_or_else(|| {
        let v = grid.cell_averages(profile);
        v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
    });
    (lo, hi, flux.max_speed(lo, hi))
}

/// Explicit solve on `grid` padded by `lambda_max T`, with constant extrapolation at both ends.
///
/// The step is `0.9 / (lambda/h + 2 eps/h^2)`, which also satisfies `dt <= 0.9 min(h/lambda, h^2/(2 eps))`
/// and keeps the scheme monotone.
pub fn viscous_solve(
    flux: &ReducedFlux,
    profile: &Profile,
    epsilon: f64,
    t_final: f64,
    grid: Grid1D,
    snapshots: &[f64],
) -> Result<ViscousField> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::BadInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::BadInput(format!("final time must be finite and nonnegative, got {t_final}")));
    }
    let (_, _, lambda) = profile_speed_bound(flux, profile, &grid);
    let grid_p = padded(&grid, lambda * t_final)?;
    let h = grid_p.h();
    let dt = DEFAULT_CFL / (lambda / h + 2.0 * epsilon / (h * h));
    if !(dt > 0.0) || t_final / dt > MAX_STEPS as f64 {
        return Err(Error::StiffnessError { dt });
    }

    let mut times: Vec<f64> = snapshots.iter().copied().filter(|&t| t > 0.0 && t < t_final).collect();
    times.extend([0.0, t_final]);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let n = grid_p.n_cells;
    let mut u = grid_p.cell_averages(profile);
    let mass0: f64 = u.iter().sum::<f64>() * h;
    let mut boundary = 0.0;
    let mut fl = vec![0.0; n + 1];
    let mut values = vec![u.clone()];
    let mut t = 0.0;
    let mut steps = 0;
    let d = epsilon / h;
    for &target in &times[1..] {
        while t < target {
            let step = dt.min(target - t);
            for (j, f) in fl.iter_mut().enumerate() {
                let ul = u[j.saturating_sub(1)];
                let ur = u[j.min(n - 1)];
                *f = flux.godunov_flux(ul, ur) - d * (ur - ul);
            }
            boundary += step * (fl[n] - fl[0]);
            let r = step / h;
            for (i, v) in u.iter_mut().enumerate() {
                *v -= r * (fl[i + 1] - fl[i]);
            }
            steps += 1;
            t = if target - t - step <= 1e-14 * target.max(1.0) { target } else { t + step };
        }
        values.push(u.clone());
    }
    let mass1: f64 = u.iter().sum::<f64>() * h;
    Ok(ViscousField {
        grid: grid_p,
        requested: (grid.x_min, grid.x_max),
        epsilon,
        times,
        values,
        scheme: ViscousScheme::UpwindCentered,
        dt,
        steps,
        mass_defect: (mass1 - mass0 + boundary).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub l1_distance: f64,
    pub runtime_ms: f64,
    pub mass_defect: f64,
    pub max_jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityStudy {
    pub t_final: f64,
    pub grid: Grid1D,
    pub window: (f64, f64),
    pub reference_cells: usize,
    pub rows: Vec<StudyRow>,
    /// Distances never grow by more than 10% as `eps` decreases.
    pub monotone: bool,
}

impl ViscosityStudy {
    /// Columns `epsilon,l1_distance,runtime_ms`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epsilon", "l1_distance", "runtime_ms"])?;
        for r in &self.rows {
            w.write_record([r.epsilon.to_string(), r.l1_distance.to_string(), format!("{:.3}", r.runtime_ms)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const MONOTONE_SLACK: f64 = 0.10;

pub fn is_monotone_with_slack(distances: &[f64], slack: f64) -> bool {
    distances.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

/// `L1` distances between viscous solutions and a refined Godunov reference, for a decreasing `eps` list.
pub fn vanishing_viscosity_study(
    flux: &ReducedFlux,
    profile: &Profile,
    epsilons: &[f64],
    t_final: f64,
    grid: Grid1D,
) -> Result<ViscosityStudy> {
    if epsilons.is_empty() {
        return Err(Error::BadInput("empty epsilon list".into()));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::BadInput("epsilon list must be strictly decreasing".into()));
    }
    let (_, _, lambda) = profile_speed_bound(flux, profile, &grid);
    let grid_p = padded(&grid, lambda * t_final)?;
    let window = central_window(&grid_p);

    let fine = Grid1D::new(grid_p.x_min, grid_p.x_max, grid_p.n_cells * REFERENCE_REFINEMENT)?;
    let reference = godunov(flux, fine, &fine.cell_averages(profile), t_final, crate::claw::DEFAULT_CFL, &[])?;
    // Average the fine cells back onto the working grid.
    let coarse_ref: Vec<f64> = reference
        .last()
        .chunks(REFERENCE_REFINEMENT)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();

    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let field = viscous_solve(flux, profile, eps, t_final, grid, &[])?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            debug_assert_eq!(field.grid, grid_p);
            Ok(StudyRow {
                epsilon: eps,
                l1_distance: grid_p.l1_distance_on(field.last(), &coarse_ref, window.0, window.1),
                runtime_ms,
                mass_defect: field.mass_defect,
                max_jump: field.max_jump(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = rows.iter().map(|r| r.l1_distance).collect();
    Ok(ViscosityStudy {
        t_final,
        grid: grid_p,
        window,
        reference_cells: fine.n_cells,
        monotone: is_monotone_with_slack(&distances, MONOTONE_SLACK),
        rows,
    })
}
