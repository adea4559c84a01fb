//! Godunov finite volumes and the `EntropyField` container.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{total_variation, Grid1D};
use super::lax_oleinik::lax_oleinik;
use super::riemann::riemann_fan;
use crate::error::{Error, Result};
use crate::model::{Profile, ReducedFlux};

pub const DEFAULT_CFL: f64 = 0.9;
/// Below this many cells the interface fluxes are computed serially.
const PAR_MIN_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    RiemannExact,
    LaxOleinik,
    Godunov,
}

/// `sigma(t, .)` on a grid at a list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyField {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    /// `values[k][i]` belongs to `times[k]` and cell `i`.
    pub values: Vec<Vec<f64>>,
    pub method: Method,
}

impl EntropyField {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("at least one snapshot")
    }

    /// Index of the snapshot closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Cell value at `x` in snapshot `k`.
    pub fn value_at(&self, k: usize, x: f64) -> f64 {
        self.values[k][self.grid.cell_of(x)]
    }

    pub fn total_variation(&self, k: usize) -> f64 {
        total_variation(&self.values[k])
    }

    /// `(min, max)` over all snapshots.
    pub fn extremes(&self) -> (f64, f64) {
        self.values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Rows `t,x,sigma`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "sigma"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (i, v) in row.iter().enumerate() {
                w.write_record([t.to_string(), self.grid.center(i).to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn snapshot_schedule(t_final: f64, snapshots: &[f64]) -> Result<Vec<f64>> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::BadInput(format!("final time must be finite and nonnegative, got {t_final}")));
    }
    let mut times: Vec<f64> = snapshots.iter().copied().filter(|&t| t > 0.0 && t < t_final).collect();
    if let Some(bad) = snapshots.iter().find(|t| !t.is_finite()) {
        return Err(Error::BadInput(format!("non-finite snapshot time {bad}")));
    }
    times.push(0.0);
    times.push(t_final);
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

/// Godunov scheme with the exact interface flux and constant extrapolation at both ends.
///
/// The field is recorded at `0`, at `t_final` and at every snapshot time in between.
pub fn godunov(
    flux: &ReducedFlux,
    grid: Grid1D,
    initial: &[f64],
    t_final: f64,
    cfl: f64,
    snapshots: &[f64],
) -> Result<EntropyField> {
    if initial.len() != grid.n_cells {
        return Err(Error::BadInput(format!(
            "{} initial values for {} cells",
            initial.len(),
            grid.n_cells
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadInput("initial data must be finite".into()));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::BadInput(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    let times = snapshot_schedule(t_final, snapshots)?;
    let (lo, hi) = initial.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let lambda = flux.max_speed(lo, hi);
    if !lambda.is_finite() {
        return Err(Error::BadInput("maximal wave speed is not finite".into()));
    }
    let h = grid.h();
    let n = grid.n_cells;
    let mut u = initial.to_vec();
    let mut fluxes = vec![0.0; n + 1];
    let mut values = vec![u.clone()];
    let mut t = 0.0;
    for &target in &times[1..] {
        while t < target {
            let dt = if lambda > 0.0 { (cfl * h / lambda).min(target - t) } else { target - t };
            let interface = |j: usize| {
                let ul = u[j.saturating_sub(1)];
                let ur = u[j.min(n - 1)];
                flux.godunov_flux(ul, ur)
            };
            if n >= PAR_MIN_CELLS {
                fluxes.par_iter_mut().enumerate().with_min_len(1024).for_each(|(j, f)| *f = interface(j));
            } else {
                for (j, f) in fluxes.iter_mut().enumerate() {
                    *f = interface(j);
                }
            }
            let r = dt / h;
            for (i, v) in u.iter_mut().enumerate() {
                *v -= r * (fluxes[i + 1] - fluxes[i]);
            }
            t = if target - t - dt <= 1e-14 * target.max(1.0) { target } else { t + dt };
        }
        values.push(u.clone());
    }
    Ok(EntropyField { grid, times, values, method: Method::Godunov })
}

/// Godunov from the exact cell averages of `s0`.
pub fn godunov_profile(
    flux: &ReducedFlux,
    profile: &Profile,
    grid: Grid1D,
    t_final: f64,
    cfl: f64,
    snapshots: &[f64],
) -> Result<EntropyField> {
    godunov(flux, grid, &grid.cell_averages(profile), t_final, cfl, snapshots)
}

/// Exact Riemann solution `left | right` centred at `x0`, sampled at cell centres.
pub fn riemann_field(
    flux: &ReducedFlux,
    left: f64,
    right: f64,
    x0: f64,
    grid: Grid1D,
    times: &[f64],
) -> Result<EntropyField> {
    let fan = riemann_fan(flux, left, right)?;
    let values = times
        .iter()
        .map(|&t| {
            grid.centers()
                .into_iter()
                .map(|x| {
                    if t == 0.0 {
                        if x < x0 { left } else { right }
                    } else {
                        fan.value(flux, (x - x0) / t)
                    }
                })
                .collect()
        })
        .collect();
    Ok(EntropyField { grid, times: times.to_vec(), values, method: Method::RiemannExact })
}

/// Lax-Oleinik solution sampled at cell centres.
pub fn lax_oleinik_field(flux: &ReducedFlux, profile: &Profile, grid: Grid1D, times: &[f64]) -> Result<EntropyField> {
    let values = times
        .iter()
        .map(|&t| {
            grid.centers()
                .into_par_iter()
                .map(|x| lax_oleinik(flux, profile, t, x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyField { grid, times: times.to_vec(), values, method: Method::LaxOleinik })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Poly;

    fn cubic() -> ReducedFlux {
        ReducedFlux::scalar(Poly::new(vec![0.0, 0.0, 1.0]))
    }

    #[test]
    fn constants_are_preserved() {
        let grid = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let f = godunov(&cubic(), grid, &[0.7; 50], 1.0, 0.9, &[0.5]).unwrap();
        assert_eq!(f.times, vec![0.0, 0.5, 1.0]);
        assert!(f.values.iter().flatten().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn cubic_riemann_l1_error() {
        let fl = cubic();
        let grid = Grid1D::new(-2.0, 2.0, 4000).unwrap();
        let f = godunov_profile(&fl, &Profile::step(0.0, -1.0, 1.0), grid, 1.0, DEFAULT_CFL, &[]).unwrap();
        let exact = riemann_field(&fl, -1.0, 1.0, 0.0, grid, &[1.0]).unwrap();
        let err = grid.l1_distance_on(f.last(), &exact.values[0], -2.0, 2.0);
        assert!(err <= 0.02, "L1 error {err}");
    }

    #[test]
    fn tvd_and_maximum_principle() {
        let fl = cubic();
        let grid = Grid1D::new(-2.0, 2.0, 400).unwrap();
        let init: Vec<f64> = grid.centers().iter().map(|x| (3.0 * x).sin() + 0.3 * (7.0 * x).cos()).collect();
        let f = godunov(&fl, grid, &init, 1.0, 0.9, &crate::numerics::linspace(0.0, 1.0, 21)).unwrap();
        let (lo, hi) = init.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (flo, fhi) = f.extremes();
        assert!(flo >= lo - 1e-10 && fhi <= hi + 1e-10);
        for k in 1..f.times.len() {
            assert!(f.total_variation(k) <= f.total_variation(k - 1) + 1e-10);
        }
    }

    #[test]
    fn bad_inputs() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        assert!(godunov(&cubic(), grid, &[0.0; 3], 1.0, 0.9, &[]).is_err());
        assert!(godunov(&cubic(), grid, &[0.0, f64::NAN, 0.0, 0.0], 1.0, 0.9, &[]).is_err());
        assert!(godunov(&cubic(), grid, &[0.0; 4], 1.0, 1.5, &[]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let grid = Grid1D::new(0.0, 1.0, 2).unwrap();
        let f = godunov(&cubic(), grid, &[0.0, 0.0], 0.5, 0.9, &[]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,x,sigma"));
        assert_eq!(text.lines().count(), 5);
    }
}
