//! Landmark report for the focusing quartic-flux profile.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::characteristics::{trace_characteristics, CharacteristicDiagram, DiagramOptions};
use super::fronts::Track;
use super::riemann::{riemann_fan, rh_speed, RiemannFan};
use crate::error::{Error, Result};
use crate::model::quartic::{flux_prime, QuarticProfile, SQRT3};
use crate::model::{convex_envelope, Poly, Profile, ReducedFlux};

pub const DEFAULT_GODUNOV_CELLS: usize = 8000;

pub fn quartic_flux() -> ReducedFlux {
    ReducedFlux::scalar(Poly::new(vec![0.0, -1.0, 0.0, 1.0 / 3.0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileLandmarks {
    pub at_minus_two_thirds: f64,
    pub at_two_thirds: f64,
    pub at_one: f64,
    pub at_xi: f64,
}

/// Quantities recovered from a Godunov run on the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GodunovCheck {
    pub n_cells: usize,
    pub t_star: f64,
    pub s2_initial_speed: f64,
    pub s1_initial_speed: f64,
    pub s2_birth: (f64, f64),
    pub s1_birth: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticReport {
    pub xi: f64,
    pub t_xi: f64,
    /// `(x, t)` where the characteristics from `[-2/3, 2/3]` meet.
    pub focus: (f64, f64),
    pub t_star: f64,
    pub x_star: f64,
    pub sigma_star: f64,
    pub landmarks: ProfileLandmarks,
    /// Tangency point of the convex envelope of `F` on `[-sqrt 3, 1]`.
    pub r1: f64,
    pub s3_speed: f64,
    pub s1_initial_speed: f64,
    pub s2_initial_speed: f64,
    /// Riemann problem `sigma* | 1` left behind by the collision at `(0, t*)`.
    pub post_collision: RiemannFan,
    pub post_collision_has_fan: bool,
    pub godunov: Option<GodunovCheck>,
}

/// Builds the profile for `xi` and its landmark report; `godunov_cells` adds the finite-volume cross-check.
pub fn build_quartic_profile(xi: f64, godunov_cells: Option<usize>) -> Result<(Profile, QuarticReport)> {
    let q = QuarticProfile::new(xi)?;
    let flux = quartic_flux();
    let env = convex_envelope(|u| flux.f(u), |u| flux.fbar(u), -SQRT3, 1.0, 4001)?;
    let r1 = env
        .bridges()
        .next()
        .map(|(lo, _)| lo)
        .ok_or_else(|| Error::ProfileConstructionFailed("envelope of F on [-sqrt 3, 1] has no chord".into()))?;
    let s2_left = QuarticProfile::s2_left_state(1.0, q.t_xi)?;
    let post_collision = riemann_fan(&flux, q.sigma_star, 1.0)?;
    let post_collision_has_fan = post_collision.rarefactions().next().is_some();
    let report = QuarticReport {
        xi,
        t_xi: q.t_xi,
        focus: (0.0, 1.0),
        t_star: q.t_star,
        x_star: q.x_star,
        sigma_star: q.sigma_star,
        landmarks: ProfileLandmarks {
            at_minus_two_thirds: q.value(-2.0 / 3.0),
            at_two_thirds: q.value(2.0 / 3.0),
            at_one: q.value(1.0),
            at_xi: q.value(xi),
        },
        r1,
        s3_speed: flux_prime(r1),
        s1_initial_speed: rh_speed(&flux, q.value(-2.0 / 3.0), q.value(2.0 / 3.0)),
        s2_initial_speed: rh_speed(&flux, s2_left, 1.0),
        post_collision_has_fan,
        post_collision,
        godunov: None,
    };
    let profile = Profile::Quartic(Arc::new(q));
    let report = match godunov_cells {
        Some(n) => {
            let check = godunov_check(&profile, &report, n)?;
            QuarticReport { godunov: Some(check), ..report }
        }
        None => report,
    };
    Ok((profile, report))
}

/// Domain and diagram options used for the quartic runs.
pub fn quartic_diagram_options(report: &QuarticReport, n_cells: usize, t_max: f64) -> DiagramOptions {
    let mut o = DiagramOptions::new(report.x_star - 1.0, report.xi + 1.0, n_cells, t_max);
    o.n_snapshots = ((t_max / 0.01).ceil() as usize).max(2);
    o
}

fn closest_birth(tracks: &[Track], x: f64, t: f64) -> Option<(usize, &Track)> {
    tracks
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let d = |tr: &Track| {
                let (bt, bx) = tr.birth();
                (bt - t).abs() + (bx - x).abs()
            };
            d(a.1).total_cmp(&d(b.1))
        })
}

/// Slope at `t0` of a least-squares line through the sampled speeds in `[t0, t0 + window]`.
fn fitted_speed(track: &Track, t0: f64, window: f64) -> f64 {
    let pts: Vec<(f64, f64)> = track
        .points
        .iter()
        .filter(|p| p.t >= t0 && p.t <= t0 + window)
        .map(|p| (p.t, p.speed))
        .collect();
    if pts.len() < 2 {
        return track.initial_speed();
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ms = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ms)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = if var > 0.0 { cov / var } else { 0.0 };
    ms + slope * (t0 - mt)
}

/// Collision time of the `s2` and `s1` tracks from the last detected positions before they merge.
fn collision_time(s2: &Track, s1: &Track) -> Option<f64> {
    let tail: Vec<_> = s2.points.iter().rev().take(5).collect();
    if tail.len() < 2 {
        return None;
    }
    let (a, b) = (tail[tail.len() - 1], tail[0]);
    let v2 = (b.x - a.x) / (b.t - a.t);
    let x1 = s1.position_at(b.t).unwrap_or(s1.points[s1.points.len() - 1].x);
    let gap = b.x - x1;
    if v2 >= 0.0 {
        return None;
    }
    Some(b.t + gap / (-v2))
}

fn godunov_check(profile: &Profile, report: &QuarticReport, n_cells: usize) -> Result<GodunovCheck> {
    let flux = quartic_flux();
    let opts = quartic_diagram_options(report, n_cells, report.t_star + 0.5);
    let (diagram, _) = trace_characteristics(&flux, profile, &opts, &[])?;
    godunov_check_from(&diagram, report, n_cells)
}

pub fn godunov_check_from(diagram: &CharacteristicDiagram, report: &QuarticReport, n_cells: usize) -> Result<GodunovCheck> {
    let fail = |what: &str| Error::ProfileConstructionFailed(format!("Godunov run did not show {what}"));
    let (_, s1) = closest_birth(&diagram.shocks, 0.0, 1.0).ok_or_else(|| fail("the s1 shock"))?;
    let (i2, s2) = closest_birth(&diagram.shocks, 1.0, report.t_xi).ok_or_else(|| fail("the s2 shock"))?;
    if s2.birth().1 < 0.5 || std::ptr::eq(s1, s2) {
        return Err(fail("two separate shocks"));
    }
    let merged = diagram.history.merges.iter().find(|m| m.incoming.0 == i2 || m.incoming.1 == i2);
    let t_star = collision_time(s2, s1).or(merged.map(|m| m.t)).ok_or_else(|| fail("the collision"))?;
    Ok(GodunovCheck {
        n_cells,
        t_star,
        s2_initial_speed: fitted_speed(s2, report.t_xi, 0.5),
        s1_initial_speed: fitted_speed(s1, 1.0, 0.5),
        s2_birth: s2.birth(),
        s1_birth: s1.birth(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_landmarks() {
        let (_, r) = build_quartic_profile(2.0, None).unwrap();
        assert_eq!(r.t_xi, 1.5);
        assert!((r.landmarks.at_two_thirds - 1.0).abs() < 1e-10);
        assert!((r.landmarks.at_minus_two_thirds + 1.0).abs() < 1e-10);
        assert!((r.landmarks.at_one - SQRT3).abs() < 1e-10);
        assert!((r.landmarks.at_xi - 1.0).abs() < 1e-10);
        assert!((r.r1 + 5.0 / 3.0).abs() < 1e-8);
        assert!((r.s3_speed - 10.0 / 81.0).abs() < 1e-8);
        assert!(r.s1_initial_speed.abs() < 1e-10);
        assert!((r.s2_initial_speed + 1.0 / (3.0 * (SQRT3 - 1.0))).abs() < 1e-6);
        assert!((r.x_star + 2.0 * r.t_star / (1.0 + 2.0 * r.t_star)).abs() < 1e-15);
        assert!(!r.post_collision_has_fan);
    }

    #[test]
    fn large_xi_leaves_a_fan() {
        let (_, r) = build_quartic_profile(8.0, None).unwrap();
        assert!(r.t_star > 7.6);
        assert!(r.post_collision_has_fan);
        assert!(flux_prime(r.sigma_star) < 10.0 / 81.0);
    }

    #[test]
    fn godunov_sees_the_collision() {
        let (_, r) = build_quartic_profile(2.0, Some(2000)).unwrap();
        let g = r.godunov.unwrap();
        assert!((g.t_star - r.t_star).abs() < 0.05, "{g:?}");
        assert!((g.s2_initial_speed - r.s2_initial_speed).abs() < 0.01, "{g:?}");
        assert!((g.s1_birth.1).abs() < 0.01 && (g.s1_birth.0 - 1.0).abs() < 0.05);
    }
}
