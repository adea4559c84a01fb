//! Shock-front detection in cell-averaged fields and linking of fronts across snapshots.

use serde::{Deserialize, Serialize};

use super::godunov::EntropyField;
use super::riemann::{riemann_fan, rh_speed, RiemannFan};
use crate::error::{Error, Result};
use crate::model::ReducedFlux;

/// A jump counts as a front when it exceeds this multiple of `max(h, nearby jumps)`.
pub const JUMP_FACTOR: f64 = 5.0;
/// Tracks shorter than this many snapshots are discarded.
pub const MIN_PERSISTENCE: usize = 3;
/// Cells between a front and the sampled adjacent states.
const SAMPLE_OFFSET: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub x: f64,
    pub left: f64,
    pub right: f64,
    /// `(F(right) - F(left)) / (right - left)`.
    pub speed: f64,
    /// First and last flagged interface.
    pub first: usize,
    pub last: usize,
}

/// Compressive fronts of one snapshot, ordered by position.
pub fn detect_fronts(flux: &ReducedFlux, u: &[f64], h: f64) -> Vec<Front> {
    let n = u.len();
    if n < 3 {
        return Vec::new();
    }
    let jumps: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let m = jumps.len();
    let flagged: Vec<bool> = (0..m)
        .map(|i| {
            // A second front close by only spoils one side, smooth steep data spoils both.
            let side = |a: Option<usize>, b: Option<usize>| {
                [a, b].into_iter().flatten().filter(|&j| j < m).map(|j| jumps[j]).fold(0.0, f64::max)
            };
            let near = side(i.checked_sub(4), i.checked_sub(3)).min(side(Some(i + 3), Some(i + 4)));
            jumps[i] > JUMP_FACTOR * h.max(near)
        })
        .collect();

    // Group flagged interfaces, allowing a single unflagged gap.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for i in (0..m).filter(|&i| flagged[i]) {
        match groups.last_mut() {
            Some((_, last)) if i <= *last + 2 => *last = i,
            _ => groups.push((i, i)),
        }
    }

    let mut fronts = Vec::new();
    for (first, last) in groups {
        let li = first.saturating_sub(SAMPLE_OFFSET);
        let ri = (last + 1 + SAMPLE_OFFSET).min(n - 1);
        let (left, right) = (u[li], u[ri]);
        let amplitude = (right - left).abs();
        if amplitude <= JUMP_FACTOR * h {
            continue;
        }
        let speed = rh_speed(flux, left, right);
        // Characteristics must run into the front (with slack for smeared states).
        let (cl, cr) = (flux.fbar(left), flux.fbar(right));
        let slack = 0.25 * (cl - cr).abs() + 1e-12;
        if cl - speed < -slack || speed - cr < -slack || cl <= cr {
            continue;
        }
        let weight: f64 = jumps[first..=last].iter().sum();
        let x_rel: f64 = (first..=last).map(|i| jumps[i] * (i as f64 + 1.0)).sum::<f64>() / weight;
        fronts.push(Front { x: x_rel * h, left, right, speed, first, last });
    }
    fronts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    /// Detected position.
    pub x: f64,
    pub left: f64,
    pub right: f64,
    pub speed: f64,
}

/// Two shocks that met; the outgoing Riemann problem is centred at `(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub t: f64,
    pub x: f64,
    pub left: f64,
    pub right: f64,
    pub incoming: (usize, usize),
    pub outgoing: Option<usize>,
    pub fan: RiemannFan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub points: Vec<TrackPoint>,
    /// Positions from integrating the Rankine-Hugoniot speed of the sampled states.
    pub integrated: Vec<(f64, f64)>,
    /// `max |integrated - detected|`.
    pub rh_residual: f64,
    pub merged_into: Option<usize>,
}

impl Track {
    pub fn birth(&self) -> (f64, f64) {
        (self.points[0].t, self.points[0].x)
    }

    pub fn initial_speed(&self) -> f64 {
        self.points[0].speed
    }

    /// Detected position at `t` by linear interpolation, if the track is alive then.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let p = &self.points;
        if t < p[0].t || t > p[p.len() - 1].t {
            return None;
        }
        let k = p.partition_point(|q| q.t <= t).clamp(1, p.len() - 1);
        let (a, b) = (&p[k - 1], &p[k]);
        if b.t == a.t {
            return Some(a.x);
        }
        Some(a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontHistory {
    pub tracks: Vec<Track>,
    pub merges: Vec<Merge>,
}

struct Active {
    id: usize,
    last: TrackPoint,
}

/// Links the fronts of consecutive snapshots into tracks and records merges.
pub fn track_fronts(flux: &ReducedFlux, field: &EntropyField) -> Result<FrontHistory> {
    let grid = field.grid;
    let h = grid.h();
    let mut tracks: Vec<Vec<TrackPoint>> = Vec::new();
    let mut merged_into: Vec<Option<usize>> = Vec::new();
    let mut merges: Vec<Merge> = Vec::new();
    let mut active: Vec<Active> = Vec::new();

    for (k, &t) in field.times.iter().enumerate() {
        let fronts: Vec<Front> = detect_fronts(flux, &field.values[k], h)
            .into_iter()
            .map(|mut f| {
                f.x += grid.x_min;
                f
            })
            .collect();
        let dt = if k == 0 { 0.0 } else { t - field.times[k - 1] };
        let to_point = |f: &Front| TrackPoint { t, x: f.x, left: f.left, right: f.right, speed: f.speed };

        // Each active track claims the nearest front around its predicted position.
        let mut claims: Vec<Vec<usize>> = vec![Vec::new(); fronts.len()];
        for (a_idx, a) in active.iter().enumerate() {
            let pred = a.last.x + a.last.speed * dt;
            let tol = 4.0 * h + 0.5 * a.last.speed.abs() * dt + 0.05 * dt;
            let best = fronts
                .iter()
                .enumerate()
                .map(|(j, f)| (j, (f.x - pred).abs()))
                .filter(|&(_, d)| d <= tol)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            // A track whose front disappeared simply ends.
            if let Some((j, _)) = best {
                claims[j].push(a_idx);
            }
        }
        let mut next: Vec<Active> = Vec::new();
        for (j, f) in fronts.iter().enumerate() {
            match claims[j].len() {
                0 => {
                    tracks.push(vec![to_point(f)]);
                    merged_into.push(None);
                    next.push(Active { id: tracks.len() - 1, last: to_point(f) });
                }
                1 => {
                    let id = active[claims[j][0]].id;
                    tracks[id].push(to_point(f));
                    next.push(Active { id, last: to_point(f) });
                }
                _ => {
                    let mut ids: Vec<&Active> = claims[j].iter().map(|&a| &active[a]).collect();
                    ids.sort_by(|a, b| a.last.x.total_cmp(&b.last.x));
                    let (l, r) = (ids[0], ids[ids.len() - 1]);
                    if l.last.speed < r.last.speed && (r.last.x - l.last.x) > 0.0 {
                        // Diverging fronts squeezed into one group: the grid cannot separate them.
                        return Err(Error::RefineGrid { t, x: f.x });
                    }
                    tracks.push(vec![to_point(f)]);
                    merged_into.push(None);
                    let new_id = tracks.len() - 1;
                    for a in &ids {
                        merged_into[a.id] = Some(new_id);
                    }
                    let (mt, mx) = collision_point(&tracks[l.id], &tracks[r.id], t - dt, t).unwrap_or((t, f.x));
                    merges.push(Merge {
                        t: mt,
                        x: mx,
                        left: l.last.left,
                        right: r.last.right,
                        incoming: (l.id, r.id),
                        outgoing: Some(new_id),
                        fan: riemann_fan(flux, l.last.left, r.last.right)?,
                    });
                    next.push(Active { id: new_id, last: to_point(f) });
                }
            }
        }
        active = next;
    }

    // Drop short-lived tracks and renumber.
    let keep: Vec<bool> = tracks.iter().map(|t| t.len() >= MIN_PERSISTENCE).collect();
    let mut new_index = vec![None; tracks.len()];
    let mut count = 0;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            new_index[i] = Some(count);
            count += 1;
        }
    }
    let out: Vec<Track> = tracks
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(i, points)| {
            let integrated = integrate_rh(&points);
            let rh_residual = points
                .iter()
                .zip(&integrated)
                .map(|(p, q)| (p.x - q.1).abs())
                .fold(0.0, f64::max);
            Track { points, integrated, rh_residual, merged_into: merged_into[i].and_then(|m| new_index[m]) }
        })
        .collect();
    let merges = merges
        .into_iter()
        .filter_map(|mut m| {
            let a = new_index[m.incoming.0]?;
            let b = new_index[m.incoming.1]?;
            m.incoming = (a, b);
            m.outgoing = m.outgoing.and_then(|o| new_index[o]);
            Some(m)
        })
        .collect();
    Ok(FrontHistory { tracks: out, merges })
}

/// Where the straight continuations of two tracks meet, if that happens in `[t_lo, t_hi]`.
fn collision_point(a: &[TrackPoint], b: &[TrackPoint], t_lo: f64, t_hi: f64) -> Option<(f64, f64)> {
    let line = |p: &[TrackPoint]| {
        let (q, r) = (&p[p.len().checked_sub(2)?], &p[p.len() - 1]);
        (r.t > q.t).then(|| (r.t, r.x, (r.x - q.x) / (r.t - q.t)))
    };
    let (ta, xa, va) = line(a)?;
    let (tb, xb, vb) = line(b)?;
    if va == vb {
        return None;
    }
    // xa + va (t - ta) = xb + vb (t - tb)
    let t = (xb - xa + va * ta - vb * tb) / (va - vb);
    (t >= t_lo && t <= t_hi).then_some((t, xa + va * (t - ta)))
}

/// Trapezoidal integration of the sampled Rankine-Hugoniot speeds from the first detection.
fn integrate_rh(points: &[TrackPoint]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(points.len());
    let mut x = points[0].x;
    out.push((points[0].t, x));
    for w in points.windows(2) {
        x += 0.5 * (w[0].speed + w[1].speed) * (w[1].t - w[0].t);
        out.push((w[1].t, x));
    }
    out
}
