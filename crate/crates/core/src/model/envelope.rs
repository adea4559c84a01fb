//! Lower convex (and upper concave) envelopes of a scalar function on an interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::find_root;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopePiece {
    /// The envelope coincides with the function.
    Follow { lo: f64, hi: f64 },
    /// The envelope is the chord between the endpoints.
    Bridge { lo: f64, hi: f64 },
}

impl EnvelopePiece {
    pub fn lo(&self) -> f64 {
        match *self {
            EnvelopePiece::Follow { lo, .. } | EnvelopePiece::Bridge { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            EnvelopePiece::Follow { hi, .. } | EnvelopePiece::Bridge { hi, .. } => hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lo: f64,
    pub hi: f64,
    pub upper: bool,
    /// Hull vertices over the samples, `(u, F(u))`.
    pub vertices: Vec<(f64, f64)>,
    /// Pieces ordered by increasing `u`, with refined tangency points.
    pub pieces: Vec<EnvelopePiece>,
}

impl Envelope {
    /// Envelope value at `u`, using the refined pieces.
    pub fn eval<F: Fn(f64) -> f64>(&self, f: F, u: f64) -> f64 {
        for p in &self.pieces {
            if u >= p.lo() && u <= p.hi() {
                return match *p {
                    EnvelopePiece::Follow { .. } => f(u),
                    EnvelopePiece::Bridge { lo, hi } => {
                        let w = (u - lo) / (hi - lo);
                        (1.0 - w) * f(lo) + w * f(hi)
                    }
                };
            }
        }
        f(u)
    }

    /// Piecewise-linear interpolation of the sampled hull.
    pub fn eval_hull(&self, u: f64) -> f64 {
        let v = &self.vertices;
        let k = v.partition_point(|p| p.0 <= u).clamp(1, v.len() - 1);
        let (a, b) = (v[k - 1], v[k]);
        a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
    }

    pub fn bridges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pieces.iter().filter_map(|p| match *p {
            EnvelopePiece::Bridge { lo, hi } => Some((lo, hi)),
            _ => None,
        })
    }
}

/// Lower convex envelope of `f` on `[a, b]` from `n_samples` uniform samples.
///
/// Hull vertices come from a monotone chain over the samples. Chord endpoints that
/// are not interval endpoints are tangency points and get refined with `df`.
pub fn convex_envelope<F, D>(f: F, df: D, a: f64, b: f64, n_samples: usize) -> Result<Envelope>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    envelope(&f, &df, a, b, n_samples, false)
}

/// Upper concave envelope of `f` on `[a, b]`.
pub fn concave_envelope<F, D>(f: F, df: D, a: f64, b: f64, n_samples: usize) -> Result<Envelope>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    envelope(&f, &df, a, b, n_samples, true)
}

fn envelope(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    n_samples: usize,
    upper: bool,
) -> Result<Envelope> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::EmptyInterval { lo: a, hi: b });
    }
    if n_samples < 3 {
        return Err(Error::BadInput(format!("envelope needs at least 3 samples, got {n_samples}")));
    }
    let sign = if upper { -1.0 } else { 1.0 };
    let g = |u: f64| sign * f(u);
    let dg = |u: f64| sign * df(u);
    let h = (b - a) / (n_samples - 1) as f64;
    let xs: Vec<f64> = (0..n_samples)
        .map(|i| if i + 1 == n_samples { b } else { a + h * i as f64 })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut hull: Vec<usize> = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        while hull.len() >= 2 {
            let (j, k) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[k] - xs[j]) * (ys[i] - ys[j]) - (ys[k] - ys[j]) * (xs[i] - xs[j]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    // Group hull edges into runs of adjacent samples (follow) and longer chords (bridge).
    let mut raw: Vec<(bool, usize, usize)> = Vec::new();
    for w in hull.windows(2) {
        let bridge = w[1] - w[0] > 1;
        match raw.last_mut() {
            Some((false, _, hi)) if !bridge => *hi = w[1],
            _ => raw.push((bridge, w[0], w[1])),
        }
    }

    let mut pieces: Vec<EnvelopePiece> = Vec::new();
    for &(bridge, i, j) in &raw {
        if !bridge {
            pieces.push(EnvelopePiece::Follow { lo: xs[i], hi: xs[j] });
            continue;
        }
        let left_tangent = i != 0;
        let right_tangent = j != n_samples - 1;
        let (mut u, mut w) = (xs[i], xs[j]);
        for _ in 0..50 {
            let (u0, w0) = (u, w);
            if left_tangent {
                u = refine_tangent(&g, &dg, u, w, h, a, b);
            }
            if right_tangent {
                w = refine_tangent(&g, &dg, w, u, h, a, b);
            }
            if (u - u0).abs() <= 1e-15 * (1.0 + u.abs()) && (w - w0).abs() <= 1e-15 * (1.0 + w.abs()) {
                break;
            }
        }
        // Neighbouring follow pieces end at the refined tangency points.
        if let Some(EnvelopePiece::Follow { hi, .. }) = pieces.last_mut() {
            *hi = u;
        }
        pieces.push(EnvelopePiece::Bridge { lo: u, hi: w });
    }
    // Make every follow piece start where the previous bridge ended, and drop slivers.
    for k in 1..pieces.len() {
        if let (EnvelopePiece::Bridge { hi, .. }, EnvelopePiece::Follow { lo, .. }) = (pieces[k - 1], &mut pieces[k]) {
            *lo = hi;
        }
    }
    pieces.retain(|p| match *p {
        EnvelopePiece::Follow { lo, hi } => hi > lo,
        EnvelopePiece::Bridge { .. } => true,
    });

    let vertices = hull.iter().map(|&i| (xs[i], f(xs[i]))).collect();
    Ok(Envelope { lo: a, hi: b, upper, vertices, pieces })
}

/// Solves `g'(p) (q - p) = g(q) - g(p)` for the tangency point `p` near its sampled guess.
fn refine_tangent(
    g: &dyn Fn(f64) -> f64,
    dg: &dyn Fn(f64) -> f64,
    p: f64,
    q: f64,
    h: f64,
    a: f64,
    b: f64,
) -> f64 {
    let resid = |x: f64| dg(x) * (q - x) - (g(q) - g(x));
    let lo = (p - 2.0 * h).max(a);
    let hi = (p + 2.0 * h).min(b);
    // Keep the bracket on the same side of q as the guess.
    let (lo, hi) = if q > p { (lo, hi.min(q - 1e-3 * h)) } else { (lo.max(q + 1e-3 * h), hi) };
    if lo >= hi {
        return p;
    }
    find_root(resid, lo, hi).unwrap_or(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(r: f64) -> f64 {
        r.powi(4) / 12.0 - r * r / 2.0
    }
    fn dquartic(r: f64) -> f64 {
        r.powi(3) / 3.0 - r
    }

    #[test]
    fn convex_function_is_its_own_envelope() {
        let env = convex_envelope(|u| u * u, |u| 2.0 * u, -1.0, 2.0, 301).unwrap();
        assert_eq!(env.pieces, vec![EnvelopePiece::Follow { lo: -1.0, hi: 2.0 }]);
        assert_eq!(env.vertices.len(), 301);
    }

    #[test]
    fn quartic_tangency_at_minus_five_thirds() {
        let env = convex_envelope(quartic, dquartic, -3f64.sqrt(), 1.0, 4001).unwrap();
        let bridges: Vec<_> = env.bridges().collect();
        assert_eq!(bridges.len(), 1);
        assert!((bridges[0].0 + 5.0 / 3.0).abs() < 1e-8);
        assert_eq!(bridges[0].1, 1.0);
    }

    #[test]
    fn cubic_lower_envelope_tangency_at_half() {
        let env = convex_envelope(|r: f64| r.powi(3) / 3.0, |r| r * r, -1.0, 1.0, 4001).unwrap();
        let b: Vec<_> = env.bridges().collect();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].0, -1.0);
        assert!((b[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn upper_envelope_mirrors_lower() {
        let env = concave_envelope(|r: f64| r.powi(3) / 3.0, |r| r * r, -1.0, 1.0, 4001).unwrap();
        let b: Vec<_> = env.bridges().collect();
        assert_eq!(b.len(), 1);
        assert!((b[0].0 + 0.5).abs() < 1e-12);
        assert_eq!(b[0].1, 1.0);
        assert!(env.upper);
    }

    #[test]
    fn envelope_lies_below_and_is_idempotent() {
        let env = convex_envelope(quartic, dquartic, -2.0, 2.0, 2001).unwrap();
        for &(u, v) in &env.vertices {
            assert!(v <= quartic(u) + 1e-15);
        }
        for i in 0..=200 {
            let u = -2.0 + 0.02 * i as f64;
            assert!(env.eval(quartic, u) <= quartic(u) + 1e-12);
        }
        let again = convex_envelope(|u| env.eval_hull(u), |u| env.eval_hull(u), -2.0, 2.0, 2001).unwrap();
        for i in 0..2001 {
            let u = -2.0 + 4.0 * i as f64 / 2000.0;
            assert!((again.eval_hull(u) - env.eval_hull(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_interval() {
        assert!(matches!(
            convex_envelope(|u| u, |_| 1.0, 1.0, 1.0, 10),
            Err(Error::EmptyInterval { .. })
        ));
    }
}
