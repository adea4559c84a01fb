//! Scalar root finding, minimization and quadrature helpers shared by the solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bracket returned by [`bisect`]: `f(lo)` and `f(hi)` have opposite signs (or one is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection on a sign change of `f` in `[lo, hi]`, shrinking until the width is at most `tol`.
///
/// Returns `None` when the endpoints do not bracket a sign change.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Option<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(Bracket { lo, hi: lo, f_lo, f_hi: f_lo });
    }
    if f_hi == 0.0 {
        return Some(Bracket { lo: hi, hi, f_lo: f_hi, f_hi });
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(Bracket { lo: mid, hi: mid, f_lo: 0.0, f_hi: 0.0 });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Some(Bracket { lo, hi, f_lo, f_hi })
}

/// Safeguarded secant polish inside a sign-change bracket.
///
/// Steps that leave the bracket fall back to bisection, so the result always stays in `[lo, hi]`.
pub fn polish_in_bracket<F>(mut f: F, bracket: Bracket, max_iter: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if lo == hi {
        return lo;
    }
    let mut best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    let mut best_f = f_lo.abs().min(f_hi.abs());
    for _ in 0..max_iter {
        let denom = f_hi - f_lo;
        let mut x = if denom != 0.0 {
            hi - f_hi * (hi - lo) / denom
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x);
        if fx.abs() < best_f {
            best = x;
            best_f = fx.abs();
        }
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    best
}

/// Root of `f` in `[lo, hi]` to full double precision, assuming a sign change.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let bracket = bisect(&mut f, lo, hi, 1e-10 * (1.0 + lo.abs().max(hi.abs())), 200)?;
    Some(polish_in_bracket(f, bracket, 100))
}

/// Solve `g(x) = target` for a monotone `g` on `[lo, hi]`.
pub fn invert_monotone<G>(g: G, target: f64, lo: f64, hi: f64) -> Option<f64>
where
    G: Fn(f64) -> f64,
{
    find_root(|x| g(x) - target, lo, hi)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmin, min)`.
pub fn golden_section_min<F>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let (fa, fb) = (f(a), f(b));
    let mut best = (c, fc);
    for cand in [(d, fd), (a, fa), (b, fb)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Global minimization on `[a, b]`: uniform scan, then golden-section refinement
/// around every discrete local minimum. Returns the best refined candidate.
pub fn scan_minimize<F>(mut f: F, a: f64, b: f64, n_scan: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let n = n_scan.max(3);
    let step = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { b } else { a + step * i as f64 }).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let right = if i + 1 == n { f64::INFINITY } else { vals[i + 1] };
            vals[i] <= left && vals[i] <= right
        })
        .collect();
    minima.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    // Plateaus produce runs of "minima"; the best few are enough.
    minima.truncate(8);
    let mut best = (f64::NAN, f64::INFINITY);
    for i in minima {
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(n - 1)];
        let cand = golden_section_min(&mut f, lo, hi, tol);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    sign * simpson_step(&f, lo, hi, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Central difference of `f` at `x` with step `h`.
pub fn central_difference<F>(f: F, x: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Uniform grid with `n` points spanning `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { b } else { a + step * i as f64 })
                .collect()
        }
    }
}
