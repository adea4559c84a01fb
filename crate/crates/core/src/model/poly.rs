use serde::{Deserialize, Serialize};

use crate::numerics;

/// Real polynomial with coefficients in ascending order: `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.coeffs.len() - 1
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs == [0.0, 1.0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(0.0);
        c.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| a / (k + 1) as f64),
        );
        Poly::new(c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| acc.mul(inner).add(&Poly::constant(c)))
    }

    /// All real roots in `[lo, hi]`, ascending, including roots of even multiplicity.
    ///
    /// Works recursively: between consecutive critical points the polynomial is
    /// monotone, so each piece holds at most one root.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.is_zero() || lo > hi {
            return Vec::new();
        }
        if self.degree() == 0 {
            return Vec::new();
        }
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let zero_tol = 1e-12 * scale.max(1.0);
        let mut knots = vec![lo];
        knots.extend(self.derivative().roots_in(lo, hi));
        knots.push(hi);
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if roots.last().is_none_or(|&p| (r - p).abs() > 1e-9 * (1.0 + r.abs())) {
                roots.push(r);
            }
        };
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa.abs() <= zero_tol {
                push(a, &mut roots);
            }
            if fa.abs() > zero_tol && fb.abs() > zero_tol && fa.signum() != fb.signum() {
                if let Some(r) = numerics::find_root(|x| self.eval(x), a, b) {
                    push(r, &mut roots);
                }
            }
        }
        if self.eval(hi).abs() <= zero_tol {
            push(hi, &mut roots);
        }
        roots
    }

    /// Minimum and maximum over `[lo, hi]`, using endpoints and critical points.
    pub fn extrema_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut min = self.eval(lo).min(self.eval(hi));
        let mut max = self.eval(lo).max(self.eval(hi));
        for r in self.derivative().roots_in(lo, hi) {
            let v = self.eval(r);
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_calculus() {
        let p = Poly::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 6.0]);
        let a = p.antiderivative();
        assert_eq!(a.eval(0.0), 0.0);
        assert_eq!(a.derivative(), p);
    }

    #[test]
    fn flux_primitives() {
        let cubic = Poly::new(vec![0.0, 0.0, 1.0]).antiderivative();
        assert!((cubic.eval(1.5) - 1.5f64.powi(3) / 3.0).abs() < 1e-15);
        let quartic = Poly::new(vec![0.0, -1.0, 0.0, 1.0 / 3.0]).antiderivative();
        let x: f64 = 1.3;
        assert!((quartic.eval(x) - (x.powi(4) / 12.0 - x * x / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn compose_matches_pointwise() {
        let p = Poly::new(vec![0.5, 0.0, 1.0]);
        let q = Poly::new(vec![1.0, 2.0]);
        let pq = p.compose(&q);
        for x in [-1.0, 0.0, 0.7, 2.0] {
            assert!((pq.eval(x) - p.eval(q.eval(x))).abs() < 1e-13);
        }
    }

    #[test]
    fn roots_with_multiplicity() {
        // (r + 1)^2 (2r - 1)
        let p = Poly::new(vec![1.0, 1.0]).mul(&Poly::new(vec![1.0, 1.0])).mul(&Poly::new(vec![-1.0, 2.0]));
        let r = p.roots_in(-3.0, 3.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-7);
        assert!((r[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tangency_root_of_quartic_envelope() {
        // 3r^4 - 4r^3 - 6r^2 + 12r - 5 = (r - 1)^3 (3r + 5)
        let p = Poly::new(vec![-5.0, 12.0, -6.0, -4.0, 3.0]);
        let r = p.roots_in(-3f64.sqrt(), -1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] + 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn extrema_use_critical_points() {
        let p = Poly::new(vec![0.0, -1.0, 0.0, 1.0 / 3.0]);
        let (lo, hi) = p.extrema_on(-2.0, 2.0);
        assert!((lo + 2.0 / 3.0).abs() < 1e-15);
        assert!((hi - 2.0 / 3.0).abs() < 1e-15);
    }
}
