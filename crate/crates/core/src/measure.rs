//! Finitely supported probability measures on R^d.
//!
//! A measure is a list of atoms with nonnegative weights summing to one. The
//! mean/centered split `m = (m0, x)` used by the reduced conservation law lives
//! here, together with translations, pushforwards and the 1-D quadratic
//! Wasserstein distance.

use std::io::{Read, Write};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

/// Weights must sum to one within this tolerance after construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Weight sums within this distance of one are renormalized; anything further is an error.
pub const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(Error::InvalidMeasure("atoms must have dimension >= 1".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has dimension {}, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {i} is not finite")));
            }
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "weight {i} = {} is negative or not finite",
                weights[i]
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let weights = if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            weights.iter().map(|w| w / total).collect()
        } else {
            weights
        };
        Ok(Self { atoms, weights })
    }

    pub fn dirac(at: Point) -> Result<Self> {
        Self::new(vec![at], vec![1.0])
    }

    /// Empirical measure `(1/N) sum delta_{x_i}`.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Convenience constructor for d = 1.
    pub fn from_scalars(positions: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(
            positions.iter().map(|&x| Point::from_element(1, x)).collect(),
            weights.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn mean(&self) -> Point {
        let mut mean = Point::zeros(self.dim());
        for (a, w) in self.iter() {
            mean.axpy(w, a, 1.0);
        }
        mean
    }

    /// Integral of a scalar function against the measure.
    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(a, w)| w * f(a)).sum()
    }

    /// Split into the mean and the centered measure.
    pub fn decompose(&self) -> MeanDecomposition {
        let mean = self.mean();
        let centered = Self {
            atoms: self.atoms.iter().map(|a| a - &mean).collect(),
            weights: self.weights.clone(),
        };
        MeanDecomposition { mean, centered }
    }

    pub fn translate(&self, b: &Point) -> Result<Self> {
        if b.len() != self.dim() {
            return Err(Error::UnsupportedDimension {
                expected: self.dim(),
                got: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("translation vector is not finite".into()));
        }
        Ok(Self {
            atoms: self.atoms.iter().map(|a| a + b).collect(),
            weights: self.weights.clone(),
        })
    }

    /// Image measure under `map`; weights are carried over unchanged.
    pub fn pushforward<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&Point) -> Point,
    {
        let mut atoms = Vec::with_capacity(self.len());
        for (index, a) in self.atoms.iter().enumerate() {
            let image = map(a);
            if image.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteImage { index });
            }
            atoms.push(image);
        }
        Ok(Self {
            atoms,
            weights: self.weights.clone(),
        })
    }

    /// Fallible pushforward; errors from `map` are tagged with the offending atom.
    pub fn try_pushforward<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&Point) -> Result<Point>,
    {
        let mut atoms = Vec::with_capacity(self.len());
        for (index, a) in self.atoms.iter().enumerate() {
            let image = map(a).map_err(|e| Error::at_atom(index, e))?;
            if image.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteImage { index });
            }
            atoms.push(image);
        }
        Ok(Self {
            atoms,
            weights: self.weights.clone(),
        })
    }

    /// Exact W2 between two measures on the line via the monotone (quantile) coupling.
    pub fn wasserstein2_1d(&self, other: &Self) -> Result<f64> {
        for m in [self, other] {
            if m.dim() != 1 {
                return Err(Error::UnsupportedDimension {
                    expected: 1,
                    got: m.dim(),
                });
            }
        }
        let a = sorted_1d(self);
        let b = sorted_1d(other);
        let (mut i, mut j) = (0usize, 0usize);
        let (mut ra, mut rb) = (a[0].1, b[0].1);
        let mut cost = 0.0;
        while i < a.len() && j < b.len() {
            let mass = ra.min(rb);
            let d = a[i].0 - b[j].0;
            cost += mass * d * d;
            ra -= mass;
            rb -= mass;
            // Floating residue below this threshold is exhausted mass.
            if ra <= 1e-15 {
                i += 1;
                if i < a.len() {
                    ra = a[i].1;
                }
            }
            if rb <= 1e-15 {
                j += 1;
                if j < b.len() {
                    rb = b[j].1;
                }
            }
        }
        Ok(cost.max(0.0).sqrt())
    }

    /// Random measure with `n_atoms` atoms drawn uniformly from `[-spread, spread]^dim`
    /// and random positive weights.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_atoms: usize, dim: usize, spread: f64) -> Self {
        let atoms: Vec<Point> = (0..n_atoms)
            .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-spread..=spread)))
            .collect();
        let raw: Vec<f64> = (0..n_atoms).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            atoms,
            weights: raw.iter().map(|w| w / total).collect(),
        }
    }

    /// Reads the CSV measure format: header `x_1,...,x_d,weight`, one atom per row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let n_cols = headers.len();
        if n_cols < 2 || headers.get(n_cols - 1).map(str::trim) != Some("weight") {
            return Err(Error::InvalidMeasure(
                "header must be x_1,...,x_d,weight".into(),
            ));
        }
        for (k, h) in headers.iter().take(n_cols - 1).enumerate() {
            if h.trim() != format!("x_{}", k + 1) {
                return Err(Error::InvalidMeasure(format!(
                    "column {} must be named x_{}, found {h:?}",
                    k + 1,
                    k + 1
                )));
            }
        }
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let vals: std::result::Result<Vec<f64>, _> =
                row.iter().map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::InvalidMeasure(format!("bad number: {e}")))?;
            if vals.len() != n_cols {
                return Err(Error::InvalidMeasure("ragged row".into()));
            }
            atoms.push(Point::from_column_slice(&vals[..n_cols - 1]));
            weights.push(vals[n_cols - 1]);
        }
        Self::new(atoms, weights)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|k| format!("x_{k}")).collect();
        header.push("weight".into());
        wtr.write_record(&header)?;
        for (a, w) in self.iter() {
            let mut rec: Vec<String> = a.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{w:?}"));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn sorted_1d(m: &EmpiricalMeasure) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = m.iter().map(|(a, w)| (a[0], w)).filter(|p| p.1 > 0.0).collect();
    v.sort_by(|p, q| p.0.total_cmp(&q.0));
    v
}

/// The pair `(m0, x)`: mean `x` and centered measure `m0 = (tau_{-x})# m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDecomposition {
    pub mean: Point,
    pub centered: EmpiricalMeasure,
}

impl MeanDecomposition {
    /// `m = (tau_x)# m0`.
    pub fn recompose(&self) -> EmpiricalMeasure {
        EmpiricalMeasure {
            atoms: self.centered.atoms.iter().map(|a| a + &self.mean).collect(),
            weights: self.centered.weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p1(x: f64) -> Point {
        Point::from_element(1, x)
    }

    #[test]
    fn dirac_decomposes_to_itself() {
        let m = EmpiricalMeasure::dirac(p1(0.0)).unwrap();
        let d = m.decompose();
        assert_eq!(d.mean[0], 0.0);
        assert_eq!(d.centered, m);
    }

    #[test]
    fn two_point_decomposition() {
        let m = EmpiricalMeasure::from_scalars(&[0.0, 2.0], &[0.5, 0.5]).unwrap();
        let d = m.decompose();
        assert_eq!(d.mean[0], 1.0);
        assert_eq!(d.centered.atoms()[0][0], -1.0);
        assert_eq!(d.centered.atoms()[1][0], 1.0);
        assert_eq!(d.centered.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn recompose_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = EmpiricalMeasure::random(&mut rng, 5, 2, 3.0);
        let back = m.decompose().recompose();
        for (a, b) in m.atoms().iter().zip(back.atoms()) {
            assert!((a - b).amax() <= 1e-14 * (1.0 + a.amax()));
        }
        assert_eq!(m.weights(), back.weights());
        let c = m.decompose();
        assert!(c.centered.mean().amax() <= 1e-10 * (1.0 + c.mean.amax()));
    }

    #[test]
    fn translation_properties() {
        let delta = EmpiricalMeasure::dirac(p1(0.0)).unwrap();
        let b = p1(2.5);
        assert_eq!(delta.translate(&b).unwrap(), EmpiricalMeasure::dirac(b.clone()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = EmpiricalMeasure::random(&mut rng, 6, 1, 2.0);
        assert_eq!(m.translate(&p1(0.0)).unwrap(), m);
        let shifted = m.translate(&b).unwrap();
        assert!((shifted.mean()[0] - (m.mean()[0] + 2.5)).abs() < 1e-14);
    }

    #[test]
    fn dyadic_translation_keeps_centered_part_bit_exact() {
        let m = EmpiricalMeasure::from_scalars(&[-0.5, 0.25, 1.0, 3.0], &[0.25, 0.25, 0.25, 0.25]).unwrap();
        let shifted = m.translate(&p1(4.0)).unwrap();
        assert_eq!(m.decompose().centered, shifted.decompose().centered);
    }

    #[test]
    fn pushforward_affine_and_identity() {
        let m = EmpiricalMeasure::from_scalars(&[0.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!(m.pushforward(|x| x.clone()).unwrap(), m);
        let c = 0.75;
        let img = m.pushforward(|x| x.add_scalar(-c)).unwrap();
        assert_eq!(img.atoms()[0][0], -c);
        assert_eq!(img.atoms()[1][0], 2.0 - c);
    }

    #[test]
    fn pushforward_rejects_non_finite() {
        let m = EmpiricalMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let err = m.pushforward(|x| x.map(|v| 1.0 / v)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteImage { index: 0 }));
    }

    #[test]
    fn w2_examples() {
        let m = EmpiricalMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(m.wasserstein2_1d(&m).unwrap(), 0.0);
        let d0 = EmpiricalMeasure::dirac(p1(0.0)).unwrap();
        let d1 = EmpiricalMeasure::dirac(p1(1.0)).unwrap();
        assert_eq!(d0.wasserstein2_1d(&d1).unwrap(), 1.0);
        // Brute force over the two couplings of two equal-mass atoms.
        let other = EmpiricalMeasure::from_scalars(&[0.0, 3.0], &[0.5, 0.5]).unwrap();
        let identity: f64 = 0.5 * 0.0f64.powi(2) + 0.5 * 2.0f64.powi(2);
        let swapped: f64 = 0.5 * 3.0f64.powi(2) + 0.5 * 1.0f64.powi(2);
        let expected = identity.min(swapped).sqrt();
        assert!((m.wasserstein2_1d(&other).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn w2_rejects_higher_dimensions() {
        let m = EmpiricalMeasure::dirac(Point::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(matches!(
            m.wasserstein2_1d(&m),
            Err(Error::UnsupportedDimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn construction_renormalizes_or_rejects() {
        let m = EmpiricalMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5 + 5e-10]).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
        assert!(EmpiricalMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::from_scalars(&[0.0, 1.0], &[1.5, -0.5]).is_err());
        assert!(EmpiricalMeasure::from_scalars(&[], &[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = EmpiricalMeasure::random(&mut rng, 4, 2, 1.0);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,weight\n"));
        let back = EmpiricalMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_requires_header() {
        let bad = "a,b\n1,1\n";
        assert!(EmpiricalMeasure::read_csv(bad.as_bytes()).is_err());
    }
}
