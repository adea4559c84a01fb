use serde::{Deserialize, Serialize};

use super::functions::{dot, Psi, ScalarFn};
use super::profile::{Profile, ProfileSpec};
use crate::error::Result;
use crate::measure::{EmpiricalMeasure, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SigmaSpec {
    Moment { psi: Psi },
    Composed { outer: ScalarFn, psi: Psi },
    MeanProfile { profile: ProfileSpec },
}

/// The scalar functional `sigma0` of the terminal distribution.
#[derive(Debug, Clone)]
pub enum SigmaFunctional {
    /// `int psi dm`
    Moment { psi: Psi },
    /// `G(int psi dm)`
    Composed { outer: ScalarFn, psi: Psi },
    /// `s0(mean . zeta)`
    MeanProfile { profile: Profile, zeta: Point },
}

impl SigmaFunctional {
    pub fn from_spec(spec: &SigmaSpec, zeta: Option<&[f64]>) -> Result<Self> {
        Ok(match spec {
            SigmaSpec::Moment { psi } => SigmaFunctional::Moment { psi: psi.clone() },
            SigmaSpec::Composed { outer, psi } => SigmaFunctional::Composed { outer: outer.clone(), psi: psi.clone() },
            SigmaSpec::MeanProfile { profile } => {
                let zeta = zeta.ok_or_else(|| {
                    crate::Error::InvalidModel("mean_profile sigma0 needs a zeta direction".into())
                })?;
                SigmaFunctional::MeanProfile {
                    profile: Profile::from_spec(profile)?,
                    zeta: Point::from_column_slice(zeta),
                }
            }
        })
    }

    pub fn spec(&self) -> SigmaSpec {
        match self {
            SigmaFunctional::Moment { psi } => SigmaSpec::Moment { psi: psi.clone() },
            SigmaFunctional::Composed { outer, psi } => SigmaSpec::Composed { outer: outer.clone(), psi: psi.clone() },
            SigmaFunctional::MeanProfile { profile, .. } => SigmaSpec::MeanProfile { profile: profile.spec() },
        }
    }

    pub fn evaluate(&self, m: &EmpiricalMeasure) -> f64 {
        match self {
            SigmaFunctional::Moment { psi } => m.integrate(|y| psi.value(y)),
            SigmaFunctional::Composed { outer, psi } => outer.value(m.integrate(|y| psi.value(y))),
            SigmaFunctional::MeanProfile { profile, zeta } => {
                profile.value(dot(zeta.as_slice(), &m.mean()))
            }
        }
    }

    /// `D_m sigma0(m, y)`, the Lions derivative at `y`.
    pub fn lions_derivative(&self, m: &EmpiricalMeasure, y: &Point) -> Point {
        match self {
            SigmaFunctional::Moment { psi } => psi.gradient(y),
            SigmaFunctional::Composed { outer, psi } => {
                psi.gradient(y) * outer.d1(m.integrate(|z| psi.value(z)))
            }
            SigmaFunctional::MeanProfile { profile, zeta } => {
                zeta * profile.derivative(dot(zeta.as_slice(), &m.mean()))
            }
        }
    }

    pub fn is_differentiable(&self) -> bool {
        match self {
            SigmaFunctional::MeanProfile { profile, .. } => profile.is_continuous(),
            _ => true,
        }
    }

    pub fn profile(&self) -> Option<&Profile> {
        match self {
            SigmaFunctional::MeanProfile { profile, .. } => Some(profile),
            _ => None,
        }
    }

    /// Range of `sigma0` when it can be bounded a priori.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self {
            SigmaFunctional::Moment { psi } => psi.bounded_range(),
            SigmaFunctional::Composed { outer, psi } => {
                let (a, b) = psi.bounded_range()?;
                Some(outer.image(a, b))
            }
            SigmaFunctional::MeanProfile { profile, .. } => profile.range(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_is_permutation_invariant_and_measure_only() {
        let s = SigmaFunctional::Moment { psi: Psi::ArctanNormSq };
        let a = EmpiricalMeasure::from_scalars(&[0.5, -1.0, 2.0], &[0.2, 0.3, 0.5]).unwrap();
        let b = EmpiricalMeasure::from_scalars(&[2.0, 0.5, -1.0], &[0.5, 0.2, 0.3]).unwrap();
        let c = EmpiricalMeasure::from_scalars(&[0.5, -1.0, 2.0, 2.0], &[0.2, 0.3, 0.25, 0.25]).unwrap();
        let (va, vb, vc) = (s.evaluate(&a), s.evaluate(&b), s.evaluate(&c));
        assert!((va - vb).abs() < 1e-15);
        assert!((va - vc).abs() < 1e-15);
    }

    #[test]
    fn composed_range_follows_outer() {
        let s = SigmaFunctional::Composed {
            outer: ScalarFn::Exp { a: 1.0, b: 1.0, c: 1.0 },
            psi: Psi::ArctanNormSq,
        };
        let (lo, hi) = s.range().unwrap();
        assert!((lo - 2.0).abs() < 1e-15);
        assert!((hi - (1.0 + std::f64::consts::FRAC_PI_2.exp())).abs() < 1e-12);
    }

    #[test]
    fn mean_profile_uses_projection() {
        let s = SigmaFunctional::MeanProfile {
            profile: Profile::step(0.0, 0.0, 1.0),
            zeta: Point::from_element(1, 1.0),
        };
        let m = EmpiricalMeasure::from_scalars(&[-1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!(s.evaluate(&m), 1.0);
        assert!(!s.is_differentiable());
    }
}
