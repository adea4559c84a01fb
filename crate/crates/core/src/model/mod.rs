//! Problem data: Hamiltonian, terminal cost, the functional `sigma0` and the reduced flux.

pub mod cost;
pub mod envelope;
pub mod flux;
pub mod functions;
pub mod hamiltonian;
pub mod legendre;
pub mod poly;
pub mod presets;
pub mod profile;
pub mod quartic;
pub mod sigma;

use serde::{Deserialize, Serialize};

pub use cost::TerminalCost;
pub use envelope::{concave_envelope, convex_envelope, Envelope, EnvelopePiece};
pub use flux::{FluxChecks, ReducedFlux};
pub use functions::{Phi, Psi, ScalarFn};
pub use hamiltonian::{Hamiltonian, HamiltonianSpec};
pub use legendre::Legendre1d;
pub use poly::Poly;
pub use profile::{Jump, Profile, ProfileSpec};
pub use quartic::QuarticProfile;
pub use sigma::{SigmaFunctional, SigmaSpec};

use crate::error::{Error, Result};
use crate::measure::Point;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxSpec {
    Poly { coeffs: Vec<f64> },
    /// `fbar = DH(f(.)) . zeta`, built from the Hamiltonian and the linear cost.
    FromHf,
}

/// JSON model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub hamiltonian: HamiltonianSpec,
    pub terminal_cost: TerminalCost,
    pub sigma0: SigmaSpec,
    #[serde(default)]
    pub flux: Option<FluxSpec>,
    #[serde(default)]
    pub zeta: Option<Vec<f64>>,
}

fn default_schema() -> u32 {
    MODEL_SCHEMA_VERSION
}

/// Borrowed view of a model in the reduced regime.
#[derive(Debug, Clone, Copy)]
pub struct Reduced<'a> {
    pub flux: &'a ReducedFlux,
    pub profile: &'a Profile,
    pub zeta: &'a Point,
}

#[derive(Debug, Clone)]
pub struct GameModel {
    pub name: String,
    pub hamiltonian: Hamiltonian,
    pub cost: TerminalCost,
    pub sigma0: SigmaFunctional,
    pub flux: Option<ReducedFlux>,
    config: ModelConfig,
}

/// `sigma` samples used for consistency checks between `fbar` and `(H, f)`.
const CONSISTENCY_SAMPLES: usize = 41;

impl GameModel {
    pub fn from_config(config: ModelConfig) -> Result<Self> {
        if config.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model schema_version {}",
                config.schema_version
            )));
        }
        let hamiltonian = Hamiltonian::from_spec(&config.hamiltonian)?;
        let dim = hamiltonian.dim();
        let cost = config.terminal_cost.clone();
        if let Some(d) = cost.dim() {
            if d != dim {
                return Err(Error::InvalidModel(format!(
                    "terminal cost has dimension {d}, Hamiltonian has {dim}"
                )));
            }
        }
        if let Some(z) = &config.zeta {
            if z.len() != dim {
                return Err(Error::InvalidModel(format!("zeta has length {}, expected {dim}", z.len())));
            }
        }
        let sigma0 = SigmaFunctional::from_spec(&config.sigma0, config.zeta.as_deref())?;
        match &sigma0 {
            SigmaFunctional::Moment { psi } | SigmaFunctional::Composed { psi, .. } => {
                if psi.dim().is_some_and(|d| d != dim) {
                    return Err(Error::InvalidModel("psi direction has the wrong dimension".into()));
                }
            }
            SigmaFunctional::MeanProfile { .. } => {}
        }
        let flux = match &config.flux {
            None => None,
            Some(spec) => {
                let zeta = config
                    .zeta
                    .clone()
                    .ok_or_else(|| Error::InvalidModel("a reduced flux needs zeta".into()))?;
                let built = flux_from_hf(&hamiltonian, &cost, &zeta);
                let fl = match spec {
                    FluxSpec::Poly { coeffs } => {
                        let fl = ReducedFlux::new(Poly::new(coeffs.clone()), zeta)?;
                        if let Some(Ok(from_hf)) = &built {
                            check_same_flux(&fl, from_hf)?;
                        }
                        fl
                    }
                    FluxSpec::FromHf => built.ok_or_else(|| {
                        Error::InvalidModel("from_hf needs a linear cost and a polynomial DH".into())
                    })??,
                };
                Some(fl)
            }
        };
        let name = config.name.clone().unwrap_or_else(|| "custom".into());
        Ok(Self { name, hamiltonian, cost, sigma0, flux, config })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ModelConfig = serde_json::from_str(text)?;
        Self::from_config(config)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// The reduced regime: linear cost, mean-profile `sigma0` and a reduced flux.
    pub fn reduced(&self) -> Option<Reduced<'_>> {
        match (&self.cost, &self.sigma0, &self.flux) {
            (TerminalCost::Linear { .. }, SigmaFunctional::MeanProfile { profile, zeta }, Some(flux)) => {
                Some(Reduced { flux, profile, zeta })
            }
            _ => None,
        }
    }

    pub fn require_reduced(&self) -> Result<Reduced<'_>> {
        self.reduced().ok_or(Error::ReducedRegimeRequired)
    }
}

/// `fbar(sigma) = DH(f(sigma)) . zeta` when `f` is a polynomial vector collinear with `zeta`.
fn flux_from_hf(h: &Hamiltonian, cost: &TerminalCost, zeta: &[f64]) -> Option<Result<ReducedFlux>> {
    let TerminalCost::Linear { f } = cost else {
        return None;
    };
    let fbar = match h {
        Hamiltonian::Quadratic { .. } => f
            .iter()
            .zip(zeta)
            .fold(Poly::zero(), |acc, (p, z)| acc.add(&p.scale(*z))),
        Hamiltonian::Convex1d { .. } => h.gradient_poly()?.compose(&f[0]).scale(zeta[0]),
    };
    let zeta_v = Point::from_column_slice(zeta);
    for k in 0..CONSISTENCY_SAMPLES {
        let s = -5.0 + 10.0 * k as f64 / (CONSISTENCY_SAMPLES - 1) as f64;
        let fv = cost.f_vec(s)?;
        let v = h.gradient(&fv);
        let along = v.dot(&zeta_v);
        let off = (&v - &zeta_v * along).norm();
        if off > 1e-12 * (1.0 + v.norm()) {
            return Some(Err(Error::InvalidModel(format!(
                "DH(f(sigma)) is not collinear with zeta at sigma = {s}"
            ))));
        }
    }
    Some(ReducedFlux::new(fbar, zeta.to_vec()))
}

fn check_same_flux(given: &ReducedFlux, built: &ReducedFlux) -> Result<()> {
    for k in 0..CONSISTENCY_SAMPLES {
        let s = -5.0 + 10.0 * k as f64 / (CONSISTENCY_SAMPLES - 1) as f64;
        let (a, b) = (given.fbar(s), built.fbar(s));
        if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
            return Err(Error::InvalidModel(format!(
                "flux fbar({s}) = {a} disagrees with DH(f) . zeta = {b}"
            )));
        }
    }
    Ok(())
}
