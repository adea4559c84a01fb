//! Run configuration: one JSON file naming the model and per-command parameters.

use std::path::{Path, PathBuf};

use mfgclaw::model::{presets, ModelConfig};
use mfgclaw::select::EntropySource;
use mfgclaw::GameModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelRef,
    /// Seed for sampled measures; `--seed` wins over this.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub riemann: RiemannParams,
    #[serde(default)]
    pub characteristics: CharacteristicsParams,
    #[serde(default)]
    pub equilibrium: EquilibriumParams,
    #[serde(default)]
    pub monotonicity: MonotonicityParams,
    #[serde(default)]
    pub select: SelectParams,
    #[serde(default)]
    pub viscosity: ViscosityParams,
    #[serde(default)]
    pub nproj: NprojParams,
}

/// Exactly one of `preset`, `path` or `inline`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    #[serde(default)]
    pub preset: Option<String>,
    /// Parameter of the `quartic` preset.
    #[serde(default)]
    pub xi: Option<f64>,
    /// Model JSON file, relative to the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub inline: Option<ModelConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiemannParams {
    /// Defaults to the states of a step profile.
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub x0: Option<f64>,
    pub t: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub cfl: f64,
}

impl Default for RiemannParams {
    fn default() -> Self {
        Self { left: None, right: None, x0: None, t: 1.0, x_min: -2.0, x_max: 2.0, n_cells: 400, cfl: 0.9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacteristicsParams {
    /// Domain; the quartic profile picks its own when omitted.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n_cells: usize,
    /// Defaults to `t* + 1` for the quartic profile and 2 otherwise.
    pub t_max: Option<f64>,
    pub n_seeds: usize,
    pub snapshot_dt: f64,
    /// Cross-check the quartic landmarks against the tracked Godunov fronts.
    pub godunov_check: bool,
}

impl Default for CharacteristicsParams {
    fn default() -> Self {
        Self { x_min: None, x_max: None, n_cells: 2000, t_max: None, n_seeds: 41, snapshot_dt: 0.01, godunov_check: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<Vec<f64>>,
    /// Uniform when omitted.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumParams {
    pub t: f64,
    pub measures: Vec<MeasureSpec>,
    /// Extra measures drawn from the seed.
    pub random: usize,
    pub random_atoms: usize,
    pub spread: f64,
    pub sigma_range: Option<(f64, f64)>,
    pub n_scan: usize,
}

impl Default for EquilibriumParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            measures: Vec::new(),
            random: 0,
            random_atoms: 8,
            spread: 2.0,
            sigma_range: None,
            n_scan: mfgclaw::equilibrium::DEFAULT_N_SCAN,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicityParams {
    pub t_max: f64,
    pub c0: Option<f64>,
}

impl Default for MonotonicityParams {
    fn default() -> Self {
        Self { t_max: 1.0, c0: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectParams {
    #[serde(rename = "T")]
    pub t: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub source: EntropySource,
    pub h: f64,
    pub tol: Option<f64>,
}

impl Default for SelectParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            x_min: -1.0,
            x_max: 2.0,
            n_points: 301,
            source: EntropySource::Auto,
            h: mfgclaw::select::DEFAULT_H,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViscosityParams {
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilons: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Default for ViscosityParams {
    fn default() -> Self {
        Self { t: 1.0, epsilons: vec![0.1, 0.05, 0.025, 0.0125], x_min: -2.0, x_max: 2.0, n_cells: 1600 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NprojParams {
    pub t: f64,
    pub n_players: usize,
    /// Drawn uniformly from `[-spread, spread]` when omitted.
    pub atoms: Option<Vec<Vec<f64>>>,
    pub spread: f64,
    /// Point of the master-equation residual; the origin when omitted.
    pub x: Option<Vec<f64>>,
    pub h_fd: f64,
}

impl Default for NprojParams {
    fn default() -> Self {
        Self { t: 0.5, n_players: 3, atoms: None, spread: 1.0, x: None, h_fd: 1e-4 }
    }
}

/// Parsed config plus what it was read from.
pub struct Loaded {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    pub model: GameModel,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if config.schema_version != RUN_SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {} (expected {RUN_SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let model = build_model(&config.model, base)?;
    Ok(Loaded { config, bytes, model })
}

fn build_model(r: &ModelRef, base: &Path) -> Result<GameModel, CliError> {
    let given = [r.preset.is_some(), r.path.is_some(), r.inline.is_some()].iter().filter(|b| **b).count();
    if given != 1 {
        return Err(CliError::config("model needs exactly one of preset, path, inline"));
    }
    if r.xi.is_some() && r.preset.as_deref() != Some("quartic") {
        return Err(CliError::config("xi only applies to the quartic preset"));
    }
    let built = if let Some(name) = &r.preset {
        presets::by_name(name, r.xi)
    } else if let Some(p) = &r.path {
        let full = base.join(p);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| CliError::config(format!("cannot read model {}: {e}", full.display())))?;
        GameModel::from_json(&text)
    } else {
        GameModel::from_config(r.inline.clone().expect("checked above"))
    };
    built.map_err(CliError::config_from)
}
