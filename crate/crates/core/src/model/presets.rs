//! Ready-made models for the worked examples.

use super::*;

fn reduced_1d(name: &str, f: Vec<f64>, profile: ProfileSpec) -> Result<GameModel> {
    GameModel::from_config(ModelConfig {
        schema_version: MODEL_SCHEMA_VERSION,
        name: Some(name.into()),
        hamiltonian: HamiltonianSpec::Quadratic { dim: 1 },
        terminal_cost: TerminalCost::linear_1d(Poly::new(f)),
        sigma0: SigmaSpec::MeanProfile { profile },
        flux: Some(FluxSpec::FromHf),
        zeta: Some(vec![1.0]),
    })
}

/// `fbar(r) = r`, step `0 | 1` at the origin.
pub fn burgers() -> GameModel {
    reduced_1d("burgers", vec![0.0, 1.0], ProfileSpec::Step { at: 0.0, left: 0.0, right: 1.0 })
        .expect("valid preset")
}

/// `fbar(r) = r^2` (flux `r^3/3`), step `-1 | 1` at the origin.
pub fn cubic() -> GameModel {
    reduced_1d("cubic", vec![0.0, 0.0, 1.0], ProfileSpec::Step { at: 0.0, left: -1.0, right: 1.0 })
        .expect("valid preset")
}

/// `fbar(r) = r^3/3 - r` (flux `r^4/12 - r^2/2`) with the focusing profile for `xi`.
pub fn quartic(xi: f64) -> Result<GameModel> {
    reduced_1d("quartic", vec![0.0, -1.0, 0.0, 1.0 / 3.0], ProfileSpec::Quartic { xi })
}

/// `fbar(r) = r` with a smooth profile.
pub fn burgers_smooth(profile: ScalarFn) -> GameModel {
    reduced_1d("burgers_smooth", vec![0.0, 1.0], ProfileSpec::Smooth(profile)).expect("valid preset")
}

/// `fbar(r) = r`, `s0 = tanh`.
pub fn tanh() -> GameModel {
    reduced_1d(
        "tanh",
        vec![0.0, 1.0],
        ProfileSpec::Smooth(ScalarFn::Tanh { scale: 1.0, rate: 1.0, shift: 0.0 }),
    )
    .expect("valid preset")
}

/// `H = p^2/2`, `g = (x^2/2)(1 + e^sigma)`, `sigma0 = int atan(y^2) dm`.
pub fn remark_example() -> GameModel {
    GameModel::from_config(ModelConfig {
        schema_version: MODEL_SCHEMA_VERSION,
        name: Some("remark".into()),
        hamiltonian: HamiltonianSpec::Quadratic { dim: 1 },
        terminal_cost: TerminalCost::Separable {
            phi: Phi::HalfSquare,
            outer: ScalarFn::Exp { a: 1.0, b: 1.0, c: 1.0 },
        },
        sigma0: SigmaSpec::Moment { psi: Psi::ArctanNormSq },
        flux: None,
        zeta: None,
    })
    .expect("valid preset")
}

/// `H = p^2/2`, `g = sigma x^2/2`, `sigma0 = G(int atan(y^2) dm)` with `G(s) = 1 + e^s`.
pub fn case2_example() -> GameModel {
    GameModel::from_config(ModelConfig {
        schema_version: MODEL_SCHEMA_VERSION,
        name: Some("case2".into()),
        hamiltonian: HamiltonianSpec::Quadratic { dim: 1 },
        terminal_cost: TerminalCost::Separable { phi: Phi::HalfSquare, outer: ScalarFn::identity() },
        sigma0: SigmaSpec::Composed {
            outer: ScalarFn::Exp { a: 1.0, b: 1.0, c: 1.0 },
            psi: Psi::ArctanNormSq,
        },
        flux: None,
        zeta: None,
    })
    .expect("valid preset")
}

pub const NAMES: &[&str] = &["burgers", "cubic", "quartic", "tanh", "remark", "case2"];

/// Looks a preset up by name; `xi` only matters for `quartic`.
pub fn by_name(name: &str, xi: Option<f64>) -> Result<GameModel> {
    match name {
        "burgers" => Ok(burgers()),
        "cubic" => Ok(cubic()),
        "quartic" => quartic(xi.unwrap_or(2.0)),
        "tanh" => Ok(tanh()),
        "remark" => Ok(remark_example()),
        "case2" => Ok(case2_example()),
        other => Err(Error::InvalidModel(format!(
            "unknown preset {other:?}; expected one of {NAMES:?}"
        ))),
    }
}
