//! The reduced one-dimensional conservation law `d_t sigma + d_x F(sigma) = 0`.

pub mod characteristics;
pub mod fronts;
pub mod godunov;
pub mod grid;
pub mod lax_oleinik;
pub mod quartic;
pub mod riemann;

pub use characteristics::{
    backward_reachability, initial_fans, trace_characteristics, CharacteristicDiagram, CharacteristicLine,
    DiagramOptions, FanCenter, PlotData, Reachability,
};
pub use fronts::{detect_fronts, track_fronts, Front, FrontHistory, Merge, Track};
pub use godunov::{godunov, godunov_profile, lax_oleinik_field, riemann_field, EntropyField, Method, DEFAULT_CFL};
pub use grid::{total_variation, Grid1D};
pub use lax_oleinik::lax_oleinik;
pub use quartic::{build_quartic_profile, quartic_flux, GodunovCheck, QuarticReport};
pub use riemann::{oleinik_margin, rh_speed, riemann_exact, riemann_fan, FanChecks, RiemannFan, Wave};
