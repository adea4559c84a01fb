use mfgclaw::claw::Grid1D;
use mfgclaw::model::Poly;
use mfgclaw::viscous::{is_monotone_with_slack, MONOTONE_SLACK};
use mfgclaw::{vanishing_viscosity_study, viscous_solve, Error, Profile, ReducedFlux};

fn cubic() -> ReducedFlux {
    ReducedFlux::scalar(Poly::new(vec![0.0, 0.0, 1.0]))
}

/// First point where `u` rises through `level`, by linear interpolation between centres.
fn crossing(grid: &Grid1D, u: &[f64], level: f64) -> f64 {
    let i = (1..u.len()).find(|&i| u[i - 1] < level && u[i] >= level).expect("level crossed");
    let (a, b) = (grid.center(i - 1), grid.center(i));
    a + (level - u[i - 1]) / (u[i] - u[i - 1]) * (b - a)
}

#[test]
fn small_viscosity_puts_the_cubic_shock_at_t_over_four() {
    let grid = Grid1D::new(-1.0, 2.0, 1200).unwrap();
    let eps = 1e-3;
    let field = viscous_solve(&cubic(), &Profile::step(0.0, -1.0, 1.0), eps, 1.0, grid, &[]).unwrap();
    // The shock joins -1 to 1/2; its midpoint level sits within a few widths eps of the front.
    let x = crossing(&field.grid, field.last(), -0.25);
    let h = grid.h();
    assert!((x - 0.25).abs() <= 3.0 * h + 10.0 * eps, "front at {x}");
    let (lo, hi) = field.extremes();
    assert!(lo >= -1.0 - 1e-12 && hi <= 1.0 + 1e-12);
    assert!(field.mass_defect < 1e-9, "{}", field.mass_defect);
}

#[test]
fn burgers_study_decreases_with_epsilon() {
    let flux = ReducedFlux::scalar(Poly::identity());
    let grid = Grid1D::new(-2.0, 2.0, 800).unwrap();
    let eps = [0.1, 0.05, 0.025];
    let study = vanishing_viscosity_study(&flux, &Profile::step(0.0, 1.0, 0.0), &eps, 1.0, grid).unwrap();
    let d: Vec<f64> = study.rows.iter().map(|r| r.l1_distance).collect();
    assert!(study.monotone);
    assert!(is_monotone_with_slack(&d, MONOTONE_SLACK));
    // A viscous shock profile has width of order eps, so the distance roughly halves with eps.
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 1.6 && ratio < 2.4, "{d:?}");
    }
    let mut csv = Vec::new();
    study.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
}

#[test]
fn study_requires_decreasing_epsilons() {
    let flux = ReducedFlux::scalar(Poly::identity());
    let grid = Grid1D::new(-1.0, 1.0, 100).unwrap();
    let r = vanishing_viscosity_study(&flux, &Profile::step(0.0, 1.0, 0.0), &[0.01, 0.1], 1.0, grid);
    assert!(matches!(r, Err(Error::BadInput(_))));
}
