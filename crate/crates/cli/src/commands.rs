//! One function per subcommand. Each returns the files to write; nothing touches disk here.

use mfgclaw::claw::characteristics::{trace_characteristics, DiagramOptions};
use mfgclaw::claw::quartic::{godunov_check_from, quartic_diagram_options};
use mfgclaw::claw::{build_quartic_profile, godunov_profile, riemann_fan, riemann_field, Grid1D, Merge, QuarticReport};
use mfgclaw::equilibrium::{master_residual, nplayer_residual, sigma_n, FdOptions, NashCheck};
use mfgclaw::model::Profile;
use mfgclaw::numerics::linspace;
use mfgclaw::select::SelectionOptions;
use mfgclaw::{
    check_monotonicity, find_equilibria, region_scan, vanishing_viscosity_study, verify_nash, EmpiricalMeasure,
    EquilibriumReport, GameModel, MonotonicityGrid, Point, ScanOptions,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{MeasureSpec, RunConfig};
use crate::CliError;

pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub tolerances: Map<String, Value>,
    pub ambiguous: bool,
}

impl Output {
    fn new() -> Self {
        Self { files: Vec::new(), tolerances: Map::new(), ambiguous: false }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::solver_from)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> mfgclaw::Result<()>) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        write(&mut bytes).map_err(CliError::solver_from)?;
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn tol(&mut self, key: &str, v: impl Into<Value>) {
        self.tolerances.insert(key.into(), v.into());
    }
}

fn solver<T>(r: mfgclaw::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::solver_from)
}

fn reduced(model: &GameModel) -> Result<(mfgclaw::ReducedFlux, Profile), CliError> {
    let r = model.require_reduced().map_err(CliError::config_from)?;
    Ok((r.flux.clone(), r.profile.clone()))
}

pub fn riemann(cfg: &RunConfig, model: &GameModel) -> Result<Output, CliError> {
    let p = &cfg.riemann;
    let (flux, profile) = reduced(model)?;
    let step = match profile {
        Profile::Step { at, left, right } => Some((at, left, right)),
        _ => None,
    };
    let (left, right) = match (p.left, p.right, step) {
        (Some(l), Some(r), _) => (l, r),
        (None, None, Some((_, l, r))) => (l, r),
        _ => return Err(CliError::config("riemann needs left and right states unless the profile is a step")),
    };
    let x0 = p.x0.or(step.map(|s| s.0)).unwrap_or(0.0);
    if !(p.t > 0.0) {
        return Err(CliError::config("riemann.t must be positive"));
    }
    let grid = Grid1D::new(p.x_min, p.x_max, p.n_cells).map_err(CliError::config_from)?;
    let fan = solver(riemann_fan(&flux, left, right))?;
    let exact = solver(riemann_field(&flux, left, right, x0, grid, &[p.t]))?;
    let init = Profile::step(x0, left, right);
    let fv = solver(godunov_profile(&flux, &init, grid, p.t, p.cfl, &[]))?;

    let mut out = Output::new();
    out.json(
        "fan.json",
        &json!({ "x0": x0, "t": p.t, "fan": fan, "checks": fan.check(&flux) }),
    )?;
    out.csv("riemann_field.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["x", "exact", "godunov"])?;
        for (i, x) in grid.centers().into_iter().enumerate() {
            w.write_record([x.to_string(), exact.values[0][i].to_string(), fv.last()[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.tol("cfl", p.cfl);
    out.tol("envelope_samples", mfgclaw::claw::riemann::ENVELOPE_SAMPLES);
    Ok(out)
}

#[derive(Serialize)]
struct ShockMeta {
    birth_t: f64,
    birth_x: f64,
    initial_speed: f64,
    rh_residual: f64,
    merged_into: Option<usize>,
}

#[derive(Serialize)]
struct MergeMeta<'a> {
    t: f64,
    x: f64,
    left: f64,
    right: f64,
    incoming: (usize, usize),
    outgoing: Option<usize>,
    waves: &'a [mfgclaw::claw::Wave],
}

impl<'a> From<&'a Merge> for MergeMeta<'a> {
    fn from(m: &'a Merge) -> Self {
        Self { t: m.t, x: m.x, left: m.left, right: m.right, incoming: m.incoming, outgoing: m.outgoing, waves: &m.fan.waves }
    }
}

pub fn characteristics(cfg: &RunConfig, model: &GameModel) -> Result<Output, CliError> {
    let p = &cfg.characteristics;
    let (flux, profile) = reduced(model)?;
    let quartic: Option<QuarticReport> = match &profile {
        Profile::Quartic(q) => Some(solver(build_quartic_profile(q.xi, None))?.1),
        _ => None,
    };
    let t_max = p.t_max.unwrap_or(quartic.as_ref().map_or(2.0, |r| r.t_star + 1.0));
    let mut opts = match &quartic {
        Some(r) => quartic_diagram_options(r, p.n_cells, t_max),
        None => DiagramOptions::new(-2.0, 2.0, p.n_cells, t_max),
    };
    if let Some(a) = p.x_min {
        opts.x_min = a;
    }
    if let Some(b) = p.x_max {
        opts.x_max = b;
    }
    if !(p.snapshot_dt > 0.0) {
        return Err(CliError::config("characteristics.snapshot_dt must be positive"));
    }
    opts.n_snapshots = ((t_max / p.snapshot_dt).ceil() as usize).max(2);
    let seeds = if p.n_seeds == 0 { Vec::new() } else { linspace(opts.x_min, opts.x_max, p.n_seeds) };
    let (diagram, _) = solver(trace_characteristics(&flux, &profile, &opts, &seeds))?;

    let godunov = match (&quartic, p.godunov_check) {
        (Some(r), true) => Some(solver(godunov_check_from(&diagram, r, p.n_cells))?),
        _ => None,
    };
    let shocks: Vec<ShockMeta> = diagram
        .shocks
        .iter()
        .map(|s| {
            let (bt, bx) = s.birth();
            ShockMeta { birth_t: bt, birth_x: bx, initial_speed: s.initial_speed(), rh_residual: s.rh_residual, merged_into: s.merged_into }
        })
        .collect();
    let merges: Vec<MergeMeta> = diagram.history.merges.iter().map(MergeMeta::from).collect();

    let mut out = Output::new();
    out.json(
        "characteristics.json",
        &json!({
            "t_max": t_max,
            "grid": diagram.grid,
            "plot": diagram.plot_data(),
            "shocks": shocks,
            "merges": merges,
            "landmarks": quartic,
            "godunov_check": godunov,
        }),
    )?;
    out.tol("jump_factor", mfgclaw::claw::fronts::JUMP_FACTOR);
    out.tol("min_persistence", mfgclaw::claw::fronts::MIN_PERSISTENCE);
    out.tol("cfl", opts.cfl);
    Ok(out)
}

fn measure_from(spec: &MeasureSpec) -> Result<EmpiricalMeasure, CliError> {
    let atoms: Vec<Point> = spec.atoms.iter().map(|a| Point::from_column_slice(a)).collect();
    let m = match &spec.weights {
        Some(w) => EmpiricalMeasure::new(atoms, w.clone()),
        None => EmpiricalMeasure::uniform(atoms),
    };
    m.map_err(CliError::config_from)
}

#[derive(Serialize)]
struct EquilibriumResult {
    measure: usize,
    report: EquilibriumReport,
    nash: Vec<NashCheck>,
}

pub fn equilibrium(cfg: &RunConfig, model: &GameModel, seed: u64) -> Result<Output, CliError> {
    let p = &cfg.equilibrium;
    let mut measures = p.measures.iter().map(measure_from).collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..p.random {
        measures.push(EmpiricalMeasure::random(&mut rng, p.random_atoms.max(1), model.dim(), p.spread));
    }
    if measures.is_empty() {
        return Err(CliError::config("equilibrium needs measures or random > 0"));
    }
    let scan = ScanOptions { sigma_range: p.sigma_range, n_scan: p.n_scan };
    let mut results = Vec::with_capacity(measures.len());
    for (i, m) in measures.iter().enumerate() {
        let report = solver(find_equilibria(model, p.t, m, &scan))?;
        let nash = report.roots.iter().map(|r| verify_nash(model, p.t, m, r.sigma)).collect();
        results.push(EquilibriumResult { measure: i, report, nash });
    }
    let mut out = Output::new();
    out.json("equilibrium.json", &json!({ "model": model.name, "t": p.t, "measures": measures, "results": results }))?;
    out.tol("root_tol", mfgclaw::equilibrium::ROOT_TOL);
    out.tol("bisect_tol", mfgclaw::equilibrium::BISECT_TOL);
    out.tol("dedup_tol", mfgclaw::equilibrium::DEDUP_TOL);
    out.tol("n_scan", p.n_scan);
    Ok(out)
}

pub fn monotonicity(cfg: &RunConfig, model: &GameModel, seed: u64) -> Result<Output, CliError> {
    let p = &cfg.monotonicity;
    let grid = MonotonicityGrid::default_for(model, p.t_max, seed).map_err(CliError::config_from)?;
    let report = solver(check_monotonicity(model, &grid, p.c0))?;
    let mut out = Output::new();
    out.json(
        "monotonicity.json",
        &json!({
            "model": model.name,
            "verdict": report.verdict,
            "sup_dSigma0": report.sup_dsigma0,
            "inf_dSigma0": report.inf_dsigma0,
            "requested_c0": report.requested_c0,
            "samples": report.samples,
            "pointwise_criterion_sup": report.pointwise_criterion_sup,
            "max_path_discrepancy": report.max_path_discrepancy,
            "t_max": p.t_max,
            "seed": seed,
        }),
    )?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    out.csv("monotonicity_samples.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["sigma", "t", "measure", "dSigma0", "chain_rule", "criterion_sup"])?;
        for v in &report.values {
            w.write_record([
                v.sigma.to_string(),
                v.t.to_string(),
                v.measure.to_string(),
                v.d_sigma0.to_string(),
                opt(v.chain_rule),
                opt(v.criterion_sup),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.tol("fd_step", mfgclaw::monotone::FD_STEP);
    out.tol("verdict_slack", mfgclaw::monotone::VERDICT_SLACK);
    Ok(out)
}

pub fn select(cfg: &RunConfig, model: &GameModel) -> Result<Output, CliError> {
    let p = &cfg.select;
    reduced(model)?;
    if p.n_points < 1 || !(p.x_min <= p.x_max) {
        return Err(CliError::config("select needs n_points >= 1 and x_min <= x_max"));
    }
    let xs = if p.n_points == 1 { vec![p.x_min] } else { linspace(p.x_min, p.x_max, p.n_points) };
    let opts = SelectionOptions { source: p.source, h: p.h, tol: p.tol, ..Default::default() };
    let report = solver(region_scan(model, p.t, &xs, opts))?;
    let mut out = Output::new();
    out.ambiguous = report.any_ambiguous();
    out.csv("selection.csv", |buf| report.write_csv(buf))?;
    out.json("selection.json", &report)?;
    out.tol("h", p.h);
    out.tol("min_tol", mfgclaw::select::MIN_TOL);
    out.tol("tol_cells", mfgclaw::select::TOL_CELLS);
    out.tol("ambiguity_factor", mfgclaw::select::AMBIGUITY_FACTOR);
    if let Some(t) = p.tol {
        out.tol("tol", t);
    }
    Ok(out)
}

pub fn viscosity(cfg: &RunConfig, model: &GameModel) -> Result<Output, CliError> {
    let p = &cfg.viscosity;
    let (flux, profile) = reduced(model)?;
    let grid = Grid1D::new(p.x_min, p.x_max, p.n_cells).map_err(CliError::config_from)?;
    let study = solver(vanishing_viscosity_study(&flux, &profile, &p.epsilons, p.t, grid))?;
    let mut out = Output::new();
    out.csv("viscosity.csv", |buf| study.write_csv(buf))?;
    out.json("viscosity.json", &study)?;
    out.tol("cfl", mfgclaw::viscous::DEFAULT_CFL);
    out.tol("monotone_slack", mfgclaw::viscous::MONOTONE_SLACK);
    out.tol("window_fraction", mfgclaw::viscous::WINDOW_FRACTION);
    out.tol("reference_refinement", mfgclaw::viscous::REFERENCE_REFINEMENT);
    Ok(out)
}

pub fn nproj(cfg: &RunConfig, model: &GameModel, seed: u64) -> Result<Output, CliError> {
    use rand::Rng;
    let p = &cfg.nproj;
    let dim = model.dim();
    let atoms: Vec<Point> = match &p.atoms {
        Some(a) => {
            if a.iter().any(|v| v.len() != dim) {
                return Err(CliError::config(format!("nproj atoms must have dimension {dim}")));
            }
            a.iter().map(|v| Point::from_column_slice(v)).collect()
        }
        None => {
            if p.n_players == 0 {
                return Err(CliError::config("nproj.n_players must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..p.n_players)
                .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-p.spread..=p.spread)))
                .collect()
        }
    };
    let x = match &p.x {
        Some(v) if v.len() == dim => Point::from_column_slice(v),
        Some(_) => return Err(CliError::config(format!("nproj.x must have dimension {dim}"))),
        None => Point::zeros(dim),
    };
    let fd = FdOptions { h_fd: p.h_fd, ..Default::default() };
    let sigma = solver(sigma_n(model, p.t, &atoms, &fd.scan))?;
    let nplayer = solver(nplayer_residual(model, p.t, &atoms, &fd))?;
    let master = solver(master_residual(model, p.t, &x, &atoms, &fd))?;
    let mut out = Output::new();
    out.json(
        "nproj.json",
        &json!({
            "model": model.name,
            "t": p.t,
            "atoms": atoms.iter().map(|a| a.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "x": x.iter().copied().collect::<Vec<_>>(),
            "sigma_n": sigma,
            "nplayer_residual": nplayer,
            "master_residual": master,
        }),
    )?;
    out.tol("h_fd", p.h_fd);
    Ok(out)
}
