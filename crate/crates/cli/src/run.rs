//! Experiment execution and artifact emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use magkit::branching::{self, BoxConstants};
use magkit::dynamics::{self, ActionVariant, KappaSchedule, Trajectory};
use magkit::entropic::{self, gaussian, GridDensity, GridFlow};
use magkit::heatflow::FlowParams;
use magkit::{io, kmap, KMapping, MagError, PermutationOrbit, Result};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, Kind};
use crate::{plot, suites};

/// Collects output files and writes them under one directory.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| MagError::Validation(format!("output.dir {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| MagError::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

/// What a finished run reports back to the caller.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// Failed identities of an identity-suite run.
    pub failures: Vec<String>,
}

/// Runs `cfg`, writing into `out` (or `output.dir`).
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunSummary> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut art = Artifacts::new(&dir)?;
    let mut extra = BTreeMap::new();
    let mut failures = Vec::new();
    match cfg.kind {
        Kind::KmapDynamics => kmap_dynamics(cfg, &mut art)?,
        Kind::MagLimit => mag_limit(cfg, &mut art)?,
        Kind::SurfingSde => surfing(cfg, &mut art)?,
        Kind::HeatPaths => heat_paths(cfg, &mut art)?,
        Kind::Branching => {
            extra.insert("branching".to_string(), branching_run(cfg, &mut art)?);
        }
        Kind::EntropicChecks => entropic_checks(cfg, &mut art)?,
        Kind::IdentitySuite => failures = identity_suite(cfg, &mut art)?,
    }
    let mut files = art.files.clone();
    files.push("manifest.json".into());
    files.sort();
    let mut manifest = json!({
        "tool": "magkit",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "config": cfg,
        "files": files,
    });
    for (k, v) in extra {
        manifest[k] = v;
    }
    art.json("manifest.json", &manifest)?;
    if !failures.is_empty() {
        return Err(MagError::Invariant(format!("identities failed: {}", failures.join(", "))));
    }
    Ok(RunSummary { dir, files: art.files, failures })
}

fn orbit_of(cfg: &ExperimentConfig) -> Result<Arc<PermutationOrbit>> {
    Ok(Arc::new(PermutationOrbit::with_k_max(cfg.sources()?, cfg.numerics.k_max)?))
}

fn params_of(cfg: &ExperimentConfig, orbit: &Arc<PermutationOrbit>) -> Result<FlowParams> {
    FlowParams::new(cfg.epsilon(), orbit.clone())
}

fn initial_state(cfg: &ExperimentConfig, orbit: &PermutationOrbit, scale: f64) -> Result<(KMapping, KMapping)> {
    let dim = orbit.dim();
    let id: Vec<usize> = (0..orbit.k()).collect();
    let init = cfg.initial.clone().unwrap_or(crate::config::Initial { y0: None, v0: None });
    let y0 = match init.y0 {
        Some(v) if v.len() != dim => {
            return Err(MagError::Validation(format!("initial.y0: expected {dim} coordinates, got {}", v.len())))
        }
        Some(v) => KMapping::new(v),
        None => orbit.image_of(&id).scale(scale),
    };
    let v0 = match init.v0 {
        Some(v) if v.len() != dim => {
            return Err(MagError::Validation(format!("initial.v0: expected {dim} coordinates, got {}", v.len())))
        }
        Some(v) => KMapping::new(v),
        None => KMapping::zeros(dim),
    };
    Ok((y0, v0))
}

fn write_trajectory(cfg: &ExperimentConfig, art: &mut Artifacts, traj: &Trajectory) -> Result<()> {
    let csv = io::trajectory_csv(traj);
    if cfg.wants(Format::Csv) {
        art.write("trajectory.csv", &csv)?;
    }
    if cfg.wants(Format::Svg) {
        art.write("trajectory.svg", &plot::trajectory_svg(&csv)?)?;
    }
    Ok(())
}

fn summary(cfg: &ExperimentConfig, art: &mut Artifacts, value: Value) -> Result<()> {
    if cfg.wants(Format::Json) {
        art.json("summary.json", &value)?;
    }
    Ok(())
}

fn kmap_dynamics(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let orbit = orbit_of(cfg)?;
    let params = params_of(cfg, &orbit)?;
    let (y0, v0) = initial_state(cfg, &orbit, 1.5)?;
    let (t0, t1) = cfg.horizon();
    let traj = dynamics::integrate_eps_mag(&y0, &v0, t0, t1, cfg.time.h, &params)?;
    let kappa = KappaSchedule::Constant { value: 1.0 };
    let action = dynamics::eval_action(&traj, ActionVariant::EpsT, &params, &kappa)?;
    write_trajectory(cfg, art, &traj)?;
    summary(
        cfg,
        art,
        json!({
            "steps": traj.len() - 1,
            "energy_residual": traj.energy_residual,
            "action_eps_t": action,
        }),
    )
}

fn mag_limit(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let orbit = orbit_of(cfg)?;
    let (y0, v0) = initial_state(cfg, &orbit, 1.5)?;
    let (t0, t1) = cfg.horizon();
    let traj = dynamics::integrate_mag_limit(&y0, &v0, t0, t1, cfg.time.h, &orbit, cfg.numerics.rel_tol)?;
    write_trajectory(cfg, art, &traj)?;
    if cfg.wants(Format::Json) {
        art.write("events.jsonl", &io::json_lines(&traj.events)?)?;
    }
    let params = FlowParams::new(1.0, orbit.clone())?;
    let kappa = KappaSchedule::Constant { value: 1.0 };
    let action = dynamics::eval_action(&traj, ActionVariant::MagLimit, &params, &kappa)?;
    summary(
        cfg,
        art,
        json!({
            "steps": traj.len() - 1,
            "shocks": traj.events.len(),
            "energy_residual": traj.energy_residual,
            "action_mag_limit": action,
        }),
    )
}

fn surfing(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let orbit = orbit_of(cfg)?;
    let params = params_of(cfg, &orbit)?;
    let (z0, _) = initial_state(cfg, &orbit, 1.0)?;
    let (s0, s1) = cfg.horizon();
    let kappa = &cfg.physics.kappa;
    let traj = dynamics::simulate_surfing_sde(&z0, s0, s1, cfg.time.h, &params, cfg.physics.eta, kappa, cfg.seed)?;
    let action = dynamics::eval_action(&traj, ActionVariant::EpsS, &params, kappa)?;
    write_trajectory(cfg, art, &traj)?;
    summary(cfg, art, json!({ "steps": traj.len() - 1, "action_eps_s": action }))
}

fn uniform_grid(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    g[n] = b;
    g
}

fn heat_paths(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let orbit = orbit_of(cfg)?;
    let params = params_of(cfg, &orbit)?;
    let (s0, s1) = cfg.horizon();
    let grid = uniform_grid(s0, s1, cfg.time.h);
    let count = cfg.paths.as_ref().map(|p| p.count).unwrap_or(1);
    let paths = dynamics::simulate_heat_paths(cfg.seed, count, &grid, &params)?;
    write_trajectory(cfg, art, &paths[0])?;
    if count > 1 && cfg.wants(Format::Csv) {
        let mut out = String::new();
        for (i, p) in paths.iter().enumerate() {
            let csv = io::trajectory_csv(p);
            let mut lines = csv.lines();
            let header = lines.next().unwrap_or_default();
            if i == 0 {
                out.push_str("path,");
                out.push_str(header);
                out.push('\n');
            }
            for l in lines {
                out.push_str(&format!("{i},{l}\n"));
            }
        }
        art.write("paths.csv", &out)?;
    }
    let finals: Vec<f64> = paths
        .iter()
        .map(|p| kmap::nearest_permutation(p.last(), &orbit).map(|n| n.dist2.sqrt()))
        .collect::<Result<_>>()?;
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    summary(cfg, art, json!({ "paths": count, "steps": grid.len() - 1, "mean_final_distance": mean }))
}

fn branching_run(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let orbit = orbit_of(cfg)?;
    let params = params_of(cfg, &orbit)?;
    let b = cfg.branching.clone().unwrap_or_default();
    let d_total = orbit.dim();
    let exponents = b.exponents.unwrap_or_else(|| branching::default_exponents(d_total));
    let r0 = b.r0.unwrap_or(4.0 * orbit.r());
    let plan = branching::branch_schedule(
        b.n,
        cfg.horizon(),
        &cfg.physics.kappa,
        b.variant,
        exponents,
        BoxConstants { r0, m0: b.m0 },
        d_total,
    )
    .map_err(|e| match e {
        MagError::Validation(m) => MagError::Validation(format!("branching: {m}")),
        e => e,
    })?;
    let (path, events) = branching::simulate_branching(&plan, &params, cfg.seed, cfg.time.h)?;
    let cloud = io::cloud_csv(&path);
    if cfg.wants(Format::Csv) {
        art.write("cloud.csv", &cloud)?;
    }
    if cfg.wants(Format::Json) {
        art.write("branch_events.jsonl", &io::json_lines(&events)?)?;
    }
    if cfg.wants(Format::Svg) {
        for (i, svg) in plot::cloud_film(&cloud)?.iter().enumerate() {
            art.write(&format!("cloud_{i:03}.svg"), svg)?;
        }
    }
    summary(
        cfg,
        art,
        json!({
            "events": events.len(),
            "counts": plan.counts,
            "schedule": plan.schedule,
            "R": plan.r_box,
            "m": plan.m,
            "cumulative_jump": branching::cumulative_jump(&events),
            "all_compliant": events.iter().all(|e| e.compliant),
            "masses": path.snapshots.iter().map(|c| c.mass()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(json!({
        "seed": cfg.seed,
        "N": b.n,
        "exponents": exponents,
        "R0": r0,
        "m0": b.m0,
        "epsilon": cfg.epsilon(),
        "kappa": cfg.physics.kappa,
        "horizon": cfg.horizon(),
    }))
}

fn entropic_checks(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let g = cfg.grid.clone().unwrap_or_default();
    let eps = cfg.epsilon();
    let (s0, s1) = cfg.horizon();
    let times = uniform_grid(s0, s1, cfg.time.h);
    if times.len() < 3 {
        return Err(MagError::Validation("time.h: need at least three time slices".into()));
    }
    // heat flow from N(0, 1) and the same flow translated at unit speed
    let (tau0, mu0, u) = (1.0, 0.3, 0.5);
    let var = |s: f64| tau0 + eps * (s - s0);
    let reference = GridFlow::from_fn(&times, g.lo, g.hi, g.n, |s, x| gaussian::density(0.0, var(s), x))?;
    let flow = GridFlow::from_fn(&times, g.lo, g.hi, g.n, |s, x| gaussian::density(mu0 + u * (s - s0), var(s), x))?;
    let j = entropic::rate_j(&flow, &reference, eps)?;
    let drift_form = gaussian::relative_entropy(mu0, tau0, 0.0, tau0) + 0.5 * u * u * (s1 - s0) / eps;
    let j_ref = entropic::rate_j(&reference, &reference, eps)?;
    let p_end = &flow.densities[flow.densities.len() - 1];
    let r_end = &reference.densities[reference.densities.len() - 1];
    let fisher = entropic::fisher_information(p_end, r_end)?;
    let v_end = var(s1);
    let fisher_exact = gaussian::fisher_information(mu0 + u * (s1 - s0), v_end, 0.0, v_end);
    let q = entropic::quantum_potential_grid(p_end, &entropic::Reference::Lebesgue)?;

    let mut rows = Vec::new();
    for n in [g.n / 4 + 1, g.n / 2 + 1, g.n] {
        let q = GridDensity::from_fn(g.lo, g.hi, n, |x| gaussian::density(mu0, 0.7, x))?.normalized()?;
        let m = GridDensity::from_fn(g.lo, g.hi, n, |x| gaussian::density(0.0, 1.5, x))?.normalized()?;
        let dec = entropic::decomposition_residual(&q, &m)?;
        let u: Vec<f64> = q.xs().iter().map(|x| 0.5 * x * x / 25.0 + 0.3 * (0.4 * x).cos()).collect();
        let pot = entropic::potential_identity_98(&u, g.lo, g.hi, eps)?;
        rows.push(vec![q.dx(), dec, pot]);
    }
    if cfg.wants(Format::Csv) {
        art.write("flow.csv", &io::flow_csv(&flow))?;
        art.write("density.csv", &io::grid_csv(p_end))?;
        art.write("quantum_potential.csv", &io::grid_values_csv(p_end, &q))?;
    }
    let refinement = io::table_csv(&["dx", "decomposition_error", "potential_identity_error"], &rows);
    if cfg.wants(Format::Csv) {
        art.write("refinement.csv", &refinement)?;
    }
    if cfg.wants(Format::Svg) {
        art.write("error_curves.svg", &plot::error_curves_svg(&refinement)?)?;
    }
    summary(
        cfg,
        art,
        json!({
            "rate_j": j,
            "rate_j_drift_form": drift_form,
            "rate_j_reference": j_ref,
            "fisher": fisher,
            "fisher_exact": fisher_exact,
            "refinement": rows,
        }),
    )
}

fn identity_suite(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let opts = suites::SuiteOptions { fd_step: cfg.numerics.fd_step, seed: cfg.seed };
    let outcomes = suites::run_ids(&suites::ALL, &opts);
    let mut failures = Vec::new();
    let mut report = Vec::new();
    for o in &outcomes {
        if !o.passed {
            failures.push(o.name.to_string());
        }
        report.push(json!({
            "id": o.id,
            "name": o.name,
            "identity": o.identity,
            "passed": o.passed,
            "measured": finite_or_null(o.measured),
            "tolerance": o.tolerance,
            "detail": o.detail,
        }));
    }
    if cfg.wants(Format::Json) {
        art.json("report.json", &Value::Array(report))?;
    }
    if let Some(o) = outcomes.iter().find(|o| !o.series.is_empty()) {
        let rows: Vec<Vec<f64>> = o.series.iter().map(|&(x, y)| vec![x, y]).collect();
        let csv = io::table_csv(&["epsilon", "error"], &rows);
        if cfg.wants(Format::Csv) {
            art.write("eps_sweep.csv", &csv)?;
        }
        if cfg.wants(Format::Svg) {
            art.write("error_curves.svg", &plot::error_curves_svg(&csv)?)?;
        }
    }
    Ok(failures)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
