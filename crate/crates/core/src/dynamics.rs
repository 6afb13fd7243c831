//! Trajectories: Newton integrators, diffusions, actions and the time change.
//!
//! Trajectories live on either the `s` clock or the `t` clock, `s = e^{2t}`.
//! Integrators use velocity Verlet with an RK4 variant for cross-checks; the
//! limit dynamics logs a [`ShockEvent`] whenever the tie set changes between
//! steps. Actions are composite trapezoid sums in the H-norm.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{numeric, validation, Result};
use crate::heatflow::{self, FlowParams};
use crate::kmap::{self, KMapping, PermutationOrbit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    S,
    T,
}

impl ClockKind {
    pub fn name(self) -> &'static str {
        match self {
            ClockKind::S => "s",
            ClockKind::T => "t",
        }
    }
}

/// A change of the tie set of the limit dynamics, localized to a bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockEvent {
    pub time: f64,
    /// `‖y − proj°(S_pre)‖` at the last point before the change.
    pub pre_force: f64,
    /// `‖y − proj°(S_pre ∪ S_post)‖` at the first point after it.
    pub post_force: f64,
    /// `|S_pre ∪ S_post|`.
    pub tie_size: usize,
    /// Euclidean distance to `S` on both sides of the bracket.
    #[serde(skip)]
    pub pre_dist: f64,
    #[serde(skip)]
    pub post_dist: f64,
    /// Width of the localizing bracket.
    #[serde(skip)]
    pub bracket: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub clock: ClockKind,
    pub times: Vec<f64>,
    pub positions: Vec<KMapping>,
    pub velocities: Option<Vec<KMapping>>,
    pub events: Vec<ShockEvent>,
    /// Largest deviation of the work-energy balance along the run.
    pub energy_residual: Option<f64>,
}

impl Trajectory {
    pub fn new(clock: ClockKind, times: Vec<f64>, positions: Vec<KMapping>) -> Result<Self> {
        if times.len() != positions.len() || times.is_empty() {
            return validation("trajectory times and positions must be nonempty and length-matched");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return validation("trajectory times must be strictly increasing");
        }
        Ok(Self {
            clock,
            times,
            positions,
            velocities: None,
            events: Vec::new(),
            energy_residual: None,
        })
    }

    pub fn with_velocities(mut self, velocities: Vec<KMapping>) -> Result<Self> {
        if velocities.len() != self.times.len() {
            return validation("velocities must match the time grid");
        }
        self.velocities = Some(velocities);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &KMapping {
        self.positions.last().expect("nonempty trajectory")
    }

    /// Stored velocities, or second-order finite differences of the positions.
    pub fn velocities_or_fd(&self) -> Vec<KMapping> {
        match &self.velocities {
            Some(v) => v.clone(),
            None => fd_velocities(&self.times, &self.positions),
        }
    }
}

/// `κ_s` with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KappaSchedule {
    /// `κ_s = 2s`.
    Power,
    Constant { value: f64 },
    /// Piecewise-linear interpolation of `(s, κ)` nodes.
    Table { s: Vec<f64>, kappa: Vec<f64> },
}

impl KappaSchedule {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            KappaSchedule::Power => 2.0 * s,
            KappaSchedule::Constant { value } => *value,
            KappaSchedule::Table { s: xs, kappa } => {
                let i = segment(xs, s);
                let w = (s - xs[i]) / (xs[i + 1] - xs[i]);
                kappa[i] + w * (kappa[i + 1] - kappa[i])
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            KappaSchedule::Power => 2.0,
            KappaSchedule::Constant { .. } => 0.0,
            KappaSchedule::Table { s: xs, kappa } => {
                let i = segment(xs, s);
                (kappa[i + 1] - kappa[i]) / (xs[i + 1] - xs[i])
            }
        }
    }

    /// Checks `κ > 0` on `[s0, s1]` and table well-formedness.
    pub fn validate_on(&self, s0: f64, s1: f64) -> Result<()> {
        match self {
            KappaSchedule::Power => {
                if !(s0 > 0.0) {
                    return validation("kappa = 2s needs s0 > 0");
                }
            }
            KappaSchedule::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return validation(format!("constant kappa must be positive, got {value}"));
                }
            }
            KappaSchedule::Table { s, kappa } => {
                if s.len() < 2 || s.len() != kappa.len() {
                    return validation("kappa table needs at least two (s, kappa) nodes of equal count");
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) {
                    return validation("kappa table s-nodes must be strictly increasing");
                }
                if kappa.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
                    return validation("kappa table values must be positive");
                }
                if s0 < s[0] || s1 > s[s.len() - 1] {
                    return validation("horizon extends beyond the kappa table");
                }
            }
        }
        Ok(())
    }
}

fn segment(xs: &[f64], s: f64) -> usize {
    let last = xs.len() - 2;
    match xs.iter().position(|&x| x > s) {
        Some(0) => 0,
        Some(i) => (i - 1).min(last),
        None => last,
    }
}

fn time_grid(t0: f64, t1: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return validation(format!("step h must be positive, got {h}"));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return validation(format!("need t1 > t0, got [{t0}, {t1}]"));
    }
    let n = ((t1 - t0) / h - 1e-9).ceil().max(1.0) as usize;
    let step = (t1 - t0) / n as f64;
    let mut grid: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * step).collect();
    grid[n] = t1;
    Ok(grid)
}

fn check_state(y0: &KMapping, v0: &KMapping, dim: usize) -> Result<()> {
    if y0.len() != dim || v0.len() != dim {
        return validation(format!(
            "initial state has lengths ({}, {}), expected d·k = {dim}",
            y0.len(),
            v0.len()
        ));
    }
    Ok(())
}

fn finite_or(a: KMapping, location: &str, t: f64) -> Result<KMapping> {
    if a.is_finite() {
        Ok(a)
    } else {
        Err(numeric(location, format!("non-finite force at time {t}")))
    }
}

/// Velocity Verlet for `ÿ = force(y, t)` on a uniform grid.
fn verlet<F>(y0: &KMapping, v0: &KMapping, grid: &[f64], location: &str, force: F) -> Result<Trajectory>
where
    F: Fn(&KMapping, f64) -> Result<KMapping>,
{
    let mut ys = vec![y0.clone()];
    let mut vs = vec![v0.clone()];
    let mut a = finite_or(force(y0, grid[0])?, location, grid[0])?;
    let e0 = 0.5 * v0.norm2();
    let mut work = 0.0;
    let mut residual = 0.0_f64;
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let (y, v) = (ys.last().unwrap(), vs.last().unwrap());
        let half = v.axpy(0.5 * h, &a);
        let y_new = y.axpy(h, &half);
        let a_new = finite_or(force(&y_new, w[1])?, location, w[1])?;
        let v_new = half.axpy(0.5 * h, &a_new);
        work += 0.5 * h * (a.dot(v) + a_new.dot(&v_new));
        residual = residual.max((0.5 * v_new.norm2() - e0 - work).abs());
        ys.push(y_new);
        vs.push(v_new);
        a = a_new;
    }
    let mut traj = Trajectory::new(ClockKind::T, grid.to_vec(), ys)?.with_velocities(vs)?;
    traj.energy_residual = Some(residual);
    Ok(traj)
}

/// `ÿ = ṁ_t(y) + F_t(y)` on the t clock by velocity Verlet.
pub fn integrate_eps_mag(
    y0: &KMapping,
    v0: &KMapping,
    t0: f64,
    t1: f64,
    h: f64,
    params: &FlowParams,
) -> Result<Trajectory> {
    check_state(y0, v0, params.orbit.dim())?;
    let grid = time_grid(t0, t1, h)?;
    verlet(y0, v0, &grid, "integrate_eps_mag", |y, t| {
        heatflow::acceleration(y, t, params)
    })
}

/// Classical RK4 for the same Newton equation.
pub fn integrate_rk4(
    y0: &KMapping,
    v0: &KMapping,
    t0: f64,
    t1: f64,
    h: f64,
    params: &FlowParams,
) -> Result<Trajectory> {
    check_state(y0, v0, params.orbit.dim())?;
    let grid = time_grid(t0, t1, h)?;
    let acc = |y: &KMapping, t: f64| -> Result<KMapping> {
        finite_or(heatflow::acceleration(y, t, params)?, "integrate_rk4", t)
    };
    let mut ys = vec![y0.clone()];
    let mut vs = vec![v0.clone()];
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let (y, v) = (ys.last().unwrap().clone(), vs.last().unwrap().clone());
        let k1y = v.clone();
        let k1v = acc(&y, t)?;
        let k2y = v.axpy(0.5 * h, &k1v);
        let k2v = acc(&y.axpy(0.5 * h, &k1y), t + 0.5 * h)?;
        let k3y = v.axpy(0.5 * h, &k2v);
        let k3v = acc(&y.axpy(0.5 * h, &k2y), t + 0.5 * h)?;
        let k4y = v.axpy(h, &k3v);
        let k4v = acc(&y.axpy(h, &k3y), t + h)?;
        let dy = k1y.add(&k2y.scale(2.0)).add(&k3y.scale(2.0)).add(&k4y);
        let dv = k1v.add(&k2v.scale(2.0)).add(&k3v.scale(2.0)).add(&k4v);
        ys.push(y.axpy(h / 6.0, &dy));
        vs.push(v.axpy(h / 6.0, &dv));
    }
    Trajectory::new(ClockKind::T, grid, ys)?.with_velocities(vs)
}

const SHOCK_HALVINGS: usize = 8;

/// `ÿ = y − proj°_S(y)` by velocity Verlet, logging tie-set changes.
pub fn integrate_mag_limit(
    y0: &KMapping,
    v0: &KMapping,
    t0: f64,
    t1: f64,
    h: f64,
    orbit: &PermutationOrbit,
    rel_tol: f64,
) -> Result<Trajectory> {
    check_state(y0, v0, orbit.dim())?;
    orbit.require_enumeration()?;
    let grid = time_grid(t0, t1, h)?;
    let drift = |y: &KMapping| -> Result<KMapping> { kmap::mag_drift_with_tol(y, orbit, rel_tol) };
    let mut traj = verlet(y0, v0, &grid, "integrate_mag_limit", |y, _| drift(y))?;

    let ties = |y: &KMapping| kmap::projection_set(y, orbit, rel_tol);
    let step = |y: &KMapping, v: &KMapping, h: f64| -> Result<KMapping> {
        let half = v.axpy(0.5 * h, &drift(y)?);
        Ok(y.axpy(h, &half))
    };
    let mut events = Vec::new();
    let mut prev = ties(&traj.positions[0])?;
    let velocities = traj.velocities.as_ref().expect("verlet stores velocities");
    for n in 0..grid.len() - 1 {
        let next = ties(&traj.positions[n + 1])?;
        if next.indices == prev.indices {
            prev = next;
            continue;
        }
        let (y, v) = (&traj.positions[n], &velocities[n]);
        let h = grid[n + 1] - grid[n];
        let (mut lo, mut hi) = (0.0, h);
        let (mut y_lo, mut y_hi) = (y.clone(), traj.positions[n + 1].clone());
        for _ in 0..SHOCK_HALVINGS {
            let mid = 0.5 * (lo + hi);
            let y_mid = step(y, v, mid)?;
            if ties(&y_mid)?.indices == prev.indices {
                lo = mid;
                y_lo = y_mid;
            } else {
                hi = mid;
                y_hi = y_mid;
            }
        }
        let before = ties(&y_lo)?;
        let after = ties(&y_hi)?;
        let mut union_idx: Vec<usize> = before.indices.clone();
        union_idx.extend(after.indices.iter().copied());
        union_idx.sort_unstable();
        union_idx.dedup();
        let elements = orbit.elements()?;
        let union: Vec<KMapping> = union_idx.iter().map(|&i| elements[i].clone()).collect();
        let pre_force = y_lo.sub(&kmap::proj_o_of(&before)?).norm();
        let post_hull = crate::minnorm::min_norm_point(&union)?;
        let post_force = y_hi.sub(&KMapping::new(post_hull)).norm();
        events.push(ShockEvent {
            time: grid[n] + hi,
            pre_force,
            post_force,
            tie_size: union_idx.len(),
            pre_dist: before.min_dist2.sqrt(),
            post_dist: after.min_dist2.sqrt(),
            bracket: hi - lo,
        });
        prev = next;
    }
    traj.events = events;
    Ok(traj)
}

/// `X_s = X_0 + √ε B_s` with `X_0` uniform over `S`, sampled on `s_grid`.
pub fn simulate_heat_path(seed: u64, s_grid: &[f64], params: &FlowParams) -> Result<Trajectory> {
    heat_path_stream(seed, 0, s_grid, params)
}

/// Independent heat paths on per-path RNG streams.
pub fn simulate_heat_paths(
    seed: u64,
    n_paths: usize,
    s_grid: &[f64],
    params: &FlowParams,
) -> Result<Vec<Trajectory>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| heat_path_stream(seed, i, s_grid, params))
        .collect()
}

fn heat_path_stream(seed: u64, stream: u64, s_grid: &[f64], params: &FlowParams) -> Result<Trajectory> {
    if s_grid.is_empty() || s_grid[0] < 0.0 {
        return validation("heat path grid must be nonempty with s ≥ 0");
    }
    let orbit = &params.orbit;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n_perm = orbit.len();
    let idx = rand::Rng::random_range(&mut rng, 0..n_perm);
    let start = orbit.image_of(&kmap::permutation_unrank(idx, orbit.k()));
    let sd = params.epsilon.sqrt();
    let mut positions = Vec::with_capacity(s_grid.len());
    let mut y = start;
    let mut s_prev = 0.0;
    for &s in s_grid {
        let ds = s - s_prev;
        if ds > 0.0 {
            let c = sd * ds.sqrt();
            for v in y.coords.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += c * z;
            }
        }
        positions.push(y.clone());
        s_prev = s;
    }
    Trajectory::new(ClockKind::S, s_grid.to_vec(), positions)
}

/// Euler–Maruyama for `dZ = ṙ_s(Z) ds + √(η k² / κ_s) dW` on `[s0, s1]`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_surfing_sde(
    z0: &KMapping,
    s0: f64,
    s1: f64,
    h: f64,
    params: &FlowParams,
    eta: f64,
    kappa: &KappaSchedule,
    seed: u64,
) -> Result<Trajectory> {
    if !(s0 > 0.0) {
        return validation(format!("surfing SDE needs s0 > 0, got {s0}"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return validation(format!("eta must be nonnegative, got {eta}"));
    }
    if z0.len() != params.orbit.dim() {
        return validation("initial point has the wrong dimension");
    }
    kappa.validate_on(s0, s1)?;
    let grid = time_grid(s0, s1, h)?;
    let k = params.orbit.k() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = vec![z0.clone()];
    for w in grid.windows(2) {
        let (s, h) = (w[0], w[1] - w[0]);
        let z = positions.last().unwrap();
        let drift = heatflow::r_velocity(z, s, params)?;
        let mut next = z.axpy(h, &drift);
        if eta > 0.0 {
            let c = (eta * k * k / kappa.value(s) * h).sqrt();
            for v in next.coords.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v += c * g;
            }
        }
        if !next.is_finite() {
            return Err(numeric("simulate_surfing_sde", format!("non-finite state at s = {s}")));
        }
        positions.push(next);
    }
    Trajectory::new(ClockKind::S, grid, positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionVariant {
    /// `∫ ½‖ẏ − ṁ_t(y)‖_H² dt`.
    EpsT,
    /// `∫ ½‖ż − ṙ_s(z)‖_H² κ_s ds`.
    EpsS,
    /// `∫ ½‖ẏ − y + proj°(y)‖_H² dt`; on the s clock the drift is divided by `2s` and weighted by `κ_s`.
    MagLimit,
}

/// Trapezoid action of a trajectory, in the H-norm.
pub fn eval_action(
    traj: &Trajectory,
    variant: ActionVariant,
    params: &FlowParams,
    kappa: &KappaSchedule,
) -> Result<f64> {
    let k = params.orbit.k();
    let vel = traj.velocities_or_fd();
    let s_clock = traj.clock == ClockKind::S;
    match (variant, traj.clock) {
        (ActionVariant::EpsS, ClockKind::T) => {
            return validation("eps_s action needs an s-clock trajectory")
        }
        (ActionVariant::EpsT, ClockKind::S) => {
            return validation("eps_t action needs a t-clock trajectory")
        }
        _ => {}
    }
    if s_clock {
        kappa.validate_on(traj.times[0], *traj.times.last().unwrap())?;
    }
    let mut integrand = Vec::with_capacity(traj.len());
    for ((y, v), &time) in traj.positions.iter().zip(&vel).zip(&traj.times) {
        let drift = match variant {
            ActionVariant::EpsT => heatflow::m_velocity(y, time, params)?,
            ActionVariant::EpsS => heatflow::r_velocity(y, time, params)?,
            ActionVariant::MagLimit => {
                let d = kmap::mag_drift(y, &params.orbit)?;
                if s_clock {
                    d.scale(0.5 / time)
                } else {
                    d
                }
            }
        };
        let weight = if s_clock { kappa.value(time) } else { 1.0 };
        integrand.push(0.5 * v.sub(&drift).h_norm2(k) * weight);
    }
    Ok(trapezoid(&traj.times, &integrand))
}

/// `s = e^{2t}` in either direction; velocities are rescaled by `ds/dt = 2s`.
pub fn reparameterize(traj: &Trajectory) -> Result<Trajectory> {
    let (clock, times, factors): (ClockKind, Vec<f64>, Vec<f64>) = match traj.clock {
        ClockKind::S => {
            if traj.times.iter().any(|&s| !(s > 0.0)) {
                return validation("s-clock times must be positive to change clock");
            }
            (
                ClockKind::T,
                traj.times.iter().map(|s| 0.5 * s.ln()).collect(),
                traj.times.iter().map(|s| 2.0 * s).collect(),
            )
        }
        ClockKind::T => {
            let s: Vec<f64> = traj.times.iter().map(|t| (2.0 * t).exp()).collect();
            let f = s.iter().map(|s| 0.5 / s).collect();
            (ClockKind::S, s, f)
        }
    };
    let mut out = Trajectory::new(clock, times, traj.positions.clone())?;
    if let Some(v) = &traj.velocities {
        out.velocities = Some(v.iter().zip(&factors).map(|(v, f)| v.scale(*f)).collect());
    }
    out.events = traj.events.clone();
    out.energy_residual = traj.energy_residual;
    Ok(out)
}

/// Composite trapezoid rule on a possibly nonuniform grid.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

/// Three-point Lagrange derivatives; one-sided at the ends.
pub fn fd_velocities(times: &[f64], positions: &[KMapping]) -> Vec<KMapping> {
    let n = times.len();
    if n == 1 {
        return vec![KMapping::zeros(positions[0].len())];
    }
    if n == 2 {
        let v = positions[1].sub(&positions[0]).scale(1.0 / (times[1] - times[0]));
        return vec![v.clone(), v];
    }
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            let (a, b, d) = (c - 1, c, c + 1);
            let w = lagrange_derivative_weights(times[a], times[b], times[d], times[i]);
            positions[a]
                .scale(w[0])
                .axpy(w[1], &positions[b])
                .axpy(w[2], &positions[d])
        })
        .collect()
}

fn lagrange_derivative_weights(x0: f64, x1: f64, x2: f64, x: f64) -> [f64; 3] {
    [
        ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
        ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
        ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::MagError;
    use crate::kmap::SourceSet;
    use std::sync::Arc;

    fn single_source(eps: f64) -> FlowParams {
        let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[0.0]).unwrap()).unwrap();
        FlowParams::new(eps, Arc::new(orbit)).unwrap()
    }

    #[test]
    fn harmonic_repulsion_closed_form() {
        let p = single_source(0.1);
        let (y0, v0) = (0.3, -0.2);
        let traj = integrate_eps_mag(&KMapping::new(vec![y0]), &KMapping::new(vec![v0]), 0.0, 1.0, 0.01, &p).unwrap();
        let err = traj
            .times
            .iter()
            .zip(&traj.positions)
            .map(|(t, y)| (y.coords[0] - (y0 * t.cosh() + v0 * t.sinh())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn grid_hits_endpoint() {
        let g = time_grid(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn kappa_table_interpolates() {
        let k = KappaSchedule::Table {
            s: vec![0.0, 1.0, 3.0],
            kappa: vec![1.0, 2.0, 1.0],
        };
        assert_eq!(k.value(0.5), 1.5);
        assert_eq!(k.derivative(2.0), -0.5);
        assert!(k.validate_on(0.0, 3.0).is_ok());
        assert!(k.validate_on(0.0, 4.0).is_err());
    }

    #[test]
    fn fd_exact_for_quadratics() {
        let times = vec![0.0, 0.1, 0.35, 0.5, 0.9];
        let pos: Vec<KMapping> = times.iter().map(|t| KMapping::new(vec![t * t - t])).collect();
        for (t, v) in times.iter().zip(fd_velocities(&times, &pos)) {
            assert!((v.coords[0] - (2.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn reparameterize_maps_grid() {
        let e2 = 1f64.exp().powi(2);
        let traj = Trajectory::new(
            ClockKind::S,
            vec![1.0, e2],
            vec![KMapping::new(vec![1.0]), KMapping::new(vec![1.0])],
        )
        .unwrap();
        let t = reparameterize(&traj).unwrap();
        assert_eq!(t.times[0], 0.0);
        assert!((t.times[1] - 1.0).abs() < 1e-15);
        assert!(reparameterize(&Trajectory::new(ClockKind::S, vec![0.0, 1.0], traj.positions.clone()).unwrap()).is_err());
    }

    #[test]
    fn surfing_needs_positive_start() {
        let p = single_source(1.0);
        let r = simulate_surfing_sde(&KMapping::zeros(1), 0.0, 1.0, 0.1, &p, 0.0, &KappaSchedule::Power, 1);
        assert!(matches!(r, Err(MagError::Validation(_))));
    }
}
