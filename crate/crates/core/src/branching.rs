//! The branching Brownian empirical process.
//!
//! Between the schedule times `σ_k` every particle follows `√ε B` stopped at
//! the boundary of `Λ_R = [−R, R]^{dk}`. At `σ_k` the cloud is resized to
//! `⌊κ(σ_k) N⌋` particles by duplicating or removing a selection picked box by
//! box, and the exact Wasserstein jump is logged with its bound.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::KappaSchedule;
use crate::entropic::{self, gaussian, GridFlow};
use crate::error::{validation, MagError, Result};
use crate::heatflow::FlowParams;
use crate::kmap;
use crate::transport;

/// `(a, b, c)` for ambient dimension `d`.
pub fn default_exponents(d_total: usize) -> (f64, f64, f64) {
    let d = d_total as f64;
    (
        (d + 2.0) / (d + 3.0),
        1.0 / (3.0 * d * (d + 3.0)),
        (2.0 * d + 1.0) / (2.0 * d * (d + 3.0)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleVariant {
    /// Steps `(κ' N^{1−a})⁻¹`; needs `κ' > 0`.
    Increasing,
    /// Steps `(|κ'| N^{1−a})⁻¹ + N⁻¹`.
    General,
}

/// Box constants: `R = r0 · N^b`, `m = max(1, ⌊m0 · N^c⌋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxConstants {
    pub r0: f64,
    pub m0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPlan {
    pub n_scale: usize,
    pub horizon: (f64, f64),
    pub kappa: KappaSchedule,
    pub variant: ScheduleVariant,
    pub schedule: Vec<f64>,
    pub counts: Vec<usize>,
    pub exponents: (f64, f64, f64),
    pub r_box: f64,
    pub m: usize,
    pub d_total: usize,
    /// Wasserstein order of the diagnostics.
    pub p: f64,
}

/// Schedule, counts and box geometry for scale `n`.
pub fn branch_schedule(
    n: usize,
    horizon: (f64, f64),
    kappa: &KappaSchedule,
    variant: ScheduleVariant,
    exponents: (f64, f64, f64),
    boxes: BoxConstants,
    d_total: usize,
) -> Result<BranchPlan> {
    let (s0, s1) = horizon;
    let (a, b, c) = exponents;
    if n == 0 {
        return validation("N must be at least 1");
    }
    if d_total == 0 {
        return validation("ambient dimension must be at least 1");
    }
    if !(s1 > s0) || !s0.is_finite() || !s1.is_finite() {
        return validation(format!("horizon needs s0 < s1, got [{s0}, {s1}]"));
    }
    if !(a > 0.0 && a < 1.0 && b > 0.0 && c > 0.0) {
        return validation(format!("exponents need a ∈ (0,1), b > 0, c > 0, got ({a}, {b}, {c})"));
    }
    if !(boxes.r0 > 0.0 && boxes.m0 > 0.0) {
        return validation("box constants r0 and m0 must be positive");
    }
    kappa.validate_on(s0, s1)?;
    let nf = n as f64;
    let scale = nf.powf(1.0 - a);
    let mut schedule = vec![s0];
    loop {
        let s = *schedule.last().unwrap();
        let slope = kappa.derivative(s);
        let step = match variant {
            ScheduleVariant::Increasing => {
                if !(slope > 0.0) {
                    return validation(format!(
                        "increasing schedule needs κ' > 0, got {slope} at s = {s}"
                    ));
                }
                1.0 / (slope * scale)
            }
            ScheduleVariant::General => {
                if slope == 0.0 {
                    1.0 / nf
                } else {
                    1.0 / (slope.abs() * scale) + 1.0 / nf
                }
            }
        };
        let next = s + step;
        if next > s1 || next <= s {
            break;
        }
        schedule.push(next);
    }
    let counts = schedule
        .iter()
        .map(|&s| {
            let c = (kappa.value(s) * nf).floor();
            if c < 1.0 {
                validation(format!("⌊κ N⌋ = {c} < 1 at s = {s}"))
            } else {
                Ok(c as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = counts.windows(2).find(|w| w[1] > 2 * w[0]) {
        return validation(format!(
            "schedule too coarse: count grows from {} to {} in one step",
            w[0], w[1]
        ));
    }
    Ok(BranchPlan {
        n_scale: n,
        horizon,
        kappa: kappa.clone(),
        variant,
        schedule,
        counts,
        exponents,
        r_box: boxes.r0 * nf.powf(b),
        m: ((boxes.m0 * nf.powf(c)).floor() as usize).max(1),
        d_total,
        p: 2.0,
    })
}

/// Uniform-weight particle cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCloud {
    pub time: f64,
    pub ids: Vec<u64>,
    pub points: Vec<Vec<f64>>,
}

impl EmpiricalCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total mass from the integer multiplicities: `n · 1 / n`.
    pub fn mass(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|_| 1u64).sum::<u64>() as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalPath {
    pub snapshots: Vec<EmpiricalCloud>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSign {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchEvent {
    pub time: f64,
    pub sign: BranchSign,
    /// Ids of the duplicated or removed particles.
    pub selected_ids: Vec<u64>,
    /// Ids given to the duplicates; empty for removals.
    pub added_ids: Vec<u64>,
    pub n_pre: usize,
    pub n_post: usize,
    pub wasserstein_jump: f64,
    /// `W_p` between the pre-event cloud and the selection.
    pub selection_distance: f64,
    pub bound_rhs: f64,
    pub compliant: bool,
}

/// `D_R (1/m + (2m)^d / n′)` with `D_R = 2√d R`.
pub fn selection_bound(r_box: f64, m: usize, d_total: usize, n_prime: usize) -> f64 {
    let d = d_total as f64;
    let boxes = (2.0 * m as f64).powf(d);
    2.0 * d.sqrt() * r_box * (1.0 / m as f64 + boxes / n_prime as f64)
}

/// Indices of `n_prime` cloud points whose empirical measure tracks the cloud.
///
/// Each box of side `R/m` contributes its `⌊n_B n′ / n⌋` lowest indices; the
/// remainder is the lowest unpicked indices overall.
pub fn pick_newcomers(points: &[Vec<f64>], n_prime: usize, r_box: f64, m: usize) -> Result<Vec<usize>> {
    let n = points.len();
    if n_prime > n {
        return validation(format!("cannot pick {n_prime} of {n} particles"));
    }
    if m == 0 || !(r_box > 0.0) {
        return validation("box grid needs m ≥ 1 and R > 0");
    }
    let mi = m as i64;
    let mut boxes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, x) in points.iter().enumerate() {
        if let Some(c) = x.iter().find(|c| !(c.abs() <= r_box)) {
            return validation(format!(
                "particle {i} has coordinate {c} outside [−{r_box}, {r_box}]"
            ));
        }
        let key = x
            .iter()
            .map(|c| ((c * m as f64 / r_box).floor() as i64).clamp(-mi, mi - 1))
            .collect();
        boxes.entry(key).or_default().push(i);
    }
    let mut picked = vec![false; n];
    let mut out = Vec::with_capacity(n_prime);
    for members in boxes.values() {
        let quota = members.len() * n_prime / n;
        for &i in &members[..quota] {
            picked[i] = true;
            out.push(i);
        }
    }
    for i in 0..n {
        if out.len() == n_prime {
            break;
        }
        if !picked[i] {
            picked[i] = true;
            out.push(i);
        }
    }
    out.sort_unstable();
    Ok(out)
}

struct Particle {
    id: u64,
    pos: Vec<f64>,
    stopped: bool,
    rng: ChaCha8Rng,
}

impl Particle {
    fn new(id: u64, pos: Vec<f64>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self { id, pos, stopped: false, rng }
    }

    /// `√ε B` on `[a, b]` in substeps of at most `h`, frozen on `∂Λ_R`.
    fn propagate(&mut self, a: f64, b: f64, h: f64, sd: f64, r_box: f64) {
        if self.stopped || !(b > a) {
            return;
        }
        let steps = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        let c = sd * ((b - a) / steps as f64).sqrt();
        let mut next = vec![0.0; self.pos.len()];
        for _ in 0..steps {
            for (n, x) in next.iter_mut().zip(&self.pos) {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *n = x + c * z;
            }
            let mut frac = 1.0_f64;
            for (x0, x1) in self.pos.iter().zip(&next) {
                if x1.abs() > r_box {
                    let wall = r_box.copysign(*x1);
                    frac = frac.min((wall - x0) / (x1 - x0));
                }
            }
            if frac < 1.0 {
                for (x0, x1) in self.pos.iter_mut().zip(&next) {
                    *x0 = (*x0 + frac * (x1 - *x0)).clamp(-r_box, r_box);
                }
                self.stopped = true;
                return;
            }
            std::mem::swap(&mut self.pos, &mut next);
        }
    }
}

fn snapshot(time: f64, particles: &[Particle]) -> EmpiricalCloud {
    EmpiricalCloud {
        time,
        ids: particles.iter().map(|p| p.id).collect(),
        points: particles.iter().map(|p| p.pos.clone()).collect(),
    }
}

/// Runs the process on `plan` with substep `h`.
///
/// Returns post-event snapshots at every `σ_k`, plus the horizon end, and the
/// event log. A bound violation is an [`MagError::Invariant`].
pub fn simulate_branching(
    plan: &BranchPlan,
    params: &FlowParams,
    seed: u64,
    h: f64,
) -> Result<(EmpiricalPath, Vec<BranchEvent>)> {
    if !(h > 0.0 && h.is_finite()) {
        return validation(format!("substep h must be positive, got {h}"));
    }
    let orbit = &params.orbit;
    if orbit.dim() != plan.d_total {
        return validation(format!(
            "plan dimension {} differs from the orbit dimension {}",
            plan.d_total,
            orbit.dim()
        ));
    }
    if plan.schedule.is_empty() || plan.schedule.len() != plan.counts.len() {
        return validation("plan has no schedule");
    }
    let sd = params.epsilon.sqrt();
    let r_box = plan.r_box;
    if orbit.source().points().iter().flatten().any(|c| c.abs() > r_box) {
        return validation(format!("sources leave the box [−{r_box}, {r_box}]"));
    }
    let n_perm = orbit.len();
    let mut particles: Vec<Particle> = (0..plan.counts[0] as u64)
        .map(|id| {
            let mut p = Particle::new(id, Vec::new(), seed);
            let idx = rand::Rng::random_range(&mut p.rng, 0..n_perm);
            p.pos = orbit.image_of(&kmap::permutation_unrank(idx, orbit.k())).coords;
            p
        })
        .collect();
    let mut next_id = particles.len() as u64;
    let s_start = plan.schedule[0];
    particles
        .par_iter_mut()
        .for_each(|p| p.propagate(0.0, s_start, h, sd, r_box));

    let mut snapshots = vec![snapshot(s_start, &particles)];
    let mut events = Vec::new();
    for k in 1..plan.schedule.len() {
        let (a, b) = (plan.schedule[k - 1], plan.schedule[k]);
        particles.par_iter_mut().for_each(|p| p.propagate(a, b, h, sd, r_box));
        let target = plan.counts[k];
        let n = particles.len();
        if target != n {
            let n_prime = target.abs_diff(n);
            let points: Vec<Vec<f64>> = particles.iter().map(|p| p.pos.clone()).collect();
            let sel = pick_newcomers(&points, n_prime, r_box, plan.m)?;
            let mut post_mass = vec![1u64; n];
            let mut sel_mass = vec![0u64; n];
            for &i in &sel {
                sel_mass[i] = 1;
            }
            let sign = if target > n { BranchSign::Add } else { BranchSign::Remove };
            for (w, &s) in post_mass.iter_mut().zip(&sel_mass) {
                match sign {
                    BranchSign::Add => *w += s,
                    BranchSign::Remove => *w -= s,
                }
            }
            let ones = vec![1u64; n];
            let jump = transport::wasserstein_weighted(&points, &ones, &points, &post_mass, plan.p)?;
            let selection = transport::wasserstein_weighted(&points, &ones, &points, &sel_mass, plan.p)?;
            let bound = selection_bound(r_box, plan.m, plan.d_total, n_prime);
            let compliant = jump <= bound && selection <= bound;
            let selected_ids: Vec<u64> = sel.iter().map(|&i| particles[i].id).collect();
            let mut added_ids = Vec::new();
            match sign {
                BranchSign::Add => {
                    for &i in &sel {
                        let mut child = Particle::new(next_id, particles[i].pos.clone(), seed);
                        child.stopped = particles[i].stopped;
                        added_ids.push(next_id);
                        next_id += 1;
                        particles.push(child);
                    }
                }
                BranchSign::Remove => {
                    let mut keep = sel_mass.iter().map(|&s| s == 0);
                    particles.retain(|_| keep.next().unwrap());
                }
            }
            let event = BranchEvent {
                time: b,
                sign,
                selected_ids,
                added_ids,
                n_pre: n,
                n_post: particles.len(),
                wasserstein_jump: jump,
                selection_distance: selection,
                bound_rhs: bound,
                compliant,
            };
            if !compliant {
                return Err(MagError::Invariant(format!(
                    "branch event at s = {b}: jump {jump} / selection {selection} exceed bound {bound}"
                )));
            }
            events.push(event);
        }
        if particles.len() != target {
            return Err(MagError::Invariant(format!(
                "particle count {} differs from ⌊κN⌋ = {target} at s = {b}",
                particles.len()
            )));
        }
        snapshots.push(snapshot(b, &particles));
    }
    let last = *plan.schedule.last().unwrap();
    let s1 = plan.horizon.1;
    if s1 > last {
        particles.par_iter_mut().for_each(|p| p.propagate(last, s1, h, sd, r_box));
        snapshots.push(snapshot(s1, &particles));
    }
    Ok((EmpiricalPath { snapshots }, events))
}

/// `Σ_k W_p(pre_k, post_k)`.
pub fn cumulative_jump(events: &[BranchEvent]) -> f64 {
    events.iter().map(|e| e.wasserstein_jump).sum()
}

/// Mean, variance and their `s`-derivatives of a 1D Gaussian flow.
pub type GaussianPath<'a> = &'a (dyn Fn(f64) -> [f64; 4] + Sync);

/// Densities entering the κ-weighted rate functional.
pub enum FlowHandle<'a> {
    Grid { flow: &'a GridFlow, reference: &'a GridFlow },
    Gaussian { flow: GaussianPath<'a>, reference: GaussianPath<'a>, times: &'a [f64] },
}

/// `½κ₀H(p₀|r₀) + ½κ₁H(p₁|r₁) + ε⁻¹∫½‖ṗ − ṙ‖²_p κ + ε∫I(p|r) κ`.
pub fn rate_j_kappa(handle: &FlowHandle, epsilon: f64, kappa: &KappaSchedule) -> Result<f64> {
    match handle {
        FlowHandle::Grid { flow, reference } => {
            let (s0, s1) = (flow.times[0], flow.times[flow.times.len() - 1]);
            kappa.validate_on(s0, s1)?;
            entropic::rate_terms(flow, reference, epsilon, |s| kappa.value(s)).map(|t| t.total())
        }
        FlowHandle::Gaussian { flow, reference, times } => {
            if !(epsilon > 0.0) {
                return validation("epsilon must be positive");
            }
            if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
                return validation("Gaussian handle needs at least two increasing times");
            }
            let (s0, s1) = (times[0], times[times.len() - 1]);
            kappa.validate_on(s0, s1)?;
            let mut kin = Vec::with_capacity(times.len());
            let mut fis = Vec::with_capacity(times.len());
            for &s in times.iter() {
                let (p, r) = (flow(s), reference(s));
                if !(p[1] > 0.0 && r[1] > 0.0) {
                    return validation(format!("Gaussian variance must be positive at s = {s}"));
                }
                let w = kappa.value(s);
                kin.push(0.5 * w * gaussian::kinetic(p, r));
                fis.push(w * gaussian::fisher_information(p[0], p[1], r[0], r[1]));
            }
            let ends = |s: f64| {
                let (p, r) = (flow(s), reference(s));
                0.5 * kappa.value(s) * gaussian::relative_entropy(p[0], p[1], r[0], r[1])
            };
            Ok(ends(s0)
                + ends(s1)
                + crate::dynamics::trapezoid(times, &kin) / epsilon
                + epsilon * crate::dynamics::trapezoid(times, &fis))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_match_closed_forms() {
        let (a, b, c) = default_exponents(3);
        assert!((a - 5.0 / 6.0).abs() < 1e-15 && (b - 1.0 / 54.0).abs() < 1e-15 && (c - 7.0 / 36.0).abs() < 1e-15);
        let (a, b, c) = default_exponents(1);
        assert!((a - 0.75).abs() < 1e-15 && (b - 1.0 / 12.0).abs() < 1e-15 && (c - 0.375).abs() < 1e-15);
        for d in 1..8 {
            let (a, b, c) = default_exponents(d);
            assert!(1.0 - a + b - c < 0.0);
            assert!(1.0 - 2.0 * a + b + c * (d as f64) < 0.0);
        }
    }

    #[test]
    fn pick_all_is_identity() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.1 - 0.5]).collect();
        assert_eq!(pick_newcomers(&pts, 10, 1.0, 3).unwrap(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn pick_rejects_outside_points() {
        let pts = vec![vec![0.0], vec![2.0]];
        assert!(matches!(pick_newcomers(&pts, 1, 1.0, 1), Err(MagError::Validation(_))));
        assert!(pick_newcomers(&pts[..1], 2, 5.0, 1).is_err());
    }

    #[test]
    fn pick_honors_box_quotas() {
        // 6 points in the left half, 2 in the right, m = 1
        let mut pts: Vec<Vec<f64>> = (0..6).map(|i| vec![-0.9 + 0.1 * i as f64]).collect();
        pts.push(vec![0.5]);
        pts.push(vec![0.7]);
        let sel = pick_newcomers(&pts, 4, 1.0, 1).unwrap();
        assert_eq!(sel, vec![0, 1, 2, 6]);
    }

    #[test]
    fn constant_kappa_general_schedule() {
        let plan = branch_schedule(
            100,
            (0.5, 0.6),
            &KappaSchedule::Constant { value: 1.0 },
            ScheduleVariant::General,
            default_exponents(2),
            BoxConstants { r0: 4.0, m0: 1.0 },
            2,
        )
        .unwrap();
        assert!(plan.counts.iter().all(|&c| c == 100));
        for w in plan.schedule.windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn increasing_schedule_rejects_flat_kappa() {
        let r = branch_schedule(
            100,
            (0.5, 0.6),
            &KappaSchedule::Constant { value: 1.0 },
            ScheduleVariant::Increasing,
            default_exponents(2),
            BoxConstants { r0: 4.0, m0: 1.0 },
            2,
        );
        assert!(r.is_err());
    }
}
