use std::sync::Arc;

use magkit::dynamics::{self, ActionVariant, ClockKind, KappaSchedule, Trajectory};
use magkit::heatflow::FlowParams;
use magkit::{KMapping, PermutationOrbit, SourceSet};

fn params(eps: f64) -> FlowParams {
    let orbit = PermutationOrbit::new(SourceSet::random(2, 3, 5, 1.0).unwrap()).unwrap();
    FlowParams::new(eps, Arc::new(orbit)).unwrap()
}

fn start(p: &FlowParams) -> (KMapping, KMapping) {
    let y0 = p.orbit.image_of(&[0, 1, 2]).scale(1.3).axpy(0.2, &KMapping::new(vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0]));
    (y0, KMapping::new(vec![0.1, -0.2, 0.0, 0.3, 0.1, 0.0]))
}

fn observed_order(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

#[test]
fn verlet_is_second_order() {
    let p = params(0.5);
    let (y0, v0) = start(&p);
    let reference = dynamics::integrate_rk4(&y0, &v0, 0.0, 0.5, 1e-4, &p).unwrap();
    let errors: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&h| {
            let tr = dynamics::integrate_eps_mag(&y0, &v0, 0.0, 0.5, h, &p).unwrap();
            tr.last().sub(reference.last()).norm()
        })
        .collect();
    let order = observed_order(&errors);
    assert!(order > 1.8 && order < 2.3, "order {order}, errors {errors:?}");
}

#[test]
fn rk4_is_fourth_order() {
    let p = params(0.5);
    let (y0, v0) = start(&p);
    let reference = dynamics::integrate_rk4(&y0, &v0, 0.0, 0.5, 1e-4, &p).unwrap();
    let errors: Vec<f64> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| dynamics::integrate_rk4(&y0, &v0, 0.0, 0.5, h, &p).unwrap().last().sub(reference.last()).norm())
        .collect();
    assert!(observed_order(&errors) > 3.6, "errors {errors:?}");
}

#[test]
fn bisector_crossing_logs_dissipative_shock() {
    let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[0.0, 1.0]).unwrap()).unwrap();
    let y0 = KMapping::new(vec![0.2, 0.9]);
    let v0 = KMapping::new(vec![1.0, -1.0]);
    let tr = dynamics::integrate_mag_limit(&y0, &v0, 0.0, 1.0, 0.01, &orbit, 1e-9).unwrap();
    assert!(!tr.events.is_empty());
    for e in &tr.events {
        assert!(e.post_force <= e.pre_force + 1e-8);
        assert!((e.post_dist - e.pre_dist).abs() < 1e-2);
    }
}

#[test]
fn clock_change_roundtrip() {
    let times: Vec<f64> = (0..=50).map(|i| 0.02 * i as f64).collect();
    let pos: Vec<KMapping> = times.iter().map(|t| KMapping::new(vec![t.sin(), t * t])).collect();
    let vel: Vec<KMapping> = times.iter().map(|t| KMapping::new(vec![t.cos(), 2.0 * t])).collect();
    let tr = Trajectory::new(ClockKind::T, times.clone(), pos).unwrap().with_velocities(vel).unwrap();
    let s = dynamics::reparameterize(&tr).unwrap();
    assert_eq!(s.clock, ClockKind::S);
    for (si, ti) in s.times.iter().zip(&times) {
        assert!((si - (2.0 * ti).exp()).abs() < 1e-14 * si);
    }
    let back = dynamics::reparameterize(&s).unwrap();
    for (a, b) in back.times.iter().zip(&times) {
        assert!((a - b).abs() < 1e-14);
    }
    let (va, vb) = (back.velocities.unwrap(), tr.velocities.unwrap());
    for (a, b) in va.iter().zip(&vb) {
        assert!(a.sub(b).norm() < 1e-12);
    }
}

#[test]
fn action_vanishes_on_flow_lines() {
    // the deterministic flow ẏ = ṁ_t(y) has zero eps_t action
    let p = params(0.4);
    let mut y = p.orbit.image_of(&[2, 0, 1]).scale(0.7);
    let h = 1e-3;
    let times: Vec<f64> = (0..=500).map(|i| i as f64 * h).collect();
    let mut pos = vec![y.clone()];
    for w in times.windows(2) {
        let t = w[0];
        let f = |t: f64, y: &KMapping| magkit::heatflow::m_velocity(y, t, &p).unwrap();
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k1));
        let k3 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k2));
        let k4 = f(t + h, &y.axpy(h, &k3));
        y = y.axpy(h / 6.0, &k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4));
        pos.push(y.clone());
    }
    let vel: Vec<KMapping> =
        times.iter().zip(&pos).map(|(&t, y)| magkit::heatflow::m_velocity(y, t, &p).unwrap()).collect();
    let tr = Trajectory::new(ClockKind::T, times, pos).unwrap().with_velocities(vel).unwrap();
    let a = dynamics::eval_action(&tr, ActionVariant::EpsT, &p, &KappaSchedule::Constant { value: 1.0 }).unwrap();
    assert!(a.abs() < 1e-20);
}

#[test]
fn surfing_paths_are_reproducible() {
    let p = params(0.3);
    let z0 = p.orbit.image_of(&[0, 1, 2]);
    let run = |seed| dynamics::simulate_surfing_sde(&z0, 0.5, 1.0, 0.01, &p, 0.1, &KappaSchedule::Power, seed).unwrap();
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
    let grid: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let a = dynamics::simulate_heat_paths(11, 4, &grid, &p).unwrap();
    let b = dynamics::simulate_heat_paths(11, 4, &grid, &p).unwrap();
    assert_eq!(a, b);
}
