use std::sync::Arc;

use magkit::heatflow::{self, Clock, FlowParams};
use magkit::{KMapping, PermutationOrbit, SourceSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(rng: &mut ChaCha8Rng) -> (FlowParams, KMapping, f64) {
    let d = rng.random_range(1..=3);
    let k = rng.random_range(1..=4);
    let orbit = Arc::new(PermutationOrbit::new(SourceSet::random(d, k, rng.random(), 1.0).unwrap()).unwrap());
    let eps = rng.random_range(0.1..1.0);
    let t = rng.random_range(-0.5..0.5);
    let y = KMapping::new((0..d * k).map(|_| rng.random_range(-2.0..2.0)).collect());
    (FlowParams::new(eps, orbit).unwrap(), y, t)
}

fn central<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

fn shifted(y: &KMapping, i: usize, c: f64) -> KMapping {
    let mut z = y.clone();
    z.coords[i] += c;
    z
}

#[test]
fn velocity_is_scaled_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (params, y, t) = setup(&mut rng);
        let p = params.with_clock(Clock::T(t));
        let tau = p.tau().unwrap();
        let v = heatflow::m_velocity(&y, t, &params).unwrap();
        for i in 0..y.len() {
            let g = central(|c| heatflow::log_density(&shifted(&y, i, c), &p).unwrap(), 1e-3);
            assert!((v.coords[i] + tau * g).abs() <= 1e-7 * (1.0 + v.norm()), "{} vs {}", v.coords[i], -tau * g);
        }
    }
}

#[test]
fn acceleration_is_material_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (params, y, t) = setup(&mut rng);
        let v = heatflow::m_velocity(&y, t, &params).unwrap();
        let jac = heatflow::velocity_jacobian(&y, t, &params).unwrap();
        let acc = heatflow::acceleration(&y, t, &params).unwrap();
        for i in 0..y.len() {
            let dt = central(|c| heatflow::m_velocity(&y, t + c, &params).unwrap().coords[i], 1e-3);
            let conv: f64 = (0..y.len()).map(|j| jac[(i, j)] * v.coords[j]).sum();
            assert!((acc.coords[i] - dt - conv).abs() <= 1e-6 * (1.0 + acc.norm()));
        }
    }
}

#[test]
fn soft_weights_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (params, y, t) = setup(&mut rng);
        let p = params.with_clock(Clock::T(t));
        let tau = p.tau().unwrap();
        let sa = heatflow::soft_weights(&y, &p).unwrap();
        let el = params.orbit.elements().unwrap();
        let logits: Vec<f64> = el.iter().map(|x| -y.sub(x).norm2() / (2.0 * tau)).collect();
        let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - mx).exp()).sum();
        assert!((sa.log_sum - (mx + z.ln())).abs() < 1e-10);
        for (w, l) in sa.weights.iter().zip(&logits) {
            assert!((w - (l - mx).exp() / z).abs() < 1e-12);
        }
        assert!((sa.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_source_has_no_force() {
    let orbit = Arc::new(PermutationOrbit::new(SourceSet::new(vec![vec![0.3, -0.2]]).unwrap()).unwrap());
    let params = FlowParams::new(0.5, orbit).unwrap();
    let y = KMapping::new(vec![1.0, 2.0]);
    assert!(heatflow::force_field(&y, 0.1, &params).unwrap().norm() == 0.0);
    let v = heatflow::m_velocity(&y, 0.1, &params).unwrap();
    assert!(v.sub(&KMapping::new(vec![0.7, 2.2])).norm() < 1e-15);
}

proptest! {
    #[test]
    fn jacobian_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (params, y, t) = setup(&mut rng);
        let j = heatflow::velocity_jacobian(&y, t, &params).unwrap();
        prop_assert!((&j - j.transpose()).norm() <= 1e-12 * (1.0 + j.norm()));
    }

    #[test]
    fn a_star_matches_direct_sum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<KMapping> = (0..rng.random_range(1..5))
            .map(|_| KMapping::new((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let a = heatflow::a_star(&pts);
        let bar = pts.iter().fold(KMapping::zeros(3), |acc, p| acc.add(p)).scale(1.0 / pts.len() as f64);
        // independent evaluation of n⁻¹ Σ (x̄·(x − x̄))(x − x̄)
        let mut b = KMapping::zeros(3);
        for p in &pts {
            let c = p.sub(&bar);
            b = b.axpy(bar.dot(&c) / pts.len() as f64, &c);
        }
        prop_assert!(a.sub(&b).norm() < 1e-14);
    }
}
