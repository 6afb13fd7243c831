use magkit::kmap::{self, permutation_rank, permutation_unrank};
use magkit::{minnorm, KMapping, PermutationOrbit, SourceSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng, k_max: usize) -> (PermutationOrbit, KMapping) {
    let d = rng.random_range(1..=3);
    let k = rng.random_range(1..=k_max);
    let orbit = PermutationOrbit::new(SourceSet::random(d, k, rng.random(), 1.0).unwrap()).unwrap();
    let y = KMapping::new((0..d * k).map(|_| rng.random_range(-2.0..2.0)).collect());
    (orbit, y)
}

fn brute_nearest(y: &KMapping, orbit: &PermutationOrbit) -> (usize, f64) {
    orbit
        .elements()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, x)| (i, y.sub(x).norm2()))
        .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

#[test]
fn assignment_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (orbit, y) = random_case(&mut rng, 6);
        let p = kmap::nearest_permutation(&y, &orbit).unwrap();
        let (idx, best) = brute_nearest(&y, &orbit);
        assert!((p.dist2 - best).abs() <= 1e-12 * (1.0 + best));
        assert_eq!(p.index, idx);
    }
}

#[test]
fn ties_pick_lexicographically_smallest() {
    let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[-1.0, 1.0]).unwrap()).unwrap();
    let y = KMapping::new(vec![0.3, 0.3]);
    let p = kmap::nearest_permutation(&y, &orbit).unwrap();
    assert_eq!(p.perm, vec![0, 1]);
    let ties = kmap::projection_set(&y, &orbit, 1e-9).unwrap();
    assert_eq!(ties.indices, vec![0, 1]);
    // the hull point of the two-element tie set is the origin
    assert!(kmap::proj_o(&y, &orbit, 1e-9).unwrap().norm() < 1e-15);
}

#[test]
fn orbit_lies_on_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let (orbit, _) = random_case(&mut rng, 5);
        for x in orbit.elements().unwrap() {
            assert!((x.norm() - orbit.r()).abs() < 1e-12 * orbit.r().max(1.0));
        }
    }
}

#[test]
fn potentials_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (orbit, y) = random_case(&mut rng, 4);
        let k = orbit.k() as f64;
        let (phi, pi) = kmap::potentials(&y, &orbit).unwrap();
        let r2 = orbit.r() * orbit.r();
        // ‖y − x‖² = ‖y‖² − 2⟨x, y⟩ + r² for every orbit element
        assert!((phi - (y.norm2() - 2.0 * k * pi + r2) / (2.0 * k)).abs() < 1e-10);
        let max_dot = orbit.elements().unwrap().iter().map(|x| x.dot(&y)).fold(f64::NEG_INFINITY, f64::max);
        assert!((pi - max_dot / k).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn rank_roundtrip(n in 1usize..8, r in any::<usize>()) {
        let total: usize = (1..=n).product();
        let rank = r % total;
        prop_assert_eq!(permutation_rank(&permutation_unrank(rank, n)), rank);
    }

    #[test]
    fn proj_o_is_in_tie_hull_and_closest_to_origin(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (orbit, _) = random_case(&mut rng, 4);
        let el = orbit.elements().unwrap();
        let a = rng.random_range(0..el.len());
        let b = rng.random_range(0..el.len());
        let y = el[a].add(&el[b]).scale(0.5 * rng.random_range(0.1..2.0));
        let ties = kmap::projection_set(&y, &orbit, 1e-9).unwrap();
        let p = kmap::proj_o(&y, &orbit, 1e-9).unwrap();
        let info = minnorm::min_norm_point_with_info(&ties.members).unwrap();
        prop_assert!(p.sub(&KMapping::new(info.point.clone())).norm() < 1e-10);
        let w: f64 = info.support.iter().map(|s| s.1).sum();
        prop_assert!((w - 1.0).abs() < 1e-10);
        prop_assert!(minnorm::optimality_slack(&p.coords, &ties.members) >= -1e-10 * (1.0 + orbit.r() * orbit.r()));
    }

    #[test]
    fn singleton_projection_is_nearest(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (orbit, y) = random_case(&mut rng, 4);
        let ties = kmap::projection_set(&y, &orbit, 1e-9).unwrap();
        prop_assume!(ties.len() == 1);
        let near = kmap::nearest_permutation(&y, &orbit).unwrap();
        prop_assert_eq!(kmap::proj_o(&y, &orbit, 1e-9).unwrap(), near.image.clone());
        prop_assert_eq!(kmap::mag_drift(&y, &orbit).unwrap(), y.sub(&near.image));
    }
}
