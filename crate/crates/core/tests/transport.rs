use magkit::transport::{wasserstein_discrete, wasserstein_weighted};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

fn brute_force_w2(mu: &[Vec<f64>], nu: &[Vec<f64>]) -> f64 {
    let n = mu.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        let c: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                mu[i]
                    .iter()
                    .zip(&nu[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        best = best.min(c);
        // next lexicographic permutation
        let mut i = n - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    (best / n as f64).sqrt()
}

#[test]
fn equal_size_clouds_match_assignment_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=6 {
        for _ in 0..40 {
            let mu = cloud(&mut rng, n, 2);
            let nu = cloud(&mut rng, n, 2);
            let w = wasserstein_discrete(&mu, &nu, 2.0).unwrap();
            let b = brute_force_w2(&mu, &nu);
            assert!((w - b).abs() <= 1e-12 * b.max(1.0), "n={n}: {w} vs {b}");
        }
    }
}

#[test]
fn one_dimensional_equal_size_matches_sorting() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &n in &[5usize, 40, 300] {
        let mut mu = cloud(&mut rng, n, 1);
        let mut nu = cloud(&mut rng, n, 1);
        let w = wasserstein_discrete(&mu, &nu, 2.0).unwrap();
        mu.sort_by(|a, b| a[0].total_cmp(&b[0]));
        nu.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let sorted: f64 = mu.iter().zip(&nu).map(|(a, b)| (a[0] - b[0]).powi(2)).sum::<f64>() / n as f64;
        assert!((w * w - sorted).abs() <= 1e-10 * sorted.max(1.0), "n={n}");
    }
}

#[test]
fn large_uniform_and_weighted_instances_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mu = cloud(&mut rng, 1000, 2);
    let nu = cloud(&mut rng, 100, 2);
    let w = wasserstein_discrete(&mu, &nu, 2.0).unwrap();
    assert!(w > 0.0 && w.is_finite());

    let xs = cloud(&mut rng, 1600, 2);
    let a = vec![1u64; 1600];
    let b: Vec<u64> = (0..1600).map(|i| 1 + (i % 5 == 0) as u64).collect();
    let v = wasserstein_weighted(&xs, &a, &xs, &b, 2.0).unwrap();
    assert!(v > 0.0 && v.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetric_and_triangle(seed in 0u64..10_000, n1 in 1usize..12, n2 in 1usize..12, n3 in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = cloud(&mut rng, n1, 2);
        let b = cloud(&mut rng, n2, 2);
        let c = cloud(&mut rng, n3, 2);
        let ab = wasserstein_discrete(&a, &b, 2.0).unwrap();
        let ba = wasserstein_discrete(&b, &a, 2.0).unwrap();
        let bc = wasserstein_discrete(&b, &c, 2.0).unwrap();
        let ac = wasserstein_discrete(&a, &c, 2.0).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}
