//! Geometry of the permutation orbit of `k` source points.
//!
//! A [`KMapping`] is a point of `R^{dk}` stored as `k` consecutive blocks of
//! length `d`. The orbit `S` of a [`SourceSet`] is the set of all
//! `x^σ = (x_{σ(0)}, …, x_{σ(k-1)})`, indexed by the lexicographic rank of
//! `σ`. Two norms are in use: the Euclidean norm of `R^{dk}` and the H-norm
//! `‖y‖_H² = ‖y‖² / k`. Every function states which one it returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{validation, MagError, Result};
use crate::minnorm;

pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Largest `k` whose permutation ranks fit in a `usize`.
pub const K_LIMIT: usize = 20;

/// The `k` distinct source points `x_0..x_{k-1}` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSet {
    d: usize,
    k: usize,
    points: Vec<Vec<f64>>,
}

impl SourceSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return validation("source set needs at least one point");
        }
        let d = points[0].len();
        if d == 0 {
            return validation("source points must have positive dimension");
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return validation(format!(
                    "source point {i} has dimension {}, expected {d}",
                    p.len()
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return validation(format!("source point {i} is not finite"));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                if points[i] == points[j] {
                    return validation(format!("source points {i} and {j} coincide"));
                }
            }
        }
        Ok(Self { d, k, points })
    }

    /// Scalar sources in `R^1`.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    /// `k` points drawn uniformly from `[-spread, spread]^d`.
    pub fn random(d: usize, k: usize, seed: u64, spread: f64) -> Result<Self> {
        if !(spread > 0.0) {
            return validation("random sources need spread > 0");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
            .collect();
        Self::new(points)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.k {
            for j in i + 1..self.k {
                best = best.min(sq_dist(&self.points[i], &self.points[j]).sqrt());
            }
        }
        best
    }
}

/// A point of `R^{dk}`, read as a map `{0..k-1} → R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMapping {
    pub coords: Vec<f64>,
}

impl KMapping {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coords: vec![0.0; len],
        }
    }

    /// Concatenates `k` blocks of `R^d`.
    pub fn from_blocks(blocks: &[Vec<f64>]) -> Self {
        Self {
            coords: blocks.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn block(&self, i: usize, d: usize) -> &[f64] {
        &self.coords[i * d..(i + 1) * d]
    }

    /// Euclidean squared norm.
    pub fn norm2(&self) -> f64 {
        dot(&self.coords, &self.coords)
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// H-norm squared, `‖y‖² / k`.
    pub fn h_norm2(&self, k: usize) -> f64 {
        self.norm2() / k as f64
    }

    /// Euclidean inner product.
    pub fn dot(&self, other: &KMapping) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn sub(&self, other: &KMapping) -> KMapping {
        KMapping::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &KMapping) -> KMapping {
        KMapping::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> KMapping {
        KMapping::new(self.coords.iter().map(|a| c * a).collect())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &KMapping) -> KMapping {
        KMapping::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }
}

impl AsRef<[f64]> for KMapping {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for KMapping {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

/// The orbit `S = {x^σ}` of a source set under the symmetric group.
///
/// Elements are materialized in lexicographic permutation order when
/// `k ≤ k_max`; above the cap only the assignment-based projection works.
#[derive(Debug, Clone)]
pub struct PermutationOrbit {
    source: SourceSet,
    k_max: usize,
    perms: Vec<Vec<usize>>,
    elements: Vec<KMapping>,
    r: f64,
}

/// Result of [`nearest_permutation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Lexicographic rank of the permutation.
    pub index: usize,
    pub perm: Vec<usize>,
    pub image: KMapping,
    /// Euclidean squared distance `‖y − x^σ‖²`.
    pub dist2: f64,
}

/// Orbit elements closest to a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct TieSet {
    /// Permutation ranks, increasing.
    pub indices: Vec<usize>,
    pub members: Vec<KMapping>,
    /// Euclidean squared distance of the closest element.
    pub min_dist2: f64,
    pub tol_used: f64,
}

impl TieSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl PermutationOrbit {
    pub fn new(source: SourceSet) -> Result<Self> {
        Self::with_k_max(source, DEFAULT_K_MAX)
    }

    pub fn with_k_max(source: SourceSet, k_max: usize) -> Result<Self> {
        let k = source.k();
        if k > K_LIMIT {
            return Err(MagError::Capability(format!(
                "k = {k} exceeds the supported limit {K_LIMIT}"
            )));
        }
        let r = source
            .points()
            .iter()
            .map(|p| dot(p, p))
            .sum::<f64>()
            .sqrt();
        let mut orbit = Self {
            source,
            k_max,
            perms: Vec::new(),
            elements: Vec::new(),
            r,
        };
        if k <= k_max {
            let mut perm: Vec<usize> = (0..k).collect();
            loop {
                orbit.elements.push(orbit.image_of(&perm));
                orbit.perms.push(perm.clone());
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        Ok(orbit)
    }

    pub fn source(&self) -> &SourceSet {
        &self.source
    }

    pub fn d(&self) -> usize {
        self.source.d()
    }

    pub fn k(&self) -> usize {
        self.source.k()
    }

    /// Ambient dimension `dk`.
    pub fn dim(&self) -> usize {
        self.d() * self.k()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Common Euclidean norm of all orbit elements.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// `r_H² = r² / k`.
    pub fn r_h2(&self) -> f64 {
        self.r * self.r / self.k() as f64
    }

    pub fn is_materialized(&self) -> bool {
        !self.elements.is_empty()
    }

    /// All elements in lexicographic order; capability error above `k_max`.
    pub fn elements(&self) -> Result<&[KMapping]> {
        self.require_enumeration()?;
        Ok(&self.elements)
    }

    pub fn permutations(&self) -> Result<&[Vec<usize>]> {
        self.require_enumeration()?;
        Ok(&self.perms)
    }

    /// Number of elements, `k!`.
    pub fn len(&self) -> usize {
        (1..=self.k()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `x^σ` for an explicit permutation.
    pub fn image_of(&self, perm: &[usize]) -> KMapping {
        let mut coords = Vec::with_capacity(self.dim());
        for &j in perm {
            coords.extend_from_slice(&self.source.points()[j]);
        }
        KMapping::new(coords)
    }

    pub(crate) fn require_enumeration(&self) -> Result<()> {
        if self.k() > self.k_max {
            return Err(MagError::Capability(format!(
                "k = {} exceeds k_max = {}; full permutation enumeration unavailable",
                self.k(),
                self.k_max
            )));
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, y: &KMapping) -> Result<()> {
        if y.len() != self.dim() {
            return validation(format!(
                "k-mapping has length {}, orbit expects d·k = {}",
                y.len(),
                self.dim()
            ));
        }
        Ok(())
    }
}

/// Lexicographic rank of a permutation of `0..n`.
pub fn permutation_rank(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut rank = 0usize;
    let mut fact: usize = (1..n).product();
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        rank += smaller * fact;
        if i + 1 < n {
            fact /= n - 1 - i;
        }
    }
    rank
}

/// Inverse of [`permutation_rank`].
pub fn permutation_unrank(mut rank: usize, n: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut fact: usize = (1..n).product();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let q = rank / fact;
        rank %= fact;
        out.push(pool.remove(q));
        if i + 1 < n {
            fact /= n - 1 - i;
        }
    }
    out
}

/// Closest orbit element to `y` in the Euclidean norm.
///
/// Solved as a linear assignment on `‖y_i − x_j‖²`; among equally close
/// elements the lexicographically smallest permutation is returned.
pub fn nearest_permutation(y: &KMapping, orbit: &PermutationOrbit) -> Result<Projection> {
    orbit.check_dim(y)?;
    let k = orbit.k();
    let d = orbit.d();
    let pts = orbit.source().points();
    let mut cost = vec![0.0; k * k];
    let mut scale = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let c = sq_dist(y.block(i, d), &pts[j]);
            cost[i * k + j] = c;
            scale = scale.max(c);
        }
    }
    let perm = assignment::lexicographic_optimum(&cost, k, 1e-13 * scale.max(1e-300));
    let image = orbit.image_of(&perm);
    let dist2 = sq_dist(&y.coords, &image.coords);
    Ok(Projection {
        index: permutation_rank(&perm),
        perm,
        image,
        dist2,
    })
}

/// All orbit elements with `dist2 ≤ (1 + rel_tol) · min dist2` (Euclidean).
pub fn projection_set(y: &KMapping, orbit: &PermutationOrbit, rel_tol: f64) -> Result<TieSet> {
    orbit.check_dim(y)?;
    if !(rel_tol >= 0.0) {
        return validation("rel_tol must be nonnegative");
    }
    let elements = orbit.elements()?;
    let dists: Vec<f64> = elements
        .iter()
        .map(|x| sq_dist(&y.coords, &x.coords))
        .collect();
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = (1.0 + rel_tol) * min;
    let indices: Vec<usize> = (0..dists.len()).filter(|&i| dists[i] <= cut).collect();
    let members = indices.iter().map(|&i| elements[i].clone()).collect();
    Ok(TieSet {
        indices,
        members,
        min_dist2: min,
        tol_used: rel_tol,
    })
}

/// Minimal-norm point of the convex hull of the tie set of `y`.
pub fn proj_o(y: &KMapping, orbit: &PermutationOrbit, rel_tol: f64) -> Result<KMapping> {
    let ties = projection_set(y, orbit, rel_tol)?;
    proj_o_of(&ties)
}

/// Minimal-norm point of the hull of a precomputed tie set.
pub fn proj_o_of(ties: &TieSet) -> Result<KMapping> {
    if ties.len() == 1 {
        return Ok(ties.members[0].clone());
    }
    minnorm::min_norm_point(&ties.members).map(KMapping::new)
}

/// `y − proj°_S(y)` at the default tie tolerance.
pub fn mag_drift(y: &KMapping, orbit: &PermutationOrbit) -> Result<KMapping> {
    mag_drift_with_tol(y, orbit, DEFAULT_REL_TOL)
}

pub fn mag_drift_with_tol(y: &KMapping, orbit: &PermutationOrbit, rel_tol: f64) -> Result<KMapping> {
    Ok(y.sub(&proj_o(y, orbit, rel_tol)?))
}

/// `Φ(y) = min_S ‖y − x‖_H² / 2` and `Π_S(y) = max_S ⟨x, y⟩_H`, both in the H-norm.
pub fn potentials(y: &KMapping, orbit: &PermutationOrbit) -> Result<(f64, f64)> {
    let p = nearest_permutation(y, orbit)?;
    let k = orbit.k() as f64;
    Ok((p.dist2 / (2.0 * k), p.image.dot(y) / k))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean squared distance, summed in coordinate order.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_pair() -> PermutationOrbit {
        PermutationOrbit::new(SourceSet::from_scalars(&[0.0, 1.0]).unwrap()).unwrap()
    }

    #[test]
    fn rank_roundtrip() {
        for n in 0..=6 {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut expected = 0;
            loop {
                assert_eq!(permutation_rank(&perm), expected);
                assert_eq!(permutation_unrank(expected, n), perm);
                expected += 1;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }

    #[test]
    fn coincident_sources_rejected() {
        let err = SourceSet::new(vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, MagError::Validation(_)));
    }

    #[test]
    fn swap_example() {
        let orbit = unit_pair();
        let p = nearest_permutation(&KMapping::new(vec![0.9, 0.2]), &orbit).unwrap();
        assert_eq!(p.perm, vec![1, 0]);
        assert_eq!(p.index, 1);
        assert_eq!(p.image.coords, vec![1.0, 0.0]);
        assert!((p.dist2 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn single_source() {
        let orbit = PermutationOrbit::new(SourceSet::new(vec![vec![1.0, -2.0]]).unwrap()).unwrap();
        let y = KMapping::new(vec![0.5, 0.5]);
        let p = nearest_permutation(&y, &orbit).unwrap();
        assert_eq!(p.image.coords, vec![1.0, -2.0]);
        assert!((p.dist2 - 6.5).abs() < 1e-15);
        let drift = mag_drift(&y, &orbit).unwrap();
        assert_eq!(drift.coords, vec![-0.5, 2.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let orbit = unit_pair();
        assert!(matches!(
            nearest_permutation(&KMapping::new(vec![0.0; 3]), &orbit),
            Err(MagError::Validation(_))
        ));
    }

    #[test]
    fn bisector_ties() {
        let orbit = unit_pair();
        let y = KMapping::new(vec![0.3, 0.3]);
        let ties = projection_set(&y, &orbit, 0.0).unwrap();
        assert_eq!(ties.indices, vec![0, 1]);
        let p = nearest_permutation(&y, &orbit).unwrap();
        assert_eq!(p.index, 0);
        let z = proj_o(&y, &orbit, 0.0).unwrap();
        assert!((z.coords[0] - 0.5).abs() < 1e-15 && (z.coords[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn origin_ties_whole_orbit() {
        let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[-1.0, 0.5, 2.0]).unwrap()).unwrap();
        let ties = projection_set(&KMapping::zeros(3), &orbit, 0.0).unwrap();
        assert_eq!(ties.len(), 6);
    }

    #[test]
    fn antipodal_orbit_projects_origin_to_zero() {
        let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[-1.0, 1.0]).unwrap()).unwrap();
        let z = proj_o(&KMapping::zeros(2), &orbit, 0.0).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn drift_example_and_zero_on_orbit() {
        let orbit = unit_pair();
        let drift = mag_drift(&KMapping::new(vec![0.9, 0.2]), &orbit).unwrap();
        assert!((drift.coords[0] + 0.1).abs() < 1e-15 && (drift.coords[1] - 0.2).abs() < 1e-15);
        let on = KMapping::new(vec![1.0, 0.0]);
        assert_eq!(mag_drift(&on, &orbit).unwrap().norm(), 0.0);
    }

    #[test]
    fn potentials_on_orbit() {
        let orbit = PermutationOrbit::new(
            SourceSet::new(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let y = orbit.elements().unwrap()[3].clone();
        let (phi, pi) = potentials(&y, &orbit).unwrap();
        assert_eq!(phi, 0.0);
        assert!((pi - orbit.r_h2()).abs() < 1e-14);
    }

    #[test]
    fn capability_above_k_max() {
        let src = SourceSet::from_scalars(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let orbit = PermutationOrbit::with_k_max(src, 3).unwrap();
        let y = KMapping::new(vec![3.0, 2.0, 1.0, 0.0]);
        assert!(matches!(
            projection_set(&y, &orbit, 0.0),
            Err(MagError::Capability(_))
        ));
        let p = nearest_permutation(&y, &orbit).unwrap();
        assert_eq!(p.perm, vec![3, 2, 1, 0]);
        assert_eq!(p.index, 23);
    }
}
