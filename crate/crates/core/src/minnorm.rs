//! Minimal-norm point of the convex hull of a finite point set.
//!
//! Wolfe's active-set iteration: a corral of affinely independent points is
//! grown by the point most violating the optimality condition, the affine
//! minimiser of the corral is computed, and points whose barycentric weight
//! would turn negative are dropped after a line search. Terminates when the
//! duality gap `‖x‖² − min_p ⟨x, p⟩` falls below `GAP_TOL · max_p ‖p‖²`.

use nalgebra::{DMatrix, DVector};

use crate::error::{validation, MagError, Result};

pub const GAP_TOL: f64 = 1e-10;
const WEIGHT_EPS: f64 = 1e-14;
const MAX_MAJOR: usize = 10_000;

/// Result of [`min_norm_point_with_info`].
#[derive(Debug, Clone)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Indices of the final corral and their barycentric weights.
    pub support: Vec<(usize, f64)>,
    /// Final duality gap `‖x‖² − min_p ⟨x, p⟩`.
    pub gap: f64,
    pub iterations: usize,
}

pub fn min_norm_point<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    min_norm_point_with_info(points).map(|m| m.point)
}

pub fn min_norm_point_with_info<P: AsRef<[f64]>>(points: &[P]) -> Result<MinNormPoint> {
    if points.is_empty() {
        return validation("min_norm_point needs at least one point");
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return validation("min_norm_point: points have different dimensions");
    }
    let pts: Vec<&[f64]> = points.iter().map(|p| p.as_ref()).collect();
    let scale = pts.iter().map(|p| norm2(p)).fold(0.0_f64, f64::max);
    let gap_tol = GAP_TOL * scale.max(f64::MIN_POSITIVE);

    let start = (0..pts.len())
        .min_by(|&a, &b| norm2(pts[a]).total_cmp(&norm2(pts[b])))
        .expect("nonempty");
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = pts[start].to_vec();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..MAX_MAJOR {
        iterations += 1;
        let (j, min_dot) = (0..pts.len())
            .map(|j| (j, dot(&x, pts[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        gap = norm2(&x) - min_dot;
        if gap <= gap_tol || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);

        // minor cycles
        loop {
            let alpha = affine_minimizer(&pts, &corral);
            if alpha.iter().all(|&a| a > WEIGHT_EPS) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= WEIGHT_EPS && *w - *a > 0.0 {
                    theta = theta.min(*w / (*w - *a));
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w = theta * *a + (1.0 - theta) * *w;
            }
            // drop the points that hit zero; always drop at least the smallest
            let min_idx = (0..weights.len())
                .min_by(|&a, &b| weights[a].total_cmp(&weights[b]))
                .expect("nonempty corral");
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_w = Vec::with_capacity(corral.len());
            for (idx, (&c, &w)) in corral.iter().zip(&weights).enumerate() {
                if w > WEIGHT_EPS && idx != min_idx {
                    keep_c.push(c);
                    keep_w.push(w);
                }
            }
            if keep_c.is_empty() {
                keep_c.push(corral[min_idx]);
                keep_w.push(1.0);
            }
            let total: f64 = keep_w.iter().sum();
            keep_w.iter_mut().for_each(|w| *w /= total);
            corral = keep_c;
            weights = keep_w;
            if corral.len() == 1 {
                break;
            }
        }
        x = combine(&pts, &corral, &weights, dim);
    }

    if !x.iter().all(|v| v.is_finite()) {
        return Err(MagError::Numeric {
            location: "min_norm_point".into(),
            message: "non-finite iterate".into(),
        });
    }
    Ok(MinNormPoint {
        point: x,
        support: corral.into_iter().zip(weights).collect(),
        gap,
        iterations,
    })
}

/// Checks `min_p ⟨x, p − x⟩ ≥ −tol · ‖x‖ · diam`; returns the slack.
pub fn optimality_slack<P: AsRef<[f64]>>(x: &[f64], points: &[P]) -> f64 {
    let xx = norm2(x);
    points
        .iter()
        .map(|p| dot(x, p.as_ref()) - xx)
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean diameter of a point set.
pub fn diameter<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let mut best = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d: f64 = a
                .as_ref()
                .iter()
                .zip(b.as_ref())
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            best = best.max(d);
        }
    }
    best.sqrt()
}

/// Barycentric weights of the minimal-norm point of the affine hull of the corral.
fn affine_minimizer(pts: &[&[f64]], corral: &[usize]) -> Vec<f64> {
    let m = corral.len();
    if m == 1 {
        return vec![1.0];
    }
    let dim = pts[0].len();
    let base = pts[corral[0]];
    // minimise ‖base + D β‖ with D = [p_i − base]
    let d = DMatrix::from_fn(dim, m - 1, |r, c| pts[corral[c + 1]][r] - base[r]);
    let rhs = DVector::from_iterator(dim, base.iter().map(|v| -v));
    let svd = d.svd(true, true);
    let beta = svd
        .solve(&rhs, 1e-13 * (1.0 + norm2(base).sqrt()))
        .unwrap_or_else(|_| DVector::zeros(m - 1));
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta.iter().copied());
    alpha
}

fn combine(pts: &[&[f64]], corral: &[usize], weights: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&c, &w) in corral.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(pts[c]) {
            *xi += w * pi;
        }
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}
