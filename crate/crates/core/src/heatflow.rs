//! Closed-form fields of the Gaussian-mixture heat flow.
//!
//! With `τ = ε s` and `s = e^{2t}`, the mixture density is
//! `(k!)⁻¹ Σ_σ N(x^σ, τ I)` and every field below is a moment of the
//! Boltzmann weights `π^σ ∝ exp(−‖y − x^σ‖² / 2τ)` over the orbit. All
//! vectors are Euclidean coordinates of `R^{dk}`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{numeric, validation, Result};
use crate::kmap::{self, sq_dist, KMapping, PermutationOrbit, TieSet};

/// Time on either clock; `s = e^{2t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    S(f64),
    T(f64),
}

impl Clock {
    pub fn s(self) -> f64 {
        match self {
            Clock::S(s) => s,
            Clock::T(t) => (2.0 * t).exp(),
        }
    }

    pub fn t(self) -> f64 {
        match self {
            Clock::S(s) => 0.5 * s.ln(),
            Clock::T(t) => t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowParams {
    pub epsilon: f64,
    pub orbit: Arc<PermutationOrbit>,
    pub clock: Clock,
}

impl FlowParams {
    /// Parameters at `t = 0` (`s = 1`).
    pub fn new(epsilon: f64, orbit: Arc<PermutationOrbit>) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return validation(format!("epsilon must be positive and finite, got {epsilon}"));
        }
        Ok(Self {
            epsilon,
            orbit,
            clock: Clock::T(0.0),
        })
    }

    pub fn with_clock(&self, clock: Clock) -> Self {
        Self {
            clock,
            ..self.clone()
        }
    }

    /// Variance `τ = ε s` of each mixture component.
    pub fn tau(&self) -> Result<f64> {
        tau_of(self.epsilon, self.clock)
    }
}

fn tau_of(epsilon: f64, clock: Clock) -> Result<f64> {
    let s = clock.s();
    if !(s > 0.0 && s.is_finite()) {
        return validation(format!("s must be positive and finite, got {s}"));
    }
    Ok(epsilon * s)
}

/// Boltzmann weights over the orbit with their first two moments.
#[derive(Debug, Clone)]
pub struct SoftAssignment {
    /// `π^σ`, indexed by permutation rank.
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    /// `⟨x, π⟩`.
    pub soft_mean: KMapping,
    /// `⟨x̃ x̃ᵀ, π⟩` with `x̃ = x − ⟨x, π⟩`; `dk × dk`.
    pub soft_second: DMatrix<f64>,
    /// `log Σ_σ exp(−‖y − x^σ‖² / 2τ)`.
    pub log_sum: f64,
    pub tau: f64,
}

/// Soft assignment of `y` at the clock of `params`.
pub fn soft_weights(y: &KMapping, params: &FlowParams) -> Result<SoftAssignment> {
    soft_weights_tau(y, &params.orbit, params.tau()?)
}

fn soft_weights_tau(y: &KMapping, orbit: &PermutationOrbit, tau: f64) -> Result<SoftAssignment> {
    orbit.check_dim(y)?;
    let elements = orbit.elements()?;
    let n = y.len();
    let exps: Vec<f64> = elements
        .iter()
        .map(|x| -sq_dist(&y.coords, &x.coords) / (2.0 * tau))
        .collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
    let log_weights: Vec<f64> = exps.iter().map(|e| e - log_sum).collect();
    let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();

    let mut mean = vec![0.0; n];
    for (w, x) in weights.iter().zip(elements) {
        for (m, v) in mean.iter_mut().zip(&x.coords) {
            *m += w * v;
        }
    }
    let mut second = DMatrix::<f64>::zeros(n, n);
    let mut centered = vec![0.0; n];
    for (w, x) in weights.iter().zip(elements) {
        if *w == 0.0 {
            continue;
        }
        for (c, (v, m)) in centered.iter_mut().zip(x.coords.iter().zip(&mean)) {
            *c = v - m;
        }
        for j in 0..n {
            let wj = w * centered[j];
            for i in 0..n {
                second[(i, j)] += wj * centered[i];
            }
        }
    }
    if !log_sum.is_finite() || mean.iter().any(|v| !v.is_finite()) {
        return Err(numeric("soft_weights", "non-finite mixture moments"));
    }
    Ok(SoftAssignment {
        weights,
        log_weights,
        soft_mean: KMapping::new(mean),
        soft_second: second,
        log_sum,
        tau,
    })
}

/// Log of the mixture density at `y` on the clock of `params`.
pub fn log_density(y: &KMapping, params: &FlowParams) -> Result<f64> {
    let sa = soft_weights(y, params)?;
    let orbit = &params.orbit;
    let n = orbit.dim() as f64;
    let log_kfact: f64 = (1..=orbit.k()).map(|i| (i as f64).ln()).sum();
    Ok(-log_kfact - 0.5 * n * (2.0 * std::f64::consts::PI * sa.tau).ln() + sa.log_sum)
}

/// `ṙ_s(y) = (y − ⟨x, π⟩) / 2s`.
pub fn r_velocity(y: &KMapping, s: f64, params: &FlowParams) -> Result<KMapping> {
    let tau = tau_of(params.epsilon, Clock::S(s))?;
    let sa = soft_weights_tau(y, &params.orbit, tau)?;
    Ok(y.sub(&sa.soft_mean).scale(0.5 / s))
}

/// `ṁ_t(y) = y − ⟨x, π⟩` at `s = e^{2t}`.
pub fn m_velocity(y: &KMapping, t: f64, params: &FlowParams) -> Result<KMapping> {
    let sa = at_t(y, t, params)?;
    Ok(y.sub(&sa.soft_mean))
}

/// `∂_j ṁ_i = δ_ij I − ⟨x̃_i x̃_jᵀ, π⟩ / τ`.
pub fn velocity_jacobian(y: &KMapping, t: f64, params: &FlowParams) -> Result<DMatrix<f64>> {
    let sa = at_t(y, t, params)?;
    Ok(jacobian_of(&sa))
}

fn jacobian_of(sa: &SoftAssignment) -> DMatrix<f64> {
    let n = sa.soft_second.nrows();
    DMatrix::identity(n, n) - &sa.soft_second / sa.tau
}

/// `Q(m|Leb) = −Δ√m / 2√m`, evaluated as `(4τ)⁻¹ ∇·ṁ − (8τ²)⁻¹ ‖ṁ‖²`.
pub fn quantum_potential_mixture(y: &KMapping, t: f64, params: &FlowParams) -> Result<f64> {
    let sa = at_t(y, t, params)?;
    let tau = sa.tau;
    let div = y.len() as f64 - sa.soft_second.trace() / tau;
    let mdot = y.sub(&sa.soft_mean);
    Ok(div / (4.0 * tau) - mdot.norm2() / (8.0 * tau * tau))
}

/// `F_t(y) = τ⁻¹ ⟨((y − x)·x̃) x̃, π⟩`.
pub fn force_field(y: &KMapping, t: f64, params: &FlowParams) -> Result<KMapping> {
    let sa = at_t(y, t, params)?;
    force_of(y, &sa, &params.orbit)
}

fn force_of(y: &KMapping, sa: &SoftAssignment, orbit: &PermutationOrbit) -> Result<KMapping> {
    let elements = orbit.elements()?;
    let n = y.len();
    let mut f = vec![0.0; n];
    let mut centered = vec![0.0; n];
    for (w, x) in sa.weights.iter().zip(elements) {
        if *w == 0.0 {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..n {
            centered[i] = x.coords[i] - sa.soft_mean.coords[i];
            proj += (y.coords[i] - x.coords[i]) * centered[i];
        }
        let c = w * proj;
        for i in 0..n {
            f[i] += c * centered[i];
        }
    }
    let f = KMapping::new(f).scale(1.0 / sa.tau);
    if !f.is_finite() {
        return Err(numeric("force_field", "non-finite force"));
    }
    Ok(f)
}

/// Newton acceleration `ṁ_t + F_t`.
pub fn acceleration(y: &KMapping, t: f64, params: &FlowParams) -> Result<KMapping> {
    let sa = at_t(y, t, params)?;
    let f = force_of(y, &sa, &params.orbit)?;
    Ok(y.sub(&sa.soft_mean).add(&f))
}

fn at_t(y: &KMapping, t: f64, params: &FlowParams) -> Result<SoftAssignment> {
    let tau = tau_of(params.epsilon, Clock::T(t))?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(numeric("heat flow", format!("degenerate variance at t = {t}")));
    }
    soft_weights_tau(y, &params.orbit, tau)
}

/// Closest-point data of `y`: the tie set `S_*` and its covariance vector `A_*`.
#[derive(Debug, Clone)]
pub struct ClosestDiagnostics {
    pub tie_set: TieSet,
    pub n_star: usize,
    pub xbar_star: KMapping,
    pub a_star: KMapping,
    /// `min_{S∖S_*} ‖y−x‖²/2 − min_S ‖y−x‖²/2`; `+∞` when `S_* = S`.
    pub gap_c: f64,
}

pub fn closest_diagnostics(
    y: &KMapping,
    orbit: &PermutationOrbit,
    rel_tol: f64,
) -> Result<ClosestDiagnostics> {
    let tie_set = kmap::projection_set(y, orbit, rel_tol)?;
    let elements = orbit.elements()?;
    let mut second = f64::INFINITY;
    let mut ti = 0;
    for (idx, x) in elements.iter().enumerate() {
        if ti < tie_set.indices.len() && tie_set.indices[ti] == idx {
            ti += 1;
            continue;
        }
        second = second.min(sq_dist(&y.coords, &x.coords));
    }
    let gap_c = if second.is_finite() {
        0.5 * (second - tie_set.min_dist2)
    } else {
        f64::INFINITY
    };
    let n_star = tie_set.len();
    let xbar_star = barycenter(&tie_set.members);
    let a_star = a_star(&tie_set.members);
    Ok(ClosestDiagnostics {
        tie_set,
        n_star,
        xbar_star,
        a_star,
        gap_c,
    })
}

fn barycenter(points: &[KMapping]) -> KMapping {
    let n = points[0].len();
    let mut bar = vec![0.0; n];
    for p in points {
        for (b, v) in bar.iter_mut().zip(&p.coords) {
            *b += v;
        }
    }
    KMapping::new(bar).scale(1.0 / points.len() as f64)
}

/// `A = n⁻¹ Σ_n (x̄·(x^n − x̄)) (x^n − x̄)` over a nonempty point set.
pub fn a_star(points: &[KMapping]) -> KMapping {
    let bar = barycenter(points);
    let mut acc = KMapping::zeros(bar.len());
    for p in points {
        let c = p.sub(&bar);
        acc = acc.axpy(bar.dot(&c), &c);
    }
    acc.scale(1.0 / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmap::SourceSet;

    fn params(points: Vec<Vec<f64>>, epsilon: f64) -> FlowParams {
        let orbit = PermutationOrbit::new(SourceSet::new(points).unwrap()).unwrap();
        FlowParams::new(epsilon, Arc::new(orbit)).unwrap()
    }

    #[test]
    fn single_source_is_a_gaussian() {
        let p = params(vec![vec![1.0, -1.0]], 0.3);
        let y = KMapping::new(vec![0.2, 0.4]);
        let t = 0.25;
        let tau = 0.3 * (2.0 * t as f64).exp();
        let dy = y.sub(&KMapping::new(vec![1.0, -1.0]));
        let ld = log_density(&y, &p.with_clock(Clock::T(t))).unwrap();
        let expected = -(2.0 * std::f64::consts::PI * tau).ln() - dy.norm2() / (2.0 * tau);
        assert!((ld - expected).abs() < 1e-13);
        assert_eq!(m_velocity(&y, t, &p).unwrap(), dy);
        let q = quantum_potential_mixture(&y, t, &p).unwrap();
        let q_exact = 2.0 / (4.0 * tau) - dy.norm2() / (8.0 * tau * tau);
        assert!((q - q_exact).abs() < 1e-13);
        assert!(force_field(&y, t, &p).unwrap().norm() == 0.0);
        let jac = velocity_jacobian(&y, t, &p).unwrap();
        assert_eq!(jac, DMatrix::identity(2, 2));
    }

    #[test]
    fn equal_distances_give_uniform_weights() {
        let p = params(vec![vec![-1.0], vec![1.0]], 0.5);
        let sa = soft_weights(&KMapping::zeros(2), &p).unwrap();
        assert!(sa.weights.iter().all(|w| (w - 0.5).abs() < 1e-15));
        assert!(sa.soft_mean.norm() < 1e-15);
    }

    #[test]
    fn velocity_clock_relation() {
        let p = params(vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![-0.5, -0.2]], 0.4);
        let y = KMapping::new(vec![0.3, -0.1, 0.8, 0.2, -0.4, 0.6]);
        let t = 0.3_f64;
        let s = (2.0 * t).exp();
        let m = m_velocity(&y, t, &p).unwrap();
        let r = r_velocity(&y, s, &p).unwrap();
        for (a, b) in m.coords.iter().zip(&r.coords) {
            assert!((a - 2.0 * s * b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn force_closed_form_via_covariance() {
        // on a sphere, F = τ⁻¹ C (y + ⟨x,π⟩)
        let p = params(vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![-0.5, -0.2]], 0.7);
        let y = KMapping::new(vec![0.3, -0.1, 0.8, 0.2, -0.4, 0.6]);
        let sa = soft_weights(&y, &p).unwrap();
        let f = force_field(&y, 0.0, &p).unwrap();
        let v = nalgebra::DVector::from_vec(y.add(&sa.soft_mean).coords);
        let g = &sa.soft_second * v / sa.tau;
        for i in 0..6 {
            assert!((f.coords[i] - g[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn triple_a_star() {
        let a = KMapping::new(vec![1.0, 0.0, 0.0]);
        let b = KMapping::new(vec![0.0, 1.0, 0.0]);
        let got = a_star(&[a.clone(), b.clone(), a.scale(-1.0)]);
        let want = b.scale(2.0 / 27.0);
        assert!(got.sub(&want).norm() < 1e-15);
    }

    #[test]
    fn pair_a_star_vanishes() {
        let a = KMapping::new(vec![0.6, 0.8]);
        let b = KMapping::new(vec![0.8, -0.6]);
        assert!(a_star(&[a, b]).norm() < 1e-15);
    }

    #[test]
    fn gap_infinite_when_everything_ties() {
        let orbit = PermutationOrbit::new(SourceSet::from_scalars(&[1.0, 2.0]).unwrap()).unwrap();
        let diag = closest_diagnostics(&KMapping::zeros(2), &orbit, 0.0).unwrap();
        assert_eq!(diag.n_star, 2);
        assert!(diag.gap_c.is_infinite());
    }

    #[test]
    fn nonpositive_s_rejected() {
        let p = params(vec![vec![0.0], vec![1.0]], 1.0);
        assert!(r_velocity(&KMapping::zeros(2), 0.0, &p).is_err());
        assert!(FlowParams::new(0.0, p.orbit.clone()).is_err());
    }
}
