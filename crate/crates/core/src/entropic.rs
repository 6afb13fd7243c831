//! Evaluators on uniform 1D grids: relative entropy, Fisher information,
//! quantum potentials, current velocities, rate functionals and Madelung
//! residuals.
//!
//! Derivatives are second order: central in the interior, one-sided at the
//! two ends. Integrals use the composite trapezoid rule.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Density values below this are treated as zero.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Velocities are reported where `p > VELOCITY_MASK · max p`.
pub const VELOCITY_MASK: f64 = 1e-10;
const MIN_POINTS: usize = 16;

/// A density sampled on the uniform grid `lo + i·dx`, `i < n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
    pub mass: f64,
}

impl GridDensity {
    /// Samples are taken as given; see [`GridDensity::normalized`].
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_POINTS {
            return validation(format!("grid needs at least {MIN_POINTS} points, got {}", values.len()));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return validation(format!("grid needs lo < hi, got [{lo}, {hi}]"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return validation("density values must be finite and nonnegative");
        }
        let dx = (hi - lo) / (values.len() - 1) as f64;
        let mass = trapezoid_uniform(&values, dx);
        Ok(Self { lo, hi, values, mass })
    }

    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = (hi - lo) / (n.max(2) - 1) as f64;
        Self::new(lo, hi, (0..n).map(|i| f(lo + i as f64 * dx)).collect())
    }

    /// Rescaled to unit trapezoid mass.
    pub fn normalized(mut self) -> Result<Self> {
        if !(self.mass > 0.0) {
            return validation("density has zero mass");
        }
        let m = self.mass;
        self.values.iter_mut().for_each(|v| *v /= m);
        self.mass = trapezoid_uniform(&self.values, self.dx());
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.n() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    /// Boundary values below `1e-12 · max` (the soft support check).
    pub fn boundary_ok(&self) -> bool {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        self.values[0] <= 1e-12 * max && self.values[self.n() - 1] <= 1e-12 * max
    }

    fn require_normalized(&self, name: &str) -> Result<()> {
        if (self.mass - 1.0).abs() > 1e-8 {
            return validation(format!("{name} has mass {} (expected 1 within 1e-8)", self.mass));
        }
        Ok(())
    }

    fn same_grid(&self, other: &GridDensity) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.n() == other.n()
    }
}

/// A time-indexed family of densities on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFlow {
    pub times: Vec<f64>,
    pub densities: Vec<GridDensity>,
}

impl GridFlow {
    pub fn new(times: Vec<f64>, densities: Vec<GridDensity>) -> Result<Self> {
        if times.is_empty() || times.len() != densities.len() {
            return validation("flow needs matching nonempty times and densities");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return validation("flow times must be strictly increasing");
        }
        for (i, d) in densities.iter().enumerate() {
            if !d.same_grid(&densities[0]) {
                return validation(format!("flow slice {i} is on a different grid"));
            }
            d.require_normalized(&format!("flow slice {i}"))?;
        }
        Ok(Self { times, densities })
    }

    /// Normalized samples of `f(t, x)` on a time grid.
    pub fn from_fn(times: &[f64], lo: f64, hi: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let densities = times
            .iter()
            .map(|&t| GridDensity::from_fn(lo, hi, n, |x| f(t, x))?.normalized())
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), densities)
    }

    pub fn grid(&self) -> &GridDensity {
        &self.densities[0]
    }
}

/// Reference measure of a quantum potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Lebesgue,
    Density(GridDensity),
}

/// `H(p|r) = ∫ p log(p/r)`.
pub fn relative_entropy(p: &GridDensity, r: &GridDensity) -> Result<f64> {
    check_pair(p, r)?;
    let f: Vec<f64> = p
        .values
        .iter()
        .zip(&r.values)
        .map(|(&a, &b)| if a <= DENSITY_FLOOR { 0.0 } else { a * (a / b).ln() })
        .collect();
    Ok(trapezoid_uniform(&f, p.dx()))
}

/// `I(p|r) = ½ ∫ |∇ log √(p/r)|² p`.
pub fn fisher_information(p: &GridDensity, r: &GridDensity) -> Result<f64> {
    check_pair(p, r)?;
    let g: Vec<f64> = p
        .values
        .iter()
        .zip(&r.values)
        .map(|(&a, &b)| if a <= DENSITY_FLOOR { 0.0 } else { 0.5 * (a.ln() - b.ln()) })
        .collect();
    let dg = derivative(&g, p.dx());
    let f: Vec<f64> = dg
        .iter()
        .zip(&p.values)
        .map(|(d, &a)| if a <= DENSITY_FLOOR { 0.0 } else { 0.5 * d * d * a })
        .collect();
    Ok(trapezoid_uniform(&f, p.dx()))
}

fn check_pair(p: &GridDensity, r: &GridDensity) -> Result<()> {
    if !p.same_grid(r) {
        return validation("densities live on different grids");
    }
    for (i, (&a, &b)) in p.values.iter().zip(&r.values).enumerate() {
        if a > DENSITY_FLOOR && b <= DENSITY_FLOOR {
            return validation(format!(
                "reference vanishes at x = {} where p = {a:e}",
                p.x(i)
            ));
        }
    }
    Ok(())
}

/// `Q(p|m) = −∇log√m · ∇log√ℓ − Δ√ℓ / 2√ℓ` with `ℓ = p/m`, pointwise.
///
/// Points where `p` is below the floor get the value 0.
pub fn quantum_potential_grid(p: &GridDensity, m: &Reference) -> Result<Vec<f64>> {
    let dx = p.dx();
    let (ell, log_sqrt_m): (Vec<f64>, Option<Vec<f64>>) = match m {
        Reference::Lebesgue => (p.values.clone(), None),
        Reference::Density(m) => {
            check_pair(p, m)?;
            if m.values[1..m.n() - 1].iter().any(|&v| v <= DENSITY_FLOOR) {
                return validation("reference density must be positive on the grid interior");
            }
            let ell = p
                .values
                .iter()
                .zip(&m.values)
                .map(|(&a, &b)| if b <= DENSITY_FLOOR { 0.0 } else { a / b })
                .collect();
            (ell, Some(m.values.iter().map(|v| 0.5 * v.ln()).collect()))
        }
    };
    let root: Vec<f64> = ell.iter().map(|v| v.sqrt()).collect();
    let d2 = second_derivative(&root, dx);
    let mut q: Vec<f64> = root
        .iter()
        .zip(&d2)
        .map(|(&r, &l)| if r * r <= DENSITY_FLOOR { 0.0 } else { -l / (2.0 * r) })
        .collect();
    if let Some(lm) = log_sqrt_m {
        let dlm = derivative(&lm, dx);
        let droot = derivative(&root, dx);
        for i in 0..q.len() {
            if root[i] * root[i] > DENSITY_FLOOR {
                q[i] -= dlm[i] * droot[i] / root[i];
            }
        }
    }
    Ok(q)
}

/// Max over the grid interior of `|ε² Q(m|Leb) − (εΔU/4 − |∇U|²/8)|`, `m = e^{−U/ε}`.
///
/// The left side is differenced through `√m`, the right side through `U`.
pub fn potential_identity_98(u: &[f64], lo: f64, hi: f64, epsilon: f64) -> Result<f64> {
    if u.len() < MIN_POINTS || !(hi > lo) {
        return validation("potential needs at least 16 grid points on a nonempty interval");
    }
    if !(epsilon > 0.0) {
        return validation("epsilon must be positive");
    }
    let dx = (hi - lo) / (u.len() - 1) as f64;
    let root: Vec<f64> = u.iter().map(|v| (-v / (2.0 * epsilon)).exp()).collect();
    let lap_root = second_derivative(&root, dx);
    let du = derivative(u, dx);
    let lap_u = second_derivative(u, dx);
    let mut worst = 0.0_f64;
    for i in 1..u.len() - 1 {
        let lhs = -epsilon * epsilon * lap_root[i] / (2.0 * root[i]);
        let rhs = epsilon * lap_u[i] / 4.0 - du[i] * du[i] / 8.0;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Max over the interior of `|Q(q|Leb) − Q(q|m) − Q(m|Leb)|`.
pub fn decomposition_residual(q: &GridDensity, m: &GridDensity) -> Result<f64> {
    let q_leb = quantum_potential_grid(q, &Reference::Lebesgue)?;
    let q_m = quantum_potential_grid(q, &Reference::Density(m.clone()))?;
    let m_leb = quantum_potential_grid(m, &Reference::Lebesgue)?;
    Ok((1..q.n() - 1)
        .map(|i| (q_leb[i] - q_m[i] - m_leb[i]).abs())
        .fold(0.0, f64::max))
}

/// `v = −p⁻¹ ∫_lo^x ∂_t p`, per time slice; zero off the effective support.
pub fn current_velocity_1d(flow: &GridFlow) -> Result<Vec<Vec<f64>>> {
    let nt = flow.times.len();
    if nt < 3 {
        return validation("current velocity needs at least three time slices");
    }
    let grid = flow.grid();
    let dx = grid.dx();
    let n = grid.n();
    let mut out = Vec::with_capacity(nt);
    for j in 0..nt {
        let dp = time_derivative(flow, j, |d, i| d.values[i], n);
        let mut flux = vec![0.0; n];
        for i in 1..n {
            flux[i] = flux[i - 1] + 0.5 * dx * (dp[i - 1] + dp[i]);
        }
        let p = &flow.densities[j].values;
        let cut = VELOCITY_MASK * p.iter().copied().fold(0.0, f64::max);
        out.push(
            p.iter()
                .zip(&flux)
                .map(|(&pi, &f)| if pi > cut { -f / pi } else { 0.0 })
                .collect(),
        );
    }
    Ok(out)
}

/// Three-point time derivative of a per-slice quantity at slice `j`.
fn time_derivative(
    flow: &GridFlow,
    j: usize,
    value: impl Fn(&GridDensity, usize) -> f64,
    n: usize,
) -> Vec<f64> {
    let t = &flow.times;
    let nt = t.len();
    let c = j.clamp(1, nt - 2);
    let w = lagrange_weights(t[c - 1], t[c], t[c + 1], t[j]);
    (0..n)
        .map(|i| {
            w[0] * value(&flow.densities[c - 1], i)
                + w[1] * value(&flow.densities[c], i)
                + w[2] * value(&flow.densities[c + 1], i)
        })
        .collect()
}

fn lagrange_weights(x0: f64, x1: f64, x2: f64, x: f64) -> [f64; 3] {
    [
        ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
        ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
        ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1)),
    ]
}

/// The four terms of the rate functional, already weighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub entropy_start: f64,
    pub entropy_end: f64,
    pub kinetic: f64,
    pub fisher: f64,
}

impl RateTerms {
    pub fn total(&self) -> f64 {
        self.entropy_start + self.entropy_end + self.kinetic + self.fisher
    }
}

/// `½H(p₀|r₀) + ½H(p₁|r₁) + ε⁻¹∫½‖ṗ − ṙ‖²_p + ε∫I(p|r)`.
pub fn rate_j(flow: &GridFlow, reference: &GridFlow, epsilon: f64) -> Result<f64> {
    rate_terms(flow, reference, epsilon, |_| 1.0).map(|t| t.total())
}

/// The rate functional with a weight `κ_s` on every term.
pub fn rate_terms(
    flow: &GridFlow,
    reference: &GridFlow,
    epsilon: f64,
    kappa: impl Fn(f64) -> f64,
) -> Result<RateTerms> {
    if !(epsilon > 0.0) {
        return validation("epsilon must be positive");
    }
    if flow.times != reference.times || !flow.grid().same_grid(reference.grid()) {
        return validation("flow and reference must share their time and space grids");
    }
    for (i, r) in reference.densities.iter().enumerate() {
        if r.values[1..r.n() - 1].iter().any(|&v| v <= DENSITY_FLOOR) {
            return validation(format!("reference slice {i} is not strictly positive"));
        }
    }
    let vp = current_velocity_1d(flow)?;
    let vr = current_velocity_1d(reference)?;
    let dx = flow.grid().dx();
    let nt = flow.times.len();
    let mut kin = Vec::with_capacity(nt);
    let mut fis = Vec::with_capacity(nt);
    for j in 0..nt {
        let p = &flow.densities[j];
        let w = kappa(flow.times[j]);
        let f: Vec<f64> = (0..p.n())
            .map(|i| 0.5 * (vp[j][i] - vr[j][i]).powi(2) * p.values[i])
            .collect();
        kin.push(w * trapezoid_uniform(&f, dx));
        fis.push(w * fisher_information(p, &reference.densities[j])?);
    }
    let t = &flow.times;
    Ok(RateTerms {
        entropy_start: 0.5
            * kappa(t[0])
            * relative_entropy(&flow.densities[0], &reference.densities[0])?,
        entropy_end: 0.5
            * kappa(t[nt - 1])
            * relative_entropy(&flow.densities[nt - 1], &reference.densities[nt - 1])?,
        kinetic: trapezoid(t, &kin) / epsilon,
        fisher: epsilon * trapezoid(t, &fis),
    })
}

/// Which second Madelung equation is checked.
#[derive(Debug, Clone, PartialEq)]
pub enum MadelungForm {
    /// `∂θ + |∇θ|²/2 + V − ε²[Q(q|Leb) − Q(m|Leb)] = 0`.
    Bridge { epsilon: f64, reference: Reference },
    /// `∂θ + |∇θ|²/2 + V + ħ²Q(q|Leb) = 0`.
    Quantum { hbar2: f64 },
}

/// Max residuals of the continuity and Hamilton–Jacobi equations.
///
/// Evaluated at interior time slices and interior grid points where
/// `q > 1e-8 · max q`.
pub fn madelung_residual(
    q: &GridFlow,
    theta: &[Vec<f64>],
    potential: &[f64],
    form: &MadelungForm,
) -> Result<(f64, f64)> {
    let nt = q.times.len();
    let n = q.grid().n();
    if nt < 3 {
        return validation("Madelung residuals need at least three time slices");
    }
    if theta.len() != nt || theta.iter().any(|th| th.len() != n) || potential.len() != n {
        return validation("theta and potential must match the flow grid");
    }
    let dx = q.grid().dx();
    let m_leb = match form {
        MadelungForm::Bridge {
            reference: Reference::Density(m),
            ..
        } => quantum_potential_grid(m, &Reference::Lebesgue)?,
        _ => vec![0.0; n],
    };
    let (mut r1, mut r2) = (0.0_f64, 0.0_f64);
    for j in 1..nt - 1 {
        let w = lagrange_weights(q.times[j - 1], q.times[j], q.times[j + 1], q.times[j]);
        let qj = &q.densities[j].values;
        let dq: Vec<f64> = (0..n)
            .map(|i| {
                w[0] * q.densities[j - 1].values[i] + w[1] * qj[i] + w[2] * q.densities[j + 1].values[i]
            })
            .collect();
        let dth: Vec<f64> = (0..n)
            .map(|i| w[0] * theta[j - 1][i] + w[1] * theta[j][i] + w[2] * theta[j + 1][i])
            .collect();
        let grad = derivative(&theta[j], dx);
        let flux: Vec<f64> = qj.iter().zip(&grad).map(|(a, g)| a * g).collect();
        let div = derivative(&flux, dx);
        let qq = quantum_potential_grid(&q.densities[j], &Reference::Lebesgue)?;
        let cut = 1e-8 * qj.iter().copied().fold(0.0, f64::max);
        for i in 1..n - 1 {
            if qj[i] <= cut {
                continue;
            }
            r1 = r1.max((dq[i] + div[i]).abs());
            let quantum = match form {
                MadelungForm::Bridge { epsilon, .. } => -epsilon * epsilon * (qq[i] - m_leb[i]),
                MadelungForm::Quantum { hbar2 } => hbar2 * qq[i],
            };
            r2 = r2.max((dth[i] + 0.5 * grad[i] * grad[i] + potential[i] + quantum).abs());
        }
    }
    Ok((r1, r2))
}

/// Closed-form Gaussian quantities used as oracles and as the Gaussian flow handle.
pub mod gaussian {
    /// `H(N(μ₁,v₁) | N(μ₂,v₂))`.
    pub fn relative_entropy(mu1: f64, v1: f64, mu2: f64, v2: f64) -> f64 {
        0.5 * (v1 / v2 - 1.0 + (mu1 - mu2).powi(2) / v2 + (v2 / v1).ln())
    }

    /// `I(N(μ₁,v₁) | N(μ₂,v₂)) = ⅛ E|∇log p − ∇log r|²`.
    pub fn fisher_information(mu1: f64, v1: f64, mu2: f64, v2: f64) -> f64 {
        // ∇log p − ∇log r = c x + d
        let c = 1.0 / v2 - 1.0 / v1;
        let d = mu1 / v1 - mu2 / v2;
        ((c * mu1 + d).powi(2) + c * c * v1) / 8.0
    }

    /// `E_p |u_p − u_r|²` for current velocities `u = μ' + (x − μ) v' / 2v`.
    pub fn kinetic(p: [f64; 4], r: [f64; 4]) -> f64 {
        let [mu1, v1, dmu1, dv1] = p;
        let [mu2, v2, dmu2, dv2] = r;
        let (b1, b2) = (dv1 / (2.0 * v1), dv2 / (2.0 * v2));
        let slope = b1 - b2;
        let offset = (dmu1 - b1 * mu1) - (dmu2 - b2 * mu2);
        (slope * mu1 + offset).powi(2) + slope * slope * v1
    }

    pub fn density(mu: f64, v: f64, x: f64) -> f64 {
        (-(x - mu).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }
}

/// Second-order first derivative on a uniform grid.
pub fn derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    d
}

/// Second-order second derivative on a uniform grid.
pub fn second_derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = dx * dx;
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    d
}

pub fn trapezoid_uniform(f: &[f64], dx: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}
