//! Experiment configuration. Unknown keys are rejected; defaults are filled
//! in on load so the resolved config can be written back verbatim.

use std::path::Path;

use magkit::branching::ScheduleVariant;
use magkit::dynamics::{ClockKind, KappaSchedule};
use magkit::kmap::{DEFAULT_K_MAX, DEFAULT_REL_TOL};
use magkit::{MagError, Result, SourceSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    KmapDynamics,
    MagLimit,
    SurfingSde,
    HeatPaths,
    Branching,
    EntropicChecks,
    IdentitySuite,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::KmapDynamics => "kmap-dynamics",
            Kind::MagLimit => "mag-limit",
            Kind::SurfingSde => "surfing-sde",
            Kind::HeatPaths => "heat-paths",
            Kind::Branching => "branching",
            Kind::EntropicChecks => "entropic-checks",
            Kind::IdentitySuite => "identity-suite",
        }
    }

    pub fn clock(self) -> ClockKind {
        match self {
            Kind::KmapDynamics | Kind::MagLimit | Kind::IdentitySuite => ClockKind::T,
            _ => ClockKind::S,
        }
    }

    fn needs_epsilon(self) -> bool {
        !matches!(self, Kind::MagLimit | Kind::IdentitySuite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sources {
    Points(Vec<Vec<f64>>),
    /// `"random:<seed>,<spread>"`.
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub d: usize,
    pub k: usize,
    pub sources: Sources,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: KappaSchedule,
}

fn default_kappa() -> KappaSchedule {
    KappaSchedule::Power
}

impl Default for Physics {
    fn default() -> Self {
        Self { epsilon: None, eta: 0.0, kappa: default_kappa() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    #[serde(default)]
    pub clock: Option<ClockKind>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub s0: Option<f64>,
    #[serde(default)]
    pub s1: Option<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_h() -> f64 {
    0.01
}

impl Default for Time {
    fn default() -> Self {
        Self { clock: None, t0: None, t1: None, s0: None, s1: None, h: default_h() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Multiplies every finite-difference step of the check suites.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}
fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}
fn default_fd_step() -> f64 {
    1.0
}

impl Default for Numerics {
    fn default() -> Self {
        Self { k_max: default_k_max(), rel_tol: default_rel_tol(), fd_step: default_fd_step() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branching {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Defaults to `4 r`.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_m0")]
    pub m0: f64,
    #[serde(default = "default_variant")]
    pub variant: ScheduleVariant,
    /// Defaults to the dimension-dependent table.
    #[serde(default)]
    pub exponents: Option<(f64, f64, f64)>,
}

fn default_n() -> usize {
    200
}
fn default_m0() -> f64 {
    1.0
}
fn default_variant() -> ScheduleVariant {
    ScheduleVariant::Increasing
}

impl Default for Branching {
    fn default() -> Self {
        Self { n: default_n(), r0: None, m0: default_m0(), variant: default_variant(), exponents: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
    #[serde(default = "default_points")]
    pub n: usize,
}

fn default_lo() -> f64 {
    -10.0
}
fn default_hi() -> f64 {
    10.0
}
fn default_points() -> usize {
    1025
}

impl Default for Grid {
    fn default() -> Self {
        Self { lo: default_lo(), hi: default_hi(), n: default_points() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "magkit-run".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub problem: Problem,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub time: Time,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: Option<Initial>,
    #[serde(default)]
    pub paths: Option<Paths>,
    #[serde(default)]
    pub branching: Option<Branching>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub output: Output,
}

fn invalid<T>(field: &str, msg: impl std::fmt::Display) -> Result<T> {
    Err(MagError::Validation(format!("{field}: {msg}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            MagError::Validation(if path == "." {
                format!("config: {}", e.inner())
            } else {
                format!("{path}: {}", e.inner())
            })
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MagError::Validation(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills kind-dependent defaults and checks cross-field constraints.
    fn resolve(&mut self) -> Result<()> {
        let kind = self.kind;
        if kind.needs_epsilon() {
            match self.physics.epsilon {
                None => return invalid("physics.epsilon", format!("required for kind {}", kind.name())),
                Some(e) if !(e > 0.0 && e.is_finite()) => {
                    return invalid("physics.epsilon", format!("must be positive, got {e}"))
                }
                _ => {}
            }
        }
        if !(self.physics.eta >= 0.0) {
            return invalid("physics.eta", "must be nonnegative");
        }
        let clock = kind.clock();
        match self.time.clock {
            Some(c) if c != clock => {
                return invalid(
                    "time.clock",
                    format!("kind {} runs on the {} clock", kind.name(), clock.name()),
                )
            }
            _ => self.time.clock = Some(clock),
        }
        match clock {
            ClockKind::T => {
                if self.time.s0.is_some() || self.time.s1.is_some() {
                    return invalid("time", "s0/s1 given for a t-clock kind; use t0/t1");
                }
                let t0 = *self.time.t0.get_or_insert(0.0);
                let t1 = *self.time.t1.get_or_insert(1.0);
                if !(t1 > t0) {
                    return invalid("time.t1", "must exceed time.t0");
                }
            }
            ClockKind::S => {
                if self.time.t0.is_some() || self.time.t1.is_some() {
                    return invalid("time", "t0/t1 given for an s-clock kind; use s0/s1");
                }
                let default_s0 = if kind == Kind::HeatPaths { 0.0 } else { 0.25 };
                let s0 = *self.time.s0.get_or_insert(default_s0);
                let s1 = *self.time.s1.get_or_insert(0.5);
                if !(s0 >= 0.0) || !(s1 > s0) {
                    return invalid("time.s1", "need 0 ≤ s0 < s1");
                }
            }
        }
        if !(self.time.h > 0.0 && self.time.h.is_finite()) {
            return invalid("time.h", "must be positive");
        }
        if !(self.numerics.rel_tol >= 0.0) {
            return invalid("numerics.rel_tol", "must be nonnegative");
        }
        if !(self.numerics.fd_step > 0.0) {
            return invalid("numerics.fd_step", "must be positive");
        }
        if self.problem.d == 0 || self.problem.k == 0 {
            return invalid("problem", "d and k must be at least 1");
        }
        if let Sources::Points(p) = &self.problem.sources {
            if p.len() != self.problem.k || p.iter().any(|x| x.len() != self.problem.d) {
                return invalid("problem.sources", format!("expected {} points in R^{}", self.problem.k, self.problem.d));
            }
        }
        match kind {
            Kind::HeatPaths => {
                let paths = self.paths.get_or_insert(Paths { count: 1 });
                if paths.count == 0 {
                    return invalid("paths.count", "must be at least 1");
                }
            }
            Kind::Branching => {
                let b = self.branching.get_or_insert_with(Branching::default);
                if b.n == 0 {
                    return invalid("branching.n", "must be at least 1");
                }
            }
            Kind::EntropicChecks => {
                self.grid.get_or_insert_with(Grid::default);
            }
            _ => {}
        }
        if self.output.formats.is_empty() {
            return invalid("output.formats", "must list at least one of csv, json, svg");
        }
        Ok(())
    }

    pub fn sources(&self) -> Result<SourceSet> {
        let (d, k) = (self.problem.d, self.problem.k);
        match &self.problem.sources {
            Sources::Points(p) => SourceSet::new(p.clone()),
            Sources::Spec(s) => {
                let parsed = s.strip_prefix("random:").and_then(|rest| {
                    let (a, b) = rest.split_once(',')?;
                    Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<f64>().ok()?))
                });
                match parsed {
                    Some((seed, spread)) => SourceSet::random(d, k, seed, spread),
                    None => invalid("problem.sources", format!("expected \"random:<seed>,<spread>\", got {s:?}")),
                }
            }
        }
        .map_err(|e| match e {
            MagError::Validation(m) if !m.starts_with("problem.") => {
                MagError::Validation(format!("problem.sources: {m}"))
            }
            e => e,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.physics.epsilon.unwrap_or(1.0)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// `(start, end)` on the kind's clock.
    pub fn horizon(&self) -> (f64, f64) {
        match self.kind.clock() {
            ClockKind::T => (self.time.t0.unwrap(), self.time.t1.unwrap()),
            ClockKind::S => (self.time.s0.unwrap(), self.time.s1.unwrap()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"kind":"heat-paths","problem":{"d":1,"k":1,"sources":[[0.0]]},"physics":{"epsilon":0.5}}"#;

    #[test]
    fn defaults_resolved() {
        let c = ExperimentConfig::from_json(MIN).unwrap();
        assert_eq!(c.time.clock, Some(ClockKind::S));
        assert_eq!(c.horizon(), (0.0, 0.5));
        assert_eq!(c.paths.as_ref().unwrap().count, 1);
    }

    #[test]
    fn unknown_key_named() {
        let text = MIN.replace("\"epsilon\":0.5", "\"epsilon\":0.5,\"epsilonn\":1");
        match ExperimentConfig::from_json(&text) {
            Err(MagError::Validation(m)) => assert!(m.contains("physics") && m.contains("epsilonn"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_epsilon_named() {
        let text = MIN.replace("\"physics\":{\"epsilon\":0.5}", "\"physics\":{}");
        match ExperimentConfig::from_json(&text) {
            Err(MagError::Validation(m)) => assert!(m.contains("physics.epsilon"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_sources() {
        let text = MIN.replace("[[0.0]]", "\"random:3,2.0\"");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.sources().unwrap().k(), 1);
        let bad = MIN.replace("[[0.0]]", "\"random:x\"");
        assert!(ExperimentConfig::from_json(&bad).unwrap().sources().is_err());
    }
}
