//! `magkit`: a desk-scale laboratory for Monge-Ampère gravitation.
//!
//! The crate is organised bottom-up:
//!
//! * [`kmap`]: geometry of the permutation orbit `S = {x^σ}` of `k` source
//!   points in `R^d`, nearest-permutation projections, tie sets, the
//!   minimal-norm selection `proj°_S` and the potentials `Φ`, `Π_S`.
//! * [`heatflow`]: closed-form fields of the Gaussian-mixture heat flow
//!   (soft assignments, current velocities, Jacobian, quantum potential,
//!   force field and the `A*` diagnostics).
//! * [`dynamics`]: Newton-equation integrators, the heat and surfing
//!   diffusions, action functionals and the `s = e^{2t}` time change.
//! * [`branching`]: the branching empirical process with almost
//!   deterministic newcomer selection and exact Wasserstein diagnostics.
//! * [`entropic`]: 1D grid evaluators for relative entropy, Fisher
//!   information, quantum potentials, rate functionals and Madelung residuals.
//!
//! Supporting solvers live in [`assignment`], [`minnorm`] and [`transport`].

pub mod assignment;
pub mod branching;
pub mod dynamics;
pub mod entropic;
pub mod error;
pub mod heatflow;
pub mod io;
pub mod kmap;
pub mod minnorm;
pub mod transport;

pub use error::{MagError, Result};
pub use kmap::{KMapping, PermutationOrbit, SourceSet, TieSet};
