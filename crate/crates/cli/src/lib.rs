//! Command-line front end of `magkit`: configuration, runs, check suites and plots.

pub mod config;
pub mod plot;
pub mod run;
pub mod suites;

use magkit::MagError;

/// Process exit code for a library error.
pub fn exit_code(err: &MagError) -> i32 {
    match err {
        MagError::Validation(_) | MagError::Capability(_) => 1,
        MagError::Numeric { .. } => 2,
        MagError::Invariant(_) => 3,
    }
}
