//! Experiments and verification suites on top of `mop-core`: a JSON run
//! configuration, CSV/JSON emitters for figures and tables, and named
//! invariant suites with pass/fail reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suites;

pub use config::{Mode, Orientation, RunConfig};
pub use error::{CliError, ConfigError};

/// Install the global rayon pool, sized by `MOP_THREADS` when set.
pub fn init_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("MOP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::Invalid(format!("MOP_THREADS must be a positive integer, got {raw:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
