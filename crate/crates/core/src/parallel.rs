//! Thread count for the parallel stages.

use crate::error::{Error, Result};

/// Environment variable holding the thread count.
pub const THREADS_VAR: &str = "SDG_THREADS";

/// Reads the thread count from the environment; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_VAR}={v:?} is not a positive integer"
            ))),
        },
    }
}

/// Sets the global rayon pool and the factorization to `n` threads. Must run
/// before any parallel work.
pub fn configure_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}
