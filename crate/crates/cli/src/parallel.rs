use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Maps `f` over `items` on `jobs` worker threads. Results come back in item
/// order whatever the completion order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}
