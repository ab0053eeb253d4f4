//! Reproducible random streams and deterministic parallel maps.
//!
//! Every path owns two ChaCha8 streams keyed by `(master seed, path index)`:
//! one for the Gaussian innovations and one for the uniforms of the
//! crossing test. Results depend only on those keys, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const CROSSING_STREAM: u64 = 1 << 63;

/// Stream of Gaussian innovations for one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Stream of crossing-test uniforms for one path; step `k` consumes the
/// `k`-th draw whether or not it is needed.
pub fn crossing_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path | CROSSING_STREAM);
    rng
}

/// Maps `f` over `0..n` in parallel, returning results in index order.
/// `threads = None` uses the global pool.
pub fn par_map_indexed<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match threads {
        None => Ok((0..n).into_par_iter().map(&f).collect()),
        Some(0) => Err(Error::Config("thread count must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
        }
    }
}
