//! Reproducible random streams for parallel Monte Carlo.
//!
//! Replication `k` of a run seeded with `seed` draws from ChaCha8 keyed by
//! `seed` (expanded with `SeedableRng::seed_from_u64`) on stream number `k`.
//! Streams are independent of evaluation order and worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Identifies the generator and normal sampler recorded in output files.
pub const GENERATOR_ID: &str = "chacha8-seed_from_u64-stream-k/ziggurat-standard-normal";

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MONOSCAN_THREADS";

/// Child stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One standard Gaussian draw.
#[inline]
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Runs `count` replications in parallel, replication `k` on `stream(seed, k)`,
/// and returns the results in replication order.
pub fn replicate<T, F>(seed: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|k| f(&mut stream(seed, k)))
        .collect()
}

/// Installs a global thread pool limited by `MONOSCAN_THREADS`, if set.
/// Returns the limit that was applied.
pub fn configure_threads_from_env() -> Option<usize> {
    let limit = std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()?;
    if limit == 0 {
        return None;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(limit)
        .build_global()
        .ok()
        .map(|_| limit)
}
