//! Seeded resampling helpers.
//!
//! All randomness in the crate flows through [`rng_for`], which derives an
//! independent ChaCha stream from a master seed and a string key. Streams do
//! not depend on evaluation order, so parallel and serial runs agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const MIN_REPLICATES: usize = 100;
pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("bootstrap needs at least {MIN_REPLICATES} replicates, got {0}")]
    TooFewReplicates(usize),
}

/// Mean with a symmetric interval, as reported in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatSummary {
    pub mean: f64,
    pub half_width: f64,
    pub replicates: usize,
    pub seed: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for `key` under `master`.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(key.as_bytes())))
}

pub fn rng_for(master: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, key))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Mean of `values`, with half-width equal to the standard deviation of
/// `replicates` resampled means.
pub fn bootstrap(values: &[f64], replicates: usize, seed: u64) -> Result<StatSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if replicates < MIN_REPLICATES {
        return Err(StatsError::TooFewReplicates(replicates));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let means: Vec<f64> = (0..replicates)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    Ok(StatSummary {
        mean: mean(values),
        half_width: std_dev(&means),
        replicates,
        seed,
    })
}
