//! Seeded, splittable random streams.
//!
//! Every consumer in an experiment (schedule draw, demand path, oracle
//! simulation, each learner) gets its own ChaCha stream keyed by
//! `(replication, consumer)`, so adding or removing one consumer never
//! perturbs another's draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub const CONSUMER_SCHEDULE: u64 = 0;
pub const CONSUMER_DEMAND: u64 = 1;
pub const CONSUMER_ORACLE: u64 = 2;
/// Learner streams are `CONSUMER_AGENT_BASE + algorithm index`.
pub const CONSUMER_AGENT_BASE: u64 = 16;
/// Run blocks (e.g. entries of a segments sweep) occupy disjoint consumer
/// groups: `consumer = block * CONSUMER_GROUP_STRIDE + slot`.
pub const CONSUMER_GROUP_STRIDE: u64 = 32;

const CONSUMERS_PER_REPLICATION: u64 = 1024;

/// Independent stream for one `(replication, consumer)` pair.
pub fn stream_rng(base_seed: u64, replication: u64, consumer: u64) -> StreamRng {
    debug_assert!(consumer < CONSUMERS_PER_REPLICATION);
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream(replication * CONSUMERS_PER_REPLICATION + consumer);
    rng
}
