//! Seed derivation for independent, order-free RNG streams.
//!
//! Every consumer of randomness (topology generation, scenario setup,
//! each agent, each Monte-Carlo trial) gets its own stream derived from
//! the master seed and a stream index. Streams are random-access, so
//! results do not depend on the order in which workers touch them.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_TOPOLOGY: u64 = 0;
pub(crate) const STREAM_SETUP: u64 = 1;
/// Agent `k` draws from stream `STREAM_AGENT_BASE + k`.
pub(crate) const STREAM_AGENT_BASE: u64 = 0x100;
/// Base for the per-agent environment streams that drive observation
/// draws (inputs and noise), kept separate from the agents' own decision
/// streams so that world randomness and agent randomness never interleave.
pub(crate) const STREAM_ENV_BASE: u64 = 0x8000_0000;
/// Monte-Carlo trial `i` draws from stream `STREAM_TRIAL_BASE + i`.
pub(crate) const STREAM_TRIAL_BASE: u64 = 0x1_0000_0000;

/// splitmix64 finalizer; a well-mixed 64-bit permutation step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream index into an independent seed.
pub(crate) fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Fresh generator for the given stream of a master seed.
pub(crate) fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
