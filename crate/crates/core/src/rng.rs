//! Named, independently seeded random streams.
//!
//! Every trial draws from several streams (graph construction, reward model,
//! policy choices, decay events, agent ordering). Each stream is seeded from a
//! stable hash of `(master_seed, trial_index, stream name)` so that changing the
//! draws consumed by one stream never shifts the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used everywhere in the simulator.
pub type SimRng = ChaCha8Rng;

/// The named per-trial streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Graph,
    Rewards,
    Policy,
    Decay,
    Permutation,
}

impl Stream {
    pub fn name(self) -> &'static str {
        match self {
            Stream::Graph => "graph",
            Stream::Rewards => "rewards",
            Stream::Policy => "policy",
            Stream::Decay => "decay",
            Stream::Permutation => "permutation",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a, stable across platforms and releases (unlike std's hasher).
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Stable seed for one named stream of one trial.
pub fn derive_seed(master_seed: u64, trial_index: u64, stream: &str) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ trial_index);
    splitmix64(h ^ fnv1a(stream.as_bytes()))
}

/// Builds the RNG for `stream` of trial `trial_index`.
pub fn stream_rng(master_seed: u64, trial_index: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master_seed, trial_index, stream.name()))
}
