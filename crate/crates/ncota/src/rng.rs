//! Deterministic random-stream derivation.
//!
//! Every random draw in a simulation is taken from a ChaCha stream derived
//! from a master seed plus a label `(trial, iteration, node, purpose)`.
//! Streams with different labels are statistically independent, and the same
//! label always reproduces the same stream regardless of execution order.
//! This is what makes trial-level parallelism byte-reproducible: each worker
//! derives exactly the streams it needs instead of sharing a mutable RNG.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Each variant gets a disjoint label
/// space so that, e.g., noise draws can never collide with fading draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Node and reflector positions.
    Deployment,
    /// Synthetic average-gain matrices.
    Gains,
    /// Fading coefficients of one node pair (label the pair, not a node).
    Fading,
    /// Per-transmitter random phases.
    Phase,
    /// Per-node transmit/receive coin flips.
    TxDecision,
    /// Network-wide shared circular shift of the energy codebook.
    Shift,
    /// Per-receiver additive channel noise.
    Noise,
    /// Per-node minibatch sampling.
    Minibatch,
    /// Per-node quantizer dither (baseline algorithms).
    Dither,
    /// Synthetic dataset generation (trial-independent).
    Data,
    /// Assignment of data samples to nodes.
    LabelAssign,
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Deployment => 1,
            Purpose::Gains => 2,
            Purpose::Fading => 3,
            Purpose::Phase => 4,
            Purpose::TxDecision => 5,
            Purpose::Shift => 6,
            Purpose::Noise => 7,
            Purpose::Minibatch => 8,
            Purpose::Dither => 9,
            Purpose::Data => 10,
            Purpose::LabelAssign => 11,
        }
    }
}

/// Label of one derived stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub trial: u64,
    pub iteration: u64,
    pub node: u64,
    pub purpose: Purpose,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the ChaCha stream for `key` under `master`.
///
/// The 256-bit ChaCha key is filled by a splitmix64 chain that absorbs the
/// master seed and every label field, so distinct labels yield distinct keys
/// except with negligible (2^-256-scale) probability.
pub fn stream(master: u64, key: StreamKey) -> ChaCha8Rng {
    let mut state = master;
    for field in [key.trial, key.iteration, key.node, key.purpose.code()] {
        state ^= splitmix64(&mut state) ^ field.wrapping_mul(0xd6e8_feb8_6659_fd93);
        state = state.rotate_left(17);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stream for a per-node draw at one iteration.
pub fn node_stream(master: u64, trial: u64, iteration: u64, node: usize, purpose: Purpose) -> ChaCha8Rng {
    stream(master, StreamKey { trial, iteration, node: node as u64, purpose })
}

/// Stream shared by the unordered node pair `{i, j}`, used for reciprocal
/// channel draws (the coefficient from i to j equals the one from j to i).
pub fn pair_stream(master: u64, trial: u64, iteration: u64, i: usize, j: usize, n: usize, purpose: Purpose) -> ChaCha8Rng {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let pair = (a * n + b) as u64;
    stream(master, StreamKey { trial, iteration, node: pair, purpose })
}
