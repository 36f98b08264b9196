//! Seeded random streams.
//!
//! Every run is driven by one `u64` seed. Independent streams are carved out
//! of it with ChaCha's 64-bit stream counter: the top byte names a [`Lane`]
//! (what the stream is used for) and the low 56 bits carry an index, usually
//! the cell index of a sweep. A stream depends only on `(seed, lane, index)`,
//! never on the order in which streams are created, so a parallel sweep
//! reproduces a serial one bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Lane {
    /// Synthetic problem data (design matrices, targets, centers).
    ProblemData = 1,
    /// Gradient noise fed to a solver run.
    GradientNoise = 2,
    /// Monte-Carlo estimation of clipped moments.
    Estimation = 3,
    /// Probe points and other auxiliary draws.
    Auxiliary = 4,
}

const INDEX_BITS: u32 = 56;

pub fn stream(seed: u64, lane: Lane, index: u64) -> StreamRng {
    assert!(
        index < (1u64 << INDEX_BITS),
        "stream index {index} exceeds 2^56"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((lane as u64) << INDEX_BITS) | index);
    rng
}
