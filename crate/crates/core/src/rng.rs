//! Counter-based splitting of one master seed into independent streams.
//!
//! Every stream is ChaCha8 keyed by `seed_from_u64(master_seed)`; the 64-bit
//! ChaCha stream id is `(purpose << 48) | index`, word position zero. A
//! trajectory's randomness therefore depends only on its index, never on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SCHEME: &str =
    "ChaCha8Rng keyed by seed_from_u64(master_seed); stream id = (purpose << 48) | index; word position 0";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sign = 1,
    InitialPosition = 2,
    InitialPositionSecond = 3,
    Deviation = 4,
    DeviationSecond = 5,
    Synthetic = 6,
}

pub fn stream(master_seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}
