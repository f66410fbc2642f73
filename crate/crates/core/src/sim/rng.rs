//! Counter-based random streams: every draw site gets its own generator keyed by
//! `(seed, stream, index)`, so work can be split across threads in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Scene = 1,
    TeacherDetections = 2,
    Anchors = 3,
    EvalScene = 4,
    EvalDetections = 5,
    Labeled = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ index));
    rng.set_stream(stream as u64);
    rng
}
