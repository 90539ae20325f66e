//! Seed splitting.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by
//! `seed ^ stream_id`, with the ChaCha stream number set to the step index.
//! A given `(seed, stream_id, t)` therefore always yields the same draws,
//! whatever order (or thread) the steps are generated in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Loss sequence of the toy problem.
pub const TOY_LOSS: u64 = 0x746f_795f_6c6f_7373;
/// Permutation targets of the doubly-stochastic problem.
pub const PERMUTATION_LOSS: u64 = 0x7065_726d_5f6c_6f73;
/// Noise of the synthetic demand fixture.
pub const DEMAND_NOISE: u64 = 0x6465_6d61_6e64_5f6e;

pub fn stream_rng(seed: u64, stream_id: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream_id);
    rng.set_stream(t);
    rng
}
