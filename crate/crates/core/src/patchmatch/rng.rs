//! Per-pixel random streams.
//!
//! Each (pass, pixel) pair draws from its own ChaCha stream, so results do
//! not depend on the order in which pixels are processed. Pixels are keyed
//! by their column within a quarter turn: panoramas rolled by a multiple of
//! 90 degrees then see identical draws, and since all random geometry is
//! expressed in each pixel's local tangent frame the whole optimization is
//! equivariant under such rolls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for random initialization.
pub(crate) const INIT_PASS: u64 = 0;

/// Stream for refinement in `iteration` during the pass of `parity_index`.
pub(crate) fn refine_pass(iteration: u32, parity_index: u32) -> u64 {
    1 + 2 * iteration as u64 + parity_index as u64
}

pub(crate) fn pixel_rng(seed: u64, pass: u64, x: u32, y: u32, quarter: Option<u32>) -> ChaCha8Rng {
    let column = match quarter {
        Some(q) => x % q,
        None => x,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((pass << 40) | ((y as u64) << 20) | column as u64);
    rng
}
