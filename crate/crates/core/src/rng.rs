use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for sub-stream `index` of purpose `stream`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(master ^ mix(stream)) ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

pub(crate) mod streams {
    pub const FOLDS: u64 = 1;
    pub const FOLD_RUN: u64 = 2;
    pub const BATCHES: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SYNTH: u64 = 5;
}
