use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for `seed`, with an independent stream per `stream` id
/// (one per tree, per class, per purpose).
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
