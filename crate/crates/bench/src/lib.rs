//! Shared fixtures for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sirrt_core::planner::sample_configuration;
use sirrt_core::{generate_instance, Configuration, GeneratorParams, ProblemInstance};

/// Generated instance with `k` obstacles under the default protocol.
pub fn instance(seed: u64, k: usize) -> ProblemInstance {
    generate_instance(seed, k, &GeneratorParams::default()).expect("generation succeeds")
}

/// `n` configurations drawn uniformly within the robot's limits.
pub fn configurations(instance: &ProblemInstance, n: usize, seed: u64) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_configuration(&mut rng, &instance.scene.robot)).collect()
}
