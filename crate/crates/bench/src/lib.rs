//! Shared fixtures for the benchmarks.

use eee_core::game_model::{random_family, RandomGameConfig};
use eee_core::{build_example1, GameSpec, Strategy};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The two-agent example game at coupling `alpha`.
pub fn example1(alpha: f64) -> GameSpec {
    build_example1().interpolate(alpha).expect("alpha in [0,1]")
}

/// The equilibrium strategy of [`example1`] at `alpha = 0.9`.
pub fn example1_sigma_star(spec: &GameSpec) -> Strategy {
    Strategy::constant(spec, &[1, 0]).expect("two agents with two actions")
}

/// The first random coupled game drawn from `seed` with at least
/// `min_states` joint states (up to three agents, dimensions up to three).
pub fn random_game(seed: u64, min_states: usize) -> GameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomGameConfig {
        max_agents: 3,
        max_dim: 3,
        ..RandomGameConfig::default()
    };
    loop {
        let spec = random_family(&mut rng, &cfg).interpolate(1.0).expect("alpha in [0,1]");
        if spec.indexer().expect("small game").size() >= min_states {
            return spec;
        }
    }
}
