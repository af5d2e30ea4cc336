//! Fixtures shared by the criterion benchmarks.

use aspot_core::apps::synthetic::scaling_instance;
use aspot_core::{PotInstance, SolverConfig};

/// Instance from the scaling family at size `n`, seeded by `n`.
pub fn bench_instance(n: usize) -> PotInstance {
    scaling_instance(n, n as u64).expect("synthetic instances are valid")
}

/// Fixed-iteration configuration so that timings compare equal work.
pub fn fixed_iterations(iterations: usize) -> SolverConfig {
    SolverConfig {
        epsilon: 0.1,
        gamma_override: Some(1e-3),
        tolerance_override: Some(1e-12),
        max_iterations: iterations,
        log_every: iterations,
        ..Default::default()
    }
}
