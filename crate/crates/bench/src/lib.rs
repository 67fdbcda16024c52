//! Shared fixtures for the criterion benchmarks.

use awdpd_core::sim::generate_rep;
use awdpd_core::{Coefficients, Dataset, SimScenario};

/// Replication 0 of the default clean scenario with seed 1.
pub fn scenario(n: usize, k: usize) -> (Dataset, Coefficients) {
    let mut s = SimScenario::new(n, k).expect("k >= 5");
    s.seed = 1;
    generate_rep(&s, 0).expect("valid scenario")
}
