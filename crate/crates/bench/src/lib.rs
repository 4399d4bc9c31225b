//! Fixed instances shared by the criterion benchmarks in `benches/`.

use denseset::datagen::{gen_pancake, gen_planted, PlantedInstance};

pub const DELTA: f64 = 0.5;
pub const GAMMA: f64 = 0.2;

/// Planted instance with `n = 20 d`.
pub fn planted(d: usize, seed: u64) -> PlantedInstance {
    gen_planted(20 * d, d, DELTA, 1.0, 3.0, seed).expect("valid generator parameters")
}

/// Pancake instance with two high-variance directions and `n = 20 d`.
pub fn pancake(d: usize, seed: u64) -> PlantedInstance {
    gen_pancake(20 * d, d, 2, DELTA, seed).expect("valid generator parameters")
}
