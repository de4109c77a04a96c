//! Fixtures shared by the benches.

use basinforge::{PolyMap2, SequenceSpec};
use num_complex::Complex64;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(z/2 + w², w/9)`.
pub fn example_map() -> PolyMap2 {
    PolyMap2::from_terms(&[(1, 0, c(0.5)), (0, 2, c(1.0))], &[(0, 1, c(1.0 / 9.0))])
}

pub fn example_spec() -> SequenceSpec {
    SequenceSpec::constant(&example_map(), 2, 0.1, 0.6)
}

pub fn random_spec(seed: u64) -> SequenceSpec {
    SequenceSpec::random_diagonal(seed, 2, 0.13, 0.5)
}
