//! Non-autonomous attracting basins of automorphism sequences of ℂ².
//!
//! The crate computes basins of sequences `(f_n)` that contract uniformly
//! near the origin, builds the conjugacies that carry such a basin onto ℂ²,
//! and approximates entire curves and maps into it:
//!
//! - [`jet2`]: truncated power series and germs of maps ℂ² → ℂ²;
//! - [`autoseq`]: sequence specifications, uniform contraction reports, `σ`;
//! - [`basin`]: orbit membership, exhaustion index, raster slices;
//! - [`normalform`]: lower triangular normal forms and unitary triangularization;
//! - [`trains`]: preparing, selecting, directing and connecting trains, and
//!   evaluation of the resulting candidate biholomorphism;
//! - [`curves`]: disk extension, entire curves and maps, the psh bound.

pub mod autoseq;
pub mod basin;
pub mod curves;
pub mod error;
pub mod jet2;
pub mod normalform;
pub mod point;
pub mod poly;
pub mod trains;
mod util;

pub use autoseq::{SequenceKind, SequenceSpec, StepMap};
pub use error::{Error, Result};
pub use jet2::{Jet2Scalar, JetMap2};
pub use point::Point;
pub use poly::{Poly2, PolyMap2, Series1};
pub use util::NeumaierSum;
