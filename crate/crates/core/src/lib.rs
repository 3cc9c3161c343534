//! Numerical toolkit for convex cocompact Schottky groups acting on the real line:
//! Möbius maps, symbolic coding, the limit-set partitions, Patterson–Sullivan
//! measures, oscillatory integrals and fractal uncertainty bounds.

pub mod error;
pub mod examples;
pub mod fit;
pub mod fup;
pub mod linalg;
pub mod measure;
pub mod mobius;
pub mod oscillatory;
pub mod schottky;
pub mod symbolic;

pub use error::{Error, Result};
pub use mobius::{ExtendedReal, Interval, MobiusTransform};
pub use schottky::{GroupConfig, Partition, PartitionCell, SchottkyData, ValidationReport};
pub use symbolic::{Alphabet, Letter, Word};
pub use measure::{DiscreteMeasure, TransferMatrix};
