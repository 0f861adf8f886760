//! Anisotropic Littlewood-Paley analysis on periodic grids.
//!
//! The crate is organised bottom-up:
//! [`dilation`] provides the groups `A_t = t^P` and homogeneous norms,
//! [`grid`] the sampled functions, symbols and FFT convolution,
//! [`partition`] the partition of unity and its dual filter,
//! [`lp_transform`] analysis, synthesis and g-functions,
//! [`maximal`] the maximal operators and weights,
//! [`hardy`] atoms and the norm-equivalence experiment,
//! and [`gfa`] the on-disk array format.

pub mod dilation;
pub mod error;
pub mod gfa;
pub mod grid;
pub mod hardy;
pub mod lp_transform;
pub mod maximal;
pub mod partition;
pub mod util;

pub use dilation::{DilationGroup, ExpMethod, NormPropertyReport};
pub use error::{Error, Result};
pub use grid::{
    convolve, lp_norm, FrequencySymbol, Geometry, GridFunction, PeriodicGrid, Side, SymbolArg, SymbolMeta,
    SymbolRule,
};
pub use hardy::{Atom, AtomReport};
pub use lp_transform::{CalderonMeasure, LPCoefficients, ScaleWindow};
pub use maximal::Weight;
pub use partition::{IntervalCover, PartitionOfUnity};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
