//! Binary hyperdimensional computing for prototype-based classification.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! parts of the pipeline:
//!
//! * [`hypervector`]: bit-packed binary hypervectors, XOR binding, fixed-point
//!   accumulators with majority-vote binarization, and level tables.
//! * [`encoder`]: item memory and the two-stage window encoder that maps a
//!   channel-by-feature matrix to one hypervector.
//! * [`learning`]: single-pass, multi-pass, multi-centroid (with reduction and
//!   fine-tuning) and weighted online training over class/centroid models.
//! * [`evaluation`]: label post-processing, episode and duration metrics and
//!   the Wilcoxon signed-rank test.
//! * [`codec`]: the little-endian binary layouts for hypervectors,
//!   accumulators, item memories and models.
//!
//! File IO, feature extraction and the experiment harness live in the
//! `hdc-seizure` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod codec;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod hypervector;
pub mod learning;
pub mod window;

pub use encoder::{Bundling, ItemMemory};
pub use error::{Error, Result};
pub use hypervector::{Accumulator, Hypervector, LevelTable, Sign, Weight};
pub use learning::{Centroid, Model, Strategy, TrainStats};
pub use window::FeatureWindow;

/// Default hypervector dimension.
pub const DEFAULT_DIM: usize = 10_000;
/// Default number of quantization levels.
pub const DEFAULT_NUM_LEVELS: usize = 20;
