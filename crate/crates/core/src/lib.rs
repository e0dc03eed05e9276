//! Decompounding a periodic compound Poisson process.
//!
//! The process jumps on the circle `(-1/2, 1/2]` with Lévy density `ν` and
//! is observed at lag `Δ`. The crate covers the forward model, the score
//! operator calculus around it, a wavelet-series prior with an MCMC sampler,
//! a spectral plug-in estimator, and an experiment harness.

pub mod circle;
pub mod error;
pub mod experiments;
pub mod families;
pub mod mcmc;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod score;
pub mod spectral;
pub mod stats;
pub mod wavelets;

pub use circle::{AtomicMeasure, CircleGrid, GridFunction};
pub use error::{Error, Result};
pub use model::{IncrementSample, LevyDensity};
pub use score::{PnuFunction, ScoreOperator};
pub use wavelets::{WaveletBasis, WaveletCoeffs, WaveletFamily};
