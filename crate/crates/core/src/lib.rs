//! Acoustic-to-articulatory inversion.
//!
//! The pipeline turns 16 kHz speech into 429-dimensional context-stacked
//! MFCC vectors, turns EMA sensor recordings into 16 smoothed and normalized
//! articulatory channels, and learns the mapping with a dense + stacked
//! BiLSTM network followed by a windowed-sinc smoothing convolution.

pub mod corpus;
pub mod dsp;
pub mod ema;
pub mod error;
pub mod frontend;
pub mod metrics;
pub mod net;
pub mod train;

pub use error::{Error, Result};
