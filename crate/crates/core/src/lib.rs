//! Baseband library for OFDM systems that mix several subcarrier numerologies
//! inside one carrier.
//!
//! The crate provides:
//!
//! - [`waveform`]: numerology planning, subband modulation/analysis operators,
//!   and QPSK symbol sources on the least-common-multiple signal grid;
//! - [`clipfilter`]: magnitude clipping, the classical iterative clip-and-filter
//!   step, its noise-shaping variant that cannot leak between subbands, and
//!   per-subband filtered composition;
//! - [`admm`]: splitting solvers that minimize error-vector magnitude under a
//!   hard peak constraint, with fixed or per-sweep-recomputed clip levels, plus
//!   windowed drop-in operators;
//! - [`metrics`]: peak-to-average power, CCDF, EVM, averaged periodograms, and
//!   a solid-state amplifier model;
//! - [`harness`]: a line-oriented config format, experiment presets, a
//!   deterministic parallel runner, and CSV/JSON result emission;
//! - [`oracle`]: dense matrix realizations of every operator for small-grid
//!   verification.

pub mod admm;
pub mod clipfilter;
pub mod error;
mod fft;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod transform;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use waveform::{NumerologyPlan, SubbandSymbols, TimeSignal};
