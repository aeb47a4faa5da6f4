//! Signal restoration and channel estimation for channel sounding with
//! software defined radios.
//!
//! The crate is organised along the processing chain:
//!
//! * [`signal`] and [`window`]: numeric kernels (DFTs, correlation, smoothing,
//!   Dolph-Chebyshev taper).
//! * [`testsignal`]: Zadoff-Chu sequences and the periodic sounding signal.
//! * [`impairment`]: a seeded forward model of SDR artefacts that doubles as
//!   ground truth for tests.
//! * [`restoration`]: iterative removal of offsets, bursts and interference.
//! * [`channel`]: transfer function, impulse response and power delay profile.
//! * [`io`]: IQ files, CSV/SVG export, configuration and record files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod impairment;
pub mod io;
pub mod restoration;
pub mod signal;
pub mod testsignal;
pub mod window;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use signal::{IqSignal, Spectrum};
