//! File formats: raw IQ captures, CSV and SVG export, run configuration,
//! ground-truth records and iteration traces.

pub mod config;
pub mod csv;
pub mod iq;
pub mod plot;
pub mod trace;
pub mod truth;

pub use config::RunConfig;
pub use iq::{read_iq, write_iq, IqMeta};

use std::fmt::Display;
use std::path::Path;

use crate::error::Error;

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}
