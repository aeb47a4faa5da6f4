//! Raw IQ captures: interleaved little-endian `f32` pairs, real part first,
//! with an optional `<file>.meta` sidecar of `key=value` lines.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::parse_error;
use crate::error::{Error, Result};
use crate::signal::IqSignal;

const SAMPLE_BYTES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqMeta {
    pub sample_rate: f64,
    pub carrier_freq: Option<f64>,
    pub len: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Writes the samples as `f32` and the sidecar next to them.
pub fn write_iq(path: &Path, x: &IqSignal, carrier_freq: Option<f64>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for v in x.samples() {
        out.write_all(&(v.re as f32).to_le_bytes())?;
        out.write_all(&(v.im as f32).to_le_bytes())?;
    }
    out.flush()?;
    let meta = IqMeta { sample_rate: x.sample_rate(), carrier_freq, len: x.len() };
    write_meta(&sidecar_path(path), &meta)
}

fn write_meta(path: &Path, meta: &IqMeta) -> Result<()> {
    let mut text = format!("format=cf32_le\nsample_rate={:e}\nlen={}\n", meta.sample_rate, meta.len);
    if let Some(fc) = meta.carrier_freq {
        text.push_str(&format!("carrier_freq={fc:e}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<IqMeta> {
    let text = fs::read_to_string(path)?;
    let mut sample_rate = None;
    let mut carrier_freq = None;
    let mut len = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(path, i + 1, "expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        let num = || value.parse::<f64>().map_err(|e| parse_error(path, i + 1, format!("{key}: {e}")));
        match key {
            "format" if value == "cf32_le" => {}
            "format" => return Err(parse_error(path, i + 1, format!("unsupported format {value}"))),
            "sample_rate" => sample_rate = Some(num()?),
            "carrier_freq" => carrier_freq = Some(num()?),
            "len" => {
                len = Some(value.parse().map_err(|e| parse_error(path, i + 1, format!("len: {e}")))?)
            }
            _ => return Err(parse_error(path, i + 1, format!("unknown key {key}"))),
        }
    }
    Ok(IqMeta {
        sample_rate: sample_rate.ok_or_else(|| parse_error(path, 0, "missing sample_rate"))?,
        carrier_freq,
        len: len.ok_or_else(|| parse_error(path, 0, "missing len"))?,
    })
}

/// Reads a capture. The sample rate comes from `sample_rate` if given,
/// otherwise from the sidecar.
pub fn read_iq(path: &Path, sample_rate: Option<f64>) -> Result<IqSignal> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() {
        return Err(Error::DegenerateSignal(format!("{} holds no samples", path.display())));
    }
    if bytes.len() % SAMPLE_BYTES != 0 {
        return Err(Error::Truncated { path: path.to_path_buf(), bytes: bytes.len() as u64 });
    }
    let rate = match sample_rate {
        Some(r) => r,
        None => {
            let meta = read_meta(&sidecar_path(path))?;
            if meta.len * SAMPLE_BYTES != bytes.len() {
                return Err(parse_error(
                    &sidecar_path(path),
                    0,
                    format!("len {} does not match {} bytes of samples", meta.len, bytes.len()),
                ));
            }
            meta.sample_rate
        }
    };
    let mut samples = Vec::with_capacity(bytes.len() / SAMPLE_BYTES);
    for (index, chunk) in bytes.chunks_exact(SAMPLE_BYTES).enumerate() {
        let re = f32::from_le_bytes(chunk[..4].try_into().expect("4 bytes"));
        let im = f32::from_le_bytes(chunk[4..].try_into().expect("4 bytes"));
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        samples.push(Complex64::new(re as f64, im as f64));
    }
    IqSignal::new(samples, rate)
}
