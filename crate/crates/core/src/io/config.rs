//! Run configuration as plain-text `key=value` lines with `#` comments.
//!
//! Complex values are written `re,im`; channel taps are `;`-separated
//! complex values.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use super::parse_error;
use crate::channel::{DEFAULT_ATTENUATION_DB, DEFAULT_PAD_FACTOR};
use crate::error::{Error, Result};
use crate::impairment::ImpairmentConfig;
use crate::restoration::RestorationConfig;
use crate::testsignal::TestSignalSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub signal: TestSignalSpec,
    pub impairment: ImpairmentConfig,
    pub restoration: RestorationConfig,
    /// Samples per second.
    pub sample_rate: f64,
    /// Informational only.
    pub carrier_freq: f64,
    pub window_attenuation_db: f64,
    pub pad_factor: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            signal: TestSignalSpec::default(),
            impairment: ImpairmentConfig::default(),
            restoration: RestorationConfig::default(),
            sample_rate: 25.6e6,
            carrier_freq: 2.48e9,
            window_attenuation_db: DEFAULT_ATTENUATION_DB,
            pad_factor: DEFAULT_PAD_FACTOR,
        }
    }
}

/// Every key, in the order [`RunConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "n_zc",
    "root",
    "repetitions",
    "period_t",
    "sample_rate",
    "carrier_freq",
    "num_periods",
    "channel_taps",
    "gain",
    "zero_offset",
    "cfo",
    "phase",
    "block_season",
    "block_duration",
    "block_slope_scale",
    "block_jitter",
    "pulse_rate",
    "pulse_amplitude",
    "snr_db",
    "seed",
    "iterations",
    "block_season_init",
    "block_kernel_init",
    "block_duration_init",
    "peak_rel_threshold",
    "block_rel_threshold",
    "outlier_factor",
    "window_attenuation_db",
    "pad_factor",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| Error::Config(format!("{key}={value}: {e}")))
}

fn complex(key: &str, value: &str) -> Result<Complex64> {
    let (re, im) = value.split_once(',').unwrap_or((value, "0"));
    Ok(Complex64::new(num(key, re)?, num(key, im)?))
}

fn fmt_complex(v: Complex64) -> String {
    format!("{:e},{:e}", v.re, v.im)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (s, imp, r) = (&mut self.signal, &mut self.impairment, &mut self.restoration);
        match key {
            "n_zc" => s.n_zc = num(key, value)?,
            "root" => s.root = num(key, value)?,
            "repetitions" => s.repetitions = num(key, value)?,
            "period_t" => s.period_t = num(key, value)?,
            "sample_rate" => self.sample_rate = num(key, value)?,
            "carrier_freq" => self.carrier_freq = num(key, value)?,
            "num_periods" => imp.num_periods = num(key, value)?,
            "channel_taps" => {
                imp.channel_taps = value.split(';').map(|t| complex(key, t)).collect::<Result<_>>()?
            }
            "gain" => imp.gain = complex(key, value)?,
            "zero_offset" => imp.zero_offset = complex(key, value)?,
            "cfo" => imp.cfo = num(key, value)?,
            "phase" => imp.phase = num(key, value)?,
            "block_season" => imp.block_season = num(key, value)?,
            "block_duration" => imp.block_duration = num(key, value)?,
            "block_slope_scale" => imp.block_slope_scale = num(key, value)?,
            "block_jitter" => imp.block_jitter = num(key, value)?,
            "pulse_rate" => imp.pulse_rate = num(key, value)?,
            "pulse_amplitude" => imp.pulse_amplitude = num(key, value)?,
            "snr_db" => imp.snr_db = num(key, value)?,
            "seed" => imp.seed = num(key, value)?,
            "iterations" => r.iterations = num(key, value)?,
            "block_season_init" => r.block_season_init = num(key, value)?,
            "block_kernel_init" => r.block_kernel_init = num(key, value)?,
            "block_duration_init" => r.block_duration_init = num(key, value)?,
            "peak_rel_threshold" => r.peak_rel_threshold = num(key, value)?,
            "block_rel_threshold" => r.block_rel_threshold = num(key, value)?,
            "outlier_factor" => r.outlier_factor = num(key, value)?,
            "window_attenuation_db" => self.window_attenuation_db = num(key, value)?,
            "pad_factor" => self.pad_factor = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let (s, imp, r) = (&self.signal, &self.impairment, &self.restoration);
        Some(match key {
            "n_zc" => s.n_zc.to_string(),
            "root" => s.root.to_string(),
            "repetitions" => s.repetitions.to_string(),
            "period_t" => s.period_t.to_string(),
            "sample_rate" => format!("{:e}", self.sample_rate),
            "carrier_freq" => format!("{:e}", self.carrier_freq),
            "num_periods" => imp.num_periods.to_string(),
            "channel_taps" => imp.channel_taps.iter().map(|t| fmt_complex(*t)).collect::<Vec<_>>().join(";"),
            "gain" => fmt_complex(imp.gain),
            "zero_offset" => fmt_complex(imp.zero_offset),
            "cfo" => format!("{:e}", imp.cfo),
            "phase" => format!("{:e}", imp.phase),
            "block_season" => imp.block_season.to_string(),
            "block_duration" => imp.block_duration.to_string(),
            "block_slope_scale" => format!("{:e}", imp.block_slope_scale),
            "block_jitter" => imp.block_jitter.to_string(),
            "pulse_rate" => format!("{:e}", imp.pulse_rate),
            "pulse_amplitude" => format!("{:e}", imp.pulse_amplitude),
            "snr_db" => format!("{:e}", imp.snr_db),
            "seed" => imp.seed.to_string(),
            "iterations" => r.iterations.to_string(),
            "block_season_init" => r.block_season_init.to_string(),
            "block_kernel_init" => r.block_kernel_init.to_string(),
            "block_duration_init" => r.block_duration_init.to_string(),
            "peak_rel_threshold" => format!("{:e}", r.peak_rel_threshold),
            "block_rel_threshold" => format!("{:e}", r.block_rel_threshold),
            "outlier_factor" => format!("{:e}", r.outlier_factor),
            "window_attenuation_db" => format!("{:e}", self.window_attenuation_db),
            "pad_factor" => self.pad_factor.to_string(),
            _ => return None,
        })
    }

    /// Every key, one per line; parses back to the same configuration.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("listed key")))
            .collect()
    }

    /// Applies the lines of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_error(path, i + 1, "expected key=value"))?;
            self.set(key.trim(), value.trim()).map_err(|e| parse_error(path, i + 1, e))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        self.apply_text(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.impairment.validate()?;
        self.restoration.validate()?;
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::Config(format!("sample_rate must be positive, got {}", self.sample_rate)));
        }
        if !self.carrier_freq.is_finite() {
            return Err(Error::Config("carrier_freq must be finite".into()));
        }
        if !(self.window_attenuation_db > 0.0) || self.pad_factor == 0 {
            return Err(Error::Config("window attenuation and pad factor must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("channel_taps", "1,0;0.5,-0.25;0.2,0").unwrap();
        cfg.set("snr_db", "inf").unwrap();
        cfg.set("cfo", "-1.5e-4").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("cfg")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.to_text().lines().count(), KEYS.len());
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.sample_rate, 25.6e6);
        assert_eq!(cfg.carrier_freq, 2.48e9);
        assert!(cfg.validate().is_ok());
        for k in KEYS {
            assert!(cfg.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn comments_and_errors() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# header\n\nseed = 12 # trailing\n", Path::new("c")).unwrap();
        assert_eq!(cfg.impairment.seed, 12);
        match cfg.apply_text("seed=1\nbogus=3\n", Path::new("c")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(cfg.apply_text("seed\n", Path::new("c")).is_err());
        assert!(cfg.set("gain", "x,1").is_err());
        assert_eq!(RunConfig::default().get("nope"), None);
    }
}
