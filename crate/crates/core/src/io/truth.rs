//! Ground-truth record of a simulated capture.
//!
//! One item per line: `period_start=t`, `burst=start,end,c0_re,c0_im,c1_re,c1_im`,
//! `pulse=start,len`, and `config.<key>=value` for the impairment settings.
//! Clean-signal samples are not stored.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::config::RunConfig;
use super::parse_error;
use crate::error::Result;
use crate::impairment::{BurstRecord, GroundTruth, ImpairmentConfig, PulseRecord};

const IMPAIRMENT_KEYS: &[&str] = &[
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
];

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub period_starts: Vec<usize>,
    pub bursts: Vec<BurstRecord>,
    pub pulses: Vec<PulseRecord>,
    pub config: ImpairmentConfig,
}

impl From<&GroundTruth> for TruthRecord {
    fn from(t: &GroundTruth) -> Self {
        Self {
            period_starts: t.period_starts.clone(),
            bursts: t.burst_intervals.clone(),
            pulses: t.pulse_positions.clone(),
            config: t.config.clone(),
        }
    }
}

pub fn format_truth(t: &TruthRecord) -> String {
    let mut out = String::from("# ground truth\n");
    let run = RunConfig { impairment: t.config.clone(), ..RunConfig::default() };
    for k in IMPAIRMENT_KEYS {
        out.push_str(&format!("config.{k}={}\n", run.get(k).expect("impairment key")));
    }
    for s in &t.period_starts {
        out.push_str(&format!("period_start={s}\n"));
    }
    for b in &t.bursts {
        out.push_str(&format!(
            "burst={},{},{:e},{:e},{:e},{:e}\n",
            b.start, b.end, b.c0.re, b.c0.im, b.c1.re, b.c1.im
        ));
    }
    for p in &t.pulses {
        out.push_str(&format!("pulse={},{}\n", p.start, p.len));
    }
    out
}

pub fn write_truth(path: &Path, t: &TruthRecord) -> Result<()> {
    fs::write(path, format_truth(t))?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<TruthRecord> {
    let text = fs::read_to_string(path)?;
    let mut run = RunConfig::default();
    let mut rec = TruthRecord {
        period_starts: Vec::new(),
        bursts: Vec::new(),
        pulses: Vec::new(),
        config: ImpairmentConfig::default(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| parse_error(path, i + 1, m);
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value"))?;
        let fields: Vec<&str> = value.split(',').map(str::trim).collect();
        let int = |k: usize| fields.get(k).and_then(|f| f.parse::<usize>().ok()).ok_or_else(|| err("bad integer"));
        let real = |k: usize| fields.get(k).and_then(|f| f.parse::<f64>().ok()).ok_or_else(|| err("bad number"));
        match key.trim() {
            "period_start" => rec.period_starts.push(int(0)?),
            "burst" if fields.len() == 6 => rec.bursts.push(BurstRecord {
                start: int(0)?,
                end: int(1)?,
                c0: Complex64::new(real(2)?, real(3)?),
                c1: Complex64::new(real(4)?, real(5)?),
            }),
            "pulse" if fields.len() == 2 => rec.pulses.push(PulseRecord { start: int(0)?, len: int(1)? }),
            k => match k.strip_prefix("config.") {
                Some(name) if IMPAIRMENT_KEYS.contains(&name) => {
                    run.set(name, value.trim()).map_err(|e| parse_error(path, i + 1, e))?
                }
                _ => return Err(err(&format!("unexpected entry {k}"))),
            },
        }
    }
    rec.config = run.impairment;
    Ok(rec)
}
