//! Forward model of an SDR capture: multipath channel, gain/offset/CFO
//! distortion, receiver-side block bursts, pulse interference and AWGN.
//!
//! Every random draw comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded
//! with `seed_from_u64(cfg.seed)`. Each artefact class reads its own ChaCha
//! stream, so toggling one class never perturbs the draws of another:
//!
//! | stream | draws                              |
//! |--------|------------------------------------|
//! | 0      | capture alignment offset           |
//! | 1      | burst jitter and ramp coefficients |
//! | 2      | pulse count, positions and shapes  |
//! | 3      | AWGN                               |

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::IqSignal;

pub type SimRng = ChaCha8Rng;

/// Longest injected interference pulse, in samples.
pub const MAX_PULSE_LEN: usize = 32;
const MIN_PULSE_LEN: usize = 4;

const STREAM_ALIGNMENT: u64 = 0;
const STREAM_BURSTS: u64 = 1;
const STREAM_PULSES: u64 = 2;
const STREAM_NOISE: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentConfig {
    /// Full transmit periods following the unaligned capture prefix.
    pub num_periods: usize,
    /// FIR channel, one tap per sample of delay.
    pub channel_taps: Vec<Complex64>,
    pub gain: Complex64,
    /// Transmitter DC offset, added before modulation.
    pub zero_offset: Complex64,
    /// Carrier frequency offset in cycles per sample.
    pub cfo: f64,
    /// Carrier phase offset in radians.
    pub phase: f64,
    /// Nominal spacing between burst starts.
    pub block_season: usize,
    pub block_duration: usize,
    /// Magnitude scale of burst intercepts and of the ramp change over a burst.
    pub block_slope_scale: f64,
    /// Maximum deviation of a burst start from its nominal position.
    pub block_jitter: usize,
    /// Expected pulses per period.
    pub pulse_rate: f64,
    pub pulse_amplitude: f64,
    /// Payload SNR; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            num_periods: 8,
            channel_taps: vec![Complex64::new(1.0, 0.0)],
            gain: Complex64::new(0.8, 0.0),
            zero_offset: Complex64::new(0.05, -0.03),
            cfo: 3.17e-4,
            phase: 0.7,
            block_season: 3000,
            block_duration: 300,
            block_slope_scale: 0.4,
            block_jitter: 20,
            pulse_rate: 0.25,
            pulse_amplitude: 20.0,
            snr_db: 20.0,
            seed: 0,
        }
    }
}

impl ImpairmentConfig {
    /// No artefacts at all: identity channel, unit gain, no noise.
    pub fn clean() -> Self {
        Self {
            gain: Complex64::new(1.0, 0.0),
            zero_offset: Complex64::new(0.0, 0.0),
            cfo: 0.0,
            phase: 0.0,
            block_slope_scale: 0.0,
            pulse_rate: 0.0,
            snr_db: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.num_periods < 4 {
            return bad(format!("need at least 4 periods, got {}", self.num_periods));
        }
        if self.channel_taps.is_empty() {
            return bad("channel needs at least one tap".into());
        }
        if !(self.cfo.abs() < 0.5) {
            return bad(format!("|cfo| must be below 0.5 cycles/sample, got {}", self.cfo));
        }
        if self.block_duration == 0 || self.block_duration + 2 * self.block_jitter >= self.block_season {
            return bad(format!(
                "bursts of {} samples with jitter {} overlap at season {}",
                self.block_duration, self.block_jitter, self.block_season
            ));
        }
        if self.pulse_rate < 0.0 || !self.pulse_rate.is_finite() {
            return bad(format!("pulse rate must be non-negative, got {}", self.pulse_rate));
        }
        if self.snr_db.is_nan() {
            return bad("SNR is NaN".into());
        }
        let finite = [self.phase, self.block_slope_scale, self.pulse_amplitude]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite impairment parameter".into());
        }
        Ok(())
    }
}

/// One injected burst: `c0 + c1 * (t - start)` over `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstRecord {
    pub start: usize,
    pub end: usize,
    pub c0: Complex64,
    pub c1: Complex64,
}

impl BurstRecord {
    pub fn value_at(&self, t: usize) -> Complex64 {
        self.c0 + self.c1 * (t - self.start) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub burst_intervals: Vec<BurstRecord>,
    pub pulse_positions: Vec<PulseRecord>,
    pub period_starts: Vec<usize>,
    /// Capture after channel and linear distortion, before additive artefacts.
    pub clean_signal: IqSignal,
    pub config: ImpairmentConfig,
}

impl GroundTruth {
    /// The injected burst contribution as a full-length signal.
    pub fn burst_signal(&self) -> IqSignal {
        render_bursts(&self.burst_intervals, &self.clean_signal)
    }
}

fn render_bursts(bursts: &[BurstRecord], like: &IqSignal) -> IqSignal {
    let mut out = vec![Complex64::new(0.0, 0.0); like.len()];
    for b in bursts {
        for (t, v) in out.iter_mut().enumerate().take(b.end).skip(b.start) {
            *v += b.value_at(t);
        }
    }
    like.with_samples(out)
}

/// Causal FIR filtering, truncated to the input length.
pub fn apply_channel(x: &IqSignal, taps: &[Complex64]) -> Result<IqSignal> {
    if taps.is_empty() {
        return Err(Error::InvalidArgument("channel needs at least one tap".into()));
    }
    let s = x.samples();
    let out = (0..s.len())
        .map(|t| {
            taps.iter()
                .enumerate()
                .take(t + 1)
                .map(|(k, h)| h * s[t - k])
                .sum()
        })
        .collect();
    Ok(x.with_samples(out))
}

/// `y[t] = (gain x[t] + zero_offset) exp(i (2 pi cfo t + phase))`.
pub fn apply_linear_distortion(
    x: &IqSignal,
    gain: Complex64,
    zero_offset: Complex64,
    cfo: f64,
    phase: f64,
) -> Result<IqSignal> {
    if !(cfo.abs() < 0.5) {
        return Err(Error::InvalidArgument(format!("|cfo| must be below 0.5, got {cfo}")));
    }
    let out = x
        .samples()
        .iter()
        .enumerate()
        .map(|(t, &v)| (gain * v + zero_offset) * carrier(cfo, phase, t))
        .collect();
    Ok(x.with_samples(out))
}

/// `exp(i (2 pi f t + phase))` with the cycle count reduced before scaling.
pub(crate) fn carrier(f: f64, phase: f64, t: usize) -> Complex64 {
    let cycles = (f * t as f64).fract();
    Complex64::from_polar(1.0, 2.0 * PI * cycles + phase)
}

fn random_phasor<R: Rng + ?Sized>(rng: &mut R, magnitude: f64) -> Complex64 {
    Complex64::from_polar(magnitude, rng.random_range(-PI..PI))
}

/// Adds affine bursts starting near every multiple of the season.
///
/// Intercepts have magnitude uniform in `[0.6, 1] * scale`; the ramp changes
/// by at most `0.4 * scale` over a burst, so a burst never crosses zero.
pub fn inject_block_bursts(
    x: &IqSignal,
    cfg: &ImpairmentConfig,
    rng: &mut SimRng,
) -> Result<(IqSignal, Vec<BurstRecord>)> {
    cfg.validate()?;
    let n = x.len();
    let jitter = cfg.block_jitter as i64;
    let mut records = Vec::new();
    let mut k = 0usize;
    while k * cfg.block_season < n {
        let offset = if jitter > 0 { rng.random_range(-jitter..=jitter) } else { 0 };
        let intercept_mag = cfg.block_slope_scale * rng.random_range(0.6..=1.0);
        let intercept = random_phasor(rng, intercept_mag);
        let change_mag = cfg.block_slope_scale * rng.random_range(0.0..=0.4);
        let change = random_phasor(rng, change_mag);
        let start = (k as i64 * cfg.block_season as i64 + offset).clamp(0, n as i64 - 1) as usize;
        let end = (start + cfg.block_duration).min(n);
        records.push(BurstRecord {
            start,
            end,
            c0: intercept,
            c1: change / cfg.block_duration as f64,
        });
        k += 1;
    }
    let bursts = render_bursts(&records, x);
    let out = x.samples().iter().zip(bursts.samples()).map(|(a, b)| a + b).collect();
    Ok((x.with_samples(out), records))
}

/// Adds short tone pulses; the count is Poisson with mean `pulse_rate * num_periods`.
pub fn inject_pulse_interference(
    x: &IqSignal,
    cfg: &ImpairmentConfig,
    rng: &mut SimRng,
) -> Result<(IqSignal, Vec<PulseRecord>)> {
    cfg.validate()?;
    let mean = cfg.pulse_rate * cfg.num_periods as f64;
    if mean == 0.0 || x.len() < MAX_PULSE_LEN {
        return Ok((x.clone(), Vec::new()));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("pulse rate: {e}")))?
        .sample(rng) as usize;
    let mut out = x.samples().to_vec();
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rng.random_range(MIN_PULSE_LEN..=MAX_PULSE_LEN);
        let start = rng.random_range(0..=x.len() - len);
        let freq: f64 = rng.random_range(-0.5..0.5);
        let phase = rng.random_range(-PI..PI);
        for j in 0..len {
            out[start + j] += cfg.pulse_amplitude * carrier(freq, phase, j);
        }
        records.push(PulseRecord { start, len });
    }
    records.sort_by_key(|p| p.start);
    Ok((x.with_samples(out), records))
}

/// Adds circular complex Gaussian noise at `snr_db` relative to the power of `x`.
pub fn add_awgn(x: &IqSignal, snr_db: f64, rng: &mut SimRng) -> Result<IqSignal> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    let power = x.power();
    if power <= 0.0 {
        return Err(Error::DegenerateSignal("SNR is undefined for a zero-energy signal".into()));
    }
    Ok(add_noise_power(x, power / 10f64.powf(snr_db / 10.0), rng))
}

pub(crate) fn add_noise_power(x: &IqSignal, noise_power: f64, rng: &mut SimRng) -> IqSignal {
    let sigma = (noise_power / 2.0).sqrt();
    let out = x
        .samples()
        .iter()
        .map(|&v| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v + Complex64::new(re, im) * sigma
        })
        .collect();
    x.with_samples(out)
}

/// Synthesises a receiver capture of the periodically repeated `x_test`.
///
/// The capture begins at a random phase of the period (a partial period
/// prefix), then holds `num_periods` full periods. Noise power is set from
/// the payload before bursts and pulses are added.
pub fn simulate(x_test: &IqSignal, cfg: &ImpairmentConfig) -> Result<(IqSignal, GroundTruth)> {
    cfg.validate()?;
    if x_test.is_empty() {
        return Err(Error::DegenerateSignal("empty test signal".into()));
    }
    let period = x_test.len();
    let offset = stream_rng(cfg.seed, STREAM_ALIGNMENT).random_range(0..period);
    let len = offset + cfg.num_periods * period;
    let tx = x_test.samples();
    let tiled: Vec<Complex64> = (0..len).map(|j| tx[(j + period - offset) % period]).collect();
    let tiled = x_test.with_samples(tiled);

    let received = apply_channel(&tiled, &cfg.channel_taps)?;
    let clean = apply_linear_distortion(&received, cfg.gain, cfg.zero_offset, cfg.cfo, cfg.phase)?;

    let (with_bursts, bursts) = inject_block_bursts(&clean, cfg, &mut stream_rng(cfg.seed, STREAM_BURSTS))?;
    let (with_pulses, pulses) =
        inject_pulse_interference(&with_bursts, cfg, &mut stream_rng(cfg.seed, STREAM_PULSES))?;
    let x_rec = if cfg.snr_db == f64::INFINITY {
        with_pulses
    } else {
        let power = clean.power();
        if power <= 0.0 {
            return Err(Error::DegenerateSignal("SNR is undefined for a zero-energy payload".into()));
        }
        let noise_power = power / 10f64.powf(cfg.snr_db / 10.0);
        add_noise_power(&with_pulses, noise_power, &mut stream_rng(cfg.seed, STREAM_NOISE))
    };

    let truth = GroundTruth {
        burst_intervals: bursts,
        pulse_positions: pulses,
        period_starts: (0..cfg.num_periods).map(|k| offset + k * period).collect(),
        clean_signal: clean,
        config: cfg.clone(),
    };
    Ok((x_rec, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ramp(n: usize) -> IqSignal {
        IqSignal::new((0..n).map(|t| c(t as f64 * 0.1, 1.0 - t as f64 * 0.05)).collect(), 1.0).unwrap()
    }

    fn noise_signal(n: usize, seed: u64) -> IqSignal {
        let mut rng = stream_rng(seed, 9);
        let v = (0..n)
            .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        IqSignal::new(v, 1.0).unwrap()
    }

    #[test]
    fn channel_identity_delay_and_brute_force() {
        let x = ramp(16);
        assert_eq!(apply_channel(&x, &[c(1.0, 0.0)]).unwrap(), x);
        let d = apply_channel(&x, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(d.samples()[0], c(0.0, 0.0));
        assert_eq!(&d.samples()[1..], &x.samples()[..15]);

        let x = noise_signal(50, 1);
        let taps = [c(1.0, 0.0), c(0.0, 0.5)];
        let y = apply_channel(&x, &taps).unwrap();
        let s = x.samples();
        for t in 0..50 {
            let mut acc = taps[0] * s[t];
            if t >= 1 {
                acc += taps[1] * s[t - 1];
            }
            assert!((y.samples()[t] - acc).norm() < 1e-12);
        }
        assert!(apply_channel(&x, &[]).is_err());
    }

    #[test]
    fn linear_distortion_cases() {
        let x = ramp(40);
        let y = apply_linear_distortion(&x, c(1.0, 0.0), c(0.0, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(y, x);
        let y = apply_linear_distortion(&x, c(1.0, 0.0), c(0.0, 0.0), 0.0, PI).unwrap();
        for (a, b) in y.samples().iter().zip(x.samples()) {
            assert!((a + b).norm() < 1e-12);
        }
        let (g, b, f, p) = (c(0.0, 2.0), c(0.1, 0.0), 1e-4, 0.3);
        let y = apply_linear_distortion(&x, g, b, f, p).unwrap();
        for (t, (out, inp)) in y.samples().iter().zip(x.samples()).enumerate() {
            let expect = (g * inp + b) * Complex64::new(0.0, 2.0 * PI * f * t as f64 + p).exp();
            assert!((out - expect).norm() < 1e-12);
        }
        assert!(apply_linear_distortion(&x, g, b, 0.5, 0.0).is_err());
    }

    #[test]
    fn bursts_disabled_leave_signal_unchanged() {
        let x = ramp(5000);
        let cfg = ImpairmentConfig { block_slope_scale: 0.0, ..Default::default() };
        let (y, recs) = inject_block_bursts(&x, &cfg, &mut stream_rng(3, 1)).unwrap();
        assert_eq!(y, x);
        assert!(recs.iter().all(|r| r.c0.norm() == 0.0 && r.c1.norm() == 0.0));
    }

    #[test]
    fn burst_records_follow_the_season() {
        let x = IqSignal::zeros(10 * 1000, 1.0).unwrap();
        let cfg = ImpairmentConfig {
            num_periods: 10,
            block_season: 1000,
            block_duration: 100,
            block_jitter: 15,
            block_slope_scale: 1.0,
            ..Default::default()
        };
        let (y, recs) = inject_block_bursts(&x, &cfg, &mut stream_rng(11, 1)).unwrap();
        assert_eq!(recs.len(), 10);
        for (k, r) in recs.iter().enumerate() {
            assert!((r.start as i64 - 1000 * k as i64).abs() <= 15);
            assert_eq!(r.end - r.start, 100);
        }
        for w in recs.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        // additivity on a zero base signal
        let expect: f64 = recs
            .iter()
            .map(|r| (r.start..r.end).map(|t| r.value_at(t).norm_sqr()).sum::<f64>())
            .sum();
        assert!((y.energy() - expect).abs() < 1e-9 * expect);
        // same seed, same bursts
        let (_, again) = inject_block_bursts(&x, &cfg, &mut stream_rng(11, 1)).unwrap();
        assert_eq!(recs, again);
    }

    #[test]
    fn pulses() {
        let x = ramp(8192 * 4);
        let off = ImpairmentConfig { pulse_rate: 0.0, ..Default::default() };
        let (y, recs) = inject_pulse_interference(&x, &off, &mut stream_rng(1, 2)).unwrap();
        assert_eq!(y, x);
        assert!(recs.is_empty());

        let cfg = ImpairmentConfig { pulse_rate: 2.0, pulse_amplitude: 100.0, ..Default::default() };
        let (y, recs) = inject_pulse_interference(&x, &cfg, &mut stream_rng(1, 2)).unwrap();
        assert!(!recs.is_empty());
        assert!(recs.iter().all(|p| p.len <= MAX_PULSE_LEN && p.len >= 1));
        let max_x = x.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let max_y = y.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_y >= 100.0 - max_x);

        let (y2, recs2) = inject_pulse_interference(&x, &cfg, &mut stream_rng(1, 2)).unwrap();
        assert_eq!(y, y2);
        assert_eq!(recs, recs2);
    }

    #[test]
    fn pulse_count_tracks_rate() {
        let x = IqSignal::zeros(8192 * 8, 1.0).unwrap();
        let cfg = ImpairmentConfig { pulse_rate: 1.5, ..Default::default() };
        let total: usize = (0..200)
            .map(|s| inject_pulse_interference(&x, &cfg, &mut stream_rng(s, 2)).unwrap().1.len())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 12.0).abs() < 1.0, "mean pulse count {mean}");
    }

    #[test]
    fn awgn_power_and_components() {
        let x = IqSignal::new(vec![c(1.0, 0.0); 200_000], 1.0).unwrap();
        assert_eq!(add_awgn(&x, f64::INFINITY, &mut stream_rng(0, 3)).unwrap(), x);
        let y = add_awgn(&x, 0.0, &mut stream_rng(5, 3)).unwrap();
        let noise: Vec<Complex64> = y.samples().iter().zip(x.samples()).map(|(a, b)| a - b).collect();
        let n = noise.len() as f64;
        let p = noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        assert!((p - 1.0).abs() < 0.05, "noise power {p}");
        let pre = noise.iter().map(|v| v.re * v.re).sum::<f64>() / n;
        let pim = noise.iter().map(|v| v.im * v.im).sum::<f64>() / n;
        assert!((pre - 0.5).abs() < 0.025 && (pim - 0.5).abs() < 0.025);
        let zero = IqSignal::zeros(10, 1.0).unwrap();
        assert!(add_awgn(&zero, 10.0, &mut stream_rng(0, 3)).is_err());
    }

    fn small_test_signal() -> IqSignal {
        crate::testsignal::build_sounding_signal(
            &crate::testsignal::TestSignalSpec { n_zc: 31, root: 3, repetitions: 4, period_t: 200 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn clean_simulation_is_aligned_tiling() {
        let x = small_test_signal();
        let cfg = ImpairmentConfig {
            block_season: 150,
            block_duration: 30,
            block_jitter: 5,
            seed: 42,
            ..ImpairmentConfig::clean()
        };
        let (rec, truth) = simulate(&x, &cfg).unwrap();
        let offset = truth.period_starts[0];
        assert!(offset < 200);
        assert_eq!(rec.len(), offset + 8 * 200);
        for (j, v) in rec.samples().iter().enumerate() {
            assert_eq!(*v, x.samples()[(j + 200 - offset) % 200]);
        }
        for w in truth.period_starts.windows(2) {
            assert_eq!(w[1] - w[0], 200);
        }
    }

    #[test]
    fn cfo_only_keeps_amplitude_periodic() {
        let x = small_test_signal();
        let cfg = ImpairmentConfig { cfo: 2e-3, phase: 0.4, seed: 1, ..ImpairmentConfig::clean() };
        let (rec, truth) = simulate(&x, &cfg).unwrap();
        let s = rec.samples();
        let start = truth.period_starts[0];
        let mut phase_moved = false;
        for t in start..s.len() - 200 {
            assert!((s[t].norm() - s[t + 200].norm()).abs() < 1e-12);
            if s[t].norm() > 0.5 && (s[t] - s[t + 200]).norm() > 0.1 {
                phase_moved = true;
            }
        }
        assert!(phase_moved);
    }

    #[test]
    fn simulation_is_deterministic_and_bursts_reconstruct() {
        let x = small_test_signal();
        let cfg = ImpairmentConfig {
            block_season: 150,
            block_duration: 30,
            block_jitter: 5,
            pulse_rate: 1.0,
            seed: 9,
            ..Default::default()
        };
        let (a, ta) = simulate(&x, &cfg).unwrap();
        let (b, tb) = simulate(&x, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);

        let bursts_only = ImpairmentConfig { pulse_rate: 0.0, snr_db: f64::INFINITY, ..cfg };
        let (rec, truth) = simulate(&x, &bursts_only).unwrap();
        let injected = truth.burst_signal();
        for ((r, b), c0) in rec.samples().iter().zip(injected.samples()).zip(truth.clean_signal.samples()) {
            assert!((r - b - c0).norm() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ImpairmentConfig::default().validate().is_ok());
        let few = ImpairmentConfig { num_periods: 3, ..Default::default() };
        assert!(few.validate().is_err());
        let overlap = ImpairmentConfig { block_duration: 2990, ..Default::default() };
        assert!(overlap.validate().is_err());
        let cfo = ImpairmentConfig { cfo: -0.5, ..Default::default() };
        assert!(cfo.validate().is_err());
    }
}
