//! Transmit-side waveforms: Zadoff-Chu sequences, the four-repetition
//! sounding signal and the rectangular restoration probe.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::IqSignal;

/// Parameters of the periodic sounding signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSignalSpec {
    /// Zadoff-Chu length, prime.
    pub n_zc: usize,
    /// Root index, coprime to `n_zc`.
    pub root: usize,
    /// Number of back-to-back sequence copies at the start of each period.
    pub repetitions: usize,
    /// Samples per transmitted period.
    pub period_t: usize,
}

impl Default for TestSignalSpec {
    fn default() -> Self {
        Self {
            n_zc: 1021,
            root: 25,
            repetitions: 4,
            period_t: 8192,
        }
    }
}

impl TestSignalSpec {
    pub fn validate(&self) -> Result<()> {
        check_zc_params(self.n_zc, self.root)?;
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be positive".into()));
        }
        if self.period_t < self.repetitions * self.n_zc {
            return Err(Error::InvalidArgument(format!(
                "period {} shorter than {} repetitions of {}",
                self.period_t, self.repetitions, self.n_zc
            )));
        }
        Ok(())
    }
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_zc_params(n_zc: usize, root: usize) -> Result<()> {
    if !is_prime(n_zc) {
        return Err(Error::InvalidArgument(format!("sequence length {n_zc} is not prime")));
    }
    if root == 0 || root >= n_zc || gcd(root, n_zc) != 1 {
        return Err(Error::InvalidArgument(format!(
            "root {root} must lie in 1..{n_zc} and be coprime to it"
        )));
    }
    Ok(())
}

/// `x[t] = exp(-i pi root t (t + 1) / n_zc)`, unit sample rate.
pub fn zadoff_chu(n_zc: usize, root: usize) -> Result<IqSignal> {
    zadoff_chu_at(n_zc, root, 1.0)
}

pub fn zadoff_chu_at(n_zc: usize, root: usize, sample_rate: f64) -> Result<IqSignal> {
    check_zc_params(n_zc, root)?;
    let modulus = 2 * n_zc as u128;
    let samples = (0..n_zc as u128)
        .map(|t| {
            // reduce the quadratic phase exactly before going to floating point
            let m = (root as u128 * t * (t + 1)) % modulus;
            Complex64::from_polar(1.0, -PI * m as f64 / n_zc as f64)
        })
        .collect();
    IqSignal::new(samples, sample_rate)
}

/// One period of the sounding signal: `repetitions` copies of the sequence
/// followed by zeros up to `period_t`.
pub fn build_sounding_signal(spec: &TestSignalSpec, sample_rate: f64) -> Result<IqSignal> {
    spec.validate()?;
    let zc = zadoff_chu_at(spec.n_zc, spec.root, sample_rate)?;
    let active = spec.repetitions * spec.n_zc;
    let samples = (0..spec.period_t)
        .map(|t| {
            if t < active {
                zc.samples()[t % spec.n_zc]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    IqSignal::new(samples, sample_rate)
}

pub fn build_rect_signal(
    high_len: usize,
    period_t: usize,
    amplitude: Complex64,
    sample_rate: f64,
) -> Result<IqSignal> {
    if high_len == 0 || high_len > period_t {
        return Err(Error::InvalidArgument(format!(
            "high length {high_len} must lie in 1..={period_t}"
        )));
    }
    let samples = (0..period_t)
        .map(|t| if t < high_len { amplitude } else { Complex64::new(0.0, 0.0) })
        .collect();
    IqSignal::new(samples, sample_rate)
}

/// Smallest prime at least twice the expected maximum delay.
pub fn choose_n_zc(max_delay_samples: usize) -> Result<usize> {
    if max_delay_samples == 0 {
        return Err(Error::InvalidArgument("maximum delay must be at least one sample".into()));
    }
    let mut n = 2 * max_delay_samples;
    while !is_prime(n) {
        n += 1;
    }
    Ok(n)
}
