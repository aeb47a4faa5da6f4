//! Channel transfer function, windowed impulse response and power delay profile.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{dft_in_place, idft_in_place, signed_index, IqSignal, Spectrum};
use crate::window::dolph_chebyshev_window;

pub const DEFAULT_ATTENUATION_DB: f64 = 60.0;
pub const DEFAULT_PAD_FACTOR: usize = 16;

/// Powers are clamped here instead of going to minus infinity.
pub const PDP_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// One bin per sequence sample, DC first.
    pub h_freq: Spectrum,
    /// Interpolated impulse response, delay 0 first.
    pub h_time: IqSignal,
    pub window_attenuation_db: f64,
    pub n_zc: usize,
}

impl ChannelEstimate {
    pub fn pad_factor(&self) -> usize {
        self.h_time.len() / self.n_zc
    }

    pub fn power_delay_profile(&self) -> Result<PowerDelayProfile> {
        power_delay_profile(&self.h_time)
    }
}

/// Averages the three central repetitions of a restored period.
///
/// The first and last half repetitions are dropped; each remaining sample is
/// folded onto its position modulo `n_zc`.
pub fn average_periods(x_restored: &IqSignal, n_zc: usize) -> Result<IqSignal> {
    if n_zc == 0 {
        return Err(Error::InvalidArgument("sequence length must be positive".into()));
    }
    if x_restored.len() < 4 * n_zc {
        return Err(Error::InvalidArgument(format!(
            "restored signal of {} samples is shorter than four repetitions of {n_zc}",
            x_restored.len()
        )));
    }
    let s = x_restored.samples();
    let skip = n_zc / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n_zc];
    for (i, v) in s[skip..skip + 3 * n_zc].iter().enumerate() {
        out[(skip + i) % n_zc] += v;
    }
    for v in &mut out {
        *v /= 3.0;
    }
    Ok(x_restored.with_samples(out))
}

/// `H[f] = DFT(x_est)[f] / DFT(x_zc)[f]`.
pub fn estimate_transfer_function(x_est: &IqSignal, x_zc: &IqSignal) -> Result<Spectrum> {
    let n = x_zc.len();
    if n == 0 || x_est.len() != n {
        return Err(Error::InvalidArgument(format!(
            "estimate ({}) and sequence ({n}) must have the same non-zero length",
            x_est.len()
        )));
    }
    if x_est.sample_rate() != x_zc.sample_rate() {
        return Err(Error::SampleRateMismatch(x_est.sample_rate(), x_zc.sample_rate()));
    }
    let mut num = x_est.samples().to_vec();
    let mut den = x_zc.samples().to_vec();
    dft_in_place(&mut num);
    dft_in_place(&mut den);
    let limit = 1e-6 * (n as f64).sqrt();
    for (bin, d) in den.iter().enumerate() {
        if !(d.norm() >= limit) {
            return Err(Error::InvalidReference { bin, magnitude: d.norm() });
        }
    }
    let bins = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    Ok(Spectrum {
        bins,
        bin_spacing: x_zc.sample_rate() / n as f64,
    })
}

/// Index that moves DC to the middle: `centred[j] = bins[(j + shift) % n]`.
fn centring_shift(n: usize) -> usize {
    n.div_ceil(2)
}

/// Windows the spectrum around DC, pads it with zeros at the band edges to
/// `pad_factor` times its length and transforms back.
///
/// The result is scaled so that a flat unit spectrum gives a peak of 1.
pub fn estimate_impulse_response(h_freq: &Spectrum, attenuation_db: f64, pad_factor: usize) -> Result<IqSignal> {
    let n = h_freq.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("spectrum needs at least 2 bins, got {n}")));
    }
    if pad_factor == 0 {
        return Err(Error::InvalidArgument("pad factor must be at least 1".into()));
    }
    if let Some(index) = h_freq.bins.iter().position(|b| !(b.re.is_finite() && b.im.is_finite())) {
        return Err(Error::NonFinite { index });
    }
    if !(h_freq.bin_spacing > 0.0 && h_freq.bin_spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad bin spacing {}", h_freq.bin_spacing)));
    }
    let w = dolph_chebyshev_window(n, attenuation_db)?;
    let shift = centring_shift(n);
    let mut windowed = vec![Complex64::new(0.0, 0.0); n];
    for (j, c) in w.coefficients.iter().enumerate() {
        let k = (j + shift) % n;
        windowed[k] = h_freq.bins[k] * c;
    }

    let m = n * pad_factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let positive = n / 2 + 1;
    padded[..positive].copy_from_slice(&windowed[..positive]);
    let negative = n - positive;
    padded[m - negative..].copy_from_slice(&windowed[positive..]);
    if n % 2 == 0 && pad_factor > 1 {
        // split the Nyquist bin between both band edges
        let nyquist = windowed[n / 2] * 0.5;
        padded[n / 2] = nyquist;
        padded[m - n / 2] = nyquist;
    }
    idft_in_place(&mut padded);
    let scale = 1.0 / w.sum();
    for v in &mut padded {
        *v *= scale;
    }
    IqSignal::new(padded, h_freq.bin_spacing * m as f64)
}

/// Full chain from one restored period to the channel estimate.
pub fn estimate_channel(
    x_restored: &IqSignal,
    x_zc: &IqSignal,
    attenuation_db: f64,
    pad_factor: usize,
) -> Result<ChannelEstimate> {
    let n_zc = x_zc.len();
    let x_est = average_periods(x_restored, n_zc)?;
    let h_freq = estimate_transfer_function(&x_est, x_zc)?;
    let h_time = estimate_impulse_response(&h_freq, attenuation_db, pad_factor)?;
    Ok(ChannelEstimate {
        h_freq,
        h_time,
        window_attenuation_db: attenuation_db,
        n_zc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    /// Delays in seconds, ascending from the most negative.
    pub delays: Vec<f64>,
    /// Power relative to the strongest sample, aligned with `delays`.
    pub powers_db: Vec<f64>,
    /// Median power over the last quarter of the delay axis.
    pub noise_floor_db: f64,
}

impl PowerDelayProfile {
    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }
}

/// Power of `h_time` in dB against delay, with negative delays moved in
/// front of delay 0.
pub fn power_delay_profile(h_time: &IqSignal) -> Result<PowerDelayProfile> {
    let m = h_time.len();
    if m == 0 {
        return Err(Error::DegenerateSignal("empty impulse response".into()));
    }
    let powers: Vec<f64> = h_time.samples().iter().map(|v| v.norm_sqr()).collect();
    let max = powers.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateSignal("impulse response is identically zero".into()));
    }
    let shift = centring_shift(m);
    let order: Vec<usize> = (0..m).map(|j| (j + shift) % m).collect();
    let dt = 1.0 / h_time.sample_rate();
    let to_db = |p: f64| (10.0 * (p / max).log10()).max(PDP_FLOOR_DB);
    let delays = order.iter().map(|&k| signed_index(k, m) as f64 * dt).collect();
    let powers_db: Vec<f64> = order.iter().map(|&k| to_db(powers[k])).collect();

    let mut tail = powers_db[m - m / 4..].to_vec();
    if tail.is_empty() {
        tail.push(powers_db[m - 1]);
    }
    tail.sort_unstable_by(f64::total_cmp);
    let mid = tail.len() / 2;
    let noise_floor_db = if tail.len() % 2 == 1 { tail[mid] } else { 0.5 * (tail[mid - 1] + tail[mid]) };
    Ok(PowerDelayProfile {
        delays,
        powers_db,
        noise_floor_db,
    })
}
