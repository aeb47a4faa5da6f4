//! Complex baseband containers and the numeric kernels shared by every stage:
//! zero-padded DFTs, linear cross-correlation, peak picking, smoothing and
//! seasonal differencing.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniformly sampled complex baseband sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl IqSignal {
    /// Rejects non-finite samples and non-positive sample rates.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(index) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    /// Mean squared magnitude; zero for an empty signal.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Builds a signal with the same sample rate. Used internally where the
    /// samples are produced from finite inputs by finite arithmetic.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> IqSignal {
        IqSignal {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64) -> IqSignal {
        debug_assert!(sample_rate > 0.0);
        IqSignal { samples, sample_rate }
    }
}

/// DFT bins with the standard index layout: bin `k < len/2` is frequency
/// `k * bin_spacing`, the upper half holds the negative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    /// Hz per bin.
    pub bin_spacing: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Baseband frequency of bin `k` in Hz, negative for the upper half.
    pub fn frequency(&self, k: usize) -> f64 {
        signed_index(k, self.bins.len()) as f64 * self.bin_spacing
    }
}

/// Maps DFT index `k` of an `n`-point transform to its signed frequency index.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|s| s.norm_sqr()).sum()
}

/// In-place forward DFT of arbitrary length.
pub(crate) fn dft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// In-place unnormalised inverse DFT of arbitrary length.
pub(crate) fn idft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
}

/// DFT of `x` after appending zeros up to `pad_factor * len(x)` points.
pub fn fft(x: &IqSignal, pad_factor: usize) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::DegenerateSignal("fft of an empty signal".into()));
    }
    if pad_factor == 0 {
        return Err(Error::InvalidArgument("pad factor must be at least 1".into()));
    }
    let n = x.len() * pad_factor;
    let mut bins = Vec::with_capacity(n);
    bins.extend_from_slice(x.samples());
    bins.resize(n, Complex64::new(0.0, 0.0));
    dft_in_place(&mut bins);
    Ok(Spectrum {
        bins,
        bin_spacing: x.sample_rate() / n as f64,
    })
}

/// Inverse DFT, normalised so that `ifft(fft(x, 1)) == x`.
pub fn ifft(s: &Spectrum) -> Result<IqSignal> {
    if s.is_empty() {
        return Err(Error::DegenerateSignal("ifft of an empty spectrum".into()));
    }
    let n = s.len();
    let mut samples = s.bins.clone();
    idft_in_place(&mut samples);
    let scale = 1.0 / n as f64;
    for v in &mut samples {
        *v *= scale;
    }
    IqSignal::new(samples, s.bin_spacing * n as f64)
}

/// Linear cross-correlation `out[k] = sum_t a[k + t] * conj(b[t])` for every
/// lag `k` in `0..=len(a) - len(b)`.
pub fn cross_correlate(a: &IqSignal, b: &IqSignal) -> Result<Vec<Complex64>> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::SampleRateMismatch(a.sample_rate(), b.sample_rate()));
    }
    correlate_valid(a.samples(), b.samples())
}

pub(crate) fn correlate_valid(a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.is_empty() {
        return Err(Error::DegenerateSignal("empty correlation template".into()));
    }
    if b.len() > a.len() {
        return Err(Error::InvalidArgument(format!(
            "template of length {} is longer than the signal ({})",
            b.len(),
            a.len()
        )));
    }
    let lags = a.len() - b.len() + 1;
    // circular correlation of length >= len(a) has no wrap-around on valid lags
    let n = a.len().next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);
    let mut fa = a.to_vec();
    fa.resize(n, zero);
    let mut fb = b.to_vec();
    fb.resize(n, zero);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    planner.plan_fft_inverse(n).process(&mut fa);
    let scale = 1.0 / n as f64;
    fa.truncate(lags);
    for v in &mut fa {
        *v *= scale;
    }
    Ok(fa)
}

/// Indices of local maxima of `v` that reach `rel_threshold * max(v)`.
///
/// Candidates closer than `min_spacing` are resolved greedily in favour of
/// the larger value (the earlier index on ties). The result is sorted.
pub fn find_peaks(v: &[f64], min_spacing: usize, rel_threshold: f64) -> Vec<usize> {
    let Some(max) = v.iter().copied().filter(|x| x.is_finite()).reduce(f64::max) else {
        return Vec::new();
    };
    if max <= 0.0 {
        return Vec::new();
    }
    let threshold = rel_threshold * max;
    find_peaks_above(v, min_spacing.max(1), threshold)
}

/// Same selection rule as [`find_peaks`] with an absolute threshold.
pub(crate) fn find_peaks_above(v: &[f64], min_spacing: usize, threshold: f64) -> Vec<usize> {
    let n = v.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let rises = i == 0 || v[i] > v[i - 1];
            let falls = i + 1 == n || v[i] >= v[i + 1];
            rises && falls && v[i] >= threshold && v[i] > 0.0
        })
        .collect();
    // stable sort keeps the earlier index first among equal values
    candidates.sort_by(|&x, &y| v[y].total_cmp(&v[x]));

    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        let pos = kept.partition_point(|&k| k < c);
        let clear_left = pos == 0 || c - kept[pos - 1] >= min_spacing;
        let clear_right = pos == kept.len() || kept[pos] - c >= min_spacing;
        if clear_left && clear_right {
            kept.insert(pos, c);
        }
    }
    kept
}

/// Whole-sample symmetric reflection of an out-of-range index into `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

/// Centred moving average with reflective boundaries. `kernel_width` must be odd.
pub fn lowpass_moving_average(x: &IqSignal, kernel_width: usize) -> Result<IqSignal> {
    if kernel_width == 0 || kernel_width % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "moving-average width must be odd and positive, got {kernel_width}"
        )));
    }
    if x.is_empty() {
        return Ok(x.clone());
    }
    Ok(x.with_samples(moving_average(x.samples(), kernel_width)))
}

pub(crate) fn moving_average(x: &[Complex64], kernel_width: usize) -> Vec<Complex64> {
    let n = x.len();
    let half = (kernel_width / 2) as i64;
    // prefix sums over the reflected extension [-half, n + half)
    let ext_len = n + 2 * half as usize;
    let mut prefix = Vec::with_capacity(ext_len + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    prefix.push(acc);
    for j in 0..ext_len {
        acc += x[reflect(j as i64 - half, n)];
        prefix.push(acc);
    }
    let scale = 1.0 / kernel_width as f64;
    (0..n)
        .map(|t| (prefix[t + kernel_width] - prefix[t]) * scale)
        .collect()
}

/// `out[t] = x[t] - x[t - lag]` for `t >= lag`, zero before.
pub fn seasonal_difference(x: &IqSignal, lag: usize) -> Result<IqSignal> {
    if lag == 0 || lag >= x.len() {
        return Err(Error::InvalidArgument(format!(
            "seasonal lag {lag} outside 1..{}",
            x.len()
        )));
    }
    let s = x.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
    for t in lag..s.len() {
        out[t] = s[t] - s[t - lag];
    }
    Ok(x.with_samples(out))
}
