//! Period synchronisation by correlation against the single-period reference.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::RestorationConfig;
use crate::error::{Error, Result};
use crate::impairment::carrier;
use crate::signal::{correlate_valid, find_peaks, IqSignal};

/// Detected period starts and the reference tiled onto them.
#[derive(Debug, Clone, PartialEq)]
pub struct Synchronisation {
    pub period_starts: Vec<usize>,
    /// Same length as the recording.
    pub reference: IqSignal,
}

/// Length of the reference segments combined by [`pre_synchronise`].
pub const SEGMENT_LEN: usize = 1024;

/// Coarse synchronisation that tolerates an unknown carrier offset.
///
/// The reference is cut into segments of [`SEGMENT_LEN`] samples; each is
/// correlated against the recording on its own and the magnitudes are
/// summed. A carrier offset only rotates each segment's correlation, so the
/// score keeps the sample-sharp peak of the complex correlation as long as
/// the offset stays well below one cycle per segment.
pub fn pre_synchronise(
    x_rec: &IqSignal,
    x_ref_single: &IqSignal,
    cfg: &RestorationConfig,
) -> Result<Synchronisation> {
    check_lengths(x_rec, x_ref_single)?;
    let score = segmented_score(x_rec.samples(), x_ref_single.samples(), SEGMENT_LEN);
    synchronise_on(&score, x_rec, x_ref_single, cfg)
}

/// `score[k] = sum_c |sum_{t in segment c} rec[k + t] conj(reference[t])|`.
fn segmented_score(rec: &[Complex64], reference: &[Complex64], segment: usize) -> Vec<f64> {
    let lags = rec.len() - reference.len() + 1;
    let n = rec.len().next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut fr = rec.to_vec();
    fr.resize(n, zero);
    forward.process(&mut fr);

    let mut score = vec![0.0; lags];
    let mut buf = vec![zero; n];
    for start in (0..reference.len()).step_by(segment) {
        let end = (start + segment).min(reference.len());
        if reference[start..end].iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        buf.fill(zero);
        buf[start..end].copy_from_slice(&reference[start..end]);
        forward.process(&mut buf);
        for (b, r) in buf.iter_mut().zip(&fr) {
            *b = r * b.conj();
        }
        inverse.process(&mut buf);
        for (s, v) in score.iter_mut().zip(&buf) {
            *s += v.norm() / n as f64;
        }
    }
    score
}

/// Fine synchronisation on the real part of the complex correlation of the
/// demodulated recording.
pub fn post_synchronise(
    x_rec: &IqSignal,
    f_hat: f64,
    phi_hat: f64,
    x_ref_single: &IqSignal,
    cfg: &RestorationConfig,
) -> Result<Synchronisation> {
    check_lengths(x_rec, x_ref_single)?;
    let demod: Vec<Complex64> = x_rec
        .samples()
        .iter()
        .enumerate()
        .map(|(t, v)| v * carrier(f_hat, phi_hat, t).conj())
        .collect();
    let corr = correlate_valid(&demod, x_ref_single.samples())?;
    let score: Vec<f64> = corr.iter().map(|c| c.re).collect();
    synchronise_on(&score, x_rec, x_ref_single, cfg)
}

fn check_lengths(x_rec: &IqSignal, x_ref_single: &IqSignal) -> Result<()> {
    if x_ref_single.is_empty() {
        return Err(Error::DegenerateSignal("empty reference period".into()));
    }
    if x_rec.len() < 2 * x_ref_single.len() {
        return Err(Error::SynchronisationFailed(format!(
            "recording of {} samples holds fewer than two periods of {}",
            x_rec.len(),
            x_ref_single.len()
        )));
    }
    if x_rec.sample_rate() != x_ref_single.sample_rate() {
        return Err(Error::SampleRateMismatch(x_rec.sample_rate(), x_ref_single.sample_rate()));
    }
    Ok(())
}

fn synchronise_on(
    score: &[f64],
    x_rec: &IqSignal,
    x_ref_single: &IqSignal,
    cfg: &RestorationConfig,
) -> Result<Synchronisation> {
    let period = x_ref_single.len();
    let spacing = (0.9 * period as f64).ceil() as usize;
    let mut starts = find_peaks(score, spacing, cfg.peak_rel_threshold);
    // a partial period at either end of the capture can leave a truncated or
    // ambiguous correlation lobe off the period grid
    let off_grid = |a: usize, b: usize| (b - a).abs_diff(period) > MAX_PERIOD_SLIP;
    while starts.len() > 2 && off_grid(starts[0], starts[1]) {
        starts.remove(0);
    }
    while starts.len() > 2 && off_grid(starts[starts.len() - 2], starts[starts.len() - 1]) {
        starts.pop();
    }
    if starts.len() < 2 {
        return Err(Error::SynchronisationFailed(format!(
            "found {} correlation peak(s), need at least 2",
            starts.len()
        )));
    }
    for w in starts.windows(2) {
        let gap = w[1] - w[0];
        if gap.abs_diff(period) > MAX_PERIOD_SLIP {
            return Err(Error::SynchronisationFailed(format!(
                "correlation peaks at {} and {} are {gap} apart, expected {period}",
                w[0], w[1]
            )));
        }
    }
    let reference = build_reference(x_rec.len(), &starts, x_ref_single);
    Ok(Synchronisation {
        period_starts: starts,
        reference,
    })
}

/// Largest tolerated deviation of a detected period from its nominal length.
pub const MAX_PERIOD_SLIP: usize = 2;

/// Places a copy of the reference at every start, truncated at the next
/// start. The partial periods before the first and after the last start are
/// filled by extending the grid outwards at the nominal period.
pub fn build_reference(len: usize, starts: &[usize], single: &IqSignal) -> IqSignal {
    let period = single.len();
    let src = single.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut place = |at: i64, until: i64| {
        for j in 0..period as i64 {
            let t = at + j;
            if t >= until {
                break;
            }
            if t >= 0 {
                out[t as usize] = src[j as usize];
            }
        }
    };
    if let Some(&first) = starts.first() {
        let mut at = first as i64 - period as i64;
        let mut until = first as i64;
        while at + period as i64 > 0 {
            place(at, until);
            until = at;
            at -= period as i64;
        }
    }
    for (i, &s) in starts.iter().enumerate() {
        let next = starts.get(i + 1).map_or(len as i64, |&n| n as i64);
        place(s as i64, next);
    }
    if let Some(&last) = starts.last() {
        let mut at = last as i64 + period as i64;
        while at < len as i64 {
            place(at, len as i64);
            at += period as i64;
        }
    }
    IqSignal::from_parts(out, single.sample_rate())
}
