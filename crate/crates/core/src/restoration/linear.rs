//! Outlier-gated averaging of the demodulated periods.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impairment::carrier;
use crate::signal::IqSignal;

/// Offsets the averaging needs from the earlier steps of an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub f_hat: f64,
    pub phi_hat: f64,
    pub a_gain: Complex64,
    pub b_zero: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEffect {
    /// One period of the averaged, offset-free signal.
    pub x_lin: IqSignal,
    /// Positions in `period_starts` of the rejected periods.
    pub outliers: Vec<usize>,
    /// Residual phase of every full period, indexed like `period_starts`.
    pub period_phase_delta: Vec<f64>,
    /// Residual energy of every full period against the model.
    pub period_energy: Vec<f64>,
}

/// Averages the full periods of `x_rec - x_blocks` after removing the carrier
/// and a per-period phase, skipping periods whose residual energy exceeds
/// `outlier_factor` times the median.
pub fn estimate_linear_effect(
    x_rec: &IqSignal,
    x_blocks: &IqSignal,
    period_starts: &[usize],
    model: &LinearModel,
    x_ref_single: &IqSignal,
    outlier_factor: f64,
) -> Result<LinearEffect> {
    if x_blocks.len() != x_rec.len() {
        return Err(Error::InvalidArgument("burst estimate and recording differ in length".into()));
    }
    let period = x_ref_single.len();
    let target: Vec<Complex64> = x_ref_single
        .samples()
        .iter()
        .map(|x| model.a_gain * x + model.b_zero)
        .collect();
    let target_energy: f64 = target.iter().map(|v| v.norm_sqr()).sum();

    let full: Vec<usize> = period_starts
        .iter()
        .copied()
        .filter(|&s| s + period <= x_rec.len())
        .collect();
    if full.len() < 2 {
        return Err(Error::TooFewInliers { inliers: full.len(), periods: full.len() });
    }

    let rec = x_rec.samples();
    let blocks = x_blocks.samples();
    let mut corrected = Vec::with_capacity(full.len());
    let mut phases = Vec::with_capacity(full.len());
    let mut energies = Vec::with_capacity(full.len());
    for &s in &full {
        let y: Vec<Complex64> = (0..period)
            .map(|t| (rec[s + t] - blocks[s + t]) * carrier(model.f_hat, model.phi_hat, s + t).conj())
            .collect();
        let inner: Complex64 = y.iter().zip(&target).map(|(v, g)| v * g.conj()).sum();
        let delta = inner.arg();
        let rot = Complex64::from_polar(1.0, -delta);
        let y: Vec<Complex64> = y.into_iter().map(|v| v * rot).collect();
        let e: f64 = y.iter().zip(&target).map(|(v, g)| (v - g).norm_sqr()).sum();
        corrected.push(y);
        phases.push(delta);
        energies.push(e);
    }

    let mut sorted = energies.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[m] } else { 0.5 * (sorted[m - 1] + sorted[m]) };
    let limit = outlier_factor * median + 1e-12 * target_energy;
    let outlier_flags: Vec<bool> = energies.iter().map(|&e| e > limit).collect();
    let inliers = outlier_flags.iter().filter(|&&o| !o).count();
    if inliers < 2 {
        return Err(Error::TooFewInliers { inliers, periods: full.len() });
    }

    let mut sum = vec![Complex64::new(0.0, 0.0); period];
    for (y, _) in corrected.iter().zip(&outlier_flags).filter(|(_, &o)| !o) {
        for (acc, v) in sum.iter_mut().zip(y) {
            *acc += v;
        }
    }
    let x_lin = sum.into_iter().map(|v| v / inliers as f64 - model.b_zero).collect();

    // indices are positions in the caller's list, which may include a trailing partial period
    let position = |s: usize| period_starts.iter().position(|&p| p == s).expect("start from list");
    let outliers = full
        .iter()
        .zip(&outlier_flags)
        .filter(|(_, &o)| o)
        .map(|(&s, _)| position(s))
        .collect();
    Ok(LinearEffect {
        x_lin: x_ref_single.with_samples(x_lin),
        outliers,
        period_phase_delta: phases,
        period_energy: energies,
    })
}
