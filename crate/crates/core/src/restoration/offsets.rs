//! Carrier frequency/phase offset, gain and zero-offset estimation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impairment::carrier;
use crate::signal::{dft_in_place, signed_index, IqSignal};

/// Zero-padding factor of the coarse frequency search.
pub const CFO_PAD_FACTOR: usize = 16;

/// Golden-section steps of the fine search; shrinks the bracket by 0.618^60.
const REFINE_STEPS: usize = 60;

/// Finds `(f, phi)` maximising `Re sum_t x_rec[t] conj(x_ref[t]) conj(exp(i(2 pi f t + phi)))`.
///
/// The product is transformed after padding to 16 times its length; the
/// strongest bin is then polished by a golden-section search of the
/// continuous transform magnitude within one bin on either side, so the
/// phase is read at the maximising frequency rather than a bin centre.
pub fn estimate_cfo_phase(x_rec: &IqSignal, x_ref_full: &IqSignal) -> Result<(f64, f64)> {
    if x_rec.len() != x_ref_full.len() {
        return Err(Error::InvalidArgument(format!(
            "recording ({}) and reference ({}) differ in length",
            x_rec.len(),
            x_ref_full.len()
        )));
    }
    let product: Vec<Complex64> = x_rec
        .samples()
        .iter()
        .zip(x_ref_full.samples())
        .map(|(r, x)| r * x.conj())
        .collect();
    if product.iter().all(|p| p.norm_sqr() == 0.0) {
        return Err(Error::DegenerateSignal(
            "recording and reference have no overlapping energy".into(),
        ));
    }

    let n = product.len() * CFO_PAD_FACTOR;
    let mut spectrum = product.clone();
    spectrum.resize(n, Complex64::new(0.0, 0.0));
    dft_in_place(&mut spectrum);
    let best = (0..n)
        .max_by(|&a, &b| spectrum[a].norm_sqr().total_cmp(&spectrum[b].norm_sqr()).then(b.cmp(&a)))
        .expect("non-empty spectrum");
    let coarse = signed_index(best, n) as f64 / n as f64;

    let support: Vec<(usize, Complex64)> = product
        .iter()
        .enumerate()
        .filter(|(_, p)| p.norm_sqr() > 0.0)
        .map(|(t, &p)| (t, p))
        .collect();
    let f_hat = polish_peak(&support, refine_peak(&support, coarse, 1.0 / n as f64), 0.5 / n as f64);
    let phi_hat = dtft(&support, f_hat).arg();
    Ok((wrap_frequency(f_hat), phi_hat))
}

/// Samples between exact re-evaluations of the rotating phasor in [`dtft`].
const ANCHOR_SPACING: usize = 1024;

fn dtft(support: &[(usize, Complex64)], f: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for_each_rotated(support, f, |_, v| sum += v);
    sum
}

/// Calls `visit(t, p_t e^{-2 pi i f t})` in order.
fn for_each_rotated(support: &[(usize, Complex64)], f: f64, mut visit: impl FnMut(usize, Complex64)) {
    let step = carrier(f, 0.0, 1).conj();
    let mut anchor = usize::MAX;
    let mut rot = Complex64::new(1.0, 0.0);
    let mut at = 0;
    for &(t, p) in support {
        if anchor == usize::MAX || t - anchor >= ANCHOR_SPACING {
            anchor = t;
            at = t;
            rot = carrier(f, 0.0, t).conj();
        }
        while at < t {
            rot *= step;
            at += 1;
        }
        visit(t, p * rot);
    }
}

/// Newton steps for the stationary point of `|dtft(f)|^2`.
///
fn polish_peak(support: &[(usize, Complex64)], start: f64, width: f64) -> f64 {
    let centre = (support[0].0 + support[support.len() - 1].0) as f64 / 2.0;
    let mut f = start;
    for _ in 0..POLISH_STEPS {
        let (d0, d1, d2) = dtft_moments(support, f, centre);
        let slope = (d0.conj() * d1).im;
        let curvature = 2.0 * std::f64::consts::PI * (d1.norm_sqr() - (d0.conj() * d2).re);
        if slope == 0.0 || !(curvature < 0.0) {
            break;
        }
        let next = f - slope / curvature;
        // the magnitude is too flat at the top to compare, so only the
        // bracket guards against a step to a neighbouring lobe
        if !((next - start).abs() <= width) {
            break;
        }
        f = next;
    }
    f
}

const POLISH_STEPS: usize = 4;

/// `sum p_t w^k e^{-2 pi i f t}` for `k = 0, 1, 2` with `w = t - centre`.
fn dtft_moments(support: &[(usize, Complex64)], f: f64, centre: f64) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut d0, mut d1, mut d2) = (zero, zero, zero);
    for_each_rotated(support, f, |t, v| {
        let w = t as f64 - centre;
        d0 += v;
        d1 += v * w;
        d2 += v * (w * w);
    });
    (d0, d1, d2)
}

/// Golden-section maximisation of `|dtft(f)|` on `[centre - width, centre + width]`.
fn refine_peak(support: &[(usize, Complex64)], centre: f64, width: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let score = |f: f64| dtft(support, f).norm_sqr();
    let (mut lo, mut hi) = (centre - width, centre + width);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut s1, mut s2) = (score(x1), score(x2));
    for _ in 0..REFINE_STEPS {
        if s1 < s2 {
            lo = x1;
            x1 = x2;
            s1 = s2;
            x2 = lo + ratio * (hi - lo);
            s2 = score(x2);
        } else {
            hi = x2;
            x2 = x1;
            s2 = s1;
            x1 = hi - ratio * (hi - lo);
            s1 = score(x1);
        }
    }
    let candidate = 0.5 * (lo + hi);
    // never return something worse than the bin centre
    if score(candidate) >= score(centre) {
        candidate
    } else {
        centre
    }
}

/// Maps a frequency in cycles per sample into `(-0.5, 0.5]`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - f.round();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

/// Least-squares `(a, b)` for `x_clean[t] exp(-i(2 pi f t + phi)) ~ a x_ref[t] + b`.
pub fn estimate_gain_zero(
    x_clean: &IqSignal,
    x_ref_full: &IqSignal,
    f_hat: f64,
    phi_hat: f64,
) -> Result<(Complex64, Complex64)> {
    if x_clean.len() != x_ref_full.len() || x_clean.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "regression needs equal non-empty lengths, got {} and {}",
            x_clean.len(),
            x_ref_full.len()
        )));
    }
    let n = x_clean.len() as f64;
    let demod: Vec<Complex64> = x_clean
        .samples()
        .iter()
        .enumerate()
        .map(|(t, v)| v * carrier(f_hat, phi_hat, t).conj())
        .collect();
    let reference = x_ref_full.samples();
    let mean_d = demod.iter().sum::<Complex64>() / n;
    let mean_x = reference.iter().sum::<Complex64>() / n;
    let mut cov = Complex64::new(0.0, 0.0);
    let mut var = 0.0;
    let mut power = 0.0;
    for (d, x) in demod.iter().zip(reference) {
        let dx = x - mean_x;
        cov += (d - mean_d) * dx.conj();
        var += dx.norm_sqr();
        power += x.norm_sqr();
    }
    if var <= 1e-20 * power || var == 0.0 {
        return Err(Error::RankDeficient);
    }
    let a = cov / var;
    let b = mean_d - a * mean_x;
    Ok((a, b))
}

/// `x_rec[t] - (a x_ref[t] + b) exp(i(2 pi f t + phi))`.
pub fn compute_artefact_residual(
    x_rec: &IqSignal,
    x_ref_full: &IqSignal,
    f_hat: f64,
    phi_hat: f64,
    a_gain: Complex64,
    b_zero: Complex64,
) -> Result<IqSignal> {
    if x_rec.len() != x_ref_full.len() {
        return Err(Error::InvalidArgument("recording and reference differ in length".into()));
    }
    let out = x_rec
        .samples()
        .iter()
        .zip(x_ref_full.samples())
        .enumerate()
        .map(|(t, (r, x))| r - (a_gain * x + b_zero) * carrier(f_hat, phi_hat, t))
        .collect();
    Ok(x_rec.with_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impairment::{add_awgn, apply_linear_distortion, stream_rng};
    use crate::testsignal::{build_sounding_signal, TestSignalSpec};
    use std::f64::consts::PI;

    fn reference(periods: usize) -> IqSignal {
        let one = build_sounding_signal(&TestSignalSpec::default(), 1.0).unwrap();
        let s: Vec<Complex64> = one.samples().iter().cycle().take(periods * one.len()).copied().collect();
        IqSignal::new(s, 1.0).unwrap()
    }

    fn rotate(x: &IqSignal, f: f64, phi: f64) -> IqSignal {
        apply_linear_distortion(x, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), f, phi).unwrap()
    }

    #[test]
    fn identity_gives_zero_offsets() {
        let x = reference(4);
        let (f, phi) = estimate_cfo_phase(&x, &x).unwrap();
        assert!(f.abs() < 1e-9 && phi.abs() < 1e-6, "{f} {phi}");
    }

    #[test]
    fn recovers_known_offset() {
        let x = reference(4);
        let l = x.len() as f64;
        let (f0, phi0) = (3.17e-4, 0.7);
        let (f, phi) = estimate_cfo_phase(&rotate(&x, f0, phi0), &x).unwrap();
        assert!((f - f0).abs() <= 1.0 / (16.0 * l));
        assert!((phi - phi0).abs() < 0.01);
    }

    #[test]
    fn phase_only_offset() {
        let x = reference(4);
        let (f, phi) = estimate_cfo_phase(&rotate(&x, 0.0, PI / 2.0), &x).unwrap();
        assert!(f.abs() < 1e-9);
        assert!((phi - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn negative_offset_wraps_correctly() {
        let x = reference(4);
        let (f, phi) = estimate_cfo_phase(&rotate(&x, -0.0123, -2.0), &x).unwrap();
        assert!((f + 0.0123).abs() < 1e-9);
        assert!((phi + 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_product_is_an_error() {
        let x = reference(4);
        let z = IqSignal::zeros(x.len(), 1.0).unwrap();
        assert!(estimate_cfo_phase(&x, &z).is_err());
        assert!(estimate_cfo_phase(&x, &reference(3)).is_err());
    }

    #[test]
    fn wrap_frequency_range() {
        assert_eq!(wrap_frequency(0.5), 0.5);
        assert_eq!(wrap_frequency(-0.5), 0.5);
        assert!((wrap_frequency(0.75) + 0.25).abs() < 1e-15);
        assert!((wrap_frequency(-0.2) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_gain_model() {
        let x = reference(2);
        let (f, phi) = (1e-4, 0.3);
        let a0 = Complex64::new(2.0, 0.0);
        let b0 = Complex64::new(0.3, 0.1);
        let clean = apply_linear_distortion(&x, a0, b0, f, phi).unwrap();
        let (a, b) = estimate_gain_zero(&clean, &x, f, phi).unwrap();
        assert!((a - a0).norm() < 1e-10 && (b - b0).norm() < 1e-10);
        let (a, b) = estimate_gain_zero(&x, &x, 0.0, 0.0).unwrap();
        assert!((a - 1.0).norm() < 1e-12 && b.norm() < 1e-12);
    }

    #[test]
    fn gain_under_noise() {
        let x = reference(2);
        let a0 = Complex64::new(2.0, 0.0);
        let b0 = Complex64::new(0.3, 0.1);
        for seed in 0..20 {
            let clean = apply_linear_distortion(&x, a0, b0, 2e-4, 0.5).unwrap();
            let noisy = add_awgn(&clean, 20.0, &mut stream_rng(seed, 3)).unwrap();
            let (a, _) = estimate_gain_zero(&noisy, &x, 2e-4, 0.5).unwrap();
            assert!((a - a0).norm() / 2.0 < 0.02);
        }
    }

    #[test]
    fn constant_reference_is_rank_deficient() {
        let k = IqSignal::new(vec![Complex64::new(0.5, 0.5); 64], 1.0).unwrap();
        assert!(matches!(estimate_gain_zero(&k, &k, 0.0, 0.0), Err(Error::RankDeficient)));
    }

    #[test]
    fn residual_vanishes_for_exact_model() {
        let x = reference(2);
        let (a0, b0, f, phi) = (Complex64::new(0.7, -0.2), Complex64::new(0.05, 0.02), 2e-4, 1.2);
        let rec = apply_linear_distortion(&x, a0, b0, f, phi).unwrap();
        let art = compute_artefact_residual(&rec, &x, f, phi, a0, b0).unwrap();
        assert!(art.energy() <= 1e-10 * rec.energy());
    }
}
