//! Dolph-Chebyshev window design.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::dft_in_place;

/// Real, symmetric taper normalised to a peak of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RealWindow {
    pub coefficients: Vec<f64>,
    /// Sidelobe level below the main lobe the window was designed for.
    pub attenuation_db: f64,
}

impl RealWindow {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

/// Chebyshev polynomial of degree `order` evaluated anywhere on the real line.
fn chebyshev_poly(order: usize, x: f64) -> f64 {
    let n = order as f64;
    if x.abs() <= 1.0 {
        (n * x.acos()).cos()
    } else if x > 1.0 {
        (n * x.acosh()).cosh()
    } else {
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        sign * (n * (-x).acosh()).cosh()
    }
}

/// Equiripple window whose sidelobes all sit `attenuation_db` below the main lobe.
///
/// The window's spectrum is the Chebyshev polynomial `T_{M-1}(x0 cos(pi k / M))`
/// sampled on the DFT grid; one inverse transform yields the taps.
pub fn dolph_chebyshev_window(length: usize, attenuation_db: f64) -> Result<RealWindow> {
    if length < 2 {
        return Err(Error::InvalidArgument(format!(
            "Dolph-Chebyshev window needs at least 2 taps, got {length}"
        )));
    }
    if !(attenuation_db.is_finite() && attenuation_db > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "attenuation must be positive, got {attenuation_db} dB"
        )));
    }
    let m = length;
    let order = m - 1;
    let ripple = 10f64.powf(attenuation_db / 20.0);
    let x0 = (ripple.acosh() / order as f64).cosh();

    let mut p: Vec<Complex64> = (0..m)
        .map(|k| {
            let x = x0 * (PI * k as f64 / m as f64).cos();
            let v = chebyshev_poly(order, x);
            if m % 2 == 1 {
                Complex64::new(v, 0.0)
            } else {
                // half-sample shift centres an even-length window
                v * Complex64::from_polar(1.0, PI * k as f64 / m as f64)
            }
        })
        .collect();
    dft_in_place(&mut p);

    let re: Vec<f64> = p.iter().map(|v| v.re).collect();
    let mut w = Vec::with_capacity(m);
    if m % 2 == 1 {
        let half = m.div_ceil(2);
        w.extend(re[1..half].iter().rev());
        w.extend_from_slice(&re[..half]);
    } else {
        let half = m / 2 + 1;
        w.extend(re[1..half].iter().rev());
        w.extend_from_slice(&re[1..half]);
    }
    let peak = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in &mut w {
        *v /= peak;
    }
    // enforce exact symmetry against rounding
    for k in 0..m / 2 {
        let avg = 0.5 * (w[k] + w[m - 1 - k]);
        w[k] = avg;
        w[m - 1 - k] = avg;
    }
    Ok(RealWindow {
        coefficients: w,
        attenuation_db,
    })
}
