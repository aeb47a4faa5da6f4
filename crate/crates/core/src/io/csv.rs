//! CSV export. Numbers use `.` as decimal separator and explicit exponents.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::PowerDelayProfile;
use crate::error::Result;
use crate::signal::{IqSignal, Spectrum};

fn write_rows<'a>(
    path: &Path,
    axis: &str,
    rows: impl Iterator<Item = (f64, &'a Complex64)>,
) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "index,{axis},real,imag,magnitude,phase_rad")?;
    for (i, (x, v)) in rows.enumerate() {
        writeln!(
            out,
            "{i},{x:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            v.re,
            v.im,
            v.norm(),
            v.arg()
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per sample, time in seconds.
pub fn export_signal(path: &Path, x: &IqSignal) -> Result<()> {
    let dt = 1.0 / x.sample_rate();
    write_rows(path, "time_s", x.samples().iter().enumerate().map(|(t, v)| (t as f64 * dt, v)))
}

/// One row per bin in DFT order, frequency in Hz.
pub fn export_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    write_rows(path, "frequency_hz", s.bins.iter().enumerate().map(|(k, v)| (s.frequency(k), v)))
}

/// Delay and power columns followed by a `# noise_floor_db=` footer.
pub fn export_pdp(path: &Path, pdp: &PowerDelayProfile) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "index,delay_s,power_db")?;
    for (i, (d, p)) in pdp.delays.iter().zip(&pdp.powers_db).enumerate() {
        writeln!(out, "{i},{d:.12e},{p:.12e}")?;
    }
    writeln!(out, "# noise_floor_db={:.12e}", pdp.noise_floor_db)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(path: &Path) -> Vec<Vec<f64>> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn two_samples_give_three_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = IqSignal::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.5)], 4.0).unwrap();
        export_signal(&path, &x).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), "index,time_s,real,imag,magnitude,phase_rad");
        assert!(text.contains("2.500000000000e-1"));
    }

    #[test]
    fn values_survive_the_text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let bins: Vec<Complex64> = (0..50).map(|k| Complex64::from_polar(1.0 + k as f64 * 1e-3, k as f64 * 0.37)).collect();
        let s = Spectrum { bins: bins.clone(), bin_spacing: 1e3 };
        export_spectrum(&path, &s).unwrap();
        for (row, v) in parse(&path).iter().zip(&bins) {
            assert!((row[2] - v.re).abs() <= 1e-6 * v.norm());
            assert!((row[3] - v.im).abs() <= 1e-6 * v.norm());
            assert!((row[4] - v.norm()).abs() <= 1e-6 * v.norm());
        }
        assert_eq!(parse(&path)[49][1], -1e3);
    }

    #[test]
    fn pdp_has_noise_floor_footer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pdp.csv");
        let pdp = PowerDelayProfile { delays: vec![-1e-9, 0.0], powers_db: vec![-70.0, 0.0], noise_floor_db: -65.5 };
        export_pdp(&path, &pdp).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().last().unwrap(), "# noise_floor_db=-6.550000000000e1");
        assert_eq!(parse(&path).len(), 2);
    }
}
