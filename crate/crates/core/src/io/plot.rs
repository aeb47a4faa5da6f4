//! SVG amplitude plots coloured by phase.
//!
//! Each sample is a vertical stroke from `-|x|` to `+|x|`. The stroke hue
//! follows the phase: green at 0, yellow at pi/2, red at pi, blue at
//! 3 pi/2, interpolated linearly in hue between those anchors.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::IqSignal;

const WIDTH: usize = 1200;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlotScale {
    Linear,
    /// Magnitude in dB relative to the peak, clipped at `-range_db`.
    Db { range_db: f64 },
}

/// Hue in degrees for a phase in radians.
pub fn phase_hue(phase: f64) -> f64 {
    // (phase, hue) anchors; the last one closes the cycle at green again
    const ANCHORS: [(f64, f64); 5] = [(0.0, 120.0), (FRAC_PI_2, 60.0), (PI, 0.0), (3.0 * FRAC_PI_2, -120.0), (2.0 * PI, -240.0)];
    let p = phase.rem_euclid(2.0 * PI);
    let k = ANCHORS.windows(2).position(|w| p < w[1].0).unwrap_or(3);
    let ((p0, h0), (p1, h1)) = (ANCHORS[k], ANCHORS[k + 1]);
    (h0 + (h1 - h0) * (p - p0) / (p1 - p0)).rem_euclid(360.0)
}

/// Fully saturated colour for a hue, as `#rrggbb`.
pub fn hue_colour(hue: f64) -> String {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as usize {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let byte = |v: f64| (v * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

/// The strongest sample of every column when there are more samples than
/// pixels.
fn columns(x: &[Complex64]) -> Vec<Complex64> {
    if x.len() <= WIDTH {
        return x.to_vec();
    }
    (0..WIDTH)
        .map(|c| {
            let (lo, hi) = (c * x.len() / WIDTH, (c + 1) * x.len() / WIDTH);
            *x[lo..hi.max(lo + 1)]
                .iter()
                .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                .expect("non-empty column")
        })
        .collect()
}

pub fn render_svg(x: &IqSignal, scale: PlotScale) -> Result<String> {
    if x.is_empty() {
        return Err(Error::DegenerateSignal("nothing to plot".into()));
    }
    let cols = columns(x.samples());
    let peak = cols.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let height = |v: &Complex64| -> f64 {
        if peak == 0.0 {
            return 0.0;
        }
        match scale {
            PlotScale::Linear => v.norm() / peak,
            PlotScale::Db { range_db } => {
                let db = 20.0 * (v.norm() / peak).log10();
                ((db + range_db) / range_db).clamp(0.0, 1.0)
            }
        }
    };
    let half = HEIGHT / 2.0 - MARGIN;
    let mid = HEIGHT / 2.0;
    let step = WIDTH as f64 / cols.len() as f64;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .expect("string write");
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).expect("string write");
    writeln!(svg, r#"<line x1="0" y1="{mid}" x2="{WIDTH}" y2="{mid}" stroke="black" stroke-width="0.5"/>"#)
        .expect("string write");
    for (i, v) in cols.iter().enumerate() {
        let xpos = (i as f64 + 0.5) * step;
        let h = height(v) * half;
        writeln!(
            svg,
            r#"<line x1="{xpos:.3}" y1="{:.3}" x2="{xpos:.3}" y2="{:.3}" stroke="{}" stroke-width="{:.3}"/>"#,
            mid - h,
            mid + h,
            hue_colour(phase_hue(v.arg())),
            step.max(1.0)
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn export_plot(path: &Path, x: &IqSignal, scale: PlotScale) -> Result<()> {
    fs::write(path, render_svg(x, scale)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strokes(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| l.contains("stroke=\"#"))
            .map(|l| l.split("stroke=\"").nth(1).unwrap()[..7].to_string())
            .collect()
    }

    fn constant(v: Complex64, n: usize) -> IqSignal {
        IqSignal::new(vec![v; n], 1.0).unwrap()
    }

    #[test]
    fn anchor_colours() {
        let cases = [
            (Complex64::new(2.0, 0.0), "#00ff00"),
            (Complex64::new(0.0, 2.0), "#ffff00"),
            (Complex64::new(-2.0, 0.0), "#ff0000"),
            (Complex64::new(0.0, -2.0), "#0000ff"),
        ];
        for (v, colour) in cases {
            let svg = render_svg(&constant(v, 10), PlotScale::Linear).unwrap();
            let s = strokes(&svg);
            assert_eq!(s.len(), 10);
            assert!(s.iter().all(|c| c == colour), "{v} {s:?}");
        }
    }

    #[test]
    fn phase_ramp_cycles_through_the_anchors() {
        let hues: Vec<f64> = (0..=400).map(|k| phase_hue(2.0 * PI * k as f64 / 400.0)).collect();
        assert_eq!(hues[0], 120.0);
        assert_eq!(hues[100], 60.0);
        assert_eq!(hues[200], 0.0);
        assert_eq!(hues[300], 240.0);
        assert_eq!(hues[400], 120.0);
        // hue only ever decreases, wrapping once through 0
        let mut descent = 0.0;
        for w in hues.windows(2) {
            descent += (w[0] - w[1]).rem_euclid(360.0);
        }
        assert!((descent - 360.0).abs() < 1e-9);
    }

    #[test]
    fn db_mode_and_decimation() {
        let samples: Vec<Complex64> = (0..5000).map(|t| Complex64::new(10f64.powf(-(t as f64) / 1000.0), 0.0)).collect();
        let x = IqSignal::new(samples, 1.0).unwrap();
        let svg = render_svg(&x, PlotScale::Db { range_db: 60.0 }).unwrap();
        assert_eq!(strokes(&svg).len(), WIDTH);
        assert!(svg.starts_with("<svg"));
        assert!(render_svg(&IqSignal::zeros(0, 1.0).unwrap(), PlotScale::Linear).is_err());
    }
}
