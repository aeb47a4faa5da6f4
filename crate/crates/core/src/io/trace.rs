//! Iteration trace of a restoration run and the convergence report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::parse_error;
use crate::error::Result;
use crate::restoration::IterationRecord;

const HEADER: &str = "# iteration f_hat phi_hat a_re a_im b_re b_im outliers bursts energy";

pub fn format_trace(trace: &[IterationRecord]) -> String {
    let mut out = format!("{HEADER}\n");
    for r in trace {
        writeln!(
            out,
            "{} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {} {} {:.12e}",
            r.iteration, r.f_hat, r.phi_hat, r.a_gain.re, r.a_gain.im, r.b_zero.re, r.b_zero.im, r.outliers, r.bursts, r.energy
        )
        .expect("string write");
    }
    out
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    fs::write(path, format_trace(trace))?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let err = || parse_error(path, i + 1, "expected 10 numeric columns");
        if f.len() != 10 {
            return Err(err());
        }
        let real = |k: usize| f[k].parse::<f64>().map_err(|_| err());
        let int = |k: usize| f[k].parse::<usize>().map_err(|_| err());
        out.push(IterationRecord {
            iteration: int(0)?,
            f_hat: real(1)?,
            phi_hat: real(2)?,
            a_gain: Complex64::new(real(3)?, real(4)?),
            b_zero: Complex64::new(real(5)?, real(6)?),
            outliers: int(7)?,
            bursts: int(8)?,
            energy: real(9)?,
        });
    }
    Ok(out)
}

/// Per-iteration parameters followed by the convergence energies in two
/// side-by-side column pairs, the first half of the iterations on the left.
pub fn format_report(trace: &[IterationRecord]) -> String {
    let mut out = String::from("Iteration trace\n");
    writeln!(
        out,
        "{:>9}  {:>13}  {:>13}  {:>27}  {:>27}  {:>8}  {:>6}",
        "iteration", "f_hat", "phi_hat", "a_gain", "b_zero", "outliers", "bursts"
    )
    .expect("string write");
    for r in trace {
        writeln!(
            out,
            "{:>9}  {:>13.6e}  {:>13.6e}  {:>27}  {:>27}  {:>8}  {:>6}",
            r.iteration,
            r.f_hat,
            r.phi_hat,
            format!("{:.6e}{:+.6e}i", r.a_gain.re, r.a_gain.im),
            format!("{:.6e}{:+.6e}i", r.b_zero.re, r.b_zero.im),
            r.outliers,
            r.bursts
        )
        .expect("string write");
    }
    out.push_str("\nConvergence of iterative signal restoration\n");
    writeln!(out, "{:>9}  {:>17}    {:>9}  {:>17}", "Iteration", "Energy difference", "Iteration", "Energy difference")
        .expect("string write");
    let rows = trace.len().div_ceil(2);
    for i in 0..rows {
        let left = &trace[i];
        write!(out, "{:>9}  {:>17.4e}", left.iteration, left.energy).expect("string write");
        if let Some(right) = trace.get(i + rows) {
            write!(out, "    {:>9}  {:>17.4e}", right.iteration, right.energy).expect("string write");
        }
        out.push('\n');
    }
    out
}
