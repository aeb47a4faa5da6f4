//! Iterative restoration of a recording of the periodic sounding signal.
//!
//! Every iteration synchronises on the current single-period reference,
//! estimates carrier offset, gain and zero offset, models the block-shaped
//! bursts in what is left over, and averages the cleaned periods into a new
//! reference.

mod blocks;
mod linear;
mod offsets;
mod sync;

pub use blocks::{
    detect_block_boundaries, estimate_blocks, suppress_impulses, BlockBoundaries, Edge, EdgeKind,
};
pub use linear::{estimate_linear_effect, LinearEffect, LinearModel};
pub use offsets::{
    compute_artefact_residual, estimate_cfo_phase, estimate_gain_zero, wrap_frequency, CFO_PAD_FACTOR,
};
pub use sync::{build_reference, post_synchronise, pre_synchronise, Synchronisation, MAX_PERIOD_SLIP};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::IqSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct RestorationConfig {
    pub iterations: usize,
    /// Rough burst spacing in samples.
    pub block_season_init: usize,
    /// Odd smoothing width for edge detection.
    pub block_kernel_init: usize,
    /// Rough burst length in samples.
    pub block_duration_init: usize,
    /// Correlation peaks below this fraction of the maximum are ignored.
    pub peak_rel_threshold: f64,
    /// Edge scores below this fraction of the maximum are ignored.
    pub block_rel_threshold: f64,
    pub outlier_factor: f64,
}

impl Default for RestorationConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            block_season_init: 3000,
            block_kernel_init: 37,
            block_duration_init: 300,
            peak_rel_threshold: 0.5,
            block_rel_threshold: 0.1,
            outlier_factor: 1.5,
        }
    }
}

impl RestorationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.iterations == 0 {
            return bad("at least one iteration is required".into());
        }
        if !(self.outlier_factor > 1.0) {
            return bad(format!("outlier factor must exceed 1, got {}", self.outlier_factor));
        }
        if self.block_kernel_init == 0 || self.block_kernel_init % 2 == 0 {
            return bad(format!("block kernel must be odd, got {}", self.block_kernel_init));
        }
        if self.block_season_init <= self.block_kernel_init {
            return bad(format!(
                "block season {} must exceed the kernel {}",
                self.block_season_init, self.block_kernel_init
            ));
        }
        if self.block_duration_init == 0 || self.block_duration_init >= self.block_season_init {
            return bad(format!(
                "block duration {} must lie in 1..{}",
                self.block_duration_init, self.block_season_init
            ));
        }
        for (name, v) in [
            ("peak_rel_threshold", self.peak_rel_threshold),
            ("block_rel_threshold", self.block_rel_threshold),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Everything known after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RestorationState {
    /// Reference the iteration synchronised against.
    pub x_ref_single: IqSignal,
    pub period_starts: Vec<usize>,
    pub f_hat: f64,
    pub phi_hat: f64,
    /// Gain relative to `x_ref_single`.
    pub a_gain: Complex64,
    pub b_zero: Complex64,
    /// Gain relative to the transmitted test signal.
    pub gain_vs_test: Complex64,
    pub x_blocks: IqSignal,
    pub outliers: Vec<usize>,
    pub period_phase_delta: Vec<f64>,
    pub x_lin: IqSignal,
    pub block_season: usize,
    pub block_kernel: usize,
    pub block_duration: usize,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f_hat: f64,
    pub phi_hat: f64,
    pub a_gain: Complex64,
    pub b_zero: Complex64,
    pub outliers: usize,
    pub bursts: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restoration {
    pub state: RestorationState,
    pub convergence_energies: Vec<f64>,
    pub trace: Vec<IterationRecord>,
}

fn odd_kernel(duration: usize, season: usize) -> usize {
    let mut k = ((duration as f64 / 8.0).round() as usize).max(3) | 1;
    while k >= season && k > 1 {
        k -= 2;
    }
    k
}

/// Relative slack allowed when refining a rough burst estimate.
const REFINE_TOLERANCE: f64 = 0.25;

fn near(value: usize, rough: usize) -> bool {
    (value as f64 - rough as f64).abs() <= REFINE_TOLERANCE * rough as f64
}

fn annotate(iteration: usize, e: Error) -> Error {
    match e {
        Error::SynchronisationFailed(m) => {
            Error::SynchronisationFailed(format!("iteration {iteration}: {m}"))
        }
        other => other,
    }
}

/// Runs `cfg.iterations` rounds of restoration on `x_rec`.
pub fn restore(x_rec: &IqSignal, x_test_single: &IqSignal, cfg: &RestorationConfig) -> Result<Restoration> {
    cfg.validate()?;
    if x_rec.sample_rate() != x_test_single.sample_rate() {
        return Err(Error::SampleRateMismatch(x_rec.sample_rate(), x_test_single.sample_rate()));
    }
    let test_energy = x_test_single.energy();
    if test_energy == 0.0 {
        return Err(Error::DegenerateSignal("test signal has no energy".into()));
    }

    let quiet = quiet_range(x_test_single.samples());
    let mut x_ref_single = x_test_single.clone();
    let mut x_clean = x_rec.clone();
    let mut season = cfg.block_season_init;
    let mut kernel = cfg.block_kernel_init;
    let mut duration = cfg.block_duration_init;
    let mut previous: Option<IqSignal> = None;
    let mut energies = Vec::with_capacity(cfg.iterations);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut state = None;

    for iteration in 1..=cfg.iterations {
        let cleaned = suppress_impulses(&x_clean);
        let coarse = pre_synchronise(&cleaned, &x_ref_single, cfg).map_err(|e| annotate(iteration, e))?;
        let (f0, p0) = estimate_cfo_phase(&cleaned, &coarse.reference)?;
        let fine =
            post_synchronise(&cleaned, f0, p0, &x_ref_single, cfg).map_err(|e| annotate(iteration, e))?;
        let (f_hat, phi_hat) = if fine.period_starts == coarse.period_starts {
            (f0, p0)
        } else {
            estimate_cfo_phase(&cleaned, &fine.reference)?
        };
        let (a_gain, b_zero) = estimate_gain_zero(&cleaned, &fine.reference, f_hat, phi_hat)?;

        let x_art = compute_artefact_residual(x_rec, &fine.reference, f_hat, phi_hat, a_gain, b_zero)?;
        let x_art = suppress_impulses(&x_art);
        let boundaries = detect_block_boundaries(&x_art, season, kernel, cfg.block_rel_threshold)?;
        let x_blocks = estimate_blocks(&x_art, &boundaries.starts, duration);

        let model = LinearModel { f_hat, phi_hat, a_gain, b_zero };
        let lin = estimate_linear_effect(
            x_rec,
            &x_blocks,
            &fine.period_starts,
            &model,
            &x_ref_single,
            cfg.outlier_factor,
        )?;

        let mut lin = lin;
        let first_energy = diff_energy(lin.x_lin.samples(), x_test_single.samples().iter().map(|v| a_gain * v));
        // phase and DC level are free gauges of the iteration: pin the phase
        // to the test signal and the level to its silent stretch
        let alignment = inner(lin.x_lin.samples(), x_test_single.samples());
        if alignment.norm() > 0.0 {
            let rot = Complex64::from_polar(1.0, -alignment.arg());
            lin.x_lin = lin.x_lin.with_samples(lin.x_lin.samples().iter().map(|v| v * rot).collect());
        }
        if let Some(quiet) = &quiet {
            let dc = lin.x_lin.samples()[quiet.clone()].iter().sum::<Complex64>() / quiet.len() as f64;
            lin.x_lin = lin.x_lin.with_samples(lin.x_lin.samples().iter().map(|v| v - dc).collect());
        }
        let energy = match &previous {
            None => first_energy,
            Some(p) => diff_energy(lin.x_lin.samples(), p.samples().iter().copied()),
        };
        energies.push(energy);

        let projection = inner(x_ref_single.samples(), x_test_single.samples()) / test_energy;

        trace.push(IterationRecord {
            iteration,
            f_hat,
            phi_hat,
            a_gain,
            b_zero,
            outliers: lin.outliers.len(),
            bursts: boundaries.starts.len(),
            energy,
        });

        // refined values must stay near the rough initial estimates
        if let Some(s) = boundaries.season().filter(|&s| near(s, cfg.block_season_init)) {
            if s > kernel && s > duration {
                season = s;
            }
        }
        if let Some(d) = boundaries.duration(season).filter(|&d| near(d, cfg.block_duration_init)) {
            if d < season {
                duration = d;
                kernel = odd_kernel(d, season);
            }
        }

        x_clean = x_rec.with_samples(
            x_rec.samples().iter().zip(x_blocks.samples()).map(|(r, b)| r - b).collect(),
        );
        previous = Some(lin.x_lin.clone());
        state = Some(RestorationState {
            x_ref_single: x_ref_single.clone(),
            period_starts: fine.period_starts,
            f_hat,
            phi_hat,
            a_gain,
            b_zero,
            gain_vs_test: a_gain * projection,
            x_blocks,
            outliers: lin.outliers,
            period_phase_delta: lin.period_phase_delta,
            x_lin: lin.x_lin.clone(),
            block_season: season,
            block_kernel: kernel,
            block_duration: duration,
        });
        x_ref_single = lin.x_lin;
    }

    Ok(Restoration {
        state: state.expect("at least one iteration"),
        convergence_energies: energies,
        trace,
    })
}

fn diff_energy(a: &[Complex64], b: impl Iterator<Item = Complex64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Second half of the longest run of zeros in the test signal, where the
/// averaged period should carry neither signal nor channel echoes.
fn quiet_range(x: &[Complex64]) -> Option<std::ops::Range<usize>> {
    let mut best = 0..0;
    let mut start = None;
    for (t, v) in x.iter().chain(std::iter::once(&Complex64::new(1.0, 0.0))).enumerate() {
        match (v.norm_sqr() == 0.0, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                if t - s > best.len() {
                    best = s..t;
                }
                start = None;
            }
            _ => {}
        }
    }
    let half = best.start + best.len() / 2;
    (best.end - half >= 2).then_some(half..best.end)
}
