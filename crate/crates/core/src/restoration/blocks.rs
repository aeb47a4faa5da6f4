//! Detection and piecewise-linear estimation of block-shaped bursts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{find_peaks_above, moving_average, IqSignal};

/// Half width of the running median used by [`suppress_impulses`].
pub const IMPULSE_HALF_WINDOW: usize = 32;
/// A sample louder than this multiple of its local median is an impulse.
pub const IMPULSE_FACTOR: f64 = 4.0;

/// Edge candidates weaker than this multiple of the median edge score are ignored.
const NOISE_FLOOR_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub index: usize,
    pub kind: EdgeKind,
    pub strength: f64,
}

/// Result of [`detect_block_boundaries`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockBoundaries {
    /// Burst starts after regularisation onto the season grid.
    pub starts: Vec<usize>,
    /// Every edge found before regularisation, sorted by index.
    pub edges: Vec<Edge>,
}

impl BlockBoundaries {
    /// Median spacing between consecutive regularised starts.
    pub fn season(&self) -> Option<usize> {
        let gaps: Vec<usize> = self.starts.windows(2).map(|w| w[1] - w[0]).collect();
        median_usize(gaps)
    }

    /// Median distance from a detected start to the next detected end within `season`.
    pub fn duration(&self, season: usize) -> Option<usize> {
        let mut lengths = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.kind != EdgeKind::Start {
                continue;
            }
            let end = self.edges[i + 1..]
                .iter()
                .take_while(|n| n.index < e.index + season)
                .find(|n| n.kind == EdgeKind::End);
            if let Some(end) = end {
                lengths.push(end.index - e.index);
            }
        }
        median_usize(lengths)
    }
}

fn median_usize(mut v: Vec<usize>) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]).div_ceil(2) })
}

fn median_f64(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn upper_median(v: &mut [f64]) -> f64 {
    let m = v.len() / 2;
    *v.select_nth_unstable_by(m, f64::total_cmp).1
}

/// Replaces short loud outliers by the mean of their unflagged neighbourhood.
///
/// Pulses shorter than [`IMPULSE_HALF_WINDOW`] cannot move the running
/// median, so they stand out against it; bursts are longer and survive.
pub fn suppress_impulses(x: &IqSignal) -> IqSignal {
    let s = x.samples();
    let n = s.len();
    if n == 0 {
        return x.clone();
    }
    let mags: Vec<f64> = s.iter().map(|v| v.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let h = IMPULSE_HALF_WINDOW;
    let mut scratch = Vec::with_capacity(2 * h + 1);
    let flagged: Vec<bool> = (0..n)
        .map(|t| {
            scratch.clear();
            scratch.extend_from_slice(&mags[t.saturating_sub(h)..(t + h + 1).min(n)]);
            let local = upper_median(&mut scratch);
            mags[t] > IMPULSE_FACTOR * local + 1e-9 * peak
        })
        .collect();
    if !flagged.contains(&true) {
        return x.clone();
    }
    let out = (0..n)
        .map(|t| {
            if !flagged[t] {
                return s[t];
            }
            let range = t.saturating_sub(h)..(t + h + 1).min(n);
            let (sum, count) = range
                .filter(|&j| !flagged[j])
                .fold((Complex64::new(0.0, 0.0), 0usize), |(acc, c), j| (acc + s[j], c + 1));
            if count == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                sum / count as f64
            }
        })
        .collect();
    x.with_samples(out)
}

/// Finds rising and falling burst edges and regularises the rising ones onto
/// a grid of spacing `season`.
///
/// The residual is zero-extended, smoothed with a centred moving average of
/// width `kernel`, and differenced at lag `kernel`: a step at `e` becomes a
/// peak of the full step height at `e + kernel / 2`. A peak counts as a start
/// when the smoothed level after it exceeds the level before it.
pub fn detect_block_boundaries(
    x_art: &IqSignal,
    season: usize,
    kernel: usize,
    rel_threshold: f64,
) -> Result<BlockBoundaries> {
    if kernel == 0 || kernel % 2 == 0 || season <= kernel {
        return Err(Error::InvalidArgument(format!(
            "need an odd kernel below the season, got kernel {kernel} and season {season}"
        )));
    }
    let n = x_art.len();
    if n == 0 {
        return Ok(BlockBoundaries::default());
    }
    let half = kernel / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); n + 2 * kernel];
    padded[kernel..kernel + n].copy_from_slice(x_art.samples());
    let smooth = moving_average(&padded, kernel);
    let score: Vec<f64> = (0..padded.len())
        .map(|i| if i < kernel { 0.0 } else { (smooth[i] - smooth[i - kernel]).norm() })
        .collect();

    let max = score.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(BlockBoundaries::default());
    }
    let mut sorted = score[kernel..kernel + n].to_vec();
    let floor = median_f64(&mut sorted);
    let threshold = (rel_threshold * max).max(NOISE_FLOOR_FACTOR * floor);

    let mut edges: Vec<Edge> = find_peaks_above(&score, kernel, threshold)
        .into_iter()
        .filter_map(|p| {
            let index = p.checked_sub(half + kernel)?;
            if index > n {
                return None;
            }
            let kind = if smooth[p].norm() > smooth[p - kernel].norm() {
                EdgeKind::Start
            } else {
                EdgeKind::End
            };
            Some(Edge { index, kind, strength: score[p] })
        })
        .collect();
    edges.sort_by_key(|e| e.index);

    let candidates: Vec<&Edge> = edges.iter().filter(|e| e.kind == EdgeKind::Start).collect();
    let starts = regularise(&candidates, season, n);
    Ok(BlockBoundaries { starts, edges })
}

/// Keeps the strongest candidate near each grid point and fills grid points
/// lying between detected candidates.
fn regularise(candidates: &[&Edge], season: usize, len: usize) -> Vec<usize> {
    let Some(strongest) = candidates
        .iter()
        .max_by(|a, b| a.strength.total_cmp(&b.strength).then(b.index.cmp(&a.index)))
    else {
        return Vec::new();
    };
    let s = season as i64;
    let reference = strongest.index as i64;
    let mut phases: Vec<f64> = candidates
        .iter()
        .map(|c| {
            let r = (c.index as i64 - reference).rem_euclid(s);
            (if r >= (s + 1) / 2 { r - s } else { r }) as f64
        })
        .collect();
    let anchor = reference + median_f64(&mut phases).round() as i64;
    let first = candidates[0].index as i64;
    let last = candidates[candidates.len() - 1].index as i64;

    let mut k = (-anchor).div_euclid(s) - 1;
    let mut out = Vec::new();
    loop {
        let g = anchor + k * s;
        let lo = g - s / 2;
        let hi = lo + s;
        if lo >= len as i64 {
            break;
        }
        let best = candidates
            .iter()
            .filter(|c| (lo..hi).contains(&(c.index as i64)))
            .max_by(|a, b| a.strength.total_cmp(&b.strength).then(b.index.cmp(&a.index)));
        match best {
            Some(c) => out.push(c.index),
            None if g > first && g < last && g >= 0 => out.push(g as usize),
            None => {}
        }
        k += 1;
    }
    out
}

/// Least-squares affine fit `c0 + c1 (t - b)` of `x_art` on `[b, b + duration)` for every start `b`.
pub fn estimate_blocks(x_art: &IqSignal, starts: &[usize], block_duration: usize) -> IqSignal {
    let s = x_art.samples();
    let n = s.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for &b in starts {
        if b >= n {
            continue;
        }
        let end = (b + block_duration).min(n);
        let seg = &s[b..end];
        let m = seg.len() as f64;
        let t_mean = (m - 1.0) / 2.0;
        let y_mean = seg.iter().sum::<Complex64>() / m;
        let mut sxy = Complex64::new(0.0, 0.0);
        let mut sxx = 0.0;
        for (j, v) in seg.iter().enumerate() {
            let dt = j as f64 - t_mean;
            sxy += (v - y_mean) * dt;
            sxx += dt * dt;
        }
        let slope = if sxx > 0.0 { sxy / sxx } else { Complex64::new(0.0, 0.0) };
        for (j, o) in out[b..end].iter_mut().enumerate() {
            *o = y_mean + slope * (j as f64 - t_mean);
        }
    }
    x_art.with_samples(out)
}
