//! Jump-interval histograms, the exponential peak envelope and interval
//! moments.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::JumpTrace;
use crate::error::{Error, Result};
use crate::fit::fit_line;

/// Default count threshold for envelope peaks.
pub const DEFAULT_MIN_COUNT: u64 = 50;
/// Default fine-mode bin width.
pub const DEFAULT_FINE_BIN_WIDTH: f64 = PI / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    /// Bins `[k w, (k + 1) w)`.
    Fine { bin_width: f64 },
    /// Bins `[n pi - pi/2, n pi + pi/2)`. Bin 0 is the half-bin `[0, pi/2)`
    /// that catches back-to-back jumps inside one crossing.
    Peak,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalHistogram {
    pub bin_width: f64,
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_intervals: u64,
    pub peak_aggregated: bool,
}

impl IntervalHistogram {
    fn empty(mode: HistogramMode) -> Result<Self> {
        let (bin_width, peak) = match mode {
            HistogramMode::Fine { bin_width } => {
                if !(bin_width.is_finite() && bin_width > 0.0) {
                    return Err(Error::invalid("bin_width", format!("must be > 0, got {bin_width}")));
                }
                (bin_width, false)
            }
            HistogramMode::Peak => (PI, true),
        };
        Ok(Self {
            bin_width,
            bin_centers: Vec::new(),
            counts: Vec::new(),
            total_intervals: 0,
            peak_aggregated: peak,
        })
    }

    pub fn mode(&self) -> HistogramMode {
        if self.peak_aggregated {
            HistogramMode::Peak
        } else {
            HistogramMode::Fine {
                bin_width: self.bin_width,
            }
        }
    }

    fn bin_index(&self, interval: f64) -> usize {
        if self.peak_aggregated {
            (interval / PI).round() as usize
        } else {
            (interval / self.bin_width).floor() as usize
        }
    }

    fn center(&self, index: usize) -> f64 {
        if self.peak_aggregated {
            index as f64 * PI
        } else {
            (index as f64 + 0.5) * self.bin_width
        }
    }

    fn grow_to(&mut self, len: usize) {
        while self.counts.len() < len {
            let c = self.center(self.counts.len());
            self.bin_centers.push(c);
            self.counts.push(0);
        }
    }

    pub fn add(&mut self, interval: f64) -> Result<()> {
        if !(interval.is_finite() && interval >= 0.0) {
            return Err(Error::invalid("interval", format!("must be >= 0, got {interval}")));
        }
        let i = self.bin_index(interval);
        self.grow_to(i + 1);
        self.counts[i] += 1;
        self.total_intervals += 1;
        Ok(())
    }

    /// Bin-wise sum with another histogram of the same mode.
    pub fn merge(&mut self, other: &IntervalHistogram) -> Result<()> {
        if self.mode() != other.mode() {
            return Err(Error::Config("cannot merge histograms with different binning".into()));
        }
        self.grow_to(other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_intervals += other.total_intervals;
        Ok(())
    }

    /// Count of peak `n` (bin centred on `n pi`).
    pub fn peak_count(&self, n: usize) -> u64 {
        debug_assert!(self.peak_aggregated);
        self.counts.get(n).copied().unwrap_or(0)
    }

    /// Fraction of all intervals in each bin.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_intervals.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

/// Histogram of arbitrary intervals.
pub fn histogram_of<I: IntoIterator<Item = f64>>(
    intervals: I,
    mode: HistogramMode,
) -> Result<IntervalHistogram> {
    let mut h = IntervalHistogram::empty(mode)?;
    for v in intervals {
        h.add(v)?;
    }
    Ok(h)
}

/// Histogram of the gaps between consecutive jumps of `trace`.
pub fn build_histogram(trace: &JumpTrace, mode: HistogramMode) -> Result<IntervalHistogram> {
    if trace.jump_count() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 jumps for an interval histogram, got {}",
            trace.jump_count()
        )));
    }
    histogram_of(trace.intervals(), mode)
}

/// Fitted exponential envelope `P(n pi) ~ exp(-n pi / tau_d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramFit {
    pub tau_d: f64,
    /// Intercept of `ln P` at zero interval.
    pub intercept: f64,
    /// Peak indices `n` that entered the fit.
    pub fit_range: Vec<usize>,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    #[default]
    Unweighted,
    /// Weight each peak by its count (inverse Poisson variance of `ln count`).
    Counts,
}

/// Least-squares line through `(n pi, ln P(n pi))` for peaks `n >= 1` with
/// at least `min_count` intervals.
pub fn fit_peak_envelope(
    hist: &IntervalHistogram,
    min_count: u64,
    weighting: FitWeighting,
) -> Result<HistogramFit> {
    if !hist.peak_aggregated {
        return Err(Error::Config("the envelope fit needs a peak-aggregated histogram".into()));
    }
    let total = hist.total_intervals as f64;
    let fit_range: Vec<usize> = (1..hist.counts.len())
        .filter(|&n| hist.counts[n] >= min_count.max(1))
        .collect();
    if fit_range.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 peaks with >= {min_count} counts, found {}",
            fit_range.len()
        )));
    }
    let x: Vec<f64> = fit_range.iter().map(|&n| hist.bin_centers[n]).collect();
    let y: Vec<f64> = fit_range
        .iter()
        .map(|&n| (hist.counts[n] as f64 / total).ln())
        .collect();
    let w: Vec<f64> = fit_range.iter().map(|&n| hist.counts[n] as f64).collect();
    let line = fit_line(
        &x,
        &y,
        match weighting {
            FitWeighting::Unweighted => None,
            FitWeighting::Counts => Some(&w),
        },
    )?;
    if !(line.slope < 0.0) {
        return Err(Error::DegenerateFit(format!(
            "peak envelope does not decay (slope {})",
            line.slope
        )));
    }
    Ok(HistogramFit {
        tau_d: -1.0 / line.slope,
        intercept: line.intercept,
        fit_range,
        r_squared: line.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalMoments {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: u64,
}

impl IntervalMoments {
    pub fn std_err(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

/// Streaming sums for interval moments; merging is exact bin-free pooling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn finish(&self) -> Result<IntervalMoments> {
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 intervals, got {}",
                self.count
            )));
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        Ok(IntervalMoments {
            mean,
            std: var.sqrt(),
            count: self.count,
        })
    }
}

/// Mean and population standard deviation of arbitrary intervals,
/// computed with a two-pass sum.
pub fn moments_of(intervals: &[f64]) -> Result<IntervalMoments> {
    if intervals.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 intervals, got {}",
            intervals.len()
        )));
    }
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(IntervalMoments {
        mean,
        std: var.sqrt(),
        count: intervals.len() as u64,
    })
}

/// Interval moments of a trace.
pub fn interval_moments(trace: &JumpTrace) -> Result<IntervalMoments> {
    let intervals: Vec<f64> = trace.intervals().collect();
    moments_of(&intervals)
}

/// Fraction of intervals within `half_width` of a positive multiple of pi.
pub fn peak_concentration<I: IntoIterator<Item = f64>>(intervals: I, half_width: f64) -> f64 {
    let mut near = 0u64;
    let mut total = 0u64;
    for v in intervals {
        total += 1;
        let n = (v / PI).round().max(1.0);
        if (v - n * PI).abs() <= half_width {
            near += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        near as f64 / total as f64
    }
}
