//! Autocorrelation of the tip frequency shift and its exponential fit.
//!
//! The shift is `sign * domega` with a zero long-run mean, so the normalized
//! correlation depends on the sign process alone:
//! `C(k dt) = <s(t) s(t + k dt)>` averaged over all sample pairs, with the
//! denominator `<s^2> = 1`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dynamics::JumpTrace;
use crate::error::{Error, Result};
use crate::fit::fit_line;

/// Default sampling step of the sign signal.
pub const DEFAULT_SAMPLE_SPACING: f64 = std::f64::consts::PI / 8.0;
/// Default lower cut on `C` for the exponential fit.
pub const DEFAULT_FIT_THRESHOLD: f64 = 0.05;

/// Branch sign sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSignal {
    pub sample_spacing: f64,
    pub origin_time: f64,
    pub values: Vec<i8>,
}

impl SignSignal {
    pub fn new(sample_spacing: f64, origin_time: f64, values: Vec<i8>) -> Result<Self> {
        if !(sample_spacing.is_finite() && sample_spacing > 0.0) {
            return Err(Error::invalid(
                "sample_dt",
                format!("must be > 0, got {sample_spacing}"),
            ));
        }
        if let Some(v) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::invalid("values", format!("sign signal holds {v}")));
        }
        Ok(Self {
            sample_spacing,
            origin_time,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.sample_spacing * self.values.len().saturating_sub(1) as f64
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len().max(1) as f64
    }
}

/// Samples the branch sign of `trace` at `0, dt, 2 dt, ...` up to its
/// total duration. The sign flips exactly at each jump time.
pub fn sign_signal(trace: &JumpTrace, sample_spacing: f64) -> Result<SignSignal> {
    if !(sample_spacing.is_finite() && sample_spacing > 0.0) {
        return Err(Error::invalid(
            "sample_dt",
            format!("must be > 0, got {sample_spacing}"),
        ));
    }
    if !(trace.total_duration > 0.0) {
        return Err(Error::InsufficientData("trace has zero duration".into()));
    }
    let n = (trace.total_duration / sample_spacing).floor() as usize + 1;
    let mut values = Vec::with_capacity(n);
    let mut sign = trace.initial_branch.0.as_i8();
    let mut next = 0;
    for i in 0..n {
        let t = i as f64 * sample_spacing;
        while next < trace.jump_times.len() && trace.jump_times[next] <= t {
            sign = -sign;
            next += 1;
        }
        values.push(sign);
    }
    SignSignal::new(sample_spacing, 0.0, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    /// Plain double sum, `O(n * lags)`.
    Direct,
    /// Block-wise FFT cross-correlation, `O(n log lags)`.
    #[default]
    Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub lags: Vec<f64>,
    pub c_values: Vec<f64>,
    /// Empirical mean of the sign signal (reported, not subtracted).
    pub signal_mean: f64,
    pub tau_c: Option<f64>,
    pub fit_threshold: Option<f64>,
}

/// Exponential fit of a correlation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub tau_c: f64,
    pub fit_points: usize,
    pub r_squared: f64,
}

fn lag_count(signal: &SignSignal, max_lag: f64) -> Result<usize> {
    if signal.len() < 2 {
        return Err(Error::InsufficientData("signal needs at least 2 samples".into()));
    }
    if !(max_lag.is_finite() && max_lag >= 0.0) || max_lag >= signal.duration() {
        return Err(Error::invalid(
            "max_lag",
            format!(
                "must lie in [0, {}) for this signal, got {max_lag}",
                signal.duration()
            ),
        ));
    }
    Ok((max_lag / signal.sample_spacing).floor() as usize)
}

/// Lag sums `sum_i s_i s_{i+k}` for `k = 0..=lags`.
fn lag_sums_direct(values: &[i8], lags: usize) -> Vec<i64> {
    (0..=lags)
        .map(|k| {
            values[..values.len() - k]
                .iter()
                .zip(&values[k..])
                .map(|(&a, &b)| (a * b) as i64)
                .sum()
        })
        .collect()
}

struct BlockPlan {
    block: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl BlockPlan {
    fn new(lags: usize) -> Self {
        let block = (lags + 1).next_power_of_two().max(1024);
        let size = (block + lags + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            block,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }
}

fn lag_sums_transform(values: &[i8], lags: usize) -> Vec<i64> {
    let plan = BlockPlan::new(lags);
    let n = values.len();
    let mut head = vec![Complex64::default(); plan.size];
    let mut tail = vec![Complex64::default(); plan.size];
    let mut scratch = vec![
        Complex64::default();
        plan.forward
            .get_inplace_scratch_len()
            .max(plan.inverse.get_inplace_scratch_len())
    ];
    let mut sums = vec![0i64; lags + 1];
    let mut start = 0;
    while start < n {
        let block_end = (start + plan.block).min(n);
        let tail_end = (block_end + lags).min(n);
        head.iter_mut().for_each(|c| *c = Complex64::default());
        tail.iter_mut().for_each(|c| *c = Complex64::default());
        for (i, &v) in values[start..block_end].iter().enumerate() {
            head[i].re = v as f64;
        }
        for (i, &v) in values[start..tail_end].iter().enumerate() {
            tail[i].re = v as f64;
        }
        plan.forward.process_with_scratch(&mut head, &mut scratch);
        plan.forward.process_with_scratch(&mut tail, &mut scratch);
        for (h, t) in head.iter_mut().zip(&tail) {
            *h = h.conj() * t;
        }
        plan.inverse.process_with_scratch(&mut head, &mut scratch);
        let scale = plan.size as f64;
        for (k, s) in sums.iter_mut().enumerate() {
            // Products of +-1 sum to integers; rounding makes the result
            // exact and independent of block size.
            *s += (head[k].re / scale).round() as i64;
        }
        start = block_end;
    }
    sums
}

/// Normalized autocorrelation of `signal` for lags `0..=max_lag`.
pub fn autocorrelation(
    signal: &SignSignal,
    max_lag: f64,
    method: CorrelationMethod,
) -> Result<CorrelationResult> {
    let lags = lag_count(signal, max_lag)?;
    let sums = match method {
        CorrelationMethod::Direct => lag_sums_direct(&signal.values, lags),
        CorrelationMethod::Transform => lag_sums_transform(&signal.values, lags),
    };
    let n = signal.len();
    let c_values = sums
        .iter()
        .enumerate()
        .map(|(k, &s)| s as f64 / (n - k) as f64)
        .collect();
    Ok(CorrelationResult {
        lags: (0..=lags).map(|k| k as f64 * signal.sample_spacing).collect(),
        c_values,
        signal_mean: signal.mean(),
        tau_c: None,
        fit_threshold: None,
    })
}

/// Fits `C = exp(-lag / tau_c)` by least squares on `ln C` over the leading
/// lags where `C > threshold` (the window closes at the first lag that
/// drops to or below the threshold).
pub fn fit_exponential(result: &CorrelationResult, threshold: f64) -> Result<ExponentialFit> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    let window = result
        .c_values
        .iter()
        .take_while(|&&c| c > threshold)
        .count();
    if window < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 lags with C > {threshold}, found {window}"
        )));
    }
    let x = &result.lags[..window];
    let y: Vec<f64> = result.c_values[..window].iter().map(|c| c.ln()).collect();
    let line = fit_line(x, &y, None)?;
    if !(line.slope < 0.0) {
        return Err(Error::DegenerateFit(format!(
            "correlation does not decay (slope {})",
            line.slope
        )));
    }
    Ok(ExponentialFit {
        tau_c: -1.0 / line.slope,
        fit_points: window,
        r_squared: line.r_squared,
    })
}

impl CorrelationResult {
    /// Runs [`fit_exponential`] and records the outcome.
    pub fn with_fit(mut self, threshold: f64) -> Result<(Self, ExponentialFit)> {
        let fit = fit_exponential(&self, threshold)?;
        self.tau_c = Some(fit.tau_c);
        self.fit_threshold = Some(threshold);
        Ok((self, fit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SpinBranch;

    fn trace(jumps: Vec<f64>, duration: f64) -> JumpTrace {
        JumpTrace {
            jump_times: jumps,
            initial_branch: SpinBranch::ALONG,
            total_duration: duration,
            kick_count: 0,
            seed: 0,
        }
    }

    #[test]
    fn jump_free_trace_is_constant() {
        let s = sign_signal(&trace(vec![], 10.0), 0.5).unwrap();
        assert_eq!(s.len(), 21);
        assert!(s.values.iter().all(|&v| v == 1));
    }

    #[test]
    fn single_jump_is_a_step() {
        let s = sign_signal(&trace(vec![5.0], 10.0), 1.0).unwrap();
        assert_eq!(s.values, vec![1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1]);
    }

    #[test]
    fn alternating_jumps_make_a_square_wave() {
        use std::f64::consts::PI;
        let jumps: Vec<f64> = (1..=8).map(|n| n as f64 * PI).collect();
        let s = sign_signal(&trace(jumps, 8.5 * PI), PI / 2.0).unwrap();
        // Samples at k pi/2; a sample at exactly n pi already sees the flip,
        // but k pi/2 in floating point may land a hair below n pi, so only
        // check the samples strictly inside each half-period.
        for (k, &v) in s.values.iter().enumerate() {
            if k % 2 == 1 {
                let n = k / 2;
                let expect = if n % 2 == 0 { 1 } else { -1 };
                assert_eq!(v, expect, "sample {k}");
            }
        }
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(sign_signal(&trace(vec![], 10.0), 0.0).is_err());
        assert!(sign_signal(&trace(vec![], 0.0), 1.0).is_err());
        assert!(SignSignal::new(1.0, 0.0, vec![1, 0]).is_err());
    }

    #[test]
    fn normalization_and_constant_signal() {
        let s = SignSignal::new(1.0, 0.0, vec![1; 100]).unwrap();
        let r = autocorrelation(&s, 50.0, CorrelationMethod::Transform).unwrap();
        assert!(r.c_values.iter().all(|&c| c == 1.0));
        assert_eq!(r.lags.len(), 51);
        assert_eq!(r.signal_mean, 1.0);
    }

    #[test]
    fn max_lag_must_be_inside_signal() {
        let s = SignSignal::new(1.0, 0.0, vec![1; 10]).unwrap();
        assert!(autocorrelation(&s, 9.0, CorrelationMethod::Direct).is_err());
        assert!(autocorrelation(&s, 8.9, CorrelationMethod::Direct).is_ok());
    }

    #[test]
    fn exact_exponential_fit() {
        let lags: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let c: Vec<f64> = lags.iter().map(|l| (-l / 100.0).exp()).collect();
        let r = CorrelationResult {
            lags,
            c_values: c,
            signal_mean: 0.0,
            tau_c: None,
            fit_threshold: None,
        };
        let (r, fit) = r.with_fit(0.05).unwrap();
        assert!((fit.tau_c - 100.0).abs() < 1e-9);
        assert_eq!(r.tau_c, Some(fit.tau_c));
        assert_eq!(fit.fit_points, 200);
    }

    #[test]
    fn fit_needs_five_points() {
        let r = CorrelationResult {
            lags: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            c_values: vec![1.0, 0.5, 0.25, 0.1, 0.04, 0.01],
            signal_mean: 0.0,
            tau_c: None,
            fit_threshold: None,
        };
        assert!(matches!(fit_exponential(&r, 0.05), Err(Error::InsufficientData(_))));
        assert!(fit_exponential(&r, 0.0).is_err());
    }
}
