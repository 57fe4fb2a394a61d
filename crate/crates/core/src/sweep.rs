//! Parameter sweeps over `(Delta, tau0)` and the log-log scaling fit
//! `ln <tau_jump> = p + q ln(tau0 / Delta^2)`.
//!
//! Every `(point, run)` pair is an independent task with its own seed,
//! `derive_seed(derive_seed(master_seed, point), run)`. Tasks run on the
//! rayon pool and are folded in `(point, run)` order, so the table does not
//! depend on thread count or scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{simulate_run, StopCriterion};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::noise::{InitialSign, TelegraphConfig};
use crate::rng::derive_seed;
use crate::stats::MomentAccumulator;
use crate::units::{dimensionless_time_to_seconds, ModelParams, PhysicalParams};

/// Points with fewer jumps than this carry a warning.
pub const LOW_JUMP_WARNING: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DtauRule {
    Fixed(f64),
    FractionOfTau0(f64),
}

impl DtauRule {
    pub fn dtau_for(&self, tau0: f64) -> f64 {
        match *self {
            DtauRule::Fixed(d) => d,
            DtauRule::FractionOfTau0(f) => f * tau0,
        }
    }
}

impl Default for DtauRule {
    fn default() -> Self {
        DtauRule::FractionOfTau0(0.25)
    }
}

/// `count` values spaced uniformly in `ln` between `min` and `max`.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && count > 0) {
        return Err(Error::Config(format!(
            "log grid needs 0 < min <= max and count > 0, got [{min}, {max}] x {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub delta_values: Vec<f64>,
    pub tau0_values: Vec<f64>,
    pub x_m: f64,
    pub domega: f64,
    pub dtau_rule: DtauRule,
    /// Kick budget per grid point, split evenly over its runs. With
    /// `target_jumps_per_point` set this is only a cap.
    pub kicks_per_point: u64,
    /// Stop each run once it has recorded its share of this many jumps.
    pub target_jumps_per_point: Option<u64>,
    pub runs_per_point: u32,
    pub master_seed: u64,
}

impl Default for SweepGrid {
    /// Four log-spaced values each over `10 < Delta < 300` and
    /// `0.001 < tau0 < 1`, about a thousand jumps per point.
    fn default() -> Self {
        Self {
            delta_values: log_spaced(10.0, 300.0, 4).unwrap(),
            tau0_values: log_spaced(0.001, 1.0, 4).unwrap(),
            x_m: 1.2e5,
            domega: 4.2e-7,
            dtau_rule: DtauRule::default(),
            kicks_per_point: 4_000_000_000,
            target_jumps_per_point: Some(1000),
            runs_per_point: 4,
            master_seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.delta_values.is_empty() || self.tau0_values.is_empty() {
            return Err(Error::Config("sweep grid needs at least one Delta and one tau0".into()));
        }
        if self.runs_per_point == 0 {
            return Err(Error::invalid("runs_per_point", "must be positive"));
        }
        if self.kicks_per_point < self.runs_per_point as u64 {
            return Err(Error::invalid(
                "kicks_per_point",
                "must give every run at least one kick",
            ));
        }
        if self.target_jumps_per_point == Some(0) {
            return Err(Error::invalid("target_jumps", "must be positive"));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.delta_values.len() * self.tau0_values.len()
    }

    /// `(Delta, tau0)` of point `index`; Delta varies slowest.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let nt = self.tau0_values.len();
        (self.delta_values[index / nt], self.tau0_values[index % nt])
    }

    pub fn point_seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }

    pub fn run_seed(&self, index: usize, run: u32) -> u64 {
        derive_seed(self.point_seed(index), run as u64)
    }

    fn run_stop(&self, run: u32) -> StopCriterion {
        let runs = self.runs_per_point as u64;
        let share = |total: u64| total / runs + u64::from((run as u64) < total % runs);
        let max_kicks = share(self.kicks_per_point);
        match self.target_jumps_per_point {
            Some(j) => StopCriterion::MaxJumps {
                jumps: share(j).max(2),
                max_kicks,
            },
            None => StopCriterion::MaxKicks(max_kicks),
        }
    }

    /// Model parameters of point `index` built on `template`'s epsilon and eta.
    pub fn point_params(&self, index: usize, template: &ModelParams) -> Result<ModelParams> {
        let (delta, tau0) = self.point(index);
        ModelParams::new(
            template.epsilon,
            template.eta,
            delta,
            tau0,
            self.dtau_rule.dtau_for(tau0),
            self.x_m,
            self.domega,
        )
    }
}

/// Pooled statistics of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub delta: f64,
    pub tau0: f64,
    pub x_m: f64,
    pub domega: f64,
    pub dtau: f64,
    /// `None` when the point produced fewer than 2 intervals.
    pub mean_tau_jump: Option<f64>,
    pub std_tau_jump: Option<f64>,
    pub n_jumps: u64,
    pub n_intervals: u64,
    pub n_kicks: u64,
    pub seed: u64,
    pub warning: Option<String>,
}

impl PointResult {
    pub fn std_err(&self) -> Option<f64> {
        self.std_tau_jump
            .map(|s| s / (self.n_intervals as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub points: Vec<PointResult>,
}

impl SweepTable {
    pub fn flagged(&self) -> impl Iterator<Item = &PointResult> {
        self.points.iter().filter(|p| p.warning.is_some())
    }
}

struct RunSummary {
    moments: MomentAccumulator,
    jumps: u64,
    kicks: u64,
}

/// Runs every grid point `runs_per_point` times and pools the intervals.
pub fn run_sweep(grid: &SweepGrid, template: &ModelParams) -> Result<SweepTable> {
    grid.validate()?;
    let params: Vec<ModelParams> = (0..grid.point_count())
        .map(|i| grid.point_params(i, template))
        .collect::<Result<_>>()?;
    let runs = grid.runs_per_point as usize;
    let tasks: Vec<(usize, u32)> = (0..params.len())
        .flat_map(|i| (0..grid.runs_per_point).map(move |r| (i, r)))
        .collect();

    let summaries: Vec<RunSummary> = tasks
        .par_iter()
        .map(|&(i, r)| {
            let p = &params[i];
            let telegraph = TelegraphConfig::new(p.delta_amp, p.tau0, p.dtau, InitialSign::Random)?;
            let trace = simulate_run(p, &telegraph, grid.run_stop(r), grid.run_seed(i, r))?;
            let mut moments = MomentAccumulator::default();
            trace.intervals().for_each(|v| moments.push(v));
            Ok(RunSummary {
                moments,
                jumps: trace.jump_count() as u64,
                kicks: trace.kick_count,
            })
        })
        .collect::<Result<_>>()?;

    let points = summaries
        .chunks(runs)
        .enumerate()
        .map(|(i, chunk)| {
            let mut moments = MomentAccumulator::default();
            let mut jumps = 0;
            let mut kicks = 0;
            for s in chunk {
                moments.merge(&s.moments);
                jumps += s.jumps;
                kicks += s.kicks;
            }
            let p = &params[i];
            let pooled = moments.finish().ok();
            let warning = match pooled {
                None => Some(format!("only {jumps} jumps; no interval statistics")),
                Some(_) if jumps < LOW_JUMP_WARNING => {
                    Some(format!("only {jumps} jumps; statistics are poor"))
                }
                Some(_) => None,
            };
            PointResult {
                delta: p.delta_amp,
                tau0: p.tau0,
                x_m: p.x_m,
                domega: p.domega,
                dtau: p.dtau,
                mean_tau_jump: pooled.map(|m| m.mean),
                std_tau_jump: pooled.map(|m| m.std),
                n_jumps: jumps,
                n_intervals: moments.count,
                n_kicks: kicks,
                seed: grid.point_seed(i),
                warning,
            }
        })
        .collect();
    Ok(SweepTable {
        grid: grid.clone(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub delta: f64,
    pub tau0: f64,
    pub mean_tau_jump: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Intercept of `ln <tau_jump>`.
    pub p: f64,
    /// Slope against `ln(tau0 / Delta^2)`.
    pub q: f64,
    pub residual_rms: f64,
    pub r_squared: f64,
    pub points: Vec<ScalingPoint>,
}

impl ScalingFit {
    /// Predicted mean jump interval (dimensionless).
    pub fn predict_tau(&self, delta: f64, tau0: f64) -> f64 {
        (self.p + self.q * (tau0 / (delta * delta)).ln()).exp()
    }
}

/// Unweighted least squares of `ln <tau_jump>` on `ln(tau0 / Delta^2)` over
/// points that have a mean.
pub fn fit_scaling(points: &[PointResult]) -> Result<ScalingFit> {
    let used: Vec<ScalingPoint> = points
        .iter()
        .filter_map(|r| {
            Some(ScalingPoint {
                delta: r.delta,
                tau0: r.tau0,
                mean_tau_jump: r.mean_tau_jump.filter(|m| *m > 0.0)?,
                std_err: r.std_err()?,
            })
        })
        .collect();
    if used.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "scaling fit needs at least 4 points with a mean, got {}",
            used.len()
        )));
    }
    let x: Vec<f64> = used
        .iter()
        .map(|s| (s.tau0 / (s.delta * s.delta)).ln())
        .collect();
    let y: Vec<f64> = used.iter().map(|s| s.mean_tau_jump.ln()).collect();
    let line = fit_line(&x, &y, None)?;
    Ok(ScalingFit {
        p: line.intercept,
        q: line.slope,
        residual_rms: line.residual_rms,
        r_squared: line.r_squared,
        points: used,
    })
}

/// Mean jump interval predicted by `fit`, in seconds of laboratory time.
pub fn predict_physical_time(
    fit: &ScalingFit,
    delta: f64,
    tau0: f64,
    phys: &PhysicalParams,
) -> Result<f64> {
    if !(delta > 0.0 && tau0 > 0.0) {
        return Err(Error::Config(format!(
            "prediction needs Delta > 0 and tau0 > 0, got ({delta}, {tau0})"
        )));
    }
    dimensionless_time_to_seconds(fit.predict_tau(delta, tau0), phys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::interval_moments;

    fn synthetic(delta: f64, tau0: f64, mean: f64) -> PointResult {
        PointResult {
            delta,
            tau0,
            x_m: 1.0,
            domega: 0.0,
            dtau: 0.0,
            mean_tau_jump: Some(mean),
            std_tau_jump: Some(mean),
            n_jumps: 1001,
            n_intervals: 1000,
            n_kicks: 0,
            seed: 0,
            warning: None,
        }
    }

    #[test]
    fn exact_power_law() {
        let c = 7.5e6;
        let pts: Vec<_> = [(10.0, 0.001), (30.0, 0.01), (100.0, 0.1), (300.0, 1.0), (50.0, 0.5)]
            .iter()
            .map(|&(d, t)| synthetic(d, t, c * t / (d * d)))
            .collect();
        let fit = fit_scaling(&pts).unwrap();
        assert!((fit.q - 1.0).abs() < 1e-12);
        assert!((fit.p - c.ln()).abs() < 1e-10);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn scaling_errors() {
        let pts: Vec<_> = (0..3).map(|i| synthetic(10.0 + i as f64, 0.1, 5.0)).collect();
        assert!(matches!(fit_scaling(&pts), Err(Error::InsufficientData(_))));
        // Same tau0 / Delta^2 everywhere.
        let pts: Vec<_> = (1..=4)
            .map(|i| synthetic(i as f64, (i * i) as f64, 5.0 + i as f64))
            .collect();
        assert!(matches!(fit_scaling(&pts), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn reference_predictions() {
        let phys = PhysicalParams::default();
        let tau_r = 4.95e-3;
        for (p, expect) in [(17.9, 2.3), (19.743, 14.5)] {
            let fit = ScalingFit {
                p,
                q: 0.993,
                residual_rms: 0.0,
                r_squared: 1.0,
                points: vec![],
            };
            let t = predict_physical_time(&fit, 1.8, tau_r, &phys).unwrap();
            assert!(((t - expect) / expect).abs() < 0.02, "{t} vs {expect}");
        }
    }

    #[test]
    fn prediction_cancellation_case() {
        let phys = PhysicalParams::default();
        let c: f64 = 1234.5;
        let fit = ScalingFit {
            p: c.ln(),
            q: 1.0,
            residual_rms: 0.0,
            r_squared: 1.0,
            points: vec![],
        };
        let t = predict_physical_time(&fit, 3.0, 9.0, &phys).unwrap();
        assert!((t - c / phys.omega_c()).abs() < 1e-12 * c);
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(0.001, 1.0, 4).unwrap();
        assert!((v[1] - 0.01).abs() < 1e-15);
        assert!((v[3] - 1.0).abs() < 1e-15);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn single_point_grid_matches_single_run() {
        let template = ModelParams::reference();
        let grid = SweepGrid {
            delta_values: vec![100.0],
            tau0_values: vec![0.01],
            kicks_per_point: 400_000,
            target_jumps_per_point: None,
            runs_per_point: 1,
            master_seed: 17,
            ..SweepGrid::default()
        };
        let table = run_sweep(&grid, &template).unwrap();
        let p = grid.point_params(0, &template).unwrap();
        let tel = TelegraphConfig::new(p.delta_amp, p.tau0, p.dtau, InitialSign::Random).unwrap();
        let trace = simulate_run(&p, &tel, StopCriterion::MaxKicks(400_000), grid.run_seed(0, 0)).unwrap();
        let m = interval_moments(&trace).unwrap();
        let row = &table.points[0];
        assert_eq!(row.n_jumps, trace.jump_count() as u64);
        assert_eq!(row.n_kicks, 400_000);
        assert!((row.mean_tau_jump.unwrap() - m.mean).abs() < 1e-9 * m.mean);
        assert!((row.std_tau_jump.unwrap() - m.std).abs() < 1e-6 * m.std);
    }

    #[test]
    fn starved_points_are_flagged() {
        let grid = SweepGrid {
            delta_values: vec![1.0],
            tau0_values: vec![0.01],
            kicks_per_point: 100,
            target_jumps_per_point: None,
            runs_per_point: 2,
            ..SweepGrid::default()
        };
        let table = run_sweep(&grid, &ModelParams::reference()).unwrap();
        assert_eq!(table.points.len(), 1);
        assert!(table.points[0].mean_tau_jump.is_none());
        assert_eq!(table.flagged().count(), 1);
    }

    #[test]
    fn budget_split() {
        let grid = SweepGrid {
            kicks_per_point: 10,
            target_jumps_per_point: Some(7),
            runs_per_point: 3,
            ..SweepGrid::default()
        };
        let stops: Vec<_> = (0..3).map(|r| grid.run_stop(r)).collect();
        assert_eq!(
            stops,
            vec![
                StopCriterion::MaxJumps { jumps: 3, max_kicks: 4 },
                StopCriterion::MaxJumps { jumps: 2, max_kicks: 3 },
                StopCriterion::MaxJumps { jumps: 2, max_kicks: 3 },
            ]
        );
    }
}
