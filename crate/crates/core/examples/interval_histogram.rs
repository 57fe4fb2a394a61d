//! Jump-interval histogram: peaks at multiples of pi under an exponential
//! envelope whose decay time matches the mean and spread of the intervals.

use oscar_jumps::stats::{
    build_histogram, fit_peak_envelope, interval_moments, peak_concentration, FitWeighting,
    HistogramMode, DEFAULT_FINE_BIN_WIDTH,
};
use oscar_jumps::{simulate_run, InitialSign, ModelParams, StopCriterion, TelegraphConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::reference();
    let telegraph = TelegraphConfig::new(p.delta_amp, p.tau0, p.dtau, InitialSign::Random)?;
    let trace = simulate_run(&p, &telegraph, StopCriterion::MaxKicks(20_000_000), 11)?;

    let fine = build_histogram(&trace, HistogramMode::Fine { bin_width: DEFAULT_FINE_BIN_WIDTH })?;
    let busiest = fine
        .counts
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .map(|(i, _)| fine.bin_centers[i])
        .unwrap();
    println!("fine histogram: {} bins, fullest at tau = {busiest:.3}", fine.counts.len());
    println!(
        "mass within 0.2 of a multiple of pi: {:.3}",
        peak_concentration(trace.intervals(), 0.2)
    );

    let peaks = build_histogram(&trace, HistogramMode::Peak)?;
    for n in 0..6 {
        println!("peak {n}: {}", peaks.peak_count(n));
    }
    let fit = fit_peak_envelope(&peaks, 20, FitWeighting::Unweighted)?;
    let m = interval_moments(&trace)?;
    println!(
        "tau_d = {:.2} (r2 {:.3}), mean = {:.2} +- {:.2}, std = {:.2}",
        fit.tau_d,
        fit.r_squared,
        m.mean,
        m.std_err(),
        m.std
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
