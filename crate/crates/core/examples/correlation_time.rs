//! Autocorrelation of the cantilever frequency shift and its decay time.

use oscar_jumps::correlation::{
    autocorrelation, sign_signal, CorrelationMethod, DEFAULT_FIT_THRESHOLD,
    DEFAULT_SAMPLE_SPACING,
};
use oscar_jumps::stats::interval_moments;
use oscar_jumps::{simulate_run, InitialSign, ModelParams, StopCriterion, TelegraphConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::reference();
    let telegraph = TelegraphConfig::new(p.delta_amp, p.tau0, p.dtau, InitialSign::Random)?;
    let stop = StopCriterion::MaxJumps {
        jumps: 4000,
        max_kicks: 100_000_000,
    };
    let trace = simulate_run(&p, &telegraph, stop, 5)?;
    let mean = interval_moments(&trace)?.mean;

    let signal = sign_signal(&trace, DEFAULT_SAMPLE_SPACING)?;
    println!("{} samples, mean sign {:+.4}", signal.len(), signal.mean());
    let (result, fit) = autocorrelation(&signal, 6.0 * mean, CorrelationMethod::Transform)?
        .with_fit(DEFAULT_FIT_THRESHOLD)?;
    for (lag, c) in result.lags.iter().zip(&result.c_values).step_by(result.lags.len() / 8) {
        println!("C({lag:7.2}) = {c:+.4}");
    }
    println!(
        "tau_c = {:.2} from {} lags; <tau_jump> / tau_c = {:.2}",
        fit.tau_c,
        fit.fit_points,
        mean / fit.tau_c
    );

    // The FFT and the direct sum agree exactly on a short prefix.
    let short = oscar_jumps::correlation::SignSignal::new(
        signal.sample_spacing,
        signal.origin_time,
        signal.values[..20_000].to_vec(),
    )?;
    let a = autocorrelation(&short, 50.0, CorrelationMethod::Direct)?;
    let b = autocorrelation(&short, 50.0, CorrelationMethod::Transform)?;
    assert_eq!(a.c_values, b.c_values);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
