//! One quantum-jump trace at the reference parameters.

use oscar_jumps::dynamics::{InitialState, Simulation, SpinBranch};
use oscar_jumps::io::{jumps_csv, trace_header};
use oscar_jumps::{simulate_run, InitialSign, ModelParams, StopCriterion, TelegraphConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::reference();
    let telegraph = TelegraphConfig::new(
        params.delta_amp,
        params.tau0,
        params.dtau,
        InitialSign::Random,
    )?;

    let trace = simulate_run(&params, &telegraph, StopCriterion::MaxKicks(2_000_000), 7)?;
    println!(
        "{} jumps in {} kicks, tau = {:.1}",
        trace.jump_count(),
        trace.kick_count,
        trace.total_duration
    );
    let gaps: Vec<f64> = trace.intervals().take(8).collect();
    let in_pi: Vec<f64> = gaps.iter().map(|g| g / std::f64::consts::PI).collect();
    println!("first gaps in units of pi: {in_pi:.2?}");

    // Same seed, same trace.
    let again = simulate_run(&params, &telegraph, StopCriterion::MaxKicks(2_000_000), 7)?;
    assert_eq!(trace, again);

    let csv = jumps_csv(&trace_header(&trace), &trace);
    println!("{}", csv.lines().take(8).collect::<Vec<_>>().join("\n"));

    // Stepping by hand exposes each kick's jump probability.
    let start = InitialState {
        branch: SpinBranch::AGAINST,
        phase: 0.0,
    };
    let mut sim = Simulation::with_initial_state(&params, &telegraph, 7, start)?;
    let probs: Vec<String> = (0..5)
        .map(|_| format!("{:.2e}", sim.step().probability))
        .collect();
    println!("first jump probabilities {}", probs.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
