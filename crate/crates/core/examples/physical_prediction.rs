//! Extrapolating a scaling fit to laboratory noise levels, in seconds.

use oscar_jumps::sweep::{fit_scaling, predict_physical_time, run_sweep, SweepGrid};
use oscar_jumps::units::to_dimensionless;
use oscar_jumps::{ModelParams, PhysicalParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let phys = PhysicalParams::default();
    let lab = to_dimensionless(&phys)?;
    println!("1 pm of tip noise: Delta = {:.2}, tau_R = {:.3e}", lab.delta_amp, lab.tau_rabi);

    let grid = SweepGrid {
        delta_values: vec![100.0, 300.0],
        tau0_values: vec![0.003, 0.01, 0.1],
        target_jumps_per_point: Some(400),
        master_seed: 3,
        ..SweepGrid::default()
    };
    let fit = fit_scaling(&run_sweep(&grid, &ModelParams::reference())?.points)?;
    let secs = predict_physical_time(&fit, lab.delta_amp, lab.tau_rabi, &phys)?;
    println!(
        "p = {:.2}, q = {:.3}: mean time between jumps about {secs:.1} s",
        fit.p, fit.q
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
