//! Parameter sweep over noise strength and correlation time, and the fit
//! `ln <tau_jump> = p + q ln(tau0 / Delta^2)`.

use oscar_jumps::sweep::{fit_scaling, run_sweep, SweepGrid};
use oscar_jumps::ModelParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SweepGrid {
        delta_values: vec![100.0, 300.0],
        tau0_values: vec![0.003, 0.01, 0.03],
        target_jumps_per_point: Some(400),
        master_seed: 17,
        ..SweepGrid::default()
    };
    let table = run_sweep(&grid, &ModelParams::reference())?;
    println!("{:>6} {:>6} {:>10} {:>7}", "Delta", "tau0", "<tau_j>", "jumps");
    for p in &table.points {
        println!(
            "{:>6} {:>6} {:>10.2} {:>7}",
            p.delta,
            p.tau0,
            p.mean_tau_jump.unwrap_or(f64::NAN),
            p.n_jumps
        );
    }
    let fit = fit_scaling(&table.points)?;
    println!("p = {:.2}, q = {:.3}, rms residual {:.3}", fit.p, fit.q, fit.residual_rms);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
