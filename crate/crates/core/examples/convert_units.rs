//! Laboratory parameters to the dimensionless model, and back to seconds.
//!
//! ```text
//! cargo run --example convert_units
//! ```

use oscar_jumps::units::{
    dimensionless_time_to_seconds, to_dimensionless, ConversionReport, NoiseSource,
};
use oscar_jumps::PhysicalParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let phys = PhysicalParams::default();
    let report = ConversionReport::new(&phys)?;
    for (key, value) in report.to_key_values() {
        println!("{key:>10} = {value:.4e}");
    }

    // Delta grows linearly with the amplitude of the random tip vibration.
    for pm in [0.5, 1.0, 2.0] {
        let noisy = PhysicalParams {
            noise: NoiseSource::Displacement(pm * 1e-12),
            ..phys
        };
        println!("noise {pm} pm -> Delta = {:.3}", to_dimensionless(&noisy)?.delta_amp);
    }

    let tau = 1.0e6;
    println!(
        "tau = {tau:e} is {:.3} s of cantilever time",
        dimensionless_time_to_seconds(tau, &phys)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
