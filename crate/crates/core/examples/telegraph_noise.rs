//! The random telegraph kicks that drive the spin.

use oscar_jumps::noise::{value_at, TelegraphNoise};
use oscar_jumps::rng::stream;
use oscar_jumps::{InitialSign, TelegraphConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = TelegraphConfig::new(100.0, 0.01, 0.0025, InitialSign::Random)?;
    let mut rng = stream(1);
    let noise = TelegraphNoise::new(config, &mut rng);
    println!("initial sign {}", noise.initial_sign());

    let kicks: Vec<_> = noise.take(100_000).collect();
    for k in &kicks[..5] {
        println!("kick at {:.5}, sign now {}", k.time, k.sign_after);
    }
    let (lo, hi) = config.interval_bounds();
    let mean_gap = kicks.last().unwrap().time / kicks.len() as f64;
    println!("gaps drawn from [{lo}, {hi}], mean {mean_gap:.6}");

    let end = kicks.last().unwrap().time;
    let probe = 0.5 * end;
    println!("Delta(tau = {probe:.2}) = {}", value_at(&kicks, &config, probe)?);
    // Past the last generated kick the value is unknown.
    assert!(value_at(&kicks, &config, end + 1.0).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
