//! Flat `key = value` configuration, provenance headers and atomic output.

use oscar_jumps::config::{resolve_run_config, Settings, Source};
use oscar_jumps::io::{jumps_csv, trace_header, OutputSet};
use oscar_jumps::simulate_run;
use std::path::Path;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let text = "# reference point, short run\ndelta = 50\ntau0 = 0.01\nkicks = 500000\nseed = 4\n";
    let mut settings = Settings::parse_str(text, Path::new("example.cfg"))?;
    // Flags win over the file.
    settings.set("delta", "100", Source::Flag)?;
    let cfg = resolve_run_config(&settings)?;
    print!("{}", cfg.header().render());

    let trace = simulate_run(&cfg.model, &cfg.telegraph, cfg.stop.unwrap(), cfg.seed)?;
    let mut header = cfg.header();
    header.extend(&trace_header(&trace));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("jumps.csv");
    let mut out = OutputSet::new();
    out.add(&path, jumps_csv(&header, &trace));
    out.commit()?;
    println!("wrote {} jumps to {}", trace.jump_count(), path.display());

    // Typos are rejected rather than ignored.
    assert!(Settings::parse_str("detla = 5\n", Path::new("bad.cfg")).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
