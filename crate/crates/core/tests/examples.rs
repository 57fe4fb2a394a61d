//! Every example under `examples/` runs to completion.

#[path = "../examples/convert_units.rs"]
mod convert_units;

#[test]
fn convert_units_runs() {
    convert_units::run_example().expect("convert_units example should run");
}

#[path = "../examples/telegraph_noise.rs"]
mod telegraph_noise;

#[test]
fn telegraph_noise_runs() {
    telegraph_noise::run_example().expect("telegraph_noise example should run");
}

#[path = "../examples/simulate_trace.rs"]
mod simulate_trace;

#[test]
fn simulate_trace_runs() {
    simulate_trace::run_example().expect("simulate_trace example should run");
}

#[path = "../examples/interval_histogram.rs"]
mod interval_histogram;

#[test]
fn interval_histogram_runs() {
    interval_histogram::run_example().expect("interval_histogram example should run");
}

#[path = "../examples/correlation_time.rs"]
mod correlation_time;

#[test]
fn correlation_time_runs() {
    correlation_time::run_example().expect("correlation_time example should run");
}

#[path = "../examples/scaling_sweep.rs"]
mod scaling_sweep;

#[test]
fn scaling_sweep_runs() {
    scaling_sweep::run_example().expect("scaling_sweep example should run");
}

#[path = "../examples/physical_prediction.rs"]
mod physical_prediction;

#[test]
fn physical_prediction_runs() {
    physical_prediction::run_example().expect("physical_prediction example should run");
}

#[path = "../examples/config_pipeline.rs"]
mod config_pipeline;

#[test]
fn config_pipeline_runs() {
    config_pipeline::run_example().expect("config_pipeline example should run");
}
