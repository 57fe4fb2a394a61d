//! Command-line front end: `convert`, `simulate`, `stats`, `correlate` and
//! `sweep`.
//!
//! Each pipeline resolves its configuration (defaults < `--config` file <
//! flags), computes everything in memory and then commits all of its output
//! files at once. Exit codes: 0 success, 2 configuration error, 3 runtime
//! or statistical failure, 4 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::config::{resolve_physical, resolve_run_config, resolve_sweep, Settings, Source};
use crate::correlation::{
    autocorrelation, sign_signal, CorrelationMethod, DEFAULT_FIT_THRESHOLD, DEFAULT_SAMPLE_SPACING,
};
use crate::dynamics::Simulation;
use crate::error::{Error, Result};
use crate::io::{self, Header, OutputSet, Report, STDIO_PATH};
use crate::rng::RNG_ALGORITHM;
use crate::stats::{
    build_histogram, fit_peak_envelope, interval_moments, peak_concentration, FitWeighting,
    HistogramMode, DEFAULT_FINE_BIN_WIDTH, DEFAULT_MIN_COUNT,
};
use crate::sweep::{fit_scaling, predict_physical_time, run_sweep};
use crate::units::ConversionReport;

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "OSCAR_JUMPS_OUT_DIR";

const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "oscar-jumps", version, about = "Quantum-jump Monte Carlo for OSCAR MRFM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert laboratory parameters to dimensionless model constants.
    Convert(ConvertArgs),
    /// Simulate one jump trace and write its jump times.
    Simulate(SimulateArgs),
    /// Interval histogram, peak-envelope fit and interval moments of a trace.
    Stats(StatsArgs),
    /// Frequency-shift autocorrelation of a trace and its exponential fit.
    Correlate(CorrelateArgs),
    /// Run a (Delta, tau0) grid and fit the log-log scaling law.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for relative output paths.
    #[arg(long, env = OUT_DIR_ENV, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhysicalArgs {
    /// Cantilever frequency f_c [Hz].
    #[arg(long)]
    pub f_c_hz: Option<f64>,
    /// Spring constant k_c [N/m].
    #[arg(long)]
    pub k_c_n_per_m: Option<f64>,
    /// Rf field amplitude B_1 [T].
    #[arg(long)]
    pub b1_tesla: Option<f64>,
    /// Field gradient |dB_z/dx| [T/m].
    #[arg(long)]
    pub grad_t_per_m: Option<f64>,
    /// Tip oscillation amplitude X_m [m].
    #[arg(long)]
    pub x_m_meters: Option<f64>,
    /// Random tip vibration amplitude [m].
    #[arg(long)]
    pub noise_amp_meters: Option<f64>,
    /// Random z-field amplitude [T] (instead of --noise-amp-meters).
    #[arg(long)]
    pub delta_bz_tesla: Option<f64>,
    /// Gyromagnetic ratio [rad s^-1 T^-1].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Reduced Planck constant [J s].
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Bohr magneton [J/T].
    #[arg(long)]
    pub mu_b: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Rf field strength epsilon [units of omega_c].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Tip-spin coupling eta.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Telegraph amplitude Delta [dimensionless].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Mean kick spacing tau0 [dimensionless time].
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Kick spacing half-width dtau [dimensionless time]; default tau0/4.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Tip amplitude x_m [units of X0].
    #[arg(long)]
    pub x_m: Option<f64>,
    /// Relative tip frequency shift domega.
    #[arg(long)]
    pub domega: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub physical: PhysicalArgs,
    /// Stdout format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also write the report to FILE (text) and FILE.json.
    #[arg(long, value_name = "FILE")]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub physical: PhysicalArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Telegraph sign at time zero: +1, -1 or random.
    #[arg(long, allow_hyphen_values = true)]
    pub initial_sign: Option<String>,
    /// Spin branch at time zero: +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub initial_branch: Option<String>,
    /// Tip phase at time zero [rad].
    #[arg(long)]
    pub initial_phase: Option<f64>,
    /// Number of kicks to simulate.
    #[arg(long)]
    pub kicks: Option<u64>,
    /// Simulated duration [dimensionless time].
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Seed of the run's random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Jumps CSV (`-` for stdout).
    #[arg(long, default_value = "jumps.csv")]
    pub out: PathBuf,
    /// Also dump the first N kicks.
    #[arg(long, value_name = "N")]
    pub dump_kicks: Option<usize>,
    /// Destination of --dump-kicks.
    #[arg(long, default_value = "kicks.csv")]
    pub kicks_out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinMode {
    Fine,
    Peak,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Jumps CSV from `simulate` (`-` for stdin).
    #[arg(long, default_value = STDIO_PATH)]
    pub input: PathBuf,
    /// Binning of histogram.csv.
    #[arg(long, value_enum, default_value_t = BinMode::Fine)]
    pub mode: BinMode,
    /// Fine bin width [dimensionless time]; default pi/50.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Minimum count for a peak to enter the envelope fit; default 50.
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Envelope fit weighting: unweighted or counts.
    #[arg(long)]
    pub weighting: Option<String>,
    #[arg(long, default_value = "histogram.csv")]
    pub histogram_out: PathBuf,
    /// Fit report (text; JSON goes to FILE.json).
    #[arg(long, default_value = "stats_report.txt")]
    pub report_out: PathBuf,
    /// Stdout format of the report.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Jumps CSV from `simulate` (`-` for stdin).
    #[arg(long, default_value = STDIO_PATH)]
    pub input: PathBuf,
    /// Sampling step of the sign signal [dimensionless time]; default pi/8.
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Largest lag [dimensionless time]; default 6x the mean jump interval.
    #[arg(long)]
    pub max_lag: Option<f64>,
    /// Lowest C entering the exponential fit; default 0.05.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Estimator: transform or direct.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, default_value = "correlation.csv")]
    pub out: PathBuf,
    /// Fit report (text; JSON goes to FILE.json).
    #[arg(long, default_value = "correlation_report.txt")]
    pub report_out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub physical: PhysicalArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated Delta values.
    #[arg(long)]
    pub delta_values: Option<String>,
    /// Comma-separated tau0 values.
    #[arg(long)]
    pub tau0_values: Option<String>,
    /// fraction:<f> or fixed:<value>.
    #[arg(long)]
    pub dtau_rule: Option<String>,
    #[arg(long)]
    pub kicks_per_point: Option<u64>,
    /// Jumps to collect per point (0: run the full kick budget).
    #[arg(long)]
    pub target_jumps: Option<u64>,
    #[arg(long)]
    pub runs_per_point: Option<u32>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    /// Fit report (text; JSON goes to FILE.json).
    #[arg(long, default_value = "sweep_report.txt")]
    pub report_out: PathBuf,
    /// Predict the physical mean jump interval at `delta,tau0`.
    #[arg(long, value_name = "DELTA,TAU0")]
    pub predict: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn push_flag<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) -> Result<()> {
    if let Some(v) = v {
        s.set(key, v.to_string(), Source::Flag)?;
    }
    Ok(())
}

impl PhysicalArgs {
    fn apply(&self, s: &mut Settings) -> Result<()> {
        push_flag(s, "f_c_hz", &self.f_c_hz)?;
        push_flag(s, "k_c_n_per_m", &self.k_c_n_per_m)?;
        push_flag(s, "b1_tesla", &self.b1_tesla)?;
        push_flag(s, "grad_t_per_m", &self.grad_t_per_m)?;
        push_flag(s, "x_m_meters", &self.x_m_meters)?;
        push_flag(s, "noise_amp_meters", &self.noise_amp_meters)?;
        push_flag(s, "delta_bz_tesla", &self.delta_bz_tesla)?;
        push_flag(s, "gamma", &self.gamma)?;
        push_flag(s, "hbar", &self.hbar)?;
        push_flag(s, "mu_b", &self.mu_b)
    }
}

impl ModelArgs {
    fn apply(&self, s: &mut Settings) -> Result<()> {
        push_flag(s, "epsilon", &self.epsilon)?;
        push_flag(s, "eta", &self.eta)?;
        push_flag(s, "delta", &self.delta)?;
        push_flag(s, "tau0", &self.tau0)?;
        push_flag(s, "dtau", &self.dtau)?;
        push_flag(s, "x_m", &self.x_m)?;
        push_flag(s, "domega", &self.domega)
    }
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings> {
        match &self.config {
            Some(p) => Settings::load(p),
            None => Ok(Settings::new()),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() && path != Path::new(STDIO_PATH) => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// What a pipeline produced: files to commit and text for stdout.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: OutputSet,
    pub stdout: String,
}

fn base_header(command: &str) -> Header {
    let mut h = Header::new();
    h.push("tool", TOOL)
        .push("command", command)
        .push("rng", RNG_ALGORITHM);
    h
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn convert(args: &ConvertArgs) -> Result<Outputs> {
    let mut settings = args.common.settings()?;
    args.physical.apply(&mut settings)?;
    let (phys, _) = resolve_physical(&settings)?;
    let c = ConversionReport::new(&phys)?;
    let mut report = Report::new();
    for (k, v) in c.to_key_values() {
        report.push(k, num(v));
    }
    let mut out = Outputs::default();
    if let Some(p) = &args.report_out {
        out.files.add_report(&args.common.resolve(p), &report);
    }
    out.stdout = render(&report, args.format);
    Ok(out)
}

pub fn simulate(args: &SimulateArgs) -> Result<Outputs> {
    let mut s = args.common.settings()?;
    args.physical.apply(&mut s)?;
    args.model.apply(&mut s)?;
    push_flag(&mut s, "initial_sign", &args.initial_sign)?;
    push_flag(&mut s, "initial_branch", &args.initial_branch)?;
    push_flag(&mut s, "initial_phase", &args.initial_phase)?;
    push_flag(&mut s, "kicks", &args.kicks)?;
    push_flag(&mut s, "tau_max", &args.tau_max)?;
    push_flag(&mut s, "seed", &args.seed)?;
    let cfg = resolve_run_config(&s)?;
    let stop = cfg
        .stop
        .ok_or_else(|| Error::Config("simulate needs --kicks or --tau-max".into()))?;

    let sim = Simulation::with_initial_state(&cfg.model, &cfg.telegraph, cfg.seed, cfg.initial_state)?;
    let mut header = base_header("simulate");
    header.extend(&cfg.header());
    header.push("initial_telegraph_sign", sim.telegraph_sign());
    let mut out = Outputs::default();

    if let Some(n) = args.dump_kicks {
        // A second simulation on the same seed keeps the trace independent
        // of whether kicks are dumped.
        let mut probe = Simulation::with_initial_state(&cfg.model, &cfg.telegraph, cfg.seed, cfg.initial_state)?;
        let kicks: Vec<_> = (0..n).map(|_| probe.step()).collect();
        out.files
            .add(&args.common.resolve(&args.kicks_out), io::kicks_csv(&header, &kicks));
    }
    let trace = sim.run(stop)?;
    header.extend(&io::trace_header(&trace));
    let dest = args.common.resolve(&args.out);
    out.files.add(&dest, io::jumps_csv(&header, &trace));
    if dest != Path::new(STDIO_PATH) {
        out.stdout = format!(
            "{} jumps in {} kicks over tau = {}\n",
            trace.jump_count(),
            trace.kick_count,
            trace.total_duration
        );
    }
    Ok(out)
}

pub fn stats(args: &StatsArgs) -> Result<Outputs> {
    let mut s = args.common.settings()?;
    push_flag(&mut s, "bin_width", &args.bin_width)?;
    push_flag(&mut s, "min_count", &args.min_count)?;
    push_flag(&mut s, "weighting", &args.weighting)?;
    let bin_width: f64 = s.get_or("bin_width", DEFAULT_FINE_BIN_WIDTH)?;
    let min_count: u64 = s.get_or("min_count", DEFAULT_MIN_COUNT)?;
    let weighting: FitWeighting = s.get_or("weighting", FitWeighting::Unweighted)?;

    let (input_header, trace) = io::load_jumps(&args.input)?;
    let moments = interval_moments(&trace)?;
    let peaks = build_histogram(&trace, HistogramMode::Peak)?;
    let fit = fit_peak_envelope(&peaks, min_count, weighting)?;
    let hist = match args.mode {
        BinMode::Peak => peaks.clone(),
        BinMode::Fine => build_histogram(&trace, HistogramMode::Fine { bin_width })?,
    };

    let mut header = base_header("stats");
    header
        .push("input", args.input.display())
        .push("mode", format!("{:?}", args.mode).to_lowercase())
        .push("bin_width", hist.bin_width)
        .push("min_count", min_count)
        .push("weighting", format!("{weighting:?}").to_lowercase());
    for (k, v) in input_header.entries() {
        header.push(format!("input.{k}"), v);
    }

    let mut report = Report::new();
    report
        .push("tau_d", num(fit.tau_d))
        .push("intercept", num(fit.intercept))
        .push("r_squared", num(fit.r_squared))
        .push("mean", num(moments.mean))
        .push("std", num(moments.std))
        .push("n_intervals", moments.count)
        .push("fit_peaks", fit.fit_range.len())
        .push("peak_concentration", num(peak_concentration(trace.intervals(), 0.2)))
        .push("seed", trace.seed);

    let mut out = Outputs::default();
    out.files
        .add(&args.common.resolve(&args.histogram_out), io::histogram_csv(&header, &hist));
    out.files.add_report(&args.common.resolve(&args.report_out), &report);
    out.stdout = render(&report, args.format);
    Ok(out)
}

pub fn correlate(args: &CorrelateArgs) -> Result<Outputs> {
    let mut s = args.common.settings()?;
    push_flag(&mut s, "sample_dt", &args.sample_dt)?;
    push_flag(&mut s, "max_lag", &args.max_lag)?;
    push_flag(&mut s, "threshold", &args.threshold)?;
    push_flag(&mut s, "method", &args.method)?;
    let sample_dt: f64 = s.get_or("sample_dt", DEFAULT_SAMPLE_SPACING)?;
    let threshold: f64 = s.get_or("threshold", DEFAULT_FIT_THRESHOLD)?;
    let method = match s.get::<String>("method")?.as_deref() {
        None | Some("transform") => CorrelationMethod::Transform,
        Some("direct") => CorrelationMethod::Direct,
        Some(other) => return Err(Error::invalid("method", format!("unknown estimator `{other}`"))),
    };

    let (input_header, trace) = io::load_jumps(&args.input)?;
    let moments = interval_moments(&trace)?;
    let signal = sign_signal(&trace, sample_dt)?;
    let max_lag = match s.get::<f64>("max_lag")? {
        Some(l) => l,
        None => (6.0 * moments.mean).min(0.5 * signal.duration()),
    };
    let (result, fit) = autocorrelation(&signal, max_lag, method)?.with_fit(threshold)?;

    let mut header = base_header("correlate");
    header
        .push("input", args.input.display())
        .push("sample_dt", sample_dt)
        .push("max_lag", max_lag)
        .push("threshold", threshold)
        .push("method", format!("{method:?}").to_lowercase());
    for (k, v) in input_header.entries() {
        header.push(format!("input.{k}"), v);
    }

    let mut report = Report::new();
    report
        .push("tau_c", num(fit.tau_c))
        .push("fit_points", fit.fit_points)
        .push("r_squared", num(fit.r_squared))
        .push("ratio_mean_jump_over_tau_c", num(moments.mean / fit.tau_c))
        .push("mean_tau_jump", num(moments.mean))
        .push("signal_mean", num(result.signal_mean))
        .push("samples", signal.len());

    let mut out = Outputs::default();
    out.files
        .add(&args.common.resolve(&args.out), io::correlation_csv(&header, &result));
    out.files.add_report(&args.common.resolve(&args.report_out), &report);
    out.stdout = render(&report, args.format);
    Ok(out)
}

fn parse_predict(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid("predict", format!("expected DELTA,TAU0, got `{spec}`")))?;
    match parts.as_slice() {
        [d, t] => Ok((*d, *t)),
        _ => Err(Error::invalid("predict", format!("expected DELTA,TAU0, got `{spec}`"))),
    }
}

pub fn sweep(args: &SweepArgs) -> Result<Outputs> {
    let mut s = args.common.settings()?;
    args.physical.apply(&mut s)?;
    args.model.apply(&mut s)?;
    push_flag(&mut s, "delta_values", &args.delta_values)?;
    push_flag(&mut s, "tau0_values", &args.tau0_values)?;
    push_flag(&mut s, "dtau_rule", &args.dtau_rule)?;
    push_flag(&mut s, "kicks_per_point", &args.kicks_per_point)?;
    push_flag(&mut s, "target_jumps", &args.target_jumps)?;
    push_flag(&mut s, "runs_per_point", &args.runs_per_point)?;
    push_flag(&mut s, "master_seed", &args.master_seed)?;
    let predict = args.predict.as_deref().map(parse_predict).transpose()?;
    let (grid, template, grid_header) = resolve_sweep(&s)?;
    let phys = resolve_run_config(&s)?.physical_or_default;

    let table = run_sweep(&grid, &template)?;
    let fit = fit_scaling(&table.points)?;

    let mut header = base_header("sweep");
    header.extend(&grid_header);
    let mut report = Report::new();
    report
        .push("p", num(fit.p))
        .push("q", num(fit.q))
        .push("residual_rms", num(fit.residual_rms))
        .push("r_squared", num(fit.r_squared))
        .push("points_fitted", fit.points.len())
        .push("points_flagged", table.flagged().count());
    if let Some((delta, tau0)) = predict {
        report
            .push("predict_delta", num(delta))
            .push("predict_tau0", num(tau0))
            .push("predict_tau_jump", num(fit.predict_tau(delta, tau0)))
            .push("predict_seconds", num(predict_physical_time(&fit, delta, tau0, &phys)?));
    }
    let mut out = Outputs::default();
    out.files
        .add(&args.common.resolve(&args.out), io::sweep_csv(&header, &table));
    out.files.add_report(&args.common.resolve(&args.report_out), &report);
    out.stdout = render(&report, args.format);
    for p in table.flagged() {
        eprintln!(
            "warning: Delta = {}, tau0 = {}: {}",
            p.delta,
            p.tau0,
            p.warning.as_deref().unwrap_or_default()
        );
    }
    Ok(out)
}

/// Dispatches a parsed command line.
pub fn run_pipeline(cli: &Cli) -> Result<Outputs> {
    match &cli.command {
        Command::Convert(a) => convert(a),
        Command::Simulate(a) => simulate(a),
        Command::Stats(a) => stats(a),
        Command::Correlate(a) => correlate(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// Parses `args`, runs the pipeline and commits its outputs.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = run_pipeline(&cli).and_then(|out| {
        out.files.commit()?;
        print!("{}", out.stdout);
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
