//! Flat `key = value` configuration.
//!
//! Values are layered defaults < file < command-line flags. Every resolved
//! value remembers where it came from so output headers can echo it.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::dynamics::{InitialState, SpinBranch, StopCriterion};
use crate::error::{Error, Result};
use crate::io::{self, Header};
use crate::noise::{InitialSign, Sign, TelegraphConfig};
use crate::stats::FitWeighting;
use crate::sweep::{log_spaced, DtauRule, SweepGrid};
use crate::units::{to_dimensionless, ModelParams, NoiseSource, PhysicalParams};

/// Every accepted key with its unit or meaning.
pub const KEYS: &[(&str, &str)] = &[
    // Laboratory parameters.
    ("f_c_hz", "cantilever frequency f_c, Hz"),
    ("k_c_n_per_m", "cantilever spring constant, N/m"),
    ("b1_tesla", "rf field amplitude B_1, T"),
    ("grad_t_per_m", "field gradient |dB_z/dx|, T/m"),
    ("x_m_meters", "tip oscillation amplitude X_m, m"),
    ("noise_amp_meters", "random tip vibration amplitude, m"),
    ("delta_bz_tesla", "random z-field amplitude (instead of noise_amp_meters), T"),
    ("gamma", "gyromagnetic ratio, rad/(s T)"),
    ("hbar", "reduced Planck constant, J s"),
    ("mu_b", "Bohr magneton, J/T"),
    // Dimensionless model.
    ("epsilon", "rf field strength, units of omega_c"),
    ("eta", "tip-spin coupling"),
    ("delta", "telegraph amplitude Delta"),
    ("tau0", "mean kick spacing, dimensionless time"),
    ("dtau", "kick spacing half-width, dimensionless time"),
    ("x_m", "tip amplitude, units of X0"),
    ("domega", "relative tip frequency shift"),
    ("initial_sign", "telegraph sign at time zero: +1, -1 or random"),
    ("initial_branch", "spin branch at time zero: +1 or -1"),
    ("initial_phase", "tip phase at time zero, rad"),
    // Run control.
    ("kicks", "number of kicks to simulate"),
    ("tau_max", "simulated duration, dimensionless time"),
    ("seed", "64-bit seed of the run"),
    // Statistics.
    ("bin_width", "fine histogram bin width, dimensionless time"),
    ("min_count", "minimum peak count entering the envelope fit"),
    ("weighting", "envelope fit weighting: unweighted or counts"),
    // Correlation.
    ("sample_dt", "sign-signal sampling step, dimensionless time"),
    ("max_lag", "largest correlation lag, dimensionless time"),
    ("threshold", "lowest C entering the exponential fit"),
    ("method", "correlation estimator: transform or direct"),
    // Sweep.
    ("delta_values", "comma-separated Delta grid"),
    ("tau0_values", "comma-separated tau0 grid"),
    ("delta_min", "log grid: smallest Delta"),
    ("delta_max", "log grid: largest Delta"),
    ("delta_count", "log grid: number of Delta values"),
    ("tau0_min", "log grid: smallest tau0"),
    ("tau0_max", "log grid: largest tau0"),
    ("tau0_count", "log grid: number of tau0 values"),
    ("dtau_rule", "sweep dtau: fraction:<f> (of tau0) or fixed:<value>"),
    ("kicks_per_point", "kick budget per grid point"),
    ("target_jumps", "jumps to collect per grid point (0 disables)"),
    ("runs_per_point", "independent runs per grid point"),
    ("master_seed", "seed from which all sweep runs are derived"),
];

const PHYSICAL_KEYS: &[&str] = &[
    "f_c_hz",
    "k_c_n_per_m",
    "b1_tesla",
    "grad_t_per_m",
    "x_m_meters",
    "noise_amp_meters",
    "delta_bz_tesla",
    "gamma",
    "hbar",
    "mu_b",
];

/// Relative disagreement tolerated between an explicit dimensionless value
/// and the one derived from explicit laboratory parameters.
pub const CONFLICT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    Derived,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Derived => "derived",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Raw layered settings.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, source: Source) -> Result<()> {
        if !is_known(key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), (value.into(), source));
        Ok(())
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut s = Settings::new();
        s.merge_str(text, path)?;
        Ok(s)
    }

    /// Adds file-level values from `text`.
    pub fn merge_str(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let k = k.trim();
            if !is_known(k) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("unknown key `{k}`"),
                });
            }
            self.set(k, v.trim(), Source::File)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    pub fn raw(&self, key: &str) -> Option<(&str, Source)> {
        self.values.get(key).map(|(v, s)| (v.as_str(), *s))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_list(&self, key: &'static str) -> Result<Option<Vec<f64>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::invalid(key, format!("cannot parse `{s}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// A resolved value and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub key: String,
    pub value: String,
    pub source: Source,
}

/// Fully resolved configuration of a simulation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelParams,
    pub telegraph: TelegraphConfig,
    /// Present when any laboratory parameter was given explicitly.
    pub physical: Option<PhysicalParams>,
    /// Laboratory parameters in force (explicit or built-in).
    pub physical_or_default: PhysicalParams,
    pub initial_state: InitialState,
    pub stop: Option<StopCriterion>,
    pub seed: u64,
    pub provenance: Vec<Provenance>,
}

impl RunConfig {
    /// `# key = value (source)` header lines for every resolved value.
    pub fn header(&self) -> Header {
        let mut h = Header::new();
        for p in &self.provenance {
            h.push(p.key.clone(), format!("{} ({})", p.value, p.source));
        }
        h
    }
}

struct Resolver<'a> {
    settings: &'a Settings,
    provenance: Vec<Provenance>,
}

impl Resolver<'_> {
    fn record(&mut self, key: &str, value: impl ToString, source: Source) {
        self.provenance.push(Provenance {
            key: key.to_string(),
            value: value.to_string(),
            source,
        });
    }

    fn number(&mut self, key: &'static str, default: f64, default_source: Source) -> Result<f64> {
        match self.settings.raw(key) {
            Some((_, src)) => {
                let v: f64 = self.settings.get(key)?.expect("present");
                self.record(key, io::format_number(v), src);
                Ok(v)
            }
            None => {
                self.record(key, io::format_number(default), default_source);
                Ok(default)
            }
        }
    }

    /// Explicit dimensionless value, checked against the derived one when
    /// laboratory parameters were given.
    fn model_value(&mut self, key: &'static str, derived: f64, check: bool) -> Result<f64> {
        let v = self.number(key, derived, Source::Derived)?;
        if check && self.settings.contains(key) {
            let rel = ((v - derived) / derived).abs();
            if !(rel <= CONFLICT_TOLERANCE) {
                return Err(Error::Config(format!(
                    "{key} = {v} conflicts with {derived} derived from the laboratory parameters"
                )));
            }
        }
        Ok(v)
    }
}

fn physical_from(settings: &Settings, r: &mut Resolver<'_>) -> Result<PhysicalParams> {
    let d = PhysicalParams::default();
    let noise = match (
        settings.get::<f64>("noise_amp_meters")?,
        settings.get::<f64>("delta_bz_tesla")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either noise_amp_meters or delta_bz_tesla, not both".into(),
            ))
        }
        (None, Some(_)) => NoiseSource::FieldOffset(r.number("delta_bz_tesla", 0.0, Source::Default)?),
        _ => {
            let default = match d.noise {
                NoiseSource::Displacement(x) => x,
                NoiseSource::FieldOffset(_) => unreachable!(),
            };
            NoiseSource::Displacement(r.number("noise_amp_meters", default, Source::Default)?)
        }
    };
    let phys = PhysicalParams {
        cantilever_frequency: r.number("f_c_hz", d.cantilever_frequency, Source::Default)?,
        spring_constant: r.number("k_c_n_per_m", d.spring_constant, Source::Default)?,
        rf_field: r.number("b1_tesla", d.rf_field, Source::Default)?,
        field_gradient: r.number("grad_t_per_m", d.field_gradient, Source::Default)?,
        ct_amplitude: r.number("x_m_meters", d.ct_amplitude, Source::Default)?,
        noise,
        gyromagnetic_ratio: r.number("gamma", d.gyromagnetic_ratio, Source::Default)?,
        reduced_planck: r.number("hbar", d.reduced_planck, Source::Default)?,
        bohr_magneton: r.number("mu_b", d.bohr_magneton, Source::Default)?,
    };
    phys.validate()?;
    Ok(phys)
}

/// Default telegraph amplitude when no noise amplitude is configured.
pub const DEFAULT_DELTA: f64 = 100.0;
/// Default mean kick spacing.
pub const DEFAULT_TAU0: f64 = 0.01;

/// Resolves model, telegraph, initial state, stop criterion and seed.
pub fn resolve_run_config(settings: &Settings) -> Result<RunConfig> {
    let mut r = Resolver {
        settings,
        provenance: Vec::new(),
    };
    let explicit_physical = PHYSICAL_KEYS.iter().any(|k| settings.contains(k));
    let explicit_noise = settings.contains("noise_amp_meters") || settings.contains("delta_bz_tesla");
    let phys = physical_from(settings, &mut r)?;
    let derived = to_dimensionless(&phys)?;

    let epsilon = r.model_value("epsilon", derived.epsilon, explicit_physical)?;
    let eta = r.model_value("eta", derived.eta, explicit_physical)?;
    let x_m = r.model_value("x_m", derived.x_m, explicit_physical)?;
    let domega = r.model_value("domega", derived.domega, explicit_physical)?;
    let delta = if explicit_noise {
        r.model_value("delta", derived.delta_amp, true)?
    } else {
        r.number("delta", DEFAULT_DELTA, Source::Default)?
    };
    let tau0 = r.number("tau0", DEFAULT_TAU0, Source::Default)?;
    let dtau = r.number("dtau", tau0 / 4.0, Source::Default)?;
    let model = ModelParams::new(epsilon, eta, delta, tau0, dtau, x_m, domega)?;

    let initial_sign: InitialSign = settings.get_or("initial_sign", InitialSign::Random)?;
    r.record(
        "initial_sign",
        initial_sign,
        settings.raw("initial_sign").map_or(Source::Default, |(_, s)| s),
    );
    let branch: Sign = settings.get_or("initial_branch", Sign::Plus)?;
    r.record(
        "initial_branch",
        branch,
        settings.raw("initial_branch").map_or(Source::Default, |(_, s)| s),
    );
    let phase = r.number("initial_phase", 0.0, Source::Default)?;
    let telegraph = TelegraphConfig::new(delta, tau0, dtau, initial_sign)?;

    let stop = match (settings.get::<u64>("kicks")?, settings.get::<f64>("tau_max")?) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either kicks or tau_max, not both".into()))
        }
        (Some(n), None) => Some(StopCriterion::MaxKicks(n)),
        (None, Some(t)) => Some(StopCriterion::MaxTime(t)),
        (None, None) => None,
    };
    if let Some(s) = &stop {
        s.validate()?;
        let src = settings
            .raw("kicks")
            .or(settings.raw("tau_max"))
            .map_or(Source::Default, |(_, s)| s);
        r.record("stop", s, src);
    }
    let seed: u64 = settings.get_or("seed", 0)?;
    r.record("seed", seed, settings.raw("seed").map_or(Source::Default, |(_, s)| s));

    Ok(RunConfig {
        model,
        telegraph,
        physical: explicit_physical.then_some(phys),
        physical_or_default: phys,
        initial_state: InitialState {
            branch: SpinBranch(branch),
            phase,
        },
        stop,
        seed,
        provenance: r.provenance,
    })
}

/// Resolved laboratory parameters with provenance, for `convert`.
pub fn resolve_physical(settings: &Settings) -> Result<(PhysicalParams, Header)> {
    let mut r = Resolver {
        settings,
        provenance: Vec::new(),
    };
    let phys = physical_from(settings, &mut r)?;
    let mut h = Header::new();
    for p in r.provenance {
        h.push(p.key, format!("{} ({})", p.value, p.source));
    }
    Ok((phys, h))
}

impl FromStr for DtauRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("dtau_rule", format!("expected kind:value, got `{s}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid("dtau_rule", format!("bad number in `{s}`")))?;
        match kind.trim() {
            "fraction" => Ok(DtauRule::FractionOfTau0(v)),
            "fixed" => Ok(DtauRule::Fixed(v)),
            other => Err(Error::invalid("dtau_rule", format!("unknown kind `{other}`"))),
        }
    }
}

impl fmt::Display for DtauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtauRule::Fixed(v) => write!(f, "fixed:{v}"),
            DtauRule::FractionOfTau0(v) => write!(f, "fraction:{v}"),
        }
    }
}

impl FromStr for FitWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unweighted" => Ok(FitWeighting::Unweighted),
            "counts" => Ok(FitWeighting::Counts),
            other => Err(Error::invalid("weighting", format!("unknown weighting `{other}`"))),
        }
    }
}

fn grid_axis(
    settings: &Settings,
    list: &'static str,
    keys: [&'static str; 3],
    defaults: (f64, f64, usize),
) -> Result<Vec<f64>> {
    if let Some(v) = settings.get_list(list)? {
        if keys.iter().any(|k| settings.contains(k)) {
            return Err(Error::Config(format!("give either {list} or {}/{}/{}", keys[0], keys[1], keys[2])));
        }
        if v.is_empty() {
            return Err(Error::Config(format!("{list} is empty")));
        }
        return Ok(v);
    }
    log_spaced(
        settings.get_or(keys[0], defaults.0)?,
        settings.get_or(keys[1], defaults.1)?,
        settings.get_or(keys[2], defaults.2)?,
    )
}

/// Builds a sweep grid and the model template (epsilon, eta) from settings.
pub fn resolve_sweep(settings: &Settings) -> Result<(SweepGrid, ModelParams, Header)> {
    let run = resolve_run_config(settings)?;
    let d = SweepGrid::default();
    let grid = SweepGrid {
        delta_values: grid_axis(settings, "delta_values", ["delta_min", "delta_max", "delta_count"], (10.0, 300.0, 4))?,
        tau0_values: grid_axis(settings, "tau0_values", ["tau0_min", "tau0_max", "tau0_count"], (0.001, 1.0, 4))?,
        x_m: run.model.x_m,
        domega: run.model.domega,
        dtau_rule: settings.get_or("dtau_rule", d.dtau_rule)?,
        kicks_per_point: settings.get_or("kicks_per_point", d.kicks_per_point)?,
        target_jumps_per_point: match settings.get::<u64>("target_jumps")? {
            Some(0) => None,
            Some(n) => Some(n),
            None => d.target_jumps_per_point,
        },
        runs_per_point: settings.get_or("runs_per_point", d.runs_per_point)?,
        master_seed: settings.get_or("master_seed", d.master_seed)?,
    };
    grid.validate()?;
    let mut h = Header::new();
    for key in ["epsilon", "eta", "x_m", "domega"] {
        if let Some(p) = run.provenance.iter().find(|p| p.key == key) {
            h.push(key, format!("{} ({})", p.value, p.source));
        }
    }
    let fmt_list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    h.push("delta_values", fmt_list(&grid.delta_values))
        .push("tau0_values", fmt_list(&grid.tau0_values))
        .push("dtau_rule", grid.dtau_rule)
        .push("kicks_per_point", grid.kicks_per_point)
        .push(
            "target_jumps",
            grid.target_jumps_per_point.map_or("off".to_string(), |n| n.to_string()),
        )
        .push("runs_per_point", grid.runs_per_point)
        .push("master_seed", grid.master_seed);
    Ok((grid, run.model, h))
}
