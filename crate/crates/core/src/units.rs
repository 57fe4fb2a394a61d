//! Conversion between laboratory (SI) parameters and the dimensionless
//! constants of the cantilever-spin model.
//!
//! Lengths are measured in the cantilever's quantum length
//! `X0 = sqrt(hbar * omega_c / k_c)`, momenta in `P0 = hbar / X0`, and time in
//! `tau = omega_c * t`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Electron gyromagnetic ratio magnitude, rad s^-1 T^-1.
pub const ELECTRON_GYROMAGNETIC_RATIO: f64 = 1.760_859e11;
/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;
/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Source of the random-field amplitude `Delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// Random tip displacement (m); the field offset is `G * x_noise`.
    Displacement(f64),
    /// Direct z-field offset (T).
    FieldOffset(f64),
}

/// Laboratory-frame parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    /// Cantilever frequency `f_c = omega_c / 2 pi`, Hz.
    pub cantilever_frequency: f64,
    /// Effective spring constant, N/m.
    pub spring_constant: f64,
    /// Rotating rf field amplitude `B_1`, T.
    pub rf_field: f64,
    /// Field gradient `|dB_z/dx|`, T/m.
    pub field_gradient: f64,
    /// Cantilever tip oscillation amplitude `X_m`, m.
    pub ct_amplitude: f64,
    pub noise: NoiseSource,
    pub gyromagnetic_ratio: f64,
    pub reduced_planck: f64,
    pub bohr_magneton: f64,
}

impl Default for PhysicalParams {
    /// The single-spin OSCAR setup: 6.6 kHz, 6e-4 N/m, 0.3 mT, 4.3e5 T/m,
    /// 10 nm tip amplitude and 1 pm of random tip vibration.
    fn default() -> Self {
        Self {
            cantilever_frequency: 6.6e3,
            spring_constant: 6e-4,
            rf_field: 3e-4,
            field_gradient: 4.3e5,
            ct_amplitude: 10e-9,
            noise: NoiseSource::Displacement(1e-12),
            gyromagnetic_ratio: ELECTRON_GYROMAGNETIC_RATIO,
            reduced_planck: REDUCED_PLANCK,
            bohr_magneton: BOHR_MAGNETON,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("cantilever_frequency", self.cantilever_frequency)?;
        positive("spring_constant", self.spring_constant)?;
        positive("rf_field", self.rf_field)?;
        positive("field_gradient", self.field_gradient)?;
        positive("ct_amplitude", self.ct_amplitude)?;
        match self.noise {
            NoiseSource::Displacement(x) => positive("noise_vibration_amplitude", x)?,
            NoiseSource::FieldOffset(b) => positive("noise_field_offset", b)?,
        }
        positive("gyromagnetic_ratio", self.gyromagnetic_ratio)?;
        positive("reduced_planck", self.reduced_planck)?;
        positive("bohr_magneton", self.bohr_magneton)
    }

    /// Angular cantilever frequency, rad/s.
    pub fn omega_c(&self) -> f64 {
        2.0 * PI * self.cantilever_frequency
    }

    /// Amplitude of the random z-field, T.
    pub fn noise_field(&self) -> f64 {
        match self.noise {
            NoiseSource::Displacement(x) => self.field_gradient * x,
            NoiseSource::FieldOffset(b) => b,
        }
    }
}

/// Dimensionless constants of the jump model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Rf field strength in units of `omega_c`.
    pub epsilon: f64,
    /// Tip-spin coupling.
    pub eta: f64,
    /// Telegraph amplitude.
    pub delta_amp: f64,
    /// Mean spacing between telegraph kicks.
    pub tau0: f64,
    /// Half-width of the kick-spacing jitter.
    pub dtau: f64,
    /// Tip amplitude in units of `X0`.
    pub x_m: f64,
    /// Relative cantilever frequency shift from spin back-action.
    pub domega: f64,
    /// Rabi period `2 pi / epsilon`.
    pub tau_rabi: f64,
}

impl ModelParams {
    /// Builds a parameter set with `tau_rabi` derived from `epsilon`.
    pub fn new(
        epsilon: f64,
        eta: f64,
        delta_amp: f64,
        tau0: f64,
        dtau: f64,
        x_m: f64,
        domega: f64,
    ) -> Result<Self> {
        let params = Self {
            epsilon,
            eta,
            delta_amp,
            tau0,
            dtau,
            x_m,
            domega,
            tau_rabi: 2.0 * PI / epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Rounded reference values: epsilon = 1270, eta = 0.078,
    /// x_m = 1.2e5, domega = 4.2e-7, with `Delta = 100`, `tau0 = 0.01`
    /// and `dtau = tau0 / 4`.
    pub fn reference() -> Self {
        Self::new(1270.0, 0.078, 100.0, 0.01, 0.0025, 1.2e5, 4.2e-7)
            .expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        positive("epsilon", self.epsilon)?;
        positive("x_m", self.x_m)?;
        positive("tau0", self.tau0)?;
        for (name, v) in [
            ("eta", self.eta),
            ("delta", self.delta_amp),
            ("dtau", self.dtau),
            ("domega", self.domega),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.dtau > self.tau0 {
            return Err(Error::invalid(
                "dtau",
                format!("must not exceed tau0 = {}, got {}", self.tau0, self.dtau),
            ));
        }
        // Branch rates 1 -+ domega must stay positive.
        if self.domega >= 1.0 {
            return Err(Error::invalid("domega", format!("must be < 1, got {}", self.domega)));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta_amp: f64) -> Self {
        self.delta_amp = delta_amp;
        self
    }

    pub fn with_tau0(mut self, tau0: f64, dtau: f64) -> Self {
        self.tau0 = tau0;
        self.dtau = dtau;
        self
    }

    pub fn with_x_m(mut self, x_m: f64) -> Self {
        self.x_m = x_m;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_domega(mut self, domega: f64) -> Self {
        self.domega = domega;
        self
    }
}

/// Quantum length `X0` (m) and momentum `P0` (N s) units of the cantilever.
pub fn quantum_units(phys: &PhysicalParams) -> Result<(f64, f64)> {
    phys.validate()?;
    let x0 = (phys.reduced_planck * phys.omega_c() / phys.spring_constant).sqrt();
    Ok((x0, phys.reduced_planck / x0))
}

/// Converts laboratory parameters to the dimensionless model constants.
///
/// `tau0` is set to the Rabi period and `dtau` to a quarter of it; both are
/// free simulation parameters that callers normally override.
pub fn to_dimensionless(phys: &PhysicalParams) -> Result<ModelParams> {
    let (x0, _) = quantum_units(phys)?;
    let omega_c = phys.omega_c();
    let gamma = phys.gyromagnetic_ratio;
    let epsilon = gamma * phys.rf_field / omega_c;
    let eta = gamma * (phys.reduced_planck / (phys.spring_constant * omega_c)).sqrt()
        * phys.field_gradient
        / 2.0;
    let delta_amp = gamma * phys.noise_field() / omega_c;
    let x_m = phys.ct_amplitude / x0;
    let domega = 2.0 * phys.field_gradient * phys.bohr_magneton
        / (PI * phys.ct_amplitude * phys.spring_constant);
    let tau_rabi = 2.0 * PI / epsilon;
    let params = ModelParams {
        epsilon,
        eta,
        delta_amp,
        tau0: tau_rabi,
        dtau: tau_rabi / 4.0,
        x_m,
        domega,
        tau_rabi,
    };
    params.validate()?;
    Ok(params)
}

/// Converts a dimensionless time to seconds.
pub fn dimensionless_time_to_seconds(tau: f64, phys: &PhysicalParams) -> Result<f64> {
    positive("cantilever_frequency", phys.cantilever_frequency)?;
    Ok(tau / phys.omega_c())
}

/// Everything `convert` reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConversionReport {
    pub omega_c: f64,
    pub x0_m: f64,
    pub p0_ns: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub x_m: f64,
    pub domega: f64,
    pub tau_rabi: f64,
}

impl ConversionReport {
    pub fn new(phys: &PhysicalParams) -> Result<Self> {
        let (x0, p0) = quantum_units(phys)?;
        let m = to_dimensionless(phys)?;
        Ok(Self {
            omega_c: phys.omega_c(),
            x0_m: x0,
            p0_ns: p0,
            epsilon: m.epsilon,
            eta: m.eta,
            delta: m.delta_amp,
            x_m: m.x_m,
            domega: m.domega,
            tau_rabi: m.tau_rabi,
        })
    }

    pub fn to_key_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("omega_c", self.omega_c),
            ("x0_m", self.x0_m),
            ("p0_ns", self.p0_ns),
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("delta", self.delta),
            ("x_m", self.x_m),
            ("domega", self.domega),
            ("tau_rabi", self.tau_rabi),
        ]
    }
}
