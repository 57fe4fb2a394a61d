//! Random telegraph field: the amplitude flips between `+Delta` and `-Delta`
//! at kicks whose spacings are uniform on `[tau0 - dtau, tau0 + dtau]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::uniform01;

/// A sign, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Sign::Plus),
            "-1" | "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Config(format!("expected +1 or -1, got `{other}`"))),
        }
    }
}

/// Telegraph sign before the first kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum InitialSign {
    Fixed(Sign),
    /// Drawn with equal probability from the run's stream.
    #[default]
    Random,
}

impl fmt::Display for InitialSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSign::Fixed(s) => s.fmt(f),
            InitialSign::Random => f.write_str("random"),
        }
    }
}

impl FromStr for InitialSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "random" {
            Ok(InitialSign::Random)
        } else {
            s.parse().map(InitialSign::Fixed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelegraphConfig {
    pub delta_amp: f64,
    pub tau0: f64,
    pub dtau: f64,
    pub initial_sign: InitialSign,
}

impl TelegraphConfig {
    pub fn new(delta_amp: f64, tau0: f64, dtau: f64, initial_sign: InitialSign) -> Result<Self> {
        let config = Self {
            delta_amp,
            tau0,
            dtau,
            initial_sign,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_amp.is_finite() && self.delta_amp >= 0.0) {
            return Err(Error::invalid("delta", format!("must be >= 0, got {}", self.delta_amp)));
        }
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return Err(Error::invalid("tau0", format!("must be > 0, got {}", self.tau0)));
        }
        if !(self.dtau.is_finite() && (0.0..=self.tau0).contains(&self.dtau)) {
            return Err(Error::invalid(
                "dtau",
                format!("must lie in [0, tau0 = {}], got {}", self.tau0, self.dtau),
            ));
        }
        Ok(())
    }

    /// Shortest and longest possible gap between kicks.
    pub fn interval_bounds(&self) -> (f64, f64) {
        (self.tau0 - self.dtau, self.tau0 + self.dtau)
    }

    #[inline]
    pub(crate) fn draw_interval<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.tau0 + self.dtau * (2.0 * uniform01(rng) - 1.0)
    }

    pub(crate) fn draw_initial_sign<R: Rng + ?Sized>(&self, rng: &mut R) -> Sign {
        match self.initial_sign {
            InitialSign::Fixed(s) => s,
            InitialSign::Random => {
                if uniform01(rng) < 0.5 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            }
        }
    }
}

/// One telegraph flip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KickEvent {
    pub time: f64,
    /// Sign of the telegraph field after this kick.
    pub sign_after: Sign,
}

impl KickEvent {
    /// Pseudo-event describing the state at time zero.
    pub fn origin(sign: Sign) -> Self {
        Self {
            time: 0.0,
            sign_after: sign,
        }
    }
}

/// The kick following `current`.
pub fn next_kick<R: Rng + ?Sized>(
    config: &TelegraphConfig,
    current: &KickEvent,
    rng: &mut R,
) -> KickEvent {
    KickEvent {
        time: current.time + config.draw_interval(rng),
        sign_after: current.sign_after.flipped(),
    }
}

/// Lazy stream of kicks; holds only the most recent event.
pub struct TelegraphNoise<'a, R: Rng + ?Sized> {
    config: TelegraphConfig,
    current: KickEvent,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> TelegraphNoise<'a, R> {
    /// Starts at time zero. A random initial sign consumes one draw.
    pub fn new(config: TelegraphConfig, rng: &'a mut R) -> Self {
        let sign = config.draw_initial_sign(rng);
        Self {
            config,
            current: KickEvent::origin(sign),
            rng,
        }
    }

    pub fn initial_sign(&self) -> Sign {
        self.current.sign_after
    }

    pub fn config(&self) -> &TelegraphConfig {
        &self.config
    }
}

impl<R: Rng + ?Sized> Iterator for TelegraphNoise<'_, R> {
    type Item = KickEvent;

    fn next(&mut self) -> Option<KickEvent> {
        self.current = next_kick(&self.config, &self.current, self.rng);
        Some(self.current)
    }
}

/// Value of the telegraph field at `tau`, given the kicks generated so far.
///
/// The generated range is `[0, last kick]`; a kick time belongs to the
/// segment it opens.
pub fn value_at(events: &[KickEvent], config: &TelegraphConfig, tau: f64) -> Result<f64> {
    let last = events
        .last()
        .ok_or_else(|| Error::InsufficientData("no kicks generated".into()))?;
    if !(0.0..=last.time).contains(&tau) {
        return Err(Error::OutOfRange {
            tau,
            start: 0.0,
            end: last.time,
        });
    }
    let passed = events.partition_point(|e| e.time <= tau);
    let sign = if passed == 0 {
        events[0].sign_after.flipped()
    } else {
        events[passed - 1].sign_after
    };
    Ok(sign.value() * config.delta_amp)
}
