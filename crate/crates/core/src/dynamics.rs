//! Quantum-jump engine.
//!
//! The tip oscillates as `x_m cos(Phi)`, with `Phi` advancing at rate
//! `1 + s * domega` where `s` is the spin branch. The spin sees the effective
//! field `(epsilon, 0, 2 eta x_c + Delta(tau))`. Each telegraph kick rotates
//! that field by some angle `dTheta` at a fixed tip position; the spin then
//! collapses either back onto its previous orientation relative to the field
//! (probability `cos^2(dTheta/2)`) or onto the opposite one (a jump,
//! probability `sin^2(dTheta/2)`). A jump flips the branch and with it the
//! tip frequency.
//!
//! Per kick the run's stream is consumed in a fixed order: one draw for the
//! kick spacing, then one draw for the Bernoulli trial. A random initial
//! telegraph sign consumes a single draw before the first kick.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{next_kick, KickEvent, Sign, TelegraphConfig};
use crate::rng::{stream, uniform01, SimRng};
use crate::units::ModelParams;

/// Spin orientation relative to the effective field: along it (`+1`) or
/// against it (`-1`). Selects tip frequency `1 + sign * domega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpinBranch(pub Sign);

impl SpinBranch {
    pub const ALONG: SpinBranch = SpinBranch(Sign::Plus);
    pub const AGAINST: SpinBranch = SpinBranch(Sign::Minus);

    pub fn flipped(self) -> Self {
        SpinBranch(self.0.flipped())
    }

    pub fn value(self) -> f64 {
        self.0.value()
    }
}

impl fmt::Display for SpinBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Phase of the tip oscillation, continuous across branch flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    anchor_time: f64,
    anchor_phase: f64,
    rate: f64,
}

impl PhaseState {
    pub fn new(initial_phase: f64, branch: SpinBranch, domega: f64) -> Self {
        Self {
            anchor_time: 0.0,
            anchor_phase: initial_phase,
            rate: 1.0 + branch.value() * domega,
        }
    }

    #[inline]
    pub fn phase_at(&self, tau: f64) -> f64 {
        self.anchor_phase + self.rate * (tau - self.anchor_time)
    }

    /// Re-anchors at `tau` with the rate of `branch`.
    pub fn switch_branch(&mut self, tau: f64, branch: SpinBranch, domega: f64) {
        self.anchor_phase = self.phase_at(tau);
        self.anchor_time = tau;
        self.rate = 1.0 + branch.value() * domega;
    }
}

/// Tip position at `tau`.
#[inline]
pub fn ct_position(tau: f64, phase: &PhaseState, params: &ModelParams) -> f64 {
    params.x_m * phase.phase_at(tau).cos()
}

/// Effective field in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveField {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EffectiveField {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(c * self.x, c * self.y, c * self.z)
    }

    #[inline]
    fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    fn cross_norm(&self, other: &Self) -> f64 {
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        (cx * cx + cy * cy + cz * cz).sqrt()
    }
}

#[inline]
fn field_for_position(x_c: f64, delta_value: f64, params: &ModelParams) -> EffectiveField {
    EffectiveField::new(params.epsilon, 0.0, 2.0 * params.eta * x_c + delta_value)
}

/// Field seen by the spin at `tau` when the telegraph term equals `delta_value`.
pub fn effective_field(
    tau: f64,
    delta_value: f64,
    params: &ModelParams,
    phase: &PhaseState,
) -> EffectiveField {
    field_for_position(ct_position(tau, phase, params), delta_value, params)
}

/// `sin^2(dTheta / 2)` for the angle between two nonzero vectors.
///
/// Uses `|a x b|^2 / (2r(r + a.b))` with `r = |a||b|` while the angle is
/// acute and `(r - a.b) / 2r` otherwise; both avoid cancellation.
#[inline]
fn half_angle_sin_sq(a: &EffectiveField, b: &EffectiveField) -> f64 {
    let dot = a.dot(b);
    let cross = a.cross_norm(b);
    let r = cross.hypot(dot);
    let p = if dot >= 0.0 {
        cross * cross / (2.0 * r * (r + dot))
    } else {
        (r - dot) / (2.0 * r)
    };
    p.clamp(0.0, 1.0)
}

/// Probability that a kick turning the field from `before` to `after`
/// produces a quantum jump. The retain probability is its complement.
pub fn jump_probability(before: &EffectiveField, after: &EffectiveField) -> Result<f64> {
    for (name, f) in [("before", before), ("after", after)] {
        let m = f.magnitude();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid(
                "effective_field",
                format!("`{name}` field has magnitude {m}"),
            ));
        }
    }
    Ok(half_angle_sin_sq(before, after))
}

/// When to end a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    /// Process exactly this many kicks.
    MaxKicks(u64),
    /// Process every kick at or before this time.
    MaxTime(f64),
    /// Stop right after the given number of jumps, or after `max_kicks`
    /// kicks, whichever comes first.
    MaxJumps { jumps: u64, max_kicks: u64 },
}

impl StopCriterion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopCriterion::MaxKicks(0) => Err(Error::invalid("kicks", "must be positive")),
            StopCriterion::MaxTime(t) if !(t.is_finite() && t > 0.0) => {
                Err(Error::invalid("tau_max", format!("must be finite and > 0, got {t}")))
            }
            StopCriterion::MaxJumps { jumps: 0, .. } => {
                Err(Error::invalid("jumps", "must be positive"))
            }
            StopCriterion::MaxJumps { max_kicks: 0, .. } => {
                Err(Error::invalid("kicks", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StopCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCriterion::MaxKicks(n) => write!(f, "kicks={n}"),
            StopCriterion::MaxTime(t) => write!(f, "tau_max={t}"),
            StopCriterion::MaxJumps { jumps, max_kicks } => {
                write!(f, "jumps={jumps},max_kicks={max_kicks}")
            }
        }
    }
}

/// Result of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpTrace {
    pub jump_times: Vec<f64>,
    pub initial_branch: SpinBranch,
    pub total_duration: f64,
    pub kick_count: u64,
    pub seed: u64,
}

impl JumpTrace {
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Gaps between consecutive jumps. The wait before the first jump is
    /// not a gap and is excluded.
    pub fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        self.jump_times.windows(2).map(|w| w[1] - w[0])
    }

    /// Branch in force at `tau` (a jump time belongs to the new branch).
    pub fn branch_at(&self, tau: f64) -> SpinBranch {
        let flips = self.jump_times.partition_point(|&t| t <= tau);
        if flips % 2 == 0 {
            self.initial_branch
        } else {
            self.initial_branch.flipped()
        }
    }
}

/// Starting point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub branch: SpinBranch,
    pub phase: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            branch: SpinBranch::ALONG,
            phase: 0.0,
        }
    }
}

/// What happened at one kick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickOutcome {
    pub kick: KickEvent,
    pub probability: f64,
    pub jumped: bool,
}

/// Incremental simulation; [`simulate_run`] drives it to a stop criterion.
pub struct Simulation {
    params: ModelParams,
    telegraph: TelegraphConfig,
    rng: SimRng,
    seed: u64,
    initial_branch: SpinBranch,
    branch: SpinBranch,
    phase: PhaseState,
    kick: KickEvent,
    kicks: u64,
}

impl Simulation {
    pub fn new(params: &ModelParams, telegraph: &TelegraphConfig, seed: u64) -> Result<Self> {
        Self::with_initial_state(params, telegraph, seed, InitialState::default())
    }

    pub fn with_initial_state(
        params: &ModelParams,
        telegraph: &TelegraphConfig,
        seed: u64,
        initial: InitialState,
    ) -> Result<Self> {
        params.validate()?;
        telegraph.validate()?;
        for (name, model, noise) in [
            ("delta", params.delta_amp, telegraph.delta_amp),
            ("tau0", params.tau0, telegraph.tau0),
            ("dtau", params.dtau, telegraph.dtau),
        ] {
            if model != noise {
                return Err(Error::Config(format!(
                    "model {name} = {model} disagrees with telegraph {name} = {noise}"
                )));
            }
        }
        let mut rng = stream(seed);
        let sign = telegraph.draw_initial_sign(&mut rng);
        Ok(Self {
            params: *params,
            telegraph: *telegraph,
            rng,
            seed,
            initial_branch: initial.branch,
            branch: initial.branch,
            phase: PhaseState::new(initial.phase, initial.branch, params.domega),
            kick: KickEvent::origin(sign),
            kicks: 0,
        })
    }

    pub fn branch(&self) -> SpinBranch {
        self.branch
    }

    pub fn time(&self) -> f64 {
        self.kick.time
    }

    pub fn kicks(&self) -> u64 {
        self.kicks
    }

    pub fn telegraph_sign(&self) -> Sign {
        self.kick.sign_after
    }

    /// Generates the next kick without processing it.
    #[inline]
    fn draw_kick(&mut self) -> KickEvent {
        next_kick(&self.telegraph, &self.kick, &mut self.rng)
    }

    /// Applies a kick drawn by `draw_kick`.
    #[inline]
    fn apply_kick(&mut self, kick: KickEvent) -> KickOutcome {
        let x_c = ct_position(kick.time, &self.phase, &self.params);
        let delta = self.params.delta_amp;
        let before = field_for_position(x_c, kick.sign_after.flipped().value() * delta, &self.params);
        let after = field_for_position(x_c, kick.sign_after.value() * delta, &self.params);
        let probability = half_angle_sin_sq(&before, &after);
        let jumped = uniform01(&mut self.rng) < probability;
        if jumped {
            self.branch = self.branch.flipped();
            self.phase
                .switch_branch(kick.time, self.branch, self.params.domega);
        }
        self.kick = kick;
        self.kicks += 1;
        KickOutcome {
            kick,
            probability,
            jumped,
        }
    }

    /// Processes one kick.
    pub fn step(&mut self) -> KickOutcome {
        let kick = self.draw_kick();
        self.apply_kick(kick)
    }

    pub fn run(mut self, stop: StopCriterion) -> Result<JumpTrace> {
        stop.validate()?;
        let mut jumps = Vec::new();
        let total_duration = match stop {
            StopCriterion::MaxKicks(n) => {
                for _ in 0..n {
                    let o = self.step();
                    if o.jumped {
                        jumps.push(o.kick.time);
                    }
                }
                self.kick.time
            }
            StopCriterion::MaxTime(t_max) => {
                loop {
                    let kick = self.draw_kick();
                    if kick.time > t_max {
                        break;
                    }
                    let o = self.apply_kick(kick);
                    if o.jumped {
                        jumps.push(o.kick.time);
                    }
                }
                t_max
            }
            StopCriterion::MaxJumps { jumps: target, max_kicks } => {
                while self.kicks < max_kicks && (jumps.len() as u64) < target {
                    let o = self.step();
                    if o.jumped {
                        jumps.push(o.kick.time);
                    }
                }
                self.kick.time
            }
        };
        Ok(JumpTrace {
            jump_times: jumps,
            initial_branch: self.initial_branch,
            total_duration,
            kick_count: self.kicks,
            seed: self.seed,
        })
    }
}

/// Runs the jump model from the default initial state until `stop`.
pub fn simulate_run(
    params: &ModelParams,
    telegraph: &TelegraphConfig,
    stop: StopCriterion,
    seed: u64,
) -> Result<JumpTrace> {
    Simulation::new(params, telegraph, seed)?.run(stop)
}
