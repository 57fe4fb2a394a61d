//! Monte Carlo model of quantum jumps of a single spin detected by an
//! oscillating-cantilever (OSCAR) magnetic resonance force microscope.
//!
//! A random telegraph field kicks the effective field seen by the spin;
//! after every kick the spin either keeps its orientation relative to the
//! field or jumps to the opposite one, shifting the cantilever frequency.
//! The crate simulates those jump sequences and measures their statistics:
//! interval histograms and moments ([`stats`]), the frequency-shift
//! autocorrelation ([`correlation`]) and the scaling of the mean interval
//! with noise strength and correlation time ([`sweep`]).

pub mod cli;
pub mod config;
pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod io;
pub mod noise;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod units;

pub use dynamics::{simulate_run, JumpTrace, StopCriterion};
pub use error::{Error, Result};
pub use noise::{InitialSign, Sign, TelegraphConfig};
pub use units::{ModelParams, PhysicalParams};
