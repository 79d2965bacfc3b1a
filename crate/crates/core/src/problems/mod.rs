//! Builders for the three applications.

pub mod delay;
pub mod hadeler;
pub mod resonance;
