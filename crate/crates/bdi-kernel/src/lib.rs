//! Deterministic belief-desire-intention agents: terms, messages and the
//! perceive/deliberate/commit/execute cycle.

pub mod codec;
pub mod kernel;
pub mod message;
pub mod term;
