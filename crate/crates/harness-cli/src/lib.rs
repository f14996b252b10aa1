//! Scenario files, seeded fuzzing, load and crash harnesses behind the
//! `ims` command.

pub mod config;
pub mod crash;
pub mod fuzz;
pub mod load;
pub mod offline;
pub mod run;
pub mod scenario;
