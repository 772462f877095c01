//! Experiment harness around the dying-experts library: seeded experiment
//! runs, parameter sweeps with CSV output, scaling-exponent fits, and the
//! verification suites behind `dyexp verify`.

pub mod fit;
pub mod runner;
pub mod suites;
