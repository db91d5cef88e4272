//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use stepwise_core::{IsingConfig, LzConfig, ParamPoint, QubitProbeConfig};

pub fn qubit() -> QubitProbeConfig {
    QubitProbeConfig::new(PI / 4.0, 3.0 * PI / 8.0).expect("valid angles")
}

pub fn lz() -> LzConfig {
    LzConfig::default()
}

pub fn ising(length: usize) -> IsingConfig {
    IsingConfig::new(length).expect("length within budget")
}

pub fn qubit_point() -> ParamPoint {
    ParamPoint::new(PI, 7.0 * PI / 8.0)
}

pub fn critical_point() -> ParamPoint {
    ParamPoint::new(0.5, 1.0)
}
