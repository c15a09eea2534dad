//! Multiscale tests of the hypothesis that a signal on `[0, 1]` is
//! non-increasing.
//!
//! The observation is cumulated (white-noise path or cumulative sum diagram of
//! regression data), and on every interval `[i/n, j/n]` its distance to the
//! local least concave majorant is normalized and scanned. Critical values are
//! calibrated by Monte Carlo under a constant signal, which is least favorable,
//! so the test has exact level.

pub mod calibration;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod rng;
pub mod statistics;

pub use calibration::{
    analytic_threshold, calibrate, null_regression_statistic, null_white_statistic, z_tail_bound,
    Model, QuantileEntry, QuantileTable,
};
pub use error::{Error, Result};
pub use experiments::{
    average, delta2, detectability, envelope_gap, guarantee_threshold, power_study, signal,
    simulate_regression_sample, simulate_white_path, AlternativeSpec, PowerReport, SignalKind,
};
pub use geometry::{concat_lcm, lcm, max_deviation, ConcaveChain, GridFunction, Vertex};
pub use statistics::{
    cumulative_sum_diagram, pair_and_estimate, scan, scan_regression, violating_intervals,
    IntervalStat, PairedSample, ScanResult,
};
