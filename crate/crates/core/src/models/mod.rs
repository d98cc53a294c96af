//! Analytical throughput models for a single flow sprayed round-robin over
//! `n = 1/q` paths, one of which is congested.
//!
//! All rates are in bytes per second unless stated otherwise.

mod closed;
mod rr_swift;
mod sawtooth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

pub use closed::{
    dctcp_throughput_upper, fastflow_throughput, fastflow_window, swift_throughput,
    tcp_throughput, BoundedRate, FastFlowParams, MATHIS_CONSTANT,
};
pub use rr_swift::{rr_swift_throughput_numeric, RrSwiftSolution, SolverConfig};
pub use sawtooth::{sawtooth_oracle, DecreaseSchedule, SawtoothResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model parameter out of domain: {0}")]
    Domain(String),
    #[error("fixed-point solver did not converge after {iterations} iterations (last W = {last_w})")]
    NoConvergence { iterations: u32, last_w: f64 },
}

/// Symbols shared by the throughput formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Probability a packet takes the congested path.
    pub q: f64,
    pub mss_bytes: u32,
    pub t_short: SimTime,
    pub t_long: SimTime,
    pub ai: f64,
    pub max_mdf: f64,
    pub beta: f64,
    /// Base target plus topology scaling.
    pub target_base: SimTime,
    pub fs_range: SimTime,
    pub fs_min_cwnd: f64,
    pub fs_max_cwnd: f64,
}

impl ModelParams {
    /// Parameter set used for the model-comparison curves: T_s = 14.4 us,
    /// T_l = 2.5 T_s, 21 us target, Swift defaults.
    pub fn curve_defaults(q: f64) -> Self {
        let t_short = SimTime::from_ns(14_400);
        ModelParams {
            q,
            mss_bytes: 4096,
            t_short,
            t_long: t_short.mul_f64(2.5),
            ai: 1.0,
            max_mdf: 0.5,
            beta: 0.8,
            target_base: SimTime::from_us(21),
            fs_range: SimTime::from_ns(5_200),
            fs_min_cwnd: 0.1,
            fs_max_cwnd: 100.0,
        }
    }

    pub fn with_q(&self, q: f64) -> Self {
        ModelParams { q, ..self.clone() }
    }

    /// `MSS / T_s` in bytes per second, the natural unit of every formula.
    pub fn unit_rate(&self) -> f64 {
        self.mss_bytes as f64 / self.t_short.as_secs_f64()
    }

    pub fn path_count(&self) -> f64 {
        1.0 / self.q
    }

    pub(crate) fn check(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Domain(m));
        if !(self.q > 0.0 && self.q <= 1.0) {
            return err(format!("q must lie in (0, 1], got {}", self.q));
        }
        if self.t_short == SimTime::ZERO || self.t_long <= self.t_short {
            return err(format!(
                "need T_l > T_s > 0, got T_s={} T_l={}",
                self.t_short, self.t_long
            ));
        }
        if !(self.max_mdf > 0.0 && self.max_mdf < 1.0) {
            return err(format!("max_mdf must lie in (0, 1), got {}", self.max_mdf));
        }
        if !(self.ai > 0.0) {
            return err(format!("ai must be > 0, got {}", self.ai));
        }
        if self.mss_bytes == 0 {
            return err("mss must be > 0".into());
        }
        Ok(())
    }

    /// Target delay at window `w`, in seconds.
    pub fn target_secs(&self, w: f64) -> f64 {
        let frac = crate::transport::flow_scaling_fraction(w, self.fs_min_cwnd, self.fs_max_cwnd);
        self.target_base.as_secs_f64() + self.fs_range.as_secs_f64() * frac
    }
}

/// Bytes per second to gigabits per second.
pub fn to_gbps(bytes_per_sec: f64) -> f64 {
    bytes_per_sec * 8.0 / 1e9
}
