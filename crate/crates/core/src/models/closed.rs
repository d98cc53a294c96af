use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams};
use crate::sim::SimTime;

/// sqrt(3/2), printed as 1.22 in the usual statement of the Mathis model.
pub const MATHIS_CONSTANT: f64 = 1.224_744_871_391_589;

/// A rate that may only be an upper bound on the true value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundedRate {
    pub rate: f64,
    pub is_upper_bound: bool,
}

pub fn tcp_throughput(p: &ModelParams) -> Result<f64, ModelError> {
    p.check()?;
    Ok(p.unit_rate() * MATHIS_CONSTANT / p.q.sqrt())
}

/// Identical to TCP when long-path packets go unmarked; otherwise the same
/// value only bounds the throughput from above.
pub fn dctcp_throughput_upper(p: &ModelParams, long_path_marked: bool) -> Result<BoundedRate, ModelError> {
    Ok(BoundedRate { rate: tcp_throughput(p)?, is_upper_bound: long_path_marked })
}

pub fn swift_throughput(p: &ModelParams) -> Result<f64, ModelError> {
    p.check()?;
    if p.t_short.as_secs_f64() >= p.target_base.as_secs_f64() {
        return Err(ModelError::Domain(format!(
            "Swift model needs T_s < target, got T_s={} target={}",
            p.t_short, p.target_base
        )));
    }
    let k = ((1.0 / p.max_mdf - 0.5) * p.ai).sqrt();
    Ok(p.unit_rate() * k / p.q.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastFlowParams {
    pub base_rtt: SimTime,
    pub mi: f64,
    pub md: f64,
    pub fi: f64,
    pub fd: f64,
    /// FastFlow's BDP constant, in packets.
    pub bdp_packets: f64,
}

impl Default for FastFlowParams {
    /// 12 us base RTT; BDP is that RTT at 100 Gbps in 4096 B packets.
    fn default() -> Self {
        let base_rtt = SimTime::from_us(12);
        FastFlowParams {
            base_rtt,
            mi: 2.0,
            md: 2.0,
            fi: 0.25,
            fd: 0.8,
            bdp_packets: base_rtt.as_secs_f64() * 100e9 / (8.0 * 4096.0),
        }
    }
}

impl FastFlowParams {
    pub fn target_rtt(&self) -> SimTime {
        self.base_rtt.mul_f64(1.5)
    }

    /// `T_s / baseRTT`.
    pub fn alpha(&self, p: &ModelParams) -> f64 {
        p.t_short.as_secs_f64() / self.base_rtt.as_secs_f64()
    }

    /// Window growth per window of short-path ACKs, in MSS: `(12 - 7a) / (4a)`.
    pub fn additive_increase(alpha: f64) -> f64 {
        (12.0 - 7.0 * alpha) / (4.0 * alpha)
    }

    /// Per-congested-packet multiplicative factor `1 - fd/BDP`.
    pub fn gamma(&self) -> f64 {
        1.0 - self.fd / self.bdp_packets
    }

    fn check(&self, p: &ModelParams) -> Result<(f64, f64), ModelError> {
        p.check()?;
        let alpha = self.alpha(p);
        if !(alpha > 1.0 && alpha < 1.5) {
            return Err(ModelError::Domain(format!("FastFlow needs 1 < T_s/baseRTT < 1.5, got {alpha}")));
        }
        let gamma = self.gamma();
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ModelError::Domain(format!("FastFlow needs 0 < 1 - fd/BDP < 1, got {gamma}")));
        }
        let twice_target = SimTime(self.target_rtt().as_ps() * 2);
        if p.t_long < twice_target {
            return Err(ModelError::Domain(format!(
                "FastFlow model needs T_l >= 2 targetRTT = {twice_target}, got {}",
                p.t_long
            )));
        }
        Ok((Self::additive_increase(alpha), gamma))
    }
}

/// Peak window of the FastFlow sawtooth, in packets.
pub fn fastflow_window(a: f64, gamma: f64, q: f64) -> f64 {
    let g2 = gamma * gamma;
    let x = 2.0 * a / q;
    (-g2 + (g2 * (1.0 - x) + x).sqrt()) / (1.0 - g2)
}

pub fn fastflow_throughput(p: &ModelParams, f: &FastFlowParams) -> Result<f64, ModelError> {
    let (a, gamma) = f.check(p)?;
    let w = fastflow_window(a, gamma, p.q);
    let t_avg = (1.0 - p.q) * p.t_short.as_secs_f64() + p.q * p.t_long.as_secs_f64();
    Ok(a * p.mss_bytes as f64 / (p.q * (gamma + (1.0 - gamma) * w) * t_avg))
}
