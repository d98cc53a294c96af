use serde::{Deserialize, Serialize};

use super::history::HistoryPolicy;
use crate::sim::SimTime;

/// Congestion-control variant run by a flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cca {
    /// Reacts to the latest delay sample and treats every SACK hole as a loss.
    Swift,
    /// Swift that only decreases after five successive SACK holes.
    #[serde(rename = "lswift")]
    LSwift,
    /// LSwift driven by the median of recent delay samples.
    #[serde(rename = "mswift")]
    MSwift { history: HistoryPolicy },
}

impl Cca {
    pub fn label(&self) -> String {
        match self {
            Cca::Swift => "swift".into(),
            Cca::LSwift => "lswift".into(),
            Cca::MSwift { history } => match history {
                HistoryPolicy::LatestOnly => "mswift-latest".into(),
                HistoryPolicy::Constant { size } => format!("mswift-const{size}"),
                HistoryPolicy::WindowBased { alpha } => format!("mswift-window{alpha}"),
                HistoryPolicy::BoundedWindow { alpha, max_size } => {
                    format!("mswift-bounded{alpha}-{max_size}")
                }
            },
        }
    }

    pub fn history_policy(&self) -> HistoryPolicy {
        match self {
            Cca::Swift | Cca::LSwift => HistoryPolicy::LatestOnly,
            Cca::MSwift { history } => *history,
        }
    }

    /// Whether SACK holes are held back until the successive-delay counter fires.
    pub fn tolerates_reordering(&self) -> bool {
        !matches!(self, Cca::Swift)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Cca::MSwift { history } => history.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwiftConfig {
    /// Additive increase, in packets per window of ACKs.
    pub ai: f64,
    pub max_mdf: f64,
    pub beta: f64,
    pub base_target: SimTime,
    /// Added to the target per link on the forward path.
    pub hop_scaling: SimTime,
    pub fs_range: SimTime,
    pub fs_min_cwnd: f64,
    pub fs_max_cwnd: f64,
    pub rto: SimTime,
    pub min_cwnd: f64,
    pub init_cwnd: f64,
    /// Later ACKs needed before an outstanding packet counts as a SACK hole.
    pub reorder_threshold: u32,
    /// Successive holes after which LSwift/MSwift decrease and retransmit.
    pub lazy_decrease_count: u32,
    /// Consecutive timeouts after which cwnd collapses to `min_cwnd`;
    /// earlier timeouts apply a `1 - max_mdf` decrease instead.
    pub rto_reset_threshold: u32,
    pub mss: u32,
    pub ack_bytes: u32,
}

impl Default for SwiftConfig {
    fn default() -> Self {
        SwiftConfig {
            ai: 1.0,
            max_mdf: 0.5,
            beta: 0.8,
            base_target: SimTime::from_ns(3_800),
            hop_scaling: SimTime::from_us(2),
            fs_range: SimTime::from_ns(5_200),
            fs_min_cwnd: 0.1,
            fs_max_cwnd: 100.0,
            rto: SimTime::from_us(100),
            min_cwnd: 1.0,
            init_cwnd: 42.0,
            reorder_threshold: 3,
            lazy_decrease_count: 5,
            rto_reset_threshold: 1,
            mss: 4096,
            ack_bytes: 64,
        }
    }
}

impl SwiftConfig {
    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if !(self.ai > 0.0 && self.ai.is_finite()) {
            problems.push(format!("ai must be > 0, got {}", self.ai));
        }
        if !(self.max_mdf > 0.0 && self.max_mdf < 1.0) {
            problems.push(format!("max_mdf must lie in (0, 1), got {}", self.max_mdf));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            problems.push(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        if self.base_target == SimTime::ZERO {
            problems.push("base_target must be > 0".into());
        }
        if !(self.fs_min_cwnd > 0.0 && self.fs_max_cwnd > self.fs_min_cwnd) {
            problems.push(format!(
                "need 0 < fs_min_cwnd < fs_max_cwnd, got {} and {}",
                self.fs_min_cwnd, self.fs_max_cwnd
            ));
        }
        if self.rto == SimTime::ZERO {
            problems.push("rto must be > 0".into());
        }
        if !(self.min_cwnd >= 1.0 && self.min_cwnd.is_finite()) {
            problems.push(format!("min_cwnd must be >= 1, got {}", self.min_cwnd));
        }
        if !(self.init_cwnd >= self.min_cwnd && self.init_cwnd.is_finite()) {
            problems.push(format!("init_cwnd must be >= min_cwnd, got {}", self.init_cwnd));
        }
        if self.reorder_threshold == 0 {
            problems.push("reorder_threshold must be >= 1".into());
        }
        if self.lazy_decrease_count == 0 {
            problems.push("lazy_decrease_count must be >= 1".into());
        }
        if self.rto_reset_threshold == 0 {
            problems.push("rto_reset_threshold must be >= 1".into());
        }
        if self.mss == 0 || self.ack_bytes == 0 {
            problems.push("mss and ack_bytes must be > 0".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }

    /// Flow-based target scaling, `fs_range` times [`flow_scaling_fraction`].
    pub fn flow_scaling(&self, cwnd: f64) -> SimTime {
        let frac = flow_scaling_fraction(cwnd, self.fs_min_cwnd, self.fs_max_cwnd);
        SimTime((self.fs_range.as_ps() as f64 * frac).round() as u64)
    }

    pub fn target_delay(&self, cwnd: f64, hops: u8) -> SimTime {
        let hop_term = SimTime(self.hop_scaling.as_ps() * hops as u64);
        self.base_target + hop_term + self.flow_scaling(cwnd)
    }
}

/// Interpolates on `1/sqrt(cwnd)` between the two cwnd extremes, clamped to `[0, 1]`.
pub fn flow_scaling_fraction(cwnd: f64, fs_min_cwnd: f64, fs_max_cwnd: f64) -> f64 {
    let inv = |w: f64| 1.0 / w.sqrt();
    let lo = inv(fs_max_cwnd);
    let hi = inv(fs_min_cwnd);
    ((inv(cwnd) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_give_inter_pod_target() {
        let cfg = SwiftConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.target_delay(1000.0, 6), SimTime::from_ns(15_800));
    }

    #[test]
    fn flow_scaling_clamps() {
        let cfg = SwiftConfig::default();
        assert_eq!(cfg.flow_scaling(100.0), SimTime::ZERO);
        assert_eq!(cfg.flow_scaling(5_000.0), SimTime::ZERO);
        assert_eq!(cfg.flow_scaling(0.1), cfg.fs_range);
        assert_eq!(cfg.flow_scaling(0.01), cfg.fs_range);
    }

    #[test]
    fn flow_scaling_midpoint() {
        let cfg = SwiftConfig::default();
        // 1/sqrt(w) halfway between 1/sqrt(100) and 1/sqrt(0.1).
        let mid_inv = (0.1 + 1.0 / 0.1f64.sqrt()) / 2.0;
        let w = 1.0 / (mid_inv * mid_inv);
        let got = cfg.flow_scaling(w).as_ps() as i64;
        assert!((got - 2_600_000).abs() <= 1, "{got}");
    }

    #[test]
    fn invalid_values_are_reported() {
        let cfg = SwiftConfig { max_mdf: 1.0, beta: 0.0, min_cwnd: 0.5, ..Default::default() };
        let err = cfg.validate().unwrap_err();
        assert!(err.contains("max_mdf") && err.contains("beta") && err.contains("min_cwnd"), "{err}");
    }

    #[test]
    fn cca_serde_shape() {
        let c: Cca = toml::from_str("kind = \"mswift\"\nhistory = { kind = \"bounded_window\", alpha = 0.5, max_size = 10 }").unwrap();
        assert_eq!(c, Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 } });
        let l: Cca = toml::from_str("kind = \"lswift\"").unwrap();
        assert_eq!(l, Cca::LSwift);
        assert_eq!(c.label(), "mswift-bounded0.5-10");
    }
}
