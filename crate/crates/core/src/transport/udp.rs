use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UdpSourceConfig {
    pub rate_fraction: f64,
    pub packet_bytes: u32,
}

impl Default for UdpSourceConfig {
    fn default() -> Self {
        UdpSourceConfig { rate_fraction: 0.5, packet_bytes: 4096 }
    }
}

impl UdpSourceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rate_fraction > 0.0 && self.rate_fraction <= 1.0) {
            return Err(format!("rate_fraction must lie in (0, 1], got {}", self.rate_fraction));
        }
        if self.packet_bytes == 0 {
            return Err("udp packet_bytes must be > 0".into());
        }
        Ok(())
    }

    /// Inter-send gap `size * 8 / (rate_fraction * line)`, rounded to the picosecond.
    pub fn gap(&self, line_bps: u64) -> SimTime {
        let ser = SimTime::serialization(self.packet_bytes as u64, line_bps);
        ser.mul_f64(1.0 / self.rate_fraction)
    }
}

/// Open-loop constant-rate source; it never looks at feedback.
#[derive(Clone, Debug)]
pub struct UdpSource {
    gap: SimTime,
    packet_bytes: u32,
    sent: u64,
}

impl UdpSource {
    pub fn new(cfg: &UdpSourceConfig, line_bps: u64) -> Self {
        UdpSource { gap: cfg.gap(line_bps), packet_bytes: cfg.packet_bytes, sent: 0 }
    }

    pub fn gap(&self) -> SimTime {
        self.gap
    }

    pub fn packets_sent(&self) -> u64 {
        self.sent
    }

    /// Emits one packet: returns its sequence offset, size, and when the next tick fires.
    pub fn tick(&mut self, now: SimTime) -> (u64, u32, SimTime) {
        let seq = self.sent * self.packet_bytes as u64;
        self.sent += 1;
        (seq, self.packet_bytes, now + self.gap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: u64 = 100_000_000_000;

    #[test]
    fn half_rate_gap() {
        assert_eq!(UdpSourceConfig::default().gap(LINE), SimTime(655_360));
    }

    #[test]
    fn sends_floor_of_duration_over_gap() {
        let mut src = UdpSource::new(&UdpSourceConfig::default(), LINE);
        let end = SimTime::from_ms(1);
        // Ticks landing in (0, 1 ms] after a source started at t=0.
        let mut next = src.tick(SimTime::ZERO).2;
        while next <= end {
            next = src.tick(next).2;
        }
        let after_start = src.packets_sent() - 1;
        assert_eq!(after_start, end.as_ps() / src.gap().as_ps());
        assert_eq!(after_start, 1525);
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(UdpSourceConfig { rate_fraction: 0.0, ..Default::default() }.validate().is_err());
        assert!(UdpSourceConfig { rate_fraction: 1.5, ..Default::default() }.validate().is_err());
    }
}
