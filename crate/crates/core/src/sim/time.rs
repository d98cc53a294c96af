use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const PS_PER_NS: u64 = 1_000;
const PS_PER_US: u64 = 1_000_000;
const PS_PER_MS: u64 = 1_000_000_000;
const PS_PER_S: u64 = 1_000_000_000_000;

/// Simulated time in integer picoseconds since the start of a run.
///
/// At 100 Gbps one byte serializes in exactly 80 ps, so every serialization
/// delay in the simulator is exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * PS_PER_NS)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * PS_PER_US)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * PS_PER_MS)
    }

    /// Rounds to the nearest picosecond.
    pub fn from_us_f64(us: f64) -> Self {
        assert!(us >= 0.0 && us.is_finite(), "negative or non-finite time: {us}");
        SimTime((us * PS_PER_US as f64).round() as u64)
    }

    pub fn from_secs_f64(secs: f64) -> Self {
        assert!(secs >= 0.0 && secs.is_finite(), "negative or non-finite time: {secs}");
        SimTime((secs * PS_PER_S as f64).round() as u64)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ns_f64(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / PS_PER_US as f64
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / PS_PER_S as f64
    }

    pub fn saturating_add(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(other.0))
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    pub fn mul_f64(self, factor: f64) -> SimTime {
        SimTime::from_ps_f64(self.0 as f64 * factor)
    }

    fn from_ps_f64(ps: f64) -> SimTime {
        assert!(ps >= 0.0 && ps.is_finite(), "negative or non-finite time: {ps} ps");
        SimTime(ps.round() as u64)
    }

    /// Time to clock `bytes` onto a link of `bits_per_sec`, truncated to whole picoseconds.
    pub fn serialization(bytes: u64, bits_per_sec: u64) -> SimTime {
        assert!(bits_per_sec > 0, "link speed must be positive");
        let ps = (bytes as u128 * 8 * PS_PER_S as u128) / bits_per_sec as u128;
        SimTime(ps as u64)
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.checked_add(rhs.0).expect("SimTime overflow"))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.checked_sub(rhs.0).expect("SimTime underflow"))
    }
}

/// Formats with the largest unit that represents the value exactly, e.g. `14us`, `655360ps`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps = self.0;
        if ps == 0 {
            return write!(f, "0s");
        }
        for (unit, scale) in [("s", PS_PER_S), ("ms", PS_PER_MS), ("us", PS_PER_US), ("ns", PS_PER_NS)] {
            if ps.is_multiple_of(scale) {
                return write!(f, "{}{}", ps / scale, unit);
            }
        }
        write!(f, "{ps}ps")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTimeError(String);

impl fmt::Display for ParseTimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid duration {:?}: expected <number><ps|ns|us|ms|s>", self.0)
    }
}

impl std::error::Error for ParseTimeError {}

impl FromStr for SimTime {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let split = t
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| ParseTimeError(s.to_string()))?;
        let (num, unit) = t.split_at(split);
        let scale = match unit {
            "ps" => 1,
            "ns" => PS_PER_NS,
            "us" => PS_PER_US,
            "ms" => PS_PER_MS,
            "s" => PS_PER_S,
            _ => return Err(ParseTimeError(s.to_string())),
        };
        let num = num.trim();
        if let Ok(int) = num.parse::<u64>() {
            return int.checked_mul(scale).map(SimTime).ok_or_else(|| ParseTimeError(s.to_string()));
        }
        let value: f64 = num.parse().map_err(|_| ParseTimeError(s.to_string()))?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(ParseTimeError(s.to_string()));
        }
        Ok(SimTime((value * scale as f64).round() as u64))
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_at_100g_is_exact() {
        assert_eq!(SimTime::serialization(4096, 100_000_000_000), SimTime(327_680));
        assert_eq!(SimTime::serialization(1, 100_000_000_000), SimTime(80));
        assert_eq!(SimTime::serialization(64, 100_000_000_000), SimTime(5_120));
    }

    #[test]
    fn display_and_parse_round_trip() {
        for t in [0, 80, 327_680, 14_000_000, 15_800_000, 1_000_000_000_000] {
            let time = SimTime(t);
            assert_eq!(time.to_string().parse::<SimTime>().unwrap(), time);
        }
        assert_eq!("15.8us".parse::<SimTime>().unwrap(), SimTime(15_800_000));
        assert_eq!("14us".parse::<SimTime>().unwrap(), SimTime::from_us(14));
        assert!("14".parse::<SimTime>().is_err());
        assert!("-3us".parse::<SimTime>().is_err());
        assert!("3parsecs".parse::<SimTime>().is_err());
    }

    #[test]
    #[should_panic(expected = "underflow")]
    fn subtraction_never_goes_negative() {
        let _ = SimTime(1) - SimTime(2);
    }
}
