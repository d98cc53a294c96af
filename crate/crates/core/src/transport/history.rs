use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

/// How many recent delay samples feed the median.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryPolicy {
    /// Only the newest sample; plain Swift behaviour.
    LatestOnly,
    Constant { size: u32 },
    /// `max(ceil(alpha * cwnd), 3)`.
    WindowBased { alpha: f64 },
    /// `max(min(ceil(alpha * cwnd), max_size), 3)`.
    BoundedWindow { alpha: f64, max_size: u32 },
}

/// Floor applied by the window-derived policies so the median never rests on one sample.
pub const MIN_WINDOW_HISTORY: usize = 3;

impl HistoryPolicy {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            HistoryPolicy::LatestOnly => Ok(()),
            HistoryPolicy::Constant { size } if size >= 1 => Ok(()),
            HistoryPolicy::Constant { size } => Err(format!("constant history size must be >= 1, got {size}")),
            HistoryPolicy::WindowBased { alpha } if alpha > 0.0 && alpha.is_finite() => Ok(()),
            HistoryPolicy::WindowBased { alpha } => Err(format!("alpha must be > 0, got {alpha}")),
            HistoryPolicy::BoundedWindow { alpha, max_size } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    Err(format!("alpha must be > 0, got {alpha}"))
                } else if (max_size as usize) < MIN_WINDOW_HISTORY {
                    Err(format!("bounded-window max size must be >= 3, got {max_size}"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

pub fn history_size(policy: HistoryPolicy, cwnd: f64) -> usize {
    let scaled = |alpha: f64| (alpha * cwnd).ceil().max(0.0) as usize;
    match policy {
        HistoryPolicy::LatestOnly => 1,
        HistoryPolicy::Constant { size } => size.max(1) as usize,
        HistoryPolicy::WindowBased { alpha } => scaled(alpha).max(MIN_WINDOW_HISTORY),
        HistoryPolicy::BoundedWindow { alpha, max_size } => {
            scaled(alpha).min(max_size as usize).max(MIN_WINDOW_HISTORY)
        }
    }
}

/// Median of the samples; an even count averages the two middle values
/// (rounded down to the picosecond).
pub fn median(samples: &[SimTime]) -> Option<SimTime> {
    if samples.is_empty() {
        return None;
    }
    let mut buf: Vec<u64> = samples.iter().map(|t| t.as_ps()).collect();
    let n = buf.len();
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable(mid);
    let upper = *upper;
    if n % 2 == 1 {
        Some(SimTime(upper))
    } else {
        let below = *lower.iter().max().expect("even length >= 2");
        Some(SimTime(below / 2 + upper / 2 + (below % 2 + upper % 2) / 2))
    }
}

/// Recent delay samples, newest first.
#[derive(Clone, Debug)]
pub struct DelayHistory {
    policy: HistoryPolicy,
    samples: VecDeque<SimTime>,
}

impl DelayHistory {
    pub fn new(policy: HistoryPolicy) -> Self {
        DelayHistory { policy, samples: VecDeque::new() }
    }

    pub fn policy(&self) -> HistoryPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = SimTime> + '_ {
        self.samples.iter().copied()
    }

    /// Adds a sample and trims to the size the policy gives for `cwnd`.
    /// Shrinking discards the oldest samples; growing lets the buffer refill.
    pub fn push(&mut self, sample: SimTime, cwnd: f64) {
        self.samples.push_front(sample);
        let target = history_size(self.policy, cwnd);
        self.samples.truncate(target);
    }

    pub fn effective_delay(&self) -> Option<SimTime> {
        match self.policy {
            HistoryPolicy::LatestOnly => self.samples.front().copied(),
            _ => {
                let (a, b) = self.samples.as_slices();
                if b.is_empty() {
                    median(a)
                } else {
                    median(&self.samples.iter().copied().collect::<Vec<_>>())
                }
            }
        }
    }
}
