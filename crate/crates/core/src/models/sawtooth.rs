//! Brute-force discrete sawtooth: one ACK at a time, with time measured in
//! RTTs. Each ACK grows the window by `ai / w` and takes `1 / w` RTTs; on the
//! decrease schedule the window goes through a caller-supplied map.

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecreaseSchedule {
    Never,
    /// Every n-th packet triggers the decrease map.
    EveryN(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SawtoothResult {
    /// Packets per RTT over the measured part of the run.
    pub rate: f64,
    pub packets: u64,
    pub final_window: f64,
    pub peak_window: f64,
}

/// Simulates `duration_rtts` RTTs from a window of 1 and measures the rate
/// over the second half, once the initial transient has gone.
pub fn sawtooth_oracle(
    ai: f64,
    mut decrease: impl FnMut(f64) -> f64,
    schedule: DecreaseSchedule,
    duration_rtts: f64,
) -> SawtoothResult {
    assert!(ai > 0.0 && duration_rtts > 0.0);
    let warmup = duration_rtts / 2.0;
    let mut w = 1.0f64;
    let mut t = 0.0f64;
    let mut counter = 0u64;
    let mut measured = 0u64;
    let mut peak = w;
    while t < duration_rtts {
        t += 1.0 / w;
        w += ai / w;
        counter += 1;
        if t > warmup {
            measured += 1;
            peak = peak.max(w);
        }
        if let DecreaseSchedule::EveryN(n) = schedule {
            if counter.is_multiple_of(n) {
                w = decrease(w).max(1.0);
            }
        }
    }
    SawtoothResult {
        rate: measured as f64 / (duration_rtts - warmup),
        packets: counter,
        final_window: w,
        peak_window: peak,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        dctcp_throughput_upper, swift_throughput, tcp_throughput, ModelParams, MATHIS_CONSTANT,
    };

    fn duration_for(n: u64) -> f64 {
        // Enough cycles that the edge cycle barely matters.
        (200.0 * (n as f64).sqrt()).max(2_000.0)
    }

    #[test]
    fn no_decrease_grows_without_bound() {
        let short = sawtooth_oracle(1.0, |w| w, DecreaseSchedule::Never, 100.0);
        let long = sawtooth_oracle(1.0, |w| w, DecreaseSchedule::Never, 1_000.0);
        assert!(long.final_window > 9.0 * short.final_window);
        assert!(long.rate > 5.0 * short.rate);
    }

    #[test]
    fn halving_matches_mathis_at_ten_thousand() {
        let n = 10_000;
        let r = sawtooth_oracle(1.0, |w| w * 0.5, DecreaseSchedule::EveryN(n), duration_for(n));
        let expected = MATHIS_CONSTANT * (n as f64).sqrt();
        assert!((r.rate / expected - 1.0).abs() < 0.03, "{} vs {expected}", r.rate);
    }

    #[test]
    fn oracle_agrees_with_tcp_and_swift_closed_forms() {
        for n in [100u64, 1_000, 10_000] {
            let p = ModelParams::curve_defaults(1.0 / n as f64);
            let tcp = tcp_throughput(&p).unwrap() / p.unit_rate();
            let r = sawtooth_oracle(1.0, |w| w * 0.5, DecreaseSchedule::EveryN(n), duration_for(n));
            assert!((r.rate / tcp - 1.0).abs() < 0.05, "tcp n={n}: {} vs {tcp}", r.rate);
            for (mm, ai) in [(0.5, 1.0), (0.3, 1.0), (0.5, 2.0)] {
                let p = ModelParams { max_mdf: mm, ai, ..p.clone() };
                let swift = swift_throughput(&p).unwrap() / p.unit_rate();
                let r = sawtooth_oracle(ai, |w| w * (1.0 - mm), DecreaseSchedule::EveryN(n), duration_for(n));
                assert!((r.rate / swift - 1.0).abs() < 0.05, "swift mm={mm} ai={ai} n={n}: {} vs {swift}", r.rate);
            }
        }
    }

    #[test]
    fn extra_marking_decreases_stay_under_dctcp_bound() {
        for n in [100u64, 1_000] {
            let p = ModelParams::curve_defaults(1.0 / n as f64);
            let bound = dctcp_throughput_upper(&p, true).unwrap();
            let mut acks = 0u64;
            // Besides halving every n packets, an ECN-driven cut of 10% lands on every 7th event.
            let r = sawtooth_oracle(
                1.0,
                |w| {
                    acks += 1;
                    if acks.is_multiple_of(7) { w * 0.45 } else { w * 0.5 }
                },
                DecreaseSchedule::EveryN(n),
                duration_for(n),
            );
            assert!(r.rate <= bound.rate / p.unit_rate());
        }
    }
}
