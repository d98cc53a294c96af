//! Per-flow records, run summaries and their CSV forms.
//!
//! Percentiles use the nearest-rank method. Multi-run summaries pool every
//! flow of every run before taking percentiles.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::net::FlowOutcome;
use crate::sim::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no completed flows")]
    NoCompletedFlows,
    #[error("percentile must lie in (0, 100], got {0}")]
    BadPercentile(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    Cca,
    Elephant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    pub seed: u64,
    pub flow_id: u32,
    pub src: u32,
    pub dst: u32,
    pub label: String,
    pub size_bytes: u64,
    pub start: SimTime,
    pub end: Option<SimTime>,
    pub bytes_delivered: u64,
    pub packets_sent: u64,
    pub drops: u64,
    pub retransmissions: u64,
    pub rto_count: u64,
    pub tracked: bool,
    pub elephant: bool,
}

impl FlowRecord {
    pub fn from_outcome(seed: u64, o: &FlowOutcome) -> Self {
        FlowRecord {
            seed,
            flow_id: o.id.0,
            src: o.src.0,
            dst: o.dst.0,
            label: o.label.clone(),
            size_bytes: o.size_bytes,
            start: o.start,
            end: o.end,
            bytes_delivered: o.bytes_delivered,
            packets_sent: o.data_packets_sent,
            drops: o.data_packets_dropped,
            retransmissions: o.retransmissions,
            rto_count: o.rto_count,
            tracked: o.tracked,
            elephant: o.elephant,
        }
    }

    pub fn class(&self) -> FlowClass {
        if self.elephant {
            FlowClass::Elephant
        } else {
            FlowClass::Cca
        }
    }

    pub fn fct(&self) -> Option<SimTime> {
        self.end.map(|e| e - self.start)
    }

    /// Bits per second over the flow's completion time.
    pub fn throughput_bps(&self) -> Option<f64> {
        let fct = self.fct()?.as_secs_f64();
        (fct > 0.0).then(|| self.bytes_delivered as f64 * 8.0 / fct)
    }
}

fn completed(records: &[FlowRecord]) -> impl Iterator<Item = &FlowRecord> {
    records.iter().filter(|r| !r.elephant && r.end.is_some())
}

/// Nearest-rank percentile of completed CCA flow FCTs.
pub fn percentile_fct(records: &[FlowRecord], p: f64) -> Result<SimTime, MetricsError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricsError::BadPercentile(p));
    }
    let mut fcts: Vec<SimTime> = completed(records).filter_map(FlowRecord::fct).collect();
    if fcts.is_empty() {
        return Err(MetricsError::NoCompletedFlows);
    }
    fcts.sort_unstable();
    let rank = ((p / 100.0) * fcts.len() as f64).ceil() as usize;
    Ok(fcts[rank.clamp(1, fcts.len()) - 1])
}

/// Mean over completed CCA flows of per-flow throughput, in bits/s.
pub fn mean_throughput(records: &[FlowRecord]) -> Result<f64, MetricsError> {
    let rates: Vec<f64> = completed(records).filter_map(FlowRecord::throughput_bps).collect();
    if rates.is_empty() {
        return Err(MetricsError::NoCompletedFlows);
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Dropped over sent data packets for one class; zero when the class sent nothing.
pub fn drop_rate(records: &[FlowRecord], class: FlowClass) -> f64 {
    let (sent, dropped) = records
        .iter()
        .filter(|r| r.class() == class)
        .fold((0u64, 0u64), |(s, d), r| (s + r.packets_sent, d + r.drops));
    if sent == 0 {
        0.0
    } else {
        dropped as f64 / sent as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub fct: SimTime,
    /// Fraction of CCA flows whose FCT exceeds `fct`; unfinished flows count as exceeding every value.
    pub fraction_above: f64,
}

pub fn ccdf(records: &[FlowRecord]) -> Vec<CcdfPoint> {
    let total = records.iter().filter(|r| !r.elephant).count();
    if total == 0 {
        return Vec::new();
    }
    let mut fcts: Vec<SimTime> = completed(records).filter_map(FlowRecord::fct).collect();
    fcts.sort_unstable();
    let mut points = vec![CcdfPoint { fct: SimTime::ZERO, fraction_above: 1.0 }];
    let mut i = 0;
    while i < fcts.len() {
        let v = fcts[i];
        while i < fcts.len() && fcts[i] == v {
            i += 1;
        }
        let above = total - i;
        let point = CcdfPoint { fct: v, fraction_above: above as f64 / total as f64 };
        if v == SimTime::ZERO {
            points[0] = point;
        } else {
            points.push(point);
        }
    }
    points
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    /// `None` for a summary pooled over several seeds.
    pub seed: Option<u64>,
    pub runs: u32,
    pub fingerprint: String,
    pub flows: u64,
    pub completed: u64,
    pub mean_throughput_bps: f64,
    pub fct_p50: SimTime,
    pub fct_p99: SimTime,
    pub tracked_fct_max: Option<SimTime>,
    pub drop_rate_cca: f64,
    pub drop_rate_elephant: f64,
    pub retransmissions: u64,
    pub rto_count: u64,
}

pub fn summarize(records: &[FlowRecord], seed: Option<u64>, runs: u32, fingerprint: String) -> Result<RunSummary, MetricsError> {
    let cca: Vec<&FlowRecord> = records.iter().filter(|r| !r.elephant).collect();
    Ok(RunSummary {
        seed,
        runs,
        fingerprint,
        flows: cca.len() as u64,
        completed: completed(records).count() as u64,
        mean_throughput_bps: mean_throughput(records)?,
        fct_p50: percentile_fct(records, 50.0)?,
        fct_p99: percentile_fct(records, 99.0)?,
        tracked_fct_max: cca.iter().filter(|r| r.tracked).filter_map(|r| r.fct()).max(),
        drop_rate_cca: drop_rate(records, FlowClass::Cca),
        drop_rate_elephant: drop_rate(records, FlowClass::Elephant),
        retransmissions: cca.iter().map(|r| r.retransmissions).sum(),
        rto_count: cca.iter().map(|r| r.rto_count).sum(),
    })
}

/// Pools per-seed records into one set ordered by `(seed, flow)`, so the
/// result does not depend on the order runs finished in.
pub fn pool(runs: impl IntoIterator<Item = Vec<FlowRecord>>) -> Vec<FlowRecord> {
    let mut all: Vec<FlowRecord> = runs.into_iter().flatten().collect();
    all.sort_by_key(|r| (r.seed, r.flow_id));
    all
}

/// Short hex digest identifying a scenario's flow placement and parameters.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("scenario serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct FlowRow<'a> {
    seed: u64,
    flow_id: u32,
    src: u32,
    dst: u32,
    cca: &'a str,
    size_bytes: u64,
    start_ns: f64,
    end_ns: Option<f64>,
    fct_ns: Option<f64>,
    throughput_bps: Option<f64>,
    bytes_delivered: u64,
    packets_sent: u64,
    retransmissions: u64,
    drops: u64,
    rto_count: u64,
    tracked: bool,
    elephant: bool,
}

pub fn write_flows_csv<W: Write>(out: W, records: &[FlowRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(FlowRow {
            seed: r.seed,
            flow_id: r.flow_id,
            src: r.src,
            dst: r.dst,
            cca: &r.label,
            size_bytes: r.size_bytes,
            start_ns: r.start.as_ns_f64(),
            end_ns: r.end.map(SimTime::as_ns_f64),
            fct_ns: r.fct().map(SimTime::as_ns_f64),
            throughput_bps: r.throughput_bps(),
            bytes_delivered: r.bytes_delivered,
            packets_sent: r.packets_sent,
            retransmissions: r.retransmissions,
            drops: r.drops,
            rto_count: r.rto_count,
            tracked: r.tracked,
            elephant: r.elephant,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    key: &'a str,
    seed: String,
    runs: u32,
    fingerprint: &'a str,
    flows: u64,
    completed: u64,
    mean_throughput_bps: f64,
    fct_p50_ns: f64,
    fct_p99_ns: f64,
    tracked_fct_max_ns: Option<f64>,
    drop_rate_cca: f64,
    drop_rate_elephant: f64,
    retransmissions: u64,
    rto_count: u64,
}

/// One row per summary; `key` labels the run set (a sweep value, say).
pub fn write_summaries_csv<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a str, &'a RunSummary)>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (key, s) in rows {
        w.serialize(SummaryRow {
            key,
            seed: s.seed.map_or_else(|| "all".to_string(), |v| v.to_string()),
            runs: s.runs,
            fingerprint: &s.fingerprint,
            flows: s.flows,
            completed: s.completed,
            mean_throughput_bps: s.mean_throughput_bps,
            fct_p50_ns: s.fct_p50.as_ns_f64(),
            fct_p99_ns: s.fct_p99.as_ns_f64(),
            tracked_fct_max_ns: s.tracked_fct_max.map(SimTime::as_ns_f64),
            drop_rate_cca: s.drop_rate_cca,
            drop_rate_elephant: s.drop_rate_elephant,
            retransmissions: s.retransmissions,
            rto_count: s.rto_count,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CcdfRow<'a> {
    key: &'a str,
    fct_ns: f64,
    fraction_above: f64,
}

pub fn write_ccdf_csv<'a, W: Write>(
    out: W,
    sets: impl IntoIterator<Item = (&'a str, &'a [CcdfPoint])>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (key, points) in sets {
        for p in points {
            w.serialize(CcdfRow { key, fct_ns: p.fct.as_ns_f64(), fraction_above: p.fraction_above })?;
        }
    }
    w.flush()?;
    Ok(())
}
