//! Ordering and throughput metrics over a merged receive stream.
//!
//! Sequence numbers restart with every burst: a PDU's displacement is the
//! distance between its position among its own burst's PDUs in receive
//! order and its position in that burst's send order.

use std::fmt;

use serde::Serialize;

use crate::emulator::ns_to_secs;
use crate::error::{Error, Result};
use crate::receiver::MergedStream;

/// Displacement statistics. `mean` is over misplaced PDUs only.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Misplacement {
    pub count: u64,
    pub mean: f64,
    pub max: u64,
    #[serde(skip)]
    total: u64,
}

impl Misplacement {
    pub fn from_displacements<I: IntoIterator<Item = u64>>(ds: I) -> Self {
        ds.into_iter()
            .fold(Self::default(), |acc, d| acc.add(d))
            .finish()
    }

    fn add(mut self, d: u64) -> Self {
        if d > 0 {
            self.count += 1;
            self.total += d;
        }
        self.max = self.max.max(d);
        self
    }

    fn combine(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.total += other.total;
        self.max = self.max.max(other.max);
        self.finish()
    }

    fn finish(mut self) -> Self {
        self.mean = if self.count == 0 {
            0.0
        } else {
            self.total as f64 / self.count as f64
        };
        self
    }
}

fn burst_count(merged: &MergedStream) -> usize {
    merged.traces().map(|t| t.burst + 1).max().unwrap_or(0)
}

/// `|receive position - local seq|` for every PDU, grouped by burst.
fn displacements_by_burst(merged: &MergedStream) -> Vec<Vec<u64>> {
    let mut next_pos = vec![0u64; burst_count(merged)];
    let mut out = vec![Vec::new(); next_pos.len()];
    for t in merged.traces() {
        let pos = next_pos[t.burst];
        next_pos[t.burst] += 1;
        out[t.burst].push(pos.abs_diff(t.local_seq));
    }
    out
}

/// Misplaced count, mean displacement of misplaced PDUs, and maximum
/// displacement over the whole stream.
pub fn misplacement(merged: &MergedStream) -> Misplacement {
    displacements_by_burst(merged)
        .iter()
        .map(|ds| Misplacement::from_displacements(ds.iter().copied()))
        .fold(Misplacement::default(), |acc, m| acc.combine(&m))
}

/// Bits and receive window (first to last arrival) per burst.
fn burst_windows(merged: &MergedStream, pdu_size_bytes: u32) -> Vec<(f64, u64)> {
    let mut spans: Vec<Option<(u64, u64, u64)>> = vec![None; burst_count(merged)];
    for t in merged.traces() {
        let slot = &mut spans[t.burst];
        *slot = Some(match *slot {
            None => (1, t.t_arrival, t.t_arrival),
            Some((n, lo, hi)) => (n + 1, lo.min(t.t_arrival), hi.max(t.t_arrival)),
        });
    }
    spans
        .into_iter()
        .flatten()
        .map(|(n, lo, hi)| (n as f64 * pdu_size_bytes as f64 * 8.0, hi - lo))
        .collect()
}

/// Aggregated receive throughput: total bits over the summed per-burst
/// receive windows, so idle time between bursts is excluded.
pub fn throughput_bps(merged: &MergedStream, pdu_size_bytes: u32) -> Result<f64> {
    if merged.is_empty() {
        return Err(Error::EmptyStream);
    }
    let (bits, ns) = burst_windows(merged, pdu_size_bytes)
        .into_iter()
        .fold((0.0, 0u64), |(b, w), (bits, window)| (b + bits, w + window));
    if ns == 0 {
        return Err(Error::DegenerateWindow);
    }
    Ok(bits / ns_to_secs(ns))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurstReport {
    pub burst: usize,
    pub n_pdus: u64,
    pub misplaced_count: u64,
    pub mean_misplace: f64,
    pub max_misplace: u64,
    pub throughput_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub n_pdus: u64,
    pub misplaced_count: u64,
    pub mean_misplace: f64,
    pub max_misplace: u64,
    /// `None` when the receive window has zero length.
    pub throughput_bps: Option<f64>,
    pub per_burst: Vec<BurstReport>,
}

impl OrderingReport {
    pub fn from_stream(merged: &MergedStream, pdu_size_bytes: u32) -> Self {
        let per_displacement = displacements_by_burst(merged);
        let windows = burst_windows(merged, pdu_size_bytes);
        let per_burst: Vec<BurstReport> = per_displacement
            .iter()
            .zip(&windows)
            .enumerate()
            .map(|(burst, (ds, &(bits, ns)))| {
                let m = Misplacement::from_displacements(ds.iter().copied());
                BurstReport {
                    burst,
                    n_pdus: ds.len() as u64,
                    misplaced_count: m.count,
                    mean_misplace: m.mean,
                    max_misplace: m.max,
                    throughput_bps: (ns > 0).then(|| bits / ns_to_secs(ns)),
                }
            })
            .collect();
        let m = misplacement(merged);
        Self {
            n_pdus: merged.len() as u64,
            misplaced_count: m.count,
            mean_misplace: m.mean,
            max_misplace: m.max,
            throughput_bps: throughput_bps(merged, pdu_size_bytes).ok(),
            per_burst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub n_pdus: u64,
    pub misplaced_count: u64,
    pub max_misplace: u64,
    pub mean_misplace: f64,
    pub throughput_mbps: Option<f64>,
}

/// One row per scenario, in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

pub fn compare<S: AsRef<str>>(reports: &[(S, OrderingReport)]) -> ComparisonTable {
    let rows = reports
        .iter()
        .map(|(label, r)| ComparisonRow {
            label: label.as_ref().to_string(),
            n_pdus: r.n_pdus,
            misplaced_count: r.misplaced_count,
            max_misplace: r.max_misplace,
            mean_misplace: r.mean_misplace,
            throughput_mbps: r.throughput_bps.map(|t| t / 1e6),
        })
        .collect();
    ComparisonTable { rows }
}

impl ComparisonTable {
    pub const CSV_HEADER: &'static str =
        "label,n_pdus,misplaced_count,max_misplace,mean_misplace,throughput_mbps";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let thr = r
                .throughput_mbps
                .map(|t| format!("{t:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{:.6},{}\n",
                r.label, r.n_pdus, r.misplaced_count, r.max_misplace, r.mean_misplace, thr
            ));
        }
        out
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("scenario".len());
        writeln!(
            f,
            "{:<width$}  {:>12}  {:>13}  {:>17}",
            "scenario", "max misplace", "mean misplace", "throughput [Mbps]"
        )?;
        for r in &self.rows {
            let thr = r
                .throughput_mbps
                .map(|t| format!("{t:.3}"))
                .unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<width$}  {:>12}  {:>13.2}  {:>17}",
                r.label, r.max_misplace, r.mean_misplace, thr
            )?;
        }
        Ok(())
    }
}
