//! Closed-form references for the emulator and the displacement metric.
#![allow(dead_code)]

use casim::emulator::{pdu_service_time_ns, propagation_delay_ns, secs_to_ns};
use casim::model::{CarrierId, PduTrace, ScenarioConfig};
use casim::scheduler::SchedulingPlan;
use casim::Scalar;

/// Per-PDU timestamps without an event queue. Each burst starts on empty
/// links, so every carrier just emits its share back to back from the
/// release instant.
pub fn fluid_arrivals<T: Scalar>(
    scenario: &ScenarioConfig<T>,
    plan: &SchedulingPlan<T>,
) -> Vec<PduTrace> {
    let service = [
        pdu_service_time_ns(&scenario.carrier1, scenario.pdu_size_bytes).unwrap(),
        pdu_service_time_ns(&scenario.carrier2, scenario.pdu_size_bytes).unwrap(),
    ];
    let mut out = Vec::new();
    let mut seq = 0u64;
    let mut last_arrival = 0u64;
    for (i, burst) in scenario.bursts.iter().enumerate() {
        let release = if i == 0 { 0 } else { last_arrival } + secs_to_ns(burst.gap_before_s);
        let mut slot = [0u64; 2];
        let mut latest = release;
        for local in 0..burst.pdu_count {
            let carrier = plan.assign(local);
            let k = carrier.index();
            let start = release + slot[k] * service[k];
            let end = start + service[k];
            slot[k] += 1;
            let arrival = end + propagation_delay_ns(&scenario.carrier(carrier).orbit, end);
            latest = latest.max(arrival);
            out.push(PduTrace {
                seq,
                burst: i,
                local_seq: local,
                carrier,
                t_scheduled: release,
                t_tx_start: start,
                t_tx_end: end,
                t_arrival: arrival,
            });
            seq += 1;
        }
        last_arrival = latest;
    }
    out.sort_by_key(|t| (t.t_arrival, t.carrier as u8, t.seq));
    out
}

/// (misplaced count, mean over misplaced, max) for a receive order given
/// as the send index found at each position.
pub fn brute_displacement(order: &[u64]) -> Result<(u64, f64, u64), String> {
    let mut seen = vec![false; order.len()];
    for &s in order {
        let slot = seen
            .get_mut(s as usize)
            .ok_or(format!("{s} out of range"))?;
        if *slot {
            return Err(format!("{s} repeated"));
        }
        *slot = true;
    }
    let (mut count, mut total, mut max) = (0u64, 0u64, 0u64);
    for (pos, &s) in order.iter().enumerate() {
        let d = (pos as i64 - s as i64).unsigned_abs();
        if d > 0 {
            count += 1;
            total += d;
        }
        max = max.max(d);
    }
    let mean = if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    };
    Ok((count, mean, max))
}

/// Merged-stream traces for a single burst received in `order`.
pub fn traces_in_order(order: &[u64]) -> Vec<PduTrace> {
    order
        .iter()
        .enumerate()
        .map(|(pos, &seq)| PduTrace {
            seq,
            burst: 0,
            local_seq: seq,
            carrier: if seq % 2 == 0 {
                CarrierId::One
            } else {
                CarrierId::Two
            },
            t_scheduled: 0,
            t_tx_start: 0,
            t_tx_end: 0,
            t_arrival: pos as u64 * 1000,
        })
        .collect()
}
