//! Discrete-event transport of scheduled PDUs over the two carriers.
//!
//! Framing (GSE, BBFrame, superframe) is collapsed into a per-PDU service
//! time: one FECFRAME occupies `612540 / (9 M)` symbols and carries
//! `pdus_per_fecframe` whole PDUs. Each carrier serializes its queue
//! back-to-back; a PDU lands one propagation delay after its last symbol
//! leaves. All times are integer nanoseconds.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::io::{self, Write};

use serde::Serialize;

use crate::error::Result;
use crate::model::{CarrierConfig, CarrierId, OrbitModel, PduTrace, ScenarioConfig};
use crate::scalar::Scalar;
use crate::scheduler::{
    pdus_per_fecframe, SchedulingPlan, FRAMES_PER_SUPERFRAME, SUPERFRAME_SYMBOLS,
};

pub const NANOS_PER_SEC: f64 = 1e9;

pub fn secs_to_ns(s: f64) -> u64 {
    (s * NANOS_PER_SEC).round() as u64
}

pub fn ns_to_secs(ns: u64) -> f64 {
    ns as f64 / NANOS_PER_SEC
}

/// Seconds to emit one PDU on `carrier`.
pub fn pdu_service_time_s<T: Scalar>(carrier: &CarrierConfig<T>, pdu_size_bytes: u32) -> Result<T> {
    let per_frame = pdus_per_fecframe(pdu_size_bytes, &carrier.modcod, &carrier.fill_rate)?;
    let frame_symbols = T::from_count(SUPERFRAME_SYMBOLS)
        / T::from_count(FRAMES_PER_SUPERFRAME * carrier.modcod.bits_per_symbol() as u64);
    Ok(frame_symbols / carrier.symbol_rate_sym_s.clone() / T::from_count(per_frame))
}

/// [`pdu_service_time_s`] rounded to whole nanoseconds (at least 1).
pub fn pdu_service_time_ns<T: Scalar>(
    carrier: &CarrierConfig<T>,
    pdu_size_bytes: u32,
) -> Result<u64> {
    let s = pdu_service_time_s(carrier, pdu_size_bytes)?;
    Ok(((s * T::from_count(1_000_000_000)).as_f64().round() as u64).max(1))
}

/// One-trip delay for a PDU whose transmission ends at `t_ns`.
pub fn propagation_delay_ns(orbit: &OrbitModel, t_ns: u64) -> u64 {
    secs_to_ns(orbit.propagation_delay_s(ns_to_secs(t_ns)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkEventKind {
    TxStart,
    TxEnd,
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkEvent {
    pub kind: LinkEventKind,
    pub seq: u64,
    pub carrier: CarrierId,
    pub time_ns: u64,
}

/// FIFO of PDUs waiting for one carrier.
#[derive(Debug, Clone)]
pub struct CarrierQueue {
    pub carrier: CarrierId,
    waiting: VecDeque<u64>,
    pub next_free_ns: u64,
    busy: bool,
}

impl CarrierQueue {
    pub fn new(carrier: CarrierId) -> Self {
        Self {
            carrier,
            waiting: VecDeque::new(),
            next_free_ns: 0,
            busy: false,
        }
    }

    pub fn len(&self) -> usize {
        self.waiting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waiting.is_empty()
    }

    pub fn is_busy(&self) -> bool {
        self.busy
    }

    fn push(&mut self, seq: u64) {
        self.waiting.push_back(seq);
    }

    /// Pops the next PDU if the carrier is idle.
    fn start_next(&mut self) -> Option<u64> {
        if self.busy {
            return None;
        }
        let seq = self.waiting.pop_front()?;
        self.busy = true;
        Some(seq)
    }

    fn finish(&mut self, t_ns: u64) {
        self.busy = false;
        self.next_free_ns = t_ns;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Arrival { seq: u64, carrier: CarrierId },
    TxEnd { seq: u64, carrier: CarrierId },
    Release { burst: usize },
    TxStart { carrier: CarrierId },
}

impl Action {
    /// Same-instant processing order: deliveries, then link releases, then
    /// new traffic, then starts (which see everything queued so far).
    fn key(&self) -> (u8, u8, u64) {
        match *self {
            Action::Arrival { seq, carrier } => (0, carrier as u8, seq),
            Action::TxEnd { seq, carrier } => (1, carrier as u8, seq),
            Action::Release { burst } => (2, 0, burst as u64),
            Action::TxStart { carrier } => (3, carrier as u8, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Scheduled {
    time_ns: u64,
    action: Action,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time_ns, self.action.key()).cmp(&(other.time_ns, other.action.key()))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Output of one emulator run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Sorted by arrival, then carrier, then sequence number.
    pub traces: Vec<PduTrace>,
    /// Link events in processing order.
    pub events: Vec<LinkEvent>,
}

struct Engine<'a> {
    bursts: Vec<(u64, u64, u64)>, // (first seq, count, gap ns)
    plan: &'a [CarrierId],
    service_ns: [u64; 2],
    orbits: [&'a OrbitModel; 2],
    queues: [CarrierQueue; 2],
    heap: BinaryHeap<Reverse<Scheduled>>,
    traces: Vec<Option<PduTrace>>,
    remaining: Vec<u64>,
    events: Vec<LinkEvent>,
}

impl Engine<'_> {
    fn schedule(&mut self, time_ns: u64, action: Action) {
        self.heap.push(Reverse(Scheduled { time_ns, action }));
    }

    fn burst_of(&self, seq: u64) -> usize {
        self.bursts.partition_point(|&(first, _, _)| first <= seq) - 1
    }

    fn release(&mut self, now: u64, burst: usize) {
        let (first, count, _) = self.bursts[burst];
        if count == 0 {
            self.release_next(now, burst);
            return;
        }
        for local in 0..count {
            let seq = first + local;
            let carrier = self.plan[seq as usize];
            self.queues[carrier.index()].push(seq);
            self.traces[seq as usize] = Some(PduTrace {
                seq,
                burst,
                local_seq: local,
                carrier,
                t_scheduled: now,
                t_tx_start: 0,
                t_tx_end: 0,
                t_arrival: 0,
            });
        }
        for carrier in [CarrierId::One, CarrierId::Two] {
            if !self.queues[carrier.index()].is_empty() {
                self.schedule(now, Action::TxStart { carrier });
            }
        }
    }

    fn release_next(&mut self, now: u64, burst: usize) {
        if let Some(&(_, _, gap)) = self.bursts.get(burst + 1) {
            self.schedule(now + gap, Action::Release { burst: burst + 1 });
        }
    }

    fn step(&mut self, ev: Scheduled) {
        let now = ev.time_ns;
        match ev.action {
            Action::Release { burst } => self.release(now, burst),
            Action::TxStart { carrier } => {
                let Some(seq) = self.queues[carrier.index()].start_next() else {
                    return;
                };
                let tr = self.traces[seq as usize].as_mut().expect("released");
                tr.t_tx_start = now;
                self.events.push(LinkEvent {
                    kind: LinkEventKind::TxStart,
                    seq,
                    carrier,
                    time_ns: now,
                });
                self.schedule(
                    now + self.service_ns[carrier.index()],
                    Action::TxEnd { seq, carrier },
                );
            }
            Action::TxEnd { seq, carrier } => {
                self.traces[seq as usize]
                    .as_mut()
                    .expect("released")
                    .t_tx_end = now;
                self.events.push(LinkEvent {
                    kind: LinkEventKind::TxEnd,
                    seq,
                    carrier,
                    time_ns: now,
                });
                let q = &mut self.queues[carrier.index()];
                q.finish(now);
                if !q.is_empty() {
                    self.schedule(now, Action::TxStart { carrier });
                }
                let arrival = now + propagation_delay_ns(self.orbits[carrier.index()], now);
                self.schedule(arrival, Action::Arrival { seq, carrier });
            }
            Action::Arrival { seq, carrier } => {
                self.traces[seq as usize]
                    .as_mut()
                    .expect("released")
                    .t_arrival = now;
                self.events.push(LinkEvent {
                    kind: LinkEventKind::Arrival,
                    seq,
                    carrier,
                    time_ns: now,
                });
                let burst = self.burst_of(seq);
                self.remaining[burst] -= 1;
                if self.remaining[burst] == 0 {
                    self.release_next(now, burst);
                }
            }
        }
    }
}

/// Runs the scenario and keeps the link event log.
pub fn run_with_events<T: Scalar>(
    scenario: &ScenarioConfig<T>,
    plan: &SchedulingPlan<T>,
) -> Result<RunOutput> {
    scenario.validate()?;
    let service_ns = [
        pdu_service_time_ns(&scenario.carrier1, scenario.pdu_size_bytes)?,
        pdu_service_time_ns(&scenario.carrier2, scenario.pdu_size_bytes)?,
    ];
    let offsets = scenario.burst_offsets();
    let bursts: Vec<_> = scenario
        .bursts
        .iter()
        .zip(&offsets)
        .map(|(b, &first)| (first, b.pdu_count, secs_to_ns(b.gap_before_s)))
        .collect();
    // the plan restarts with every burst
    let assignment: Vec<CarrierId> = bursts
        .iter()
        .flat_map(|&(_, count, _)| (0..count).map(|local| plan.assign(local)))
        .collect();
    let total = scenario.total_pdus() as usize;

    let mut engine = Engine {
        remaining: bursts.iter().map(|b| b.1).collect(),
        bursts,
        plan: &assignment,
        service_ns,
        orbits: [&scenario.carrier1.orbit, &scenario.carrier2.orbit],
        queues: [
            CarrierQueue::new(CarrierId::One),
            CarrierQueue::new(CarrierId::Two),
        ],
        heap: BinaryHeap::new(),
        traces: vec![None; total],
        events: Vec::with_capacity(3 * total),
    };
    let first_gap = engine.bursts[0].2;
    engine.schedule(first_gap, Action::Release { burst: 0 });
    while let Some(Reverse(ev)) = engine.heap.pop() {
        engine.step(ev);
    }

    let mut traces: Vec<PduTrace> = engine
        .traces
        .into_iter()
        .map(|t| t.expect("every PDU delivered"))
        .collect();
    traces.sort_by_key(|t| (t.t_arrival, t.carrier, t.seq));
    Ok(RunOutput {
        traces,
        events: engine.events,
    })
}

/// Runs the scenario; traces sorted by arrival (carrier 1 first on ties,
/// then lower sequence number).
pub fn run<T: Scalar>(
    scenario: &ScenarioConfig<T>,
    plan: &SchedulingPlan<T>,
) -> Result<Vec<PduTrace>> {
    Ok(run_with_events(scenario, plan)?.traces)
}

/// Writes `seq,carrier,t_scheduled,t_tx_start,t_tx_end,t_arrival` rows,
/// times in nanoseconds.
pub fn write_trace_csv<W: Write>(traces: &[PduTrace], mut out: W) -> io::Result<()> {
    writeln!(out, "seq,carrier,t_scheduled,t_tx_start,t_tx_end,t_arrival")?;
    for t in traces {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.seq, t.carrier, t.t_scheduled, t.t_tx_start, t.t_tx_end, t.t_arrival
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Burst, ModCod, SchedulerKind};
    use crate::scheduler::{build_plan, CycleSource};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn carrier(rs: f64, fr: f64, orbit: OrbitModel) -> CarrierConfig<f64> {
        CarrierConfig::new(rs, ModCod::parse("8PSK 5/6").unwrap(), fr, 10.0, orbit).unwrap()
    }

    fn scenario(
        c1: CarrierConfig<f64>,
        c2: CarrierConfig<f64>,
        kind: SchedulerKind,
        bursts: Vec<Burst>,
    ) -> ScenarioConfig<f64> {
        ScenarioConfig::new("t", c1, c2, kind, 1500, bursts).unwrap()
    }

    #[test]
    fn service_time_examples() {
        // 612540 / (27 x 4.64e6) / 1
        let c = carrier(4.64e6, 0.25, OrbitModel::geo());
        let s = pdu_service_time_s(&c, 1500).unwrap();
        assert!((s - 612_540.0 / 27.0 / 4.64e6).abs() < 1e-15);
        assert!((s * 1e3 - 4.889).abs() < 5e-4, "{s}");
        assert_eq!(pdu_service_time_ns(&c, 1500).unwrap(), 4_889_368);

        let doubled = carrier(9.28e6, 0.25, OrbitModel::geo());
        assert!((pdu_service_time_s(&doubled, 1500).unwrap() * 2.0 - s).abs() < 1e-15);

        let full = carrier(4.64e6, 1.0, OrbitModel::geo());
        assert!((pdu_service_time_s(&full, 1500).unwrap() * 4.0 - s).abs() < 1e-15);

        let exact = CarrierConfig::new(
            q(4_640_000, 1),
            ModCod::parse("8PSK 5/6").unwrap(),
            q(1, 4),
            10.0,
            OrbitModel::geo(),
        )
        .unwrap();
        assert_eq!(
            pdu_service_time_s(&exact, 1500).unwrap(),
            q(612_540, 27 * 4_640_000)
        );
        assert_eq!(pdu_service_time_ns(&exact, 1500).unwrap(), 4_889_368);
    }

    #[test]
    fn single_pdu() {
        for id in [CarrierId::One, CarrierId::Two] {
            let c1 = carrier(4.64e6, 0.25, OrbitModel::geo());
            let c2 = carrier(1.856e6, 0.25, OrbitModel::meo_fixed());
            let s = scenario(
                c1,
                c2,
                SchedulerKind::LoadBalancing,
                vec![Burst::new(1, 0.0)],
            );
            let plan = SchedulingPlan::new(
                vec![id],
                vec![CarrierId::One, CarrierId::Two],
                CycleSource::Table,
            );
            let traces = run(&s, &plan).unwrap();
            let c = s.carrier(id);
            let svc = pdu_service_time_ns(c, 1500).unwrap();
            assert_eq!(traces.len(), 1);
            assert_eq!(traces[0].carrier, id);
            assert_eq!(
                traces[0].t_arrival,
                svc + secs_to_ns(c.orbit.propagation_delay_s(ns_to_secs(svc)))
            );
        }
    }

    #[test]
    fn balanced_round_robin_arrives_in_order() {
        let c = carrier(4.64e6, 0.25, OrbitModel::geo());
        let s = scenario(
            c.clone(),
            c,
            SchedulerKind::RoundRobin,
            vec![Burst::new(200, 0.0)],
        );
        let traces = run(&s, &build_plan(&s).unwrap()).unwrap();
        let seqs: Vec<u64> = traces.iter().map(|t| t.seq).collect();
        assert_eq!(seqs, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn two_bursts_of_2500() {
        let s = scenario(
            carrier(4.64e6, 0.25, OrbitModel::geo()),
            carrier(1.856e6, 0.25, OrbitModel::geo()),
            SchedulerKind::RoundRobin,
            vec![Burst::new(2500, 0.0), Burst::new(2500, 1.0)],
        );
        let traces = run(&s, &build_plan(&s).unwrap()).unwrap();
        assert_eq!(traces.len(), 5000);
        let last_first = traces
            .iter()
            .filter(|t| t.burst == 0)
            .map(|t| t.t_arrival)
            .max()
            .unwrap();
        let second_release = traces.iter().find(|t| t.burst == 1).unwrap().t_scheduled;
        assert_eq!(second_release, last_first + 1_000_000_000);
        assert!(traces
            .iter()
            .filter(|t| t.burst == 1)
            .all(|t| t.local_seq == t.seq - 2500));
    }

    #[test]
    fn empty_burst_still_honours_gaps() {
        let c = carrier(4.64e6, 0.25, OrbitModel::geo());
        let s = scenario(
            c.clone(),
            c,
            SchedulerKind::RoundRobin,
            vec![Burst::new(1, 0.5), Burst::new(0, 1.0), Burst::new(1, 2.0)],
        );
        let traces = run(&s, &build_plan(&s).unwrap()).unwrap();
        assert_eq!(traces.len(), 2);
        assert_eq!(traces[0].t_scheduled, 500_000_000);
        assert_eq!(traces[1].t_scheduled, traces[0].t_arrival + 3_000_000_000);
    }

    #[test]
    fn trace_csv_format() {
        let t = PduTrace {
            seq: 3,
            burst: 0,
            local_seq: 3,
            carrier: CarrierId::Two,
            t_scheduled: 0,
            t_tx_start: 5,
            t_tx_end: 9,
            t_arrival: 20,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[t], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seq,carrier,t_scheduled,t_tx_start,t_tx_end,t_arrival\n3,2,0,5,9,20\n"
        );
    }

    fn arb_scenario() -> impl Strategy<Value = ScenarioConfig<f64>> {
        (
            1e6f64..8e6,
            0.1f64..1.0,
            prop::bool::ANY,
            prop::bool::ANY,
            prop::bool::ANY,
            prop::collection::vec((0u64..120, 0.0f64..0.5), 1..4),
        )
            .prop_map(|(rs, ratio, meo1, meo2, rr, bursts)| {
                let orbit = |meo: bool| {
                    if meo {
                        OrbitModel::meo()
                    } else {
                        OrbitModel::geo()
                    }
                };
                let c1 = carrier(rs, 0.25, orbit(meo1));
                let c2 = carrier(rs * ratio, 0.25, orbit(meo2));
                let kind = if rr {
                    SchedulerKind::RoundRobin
                } else {
                    SchedulerKind::LoadBalancing
                };
                let mut bursts: Vec<Burst> =
                    bursts.into_iter().map(|(n, g)| Burst::new(n, g)).collect();
                bursts[0].pdu_count += 1;
                scenario(c1, c2, kind, bursts)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conservation_fifo_and_event_order(s in arb_scenario()) {
            let plan = build_plan(&s).unwrap();
            let out = run_with_events(&s, &plan).unwrap();
            let n = s.total_pdus();
            let mut seqs: Vec<u64> = out.traces.iter().map(|t| t.seq).collect();
            seqs.sort_unstable();
            prop_assert_eq!(seqs, (0..n).collect::<Vec<_>>());

            for t in &out.traces {
                prop_assert!(t.t_scheduled <= t.t_tx_start);
                prop_assert!(t.t_tx_start < t.t_tx_end);
                prop_assert!(t.t_tx_end <= t.t_arrival);
            }
            for id in [CarrierId::One, CarrierId::Two] {
                let order: Vec<u64> = out.traces.iter().filter(|t| t.carrier == id).map(|t| t.seq).collect();
                prop_assert!(order.windows(2).all(|w| w[0] < w[1]), "carrier {} reordered", id);
            }
            // TxStart < TxEnd <= Arrival in the event log for each PDU
            let mut stage = vec![0u8; n as usize];
            for e in &out.events {
                let expected = match e.kind { LinkEventKind::TxStart => 0, LinkEventKind::TxEnd => 1, LinkEventKind::Arrival => 2 };
                prop_assert_eq!(stage[e.seq as usize], expected);
                stage[e.seq as usize] += 1;
            }
        }

        #[test]
        fn throughput_stays_under_usable_capacity(s in arb_scenario()) {
            let traces = run(&s, &build_plan(&s).unwrap()).unwrap();
            for b in 0..s.bursts.len() {
                let mine: Vec<_> = traces.iter().filter(|t| t.burst == b).collect();
                if mine.is_empty() { continue; }
                let first = mine.iter().map(|t| t.t_tx_start).min().unwrap();
                let last = mine.iter().map(|t| t.t_arrival).max().unwrap();
                let bits = mine.len() as f64 * 1500.0 * 8.0;
                let rate = bits / ns_to_secs(last - first);
                let bound = s.carrier1.usable_capacity_bps() + s.carrier2.usable_capacity_bps();
                prop_assert!(rate <= bound, "{} > {}", rate, bound);
            }
        }

        #[test]
        fn runs_are_deterministic(s in arb_scenario()) {
            let plan = build_plan(&s).unwrap();
            prop_assert_eq!(run_with_events(&s, &plan).unwrap(), run_with_events(&s, &plan).unwrap());
        }
    }
}
