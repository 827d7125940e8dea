//! Gateway-side load balancing.
//!
//! A [`SchedulingPlan`] is a one-off prefix (multi-orbit latency
//! compensation, all on the lower-latency carrier) followed by a cycle of
//! carrier assignments repeated for the rest of the burst. The cycle comes
//! from the fixed lookup table when the load-balancing factor matches a key
//! and from an error-accumulator generator otherwise.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CarrierConfig, CarrierId, ModCod, ScenarioConfig, SchedulerKind};
use crate::scalar::Scalar;

/// Symbols in one DVB-S2X format-2 superframe.
pub const SUPERFRAME_SYMBOLS: u64 = 612_540;
/// Bundled frames per superframe.
pub const FRAMES_PER_SUPERFRAME: u64 = 9;
/// Coded bits in a normal FECFRAME.
pub const FECFRAME_BITS: u64 = 64_800;
/// Largest cycle denominator accepted by [`generate_sequence`].
pub const MAX_GENERATED_DENOMINATOR: u32 = 64;

/// Lookup table keyed by alpha in hundredths.
const LOOKUP_TABLE: [(u32, &[u8]); 17] = [
    (20, &[1, 1, 1, 1, 1, 2]),
    (25, &[1, 1, 1, 1, 2]),
    (30, &[1, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 1, 2]),
    (
        35,
        &[
            1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1, 2,
        ],
    ),
    (40, &[1, 1, 2, 1, 1, 1, 2]),
    (
        45,
        &[
            1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 1, 2,
        ],
    ),
    (50, &[1, 1, 2]),
    (
        55,
        &[
            1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 1,
            1, 2,
        ],
    ),
    (60, &[1, 2, 1, 1, 2, 1, 1, 2]),
    (
        65,
        &[
            1, 2, 1, 1, 2, 1, 2, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2,
            1, 1, 2,
        ],
    ),
    (70, &[1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1, 2]),
    (75, &[1, 2, 1, 2, 1, 1, 2]),
    (80, &[1, 2, 1, 2, 1, 2, 1, 1, 2]),
    (
        85,
        &[
            1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 1, 2, 1, 2, 1,
            2, 1, 2, 1, 2, 1, 1, 2,
        ],
    ),
    (
        90,
        &[1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 1, 2],
    ),
    (
        95,
        &[
            1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1,
            2, 1, 2, 1, 2, 1, 2, 1, 1, 2,
        ],
    ),
    (100, &[1, 2]),
];

fn to_carriers(raw: &[u8]) -> Vec<CarrierId> {
    raw.iter()
        .map(|&c| CarrierId::try_from(c).expect("table holds only 1 and 2"))
        .collect()
}

/// One row of the lookup table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    /// Key in hundredths, e.g. 40 for alpha = 0.4.
    pub key_hundredths: u32,
    raw: &'static [u8],
}

impl TableRow {
    pub fn key(&self) -> Ratio<u32> {
        Ratio::new(self.key_hundredths, 100)
    }

    pub fn key_as<T: Scalar>(&self) -> T {
        T::from_ratio(self.key_hundredths as i64, 100)
    }

    pub fn sequence(&self) -> Vec<CarrierId> {
        to_carriers(self.raw)
    }

    /// Whether count(2)/count(1) of the stored sequence equals the key.
    pub fn holds_key(&self) -> bool {
        let ones = self.raw.iter().filter(|&&c| c == 1).count() as u32;
        let twos = self.raw.len() as u32 - ones;
        ones > 0 && Ratio::new(twos, ones) == self.key()
    }
}

/// All rows in ascending key order.
pub fn lookup_table() -> impl Iterator<Item = TableRow> {
    LOOKUP_TABLE.iter().map(|&(key_hundredths, raw)| TableRow {
        key_hundredths,
        raw,
    })
}

/// Result of [`lookup_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub row: TableRow,
    /// `false` when alpha was not a table key and the nearest row was
    /// substituted.
    pub exact: bool,
}

impl Lookup {
    pub fn sequence(&self) -> Vec<CarrierId> {
        self.row.sequence()
    }
}

/// Table row for `alpha`: the exact key when present, otherwise the nearest
/// key, ties going to the smaller key.
pub fn lookup_sequence<T: Scalar>(alpha: &T) -> Lookup {
    if let Some(row) = lookup_table().find(|r| r.key_as::<T>().key_eq(alpha)) {
        return Lookup { row, exact: true };
    }
    let mut best: Option<(TableRow, T)> = None;
    for row in lookup_table() {
        let dist = (row.key_as::<T>() - alpha.clone()).abs();
        // ascending keys: strict comparison keeps the smaller key on ties
        if best.as_ref().is_none_or(|(_, d)| dist < *d) {
            best = Some((row, dist));
        }
    }
    Lookup {
        row: best.expect("table is not empty").0,
        exact: false,
    }
}

/// Interleaves `denom` carrier-1 and `numer` carrier-2 slots so that every
/// prefix keeps count(2) within one of alpha x count(1).
///
/// Carrier 1 is preferred; a `2` goes out only when one more `1` would let
/// the carrier-2 deficit `alpha * ones - twos` exceed one, or when all `1`s
/// are spent.
pub fn generate_sequence(alpha: Ratio<u32>) -> Result<Vec<CarrierId>> {
    let (p, q) = (*alpha.numer(), *alpha.denom());
    if p == 0 || p > q {
        return Err(Error::AlphaOutOfRange(format!("{p}/{q}")));
    }
    if q > MAX_GENERATED_DENOMINATOR {
        return Err(Error::DenominatorTooLarge(q));
    }
    let (p, q) = (p as u64, q as u64);
    let (mut ones, mut twos) = (0u64, 0u64);
    let mut seq = Vec::with_capacity((p + q) as usize);
    while ones < q || twos < p {
        // deficit after another 1 would be p(ones+1)/q - twos > 1
        let overdue = p * (ones + 1) > q * (twos + 1);
        if twos < p && (ones == q || overdue) {
            seq.push(CarrierId::Two);
            twos += 1;
        } else {
            seq.push(CarrierId::One);
            ones += 1;
        }
    }
    Ok(seq)
}

/// Closest `p/q` to `alpha` with `q <= 64` and `1 <= p <= q`; ties go to
/// the smaller denominator.
pub fn round_alpha<T: Scalar>(alpha: &T) -> Ratio<u32> {
    let a = alpha.as_f64();
    let mut best = (Ratio::new(1, 1), f64::INFINITY);
    for q in 1..=MAX_GENERATED_DENOMINATOR {
        let p = ((a * q as f64).round() as u32).clamp(1, q);
        let err = (a - p as f64 / q as f64).abs();
        if err < best.1 {
            best = (Ratio::new(p, q), err);
        }
    }
    best.0
}

/// alpha = (R_s2 M2 CR2 FR2) / (R_s1 M1 CR1 FR1).
pub fn load_balance_factor<T: Scalar>(c1: &CarrierConfig<T>, c2: &CarrierConfig<T>) -> Result<T> {
    if c1.fill_rate.is_zero() {
        return Err(Error::ZeroFillRate);
    }
    let denom = c1.usable_capacity_bps();
    if denom.is_zero() {
        return Err(Error::ZeroFillRate);
    }
    let alpha = c2.usable_capacity_bps() / denom;
    if alpha.is_zero() {
        return Err(Error::Carrier2Unusable);
    }
    if alpha > T::one() {
        return Err(Error::DominanceViolated {
            alpha: alpha.to_string(),
        });
    }
    Ok(alpha)
}

/// Superframes sent in `interval_s` at `symbol_rate_sym_s`.
pub fn superframes_in_interval<T: Scalar>(interval_s: &T, symbol_rate_sym_s: &T) -> T {
    interval_s.clone() * symbol_rate_sym_s.clone() / T::from_count(SUPERFRAME_SYMBOLS)
}

/// Whole PDUs fitting in one FECFRAME's user share (no fragmentation).
pub fn pdus_per_fecframe<T: Scalar>(
    pdu_size_bytes: u32,
    modcod: &ModCod,
    fill_rate: &T,
) -> Result<u64> {
    if pdu_size_bytes == 0 {
        return Err(Error::ZeroPduSize);
    }
    let share_bits = T::from_count(FECFRAME_BITS) * modcod.code_rate_as::<T>() * fill_rate.clone();
    let count = (share_bits.clone() / T::from_count(8 * pdu_size_bytes as u64))
        .floor_u64()
        .unwrap_or(0);
    if count == 0 {
        return Err(Error::ZeroPayload {
            pdu_size_bytes,
            share_bytes: share_bits.as_f64() / 8.0,
        });
    }
    Ok(count)
}

/// Intermediate values of the multi-orbit prefix computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixCalc<T> {
    /// Differential one-trip delay, seconds.
    pub delta_t_s: T,
    /// Superframes of the fast carrier sent during the differential delay.
    pub superframes: T,
    pub pdus_per_fecframe: u64,
    /// Unfloored prefix length.
    pub raw: T,
    pub length: u64,
}

/// Prefix length for a given differential delay: the number of PDUs the
/// fast carrier sends before the slow carrier's first PDU would land.
pub fn prefix_for_delay<T: Scalar>(
    fast: &CarrierConfig<T>,
    pdu_size_bytes: u32,
    delta_t_s: T,
) -> Result<PrefixCalc<T>> {
    let per_frame = pdus_per_fecframe(pdu_size_bytes, &fast.modcod, &fast.fill_rate)?;
    let superframes = superframes_in_interval(&delta_t_s, &fast.symbol_rate_sym_s);
    let fecframes = T::from_count(FRAMES_PER_SUPERFRAME * fast.modcod.bits_per_symbol() as u64)
        * superframes.clone();
    let raw = T::from_count(per_frame) * fecframes;
    let length = raw.floor_u64().unwrap_or(0);
    Ok(PrefixCalc {
        delta_t_s,
        superframes,
        pdus_per_fecframe: per_frame,
        raw,
        length,
    })
}

/// Prefix for a fast (lower-latency) and slow carrier pair, using the
/// amplitude-free mean delays.
pub fn multi_orbit_prefix<T: Scalar>(
    fast: &CarrierConfig<T>,
    slow: &CarrierConfig<T>,
    pdu_size_bytes: u32,
) -> Result<PrefixCalc<T>> {
    let delta = slow.orbit.mean_propagation_delay::<T>() - fast.orbit.mean_propagation_delay::<T>();
    let delta = if delta < T::zero() { T::zero() } else { delta };
    prefix_for_delay(fast, pdu_size_bytes, delta)
}

/// Where a plan's cycle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleSource {
    Table,
    Generated,
    RoundRobin,
}

/// Prefix plus repeating cycle of carrier assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingPlan<T> {
    pub prefix: Vec<CarrierId>,
    pub cycle: Vec<CarrierId>,
    /// count(2) / count(1) of the cycle.
    pub alpha_used: T,
    /// Factor computed from the carriers, before any rounding.
    pub alpha_measured: T,
    pub source: CycleSource,
}

impl<T: Scalar> SchedulingPlan<T> {
    pub fn new(prefix: Vec<CarrierId>, cycle: Vec<CarrierId>, source: CycleSource) -> Self {
        let ones = cycle.iter().filter(|&&c| c == CarrierId::One).count() as u64;
        let twos = cycle.len() as u64 - ones;
        assert!(ones > 0, "cycle needs at least one carrier-1 slot");
        let alpha = T::from_count(twos) / T::from_count(ones);
        Self {
            prefix,
            cycle,
            alpha_measured: alpha.clone(),
            alpha_used: alpha,
            source,
        }
    }

    /// Carrier for the PDU at position `seq` within its burst.
    pub fn assign(&self, seq: u64) -> CarrierId {
        let seq = seq as usize;
        match self.prefix.get(seq) {
            Some(&c) => c,
            None => self.cycle[(seq - self.prefix.len()) % self.cycle.len()],
        }
    }

    /// Carrier that fills the prefix, if any.
    pub fn prefix_carrier(&self) -> Option<CarrierId> {
        self.prefix.first().copied()
    }
}

/// Free-function form of [`SchedulingPlan::assign`].
pub fn assign<T: Scalar>(plan: &SchedulingPlan<T>, seq: u64) -> CarrierId {
    plan.assign(seq)
}

/// Carrier with the lower mean one-trip delay; carrier 1 when equal.
pub fn fast_carrier<T: Scalar>(scenario: &ScenarioConfig<T>) -> CarrierId {
    let d1 = scenario.carrier1.orbit.mean_propagation_delay::<T>();
    let d2 = scenario.carrier2.orbit.mean_propagation_delay::<T>();
    if d2 < d1 {
        CarrierId::Two
    } else {
        CarrierId::One
    }
}

/// Multi-orbit prefix for a scenario (fast carrier and its calculation).
pub fn scenario_prefix<T: Scalar>(
    scenario: &ScenarioConfig<T>,
) -> Result<(CarrierId, PrefixCalc<T>)> {
    let fast = fast_carrier(scenario);
    let calc = multi_orbit_prefix(
        scenario.carrier(fast),
        scenario.carrier(fast.other()),
        scenario.pdu_size_bytes,
    )?;
    Ok((fast, calc))
}

/// Cycle for a load-balancing factor: the table row when alpha is a key,
/// otherwise a generated sequence for the rounded factor.
pub fn cycle_for_alpha<T: Scalar>(alpha: &T) -> Result<(Vec<CarrierId>, CycleSource)> {
    if *alpha <= T::zero() || *alpha > T::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_string()));
    }
    let lookup = lookup_sequence(alpha);
    // a row whose contents disagree with its key would overload one carrier
    if lookup.exact && lookup.row.holds_key() {
        Ok((lookup.sequence(), CycleSource::Table))
    } else {
        Ok((
            generate_sequence(round_alpha(alpha))?,
            CycleSource::Generated,
        ))
    }
}

pub fn build_plan<T: Scalar>(scenario: &ScenarioConfig<T>) -> Result<SchedulingPlan<T>> {
    let alpha = load_balance_factor(&scenario.carrier1, &scenario.carrier2)?;
    let mut plan = match scenario.scheduler {
        SchedulerKind::RoundRobin => SchedulingPlan::new(
            vec![],
            vec![CarrierId::One, CarrierId::Two],
            CycleSource::RoundRobin,
        ),
        SchedulerKind::LoadBalancing => {
            let (cycle, source) = cycle_for_alpha(&alpha)?;
            let (fast, calc) = scenario_prefix(scenario)?;
            SchedulingPlan::new(vec![fast; calc.length as usize], cycle, source)
        }
    };
    plan.alpha_measured = alpha;
    Ok(plan)
}
