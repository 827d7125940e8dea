//! Domain types shared by the scheduler, emulator, receiver and metrics.

use std::f64::consts::PI;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Speed of light in km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Mean GW-satellite (or satellite-UT) leg length of the MEO carrier, km.
pub const MEO_MEAN_LEG_KM: f64 = 11_933.0;
/// Mean leg length of the GEO carrier, km.
pub const GEO_MEAN_LEG_KM: f64 = 40_151.0;
pub const MEO_DEFAULT_AMPLITUDE_KM: f64 = 300.0;
pub const MEO_DEFAULT_PERIOD_S: f64 = 600.0;

pub const DEFAULT_PDU_SIZE_BYTES: u32 = 1500;

/// One of the two aggregated carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CarrierId {
    One = 1,
    Two = 2,
}

impl CarrierId {
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn other(self) -> Self {
        match self {
            CarrierId::One => CarrierId::Two,
            CarrierId::Two => CarrierId::One,
        }
    }
}

impl From<CarrierId> for u8 {
    fn from(c: CarrierId) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for CarrierId {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(CarrierId::One),
            2 => Ok(CarrierId::Two),
            _ => Err(format!("carrier index must be 1 or 2, got {v}")),
        }
    }
}

impl fmt::Display for CarrierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Modulation and coding pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModCod {
    name: String,
    modulation_order_bits: u32,
    code_rate: Ratio<u32>,
}

impl ModCod {
    pub fn new(
        name: impl Into<String>,
        modulation_order_bits: u32,
        rate_num: u32,
        rate_den: u32,
    ) -> Result<Self> {
        let name = name.into();
        if !(1..=6).contains(&modulation_order_bits) {
            return Err(Error::InvalidModCod(format!(
                "{name}: modulation order {modulation_order_bits} bits/symbol not in 1..=6"
            )));
        }
        if rate_num == 0 || rate_den == 0 || rate_num > rate_den {
            return Err(Error::InvalidModCod(format!(
                "{name}: code rate {rate_num}/{rate_den} not in (0, 1]"
            )));
        }
        let code_rate = Ratio::new(rate_num, rate_den);
        if *code_rate.denom() > 36 {
            return Err(Error::InvalidModCod(format!(
                "{name}: code rate denominator exceeds 36"
            )));
        }
        Ok(Self {
            name,
            modulation_order_bits,
            code_rate,
        })
    }

    /// Parses names such as `8PSK 5/6`, `QPSK 1/2` or `16APSK 3/4`.
    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::InvalidModCod(format!("unrecognised MODCOD name {name:?}"));
        let mut parts = name.split_whitespace();
        let modulation = parts.next().ok_or_else(bad)?.to_ascii_uppercase();
        let rate = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let bits = match modulation.as_str() {
            "BPSK" | "PI/2-BPSK" => 1,
            "QPSK" => 2,
            "8PSK" => 3,
            "16APSK" | "16QAM" => 4,
            "32APSK" => 5,
            "64APSK" | "64QAM" => 6,
            _ => return Err(bad()),
        };
        let (n, d) = rate.split_once('/').ok_or_else(bad)?;
        let n = n.parse().map_err(|_| bad())?;
        let d = d.parse().map_err(|_| bad())?;
        Self::new(format!("{modulation} {rate}"), bits, n, d)
    }

    /// Highest-efficiency entry whose SNR threshold is met.
    ///
    /// | MODCOD      | threshold |
    /// |-------------|-----------|
    /// | QPSK 1/2    | 1 dB      |
    /// | QPSK 3/4    | 4 dB      |
    /// | 8PSK 3/4    | 7.9 dB    |
    /// | 8PSK 5/6    | 10 dB     |
    /// | 16APSK 3/4  | 10.2 dB   |
    pub fn for_snr(snr_db: f64) -> Result<Self> {
        const TABLE: [(f64, &str, u32, u32, u32); 5] = [
            (1.0, "QPSK 1/2", 2, 1, 2),
            (4.0, "QPSK 3/4", 2, 3, 4),
            (7.9, "8PSK 3/4", 3, 3, 4),
            (10.0, "8PSK 5/6", 3, 5, 6),
            (10.2, "16APSK 3/4", 4, 3, 4),
        ];
        TABLE
            .iter()
            .rev()
            .find(|(threshold, ..)| snr_db >= *threshold)
            .map(|&(_, name, m, n, d)| Self::new(name, m, n, d).expect("static table is valid"))
            .ok_or(Error::NoModCodForSnr(snr_db))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Bits per symbol, `M`.
    pub fn bits_per_symbol(&self) -> u32 {
        self.modulation_order_bits
    }

    pub fn code_rate(&self) -> Ratio<u32> {
        self.code_rate
    }

    pub fn code_rate_as<T: Scalar>(&self) -> T {
        T::from_ratio(
            *self.code_rate.numer() as i64,
            *self.code_rate.denom() as i64,
        )
    }

    /// `M x CR`, information bits per symbol.
    pub fn spectral_efficiency<T: Scalar>(&self) -> T {
        T::from_count(self.modulation_order_bits as u64) * self.code_rate_as::<T>()
    }
}

impl fmt::Display for ModCod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitKind {
    #[serde(rename = "GEO")]
    Geo,
    #[serde(rename = "MEO")]
    Meo,
}

impl fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrbitKind::Geo => "GEO",
            OrbitKind::Meo => "MEO",
        })
    }
}

impl std::str::FromStr for OrbitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GEO" => Ok(OrbitKind::Geo),
            "MEO" => Ok(OrbitKind::Meo),
            other => Err(Error::InvalidOrbit(format!("unknown orbit kind {other:?}"))),
        }
    }
}

/// Path geometry of one carrier. A trip is two legs (GW to satellite,
/// satellite to UT); MEO legs vary sinusoidally around their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitModel {
    pub kind: OrbitKind,
    pub mean_leg_distance_km: f64,
    pub variation_amplitude_km: f64,
    pub variation_period_s: f64,
    /// Shifts the sinusoid; zero unless a run seed asks otherwise.
    pub phase_offset_s: f64,
}

impl OrbitModel {
    pub fn geo() -> Self {
        Self {
            kind: OrbitKind::Geo,
            mean_leg_distance_km: GEO_MEAN_LEG_KM,
            variation_amplitude_km: 0.0,
            variation_period_s: MEO_DEFAULT_PERIOD_S,
            phase_offset_s: 0.0,
        }
    }

    pub fn meo() -> Self {
        Self {
            kind: OrbitKind::Meo,
            mean_leg_distance_km: MEO_MEAN_LEG_KM,
            variation_amplitude_km: MEO_DEFAULT_AMPLITUDE_KM,
            variation_period_s: MEO_DEFAULT_PERIOD_S,
            phase_offset_s: 0.0,
        }
    }

    /// MEO at its mean distance with no variation.
    pub fn meo_fixed() -> Self {
        Self {
            variation_amplitude_km: 0.0,
            ..Self::meo()
        }
    }

    pub fn default_for(kind: OrbitKind) -> Self {
        match kind {
            OrbitKind::Geo => Self::geo(),
            OrbitKind::Meo => Self::meo(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidOrbit(msg.to_string()));
        if !(self.mean_leg_distance_km.is_finite() && self.mean_leg_distance_km >= 0.0) {
            return bad("mean leg distance must be finite and non-negative");
        }
        if !(self.variation_amplitude_km.is_finite() && self.variation_amplitude_km >= 0.0) {
            return bad("variation amplitude must be finite and non-negative");
        }
        if self.variation_amplitude_km > self.mean_leg_distance_km {
            return bad("variation amplitude exceeds the mean leg distance");
        }
        if self.kind == OrbitKind::Geo && self.variation_amplitude_km != 0.0 {
            return bad("GEO orbits have no distance variation");
        }
        if !(self.variation_period_s.is_finite() && self.variation_period_s > 0.0) {
            return bad("variation period must be positive");
        }
        if !self.phase_offset_s.is_finite() {
            return bad("phase offset must be finite");
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.variation_amplitude_km == 0.0
    }

    /// One-trip delay at time `t_s`.
    pub fn propagation_delay_s(&self, t_s: f64) -> f64 {
        let variation = if self.is_constant() {
            0.0
        } else {
            self.variation_amplitude_km
                * (2.0 * PI * (t_s + self.phase_offset_s) / self.variation_period_s).sin()
        };
        2.0 * (self.mean_leg_distance_km + variation) / SPEED_OF_LIGHT_KM_S
    }

    /// One-trip delay at the mean distance, ignoring variation.
    pub fn mean_propagation_delay_s(&self) -> f64 {
        2.0 * self.mean_leg_distance_km / SPEED_OF_LIGHT_KM_S
    }

    /// Same as [`mean_propagation_delay_s`](Self::mean_propagation_delay_s)
    /// in the caller's scalar type; exact for rationals.
    pub fn mean_propagation_delay<T: Scalar>(&self) -> T {
        let leg = T::from_f64(self.mean_leg_distance_km).expect("finite leg distance");
        T::from_count(2) * leg / T::from_ratio(299_792_458, 1000)
    }
}

/// Free-function form of [`OrbitModel::propagation_delay_s`].
pub fn propagation_delay_s(orbit: &OrbitModel, t_s: f64) -> f64 {
    orbit.propagation_delay_s(t_s)
}

/// One aggregated carrier as seen by the studied user terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierConfig<T> {
    /// Effective symbol rate R_s after roll-off, symbols/s.
    pub symbol_rate_sym_s: T,
    pub modcod: ModCod,
    /// Share of the carrier capacity usable by this terminal.
    pub fill_rate: T,
    /// Carried for MODCOD selection only.
    pub snr_db: f64,
    pub orbit: OrbitModel,
}

impl<T: Scalar> CarrierConfig<T> {
    pub fn new(
        symbol_rate_sym_s: T,
        modcod: ModCod,
        fill_rate: T,
        snr_db: f64,
        orbit: OrbitModel,
    ) -> Result<Self> {
        let c = Self {
            symbol_rate_sym_s,
            modcod,
            fill_rate,
            snr_db,
            orbit,
        };
        c.validate()?;
        Ok(c)
    }

    /// Derives R_s = bandwidth / (1 + roll-off).
    pub fn from_bandwidth(
        bandwidth_hz: T,
        rolloff: T,
        modcod: ModCod,
        fill_rate: T,
        snr_db: f64,
        orbit: OrbitModel,
    ) -> Result<Self> {
        if rolloff < T::zero() {
            return Err(Error::NonPositiveSymbolRate(format!(
                "negative roll-off {rolloff}"
            )));
        }
        Self::new(
            bandwidth_hz / (T::one() + rolloff),
            modcod,
            fill_rate,
            snr_db,
            orbit,
        )
    }

    /// Picks the MODCOD from the SNR table.
    pub fn from_snr(
        symbol_rate_sym_s: T,
        fill_rate: T,
        snr_db: f64,
        orbit: OrbitModel,
    ) -> Result<Self> {
        Self::new(
            symbol_rate_sym_s,
            ModCod::for_snr(snr_db)?,
            fill_rate,
            snr_db,
            orbit,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbol_rate_sym_s <= T::zero() {
            return Err(Error::NonPositiveSymbolRate(
                self.symbol_rate_sym_s.to_string(),
            ));
        }
        if self.fill_rate <= T::zero() || self.fill_rate > T::one() {
            return Err(Error::FillRateOutOfRange(self.fill_rate.to_string()));
        }
        self.orbit.validate()
    }

    /// R_s x M x CR, bits/s.
    pub fn capacity_bps(&self) -> T {
        self.symbol_rate_sym_s.clone() * self.modcod.spectral_efficiency::<T>()
    }

    /// Capacity available to this terminal: capacity x fill rate.
    pub fn usable_capacity_bps(&self) -> T {
        self.capacity_bps() * self.fill_rate.clone()
    }

    /// Converts every scalar field to another scalar type.
    pub fn map_scalar<U: Scalar>(&self) -> CarrierConfig<U> {
        let conv = |v: &T| U::from_f64(v.as_f64()).expect("finite scalar");
        CarrierConfig {
            symbol_rate_sym_s: conv(&self.symbol_rate_sym_s),
            modcod: self.modcod.clone(),
            fill_rate: conv(&self.fill_rate),
            snr_db: self.snr_db,
            orbit: self.orbit.clone(),
        }
    }
}

/// Free-function form of [`CarrierConfig::capacity_bps`].
pub fn capacity_bps<T: Scalar>(c: &CarrierConfig<T>) -> T {
    c.capacity_bps()
}

/// A fixed-length protocol data unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pdu {
    pub seq: u64,
    pub size_bytes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    LoadBalancing,
    RoundRobin,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::LoadBalancing => "load_balancing",
            SchedulerKind::RoundRobin => "round_robin",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "load_balancing" | "lb" => Ok(SchedulerKind::LoadBalancing),
            "round_robin" | "rr" => Ok(SchedulerKind::RoundRobin),
            other => Err(format!("unknown scheduler {other:?}")),
        }
    }
}

/// A group of PDUs released together at the gateway.
///
/// `gap_before_s` is idle time before the release: measured from t = 0 for
/// the first burst and from the last arrival of the previous burst
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    pub pdu_count: u64,
    pub gap_before_s: f64,
}

impl Burst {
    pub fn new(pdu_count: u64, gap_before_s: f64) -> Self {
        Self {
            pdu_count,
            gap_before_s,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub label: String,
    pub carrier1: CarrierConfig<T>,
    pub carrier2: CarrierConfig<T>,
    pub scheduler: SchedulerKind,
    pub pdu_size_bytes: u32,
    pub bursts: Vec<Burst>,
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn new(
        label: impl Into<String>,
        carrier1: CarrierConfig<T>,
        carrier2: CarrierConfig<T>,
        scheduler: SchedulerKind,
        pdu_size_bytes: u32,
        bursts: Vec<Burst>,
    ) -> Result<Self> {
        let s = Self {
            label: label.into(),
            carrier1,
            carrier2,
            scheduler,
            pdu_size_bytes,
            bursts,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks carrier validity, dominance of carrier 1, that a PDU fits each
    /// carrier's FECFRAME share, and bursts.
    pub fn validate(&self) -> Result<()> {
        self.carrier1.validate()?;
        self.carrier2.validate()?;
        crate::scheduler::load_balance_factor(&self.carrier1, &self.carrier2)?;
        for c in [&self.carrier1, &self.carrier2] {
            crate::scheduler::pdus_per_fecframe(self.pdu_size_bytes, &c.modcod, &c.fill_rate)?;
        }
        if self.total_pdus() == 0 {
            return Err(Error::NoTraffic);
        }
        if let Some(b) = self
            .bursts
            .iter()
            .find(|b| !(b.gap_before_s.is_finite() && b.gap_before_s >= 0.0))
        {
            return Err(Error::InvalidGap(b.gap_before_s));
        }
        Ok(())
    }

    pub fn carrier(&self, id: CarrierId) -> &CarrierConfig<T> {
        match id {
            CarrierId::One => &self.carrier1,
            CarrierId::Two => &self.carrier2,
        }
    }

    pub fn total_pdus(&self) -> u64 {
        self.bursts.iter().map(|b| b.pdu_count).sum()
    }

    /// First global sequence number of each burst.
    pub fn burst_offsets(&self) -> Vec<u64> {
        self.bursts
            .iter()
            .scan(0u64, |acc, b| {
                let start = *acc;
                *acc += b.pdu_count;
                Some(start)
            })
            .collect()
    }

    pub fn map_scalar<U: Scalar>(&self) -> ScenarioConfig<U> {
        ScenarioConfig {
            label: self.label.clone(),
            carrier1: self.carrier1.map_scalar(),
            carrier2: self.carrier2.map_scalar(),
            scheduler: self.scheduler,
            pdu_size_bytes: self.pdu_size_bytes,
            bursts: self.bursts.clone(),
        }
    }
}

/// Timestamped journey of one PDU through the gateway and link. Times are
/// integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PduTrace {
    pub seq: u64,
    /// Index of the burst the PDU belongs to.
    pub burst: usize,
    /// Sequence number within the burst.
    pub local_seq: u64,
    pub carrier: CarrierId,
    pub t_scheduled: u64,
    pub t_tx_start: u64,
    pub t_tx_end: u64,
    pub t_arrival: u64,
}
