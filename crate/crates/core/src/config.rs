//! Flat `key=value` scenario files.
//!
//! One key per line; blank lines and anything after `#` are ignored.
//!
//! ```text
//! label=GEO
//! scheduler=load_balancing          # or round_robin
//! pdu_size_bytes=1500
//! bursts=2500:0,2500:1              # count:gap_before_s, comma separated
//! carrier1.symbol_rate_sym_s=4640000
//! carrier1.modcod=8PSK 5/6          # optional, picked from snr_db if absent
//! carrier1.fill_rate=0.25
//! carrier1.snr_db=10
//! carrier1.orbit=GEO                # GEO or MEO
//! carrier1.orbit.mean_leg_km=40151  # optional orbit keys default per kind
//! carrier1.orbit.variation_amplitude_km=0
//! carrier1.orbit.variation_period_s=600
//! carrier2.…                        # same keys as carrier1
//! ```
//!
//! The burst gap is idle time before the burst: from t = 0 for the first
//! burst, from the previous burst's last arrival otherwise.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::error::Error as ModelError;
use crate::model::{
    Burst, CarrierConfig, ModCod, OrbitKind, OrbitModel, ScenarioConfig, SchedulerKind,
    DEFAULT_PDU_SIZE_BYTES,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("key `{key}`: invalid value {value:?}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },

    /// The file parsed but describes an invalid scenario.
    #[error("invalid scenario: {0}")]
    Invariant(#[from] ModelError),
}

const CARRIER_KEYS: [&str; 8] = [
    "symbol_rate_sym_s",
    "modcod",
    "fill_rate",
    "snr_db",
    "orbit",
    "orbit.mean_leg_km",
    "orbit.variation_amplitude_km",
    "orbit.variation_period_s",
];

/// Splits a config file into its key/value pairs, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(out)
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key)
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }
}

fn invalid(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_scalar<T: Scalar>(key: &str, value: &str) -> Result<T, ConfigError> {
    T::parse_decimal(value).ok_or_else(|| invalid(key, value, "not a number"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(key, value, "not a finite number"))
}

fn parse_bursts(value: &str) -> Result<Vec<Burst>, ConfigError> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (count, gap) = item.split_once(':').unwrap_or((item, "0"));
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|e| invalid("bursts", item, e))?;
            let gap = parse_f64("bursts", gap.trim())?;
            Ok(Burst::new(count, gap))
        })
        .collect()
}

fn parse_carrier<T: Scalar>(
    pairs: &mut Pairs,
    prefix: &str,
) -> Result<CarrierConfig<T>, ConfigError> {
    let key = |k: &str| format!("{prefix}.{k}");

    let rs_key = key("symbol_rate_sym_s");
    let symbol_rate = parse_scalar::<T>(&rs_key, &pairs.require(&rs_key)?)?;
    let fr_key = key("fill_rate");
    let fill_rate = parse_scalar::<T>(&fr_key, &pairs.require(&fr_key)?)?;
    let snr_key = key("snr_db");
    let snr_db = parse_f64(&snr_key, &pairs.require(&snr_key)?)?;
    let modcod = match pairs.take(&key("modcod")) {
        Some(name) => ModCod::parse(&name).map_err(|e| invalid(&key("modcod"), &name, e))?,
        None => ModCod::for_snr(snr_db)?,
    };

    let orbit_key = key("orbit");
    let kind_str = pairs.require(&orbit_key)?;
    let kind: OrbitKind = kind_str
        .parse()
        .map_err(|e| invalid(&orbit_key, &kind_str, e))?;
    let mut orbit = OrbitModel::default_for(kind);
    for (k, field) in [
        ("orbit.mean_leg_km", &mut orbit.mean_leg_distance_km),
        (
            "orbit.variation_amplitude_km",
            &mut orbit.variation_amplitude_km,
        ),
        ("orbit.variation_period_s", &mut orbit.variation_period_s),
    ] {
        if let Some(v) = pairs.take(&key(k)) {
            *field = parse_f64(&key(k), &v)?;
        }
    }

    Ok(CarrierConfig::new(
        symbol_rate,
        modcod,
        fill_rate,
        snr_db,
        orbit,
    )?)
}

/// Parses and validates a scenario file.
pub fn parse_scenario<T: Scalar>(text: &str) -> Result<ScenarioConfig<T>, ConfigError> {
    let mut pairs = Pairs(parse_pairs(text)?);
    let label = pairs.take("label").unwrap_or_default();
    let sched = pairs.require("scheduler")?;
    let scheduler: SchedulerKind = sched
        .parse()
        .map_err(|e: String| invalid("scheduler", &sched, e))?;
    let pdu_size_bytes = match pairs.take("pdu_size_bytes") {
        Some(v) => v
            .parse::<u32>()
            .map_err(|e| invalid("pdu_size_bytes", &v, e))?,
        None => DEFAULT_PDU_SIZE_BYTES,
    };
    let bursts = parse_bursts(&pairs.require("bursts")?)?;
    let carrier1 = parse_carrier(&mut pairs, "carrier1")?;
    let carrier2 = parse_carrier(&mut pairs, "carrier2")?;
    if let Some(k) = pairs.0.keys().next() {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    Ok(ScenarioConfig::new(
        label,
        carrier1,
        carrier2,
        scheduler,
        pdu_size_bytes,
        bursts,
    )?)
}

/// Canonical file text; every key is written explicitly.
pub fn to_config_string<T: Scalar>(s: &ScenarioConfig<T>) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    put("label", s.label.clone());
    put("scheduler", s.scheduler.to_string());
    put("pdu_size_bytes", s.pdu_size_bytes.to_string());
    let bursts: Vec<String> = s
        .bursts
        .iter()
        .map(|b| format!("{}:{}", b.pdu_count, b.gap_before_s))
        .collect();
    put("bursts", bursts.join(","));
    for (name, c) in [("carrier1", &s.carrier1), ("carrier2", &s.carrier2)] {
        let values = [
            c.symbol_rate_sym_s.to_config_string(),
            c.modcod.name().to_string(),
            c.fill_rate.to_config_string(),
            c.snr_db.to_string(),
            c.orbit.kind.to_string(),
            c.orbit.mean_leg_distance_km.to_string(),
            c.orbit.variation_amplitude_km.to_string(),
            c.orbit.variation_period_s.to_string(),
        ];
        for (k, v) in CARRIER_KEYS.iter().zip(values) {
            put(&format!("{name}.{k}"), v);
        }
    }
    out
}
