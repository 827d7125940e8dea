#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use casim::model::{Burst, CarrierConfig, ModCod, OrbitKind, OrbitModel, SchedulerKind};
use casim::{ExactScenario, Scenario};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn suite_dir() -> PathBuf {
    configs_dir().join("suite")
}

pub fn load(path: &std::path::Path) -> ExactScenario {
    casim::config::parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn load_suite(stem: &str) -> ExactScenario {
    load(&suite_dir().join(format!("{stem}.cfg")))
}

const MODCODS: [&str; 5] = ["QPSK 1/2", "QPSK 3/4", "8PSK 3/4", "8PSK 5/6", "16APSK 3/4"];

fn constant_orbit<R: Rng>(rng: &mut R) -> OrbitModel {
    let mut orbit = if rng.gen_bool(0.5) {
        OrbitModel::geo()
    } else {
        OrbitModel::meo_fixed()
    };
    if rng.gen_bool(0.5) {
        orbit.mean_leg_distance_km = rng.gen_range(0.0..45_000.0);
    }
    orbit
}

fn carrier<R: Rng>(rng: &mut R) -> CarrierConfig<f64> {
    let modcod = ModCod::parse(MODCODS.choose(rng).unwrap()).unwrap();
    CarrierConfig::new(
        rng.gen_range(200_000..10_000_000) as f64,
        modcod,
        rng.gen_range(5..=100) as f64 / 100.0,
        10.0,
        constant_orbit(rng),
    )
    .unwrap()
}

/// Random valid scenario with constant delays and at most `max_pdus` PDUs.
pub fn random_constant_delay_scenario<R: Rng>(rng: &mut R, max_pdus: u64) -> Scenario {
    let (mut c1, mut c2) = (carrier(rng), carrier(rng));
    if c2.usable_capacity_bps() > c1.usable_capacity_bps() {
        std::mem::swap(&mut c1, &mut c2);
    }
    let n_bursts = rng.gen_range(1..=3);
    let mut bursts: Vec<Burst> = (0..n_bursts)
        .map(|_| {
            Burst::new(
                rng.gen_range(0..=max_pdus / n_bursts),
                rng.gen_range(0..500) as f64 / 1000.0,
            )
        })
        .collect();
    if bursts.iter().all(|b| b.pdu_count == 0) {
        bursts[0].pdu_count = 1;
    }
    let scheduler = if rng.gen_bool(0.7) {
        SchedulerKind::LoadBalancing
    } else {
        SchedulerKind::RoundRobin
    };
    // PDUs must fit a FECFRAME share on both carriers
    let pdu_size_bytes = rng.gen_range(40..=1500);
    let s = Scenario {
        label: "random".into(),
        carrier1: c1,
        carrier2: c2,
        scheduler,
        pdu_size_bytes,
        bursts,
    };
    match s.validate() {
        Ok(()) => s,
        Err(_) => random_constant_delay_scenario(rng, max_pdus),
    }
}

pub fn geo_pair(alpha_percent: u64, scheduler: SchedulerKind) -> ExactScenario {
    let mut s = load_suite("geo_ca");
    s.scheduler = scheduler;
    s.carrier2.symbol_rate_sym_s = casim::Scalar::from_ratio(4_640_000 * alpha_percent as i64, 100);
    s.carrier1.orbit = OrbitModel::default_for(OrbitKind::Geo);
    s
}
