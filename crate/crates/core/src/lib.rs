//! Software model of a two-carrier satellite carrier-aggregation testbed.
//!
//! The gateway splits a PDU stream across two heterogeneous carriers with a
//! load-balancing [`scheduler`]; the [`emulator`] serializes each carrier
//! and applies GEO/MEO propagation delays; the [`receiver`] merges both
//! streams in plain FIFO order; [`metrics`] measures how far PDUs land from
//! their send position and the aggregated throughput.
//!
//! Carrier and scheduler arithmetic is generic over [`Scalar`]. Use the
//! `Exact*` aliases (big rationals) when table keys must match exactly, and
//! the plain aliases (`f64`) otherwise.
//!
//! ```
//! use casim::{simulate, ExactScenario};
//!
//! let text = "\
//! scheduler=load_balancing
//! bursts=700
//! carrier1.symbol_rate_sym_s=4640000
//! carrier1.fill_rate=0.25
//! carrier1.snr_db=10
//! carrier1.orbit=GEO
//! carrier2.symbol_rate_sym_s=1856000
//! carrier2.fill_rate=0.25
//! carrier2.snr_db=10
//! carrier2.orbit=GEO
//! ";
//! let scenario: ExactScenario = casim::config::parse_scenario(text).unwrap();
//! let sim = simulate(&scenario).unwrap();
//! assert_eq!(sim.plan.cycle.len(), 7);
//! assert_eq!(sim.report.n_pdus, 700);
//! ```

pub mod cli;
pub mod config;
pub mod emulator;
pub mod error;
pub mod metrics;
pub mod model;
pub mod receiver;
pub mod scalar;
pub mod scheduler;

use num_rational::BigRational;

pub use error::{Error, Result};
pub use metrics::{compare, ComparisonTable, OrderingReport};
pub use model::{Burst, CarrierId, ModCod, OrbitKind, OrbitModel, PduTrace, SchedulerKind};
pub use receiver::MergedStream;
pub use scalar::Scalar;

pub type Carrier = model::CarrierConfig<f64>;
pub type Carrier32 = model::CarrierConfig<f32>;
pub type ExactCarrier = model::CarrierConfig<BigRational>;

pub type Scenario = model::ScenarioConfig<f64>;
pub type Scenario32 = model::ScenarioConfig<f32>;
pub type ExactScenario = model::ScenarioConfig<BigRational>;

pub type Plan = scheduler::SchedulingPlan<f64>;
pub type ExactPlan = scheduler::SchedulingPlan<BigRational>;

/// Everything produced by one scenario run.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub plan: scheduler::SchedulingPlan<T>,
    /// Sorted by arrival.
    pub traces: Vec<PduTrace>,
    pub merged: MergedStream,
    pub report: OrderingReport,
}

/// Plan, emulate, merge and measure.
pub fn simulate<T: Scalar>(scenario: &model::ScenarioConfig<T>) -> Result<Simulation<T>> {
    let plan = scheduler::build_plan(scenario)?;
    let traces = emulator::run(scenario, &plan)?;
    let merged = receiver::merge(&traces)?;
    let report = OrderingReport::from_stream(&merged, scenario.pdu_size_bytes);
    Ok(Simulation {
        plan,
        traces,
        merged,
        report,
    })
}
