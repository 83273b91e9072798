//! Time-stepped simulation: synthetic scenarios, mobility traces and the
//! broadcast/display loop.

pub mod config;
pub mod engine;
pub mod population;
pub mod scenario;
pub mod trace;

pub use config::{PoaLayout, CALIBRATED_ANGULAR_D_MAX, ScenarioConfig, SimConfig};
pub use engine::{coverage, run, write_metrics, CandidateLists, PoaSelection, Simulation, StepMetrics, METRICS_HEADER};
pub use population::{gen_ads, gen_poas, gen_population, gen_profiles};
pub use scenario::Scenario;
pub use trace::{gen_synthetic, MobilityTrace, SyntheticTrace, TracePoint};
