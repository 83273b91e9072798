//! Targeted ad scheduling for vehicular networks.
//!
//! The crate models ads and vehicle interests as points of a feature space,
//! keeps per-PoA revenue estimates up to date as vehicles come and go, and
//! selects what each PoA broadcasts with the conflict-free `Volfied` rule or
//! the `Top-k` and `Random` baselines. A time-stepped simulator replays a
//! mobility trace to measure revenue, impressions and relevance, and an
//! exhaustive solver gives the exact single-step optimum on small
//! instances.

pub mod broker;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod sparse;
pub mod vehicle;

pub use error::{Error, Result};
pub use model::{
    ad_value, is_relevant, Ad, AdCatalog, AdId, AdScope, DistanceMetric, FeatureVector, PoA, PoAId,
    Relevance, VehicleId, VehicleProfile,
};
