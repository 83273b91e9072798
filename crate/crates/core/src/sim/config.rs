use serde::{Deserialize, Serialize};

use crate::broker::{SelectionParams, Strategy};
use crate::error::{Error, Result};
use crate::model::{DistanceMetric, Relevance};
use crate::sim::trace::SyntheticTrace;
use crate::sparse::SparseApproxParams;
use crate::vehicle::DisplayParams;

/// Angular relevance threshold giving about as many relevant ads per vehicle
/// under the default generators as the Euclidean threshold of 0.15.
pub const CALIBRATED_ANGULAR_D_MAX: f64 = 0.07;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoaLayout {
    /// Near-square grid, one PoA at the centre of each cell.
    #[default]
    Grid,
    Uniform,
}

/// Synthetic scenario geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_m: (f64, f64),
    pub num_poas: usize,
    pub poa_range_m: f64,
    pub poa_layout: PoaLayout,
    pub num_vehicles: usize,
    pub speed_mps: f64,
    pub step_duration_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_m: (5000.0, 5000.0),
            num_poas: 20,
            poa_range_m: 150.0,
            poa_layout: PoaLayout::Grid,
            num_vehicles: 500,
            speed_mps: 14.0,
            step_duration_s: 60.0,
        }
    }
}

/// Every parameter of one simulation run. Deserialisation requires all
/// fields; [`SimConfig::default`] holds the reference configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub k: usize,
    pub m: usize,
    pub d_max: f64,
    pub epsilon: f64,
    /// Feature-space dimension.
    pub n: usize,
    pub metric: DistanceMetric,
    pub cache_capacity: usize,
    /// Probability that the broker notices a vehicle entering a PoA.
    pub detection_accuracy: f64,
    pub num_ads: usize,
    pub global_fraction: f64,
    pub steps: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub use_sparse: bool,
    pub scenario: ScenarioConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            k: 5,
            m: 1,
            d_max: 0.15,
            epsilon: 0.025,
            n: 5,
            metric: DistanceMetric::Euclidean,
            cache_capacity: 0,
            detection_accuracy: 1.0,
            num_ads: 10_000,
            global_fraction: 0.9,
            steps: 480,
            seed: 0,
            strategy: Strategy::Volfied,
            use_sparse: true,
            scenario: ScenarioConfig::default(),
        }
    }
}

impl SimConfig {
    /// Checks parameter domains; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n == 0 {
            return bad("dimension n must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.detection_accuracy) {
            return bad(format!("detection_accuracy must be in [0, 1], got {}", self.detection_accuracy));
        }
        if !(0.0..=1.0).contains(&self.global_fraction) {
            return bad(format!("global_fraction must be in [0, 1], got {}", self.global_fraction));
        }
        let s = &self.scenario;
        if !(s.area_m.0 > 0.0 && s.area_m.1 > 0.0) {
            return bad("scenario area must be positive".into());
        }
        if !(s.poa_range_m > 0.0) {
            return bad("PoA range must be positive".into());
        }
        if !(s.speed_mps >= 0.0 && s.step_duration_s > 0.0) {
            return bad("speed must be non-negative and step duration positive".into());
        }
        if self.global_fraction < 1.0 && self.num_ads > 0 && s.num_poas == 0 {
            return bad("local ads need at least one PoA".into());
        }
        let selection = self.selection()?;
        let mut warnings: Vec<String> = selection.check().into_iter().collect();
        if self.use_sparse {
            warnings.extend(self.sparse()?.check_against(self.d_max));
        }
        Ok(warnings)
    }

    pub fn selection(&self) -> Result<SelectionParams> {
        SelectionParams::new(self.k, self.m, self.d_max, self.metric)
    }

    pub fn sparse(&self) -> Result<SparseApproxParams> {
        SparseApproxParams::new(self.epsilon, self.m, self.metric)
    }

    pub fn relevance(&self) -> Relevance {
        Relevance { metric: self.metric, d_max: self.d_max }
    }

    pub fn display(&self) -> DisplayParams {
        DisplayParams { m: self.m, cache_capacity: self.cache_capacity, relevance: self.relevance() }
    }

    pub fn synthetic_trace(&self) -> SyntheticTrace {
        SyntheticTrace {
            area_m: self.scenario.area_m,
            num_vehicles: self.scenario.num_vehicles,
            steps: self.steps,
            speed_mps: self.scenario.speed_mps,
            step_duration_s: self.scenario.step_duration_s,
        }
    }
}
