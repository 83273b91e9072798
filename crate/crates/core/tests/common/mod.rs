//! Random single-step instances shared by the integration tests.
#![allow(dead_code)]

use std::ops::RangeInclusive;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use volfied_core::broker::{scored, RevenueEstimator, Scored, SelectionParams};
use volfied_core::oracle::{Coverage, OracleInstance, OracleVehicle};
use volfied_core::{Ad, AdCatalog, AdId, AdScope, DistanceMetric, FeatureVector, PoAId, VehicleId, VehicleProfile};

pub const POA: PoAId = PoAId(0);

pub fn uniform_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
}

/// Profile coordinates as the generators draw them: N(0.5, 0.15) clamped.
pub fn profile_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.5, 0.15).unwrap();
    loop {
        let c: Vec<f64> = (0..n).map(|_| f64::clamp(normal.sample(rng), 0.0, 1.0)).collect();
        if c.iter().any(|&x| x > 0.0) {
            return c;
        }
    }
}

/// Between `count.start()` and `count.end()` ads, features and values uniform.
pub fn random_ads(rng: &mut ChaCha8Rng, count: RangeInclusive<usize>, n: usize) -> Vec<Ad> {
    let count = rng.random_range(count);
    (0..count)
        .map(|i| {
            let value = rng.random_range(0.01..1.0);
            Ad::new(AdId(i as u32), FeatureVector::new(uniform_point(rng, n)).unwrap(), value, AdScope::Global).unwrap()
        })
        .collect()
}

pub fn random_vehicles(rng: &mut ChaCha8Rng, count: RangeInclusive<usize>, n: usize) -> Vec<VehicleProfile> {
    let count = rng.random_range(count);
    (0..count)
        .map(|i| VehicleProfile { id: VehicleId(i as u32), interests: FeatureVector::new(profile_point(rng, n)).unwrap() })
        .collect()
}

/// All vehicles under one PoA, all detected, nothing broadcast yet.
pub struct SingleStep {
    pub params: SelectionParams,
    pub catalog: AdCatalog,
    pub vehicles: Vec<VehicleProfile>,
    pub estimator: RevenueEstimator,
}

impl SingleStep {
    pub fn new(params: SelectionParams, ads: Vec<Ad>, vehicles: Vec<VehicleProfile>) -> Self {
        let catalog = AdCatalog::new(ads).unwrap();
        let mut estimator = RevenueEstimator::new(params.relevance());
        for v in &vehicles {
            estimator.on_vehicle_enter(POA, v, true, catalog.ads());
        }
        SingleStep { params, catalog, vehicles, estimator }
    }

    pub fn scored(&self) -> Vec<Scored<'_>> {
        scored(&self.estimator, POA, |id| self.catalog.get(id))
    }

    pub fn oracle(&self) -> OracleInstance {
        let vehicles: Vec<OracleVehicle> =
            self.vehicles.iter().map(|p| OracleVehicle { profile: p.clone(), displayed: Default::default() }).collect();
        let coverage: Vec<Coverage> = self.vehicles.iter().map(|v| Coverage { vehicle: v.id, poa: POA }).collect();
        OracleInstance::new(self.params, self.catalog.ads().to_vec(), vehicles, &coverage).unwrap()
    }

    pub fn estimated(&self, selected: &[AdId]) -> f64 {
        selected.iter().map(|&a| self.estimator.estimate(POA, a)).sum()
    }
}

pub fn metric_of(i: usize) -> DistanceMetric {
    if i % 2 == 0 {
        DistanceMetric::Euclidean
    } else {
        DistanceMetric::Angular
    }
}
