use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{Ad, AdId, AdScope, FeatureVector, PoA, PoAId, VehicleId, VehicleProfile};
use crate::rng::{stream, Stream};
use crate::sim::config::{PoaLayout, ScenarioConfig, SimConfig};

pub const PROFILE_MEAN: f64 = 0.5;
pub const PROFILE_STD: f64 = 0.15;

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// Ad catalog: features and values uniform on (0, 1). Exactly
/// `round((1 - global_fraction) * num_ads)` ads, chosen at random, are local
/// to a uniformly drawn PoA.
pub fn gen_ads(config: &SimConfig, poas: &[PoA], seed: u64) -> Result<Vec<Ad>> {
    if config.n == 0 {
        return Err(Error::InvalidInput("dimension n must be at least 1".into()));
    }
    let mut rng = stream(seed, Stream::Ads);
    let num_local = ((1.0 - config.global_fraction) * config.num_ads as f64).round() as usize;
    if num_local > 0 && poas.is_empty() {
        return Err(Error::InvalidInput("local ads need at least one PoA".into()));
    }
    let mut local = vec![false; config.num_ads];
    for i in rand::seq::index::sample(&mut rng, config.num_ads, num_local.min(config.num_ads)) {
        local[i] = true;
    }
    (0..config.num_ads)
        .map(|i| {
            let coords: Vec<f64> = (0..config.n).map(|_| open_unit(&mut rng)).collect();
            let value = open_unit(&mut rng);
            let scope = if local[i] {
                AdScope::Local(poas[rng.random_range(0..poas.len())].id)
            } else {
                AdScope::Global
            };
            Ad::new(AdId(i as u32), FeatureVector::new(coords)?, value, scope)
        })
        .collect()
}

/// Interest profiles with coordinates drawn from N(0.5, 0.15) and clamped
/// to [0, 1]. All-zero vectors are redrawn so the angular metric stays
/// defined.
pub fn gen_profiles(n: usize, num_vehicles: usize, seed: u64) -> Result<Vec<VehicleProfile>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension n must be at least 1".into()));
    }
    let mut rng = stream(seed, Stream::Profiles);
    let normal = Normal::new(PROFILE_MEAN, PROFILE_STD).expect("valid normal parameters");
    (0..num_vehicles)
        .map(|i| {
            let coords = loop {
                let c: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng).clamp(0.0, 1.0)).collect();
                if c.iter().any(|&x| x > 0.0) {
                    break c;
                }
            };
            Ok(VehicleProfile { id: VehicleId(i as u32), interests: FeatureVector::new(coords)? })
        })
        .collect()
}

pub fn gen_poas(scenario: &ScenarioConfig, seed: u64) -> Result<Vec<PoA>> {
    let (w, h) = scenario.area_m;
    let count = scenario.num_poas;
    let positions: Vec<(f64, f64)> = match scenario.poa_layout {
        PoaLayout::Grid => {
            if count == 0 {
                Vec::new()
            } else {
                let cols = ((count as f64 * w / h).sqrt().ceil() as usize).clamp(1, count);
                let rows = count.div_ceil(cols);
                (0..count)
                    .map(|i| {
                        let (r, c) = (i / cols, i % cols);
                        ((c as f64 + 0.5) * w / cols as f64, (r as f64 + 0.5) * h / rows as f64)
                    })
                    .collect()
            }
        }
        PoaLayout::Uniform => {
            let mut rng = stream(seed, Stream::Poas);
            (0..count).map(|_| (rng.random_range(0.0..=w), rng.random_range(0.0..=h))).collect()
        }
    };
    positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| PoA::new(PoAId(i as u32), p, scenario.poa_range_m))
        .collect()
}

/// Ads and vehicle profiles for a scenario.
pub fn gen_population(config: &SimConfig, poas: &[PoA], seed: u64) -> Result<(Vec<Ad>, Vec<VehicleProfile>)> {
    Ok((gen_ads(config, poas, seed)?, gen_profiles(config.n, config.scenario.num_vehicles, seed)?))
}
