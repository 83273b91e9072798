mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use volfied_core::sim::{gen_ads, gen_poas, ScenarioConfig, SimConfig};
use volfied_core::{ad_value, AdScope, DistanceMetric, FeatureVector};

use common::{profile_point, uniform_point};

#[test]
fn triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for metric in [DistanceMetric::Euclidean, DistanceMetric::Angular] {
        for i in 0..10_000 {
            let n = 1 + i % 6;
            // Mix the two generator distributions; all coordinates are non-negative.
            let p: Vec<Vec<f64>> =
                (0..3).map(|j| if (i + j) % 2 == 0 { uniform_point(&mut rng, n) } else { profile_point(&mut rng, n) }).collect();
            let d = |a: &[f64], b: &[f64]| metric.eval(a, b);
            assert!(d(&p[0], &p[2]) <= d(&p[0], &p[1]) + d(&p[1], &p[2]) + 1e-9, "{metric} {p:?}");
        }
    }
}

#[test]
fn symmetry_and_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for metric in [DistanceMetric::Euclidean, DistanceMetric::Angular] {
        for _ in 0..2_000 {
            let n = rng.random_range(1..=8);
            let a = FeatureVector::new(uniform_point(&mut rng, n)).unwrap();
            let b = FeatureVector::new(uniform_point(&mut rng, n)).unwrap();
            assert_eq!(metric.distance(&a, &b).unwrap(), metric.distance(&b, &a).unwrap());
            assert!(metric.distance(&a, &a).unwrap() <= 1e-12);
        }
    }
}

#[test]
fn local_ads_are_worthless_elsewhere() {
    let config = SimConfig { num_ads: 2_000, global_fraction: 0.5, ..SimConfig::default() };
    let poas = gen_poas(&ScenarioConfig::default(), 0).unwrap();
    let ads = gen_ads(&config, &poas, 12).unwrap();
    for ad in &ads {
        for poa in &poas {
            let v = ad_value(ad, poa.id);
            match ad.scope {
                AdScope::Local(target) if target != poa.id => assert_eq!(v, 0.0),
                _ => assert_eq!(v, ad.base_value),
            }
        }
    }
}
