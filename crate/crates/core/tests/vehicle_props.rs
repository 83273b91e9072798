use std::collections::HashSet;

use proptest::prelude::*;

use volfied_core::vehicle::{DisplayParams, VehicleState};
use volfied_core::{Ad, AdId, AdScope, DistanceMetric, FeatureVector, PoAId, Relevance, VehicleId, VehicleProfile};

/// One step of a broadcast log: received ad indices and the covering PoA.
type Step = (Vec<usize>, Option<u32>);

fn ads() -> Vec<Ad> {
    (0..16)
        .map(|i| {
            let scope = if i % 4 == 0 { AdScope::Local(PoAId(i % 3)) } else { AdScope::Global };
            let x = f64::from(i) / 40.0;
            Ad::new(AdId(i), FeatureVector::new(vec![x]).unwrap(), 0.5, scope).unwrap()
        })
        .collect()
}

fn log_strategy() -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec((prop::collection::vec(0usize..16, 0..6), prop::option::of(0u32..3)), 1..30)
}

fn replay(log: &[Step], m: usize, cache: usize) -> (usize, VehicleState, Vec<Vec<AdId>>) {
    let catalog = ads();
    let profile = VehicleProfile { id: VehicleId(0), interests: FeatureVector::new(vec![0.2]).unwrap() };
    let mut v = VehicleState::new(profile, (0.0, 0.0));
    let params = DisplayParams { m, cache_capacity: cache, relevance: Relevance::new(DistanceMetric::Euclidean, 0.2).unwrap() };
    let mut total = 0;
    let mut shown = Vec::new();
    for (received, poa) in log {
        let received: Vec<&Ad> = if poa.is_some() { received.iter().map(|&i| &catalog[i]).collect() } else { Vec::new() };
        let imps = v.step_display(&received, poa.map(PoAId), &params);
        total += imps.len();
        shown.push(imps.iter().map(|i| i.ad).collect());
    }
    (total, v, shown)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn display_rules_hold(log in log_strategy(), m in 1usize..3, cache in 0usize..4) {
        let catalog = ads();
        let profile = VehicleProfile { id: VehicleId(0), interests: FeatureVector::new(vec![0.2]).unwrap() };
        let mut v = VehicleState::new(profile, (0.0, 0.0));
        let params = DisplayParams { m, cache_capacity: cache, relevance: Relevance::new(DistanceMetric::Euclidean, 0.2).unwrap() };
        let mut ever = HashSet::new();
        for (received, poa) in &log {
            let received: Vec<&Ad> = received.iter().map(|&i| &catalog[i]).collect();
            let here = poa.map(PoAId);
            let before = v.displayed_count();
            let imps = v.step_display(&received, here, &params);
            prop_assert!(imps.len() <= m);
            for i in &imps {
                prop_assert!(ever.insert(i.ad), "ad {} shown twice", i.ad);
                prop_assert!(i.distance <= 0.2);
            }
            prop_assert_eq!(v.displayed_count(), before + imps.len());
            prop_assert!(v.cache().len() <= cache);
            prop_assert!(v.cache().windows(2).all(|w| (w[0].distance, w[0].id) <= (w[1].distance, w[1].id)));
            for c in v.cache() {
                prop_assert!(!v.has_displayed(c.id));
                prop_assert!(c.scope.admits(here));
            }
        }
    }

    #[test]
    fn larger_caches_never_lose_impressions_when_ads_arrive_once(log in log_strategy(), m in 1usize..3, cache in 1usize..5) {
        let mut seen = HashSet::new();
        let log: Vec<Step> = log.into_iter().map(|(r, p)| (r.into_iter().filter(|i| seen.insert(*i)).collect(), p)).collect();
        let (without, _, _) = replay(&log, m, 0);
        let (with, _, _) = replay(&log, m, cache);
        prop_assert!(with >= without, "C=0 gives {}, C={} gives {}", without, cache, with);
    }
}

#[test]
fn conflict_free_input_is_fully_displayed_without_cache() {
    // One relevant ad per step never conflicts at m = 1. Ad 4 is local to
    // PoA 1 and the vehicle is under PoA 1 there.
    let (total, v, shown) = replay(&[(vec![9], Some(1)), (vec![4], Some(1)), (vec![10], None)], 1, 0);
    assert_eq!(shown, vec![vec![AdId(9)], vec![AdId(4)], vec![]]);
    assert_eq!(total, 2);
    assert!(v.cache().is_empty());
}


#[test]
fn a_cache_can_lose_an_impression_when_an_ad_is_received_twice() {
    // Without a cache ad 6 is dropped at the first step and shown when it
    // comes again. With one slot it is shown early from the cache, later
    // arrivals queue up behind it and ad 1 is evicted by the closer ad 14.
    let log: Vec<Step> = vec![
        (vec![10, 6], Some(0)),
        (vec![15], Some(0)),
        (vec![1], Some(0)),
        (vec![14, 7], Some(0)),
        (vec![2], Some(0)),
        (vec![14], Some(0)),
        (vec![6], Some(0)),
    ];
    let (without, _, _) = replay(&log, 1, 0);
    let (with, _, shown) = replay(&log, 1, 1);
    assert_eq!((without, with), (7, 6));
    assert!(!shown.iter().flatten().any(|&a| a == AdId(1)));
}
