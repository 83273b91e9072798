//! On-board behaviour: what a vehicle displays out of the ads it receives,
//! what it keeps in its cache, and the display-once bookkeeping.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::model::{Ad, AdId, AdScope, PoAId, Relevance, VehicleProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayParams {
    /// Ads displayed per step at most.
    pub m: usize,
    /// Cache capacity C.
    pub cache_capacity: usize,
    pub relevance: Relevance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedAd {
    pub id: AdId,
    pub distance: f64,
    pub scope: AdScope,
    pub value: f64,
}

/// One displayed ad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impression {
    pub ad: AdId,
    pub distance: f64,
    pub value: f64,
}

/// Ascending distance, ties by ascending id.
pub(crate) fn by_relevance(a: (f64, AdId), b: (f64, AdId)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone)]
pub struct VehicleState {
    pub profile: VehicleProfile,
    pub position: (f64, f64),
    displayed: HashSet<AdId>,
    cache: Vec<CachedAd>,
}

impl VehicleState {
    pub fn new(profile: VehicleProfile, position: (f64, f64)) -> Self {
        VehicleState { profile, position, displayed: HashSet::new(), cache: Vec::new() }
    }

    pub fn has_displayed(&self, ad: AdId) -> bool {
        self.displayed.contains(&ad)
    }

    pub fn displayed_count(&self) -> usize {
        self.displayed.len()
    }

    /// Cache content, most relevant first.
    pub fn cache(&self) -> &[CachedAd] {
        &self.cache
    }

    /// Runs one step: pools the cache with the relevant, never-displayed
    /// received ads, displays the `m` closest, caches the next
    /// `cache_capacity` and drops the rest. Cached ads that are no longer
    /// admissible where the vehicle is now are dropped first.
    pub fn step_display(&mut self, received: &[&Ad], current_poa: Option<PoAId>, params: &DisplayParams) -> Vec<Impression> {
        let mut pool: Vec<CachedAd> = std::mem::take(&mut self.cache);
        pool.retain(|c| c.scope.admits(current_poa) && !self.displayed.contains(&c.id));
        for ad in received {
            if self.displayed.contains(&ad.id) || pool.iter().any(|c| c.id == ad.id) {
                continue;
            }
            if let Some(distance) = params.relevance.relevant_distance(ad, &self.profile, current_poa) {
                pool.push(CachedAd { id: ad.id, distance, scope: ad.scope, value: ad.base_value });
            }
        }
        pool.sort_by(|a, b| by_relevance((a.distance, a.id), (b.distance, b.id)));

        let shown = params.m.min(pool.len());
        let impressions: Vec<Impression> = pool[..shown]
            .iter()
            .map(|c| Impression { ad: c.id, distance: c.distance, value: c.value })
            .collect();
        self.displayed.extend(impressions.iter().map(|i| i.ad));
        pool.drain(..shown);
        pool.truncate(params.cache_capacity);
        self.cache = pool;
        impressions
    }
}
