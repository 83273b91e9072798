//! Revenue estimation and the per-PoA selection strategies.
//!
//! The estimator keeps, for every (PoA, ad) pair, the set of detected
//! vehicles currently under the PoA that find the ad relevant and have not
//! been sent it yet. The estimate `R(a, u)` is the ad's value at `u` times
//! the size of that set, so entering, leaving and broadcasting are exact
//! set operations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ad, AdId, DistanceMetric, PoAId, Relevance, VehicleId, VehicleProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Broadcast budget per PoA and step.
    pub k: usize,
    /// Display budget per vehicle and step.
    pub m: usize,
    pub d_max: f64,
    pub metric: DistanceMetric,
}

impl SelectionParams {
    pub fn new(k: usize, m: usize, d_max: f64, metric: DistanceMetric) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("k and m must be at least 1, got k={k}, m={m}")));
        }
        Relevance::new(metric, d_max)?;
        Ok(SelectionParams { k, m, d_max, metric })
    }

    pub fn relevance(&self) -> Relevance {
        Relevance { metric: self.metric, d_max: self.d_max }
    }

    /// Broadcasting fewer ads than vehicles can display never conflicts;
    /// returns a warning for that unusual configuration.
    pub fn check(&self) -> Option<String> {
        (self.k < self.m).then(|| format!("k = {} is below m = {}", self.k, self.m))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Presence {
    /// Ads this vehicle currently contributes to.
    credited: BTreeSet<AdId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct PoaEstimates {
    /// Ads with at least one contributor, and who contributes.
    contributors: BTreeMap<AdId, (f64, BTreeSet<VehicleId>)>,
    /// Detected vehicles currently under this PoA.
    present: BTreeMap<VehicleId, Presence>,
}

/// Work done by the estimator, for complexity checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimatorCounters {
    pub events: u64,
    /// Ads whose estimate changed, summed over events.
    pub ads_updated: u64,
    /// Largest number of ads updated by a single enter or exit event.
    pub max_ads_per_event: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueEstimator {
    relevance: Relevance,
    poas: HashMap<PoAId, PoaEstimates>,
    /// (ad, vehicle) pairs already broadcast while the vehicle was detected.
    registry: HashSet<(AdId, VehicleId)>,
    counters: EstimatorCounters,
}

impl RevenueEstimator {
    pub fn new(relevance: Relevance) -> Self {
        RevenueEstimator { relevance, poas: HashMap::new(), registry: HashSet::new(), counters: EstimatorCounters::default() }
    }

    pub fn relevance(&self) -> Relevance {
        self.relevance
    }

    /// Current estimate `R(ad, poa)`.
    pub fn estimate(&self, poa: PoAId, ad: AdId) -> f64 {
        self.poas
            .get(&poa)
            .and_then(|p| p.contributors.get(&ad))
            .map_or(0.0, |(value, vs)| value * vs.len() as f64)
    }

    pub fn contributors(&self, poa: PoAId, ad: AdId) -> impl Iterator<Item = VehicleId> + '_ {
        self.poas.get(&poa).and_then(|p| p.contributors.get(&ad)).into_iter().flat_map(|(_, vs)| vs.iter().copied())
    }

    /// Detected vehicles currently registered under `poa`.
    pub fn present(&self, poa: PoAId) -> impl Iterator<Item = VehicleId> + '_ {
        self.poas.get(&poa).into_iter().flat_map(|p| p.present.keys().copied())
    }

    pub fn is_registered(&self, ad: AdId, vehicle: VehicleId) -> bool {
        self.registry.contains(&(ad, vehicle))
    }

    pub fn registry_len(&self) -> usize {
        self.registry.len()
    }

    pub fn counters(&self) -> EstimatorCounters {
        self.counters
    }

    /// Ads with a positive estimate at `poa`, highest first, ties by id.
    pub fn ranked(&self, poa: PoAId) -> Vec<(AdId, f64)> {
        let mut out: Vec<(AdId, f64)> = self
            .poas
            .get(&poa)
            .into_iter()
            .flat_map(|p| p.contributors.iter())
            .map(|(&id, (value, vs))| (id, value * vs.len() as f64))
            .filter(|&(_, r)| r > 0.0)
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// A vehicle starts being covered by `poa`. Undetected vehicles are
    /// invisible to the broker and change nothing.
    pub fn on_vehicle_enter<'a>(
        &mut self,
        poa: PoAId,
        vehicle: &VehicleProfile,
        detected: bool,
        candidates: impl IntoIterator<Item = &'a Ad>,
    ) {
        if !detected {
            return;
        }
        let relevance = self.relevance;
        let registry = &self.registry;
        let estimates = self.poas.entry(poa).or_default();
        if estimates.present.contains_key(&vehicle.id) {
            return;
        }
        let mut presence = Presence::default();
        for ad in candidates {
            let value = ad.value_at(poa);
            if value <= 0.0 || registry.contains(&(ad.id, vehicle.id)) || !relevance.within(ad, vehicle) {
                continue;
            }
            let entry = estimates.contributors.entry(ad.id).or_insert_with(|| (value, BTreeSet::new()));
            entry.1.insert(vehicle.id);
            presence.credited.insert(ad.id);
        }
        let touched = presence.credited.len() as u64;
        estimates.present.insert(vehicle.id, presence);
        self.count_event(touched);
    }

    /// A vehicle leaves `poa`. No-op for vehicles the broker never saw.
    pub fn on_vehicle_exit(&mut self, poa: PoAId, vehicle: VehicleId) {
        let Some(estimates) = self.poas.get_mut(&poa) else { return };
        let Some(presence) = estimates.present.remove(&vehicle) else { return };
        for ad in &presence.credited {
            uncredit(&mut estimates.contributors, *ad, vehicle);
        }
        self.count_event(presence.credited.len() as u64);
    }

    /// Records that `selected` went out from `poa`: every detected vehicle
    /// present there is marked as served and stops contributing to those
    /// ads at every PoA.
    pub fn on_broadcast(&mut self, poa: PoAId, selected: &[AdId]) {
        let Some(here) = self.poas.get(&poa) else { return };
        let served: Vec<VehicleId> = here.present.keys().copied().collect();
        for &ad in selected {
            for &v in &served {
                self.registry.insert((ad, v));
            }
        }
        for estimates in self.poas.values_mut() {
            for &v in &served {
                let Some(presence) = estimates.present.get_mut(&v) else { continue };
                for &ad in selected {
                    if presence.credited.remove(&ad) {
                        uncredit(&mut estimates.contributors, ad, v);
                    }
                }
            }
        }
    }

    /// Rebuilds every estimate from the present vehicles and the registry.
    /// Test helper for checking the incremental bookkeeping.
    pub fn recompute<'a, F, I>(&self, profiles: &HashMap<VehicleId, &VehicleProfile>, candidates: F) -> BTreeMap<(PoAId, AdId), f64>
    where
        F: Fn(PoAId) -> I,
        I: IntoIterator<Item = &'a Ad>,
    {
        let mut out = BTreeMap::new();
        for (&poa, estimates) in &self.poas {
            let ads: Vec<&Ad> = candidates(poa).into_iter().collect();
            for vid in estimates.present.keys() {
                let profile = profiles[vid];
                for ad in &ads {
                    let value = ad.value_at(poa);
                    if value > 0.0 && !self.registry.contains(&(ad.id, *vid)) && self.relevance.within(ad, profile) {
                        *out.entry((poa, ad.id)).or_insert(0.0) += value;
                    }
                }
            }
        }
        out
    }

    /// All positive estimates, keyed by (PoA, ad).
    pub fn snapshot(&self) -> BTreeMap<(PoAId, AdId), f64> {
        let mut out = BTreeMap::new();
        for (&poa, estimates) in &self.poas {
            for (&ad, (value, vs)) in &estimates.contributors {
                out.insert((poa, ad), value * vs.len() as f64);
            }
        }
        out
    }

    fn count_event(&mut self, touched: u64) {
        self.counters.events += 1;
        self.counters.ads_updated += touched;
        self.counters.max_ads_per_event = self.counters.max_ads_per_event.max(touched);
    }
}

fn uncredit(contributors: &mut BTreeMap<AdId, (f64, BTreeSet<VehicleId>)>, ad: AdId, vehicle: VehicleId) {
    if let Some((_, vs)) = contributors.get_mut(&ad) {
        vs.remove(&vehicle);
        if vs.is_empty() {
            contributors.remove(&ad);
        }
    }
}

/// A candidate with its estimated revenue, as fed to the strategies.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub ad: &'a Ad,
    pub revenue: f64,
}

/// Looks up the ranked estimates of `poa` in a catalog lookup. Estimates
/// for ads the lookup does not know are skipped.
pub fn scored<'a>(est: &RevenueEstimator, poa: PoAId, lookup: impl Fn(AdId) -> Option<&'a Ad>) -> Vec<Scored<'a>> {
    est.ranked(poa)
        .into_iter()
        .filter_map(|(id, revenue)| lookup(id).map(|ad| Scored { ad, revenue }))
        .collect()
}

fn sort_ranked(list: &mut [Scored<'_>]) {
    list.sort_by(|a, b| b.revenue.total_cmp(&a.revenue).then(a.ad.id.cmp(&b.ad.id)));
}

/// Counts distance evaluations made by a selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistanceCounter(pub u64);

/// Conflict-free greedy selection: walk ads by decreasing estimate and
/// admit one only while fewer than `m` already admitted ads lie within
/// `2·d_max` of it. Stops after `k` admissions. Ads with a zero estimate
/// are never admitted.
pub fn select_volfied(candidates: &[Scored<'_>], params: &SelectionParams, counter: &mut DistanceCounter) -> Vec<AdId> {
    let mut ranked: Vec<Scored<'_>> = candidates.iter().copied().filter(|c| c.revenue > 0.0).collect();
    sort_ranked(&mut ranked);
    let reach = 2.0 * params.d_max;
    let mut chosen: Vec<&Ad> = Vec::with_capacity(params.k);
    for c in ranked {
        if chosen.len() >= params.k {
            break;
        }
        let mut close = 0;
        for b in &chosen {
            counter.0 += 1;
            if params.metric.eval(c.ad.features.coords(), b.features.coords()) <= reach {
                close += 1;
                if close >= params.m {
                    break;
                }
            }
        }
        if close < params.m {
            chosen.push(c.ad);
        }
    }
    chosen.into_iter().map(|a| a.id).collect()
}

/// The `k` ads with the highest positive estimate.
pub fn select_topk(candidates: &[Scored<'_>], params: &SelectionParams) -> Vec<AdId> {
    let mut ranked: Vec<Scored<'_>> = candidates.iter().copied().filter(|c| c.revenue > 0.0).collect();
    sort_ranked(&mut ranked);
    ranked.into_iter().take(params.k).map(|c| c.ad.id).collect()
}

/// Up to `k` ads drawn uniformly without replacement among those with a
/// positive estimate. Returned in ranked order.
pub fn select_random(candidates: &[Scored<'_>], params: &SelectionParams, rng: &mut impl Rng) -> Vec<AdId> {
    let mut ranked: Vec<Scored<'_>> = candidates.iter().copied().filter(|c| c.revenue > 0.0).collect();
    sort_ranked(&mut ranked);
    let amount = params.k.min(ranked.len());
    let mut picks = rand::seq::index::sample(rng, ranked.len(), amount).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| ranked[i].ad.id).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Volfied,
    Topk,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Volfied, Strategy::Topk, Strategy::Random];

    pub fn select(
        self,
        candidates: &[Scored<'_>],
        params: &SelectionParams,
        rng: &mut impl Rng,
        counter: &mut DistanceCounter,
    ) -> Vec<AdId> {
        match self {
            Strategy::Volfied => select_volfied(candidates, params, counter),
            Strategy::Topk => select_topk(candidates, params),
            Strategy::Random => select_random(candidates, params, rng),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Volfied => "volfied",
            Strategy::Topk => "topk",
            Strategy::Random => "random",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "volfied" => Ok(Strategy::Volfied),
            "topk" | "top-k" => Ok(Strategy::Topk),
            "random" => Ok(Strategy::Random),
            other => Err(Error::InvalidInput(format!("unknown strategy `{other}` (expected volfied, topk or random)"))),
        }
    }
}

/// Whether no vehicle finds more than `m` ads of `selected` relevant.
pub fn is_conflict_free(selected: &[Ad], vehicles: &[VehicleProfile], params: &SelectionParams) -> bool {
    let rel = params.relevance();
    vehicles.iter().all(|v| selected.iter().filter(|a| rel.within(a, v)).count() <= params.m)
}

/// Structural form of conflict freedom that holds for every point of the
/// space: in the given order, each ad has fewer than `m` predecessors within
/// `2·d_max`.
pub fn is_structurally_conflict_free(selected: &[Ad], params: &SelectionParams) -> bool {
    let reach = 2.0 * params.d_max;
    selected.iter().enumerate().all(|(i, a)| {
        selected[..i]
            .iter()
            .filter(|b| params.metric.eval(a.features.coords(), b.features.coords()) <= reach)
            .count()
            < params.m
    })
}
