//! Exact single-step revenue maximisation by enumeration.
//!
//! Each vehicle is covered by at most one PoA and its display history is
//! fixed within the step, so the problem splits into independent per-PoA
//! subproblems. For each PoA every broadcast set of at most `k` candidates
//! is priced by replaying the vehicles' display rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::broker::SelectionParams;
use crate::error::{Error, Result};
use crate::model::{Ad, AdId, PoAId, VehicleId, VehicleProfile};
use crate::vehicle::by_relevance;

/// Enumeration budget per PoA.
pub const MAX_CANDIDATES: usize = 15;
pub const MAX_BUDGET: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVehicle {
    #[serde(flatten)]
    pub profile: VehicleProfile,
    /// Ads this vehicle displayed in earlier steps.
    #[serde(default)]
    pub displayed: BTreeSet<AdId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub vehicle: VehicleId,
    pub poa: PoAId,
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub params: SelectionParams,
    pub ads: Vec<Ad>,
    pub vehicles: Vec<OracleVehicle>,
    pub coverage: Vec<Coverage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    params: SelectionParams,
    ads: Vec<Ad>,
    vehicles: Vec<OracleVehicle>,
    /// Covering PoA of each vehicle, parallel to `vehicles`.
    association: Vec<Option<PoAId>>,
    poas: BTreeSet<PoAId>,
}

impl OracleInstance {
    pub fn new(params: SelectionParams, ads: Vec<Ad>, vehicles: Vec<OracleVehicle>, coverage: &[Coverage]) -> Result<Self> {
        let mut seen_ads = BTreeSet::new();
        if let Some(a) = ads.iter().find(|a| !seen_ads.insert(a.id)) {
            return Err(Error::InvalidInput(format!("duplicate ad id {}", a.id)));
        }
        let dims: BTreeSet<usize> = ads
            .iter()
            .map(|a| a.features.dim())
            .chain(vehicles.iter().map(|v| v.profile.interests.dim()))
            .collect();
        if dims.len() > 1 {
            let mut it = dims.into_iter();
            return Err(Error::DimensionMismatch { expected: it.next().unwrap(), found: it.next().unwrap() });
        }
        let index: HashMap<VehicleId, usize> = vehicles.iter().enumerate().map(|(i, v)| (v.profile.id, i)).collect();
        if index.len() != vehicles.len() {
            return Err(Error::InvalidInput("duplicate vehicle id".into()));
        }
        let mut association = vec![None; vehicles.len()];
        let mut poas = BTreeSet::new();
        for c in coverage {
            let &i = index
                .get(&c.vehicle)
                .ok_or_else(|| Error::InvalidInput(format!("coverage names unknown vehicle {}", c.vehicle)))?;
            if association[i].replace(c.poa).is_some() {
                return Err(Error::InvalidInput(format!("vehicle {} is covered by more than one PoA", c.vehicle)));
            }
            poas.insert(c.poa);
        }
        Ok(OracleInstance { params, ads, vehicles, association, poas })
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        OracleInstance::new(file.params, file.ads, file.vehicles, &file.coverage)
    }

    pub fn params(&self) -> &SelectionParams {
        &self.params
    }

    pub fn ads(&self) -> &[Ad] {
        &self.ads
    }

    pub fn vehicles(&self) -> &[OracleVehicle] {
        &self.vehicles
    }

    /// PoAs covering at least one vehicle.
    pub fn poas(&self) -> impl Iterator<Item = PoAId> + '_ {
        self.poas.iter().copied()
    }

    pub fn association(&self, vehicle: usize) -> Option<PoAId> {
        self.association[vehicle]
    }

    /// Ads worth something at `poa`, by ascending id.
    pub fn candidates(&self, poa: PoAId) -> Vec<&Ad> {
        let mut c: Vec<&Ad> = self.ads.iter().filter(|a| a.value_at(poa) > 0.0).collect();
        c.sort_by_key(|a| a.id);
        c
    }

    fn vehicles_at(&self, poa: PoAId) -> impl Iterator<Item = &OracleVehicle> {
        self.vehicles.iter().zip(&self.association).filter(move |(_, a)| **a == Some(poa)).map(|(v, _)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayOutcome {
    /// Ads each vehicle displays, most relevant first, with their distance.
    pub displays: BTreeMap<VehicleId, Vec<(AdId, f64)>>,
    pub impressions: usize,
    pub revenue: f64,
}

/// Prices a broadcast decision: each covered vehicle displays the `m` most
/// relevant received ads it has not displayed before (ties by id).
pub fn simulate_display(broadcast: &BTreeMap<PoAId, Vec<AdId>>, instance: &OracleInstance) -> Result<DisplayOutcome> {
    let p = &instance.params;
    let by_id: HashMap<AdId, &Ad> = instance.ads.iter().map(|a| (a.id, a)).collect();
    for (poa, set) in broadcast {
        if set.len() > p.k {
            return Err(Error::InvalidInput(format!("PoA {poa} broadcasts {} ads, more than k = {}", set.len(), p.k)));
        }
        if let Some(id) = set.iter().find(|id| !by_id.contains_key(id)) {
            return Err(Error::InvalidInput(format!("PoA {poa} broadcasts unknown ad {id}")));
        }
    }
    let rel = p.relevance();
    let mut out = DisplayOutcome { displays: BTreeMap::new(), impressions: 0, revenue: 0.0 };
    for (i, v) in instance.vehicles.iter().enumerate() {
        let Some(poa) = instance.association[i] else { continue };
        let Some(set) = broadcast.get(&poa) else { continue };
        let mut pool: Vec<(f64, AdId)> = set
            .iter()
            .filter(|id| !v.displayed.contains(id))
            .filter_map(|id| rel.relevant_distance(by_id[id], &v.profile, Some(poa)).map(|d| (d, *id)))
            .collect();
        pool.sort_by(|a, b| by_relevance(*a, *b));
        pool.dedup_by_key(|x| x.1);
        pool.truncate(p.m);
        for &(_, id) in &pool {
            out.revenue += by_id[&id].value_at(poa);
        }
        out.impressions += pool.len();
        if !pool.is_empty() {
            out.displays.insert(v.profile.id, pool.into_iter().map(|(d, id)| (id, d)).collect());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaOptimum {
    pub broadcast: Vec<AdId>,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub per_poa: BTreeMap<PoAId, PoaOptimum>,
    pub revenue: f64,
}

impl OracleSolution {
    pub fn broadcast(&self) -> BTreeMap<PoAId, Vec<AdId>> {
        self.per_poa.iter().map(|(&p, o)| (p, o.broadcast.clone())).collect()
    }
}

/// Optimal broadcast sets for one step. Among equally good sets of a PoA
/// the lexicographically smallest id list wins.
pub fn solve_exact(instance: &OracleInstance) -> Result<OracleSolution> {
    let p = &instance.params;
    let rel = p.relevance();
    let mut per_poa = BTreeMap::new();
    for poa in instance.poas() {
        let cands = instance.candidates(poa);
        if cands.len() > MAX_CANDIDATES {
            return Err(Error::TooLarge { what: "candidate ads per PoA", size: cands.len(), limit: MAX_CANDIDATES });
        }
        if p.k > MAX_BUDGET {
            return Err(Error::TooLarge { what: "broadcast budget k", size: p.k, limit: MAX_BUDGET });
        }
        // Per vehicle: candidate bit and value, most relevant first.
        let prefs: Vec<Vec<(u32, f64)>> = instance
            .vehicles_at(poa)
            .map(|v| {
                let mut l: Vec<(f64, AdId, u32, f64)> = cands
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| !v.displayed.contains(&a.id))
                    .filter_map(|(bit, a)| {
                        rel.relevant_distance(a, &v.profile, Some(poa)).map(|d| (d, a.id, 1u32 << bit, a.value_at(poa)))
                    })
                    .collect();
                l.sort_by(|a, b| by_relevance((a.0, a.1), (b.0, b.1)));
                l.into_iter().map(|(_, _, bit, value)| (bit, value)).collect()
            })
            .collect();

        let price = |mask: u32| -> f64 {
            prefs
                .iter()
                .map(|l| l.iter().filter(|(bit, _)| mask & bit != 0).take(p.m).map(|(_, v)| v).sum::<f64>())
                .sum()
        };

        let mut best: (f64, Vec<usize>) = (price(0), Vec::new());
        let mut combo = Vec::with_capacity(p.k);
        for size in 1..=p.k.min(cands.len()) {
            for_each_combination(cands.len(), size, &mut combo, &mut |idx| {
                let mask = idx.iter().fold(0u32, |m, &i| m | 1 << i);
                let revenue = price(mask);
                if revenue > best.0 || (revenue == best.0 && idx < best.1.as_slice()) {
                    best = (revenue, idx.to_vec());
                }
            });
        }
        per_poa.insert(poa, PoaOptimum { broadcast: best.1.iter().map(|&i| cands[i].id).collect(), revenue: best.0 });
    }
    let mut solution = OracleSolution { per_poa, revenue: 0.0 };
    // Priced by the display replay so the total matches `simulate_display`
    // bit for bit.
    solution.revenue = simulate_display(&solution.broadcast(), instance)?.revenue;
    Ok(solution)
}

/// Calls `f` with every increasing index list of length `size` from `0..n`.
fn for_each_combination(n: usize, size: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if buf.len() == size {
        f(buf);
        return;
    }
    let start = buf.last().map_or(0, |&l| l + 1);
    let remaining = size - buf.len();
    for i in start..=n.saturating_sub(remaining) {
        buf.push(i);
        for_each_combination(n, size, buf, f);
        buf.pop();
    }
}
