use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::broker::{scored, DistanceCounter, RevenueEstimator, SelectionParams, Strategy};
use crate::error::{Error, Result};
use crate::model::{Ad, AdCatalog, AdId, PoA, PoAId, VehicleId, VehicleProfile};
use crate::rng::{stream, Stream};
use crate::sim::config::SimConfig;
use crate::sim::trace::MobilityTrace;
use crate::sparse::PoaSparseSets;
use crate::vehicle::{DisplayParams, VehicleState};

/// The PoA serving a position: the nearest one whose range covers it, ties
/// to the lowest id.
pub fn coverage(poas: &[PoA], position: (f64, f64)) -> Option<PoAId> {
    poas.iter()
        .map(|p| (p.distance_to(position), p))
        .filter(|(d, p)| *d <= p.range)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(_, p)| p.id)
}

/// Catalog indices a strategy may broadcast at each PoA.
#[derive(Debug, Clone)]
pub struct CandidateLists {
    per_poa: HashMap<PoAId, Arc<[usize]>>,
}

impl CandidateLists {
    /// Every ad valued at the PoA.
    pub fn full(catalog: &AdCatalog, poas: &[PoA]) -> Self {
        let per_poa = poas
            .iter()
            .map(|p| {
                let list: Arc<[usize]> = catalog
                    .ads()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.value_at(p.id) > 0.0)
                    .map(|(i, _)| i)
                    .collect();
                (p.id, list)
            })
            .collect();
        CandidateLists { per_poa }
    }

    pub fn sparse(sets: &PoaSparseSets, poas: &[PoA]) -> Self {
        let per_poa = poas.iter().map(|p| (p.id, Arc::from(sets.candidates(p.id)))).collect();
        CandidateLists { per_poa }
    }

    /// Sparse lists for Volfied when `use_sparse` is set, full lists otherwise.
    pub fn for_config(config: &SimConfig, catalog: &AdCatalog, poas: &[PoA]) -> Result<Self> {
        if config.use_sparse && config.strategy == Strategy::Volfied {
            let ids: Vec<PoAId> = poas.iter().map(|p| p.id).collect();
            let sets = PoaSparseSets::build(catalog, &ids, config.sparse()?);
            Ok(Self::sparse(&sets, poas))
        } else {
            Ok(Self::full(catalog, poas))
        }
    }

    pub fn get(&self, poa: PoAId) -> &[usize] {
        self.per_poa.get(&poa).map_or(&[], |l| l)
    }
}

/// Cumulative metrics after a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub step: usize,
    pub strategy: Strategy,
    pub revenue_cum: f64,
    pub impressions_cum: u64,
    /// Mean feature-space distance over all impressions so far.
    pub avg_distance_cum: f64,
    pub broadcasts_cum: u64,
}

/// What one PoA broadcast in the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct PoaSelection {
    pub poa: PoAId,
    pub selected: Vec<AdId>,
    /// Sum of the broker's estimates over `selected`.
    pub estimated: f64,
    /// Revenue from impressions of `selected` at vehicles under this PoA.
    pub realized: f64,
}

pub struct Simulation<'a> {
    config: SimConfig,
    selection: SelectionParams,
    display: DisplayParams,
    catalog: &'a AdCatalog,
    poas: Vec<PoA>,
    candidates: CandidateLists,
    trace: &'a MobilityTrace,
    profiles: HashMap<VehicleId, VehicleProfile>,
    estimator: RevenueEstimator,
    vehicles: HashMap<VehicleId, VehicleState>,
    association: BTreeMap<VehicleId, PoAId>,
    detection_rng: ChaCha8Rng,
    strategy_rng: ChaCha8Rng,
    distance_evals: DistanceCounter,
    step: usize,
    revenue: f64,
    impressions: u64,
    distance_sum: f64,
    broadcasts: u64,
    last: Vec<PoaSelection>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        config: &SimConfig,
        catalog: &'a AdCatalog,
        poas: Vec<PoA>,
        profiles: &[VehicleProfile],
        trace: &'a MobilityTrace,
    ) -> Result<Self> {
        let candidates = CandidateLists::for_config(config, catalog, &poas)?;
        Self::with_candidates(config, catalog, poas, candidates, profiles, trace)
    }

    /// Like [`Simulation::new`] with prebuilt candidate lists.
    pub fn with_candidates(
        config: &SimConfig,
        catalog: &'a AdCatalog,
        mut poas: Vec<PoA>,
        candidates: CandidateLists,
        profiles: &[VehicleProfile],
        trace: &'a MobilityTrace,
    ) -> Result<Self> {
        config.validate()?;
        let mut by_id = HashMap::with_capacity(profiles.len());
        for p in profiles {
            if let Some(dim) = catalog.dim() {
                if p.interests.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: p.interests.dim() });
                }
            }
            by_id.insert(p.id, p.clone());
        }
        for point in trace.steps().iter().flatten() {
            if !by_id.contains_key(&point.vehicle) {
                return Err(Error::MissingProfile(point.vehicle));
            }
        }
        poas.sort_by_key(|p| p.id);
        Ok(Simulation {
            selection: config.selection()?,
            display: config.display(),
            config: config.clone(),
            catalog,
            poas,
            candidates,
            trace,
            profiles: by_id,
            estimator: RevenueEstimator::new(config.relevance()),
            vehicles: HashMap::new(),
            association: BTreeMap::new(),
            detection_rng: stream(config.seed, Stream::Detection),
            strategy_rng: stream(config.seed, Stream::Strategy),
            distance_evals: DistanceCounter::default(),
            step: 0,
            revenue: 0.0,
            impressions: 0,
            distance_sum: 0.0,
            broadcasts: 0,
            last: Vec::new(),
        })
    }

    pub fn estimator(&self) -> &RevenueEstimator {
        &self.estimator
    }

    /// Per-PoA selections of the most recent step, in PoA order.
    pub fn last_selections(&self) -> &[PoaSelection] {
        &self.last
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleState> {
        self.vehicles.get(&id)
    }

    pub fn distance_evaluations(&self) -> u64 {
        self.distance_evals.0
    }

    /// Number of steps that will be simulated: the configured count, capped
    /// by the trace length.
    pub fn total_steps(&self) -> usize {
        self.config.steps.min(self.trace.len())
    }

    pub fn metrics(&self) -> StepMetrics {
        StepMetrics {
            step: self.step.saturating_sub(1),
            strategy: self.config.strategy,
            revenue_cum: self.revenue,
            impressions_cum: self.impressions,
            avg_distance_cum: if self.impressions == 0 { 0.0 } else { self.distance_sum / self.impressions as f64 },
            broadcasts_cum: self.broadcasts,
        }
    }

    /// Advances one step. Returns `None` once the run is over.
    pub fn step(&mut self) -> Option<StepMetrics> {
        if self.step >= self.total_steps() {
            return None;
        }
        let points = self.trace.step(self.step);
        let located: Vec<(VehicleId, (f64, f64), Option<PoAId>)> =
            points.iter().map(|p| (p.vehicle, p.position(), coverage(&self.poas, p.position()))).collect();
        let now: BTreeMap<VehicleId, PoAId> = located.iter().filter_map(|&(v, _, u)| u.map(|u| (v, u))).collect();

        // Exits first, then entries, both in vehicle order.
        let leaving: Vec<(VehicleId, PoAId)> =
            self.association.iter().filter(|(v, u)| now.get(v) != Some(u)).map(|(&v, &u)| (v, u)).collect();
        for (v, u) in leaving {
            self.estimator.on_vehicle_exit(u, v);
            self.association.remove(&v);
        }
        for (&v, &u) in &now {
            if self.association.contains_key(&v) {
                continue;
            }
            let detected = self.detection_rng.random_bool(self.config.detection_accuracy);
            let ads = self.catalog.ads();
            let cands = self.candidates.get(u).iter().map(|&i| &ads[i]);
            self.estimator.on_vehicle_enter(u, &self.profiles[&v], detected, cands);
            self.association.insert(v, u);
        }

        // Selection and registry update, PoA by PoA.
        let mut sent: HashMap<PoAId, usize> = HashMap::new();
        self.last.clear();
        for poa in &self.poas {
            let ads = self.catalog.ads();
            let allowed = self.candidates.get(poa.id);
            let list = scored(&self.estimator, poa.id, |id| self.catalog.get(id));
            let list: Vec<_> = if allowed.len() == ads.len() {
                list
            } else {
                let ok: std::collections::HashSet<AdId> = allowed.iter().map(|&i| ads[i].id).collect();
                list.into_iter().filter(|s| ok.contains(&s.ad.id)).collect()
            };
            let selected =
                self.config.strategy.select(&list, &self.selection, &mut self.strategy_rng, &mut self.distance_evals);
            let estimated: f64 = selected.iter().map(|&a| self.estimator.estimate(poa.id, a)).sum();
            self.estimator.on_broadcast(poa.id, &selected);
            self.broadcasts += selected.len() as u64;
            sent.insert(poa.id, self.last.len());
            self.last.push(PoaSelection { poa: poa.id, selected, estimated, realized: 0.0 });
        }

        // Display at every vehicle present in the trace.
        for &(v, position, u) in &located {
            let state = self
                .vehicles
                .entry(v)
                .or_insert_with(|| VehicleState::new(self.profiles[&v].clone(), position));
            state.position = position;
            let received: Vec<&Ad> = match u {
                Some(u) => self.last[sent[&u]].selected.iter().filter_map(|&a| self.catalog.get(a)).collect(),
                None => Vec::new(),
            };
            for imp in state.step_display(&received, u, &self.display) {
                self.revenue += imp.value;
                self.impressions += 1;
                self.distance_sum += imp.distance;
                if let Some(u) = u {
                    let sel = &mut self.last[sent[&u]];
                    if sel.selected.contains(&imp.ad) {
                        sel.realized += imp.value;
                    }
                }
            }
        }

        self.step += 1;
        Some(self.metrics())
    }

    pub fn run(mut self) -> Vec<StepMetrics> {
        let mut out = Vec::with_capacity(self.total_steps());
        while let Some(m) = self.step() {
            out.push(m);
        }
        out
    }
}

/// Convenience wrapper: one full run.
pub fn run(
    config: &SimConfig,
    trace: &MobilityTrace,
    catalog: &AdCatalog,
    poas: &[PoA],
    profiles: &[VehicleProfile],
) -> Result<Vec<StepMetrics>> {
    Ok(Simulation::new(config, catalog, poas.to_vec(), profiles, trace)?.run())
}

pub const METRICS_HEADER: &str = "step,strategy,revenue_cum,impressions_cum,avg_distance_cum,broadcasts_cum";

pub fn write_metrics<W: Write>(mut w: W, rows: &[StepMetrics]) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{},{:.6},{}",
            r.step, r.strategy, r.revenue_cum, r.impressions_cum, r.avg_distance_cum, r.broadcasts_cum
        )?;
    }
    Ok(())
}
