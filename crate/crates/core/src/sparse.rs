//! Sparse approximations of an ad catalog.
//!
//! A sparse set keeps, out of every cluster of ads closer than `2ε` to each
//! other, only the most valuable one. The M-sparse variant repeats the
//! construction on the residual ads `m` times and unions the layers.
//!
//! Both are computed here as a greedy colouring in value order: an ad joins
//! the lowest layer not already used by a more valuable neighbour within
//! `2ε`, and is dropped when all `m` layers are taken. Running the
//! single-layer construction `m` times on the residual set yields exactly
//! the same layers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ad, AdCatalog, AdId, AdScope, DistanceMetric, PoAId, VehicleProfile};

/// Largest sparse set `verify_analogue_bound` will enumerate over.
pub const MAX_ANALOGUE_SEARCH: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseApproxParams {
    pub epsilon: f64,
    /// Number of layers (the display budget M).
    pub m: usize,
    pub metric: DistanceMetric,
}

impl SparseApproxParams {
    pub fn new(epsilon: f64, m: usize, metric: DistanceMetric) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if m == 0 || m > u8::MAX as usize {
            return Err(Error::InvalidInput(format!("layer count must be in 1..=255, got {m}")));
        }
        Ok(SparseApproxParams { epsilon, m, metric })
    }

    /// The loss analysis assumes `d_max > 2ε`; returns a warning otherwise.
    pub fn check_against(&self, d_max: f64) -> Option<String> {
        (d_max <= 2.0 * self.epsilon).then(|| {
            format!("d_max = {d_max} is not larger than 2*epsilon = {}; revenue-loss bounds do not apply", 2.0 * self.epsilon)
        })
    }
}

/// Surviving ad that stands in for a removed one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub id: AdId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdSet {
    /// Members ordered by layer, then by value (the order layers are built in).
    ads: Vec<Ad>,
    /// Zero-based layer of each member, parallel to `ads`.
    layers: Vec<u8>,
    params: SparseApproxParams,
    mapping: BTreeMap<AdId, Representative>,
}

impl SparseAdSet {
    pub fn ads(&self) -> &[Ad] {
        &self.ads
    }

    pub fn layers(&self) -> &[u8] {
        &self.layers
    }

    pub fn params(&self) -> SparseApproxParams {
        self.params
    }

    /// For every removed ad, the representative that displaced it.
    pub fn mapping(&self) -> &BTreeMap<AdId, Representative> {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AdId> + '_ {
        self.ads.iter().map(|a| a.id)
    }

    /// Members of one layer, in value order.
    pub fn layer(&self, layer: u8) -> impl Iterator<Item = &Ad> {
        self.ads.iter().zip(&self.layers).filter(move |(_, &l)| l == layer).map(|(a, _)| a)
    }
}

/// Single-layer sparse approximation.
pub fn epsilon_set(
    ads: &[Ad],
    epsilon: f64,
    metric: DistanceMetric,
    value_of: impl Fn(&Ad) -> f64,
) -> Result<SparseAdSet> {
    m_sparse_set(ads, epsilon, 1, metric, value_of)
}

/// M-sparse approximation with `m` layers.
pub fn m_sparse_set(
    ads: &[Ad],
    epsilon: f64,
    m: usize,
    metric: DistanceMetric,
    value_of: impl Fn(&Ad) -> f64,
) -> Result<SparseAdSet> {
    let params = SparseApproxParams::new(epsilon, m, metric)?;
    if let Some(d) = ads.first().map(|a| a.features.dim()) {
        if let Some(bad) = ads.iter().find(|a| a.features.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.features.dim() });
        }
    }

    let values: Vec<f64> = ads.iter().map(&value_of).collect();
    let mut order: Vec<usize> = (0..ads.len()).collect();
    order.sort_by(|&i, &j| value_order((values[i], ads[i].id), (values[j], ads[j].id)));

    let points: Vec<&[f64]> = order.iter().map(|&i| ads[i].features.coords()).collect();
    let neighbors = neighbor_lists(&points, 2.0 * epsilon, metric);
    let layers = assign_layers(&neighbors, m);

    let mut members: Vec<(u8, usize)> = Vec::new();
    let mut mapping = BTreeMap::new();
    for (pos, layer) in layers.iter().enumerate() {
        match layer {
            Some(l) => members.push((*l, pos)),
            None => {
                let rep = first_in_layer_zero(&neighbors[pos], pos, &layers)
                    .expect("a dropped ad always has a more valuable first-layer neighbour");
                let removed = &ads[order[pos]];
                let kept = &ads[order[rep]];
                mapping.insert(
                    removed.id,
                    Representative { id: kept.id, distance: metric.eval(removed.features.coords(), kept.features.coords()) },
                );
            }
        }
    }
    members.sort();
    Ok(SparseAdSet {
        ads: members.iter().map(|&(_, pos)| ads[order[pos]].clone()).collect(),
        layers: members.iter().map(|&(l, _)| l).collect(),
        params,
        mapping,
    })
}

/// Descending value, then ascending id.
fn value_order(a: (f64, AdId), b: (f64, AdId)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn first_in_layer_zero(neighbors: &[u32], pos: usize, layers: &[Option<u8>]) -> Option<usize> {
    neighbors
        .iter()
        .map(|&n| n as usize)
        .take_while(|&n| n < pos)
        .find(|&n| layers[n] == Some(0))
}

/// Greedy layer assignment over points already sorted in value order.
/// `neighbors[i]` lists every index within `2ε` of `i`, ascending.
fn assign_layers(neighbors: &[Vec<u32>], m: usize) -> Vec<Option<u8>> {
    let mut layers: Vec<Option<u8>> = Vec::with_capacity(neighbors.len());
    for (i, ns) in neighbors.iter().enumerate() {
        let taken = ns.iter().take_while(|&&n| (n as usize) < i).filter_map(|&n| layers[n as usize]);
        layers.push(lowest_free_layer(taken, m));
    }
    layers
}

fn lowest_free_layer(taken: impl Iterator<Item = u8>, m: usize) -> Option<u8> {
    let mut used = [false; 256];
    for l in taken {
        used[l as usize] = true;
    }
    (0..m).find(|&l| !used[l]).map(|l| l as u8)
}

/// All pairs closer than or equal to `radius`, as sorted adjacency lists.
pub(crate) fn neighbor_lists(points: &[&[f64]], radius: f64, metric: DistanceMetric) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); points.len()];
    match NeighborIndex::build(points, radius, metric) {
        NeighborIndex::Grid(grid) => {
            for (i, p) in points.iter().enumerate() {
                grid.for_each_candidate(p, |j| {
                    if j > i && metric.eval(p, points[j]) <= radius {
                        out[i].push(j as u32);
                        out[j].push(i as u32);
                    }
                });
            }
            for list in &mut out {
                list.sort_unstable();
            }
        }
        NeighborIndex::Linear => {
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    if metric.eval(points[i], points[j]) <= radius {
                        out[i].push(j as u32);
                        out[j].push(i as u32);
                    }
                }
            }
        }
    }
    out
}

/// Grid hashing is exact for the Euclidean metric: two points within
/// `radius` differ by at most one cell of side `radius` along every axis.
pub(crate) enum NeighborIndex {
    Grid(Grid),
    Linear,
}

const MAX_GRID_DIM: usize = 6;

impl NeighborIndex {
    pub(crate) fn build(points: &[&[f64]], radius: f64, metric: DistanceMetric) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        if metric == DistanceMetric::Euclidean && (1..=MAX_GRID_DIM).contains(&dim) && points.len() > 64 {
            NeighborIndex::Grid(Grid::new(points, radius))
        } else {
            NeighborIndex::Linear
        }
    }
}

pub(crate) struct Grid {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
    offsets: Vec<Vec<i64>>,
}

impl Grid {
    fn new(points: &[&[f64]], cell: f64) -> Self {
        let dim = points[0].len();
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(p, cell)).or_default().push(i as u32);
        }
        let mut offsets = vec![Vec::new()];
        for _ in 0..dim {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    (-1..=1).map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        Grid { cell, cells, offsets }
    }

    fn for_each_candidate(&self, p: &[f64], mut f: impl FnMut(usize)) {
        let base = cell_of(p, self.cell);
        let mut key = base.clone();
        for off in &self.offsets {
            for ((k, b), o) in key.iter_mut().zip(&base).zip(off) {
                *k = b + o;
            }
            if let Some(ids) = self.cells.get(&key) {
                ids.iter().for_each(|&j| f(j as usize));
            }
        }
    }
}

fn cell_of(p: &[f64], cell: f64) -> Vec<i64> {
    p.iter().map(|x| (x / cell).floor() as i64).collect()
}

/// Largest number of members inside any closed ball of `radius` centred on
/// a probe. For a set built with `m` layers and `radius = ε` this never
/// exceeds `m`.
pub fn check_ball_bound<P: AsRef<[f64]>>(set: &SparseAdSet, probes: &[P], radius: f64) -> usize {
    let metric = set.params.metric;
    probes
        .iter()
        .map(|p| {
            set.ads
                .iter()
                .filter(|a| metric.eval(a.features.coords(), p.as_ref()) <= radius)
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Upper bound on the number of ads touched by one estimator update when
/// the candidates form an M-sparse set: `min(ceil((m·d_max/ε)^n), set_size)`.
///
/// Ratios that are integers up to rounding noise (e.g. `0.15 / 0.0375`) are
/// snapped before exponentiation so the bound does not jump by one.
pub fn update_cost_bound(params: &SparseApproxParams, d_max: f64, n: usize, set_size: usize) -> u64 {
    let ratio = params.m as f64 * d_max / params.epsilon;
    let snapped = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) { ratio.round() } else { ratio };
    let volume = snapped.powi(n as i32);
    let balls = if volume >= u64::MAX as f64 { u64::MAX } else { volume.ceil() as u64 };
    balls.min(set_size as u64)
}

/// Checks the revenue guarantee of the sparse approximation on one instance.
///
/// `s` must be extended conflict free over `vehicles`: no vehicle may have
/// more than `m` ads of `s` within `d_max + ε`. The check returns `true`
/// iff some subset of the sparse set is (a) analogue to `s`, meaning there
/// is a bijection mapping every ad of `s` to a member at most `ε` away with
/// a value at least as large, (b) conflict free over `vehicles`, and
/// (c) earns at least the conservative revenue of `s`, which only counts
/// vehicles within `d_max - ε` of an ad.
///
/// The bijection is searched over all members within `ε`, independently of
/// the stored mapping. Note that the construction only guarantees a
/// representative within `2ε`, so (a) can fail when a removed ad's nearest
/// more valuable survivor lies between `ε` and `2ε` away; see
/// [`verify_analogue_bound_at_radius`] for the variant that uses the
/// construction's own `2ε` radius.
pub fn verify_analogue_bound(
    original: &[Ad],
    sparse: &SparseAdSet,
    s: &[AdId],
    vehicles: &[VehicleProfile],
    d_max: f64,
    value_of: impl Fn(&Ad) -> f64,
) -> Result<bool> {
    verify_analogue_bound_at_radius(original, sparse, s, vehicles, d_max, sparse.params.epsilon, value_of)
}

/// [`verify_analogue_bound`] with the analogy radius `rho` in place of `ε`
/// everywhere: bijection distance `≤ rho`, extended threshold `d_max + rho`
/// and conservative threshold `d_max - rho`.
pub fn verify_analogue_bound_at_radius(
    original: &[Ad],
    sparse: &SparseAdSet,
    s: &[AdId],
    vehicles: &[VehicleProfile],
    d_max: f64,
    rho: f64,
    value_of: impl Fn(&Ad) -> f64,
) -> Result<bool> {
    if sparse.len() > MAX_ANALOGUE_SEARCH {
        return Err(Error::TooLarge { what: "sparse set", size: sparse.len(), limit: MAX_ANALOGUE_SEARCH });
    }
    let metric = sparse.params.metric;
    let m = sparse.params.m;
    let by_id: HashMap<AdId, &Ad> = original.iter().map(|a| (a.id, a)).collect();
    let chosen: Vec<&Ad> = s
        .iter()
        .map(|id| by_id.get(id).copied().ok_or_else(|| Error::InvalidInput(format!("ad {id} is not in the original set"))))
        .collect::<Result<_>>()?;
    if chosen.iter().map(|a| a.id).collect::<BTreeSet<_>>().len() != chosen.len() {
        return Err(Error::InvalidInput("selected set contains duplicates".into()));
    }

    let dist = |a: &Ad, v: &VehicleProfile| metric.eval(a.features.coords(), v.interests.coords());
    let extended = d_max + rho;
    if let Some(v) = vehicles.iter().find(|v| chosen.iter().filter(|a| dist(a, v) <= extended).count() > m) {
        return Err(Error::InvalidInput(format!(
            "selected set is not extended conflict free: vehicle {} has more than {m} ads within {extended}",
            v.id
        )));
    }

    let conservative: f64 = chosen
        .iter()
        .map(|a| value_of(a) * vehicles.iter().filter(|v| dist(a, v) <= d_max - rho).count() as f64)
        .sum();

    // Admissible images of every chosen ad.
    let images: Vec<Vec<usize>> = chosen
        .iter()
        .map(|a| {
            sparse
                .ads
                .iter()
                .enumerate()
                .filter(|(_, b)| {
                    metric.eval(a.features.coords(), b.features.coords()) <= rho && value_of(b) >= value_of(a)
                })
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut used = vec![false; sparse.len()];
    let mut picked = Vec::with_capacity(chosen.len());
    let mut seen = BTreeSet::new();
    let accept = |set: &[usize]| -> bool {
        let conflict_free = vehicles
            .iter()
            .all(|v| set.iter().filter(|&&j| dist(&sparse.ads[j], v) <= d_max).count() <= m);
        if !conflict_free {
            return false;
        }
        let revenue: f64 = set
            .iter()
            .map(|&j| {
                let a = &sparse.ads[j];
                value_of(a) * vehicles.iter().filter(|v| dist(a, v) <= d_max).count() as f64
            })
            .sum();
        revenue >= conservative
    };
    Ok(search_images(&images, 0, &mut used, &mut picked, &mut seen, &accept))
}

fn search_images(
    images: &[Vec<usize>],
    depth: usize,
    used: &mut [bool],
    picked: &mut Vec<usize>,
    seen: &mut BTreeSet<Vec<usize>>,
    accept: &impl Fn(&[usize]) -> bool,
) -> bool {
    if depth == images.len() {
        let mut set = picked.clone();
        set.sort_unstable();
        // Different bijections onto the same image set are equivalent.
        return seen.insert(set.clone()) && accept(&set);
    }
    for &j in &images[depth] {
        if used[j] {
            continue;
        }
        used[j] = true;
        picked.push(j);
        let found = search_images(images, depth + 1, used, picked, seen, accept);
        picked.pop();
        used[j] = false;
        if found {
            return true;
        }
    }
    false
}

/// Per-PoA sparse candidate lists for a whole catalog.
///
/// Each PoA's list is the M-sparse approximation of the ads valued at that
/// PoA (all global ads plus its own local ads). The global-only layering is
/// computed once; a PoA with local ads only re-evaluates the ads whose
/// layer can change, walking forward in value order from its local ads.
#[derive(Debug, Clone)]
pub struct PoaSparseSets {
    params: SparseApproxParams,
    global: Arc<[usize]>,
    per_poa: HashMap<PoAId, Arc<[usize]>>,
}

impl PoaSparseSets {
    pub fn build(catalog: &AdCatalog, poas: &[PoAId], params: SparseApproxParams) -> Self {
        let ads = catalog.ads();
        // Global rank order; restricting it to any PoA gives that PoA's value order.
        let mut by_rank: Vec<usize> = (0..ads.len()).collect();
        by_rank.sort_by(|&i, &j| value_order((ads[i].base_value, ads[i].id), (ads[j].base_value, ads[j].id)));
        let mut rank = vec![0usize; ads.len()];
        for (r, &i) in by_rank.iter().enumerate() {
            rank[i] = r;
        }

        let global_ranks: Vec<usize> =
            by_rank.iter().copied().filter(|&i| ads[i].scope == AdScope::Global).collect();
        let global_points: Vec<&[f64]> = global_ranks.iter().map(|&i| ads[i].features.coords()).collect();
        let radius = 2.0 * params.epsilon;
        let neighbors = neighbor_lists(&global_points, radius, params.metric);
        let layers = assign_layers(&neighbors, params.m);
        let global_members: Arc<[usize]> = members_in_order(
            global_ranks.iter().zip(&layers).filter_map(|(&i, l)| l.map(|l| (l, rank[i], i))),
        );

        let mut locals: BTreeMap<PoAId, Vec<usize>> = BTreeMap::new();
        for (i, ad) in ads.iter().enumerate() {
            if let AdScope::Local(target) = ad.scope {
                locals.entry(target).or_default().push(i);
            }
        }

        let index = NeighborIndex::build(&global_points, radius, params.metric);
        let mut per_poa = HashMap::new();
        for &poa in poas {
            let set = match locals.get(&poa) {
                None => global_members.clone(),
                Some(local) => {
                    let ctx = GlobalLayering { ads, global_ranks: &global_ranks, neighbors: &neighbors, layers: &layers, index: &index };
                    ctx.with_locals(local, &rank, params)
                }
            };
            per_poa.insert(poa, set);
        }
        PoaSparseSets { params, global: global_members, per_poa }
    }

    pub fn params(&self) -> SparseApproxParams {
        self.params
    }

    /// Catalog indices of the candidates at `poa`, ordered by layer then value.
    pub fn candidates(&self, poa: PoAId) -> &[usize] {
        self.per_poa.get(&poa).unwrap_or(&self.global)
    }

    /// Candidates shared by every PoA without local ads.
    pub fn global(&self) -> &[usize] {
        &self.global
    }
}

fn members_in_order(it: impl Iterator<Item = (u8, usize, usize)>) -> Arc<[usize]> {
    let mut v: Vec<(u8, usize, usize)> = it.collect();
    v.sort_unstable();
    v.into_iter().map(|(_, _, i)| i).collect()
}

struct GlobalLayering<'a> {
    ads: &'a [Ad],
    /// Catalog index of each global ad, in value order.
    global_ranks: &'a [usize],
    neighbors: &'a [Vec<u32>],
    layers: &'a [Option<u8>],
    index: &'a NeighborIndex,
}

impl GlobalLayering<'_> {
    fn with_locals(&self, local: &[usize], rank: &[usize], params: SparseApproxParams) -> Arc<[usize]> {
        let metric = params.metric;
        let radius = 2.0 * params.epsilon;
        // Nodes are catalog indices; position in the global list for globals.
        let gpos: HashMap<usize, usize> = self.global_ranks.iter().enumerate().map(|(p, &i)| (i, p)).collect();

        // Extra adjacency introduced by this PoA's local ads.
        let mut extra: HashMap<usize, Vec<usize>> = HashMap::new();
        for (li, &l) in local.iter().enumerate() {
            let p = self.ads[l].features.coords();
            let mut link = |g: usize| {
                extra.entry(l).or_default().push(g);
                extra.entry(g).or_default().push(l);
            };
            match self.index {
                NeighborIndex::Grid(grid) => grid.for_each_candidate(p, |j| {
                    let g = self.global_ranks[j];
                    if metric.eval(p, self.ads[g].features.coords()) <= radius {
                        link(g);
                    }
                }),
                NeighborIndex::Linear => {
                    for &g in self.global_ranks {
                        if metric.eval(p, self.ads[g].features.coords()) <= radius {
                            link(g);
                        }
                    }
                }
            }
            for &other in &local[li + 1..] {
                if metric.eval(p, self.ads[other].features.coords()) <= radius {
                    extra.entry(l).or_default().push(other);
                    extra.entry(other).or_default().push(l);
                }
            }
        }

        let base_layer = |i: usize| gpos.get(&i).and_then(|&p| self.layers[p]);
        let mut overrides: HashMap<usize, Option<u8>> = HashMap::new();
        let layer_of = |i: usize, overrides: &HashMap<usize, Option<u8>>| match overrides.get(&i) {
            Some(&l) => l,
            None => base_layer(i),
        };
        let adjacent = |i: usize| -> Vec<usize> {
            let mut v: Vec<usize> = gpos
                .get(&i)
                .map(|&p| self.neighbors[p].iter().map(|&n| self.global_ranks[n as usize]).collect())
                .unwrap_or_default();
            if let Some(e) = extra.get(&i) {
                v.extend(e);
            }
            v
        };

        let mut queue: BTreeSet<(usize, usize)> = local.iter().map(|&l| (rank[l], l)).collect();
        while let Some((r, i)) = queue.pop_first() {
            let adj = adjacent(i);
            let taken = adj.iter().filter(|&&n| rank[n] < r).filter_map(|&n| layer_of(n, &overrides));
            let new = lowest_free_layer(taken, params.m);
            let old = layer_of(i, &overrides);
            let is_local = !gpos.contains_key(&i);
            if new != old || is_local {
                overrides.insert(i, new);
                if new != old {
                    queue.extend(adj.iter().filter(|&&n| rank[n] > r).map(|&n| (rank[n], n)));
                }
            }
        }

        let globals = self
            .global_ranks
            .iter()
            .filter_map(|&i| layer_of(i, &overrides).map(|l| (l, rank[i], i)));
        let locals = local.iter().filter_map(|&i| overrides.get(&i).copied().flatten().map(|l| (l, rank[i], i)));
        members_in_order(globals.chain(locals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FeatureVector, VehicleId};

    fn ad1(id: u32, x: f64, value: f64) -> Ad {
        Ad::new(AdId(id), FeatureVector::new(vec![x]).unwrap(), value, AdScope::Global).unwrap()
    }

    fn figure_instance() -> Vec<Ad> {
        vec![ad1(1, 0.50, 0.9), ad1(2, 0.52, 0.8), ad1(3, 0.49, 0.7), ad1(4, 0.60, 0.6), ad1(5, 0.70, 0.5)]
    }

    fn ids(set: &SparseAdSet) -> Vec<u32> {
        set.ids().map(|a| a.0).collect()
    }

    #[test]
    fn epsilon_set_hand_trace() {
        let set = epsilon_set(&figure_instance(), 0.025, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(ids(&set), vec![1, 4, 5]);
        let m = set.mapping();
        assert_eq!(m.len(), 2);
        assert_eq!(m[&AdId(2)].id, AdId(1));
        assert_eq!(m[&AdId(3)].id, AdId(1));
        assert!((m[&AdId(2)].distance - 0.02).abs() < 1e-12);
    }

    #[test]
    fn m_sparse_hand_trace() {
        let set = m_sparse_set(&figure_instance(), 0.025, 2, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(ids(&set), vec![1, 4, 5, 2]);
        assert_eq!(set.layers(), &[0, 0, 0, 1]);
        assert_eq!(set.mapping()[&AdId(3)].id, AdId(1));
        assert_eq!(set.mapping().len(), 1);

        let one = m_sparse_set(&figure_instance(), 0.025, 1, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        let eps = epsilon_set(&figure_instance(), 0.025, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(one, eps);
    }

    #[test]
    fn trivial_sets() {
        let e = DistanceMetric::Euclidean;
        assert!(epsilon_set(&[], 0.1, e, |a| a.base_value).unwrap().is_empty());
        let single = vec![ad1(7, 0.3, 0.2)];
        assert_eq!(ids(&epsilon_set(&single, 0.1, e, |a| a.base_value).unwrap()), vec![7]);
        let far: Vec<Ad> = (0..6).map(|i| ad1(i, i as f64, 0.1 + i as f64 / 10.0)).collect();
        let set = epsilon_set(&far, 0.1, e, |a| a.base_value).unwrap();
        assert_eq!(set.len(), far.len());
        let set = m_sparse_set(&far, 0.1, 6, e, |a| a.base_value).unwrap();
        assert_eq!(set.len(), far.len());
        assert!(epsilon_set(&far, 0.0, e, |a| a.base_value).is_err());
        assert!(m_sparse_set(&far, 0.1, 0, e, |a| a.base_value).is_err());
    }

    #[test]
    fn value_ties_break_by_id() {
        let ads = vec![ad1(9, 0.50, 0.5), ad1(4, 0.51, 0.5)];
        let set = epsilon_set(&ads, 0.05, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(ids(&set), vec![4]);
        assert_eq!(set.mapping()[&AdId(9)].id, AdId(4));
    }

    #[test]
    fn ball_bound_examples() {
        let set = epsilon_set(&figure_instance(), 0.025, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        let probes: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0]).collect();
        assert!(check_ball_bound(&set, &probes, 0.025) <= 1);
        let empty = epsilon_set(&[], 0.1, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(check_ball_bound(&empty, &probes, 0.1), 0);
    }

    #[test]
    fn update_cost_examples() {
        let p = |eps, m| SparseApproxParams::new(eps, m, DistanceMetric::Euclidean).unwrap();
        assert_eq!(update_cost_bound(&p(0.15 / 4.0, 1), 0.15, 5, 100_000), 1024);
        assert_eq!(update_cost_bound(&p(0.15, 1), 0.15, 1, 100_000), 1);
        assert_eq!(update_cost_bound(&p(0.075, 2), 0.15, 2, 100), 16);
        assert_eq!(update_cost_bound(&p(0.075, 2), 0.15, 2, 10), 10);
        assert_eq!(update_cost_bound(&p(0.04, 1), 0.15, 2, 1000), 15);
    }

    #[test]
    fn warns_when_d_max_small() {
        let p = SparseApproxParams::new(0.1, 1, DistanceMetric::Euclidean).unwrap();
        assert!(p.check_against(0.15).is_some());
        assert!(p.check_against(0.25).is_none());
    }

    fn vehicle(id: u32, x: f64) -> VehicleProfile {
        VehicleProfile { id: VehicleId(id), interests: FeatureVector::new(vec![x]).unwrap() }
    }

    #[test]
    fn analogue_trivial_cases() {
        let ads = figure_instance();
        let set = epsilon_set(&ads, 0.025, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        let vs = vec![vehicle(0, 0.5), vehicle(1, 0.65)];
        assert!(verify_analogue_bound(&ads, &set, &[], &vs, 0.06, |a| a.base_value).unwrap());
        assert!(verify_analogue_bound(&ads, &set, &[AdId(1)], &vs, 0.06, |a| a.base_value).unwrap());
        // a3 sits 0.01 from its representative a1, well inside ε.
        assert!(verify_analogue_bound(&ads, &set, &[AdId(3)], &vs, 0.06, |a| a.base_value).unwrap());
    }

    #[test]
    fn analogue_needs_a_close_representative() {
        // a2 lies 0.02 from a1 but ε is 0.015: removed, and no survivor within ε.
        let ads = vec![ad1(1, 0.50, 0.9), ad1(2, 0.52, 0.8)];
        let set = epsilon_set(&ads, 0.015, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert_eq!(ids(&set), vec![1]);
        let vs = vec![vehicle(0, 0.53)];
        assert!(!verify_analogue_bound(&ads, &set, &[AdId(2)], &vs, 0.05, |a| a.base_value).unwrap());
        assert!(verify_analogue_bound_at_radius(&ads, &set, &[AdId(2)], &vs, 0.05, 0.03, |a| a.base_value).unwrap());
    }

    #[test]
    fn analogue_rejects_bad_input() {
        let ads: Vec<Ad> = (0..20).map(|i| ad1(i, i as f64, 0.5)).collect();
        let set = epsilon_set(&ads, 0.1, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        assert!(matches!(
            verify_analogue_bound(&ads, &set, &[], &[], 0.3, |a| a.base_value),
            Err(Error::TooLarge { .. })
        ));
        let ads = figure_instance();
        let set = epsilon_set(&ads, 0.025, DistanceMetric::Euclidean, |a| a.base_value).unwrap();
        // a1 and a4 are both within d_max + ε of a vehicle at 0.55.
        let r = verify_analogue_bound(&ads, &set, &[AdId(1), AdId(4)], &[vehicle(0, 0.55)], 0.06, |a| a.base_value);
        assert!(r.is_err());
    }

    #[test]
    fn per_poa_sets_match_direct_construction() {
        let mk = |id: u32, x: f64, v: f64, scope| Ad::new(AdId(id), FeatureVector::new(vec![x]).unwrap(), v, scope).unwrap();
        let ads = vec![
            mk(1, 0.50, 0.9, AdScope::Global),
            mk(2, 0.52, 0.8, AdScope::Global),
            mk(3, 0.57, 0.7, AdScope::Global),
            mk(4, 0.47, 0.95, AdScope::Local(PoAId(1))),
            mk(5, 0.90, 0.3, AdScope::Local(PoAId(2))),
        ];
        let catalog = AdCatalog::new(ads.clone()).unwrap();
        let params = SparseApproxParams::new(0.02, 1, DistanceMetric::Euclidean).unwrap();
        let sets = PoaSparseSets::build(&catalog, &[PoAId(0), PoAId(1), PoAId(2)], params);
        for poa in [PoAId(0), PoAId(1), PoAId(2)] {
            let valued: Vec<Ad> = catalog.valued_at(poa).cloned().collect();
            let direct = epsilon_set(&valued, 0.02, params.metric, |a| a.value_at(poa)).unwrap();
            let got: Vec<AdId> = sets.candidates(poa).iter().map(|&i| ads[i].id).collect();
            assert_eq!(got, direct.ids().collect::<Vec<_>>(), "poa {poa}");
        }
        // Local ad 4 knocks out 1, which revives 2.
        let ids = |poa| sets.candidates(poa).iter().map(|&i| ads[i].id.0).collect::<Vec<_>>();
        assert_eq!(ids(PoAId(0)), vec![1, 3]);
        assert_eq!(ids(PoAId(1)), vec![4, 2, 3]);
    }
}
