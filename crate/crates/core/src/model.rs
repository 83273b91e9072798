//! Domain types shared by every other module: feature-space points, ads,
//! points of access and vehicle profiles, plus the two distance metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                $name(v)
            }
        }
    };
}

id_newtype!(
    /// Identifier of an ad within a catalog.
    AdId
);
id_newtype!(
    /// Identifier of a vehicle within a trace.
    VehicleId
);
id_newtype!(
    /// Identifier of a point of access (RSU or base station).
    PoAId
);

/// A point in the n-dimensional feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("feature vector must have at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("feature coordinate {i} is not finite")));
        }
        Ok(FeatureVector(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        FeatureVector::new(v)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Distance used to measure how close two points of the feature space are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// 2-norm of the difference.
    #[default]
    Euclidean,
    /// Angle between the two vectors, in radians.
    Angular,
}

impl DistanceMetric {
    /// Checked distance between two feature vectors.
    pub fn distance(self, a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        if self == DistanceMetric::Angular && (is_zero(a.coords()) || is_zero(b.coords())) {
            return Err(Error::InvalidInput("angular distance is undefined for the zero vector".into()));
        }
        Ok(self.eval(a.coords(), b.coords()))
    }

    /// Unchecked distance on raw coordinates. Callers guarantee equal
    /// lengths and, for the angular metric, nonzero vectors.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            DistanceMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            DistanceMetric::Angular => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
                // acos(1 - tiny) is ~1e-8, not 0; identical directions must be exactly 0.
                if a == b {
                    0.0
                } else {
                    cos.acos()
                }
            }
        }
    }
}

fn is_zero(c: &[f64]) -> bool {
    c.iter().all(|&x| x == 0.0)
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Angular => "angular",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(DistanceMetric::Euclidean),
            "angular" => Ok(DistanceMetric::Angular),
            other => Err(Error::InvalidInput(format!("unknown distance metric `{other}`"))),
        }
    }
}

/// Where an ad is worth something.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdScope {
    Global,
    /// Only valuable (and only displayable) under the target PoA.
    Local(PoAId),
}

impl AdScope {
    /// Whether an ad with this scope may be shown to a vehicle at `poa`.
    #[inline]
    pub fn admits(self, poa: Option<PoAId>) -> bool {
        match self {
            AdScope::Global => true,
            AdScope::Local(target) => poa == Some(target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ad {
    pub id: AdId,
    pub features: FeatureVector,
    pub base_value: f64,
    pub scope: AdScope,
}

impl Ad {
    pub fn new(id: AdId, features: FeatureVector, base_value: f64, scope: AdScope) -> Result<Self> {
        if !(base_value > 0.0 && base_value.is_finite()) {
            return Err(Error::InvalidInput(format!("ad {id}: base value must be positive, got {base_value}")));
        }
        Ok(Ad { id, features, base_value, scope })
    }

    /// Per-PoA value: the base value wherever the ad is valid, zero elsewhere.
    #[inline]
    pub fn value_at(&self, poa: PoAId) -> f64 {
        if self.scope.admits(Some(poa)) {
            self.base_value
        } else {
            0.0
        }
    }
}

/// Value of `ad` when broadcast by `poa`.
pub fn ad_value(ad: &Ad, poa: PoAId) -> f64 {
    ad.value_at(poa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoA {
    pub id: PoAId,
    pub position: (f64, f64),
    pub range: f64,
}

impl PoA {
    pub fn new(id: PoAId, position: (f64, f64), range: f64) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::InvalidInput(format!("PoA {id}: range must be positive, got {range}")));
        }
        if !(position.0.is_finite() && position.1.is_finite()) {
            return Err(Error::InvalidInput(format!("PoA {id}: position is not finite")));
        }
        Ok(PoA { id, position, range })
    }

    pub fn distance_to(&self, (x, y): (f64, f64)) -> f64 {
        (self.position.0 - x).hypot(self.position.1 - y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleProfile {
    pub id: VehicleId,
    pub interests: FeatureVector,
}

/// Threshold and metric that together decide whether an ad interests a user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relevance {
    pub metric: DistanceMetric,
    pub d_max: f64,
}

impl Relevance {
    pub fn new(metric: DistanceMetric, d_max: f64) -> Result<Self> {
        if !(d_max > 0.0 && d_max.is_finite()) {
            return Err(Error::InvalidInput(format!("d_max must be positive, got {d_max}")));
        }
        Ok(Relevance { metric, d_max })
    }

    /// Distance between an ad and a profile, if the ad is relevant to it
    /// at `current_poa`.
    #[inline]
    pub fn relevant_distance(&self, ad: &Ad, profile: &VehicleProfile, current_poa: Option<PoAId>) -> Option<f64> {
        if !ad.scope.admits(current_poa) {
            return None;
        }
        let d = self.metric.eval(ad.features.coords(), profile.interests.coords());
        (d <= self.d_max).then_some(d)
    }

    /// Feature-space part of relevance only, ignoring the ad scope.
    #[inline]
    pub fn within(&self, ad: &Ad, profile: &VehicleProfile) -> bool {
        self.metric.eval(ad.features.coords(), profile.interests.coords()) <= self.d_max
    }
}

/// `true` iff the ad is within `d_max` of the profile and its scope admits
/// the vehicle's current PoA. Ties at exactly `d_max` count as relevant.
pub fn is_relevant(
    metric: DistanceMetric,
    ad: &Ad,
    profile: &VehicleProfile,
    d_max: f64,
    current_poa: Option<PoAId>,
) -> bool {
    Relevance { metric, d_max }.relevant_distance(ad, profile, current_poa).is_some()
}

/// Ads indexed by id. Ids are unique.
#[derive(Debug, Clone, Default)]
pub struct AdCatalog {
    ads: Vec<Ad>,
    index: std::collections::HashMap<AdId, usize>,
}

impl AdCatalog {
    pub fn new(ads: Vec<Ad>) -> Result<Self> {
        let mut index = std::collections::HashMap::with_capacity(ads.len());
        let dim = ads.first().map(|a| a.features.dim());
        for (i, ad) in ads.iter().enumerate() {
            if index.insert(ad.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate ad id {}", ad.id)));
            }
            if Some(ad.features.dim()) != dim {
                return Err(Error::DimensionMismatch { expected: dim.unwrap_or(0), found: ad.features.dim() });
            }
        }
        Ok(AdCatalog { ads, index })
    }

    pub fn get(&self, id: AdId) -> Option<&Ad> {
        self.index.get(&id).map(|&i| &self.ads[i])
    }

    pub fn ads(&self) -> &[Ad] {
        &self.ads
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.ads.first().map(|a| a.features.dim())
    }

    /// Ads with a positive value at `poa`, in catalog order.
    pub fn valued_at(&self, poa: PoAId) -> impl Iterator<Item = &Ad> {
        self.ads.iter().filter(move |a| a.value_at(poa) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn fv(c: &[f64]) -> FeatureVector {
        FeatureVector::new(c.to_vec()).unwrap()
    }

    fn ad(id: u32, c: &[f64], value: f64, scope: AdScope) -> Ad {
        Ad::new(AdId(id), fv(c), value, scope).unwrap()
    }

    fn profile(c: &[f64]) -> VehicleProfile {
        VehicleProfile { id: VehicleId(0), interests: fv(c) }
    }

    // Independent dot-product route for the angular metric.
    fn naive_angle(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).acos()
    }

    #[test]
    fn euclidean_examples() {
        let e = DistanceMetric::Euclidean;
        let f = fv(&[0.3, 0.1, 0.9]);
        assert_eq!(e.distance(&f, &f).unwrap(), 0.0);
        let d = e.distance(&fv(&[1., 0., 0., 0., 0.]), &fv(&[0., 1., 0., 0., 0.])).unwrap();
        assert!((d - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn angular_examples() {
        let a = DistanceMetric::Angular;
        let f = fv(&[0.2, 0.7, 0.4]);
        assert_eq!(a.distance(&f, &f).unwrap(), 0.0);
        let d = a.distance(&fv(&[1., 0.]), &fv(&[0., 1.])).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-12);
        assert!((d - naive_angle(&[1., 0.], &[0., 1.])).abs() < 1e-12);
        // Collinear vectors with different magnitudes: clamped, no NaN.
        let d = a.distance(&fv(&[0.1, 0.3, 0.7]), &fv(&[0.3, 0.9, 2.1])).unwrap();
        assert!(d.is_finite() && d < 1e-7);
    }

    #[test]
    fn distance_errors() {
        let e = DistanceMetric::Euclidean;
        assert!(matches!(
            e.distance(&fv(&[1.0]), &fv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DistanceMetric::Angular.distance(&fv(&[0.0, 0.0]), &fv(&[1.0, 0.0])).is_err());
        assert!(FeatureVector::new(vec![]).is_err());
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn ad_value_examples() {
        let g = ad(1, &[0.5], 0.7, AdScope::Global);
        assert_eq!(ad_value(&g, PoAId(9)), 0.7);
        let l = ad(2, &[0.5], 0.7, AdScope::Local(PoAId(3)));
        assert_eq!(ad_value(&l, PoAId(3)), 0.7);
        assert_eq!(ad_value(&l, PoAId(5)), 0.0);
        assert!(Ad::new(AdId(3), fv(&[0.1]), 0.0, AdScope::Global).is_err());
    }

    #[test]
    fn relevance_examples() {
        let e = DistanceMetric::Euclidean;
        let v = profile(&[0.0]);
        assert!(is_relevant(e, &ad(1, &[0.10], 1.0, AdScope::Global), &v, 0.15, Some(PoAId(0))));
        // Exactly on the threshold.
        let edge = ad(2, &[0.25], 1.0, AdScope::Global);
        let vv = profile(&[0.125]);
        assert_eq!(e.eval(edge.features.coords(), vv.interests.coords()), 0.125);
        assert!(is_relevant(e, &edge, &vv, 0.125, None));
        // Close in feature space, but the wrong PoA.
        let local = ad(3, &[0.05], 1.0, AdScope::Local(PoAId(3)));
        assert!(Relevance { metric: e, d_max: 0.15 }.within(&local, &v));
        assert!(!is_relevant(e, &local, &v, 0.15, Some(PoAId(5))));
        assert!(!is_relevant(e, &local, &v, 0.15, None));
        assert!(is_relevant(e, &local, &v, 0.15, Some(PoAId(3))));
    }

    #[test]
    fn catalog_rejects_duplicates() {
        let a = ad(1, &[0.1], 0.5, AdScope::Global);
        assert!(AdCatalog::new(vec![a.clone(), a]).is_err());
    }

    #[test]
    fn metric_parses() {
        assert_eq!("Angular".parse::<DistanceMetric>().unwrap(), DistanceMetric::Angular);
        assert!("manhattan".parse::<DistanceMetric>().is_err());
    }
}
