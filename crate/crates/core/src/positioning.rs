//! kNN positioning over a reference fingerprint map.
//!
//! A [`Positioner`] scores a query against every reference record with the
//! selected [`Backend`], keeps the `k` smallest dissimilarities (ties go to the
//! lower record index) and averages their coordinates. The hierarchical mode
//! narrows the candidates in three stages: building by majority vote over the
//! global neighbours, floor by majority vote within that building, and the
//! planar estimate within that building and floor.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::{pair_parts, CompoundConfig, PairParts};
use crate::error::{Error, Result};
use crate::fingerprint::{densify, Fingerprint, GeoLabel, ReferenceFingerprintMap};
use crate::metrics::Kernel;

/// How a query is compared with reference records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Sparse compound measure.
    Compound(CompoundConfig),
    /// Plain vector metric over gamma-filled vectors on the map's universe.
    Baseline { kernel: Kernel, gamma: f64 },
}

impl Backend {
    pub fn kernel(&self) -> Kernel {
        match self {
            Backend::Compound(c) => c.kernel,
            Backend::Baseline { kernel, .. } => *kernel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Backend::Compound(c) => c.validate(),
            Backend::Baseline { kernel, gamma } => {
                kernel.validate()?;
                if gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("gamma must be finite, got {gamma}")))
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocateMode {
    Flat,
    Hierarchical,
}

/// Neighbour counts for the three hierarchical stages. Flat kNN uses
/// `position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageK {
    pub building: usize,
    pub floor: usize,
    pub position: usize,
}

impl StageK {
    pub fn uniform(k: usize) -> Self {
        StageK {
            building: k,
            floor: k,
            position: k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub building: Option<i64>,
    pub floor: Option<i64>,
    pub x: f64,
    pub y: f64,
    pub neighbor_indices: Vec<usize>,
    pub neighbor_dissimilarities: Vec<f64>,
}

/// A reference map prepared for repeated queries with one backend.
pub struct Positioner<'a> {
    rfm: &'a ReferenceFingerprintMap,
    backend: Backend,
    dense: Option<Vec<Vec<f64>>>,
}

impl<'a> Positioner<'a> {
    pub fn new(rfm: &'a ReferenceFingerprintMap, backend: Backend) -> Result<Self> {
        backend.validate()?;
        if rfm.is_empty() {
            return Err(Error::EmptyReferenceMap);
        }
        let dense = match backend {
            Backend::Baseline { gamma, .. } => Some(
                rfm.records()
                    .par_iter()
                    .map(|(f, _)| densify(f, rfm.universe(), gamma))
                    .collect(),
            ),
            Backend::Compound(_) => None,
        };
        Ok(Positioner { rfm, backend, dense })
    }

    pub fn rfm(&self) -> &ReferenceFingerprintMap {
        self.rfm
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Dissimilarity of `query` to every reference record, in record order.
    pub fn dissimilarities(&self, query: &Fingerprint) -> Result<Vec<f64>> {
        if query.is_empty() {
            return Err(Error::EmptyFingerprint);
        }
        Ok(match (&self.backend, &self.dense) {
            (Backend::Compound(cfg), _) => self
                .rfm
                .records()
                .iter()
                .map(|(f, _)| crate::compound::dissimilarity(query, f, cfg))
                .collect(),
            (Backend::Baseline { kernel, gamma }, Some(dense)) => {
                if self.rfm.universe().is_empty() {
                    return Err(Error::EmptyVector);
                }
                let q = densify(query, self.rfm.universe(), *gamma);
                dense
                    .iter()
                    .map(|r| kernel.vector_metric_unchecked(&q, r, *gamma))
                    .collect()
            }
            (Backend::Baseline { .. }, None) => unreachable!("baseline vectors are built in new()"),
        })
    }

    pub fn rank_neighbors(&self, query: &Fingerprint, k: usize) -> Result<Vec<(usize, f64)>> {
        check_k(k, self.rfm.len())?;
        let scores = self.dissimilarities(query)?;
        Ok(smallest_k(&scores, 0..scores.len(), k))
    }

    pub fn knn_locate(&self, query: &Fingerprint, k: usize) -> Result<PositionEstimate> {
        check_k(k, self.rfm.len())?;
        let scores = self.dissimilarities(query)?;
        Ok(average_neighbors(self.rfm, smallest_k(&scores, 0..scores.len(), k)))
    }

    pub fn hierarchical_locate(&self, query: &Fingerprint, k: StageK) -> Result<PositionEstimate> {
        check_hierarchy_labels(self.rfm)?;
        check_k(k.building, self.rfm.len())?;
        if k.floor == 0 || k.position == 0 {
            return Err(Error::NeighborCount {
                k: 0,
                available: self.rfm.len(),
            });
        }
        let scores = self.dissimilarities(query)?;
        Ok(hierarchical_from_scores(self.rfm, &scores, k))
    }

    pub fn locate(&self, query: &Fingerprint, mode: LocateMode, k: StageK) -> Result<PositionEstimate> {
        match mode {
            LocateMode::Flat => self.knn_locate(query, k.position),
            LocateMode::Hierarchical => self.hierarchical_locate(query, k),
        }
    }

    /// Locates every query in parallel; output order follows `queries`.
    pub fn locate_all(&self, queries: &[Fingerprint], mode: LocateMode, k: StageK) -> Result<Vec<PositionEstimate>> {
        queries.par_iter().map(|q| self.locate(q, mode, k)).collect()
    }
}

/// The `k` records most similar to `query`, ascending by dissimilarity.
pub fn rank_neighbors(
    query: &Fingerprint,
    rfm: &ReferenceFingerprintMap,
    backend: Backend,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    Positioner::new(rfm, backend)?.rank_neighbors(query, k)
}

/// Unweighted mean of the `k` nearest records' coordinates.
pub fn knn_locate(
    query: &Fingerprint,
    rfm: &ReferenceFingerprintMap,
    backend: Backend,
    k: usize,
) -> Result<PositionEstimate> {
    Positioner::new(rfm, backend)?.knn_locate(query, k)
}

/// Building, then floor, then planar position.
pub fn hierarchical_locate(
    query: &Fingerprint,
    rfm: &ReferenceFingerprintMap,
    backend: Backend,
    k: StageK,
) -> Result<PositionEstimate> {
    Positioner::new(rfm, backend)?.hierarchical_locate(query, k)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyReferenceMap);
    }
    if k == 0 || k > n {
        return Err(Error::NeighborCount { k, available: n });
    }
    Ok(())
}

pub(crate) fn check_hierarchy_labels(rfm: &ReferenceFingerprintMap) -> Result<()> {
    for (i, (_, l)) in rfm.records().iter().enumerate() {
        if l.building.is_none() {
            return Err(Error::MissingLabel {
                index: i,
                label: "building",
            });
        }
        if l.floor.is_none() {
            return Err(Error::MissingLabel {
                index: i,
                label: "floor",
            });
        }
    }
    Ok(())
}

/// The `k` smallest `(index, score)` among `candidates`, ascending by score
/// and then by index. `k` is clamped to the candidate count.
pub fn smallest_k(scores: &[f64], candidates: impl Iterator<Item = usize>, k: usize) -> Vec<(usize, f64)> {
    let mut pool: Vec<(usize, f64)> = candidates.map(|i| (i, scores[i])).collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    let k = k.min(pool.len());
    if k == 0 {
        return Vec::new();
    }
    if k < pool.len() {
        pool.select_nth_unstable_by(k - 1, cmp);
        pool.truncate(k);
    }
    pool.sort_unstable_by(cmp);
    pool
}

pub(crate) fn average_neighbors(rfm: &ReferenceFingerprintMap, neighbors: Vec<(usize, f64)>) -> PositionEstimate {
    let n = neighbors.len() as f64;
    let (sx, sy) = neighbors.iter().fold((0.0, 0.0), |(sx, sy), &(i, _)| {
        let l = rfm.label(i);
        (sx + l.x, sy + l.y)
    });
    PositionEstimate {
        building: None,
        floor: None,
        x: sx / n,
        y: sy / n,
        neighbor_indices: neighbors.iter().map(|&(i, _)| i).collect(),
        neighbor_dissimilarities: neighbors.iter().map(|&(_, d)| d).collect(),
    }
}

/// Most frequent value among ranked neighbours; ties go to the value whose
/// best-ranked neighbour comes first.
fn majority_vote(ranked: &[(usize, f64)], value: impl Fn(usize) -> i64) -> i64 {
    let mut tally: HashMap<i64, (usize, usize)> = HashMap::new();
    for (rank, &(i, _)) in ranked.iter().enumerate() {
        tally.entry(value(i)).or_insert((0, rank)).0 += 1;
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(v, _)| v)
        .expect("vote over at least one neighbour")
}

/// Labels must be present (see [`check_hierarchy_labels`]).
pub(crate) fn hierarchical_from_scores(rfm: &ReferenceFingerprintMap, scores: &[f64], k: StageK) -> PositionEstimate {
    let label = |i: usize| -> &GeoLabel { rfm.label(i) };
    let all = 0..rfm.len();

    let global = smallest_k(scores, all.clone(), k.building);
    let building = majority_vote(&global, |i| label(i).building.unwrap());

    let in_building = all.clone().filter(|&i| label(i).building == Some(building));
    let local = smallest_k(scores, in_building, k.floor);
    let floor = majority_vote(&local, |i| label(i).floor.unwrap());

    let on_floor = all.filter(|&i| label(i).building == Some(building) && label(i).floor == Some(floor));
    let nearest = smallest_k(scores, on_floor, k.position);
    PositionEstimate {
        building: Some(building),
        floor: Some(floor),
        ..average_neighbors(rfm, nearest)
    }
}

/// Flat or hierarchical estimate from precomputed scores.
pub(crate) fn locate_from_scores(
    rfm: &ReferenceFingerprintMap,
    scores: &[f64],
    mode: LocateMode,
    k: StageK,
) -> PositionEstimate {
    match mode {
        LocateMode::Flat => average_neighbors(rfm, smallest_k(scores, 0..scores.len(), k.position)),
        LocateMode::Hierarchical => hierarchical_from_scores(rfm, scores, k),
    }
}

/// Compound parts of `query` against every record of `rfm`.
pub(crate) fn parts_against(
    query: &Fingerprint,
    rfm: &ReferenceFingerprintMap,
    cfg: &CompoundConfig,
) -> Vec<PairParts> {
    rfm.records()
        .iter()
        .map(|(f, _)| pair_parts(query, f, cfg.kernel, cfg.gamma))
        .collect()
}
