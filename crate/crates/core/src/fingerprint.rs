//! Sparse fingerprints, location labels and reference fingerprint maps.
//!
//! A [`Fingerprint`] only ever stores observed attributes. Missing-value
//! sentinels are stripped when a fingerprint is built from raw readings and
//! reintroduced only by [`densify`] for vector-based baselines.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of an attribute, e.g. an access point MAC address or a CSV
/// column name. Ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeId(Arc<str>);

impl AttributeId {
    pub fn new(id: impl AsRef<str>) -> Self {
        AttributeId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AttributeId {
    fn from(s: &str) -> Self {
        AttributeId::new(s)
    }
}

impl From<String> for AttributeId {
    fn from(s: String) -> Self {
        AttributeId(Arc::from(s))
    }
}

/// A collection of observed `(attribute, value)` pairs, sorted by attribute.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fingerprint {
    entries: Vec<(AttributeId, f64)>,
}

impl Fingerprint {
    /// Builds a fingerprint from observed entries. Every value is kept.
    pub fn new<I, A>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, f64)>,
        A: Into<AttributeId>,
    {
        let mut entries: Vec<(AttributeId, f64)> = entries.into_iter().map(|(a, v)| (a.into(), v)).collect();
        if let Some(&(_, v)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateAttribute(w[0].0.clone()));
        }
        Ok(Fingerprint { entries })
    }

    /// Builds a fingerprint from raw readings, dropping every entry whose value
    /// equals the missing-value `sentinel`.
    pub fn from_readings<I, A>(readings: I, sentinel: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (A, f64)>,
        A: Into<AttributeId>,
    {
        Fingerprint::new(readings.into_iter().filter(|(_, v)| *v != sentinel))
    }

    pub fn empty() -> Self {
        Fingerprint::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &AttributeId) -> Option<f64> {
        self.entries
            .binary_search_by(|(a, _)| a.cmp(id))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn contains(&self, id: &AttributeId) -> bool {
        self.get(id).is_some()
    }

    /// Entries in attribute order.
    pub fn entries(&self) -> &[(AttributeId, f64)] {
        &self.entries
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeId> {
        self.entries.iter().map(|(a, _)| a)
    }
}

/// One step of a sorted merge over two fingerprints.
pub(crate) enum Merged<'a> {
    Shared(&'a AttributeId, f64, f64),
    LeftOnly(&'a AttributeId, f64),
    #[allow(dead_code)]
    RightOnly(&'a AttributeId, f64),
}

/// Walks both fingerprints in attribute order, classifying every attribute
/// of the union exactly once.
pub(crate) fn merge_walk<'a>(a: &'a Fingerprint, b: &'a Fingerprint, mut visit: impl FnMut(Merged<'a>)) {
    let (xs, ys) = (&a.entries, &b.entries);
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        let (ka, va) = (&xs[i].0, xs[i].1);
        let (kb, vb) = (&ys[j].0, ys[j].1);
        // Ids loaded from one CSV share their allocation; skip the string compare then.
        let ord = if Arc::ptr_eq(&ka.0, &kb.0) {
            Ordering::Equal
        } else {
            ka.cmp(kb)
        };
        match ord {
            Ordering::Less => {
                visit(Merged::LeftOnly(ka, va));
                i += 1;
            }
            Ordering::Greater => {
                visit(Merged::RightOnly(kb, vb));
                j += 1;
            }
            Ordering::Equal => {
                visit(Merged::Shared(ka, va, vb));
                i += 1;
                j += 1;
            }
        }
    }
    for (k, v) in &xs[i..] {
        visit(Merged::LeftOnly(k, *v));
    }
    for (k, v) in &ys[j..] {
        visit(Merged::RightOnly(k, *v));
    }
}

/// Attributes observed in both fingerprints, in attribute order.
pub fn shared_attributes(a: &Fingerprint, b: &Fingerprint) -> Vec<AttributeId> {
    let mut out = Vec::new();
    merge_walk(a, b, |m| {
        if let Merged::Shared(id, _, _) = m {
            out.push(id.clone());
        }
    });
    out
}

/// Attributes observed in `a` but not in `b`, in attribute order.
pub fn exclusive_attributes(a: &Fingerprint, b: &Fingerprint) -> Vec<AttributeId> {
    let mut out = Vec::new();
    merge_walk(a, b, |m| {
        if let Merged::LeftOnly(id, _) = m {
            out.push(id.clone());
        }
    });
    out
}

/// Ordered set of attribute ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universe(Vec<AttributeId>);

impl Universe {
    pub fn new<I, A>(ids: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<AttributeId>,
    {
        let mut ids: Vec<AttributeId> = ids.into_iter().map(Into::into).collect();
        ids.sort();
        ids.dedup();
        Universe(ids)
    }

    pub fn of<'a>(fingerprints: impl IntoIterator<Item = &'a Fingerprint>) -> Self {
        Universe::new(fingerprints.into_iter().flat_map(|f| f.attributes().cloned()))
    }

    pub fn union(&self, other: &Universe) -> Universe {
        Universe::new(self.0.iter().chain(&other.0).cloned())
    }

    pub fn ids(&self) -> &[AttributeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Expands `f` to a vector over `universe`, filling unobserved positions with
/// `gamma`. Attributes of `f` outside the universe are dropped.
pub fn densify(f: &Fingerprint, universe: &Universe, gamma: f64) -> Vec<f64> {
    let mut out = vec![gamma; universe.len()];
    let ids = universe.ids();
    let (mut i, mut j) = (0, 0);
    while i < ids.len() && j < f.entries.len() {
        match ids[i].cmp(&f.entries[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out[i] = f.entries[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Ground-truth (or estimated) position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoLabel {
    pub building: Option<i64>,
    pub floor: Option<i64>,
    pub x: f64,
    pub y: f64,
}

impl GeoLabel {
    pub fn planar(x: f64, y: f64) -> Self {
        GeoLabel {
            building: None,
            floor: None,
            x,
            y,
        }
    }

    pub fn indoor(building: i64, floor: i64, x: f64, y: f64) -> Self {
        GeoLabel {
            building: Some(building),
            floor: Some(floor),
            x,
            y,
        }
    }
}

/// Location-labelled reference fingerprints plus their attribute universe.
#[derive(Clone, Debug)]
pub struct ReferenceFingerprintMap {
    records: Vec<(Fingerprint, GeoLabel)>,
    universe: Universe,
}

impl ReferenceFingerprintMap {
    /// Fails when building or floor labels are present on some records but not
    /// on others.
    pub fn new(records: Vec<(Fingerprint, GeoLabel)>) -> Result<Self> {
        check_label_presence(records.iter().map(|(_, l)| l))?;
        let universe = Universe::of(records.iter().map(|(f, _)| f));
        Ok(ReferenceFingerprintMap { records, universe })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(Fingerprint, GeoLabel)] {
        &self.records
    }

    pub fn fingerprint(&self, index: usize) -> &Fingerprint {
        &self.records[index].0
    }

    pub fn label(&self, index: usize) -> &GeoLabel {
        &self.records[index].1
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn has_buildings(&self) -> bool {
        self.records.first().is_some_and(|(_, l)| l.building.is_some())
    }

    pub fn has_floors(&self) -> bool {
        self.records.first().is_some_and(|(_, l)| l.floor.is_some())
    }

    /// A new map holding the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> ReferenceFingerprintMap {
        let records: Vec<_> = indices.iter().map(|&i| self.records[i].clone()).collect();
        let universe = Universe::of(records.iter().map(|(f, _)| f));
        ReferenceFingerprintMap { records, universe }
    }
}

pub(crate) fn check_label_presence<'a>(labels: impl IntoIterator<Item = &'a GeoLabel>) -> Result<()> {
    let mut first: Option<(bool, bool)> = None;
    for (i, l) in labels.into_iter().enumerate() {
        let presence = (l.building.is_some(), l.floor.is_some());
        match first {
            None => first = Some(presence),
            Some(p) if p != presence => {
                return Err(Error::InconsistentLabels(format!(
                    "record {i} has building/floor presence {presence:?}, record 0 has {p:?}"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}
