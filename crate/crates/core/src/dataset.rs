//! Manifest-driven CSV ingestion, cleaning and splitting.
//!
//! A [`DatasetManifest`] names the columns that play each role in a CSV file:
//! attribute (access point) columns, coordinates, optional building and floor,
//! and the optional user/device/timestamp columns used for replica detection.
//! Attribute cells equal to the manifest's sentinel are treated as missing and
//! never enter a [`Fingerprint`].
//!
//! Loaded samples keep their raw CSV row, so a cleaned dataset is written back
//! cell for cell in the source schema.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{check_label_presence, AttributeId, Fingerprint, GeoLabel, ReferenceFingerprintMap};

/// Default replica window in seconds.
pub const DEFAULT_REPLICA_WINDOW_S: i64 = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default)]
    pub name: Option<String>,
    /// Explicit attribute columns, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attribute_columns: Vec<String>,
    /// Alternatively, every header column starting with this prefix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_prefix: Option<String>,
    pub coord_x_column: String,
    pub coord_y_column: String,
    #[serde(default)]
    pub building_column: Option<String>,
    #[serde(default)]
    pub floor_column: Option<String>,
    #[serde(default)]
    pub user_column: Option<String>,
    #[serde(default)]
    pub device_column: Option<String>,
    #[serde(default)]
    pub timestamp_column: Option<String>,
    /// Missing-value code in attribute cells.
    pub sentinel: f64,
    #[serde(default = "default_unit")]
    pub coordinate_unit: String,
}

fn default_unit() -> String {
    "m".to_owned()
}

impl DatasetManifest {
    /// Manifests for the four known dataset layouts: `ujiindoorloc`,
    /// `alcala2017`, `tampere` and `hil`.
    ///
    /// The UJIIndoorLoc layout is the published one. The other three assume
    /// CSV exports with `WAPnnn` access point columns and `X`/`Y` (plus `FLOOR`
    /// for Tampere) coordinate columns; pass a manifest file for other
    /// layouts.
    pub fn builtin(name: &str) -> Option<DatasetManifest> {
        let base = |name: &str, sentinel: f64| DatasetManifest {
            name: Some(name.to_owned()),
            attribute_columns: Vec::new(),
            attribute_prefix: Some("WAP".to_owned()),
            coord_x_column: "X".to_owned(),
            coord_y_column: "Y".to_owned(),
            building_column: None,
            floor_column: None,
            user_column: None,
            device_column: None,
            timestamp_column: None,
            sentinel,
            coordinate_unit: "m".to_owned(),
        };
        Some(match name.to_ascii_lowercase().as_str() {
            "ujiindoorloc" | "uji" => DatasetManifest {
                attribute_columns: (1..=520).map(|i| format!("WAP{i:03}")).collect(),
                attribute_prefix: None,
                coord_x_column: "LONGITUDE".to_owned(),
                coord_y_column: "LATITUDE".to_owned(),
                building_column: Some("BUILDINGID".to_owned()),
                floor_column: Some("FLOOR".to_owned()),
                user_column: Some("USERID".to_owned()),
                device_column: Some("PHONEID".to_owned()),
                timestamp_column: Some("TIMESTAMP".to_owned()),
                ..base("ujiindoorloc", 100.0)
            },
            "alcala2017" | "alcala" => base("alcala2017", 100.0),
            "tampere" => DatasetManifest {
                floor_column: Some("FLOOR".to_owned()),
                ..base("tampere", 100.0)
            },
            "hil" => DatasetManifest {
                coordinate_unit: "m".to_owned(),
                ..base("hil", -110.0)
            },
            _ => return None,
        })
    }

    pub fn from_toml_str(s: &str) -> Result<DatasetManifest> {
        let m: DatasetManifest = toml::from_str(s).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        DatasetManifest::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.attribute_columns.is_empty(), &self.attribute_prefix) {
            (true, None) => {
                return Err(Error::Config(
                    "manifest needs attribute_columns or attribute_prefix".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(Error::Config(
                    "manifest sets both attribute_columns and attribute_prefix".into(),
                ))
            }
            (_, Some(p)) if p.is_empty() => return Err(Error::Config("attribute_prefix is empty".into())),
            _ => {}
        }
        if !self.sentinel.is_finite() {
            return Err(Error::Config(format!("sentinel must be finite, got {}", self.sentinel)));
        }
        let mut seen = HashSet::new();
        for c in self.attribute_columns.iter().chain(self.role_columns().map(|(_, c)| c)) {
            if !seen.insert(c.as_str()) {
                return Err(Error::Config(format!("column `{c}` named twice in manifest")));
            }
        }
        Ok(())
    }

    fn role_columns(&self) -> impl Iterator<Item = (&'static str, &String)> {
        [
            ("coord_x_column", Some(&self.coord_x_column)),
            ("coord_y_column", Some(&self.coord_y_column)),
            ("building_column", self.building_column.as_ref()),
            ("floor_column", self.floor_column.as_ref()),
            ("user_column", self.user_column.as_ref()),
            ("device_column", self.device_column.as_ref()),
            ("timestamp_column", self.timestamp_column.as_ref()),
        ]
        .into_iter()
        .filter_map(|(role, c)| c.map(|c| (role, c)))
    }

    pub fn has_replica_metadata(&self) -> bool {
        self.user_column.is_some() && self.device_column.is_some() && self.timestamp_column.is_some()
    }
}

/// Column positions resolved against a header.
#[derive(Clone, Debug)]
struct Columns {
    attributes: Vec<(usize, AttributeId)>,
    x: usize,
    y: usize,
    building: Option<usize>,
    floor: Option<usize>,
    user: Option<usize>,
    device: Option<usize>,
    timestamp: Option<usize>,
}

impl Columns {
    fn resolve(header: &csv::StringRecord, m: &DatasetManifest) -> Result<Columns> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
        };
        let opt = |name: &Option<String>| name.as_deref().map(find).transpose();
        let attributes: Vec<(usize, AttributeId)> = match &m.attribute_prefix {
            Some(prefix) => {
                let cols: Vec<_> = header
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| h.trim().starts_with(prefix.as_str()))
                    .map(|(i, h)| (i, AttributeId::new(h.trim())))
                    .collect();
                if cols.is_empty() {
                    return Err(Error::Schema(format!("no columns start with `{prefix}`")));
                }
                cols
            }
            None => m
                .attribute_columns
                .iter()
                .map(|c| Ok((find(c)?, AttributeId::new(c))))
                .collect::<Result<_>>()?,
        };
        Ok(Columns {
            attributes,
            x: find(&m.coord_x_column)?,
            y: find(&m.coord_y_column)?,
            building: opt(&m.building_column)?,
            floor: opt(&m.floor_column)?,
            user: opt(&m.user_column)?,
            device: opt(&m.device_column)?,
            timestamp: opt(&m.timestamp_column)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub user: Option<String>,
    pub device: Option<String>,
    pub timestamp: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub fingerprint: Fingerprint,
    pub label: GeoLabel,
    pub meta: SampleMeta,
    /// 1-based data row number in the source file.
    pub row: usize,
    raw: csv::StringRecord,
}

impl Sample {
    pub fn raw(&self) -> &csv::StringRecord {
        &self.raw
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub header: csv::StringRecord,
    pub samples: Vec<Sample>,
    columns: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of attribute columns in the schema.
    pub fn attribute_count(&self) -> usize {
        self.columns.len()
    }

    pub fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            manifest: self.manifest.clone(),
            header: self.header.clone(),
            samples,
            columns: self.columns.clone(),
        }
    }

    /// Reference map over all samples, in order.
    pub fn to_rfm(&self) -> Result<ReferenceFingerprintMap> {
        ReferenceFingerprintMap::new(self.samples.iter().map(|s| (s.fingerprint.clone(), s.label)).collect())
    }

    pub fn fingerprints(&self) -> Vec<Fingerprint> {
        self.samples.iter().map(|s| s.fingerprint.clone()).collect()
    }

    pub fn labels(&self) -> Vec<GeoLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Writes the header and the raw rows of every sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for s in &self.samples {
            w.write_record(&s.raw)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn parse_f64(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        })
}

fn parse_int(cell: &str, row: usize, column: &str) -> Result<i64> {
    let t = cell.trim();
    t.parse::<i64>()
        .ok()
        .or_else(|| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
                .map(|v| v as i64)
        })
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        })
}

/// Reads a CSV with a header row according to `manifest`.
pub fn load_dataset<R: Read>(source: R, manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(source);
    let header = reader.headers()?.clone();
    let cols = Columns::resolve(&header, manifest)?;
    let name = |i: usize| header.get(i).unwrap_or("").trim().to_owned();

    let mut samples = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let row = n + 1;
        let raw = rec?;
        let cell = |i: usize| raw.get(i).unwrap_or("");
        let mut readings = Vec::with_capacity(cols.attributes.len());
        for (i, id) in &cols.attributes {
            let v = parse_f64(cell(*i), row, id.as_str())?;
            readings.push((id.clone(), v));
        }
        let fingerprint = Fingerprint::from_readings(readings, manifest.sentinel)?;
        let int_at = |i: Option<usize>| i.map(|i| parse_int(cell(i), row, &name(i))).transpose();
        let label = GeoLabel {
            building: int_at(cols.building)?,
            floor: int_at(cols.floor)?,
            x: parse_f64(cell(cols.x), row, &name(cols.x))?,
            y: parse_f64(cell(cols.y), row, &name(cols.y))?,
        };
        let meta = SampleMeta {
            user: cols.user.map(|i| cell(i).trim().to_owned()),
            device: cols.device.map(|i| cell(i).trim().to_owned()),
            timestamp: int_at(cols.timestamp)?,
        };
        samples.push(Sample {
            fingerprint,
            label,
            meta,
            row,
            raw,
        });
    }
    Ok(Dataset {
        manifest: manifest.clone(),
        header,
        samples,
        columns: cols.attributes.iter().map(|(i, _)| *i).collect(),
    })
}

pub fn load_dataset_path(path: &Path, manifest: &DatasetManifest) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    load_dataset(std::io::BufReader::new(file), manifest)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub n_input: usize,
    pub n_invalid_removed: usize,
    pub n_after_invalid: usize,
    /// Groups of two or more replicas.
    pub n_replica_groups: usize,
    pub n_unique_kept: usize,
    pub seed: u64,
    pub window_seconds: i64,
}

/// Drops samples whose every attribute was missing.
pub fn remove_invalid(samples: Vec<Sample>) -> (Vec<Sample>, usize) {
    let before = samples.len();
    let kept: Vec<Sample> = samples.into_iter().filter(|s| !s.fingerprint.is_empty()).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Keeps one seeded-random representative of each replica group.
///
/// Replicas share the exact raw location cells (x, y, building, floor), user
/// and device, and chain in time: consecutive members are less than
/// `window_seconds` apart. Output keeps the input order. Returns the kept
/// samples and the number of groups with at least two members.
pub fn dedup_replicas(
    samples: Vec<Sample>,
    columns: &ReplicaKeyColumns,
    window_seconds: i64,
    seed: u64,
) -> Result<(Vec<Sample>, usize)> {
    if window_seconds < 0 {
        return Err(Error::Config(format!(
            "replica window must be >= 0, got {window_seconds}"
        )));
    }
    type Key = (Vec<String>, String, String);
    let mut groups: BTreeMap<Key, Vec<(i64, usize)>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let (Some(user), Some(device), Some(ts)) = (&s.meta.user, &s.meta.device, s.meta.timestamp) else {
            return Err(Error::Config(format!(
                "replica detection needs user, device and timestamp columns (data row {})",
                s.row
            )));
        };
        let loc = columns
            .location
            .iter()
            .map(|&c| s.raw.get(c).unwrap_or("").trim().to_owned())
            .collect();
        groups
            .entry((loc, user.clone(), device.clone()))
            .or_default()
            .push((ts, i));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; samples.len()];
    let mut n_groups = 0;
    for members in groups.values_mut() {
        members.sort_unstable();
        let mut start = 0;
        for end in 1..=members.len() {
            let split = end == members.len() || members[end].0 - members[end - 1].0 >= window_seconds;
            if split {
                let chain = &members[start..end];
                if chain.len() > 1 {
                    n_groups += 1;
                }
                keep[chain[rng.random_range(0..chain.len())].1] = true;
                start = end;
            }
        }
    }
    let kept = samples
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    Ok((kept, n_groups))
}

/// Raw column positions that define "same location" for replicas.
#[derive(Clone, Debug)]
pub struct ReplicaKeyColumns {
    location: Vec<usize>,
}

impl ReplicaKeyColumns {
    pub fn for_dataset(ds: &Dataset) -> Result<ReplicaKeyColumns> {
        if !ds.manifest.has_replica_metadata() {
            return Err(Error::Config(
                "replica detection needs user_column, device_column and timestamp_column in the manifest".into(),
            ));
        }
        let m = &ds.manifest;
        let names = [
            Some(&m.coord_x_column),
            Some(&m.coord_y_column),
            m.building_column.as_ref(),
            m.floor_column.as_ref(),
        ];
        let location = names
            .into_iter()
            .flatten()
            .map(|n| {
                ds.header
                    .iter()
                    .position(|h| h.trim() == n)
                    .ok_or_else(|| Error::Schema(format!("missing column `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(ReplicaKeyColumns { location })
    }
}

/// Invalid-sample removal followed by replica deduplication.
pub fn clean(ds: &Dataset, window_seconds: i64, seed: u64) -> Result<(Dataset, CleaningReport)> {
    let key = ReplicaKeyColumns::for_dataset(ds)?;
    let n_input = ds.len();
    let (valid, n_invalid_removed) = remove_invalid(ds.samples.clone());
    let n_after_invalid = valid.len();
    let (unique, n_replica_groups) = dedup_replicas(valid, &key, window_seconds, seed)?;
    let report = CleaningReport {
        n_input,
        n_invalid_removed,
        n_after_invalid,
        n_replica_groups,
        n_unique_kept: unique.len(),
        seed,
        window_seconds,
    };
    Ok((ds.with_samples(unique), report))
}

/// Seeded split into `(train, validation)` with `round_half_up(fraction * n)`
/// training samples. Each side keeps the input order.
pub fn train_validation_split<T>(items: Vec<T>, fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let n = items.len();
    let n_train = split_size(n, fraction);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_train = vec![false; n];
    for &i in &order[..n_train] {
        is_train[i] = true;
    }
    let (mut train, mut validation) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (item, t) in items.into_iter().zip(is_train) {
        if t {
            train.push(item);
        } else {
            validation.push(item);
        }
    }
    Ok((train, validation))
}

/// `floor(fraction * n + 0.5)`.
pub fn split_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Checks that every sample carries the same label kinds.
pub fn check_labels(ds: &Dataset) -> Result<()> {
    check_label_presence(ds.samples.iter().map(|s| &s.label))
}
