//! Positioning error statistics and report assembly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::GeoLabel;
use crate::positioning::PositionEstimate;

/// Quantiles reported besides the median when none are requested.
pub const DEFAULT_QUANTILES: [f64; 3] = [0.8, 0.9, 0.95];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub error_m: f64,
    pub building_correct: Option<bool>,
    pub floor_correct: Option<bool>,
}

impl SampleOutcome {
    /// Planar error plus building/floor hits for the labels `truth` carries.
    /// A floor only counts as correct in the correct building.
    pub fn assess(est: &PositionEstimate, truth: &GeoLabel) -> Self {
        let building_correct = truth.building.map(|b| est.building == Some(b));
        let floor_correct = truth
            .floor
            .map(|f| est.floor == Some(f) && building_correct.unwrap_or(true));
        SampleOutcome {
            error_m: positioning_error(est, truth),
            building_correct,
            floor_correct,
        }
    }
}

/// Planar Euclidean distance between estimate and truth.
pub fn positioning_error(est: &PositionEstimate, truth: &GeoLabel) -> f64 {
    (est.x - truth.x).hypot(est.y - truth.y)
}

pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptySample);
    }
    let sq: f64 = errors.iter().map(|e| e * e).sum();
    Ok((sq / errors.len() as f64).sqrt())
}

pub fn mean(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Population standard deviation.
pub fn std_dev(errors: &[f64]) -> Result<f64> {
    let m = mean(errors)?;
    let var = errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / errors.len() as f64;
    Ok(var.sqrt())
}

fn sorted(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut v = errors.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Nearest-rank percentile: the `ceil(q * n)`-th smallest value, the minimum
/// for `q = 0`. `q = 0.5` is the median, which averages the two middle values
/// when `n` is even.
pub fn percentile(errors: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Quantile(q));
    }
    let v = sorted(errors)?;
    Ok(percentile_sorted(&v, q))
}

fn percentile_sorted(v: &[f64], q: f64) -> f64 {
    let n = v.len();
    let t = q * n as f64;
    let nearest = t.round();
    // Snap products within 1e-9 of an integer (0.8 * 10 is rank 8, not 9).
    let exact = (t - nearest).abs() <= 1e-9;
    if exact && n.is_multiple_of(2) && nearest as usize == n / 2 {
        return 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    let rank = if exact { nearest } else { t.ceil() };
    v[(rank.max(1.0) as usize).min(n) - 1]
}

pub fn median(errors: &[f64]) -> Result<f64> {
    percentile(errors, 0.5)
}

/// Support points of the empirical CDF: each distinct value with the
/// fraction of samples at or below it.
pub fn ecdf_points(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted(errors)?;
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &e) in v.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 = frac,
            _ => out.push((e, frac)),
        }
    }
    Ok(out)
}

/// `(success_rate, building_accuracy)`. Success needs both building and floor.
pub fn classification_rates(outcomes: &[SampleOutcome]) -> Result<(f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mut success, mut building) = (0usize, 0usize);
    for (i, o) in outcomes.iter().enumerate() {
        let b = o.building_correct.ok_or(Error::MissingLabel {
            index: i,
            label: "building",
        })?;
        let f = o.floor_correct.ok_or(Error::MissingLabel {
            index: i,
            label: "floor",
        })?;
        building += b as usize;
        success += (b && f) as usize;
    }
    let n = outcomes.len() as f64;
    Ok((success as f64 / n, building as f64 / n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentilePoint {
    pub q: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub error_m: f64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_samples: usize,
    pub rmse_m: f64,
    pub mean_m: f64,
    pub std_m: f64,
    pub median_m: f64,
    pub max_m: f64,
    pub percentiles: Vec<PercentilePoint>,
    /// Present when the samples carry building and floor labels.
    pub success_rate: Option<f64>,
    pub building_accuracy: Option<f64>,
    pub ecdf: Vec<EcdfPoint>,
}

impl EvaluationReport {
    pub fn from_outcomes(outcomes: &[SampleOutcome], quantiles: &[f64]) -> Result<Self> {
        let errors: Vec<f64> = outcomes.iter().map(|o| o.error_m).collect();
        let v = sorted(&errors)?;
        let labelled = outcomes
            .iter()
            .all(|o| o.building_correct.is_some() && o.floor_correct.is_some());
        let (success_rate, building_accuracy) = if labelled {
            let (s, b) = classification_rates(outcomes)?;
            (Some(s), Some(b))
        } else {
            (None, None)
        };
        let percentiles = quantiles
            .iter()
            .map(|&q| {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Quantile(q));
                }
                Ok(PercentilePoint {
                    q,
                    value: percentile_sorted(&v, q),
                })
            })
            .collect::<Result<_>>()?;
        Ok(EvaluationReport {
            n_samples: outcomes.len(),
            rmse_m: rmse(&errors)?,
            mean_m: mean(&errors)?,
            std_m: std_dev(&errors)?,
            median_m: percentile_sorted(&v, 0.5),
            max_m: *v.last().unwrap(),
            percentiles,
            success_rate,
            building_accuracy,
            ecdf: ecdf_points(&errors)?
                .into_iter()
                .map(|(error_m, fraction)| EcdfPoint { error_m, fraction })
                .collect(),
        })
    }

    pub fn percentile(&self, q: f64) -> Option<f64> {
        self.percentiles.iter().find(|p| p.q == q).map(|p| p.value)
    }
}

fn opt_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

/// Columns `sample_index, error_m, building_correct, floor_correct`.
pub fn write_samples_csv<W: Write>(out: W, outcomes: &[SampleOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_index", "error_m", "building_correct", "floor_correct"])?;
    for (i, o) in outcomes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            o.error_m.to_string(),
            opt_bool(o.building_correct).to_owned(),
            opt_bool(o.floor_correct).to_owned(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns `error_m, fraction`.
pub fn write_ecdf_csv<W: Write>(out: W, points: &[EcdfPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["error_m", "fraction"])?;
    for p in points {
        w.write_record([p.error_m.to_string(), p.fraction.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
