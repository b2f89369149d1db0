//! k-fold cross-validation grid search over the regularization value alpha.
//!
//! The compound parts of a query/reference pair do not depend on alpha, so
//! each held-out query is merged against its fold's training records once and
//! every grid value is scored from those parts.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::CompoundConfig;
use crate::error::{Error, Result};
use crate::evaluation::{classification_rates, rmse, SampleOutcome};
use crate::fingerprint::ReferenceFingerprintMap;
use crate::positioning::{check_hierarchy_labels, locate_from_scores, parts_against, LocateMode, StageK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Lowest mean fold RMSE.
    MinMeanRmse,
    /// Highest mean fold success rate (building and floor both right).
    MaxMeanSuccessRate,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rmse" | "min_mean_rmse" => Ok(Criterion::MinMeanRmse),
            "success" | "success_rate" | "max_mean_success_rate" => Ok(Criterion::MaxMeanSuccessRate),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// `0.0, 0.1, ..., 3.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=30).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningSpec {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub criterion: Criterion,
    pub seed: u64,
    pub k: StageK,
    /// Variant, kernel, gamma and epsilon; its alpha is replaced by each grid value.
    pub base: CompoundConfig,
}

impl TuningSpec {
    pub fn new(base: CompoundConfig, criterion: Criterion) -> Self {
        TuningSpec {
            folds: 10,
            grid: default_alpha_grid(),
            criterion,
            seed: 0,
            k: StageK::uniform(1),
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("alpha grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("alpha grid must be strictly increasing".into()));
        }
        for &a in &self.grid {
            self.base.with_alpha(a)?;
        }
        if self.k.building == 0 || self.k.floor == 0 || self.k.position == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaScores {
    pub alpha: f64,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub criterion: Criterion,
    pub mode: LocateMode,
    pub per_alpha: Vec<AlphaScores>,
    pub best_alpha: f64,
    pub best_score: f64,
    /// Held-out record indices of each fold.
    pub folds: Vec<Vec<usize>>,
}

impl TuningResult {
    pub fn scores_for(&self, alpha: f64) -> Option<&AlphaScores> {
        self.per_alpha.iter().find(|s| s.alpha == alpha)
    }
}

/// Seeded shuffle of `0..n` cut into `folds` contiguous chunks; the first
/// `n % folds` chunks hold one extra index.
pub fn kfold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds == 0 || folds > n {
        return Err(Error::FoldCount { folds, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

/// Indices of every record outside fold `fold`, ascending.
pub fn training_indices(partition: &[Vec<usize>], fold: usize) -> Vec<usize> {
    let mut train: Vec<usize> = partition
        .iter()
        .enumerate()
        .filter(|&(f, _)| f != fold)
        .flat_map(|(_, ix)| ix.iter().copied())
        .collect();
    train.sort_unstable();
    train
}

/// Scores every grid value on every fold and picks the best alpha. Ties
/// go to the smaller alpha.
pub fn cross_validate_alpha(rfm: &ReferenceFingerprintMap, spec: &TuningSpec) -> Result<TuningResult> {
    spec.validate()?;
    let hierarchical = rfm.has_buildings() && rfm.has_floors();
    if hierarchical {
        check_hierarchy_labels(rfm)?;
    }
    let mode = if hierarchical {
        LocateMode::Hierarchical
    } else {
        LocateMode::Flat
    };
    if spec.criterion == Criterion::MaxMeanSuccessRate && !hierarchical {
        return Err(Error::Config(
            "success-rate criterion needs building and floor labels".into(),
        ));
    }
    let partition = kfold_partition(rfm.len(), spec.folds, spec.seed)?;
    if rfm.records().iter().any(|(f, _)| f.is_empty()) {
        return Err(Error::EmptyFingerprint);
    }
    let configs: Vec<CompoundConfig> = spec
        .grid
        .iter()
        .map(|&a| spec.base.with_alpha(a))
        .collect::<Result<_>>()?;

    // fold_scores[fold][alpha]
    let fold_scores: Vec<Vec<f64>> = (0..spec.folds)
        .into_par_iter()
        .map(|fold| {
            let train_idx = training_indices(&partition, fold);
            let train = rfm.subset(&train_idx);
            if spec.k.building > train.len() {
                return Err(Error::NeighborCount {
                    k: spec.k.building,
                    available: train.len(),
                });
            }
            // outcomes[query][alpha]
            let outcomes: Vec<Vec<SampleOutcome>> = partition[fold]
                .par_iter()
                .map(|&qi| {
                    let (query, truth) = &rfm.records()[qi];
                    let parts = parts_against(query, &train, &spec.base);
                    let mut scores = vec![0.0; parts.len()];
                    configs
                        .iter()
                        .map(|cfg| {
                            for (s, p) in scores.iter_mut().zip(&parts) {
                                *s = cfg.from_parts(p);
                            }
                            let est = locate_from_scores(&train, &scores, mode, spec.k);
                            SampleOutcome::assess(&est, truth)
                        })
                        .collect()
                })
                .collect();
            (0..configs.len())
                .map(|a| {
                    let column: Vec<SampleOutcome> = outcomes.iter().map(|o| o[a]).collect();
                    fold_score(&column, spec.criterion)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let per_alpha: Vec<AlphaScores> = spec
        .grid
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let scores: Vec<f64> = fold_scores.iter().map(|f| f[a]).collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            AlphaScores {
                alpha,
                fold_scores: scores,
                mean,
            }
        })
        .collect();

    let mut best = &per_alpha[0];
    for s in &per_alpha[1..] {
        let better = match spec.criterion {
            Criterion::MinMeanRmse => s.mean < best.mean,
            Criterion::MaxMeanSuccessRate => s.mean > best.mean,
        };
        if better {
            best = s;
        }
    }
    Ok(TuningResult {
        criterion: spec.criterion,
        mode,
        best_alpha: best.alpha,
        best_score: best.mean,
        per_alpha,
        folds: partition,
    })
}

fn fold_score(outcomes: &[SampleOutcome], criterion: Criterion) -> Result<f64> {
    match criterion {
        Criterion::MinMeanRmse => rmse(&outcomes.iter().map(|o| o.error_m).collect::<Vec<_>>()),
        Criterion::MaxMeanSuccessRate => classification_rates(outcomes).map(|(s, _)| s),
    }
}

/// Long format: `alpha, fold, score`.
pub fn write_scores_csv<W: Write>(out: W, result: &TuningResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "fold", "score"])?;
    for s in &result.per_alpha {
        for (fold, score) in s.fold_scores.iter().enumerate() {
            w.write_record([s.alpha.to_string(), fold.to_string(), score.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
