//! The subcommands. Each one reads its inputs from a resolved [`RunConfig`],
//! writes its files under `config.out`, and returns a summary table for
//! standard output.

use std::path::Path;

use cdm_core::dataset::{clean, load_dataset_path, train_validation_split, CleaningReport, Dataset, DatasetManifest};
use cdm_core::evaluation::{write_ecdf_csv, write_samples_csv, EvaluationReport, SampleOutcome, DEFAULT_QUANTILES};
use cdm_core::tuning::{cross_validate_alpha, write_scores_csv, TuningResult, TuningSpec};
use cdm_core::{Backend, Positioner, ReferenceFingerprintMap};
use serde::Serialize;

use crate::config::{backend_label, BackendSettings, RunConfig};
use crate::error::CliError;
use crate::output::{file_stem, fmt_m, fmt_pct, write_atomic, write_json, Table};

fn load(path: &Path, manifest: &DatasetManifest) -> Result<Dataset, CliError> {
    load_dataset_path(path, manifest).map_err(|e| match e {
        cdm_core::Error::Io { .. } => CliError::Runtime(e.to_string()),
        e => CliError::Schema(format!("{}: {e}", path.display())),
    })
}

fn write_dataset(path: &Path, ds: &Dataset) -> Result<(), CliError> {
    write_atomic(path, |w| Ok(ds.write_csv(w)?))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(cfg: &RunConfig, command: &str, file: &str, body: T) -> Result<(), CliError> {
    write_json(
        &cfg.out.join(file),
        &Envelope {
            command,
            config: cfg,
            body,
        },
    )
}

pub fn cmd_clean(cfg: &RunConfig) -> Result<(CleaningReport, String), CliError> {
    let manifest = cfg.load_manifest()?;
    let input = cfg.input.clone().or_else(|| cfg.train.clone());
    let ds = load(cfg.require(&input, "--input")?, &manifest)?;
    let (cleaned, report) = clean(&ds, cfg.window_seconds, cfg.seed)?;
    write_dataset(&cfg.out.join("cleaned.csv"), &cleaned)?;
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a CleaningReport,
    }
    emit(cfg, "clean", "clean_report.json", Body { report: &report })?;

    let mut t = Table::new(["stage", "samples"]);
    t.row(["input".to_owned(), report.n_input.to_string()]);
    t.row(["invalid removed".to_owned(), report.n_invalid_removed.to_string()]);
    t.row(["after invalid removal".to_owned(), report.n_after_invalid.to_string()]);
    t.row(["replica groups".to_owned(), report.n_replica_groups.to_string()]);
    t.row(["kept".to_owned(), report.n_unique_kept.to_string()]);
    Ok((report, t.render()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub n_input: usize,
    pub n_train: usize,
    pub n_validation: usize,
}

pub fn cmd_split(cfg: &RunConfig) -> Result<(SplitReport, String), CliError> {
    let manifest = cfg.load_manifest()?;
    let input = cfg.require(&cfg.input, "--input")?;
    let ds = load(input, &manifest)?;
    let n_input = ds.len();
    let (train, validation) = train_validation_split(ds.samples.clone(), cfg.split_fraction, cfg.seed)?;
    let report = SplitReport {
        n_input,
        n_train: train.len(),
        n_validation: validation.len(),
    };
    write_dataset(&cfg.out.join("train.csv"), &ds.with_samples(train))?;
    write_dataset(&cfg.out.join("validation.csv"), &ds.with_samples(validation))?;
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a SplitReport,
    }
    emit(cfg, "split", "split_report.json", Body { report: &report })?;

    let mut t = Table::new(["part", "samples"]);
    t.row(["input".to_owned(), n_input.to_string()]);
    t.row(["train".to_owned(), report.n_train.to_string()]);
    t.row(["validation".to_owned(), report.n_validation.to_string()]);
    Ok((report, t.render()))
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<(TuningResult, String), CliError> {
    let manifest = cfg.load_manifest()?;
    let base = match cfg.backend.resolve(manifest.sentinel)? {
        Backend::Compound(c) => c,
        Backend::Baseline { .. } => {
            return Err(CliError::Usage(
                "tune needs a compound variant (cdm, acdm or rcdm); baselines have no alpha".into(),
            ))
        }
    };
    let train = load(cfg.require(&cfg.train, "--train")?, &manifest)?;
    let rfm = train.to_rfm()?;
    let spec = TuningSpec {
        folds: cfg.folds,
        grid: cfg.grid.clone(),
        criterion: cfg.criterion,
        seed: cfg.seed,
        k: cfg.stage_k(),
        base,
    };
    let result = cross_validate_alpha(&rfm, &spec)?;
    write_atomic(&cfg.out.join("tune_scores.csv"), |w| Ok(write_scores_csv(w, &result)?))?;
    #[derive(Serialize)]
    struct Body<'a> {
        backend: String,
        result: &'a TuningResult,
    }
    emit(
        cfg,
        "tune",
        "tune.json",
        Body {
            backend: backend_label(&Backend::Compound(base)),
            result: &result,
        },
    )?;

    let mut t = Table::new(["alpha", "mean score"]);
    for a in &result.per_alpha {
        let mark = if a.alpha == result.best_alpha { " *" } else { "" };
        t.row([format!("{}{mark}", a.alpha), format!("{:.6}", a.mean)]);
    }
    Ok((result, t.render()))
}

/// One backend's outcome on the validation set.
#[derive(Clone, Debug, Serialize)]
pub struct BackendRun {
    pub label: String,
    pub backend: Backend,
    pub report: EvaluationReport,
    #[serde(skip)]
    pub outcomes: Vec<SampleOutcome>,
}

fn run_backend(
    cfg: &RunConfig,
    rfm: &ReferenceFingerprintMap,
    validation: &Dataset,
    settings: &BackendSettings,
    sentinel: f64,
) -> Result<BackendRun, CliError> {
    let backend = settings.resolve(sentinel)?;
    let positioner = Positioner::new(rfm, backend)?;
    let queries = validation.fingerprints();
    let estimates = positioner.locate_all(&queries, cfg.mode(), cfg.stage_k())?;
    let outcomes: Vec<SampleOutcome> = estimates
        .iter()
        .zip(&validation.samples)
        .map(|(e, s)| SampleOutcome::assess(e, &s.label))
        .collect();
    let report = EvaluationReport::from_outcomes(&outcomes, &DEFAULT_QUANTILES)?;
    Ok(BackendRun {
        label: backend_label(&backend),
        backend,
        report,
        outcomes,
    })
}

struct Inputs {
    rfm: ReferenceFingerprintMap,
    validation: Dataset,
    sentinel: f64,
}

fn inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let manifest = cfg.load_manifest()?;
    let train = load(cfg.require(&cfg.train, "--train")?, &manifest)?;
    let validation = load(cfg.require(&cfg.validation, "--validation")?, &manifest)?;
    if validation.is_empty() {
        return Err(CliError::Usage("validation set is empty".into()));
    }
    Ok(Inputs {
        rfm: train.to_rfm()?,
        validation,
        sentinel: manifest.sentinel,
    })
}

fn summary_table(runs: &[BackendRun]) -> Table {
    let mut t = Table::new([
        "backend", "rmse", "mean", "std", "median", "p80", "max", "success", "building",
    ]);
    for r in runs {
        let rep = &r.report;
        t.row([
            r.label.clone(),
            fmt_m(rep.rmse_m),
            fmt_m(rep.mean_m),
            fmt_m(rep.std_m),
            fmt_m(rep.median_m),
            rep.percentile(0.8).map_or_else(|| "-".to_owned(), fmt_m),
            fmt_m(rep.max_m),
            fmt_pct(rep.success_rate),
            fmt_pct(rep.building_accuracy),
        ]);
    }
    t
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(BackendRun, String), CliError> {
    let inp = inputs(cfg)?;
    let run = run_backend(cfg, &inp.rfm, &inp.validation, &cfg.backend, inp.sentinel)?;
    write_atomic(&cfg.out.join("samples.csv"), |w| {
        Ok(write_samples_csv(w, &run.outcomes)?)
    })?;
    write_atomic(&cfg.out.join("ecdf.csv"), |w| Ok(write_ecdf_csv(w, &run.report.ecdf)?))?;
    #[derive(Serialize)]
    struct Body<'a> {
        result: &'a BackendRun,
    }
    emit(cfg, "evaluate", "evaluate.json", Body { result: &run })?;
    let table = summary_table(std::slice::from_ref(&run)).render();
    Ok((run, table))
}

fn run_all(cfg: &RunConfig, min: usize) -> Result<Vec<BackendRun>, CliError> {
    let list = cfg.backend_list()?;
    if list.len() < min {
        return Err(CliError::Usage(format!(
            "need at least {min} backend(s) (--backend or --all-kernels), got {}",
            list.len()
        )));
    }
    let inp = inputs(cfg)?;
    list.iter()
        .map(|b| run_backend(cfg, &inp.rfm, &inp.validation, b, inp.sentinel))
        .collect()
}

const COMPARE_COLUMNS: [&str; 13] = [
    "backend",
    "n_samples",
    "rmse_m",
    "mean_m",
    "std_m",
    "median_m",
    "p80_m",
    "p90_m",
    "p95_m",
    "max_m",
    "success_rate",
    "building_accuracy",
    "alpha",
];

pub fn cmd_compare(cfg: &RunConfig) -> Result<(Vec<BackendRun>, String), CliError> {
    let runs = run_all(cfg, 2)?;
    write_atomic(&cfg.out.join("compare.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(COMPARE_COLUMNS).map_err(csv_err)?;
        for r in &runs {
            let rep = &r.report;
            let q = |q: f64| rep.percentile(q).map_or_else(String::new, |v| v.to_string());
            let o = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
            let alpha = match r.backend {
                Backend::Compound(c) => c.alpha.to_string(),
                Backend::Baseline { .. } => String::new(),
            };
            csv.write_record([
                r.label.clone(),
                rep.n_samples.to_string(),
                rep.rmse_m.to_string(),
                rep.mean_m.to_string(),
                rep.std_m.to_string(),
                rep.median_m.to_string(),
                q(0.8),
                q(0.9),
                q(0.95),
                rep.max_m.to_string(),
                o(rep.success_rate),
                o(rep.building_accuracy),
                alpha,
            ])
            .map_err(csv_err)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Body<'a> {
        backends: &'a [BackendRun],
    }
    emit(cfg, "compare", "compare.json", Body { backends: &runs })?;
    let table = summary_table(&runs).render();
    Ok((runs, table))
}

#[derive(Clone, Debug, Serialize)]
pub struct EcdfFile {
    pub label: String,
    pub file: String,
    pub n_points: usize,
    pub max_m: f64,
}

pub fn cmd_ecdf(cfg: &RunConfig) -> Result<(Vec<EcdfFile>, String), CliError> {
    let mut list = cfg.clone();
    if list.backends.is_empty() && !list.all_kernels {
        list.backends
            .push(format!("{}:{}", cfg.backend.variant, cfg.backend.kernel));
    }
    let runs = run_all(&list, 1)?;
    let mut files = Vec::with_capacity(runs.len());
    for (i, r) in runs.iter().enumerate() {
        let file = format!("ecdf_{i:02}_{}.csv", file_stem(&r.label));
        write_atomic(&cfg.out.join(&file), |w| Ok(write_ecdf_csv(w, &r.report.ecdf)?))?;
        files.push(EcdfFile {
            label: r.label.clone(),
            file,
            n_points: r.report.ecdf.len(),
            max_m: r.report.max_m,
        });
    }
    #[derive(Serialize)]
    struct Body<'a> {
        files: &'a [EcdfFile],
    }
    emit(cfg, "ecdf", "ecdf.json", Body { files: &files })?;

    let mut t = Table::new(["backend", "points", "max", "file"]);
    for f in &files {
        t.row([f.label.clone(), f.n_points.to_string(), fmt_m(f.max_m), f.file.clone()]);
    }
    Ok((files, t.render()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(e.to_string())
}
