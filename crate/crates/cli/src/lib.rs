//! Command-line harness for compound-dissimilarity kNN positioning
//! experiments: `clean`, `split`, `tune`, `evaluate`, `compare`, `ecdf`.
//!
//! Settings come from defaults, then an optional TOML `--config` file, then
//! command-line flags. Every JSON report embeds the resolved [`RunConfig`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use cdm_core::tuning::Criterion;
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cdm", version, about = "Compound dissimilarity kNN positioning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove invalid samples and replicas; writes cleaned.csv and clean_report.json.
    Clean(CleanArgs),
    /// Seeded train/validation split; writes train.csv, validation.csv and split_report.json.
    Split(SplitArgs),
    /// Cross-validate alpha on the training set; writes tune.json and tune_scores.csv.
    Tune(TuneArgs),
    /// Evaluate one backend; writes evaluate.json, samples.csv and ecdf.csv.
    Evaluate(EvaluateArgs),
    /// Evaluate two or more backends; writes compare.json and compare.csv.
    Compare(CompareArgs),
    /// One ECDF CSV per backend plus ecdf.json.
    Ecdf(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with RunConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in manifest (ujiindoorloc, alcala2017, tampere, hil) or manifest TOML path.
    #[arg(long)]
    pub manifest: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// cdm, acdm, rcdm or baseline.
    #[arg(long)]
    pub variant: Option<String>,
    /// lorentzian, hamming, jaccard, wavehedges, canberra, clark, cityblock, minkowski.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Missing-value stand-in; defaults to the manifest sentinel.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Minkowski order.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NeighborArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Building-vote k in hierarchical mode (defaults to --k).
    #[arg(long)]
    pub k_building: Option<usize>,
    /// Floor-vote k in hierarchical mode (defaults to --k).
    #[arg(long)]
    pub k_floor: Option<usize>,
    /// Building, then floor, then position.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hierarchical: Option<bool>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, alias = "train")]
    pub input: Option<PathBuf>,
    /// Replica window in seconds.
    #[arg(long)]
    pub window: Option<i64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Training share, rounded half up.
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// `lo:hi:step` or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
    /// rmse or success_rate.
    #[arg(long)]
    pub criterion: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub eval: EvaluateArgs,
    /// `variant:kernel[:key=value,...]`, repeatable; unset values come from the backend flags.
    #[arg(long = "backend")]
    pub backends: Vec<String>,
    /// Every kernel with the compound variant and as a baseline.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub all_kernels: Option<bool>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl CommonArgs {
    fn base(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.manifest, self.manifest.clone());
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.out, self.out.clone());
        Ok(cfg)
    }
}

impl BackendArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let b = &mut cfg.backend;
        if let Some(v) = &self.variant {
            b.variant = v.parse()?;
        }
        set(
            &mut b.kernel,
            self.kernel.as_ref().map(|k| k.trim().to_ascii_lowercase()),
        );
        set(&mut b.alpha, self.alpha);
        if self.gamma.is_some() {
            b.gamma = self.gamma;
        }
        set(&mut b.epsilon, self.epsilon);
        set(&mut b.p, self.p);
        b.kernel()?;
        Ok(())
    }
}

impl NeighborArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.k, self.k);
        if self.k_building.is_some() {
            cfg.k_building = self.k_building;
        }
        if self.k_floor.is_some() {
            cfg.k_floor = self.k_floor;
        }
        set(&mut cfg.hierarchical, self.hierarchical);
    }
}

impl EvaluateArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = self.common.base()?;
        self.backend.apply(&mut cfg)?;
        self.neighbors.apply(&mut cfg);
        if self.train.is_some() {
            cfg.train = self.train.clone();
        }
        if self.validation.is_some() {
            cfg.validation = self.validation.clone();
        }
        Ok(cfg)
    }
}

impl Command {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        Ok(match self {
            Command::Clean(a) => {
                let mut cfg = a.common.base()?;
                if a.input.is_some() {
                    cfg.input = a.input.clone();
                }
                set(&mut cfg.window_seconds, a.window);
                cfg
            }
            Command::Split(a) => {
                let mut cfg = a.common.base()?;
                if a.input.is_some() {
                    cfg.input = a.input.clone();
                }
                set(&mut cfg.split_fraction, a.fraction);
                cfg
            }
            Command::Tune(a) => {
                let mut cfg = a.common.base()?;
                a.backend.apply(&mut cfg)?;
                a.neighbors.apply(&mut cfg);
                if a.train.is_some() {
                    cfg.train = a.train.clone();
                }
                set(&mut cfg.folds, a.folds);
                if let Some(g) = &a.grid {
                    cfg.grid = config::parse_grid(g)?;
                }
                if let Some(c) = &a.criterion {
                    cfg.criterion = c.parse::<Criterion>()?;
                }
                cfg
            }
            Command::Evaluate(a) => a.resolve()?,
            Command::Compare(a) | Command::Ecdf(a) => {
                let mut cfg = a.eval.resolve()?;
                if !a.backends.is_empty() {
                    cfg.backends = a.backends.clone();
                }
                set(&mut cfg.all_kernels, a.all_kernels);
                cfg
            }
        })
    }

    /// Runs the command and returns the summary table.
    pub fn run(&self) -> Result<String, CliError> {
        let cfg = self.resolve()?;
        run_config(self, &cfg)
    }
}

pub fn run_config(command: &Command, cfg: &RunConfig) -> Result<String, CliError> {
    Ok(match command {
        Command::Clean(_) => commands::cmd_clean(cfg)?.1,
        Command::Split(_) => commands::cmd_split(cfg)?.1,
        Command::Tune(_) => commands::cmd_tune(cfg)?.1,
        Command::Evaluate(_) => commands::cmd_evaluate(cfg)?.1,
        Command::Compare(_) => commands::cmd_compare(cfg)?.1,
        Command::Ecdf(_) => commands::cmd_ecdf(cfg)?.1,
    })
}
