//! Run configuration: defaults, TOML config files, and backend spec strings.

use std::fmt;
use std::path::{Path, PathBuf};

use cdm_core::dataset::{DatasetManifest, DEFAULT_REPLICA_WINDOW_S};
use cdm_core::tuning::{default_alpha_grid, Criterion};
use cdm_core::{Backend, CompoundConfig, Kernel, LocateMode, StageK, Variant};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a subcommand needs, fully serializable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in manifest name or path to a manifest TOML file.
    pub manifest: String,
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub backend: BackendSettings,
    /// Backend spec strings for `compare` and `ecdf`.
    pub backends: Vec<String>,
    /// Adds every kernel with and without the compound measure.
    pub all_kernels: bool,
    pub k: usize,
    pub k_building: Option<usize>,
    pub k_floor: Option<usize>,
    pub hierarchical: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub folds: usize,
    pub grid: Vec<f64>,
    pub criterion: Criterion,
    pub window_seconds: i64,
    pub split_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: "ujiindoorloc".to_owned(),
            input: None,
            train: None,
            validation: None,
            backend: BackendSettings::default(),
            backends: Vec::new(),
            all_kernels: false,
            k: 1,
            k_building: None,
            k_floor: None,
            hierarchical: false,
            seed: 0,
            out: PathBuf::from("out"),
            folds: 10,
            grid: default_alpha_grid(),
            criterion: Criterion::MinMeanRmse,
            window_seconds: DEFAULT_REPLICA_WINDOW_S,
            split_fraction: 0.75,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Cdm,
    Acdm,
    Rcdm,
    Baseline,
}

impl BackendKind {
    fn variant(self) -> Option<Variant> {
        match self {
            BackendKind::Cdm => Some(Variant::Cdm),
            BackendKind::Acdm => Some(Variant::Acdm),
            BackendKind::Rcdm => Some(Variant::Rcdm),
            BackendKind::Baseline => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            BackendKind::Cdm => "cdm",
            BackendKind::Acdm => "acdm",
            BackendKind::Rcdm => "rcdm",
            BackendKind::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cdm" => Ok(BackendKind::Cdm),
            "acdm" => Ok(BackendKind::Acdm),
            "rcdm" => Ok(BackendKind::Rcdm),
            "baseline" | "vector" => Ok(BackendKind::Baseline),
            other => Err(CliError::Usage(format!("unknown variant `{other}`"))),
        }
    }
}

/// One backend, before gamma is resolved against the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub variant: BackendKind,
    pub kernel: String,
    pub alpha: f64,
    /// Missing-value stand-in; the manifest sentinel when unset.
    pub gamma: Option<f64>,
    pub epsilon: f64,
    pub p: f64,
}

impl Default for BackendSettings {
    fn default() -> Self {
        BackendSettings {
            variant: BackendKind::Rcdm,
            kernel: "lorentzian".to_owned(),
            alpha: 0.5,
            gamma: None,
            epsilon: CompoundConfig::DEFAULT_EPSILON,
            p: Kernel::DEFAULT_MINKOWSKI_P,
        }
    }
}

impl BackendSettings {
    pub fn kernel(&self) -> Result<Kernel, CliError> {
        let k: Kernel = self.kernel.parse()?;
        Ok(match k {
            Kernel::Minkowski { .. } => Kernel::minkowski(self.p)?,
            k => k,
        })
    }

    pub fn resolve(&self, sentinel: f64) -> Result<Backend, CliError> {
        let kernel = self.kernel()?;
        let gamma = self.gamma.unwrap_or(sentinel);
        let backend = match self.variant.variant() {
            Some(v) => {
                Backend::Compound(CompoundConfig::new(v, kernel, self.alpha, gamma)?.with_epsilon(self.epsilon)?)
            }
            None => Backend::Baseline { kernel, gamma },
        };
        backend.validate()?;
        Ok(backend)
    }

    /// Parses `variant:kernel[:key=value[,key=value]...]`, with unspecified
    /// values taken from `self`. Keys: `alpha`, `gamma`, `epsilon`, `p`.
    pub fn parse_spec(&self, spec: &str) -> Result<BackendSettings, CliError> {
        let bad = |why: &str| CliError::Usage(format!("backend `{spec}`: {why}"));
        let mut parts = spec.splitn(3, ':');
        let variant: BackendKind = parts.next().unwrap_or("").parse()?;
        let kernel = parts
            .next()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| bad("missing kernel"))?;
        let mut out = BackendSettings {
            variant,
            kernel: kernel.trim().to_ascii_lowercase(),
            ..self.clone()
        };
        if let Some(opts) = parts.next() {
            for kv in opts.split(',').filter(|s| !s.trim().is_empty()) {
                let (key, value) = kv.split_once('=').ok_or_else(|| bad("options must be key=value"))?;
                let value: f64 = value.trim().parse().map_err(|_| bad("option value is not a number"))?;
                match key.trim() {
                    "alpha" => out.alpha = value,
                    "gamma" => out.gamma = Some(value),
                    "epsilon" | "eps" => out.epsilon = value,
                    "p" => out.p = value,
                    other => return Err(bad(&format!("unknown option `{other}`"))),
                }
            }
        }
        out.kernel()?;
        Ok(out)
    }
}

/// Stable display label, e.g. `rcdm:lorentzian(alpha=0.5)` or
/// `baseline:minkowski(p=3)`.
pub fn backend_label(backend: &Backend) -> String {
    let kernel = match backend.kernel() {
        Kernel::Minkowski { p } if p != Kernel::DEFAULT_MINKOWSKI_P => format!("minkowski(p={p})"),
        k => k.name().to_owned(),
    };
    match backend {
        Backend::Compound(c) => format!("{}:{}(alpha={})", c.variant, kernel, c.alpha),
        Backend::Baseline { .. } => format!("baseline:{kernel}"),
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `lo:hi:step` or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid alpha grid `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let grid = if s.matches(':').count() == 2 {
        let mut it = s.split(':');
        let (lo, hi, step) = (
            num(it.next().unwrap())?,
            num(it.next().unwrap())?,
            num(it.next().unwrap())?,
        );
        if step <= 0.0 || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn stage_k(&self) -> StageK {
        StageK {
            building: self.k_building.unwrap_or(self.k),
            floor: self.k_floor.unwrap_or(self.k),
            position: self.k,
        }
    }

    pub fn mode(&self) -> LocateMode {
        if self.hierarchical {
            LocateMode::Hierarchical
        } else {
            LocateMode::Flat
        }
    }

    /// A path that exists is read as a manifest file; otherwise a built-in
    /// name is looked up.
    pub fn load_manifest(&self) -> Result<DatasetManifest, CliError> {
        let path = Path::new(&self.manifest);
        if path.is_file() {
            return DatasetManifest::load(path).map_err(|e| CliError::Schema(e.to_string()));
        }
        DatasetManifest::builtin(&self.manifest).ok_or_else(|| {
            CliError::Usage(format!(
                "`{}` is neither a manifest file nor a built-in manifest (ujiindoorloc, alcala2017, tampere, hil)",
                self.manifest
            ))
        })
    }

    /// The backend list for `compare` and `ecdf`: every `backends` spec, then
    /// the kernel sweep if `all_kernels` is set.
    pub fn backend_list(&self) -> Result<Vec<BackendSettings>, CliError> {
        let mut list = self
            .backends
            .iter()
            .map(|s| self.backend.parse_spec(s))
            .collect::<Result<Vec<_>, _>>()?;
        if self.all_kernels {
            let compound = match self.backend.variant {
                BackendKind::Baseline => BackendKind::Rcdm,
                v => v,
            };
            for kernel in Kernel::all() {
                for variant in [compound, BackendKind::Baseline] {
                    list.push(BackendSettings {
                        variant,
                        kernel: kernel.name().to_owned(),
                        ..self.backend.clone()
                    });
                }
            }
        }
        Ok(list)
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        path.as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing required {flag}")))
    }
}
