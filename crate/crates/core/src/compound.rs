//! Compound dissimilarity measures over sparse fingerprints.
//!
//! The union of the two attribute sets splits into three parts: attributes
//! observed by both, by the left only, and by the right only. Shared
//! attributes compare their two values with the kernel's pair term; an
//! unshared attribute compares its value against `gamma`. The unshared sums
//! are scaled by `alpha`:
//!
//! ```text
//! CDM   S = shared + alpha * (left_only + right_only)
//! ACDM  S = CDM / |A ∪ B|
//! RCDM  S = shared + alpha * (w_l * left_only + w_r * right_only)
//!       w_l = |A \ B| / (|A ∩ B| + eps),  w_r = |B \ A| / (|A ∩ B| + eps)
//! ```
//!
//! The kernel's finalize (Clark square root, Minkowski p-th root) is applied
//! once to `S`. Two empty fingerprints are at dissimilarity 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{merge_walk, Fingerprint, Merged};
use crate::metrics::Kernel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Cdm,
    Acdm,
    Rcdm,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Cdm => "cdm",
            Variant::Acdm => "acdm",
            Variant::Rcdm => "rcdm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cdm" => Ok(Variant::Cdm),
            "acdm" => Ok(Variant::Acdm),
            "rcdm" => Ok(Variant::Rcdm),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Measure variant, kernel and hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompoundConfig {
    pub variant: Variant,
    pub kernel: Kernel,
    /// Weight of the unshared-attribute terms, `>= 0`.
    pub alpha: f64,
    /// Stand-in value for a missing attribute.
    pub gamma: f64,
    /// Guard in the RCDM weight denominators, `> 0`.
    pub epsilon: f64,
}

impl CompoundConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(variant: Variant, kernel: Kernel, alpha: f64, gamma: f64) -> Result<Self> {
        let cfg = CompoundConfig {
            variant,
            kernel,
            alpha,
            gamma,
            epsilon: Self::DEFAULT_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        let cfg = CompoundConfig { epsilon, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        let cfg = CompoundConfig { alpha, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be finite, got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be finite and > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Accumulated sum `S` for precomputed parts, before finalization.
    #[inline]
    pub fn accumulate_parts(&self, parts: &PairParts) -> f64 {
        match self.variant {
            Variant::Cdm => parts.shared + self.alpha * (parts.left_only + parts.right_only),
            Variant::Acdm => {
                let union = parts.union_len();
                if union == 0 {
                    0.0
                } else {
                    (parts.shared + self.alpha * (parts.left_only + parts.right_only)) / union as f64
                }
            }
            Variant::Rcdm => {
                let denom = parts.n_shared as f64 + self.epsilon;
                let w_left = parts.n_left_only as f64 / denom;
                let w_right = parts.n_right_only as f64 / denom;
                parts.shared + self.alpha * (w_left * parts.left_only + w_right * parts.right_only)
            }
        }
    }

    /// Finalized dissimilarity for precomputed parts.
    #[inline]
    pub fn from_parts(&self, parts: &PairParts) -> f64 {
        self.kernel.finalize(self.accumulate_parts(parts))
    }
}

/// Per-part sums and cardinalities of one fingerprint pair. They depend only
/// on the kernel and gamma, so one set of parts serves every alpha and
/// variant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairParts {
    pub shared: f64,
    pub left_only: f64,
    pub right_only: f64,
    pub n_shared: usize,
    pub n_left_only: usize,
    pub n_right_only: usize,
}

impl PairParts {
    pub fn union_len(&self) -> usize {
        self.n_shared + self.n_left_only + self.n_right_only
    }
}

pub fn pair_parts(a: &Fingerprint, b: &Fingerprint, kernel: Kernel, gamma: f64) -> PairParts {
    let mut p = PairParts::default();
    merge_walk(a, b, |m| match m {
        Merged::Shared(_, x, y) => {
            p.shared += kernel.term(x, y);
            p.n_shared += 1;
        }
        Merged::LeftOnly(_, x) => {
            p.left_only += kernel.term(x, gamma);
            p.n_left_only += 1;
        }
        Merged::RightOnly(_, y) => {
            p.right_only += kernel.term(y, gamma);
            p.n_right_only += 1;
        }
    });
    p
}

/// `S` for the configured variant, before the kernel's finalize.
pub fn accumulate(a: &Fingerprint, b: &Fingerprint, cfg: &CompoundConfig) -> f64 {
    cfg.accumulate_parts(&pair_parts(a, b, cfg.kernel, cfg.gamma))
}

fn with_variant(cfg: &CompoundConfig, variant: Variant) -> CompoundConfig {
    CompoundConfig { variant, ..*cfg }
}

/// Basic compound measure. `cfg.variant` is ignored.
pub fn cdm(a: &Fingerprint, b: &Fingerprint, cfg: &CompoundConfig) -> f64 {
    dissimilarity(a, b, &with_variant(cfg, Variant::Cdm))
}

/// Average compound measure. `cfg.variant` is ignored.
pub fn acdm(a: &Fingerprint, b: &Fingerprint, cfg: &CompoundConfig) -> f64 {
    dissimilarity(a, b, &with_variant(cfg, Variant::Acdm))
}

/// Relatively weighted compound measure. `cfg.variant` is ignored.
pub fn rcdm(a: &Fingerprint, b: &Fingerprint, cfg: &CompoundConfig) -> f64 {
    dissimilarity(a, b, &with_variant(cfg, Variant::Rcdm))
}

/// Dissimilarity of the variant selected by `cfg`.
pub fn dissimilarity(a: &Fingerprint, b: &Fingerprint, cfg: &CompoundConfig) -> f64 {
    cfg.from_parts(&pair_parts(a, b, cfg.kernel, cfg.gamma))
}
