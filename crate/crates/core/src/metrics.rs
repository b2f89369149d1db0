//! The eight base distance kernels.
//!
//! Each kernel is available in two shapes. [`Kernel::pair_term`] and
//! [`Kernel::finalize`] decompose the metric into a per-attribute summand and
//! a monotone outer transform, which is what the compound measures need.
//! [`Kernel::vector_metric`] is the plain metric over two equal-length
//! vectors and backs the gamma-filled baseline.
//!
//! | kernel      | pair term                   | finalize  |
//! |-------------|-----------------------------|-----------|
//! | Lorentzian  | `ln(1 + |x - y|)`           | identity  |
//! | Hamming     | `[x != y]`                  | identity  |
//! | Jaccard     | `[x != y]`                  | identity  |
//! | Wave Hedges | `|x - y| / max(|x|, |y|)`   | identity  |
//! | Canberra    | `|x - y| / (|x| + |y|)`     | identity  |
//! | Clark       | `(|x - y| / (|x| + |y|))^2` | `sqrt`    |
//! | City block  | `|x - y|`                   | identity  |
//! | Minkowski   | `|x - y|^p`                 | `s^(1/p)` |
//!
//! Ratio terms are 0 when `x == y`, which also covers the `0/0` case.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Lorentzian,
    Hamming,
    Jaccard,
    WaveHedges,
    Canberra,
    Clark,
    CityBlock,
    Minkowski { p: f64 },
}

impl Kernel {
    pub const DEFAULT_MINKOWSKI_P: f64 = 2.0;

    /// All eight kernels in table order, Minkowski with `p = 2`.
    pub fn all() -> [Kernel; 8] {
        [
            Kernel::Lorentzian,
            Kernel::Hamming,
            Kernel::Jaccard,
            Kernel::WaveHedges,
            Kernel::Canberra,
            Kernel::Clark,
            Kernel::CityBlock,
            Kernel::Minkowski {
                p: Self::DEFAULT_MINKOWSKI_P,
            },
        ]
    }

    pub fn minkowski(p: f64) -> Result<Kernel> {
        let k = Kernel::Minkowski { p };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Minkowski { p } if !(p.is_finite() && p > 0.0) => Err(Error::Config(format!(
                "Minkowski order p must be finite and > 0, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// CLI name, without the Minkowski order.
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Lorentzian => "lorentzian",
            Kernel::Hamming => "hamming",
            Kernel::Jaccard => "jaccard",
            Kernel::WaveHedges => "wavehedges",
            Kernel::Canberra => "canberra",
            Kernel::Clark => "clark",
            Kernel::CityBlock => "cityblock",
            Kernel::Minkowski { .. } => "minkowski",
        }
    }

    /// Whether the vector metric is the plain sum of pair terms.
    pub fn is_additive(&self) -> bool {
        matches!(
            self,
            Kernel::Lorentzian | Kernel::WaveHedges | Kernel::Canberra | Kernel::CityBlock
        )
    }

    /// Per-pair summand. Fails on non-finite input.
    pub fn pair_term(&self, x: f64, y: f64) -> Result<f64> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(self.term(x, y))
    }

    /// Unchecked [`Kernel::pair_term`]; inputs are known finite.
    #[inline]
    pub(crate) fn term(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        match *self {
            Kernel::Lorentzian => d.ln_1p(),
            Kernel::Hamming | Kernel::Jaccard => {
                if x != y {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::WaveHedges => {
                if d == 0.0 {
                    0.0
                } else {
                    d / x.abs().max(y.abs())
                }
            }
            Kernel::Canberra => canberra_ratio(x, y, d),
            Kernel::Clark => {
                let r = canberra_ratio(x, y, d);
                r * r
            }
            Kernel::CityBlock => d,
            Kernel::Minkowski { p } => {
                if p == 2.0 {
                    d * d
                } else if p == 1.0 {
                    d
                } else {
                    d.powf(p)
                }
            }
        }
    }

    /// Outer transform applied to an accumulated sum of pair terms.
    #[inline]
    pub fn finalize(&self, s: f64) -> f64 {
        match *self {
            Kernel::Clark => s.sqrt(),
            Kernel::Minkowski { p } => {
                if p == 2.0 {
                    s.sqrt()
                } else if p == 1.0 {
                    s
                } else {
                    s.powf(p.recip())
                }
            }
            _ => s,
        }
    }

    /// The full metric over two equal-length vectors. `gamma` is the
    /// missing-value indicator used by Jaccard; other kernels ignore it.
    pub fn vector_metric(&self, x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(&v) = x.iter().chain(y).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        Ok(self.vector_metric_unchecked(x, y, gamma))
    }

    pub(crate) fn vector_metric_unchecked(&self, x: &[f64], y: &[f64], gamma: f64) -> f64 {
        let pairs = x.iter().zip(y);
        match self {
            Kernel::Hamming => {
                let mismatches = pairs.filter(|(a, b)| a != b).count();
                mismatches as f64 / x.len() as f64
            }
            Kernel::Jaccard => {
                let (mut num, mut den) = (0usize, 0usize);
                for (&a, &b) in pairs {
                    if a != gamma || b != gamma {
                        den += 1;
                        if a != b {
                            num += 1;
                        }
                    }
                }
                if den == 0 {
                    0.0
                } else {
                    num as f64 / den as f64
                }
            }
            _ => self.finalize(pairs.map(|(&a, &b)| self.term(a, b)).sum()),
        }
    }
}

#[inline]
fn canberra_ratio(x: f64, y: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d / (x.abs() + y.abs())
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Minkowski { p } if *p != Self::DEFAULT_MINKOWSKI_P => write!(f, "minkowski(p={p})"),
            k => f.write_str(k.name()),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// Parses the CLI names. `minkowski` takes `p = 2`; use
    /// [`Kernel::minkowski`] for other orders.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "lorentzian" | "lor" => Kernel::Lorentzian,
            "hamming" | "ham" => Kernel::Hamming,
            "jaccard" | "jac" => Kernel::Jaccard,
            "wavehedges" | "wave_hedges" | "wh" => Kernel::WaveHedges,
            "canberra" | "can" => Kernel::Canberra,
            "clark" | "cla" => Kernel::Clark,
            "cityblock" | "city_block" | "manhattan" | "cb" => Kernel::CityBlock,
            "minkowski" | "min" => Kernel::Minkowski {
                p: Self::DEFAULT_MINKOWSKI_P,
            },
            other => return Err(Error::Config(format!("unknown kernel `{other}`"))),
        })
    }
}
