//! JSON experiment configuration and map descriptors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use giem_core::combinatorics::{Monodromy, PermPair};
use giem_core::giem::Giem;
use giem_core::smoothmap::SmoothMap;
use giem_core::{Precision, Real};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapDescriptor,
    pub n_max: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_precision")]
    pub precision: String,
    #[serde(default)]
    pub experiments: BTreeSet<Experiment>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Deepest level used by the symbolic diagnostics.
    #[serde(default = "default_symbolic_depth")]
    pub symbolic_depth: usize,
    /// Cap on the number of stored orbit intervals.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_grid() -> usize {
    129
}

fn default_precision() -> String {
    "binary64".to_string()
}

fn default_symbolic_depth() -> usize {
    16
}

fn default_budget() -> usize {
    1 << 22
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Renorm,
    Convergence,
    Partition,
    Symbolic,
    Prop31,
    Geometry,
}

/// Combinatorial data: either the two one-based position arrays indexed by
/// letter, or the monodromy `p = π₁ ∘ π₀⁻¹`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PermDescriptor {
    Pair { pi0: Vec<usize>, pi1: Vec<usize> },
    Monodromy { monodromy: Vec<usize> },
}

/// A real parameter given as a number or by name.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Named(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDescriptor {
    /// Two-interval rotation by `rho`, lengths `(1 - rho, rho)`.
    Rotation { rho: Scalar },
    Standard { lengths: Vec<f64>, perm: PermDescriptor },
    PiecewiseAffine { lengths: Vec<f64>, image_lengths: Vec<f64>, perm: PermDescriptor },
    PiecewiseMoebius {
        lengths: Vec<f64>,
        image_lengths: Vec<f64>,
        perm: PermDescriptor,
        nonlinearities: Vec<f64>,
    },
    ConjugatedRotation { rho: Scalar, conjugacy: SmoothMapDescriptor },
    /// Cuts the interval of `letter` at the absolute point `at`.
    Split { base: Box<MapDescriptor>, letter: String, at: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothMapDescriptor {
    Identity,
    Moebius { n: f64 },
    PureNonlinearity { n: f64 },
    Bump { amplitude: f64 },
    /// Applied first to last.
    Compose { maps: Vec<SmoothMapDescriptor> },
    Inverse { map: Box<SmoothMapDescriptor> },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n_max < 1 {
            return Err(CliError::Parse("n_max must be at least 1".into()));
        }
        if self.grid < 3 {
            return Err(CliError::Parse("grid must be at least 3".into()));
        }
        self.precision
            .parse::<Precision>()
            .map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(())
    }

    /// Configured precision unless `GIEM_PRECISION` is set.
    pub fn effective_precision(&self) -> Result<Precision, CliError> {
        let text = std::env::var("GIEM_PRECISION").unwrap_or_else(|_| self.precision.clone());
        text.parse::<Precision>().map_err(|e| CliError::Parse(format!("GIEM_PRECISION: {e}")))
    }
}

impl PermDescriptor {
    pub fn build(&self) -> Result<PermPair, CliError> {
        let pair = match self {
            PermDescriptor::Pair { pi0, pi1 } => PermPair::from_one_based(pi0, pi1),
            PermDescriptor::Monodromy { monodromy } => {
                Monodromy::new(monodromy.clone()).and_then(|p| PermPair::from_monodromy(&p))
            }
        };
        pair.map_err(CliError::Map)
    }
}

impl Scalar {
    pub fn value<T: Real>(&self) -> Result<T, CliError> {
        match self {
            Scalar::Number(x) => Ok(T::from_f64(*x)),
            Scalar::Named(name) => match name.as_str() {
                "golden" => Ok(T::golden()),
                "1-golden" => Ok(T::one() - T::golden()),
                other => Err(CliError::Parse(format!("unknown constant {other:?}"))),
            },
        }
    }
}

fn reals<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::from_f64(x)).collect()
}

impl MapDescriptor {
    pub fn kind(&self) -> &'static str {
        match self {
            MapDescriptor::Rotation { .. } => "rotation",
            MapDescriptor::Standard { .. } => "standard",
            MapDescriptor::PiecewiseAffine { .. } => "piecewise_affine",
            MapDescriptor::PiecewiseMoebius { .. } => "piecewise_moebius",
            MapDescriptor::ConjugatedRotation { .. } => "conjugated_rotation",
            MapDescriptor::Split { .. } => "split",
        }
    }

    /// Whether every branch is affine, so that all nonlinear diagnostics vanish.
    pub fn is_affine(&self) -> bool {
        match self {
            MapDescriptor::Rotation { .. }
            | MapDescriptor::Standard { .. }
            | MapDescriptor::PiecewiseAffine { .. } => true,
            MapDescriptor::Split { base, .. } => base.is_affine(),
            _ => false,
        }
    }

    /// Whether every branch is an isometry.
    pub fn is_isometric(&self) -> bool {
        match self {
            MapDescriptor::Rotation { .. } | MapDescriptor::Standard { .. } => true,
            MapDescriptor::Split { base, .. } => base.is_isometric(),
            _ => false,
        }
    }

    /// Whether every branch is fractional linear.
    pub fn is_moebius(&self) -> bool {
        match self {
            MapDescriptor::PiecewiseMoebius { .. } => true,
            MapDescriptor::Split { base, .. } => base.is_moebius() || base.is_affine(),
            _ => self.is_affine(),
        }
    }

    pub fn build<T: Real>(&self) -> Result<Giem<T>, CliError> {
        let g = match self {
            MapDescriptor::Rotation { rho } => {
                let r: T = rho.value()?;
                let perm = PermPair::new(vec![0, 1], vec![1, 0]).map_err(CliError::Map)?;
                Giem::standard_iem(vec![T::one() - r, r], perm)
            }
            MapDescriptor::Standard { lengths, perm } => Giem::standard_iem(reals(lengths), perm.build()?),
            MapDescriptor::PiecewiseAffine { lengths, image_lengths, perm } => {
                Giem::piecewise_affine(reals(lengths), reals(image_lengths), perm.build()?)
            }
            MapDescriptor::PiecewiseMoebius { lengths, image_lengths, perm, nonlinearities } => {
                Giem::piecewise_moebius(
                    reals(lengths),
                    reals(image_lengths),
                    perm.build()?,
                    reals(nonlinearities),
                )
            }
            MapDescriptor::ConjugatedRotation { rho, conjugacy } => {
                Giem::conjugated_rotation(&conjugacy.build()?, rho.value()?)
            }
            MapDescriptor::Split { base, letter, at } => {
                let g: Giem<T> = base.build()?;
                let a = g
                    .alphabet()
                    .index_of(letter)
                    .ok_or_else(|| CliError::Parse(format!("unknown letter {letter:?}")))?;
                g.split_letter(a, T::from_f64(*at))
            }
        };
        g.map_err(CliError::Map)
    }
}

impl SmoothMapDescriptor {
    pub fn build<T: Real>(&self) -> Result<SmoothMap<T>, CliError> {
        Ok(match self {
            SmoothMapDescriptor::Identity => SmoothMap::identity(),
            SmoothMapDescriptor::Moebius { n } => SmoothMap::moebius(T::from_f64(*n)),
            SmoothMapDescriptor::PureNonlinearity { n } => SmoothMap::pure_nonlinearity(T::from_f64(*n)),
            SmoothMapDescriptor::Bump { amplitude } => {
                SmoothMap::bump(T::from_f64(*amplitude)).map_err(CliError::Map)?
            }
            SmoothMapDescriptor::Compose { maps } => {
                let parts = maps.iter().map(|m| m.build()).collect::<Result<Vec<_>, _>>()?;
                SmoothMap::compose(parts).map_err(CliError::Map)?
            }
            SmoothMapDescriptor::Inverse { map } => map.build::<T>()?.inverse(),
        })
    }
}
