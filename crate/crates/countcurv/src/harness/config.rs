//! Run configuration: one JSON document drives an experiment end to end.
//!
//! ```json
//! {
//!   "experiment": "bump",
//!   "dim": 2,
//!   "field": {"kind": "gaussian_bump", "eps": 0.05, "sigma": 0.15,
//!             "center": [0.5, 0.5], "r0": 0.3, "r1": 0.45},
//!   "box": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "margin": 0.1},
//!   "sampler": {"h_levels": [0.04, 0.02, 0.01, 0.005], "seed": 7},
//!   "radii": {"kind": "sqrt_rule", "kappa": 1.0, "window": [0.7, 1.5]},
//!   "centers": {"kind": "grid", "per_axis": 9, "extent": 0.24}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::oracle::{DomainBox, FieldSpec};
use crate::sampler::QuasiUniformity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Flatness,
    Bump,
    Sectional,
    Audit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub h_levels: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub qu: Option<QuasiUniformity>,
    /// Flat reference complexes per level for the empirical baseline.
    #[serde(default = "default_reference_seeds")]
    pub reference_seeds: u32,
    /// Lloyd relaxation passes applied after sampling.
    #[serde(default = "default_lloyd")]
    pub lloyd: u32,
}

fn default_lloyd() -> u32 {
    2
}

fn default_reference_seeds() -> u32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiiPolicy {
    /// Fixed list of count radii.
    Explicit { values: Vec<u32> },
    /// `r* = max(2, round(kappa / sqrt(h)))`, swept over
    /// `[ceil(w0 r*), floor(w1 r*)]`.
    SqrtRule { kappa: f64, window: [f64; 2] },
}

impl Default for RadiiPolicy {
    fn default() -> Self {
        RadiiPolicy::SqrtRule { kappa: 1.0, window: [0.7, 1.5] }
    }
}

impl RadiiPolicy {
    /// Policy radius and swept radii for a mesh scale.
    pub fn radii_for(&self, h: f64) -> (u32, Vec<u32>) {
        match self {
            RadiiPolicy::Explicit { values } => {
                let mut v = values.clone();
                v.sort_unstable();
                v.dedup();
                let mid = v.get(v.len() / 2).copied().unwrap_or(2);
                (mid, v)
            }
            RadiiPolicy::SqrtRule { kappa, window } => {
                let r_star = ((kappa / h.sqrt()).round() as u32).max(2);
                let lo = ((window[0] * r_star as f64).ceil() as u32).max(1);
                let hi = ((window[1] * r_star as f64).floor() as u32).max(lo);
                (r_star, (lo..=hi).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CentersPolicy {
    /// Cells nearest to a uniform grid of probe points around the field
    /// center, `per_axis` per dimension over `[-extent, extent]`.
    Grid { per_axis: usize, extent: f64 },
    /// Explicit cell ids.
    Cells { ids: Vec<u32> },
}

impl Default for CentersPolicy {
    fn default() -> Self {
        CentersPolicy::Grid { per_axis: 9, extent: 0.24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionalConfig {
    /// Tube half-thickness factor (defaults to the covering target).
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Slice extent as a multiple of `a * r_max`.
    #[serde(default = "default_extent_factor")]
    pub extent_factor: f64,
}

fn default_n_theta() -> usize {
    48
}

fn default_extent_factor() -> f64 {
    1.8
}

impl Default for SectionalConfig {
    fn default() -> Self {
        SectionalConfig {
            tau: None,
            n_theta: default_n_theta(),
            extent_factor: default_extent_factor(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    pub field: FieldSpec,
    #[serde(rename = "box")]
    pub box_: DomainBox,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub radii: RadiiPolicy,
    #[serde(default)]
    pub centers: CentersPolicy,
    #[serde(default)]
    pub sectional: SectionalConfig,
    /// Spatial smoothing radius for per-center estimates, in units of the
    /// probe-grid spacing (0 disables).
    #[serde(default)]
    pub averaging_radius: f64,
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn qu(&self) -> QuasiUniformity {
        self.sampler.qu.unwrap_or_default()
    }

    /// The canonical conformal-bump experiment at desk scale.
    pub fn default_bump_2d(seed: u64) -> RunConfig {
        RunConfig {
            experiment: ExperimentKind::Bump,
            dim: 2,
            field: FieldSpec::GaussianBump {
                eps: 0.05,
                sigma: 0.15,
                center: vec![0.5, 0.5],
                r0: 0.3,
                r1: 0.45,
            },
            box_: DomainBox::new(vec![-0.3, -0.3], vec![1.3, 1.3], 0.1).unwrap(),
            sampler: SamplerConfig {
                h_levels: vec![0.04, 0.02, 0.01, 0.005],
                seed,
                qu: None,
                reference_seeds: 2,
                lloyd: 2,
            },
            radii: RadiiPolicy::default(),
            centers: CentersPolicy::default(),
            sectional: SectionalConfig::default(),
            averaging_radius: 1.0,
        }
    }

    /// The 3D sectional experiment at desk scale.
    pub fn default_sectional_3d(seed: u64) -> RunConfig {
        RunConfig {
            experiment: ExperimentKind::Sectional,
            dim: 3,
            field: FieldSpec::GaussianBump {
                eps: 0.05,
                sigma: 0.15,
                center: vec![0.5, 0.5, 0.5],
                r0: 0.3,
                r1: 0.45,
            },
            box_: DomainBox::new(vec![0.0; 3], vec![1.0; 3], 0.12).unwrap(),
            sampler: SamplerConfig {
                h_levels: vec![0.045],
                seed,
                qu: None,
                reference_seeds: 1,
                lloyd: 2,
            },
            radii: RadiiPolicy::SqrtRule { kappa: 1.0, window: [0.7, 1.5] },
            centers: CentersPolicy::Grid { per_axis: 3, extent: 0.16 },
            sectional: SectionalConfig::default(),
            averaging_radius: 0.0,
        }
    }
}
