//! Random probe points in a random low-dimensional slice of the embedding
//! space.
//!
//! Each iteration first draws a subset of `m` distinct dimensions, then one
//! coordinate per selected dimension, in subset order. Coordinates are
//! independent, so only the selected dimensions are ever sampled.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{compute_dim_stats, DimStats, EmbeddingMatrix, GaussStats};
use crate::error::{Error, Result};

/// Per-dimension law that probe coordinates are drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    /// Apex at the column median, support `[min, max]`.
    #[default]
    Triangular,
    /// Moment-matched normal, untruncated.
    Gaussian,
    /// Flat on `[min, max]`.
    Uniform,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 3] = [
        DistributionKind::Triangular,
        DistributionKind::Gaussian,
        DistributionKind::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DistributionKind::Triangular => "triangular",
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "triangular" => Ok(DistributionKind::Triangular),
            "gaussian" => Ok(DistributionKind::Gaussian),
            "uniform" => Ok(DistributionKind::Uniform),
            other => Err(Error::Config(format!(
                "unknown distribution '{other}', expected triangular, gaussian or uniform"
            ))),
        }
    }
}

/// Quantile function of the triangular law on `[lo, hi]` with apex at `mode`.
pub fn triangular_inverse_cdf(u: f64, lo: f64, mode: f64, hi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("probability {u} outside [0, 1]")));
    }
    if !(lo <= mode && mode <= hi) {
        return Err(Error::Domain(format!(
            "triangular parameters need lo <= mode <= hi, got ({lo}, {mode}, {hi})"
        )));
    }
    Ok(triangular_quantile(u, lo, mode, hi))
}

#[inline]
pub(crate) fn triangular_quantile(u: f64, lo: f64, mode: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let x = if u <= (mode - lo) / width {
        lo + (u * width * (mode - lo)).sqrt()
    } else {
        hi - ((1.0 - u) * width * (hi - mode)).sqrt()
    };
    x.clamp(lo, hi)
}

/// Distribution function matching [`triangular_inverse_cdf`].
pub fn triangular_cdf(x: f64, lo: f64, mode: f64, hi: f64) -> f64 {
    if x < lo {
        0.0
    } else if x >= hi {
        1.0
    } else if x < mode {
        (x - lo) * (x - lo) / ((hi - lo) * (mode - lo))
    } else {
        1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - mode))
    }
}

/// Distinct embedding dimensions spanning one iteration's subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimSubset {
    indices: Vec<usize>,
}

impl DimSubset {
    /// Wraps explicit indices, checking they are distinct and below `n_dims`.
    pub fn new(indices: Vec<usize>, n_dims: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config("dimension subset is empty".into()));
        }
        for (pos, &d) in indices.iter().enumerate() {
            if d >= n_dims {
                return Err(Error::Config(format!("dimension {d} out of range for M={n_dims}")));
            }
            if indices[..pos].contains(&d) {
                return Err(Error::Config(format!("dimension {d} repeated in subset")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Draws `m` of `n_dims` dimensions without replacement.
pub fn draw_dim_subset<R: Rng + ?Sized>(n_dims: usize, m: usize, rng: &mut R) -> Result<DimSubset> {
    if m == 0 || m > n_dims {
        return Err(Error::Config(format!(
            "sample dimension m={m} must lie in [1, M={n_dims}]"
        )));
    }
    Ok(DimSubset {
        indices: index::sample(rng, n_dims, m).into_vec(),
    })
}

/// Probe coordinates aligned with a [`DimSubset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    pub coords: Vec<f64>,
}

/// A fitted probe law: the distribution kind plus the column parameters it
/// needs.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeLaw {
    Triangular(DimStats),
    Uniform(DimStats),
    Gaussian(GaussStats),
}

impl ProbeLaw {
    pub fn fit(matrix: &EmbeddingMatrix, kind: DistributionKind) -> Self {
        match kind {
            DistributionKind::Triangular => ProbeLaw::Triangular(compute_dim_stats(matrix)),
            DistributionKind::Uniform => ProbeLaw::Uniform(compute_dim_stats(matrix)),
            DistributionKind::Gaussian => ProbeLaw::Gaussian(GaussStats::compute(matrix)),
        }
    }

    pub fn from_stats(stats: DimStats, kind: DistributionKind) -> Result<Self> {
        match kind {
            DistributionKind::Triangular => Ok(ProbeLaw::Triangular(stats)),
            DistributionKind::Uniform => Ok(ProbeLaw::Uniform(stats)),
            DistributionKind::Gaussian => Err(Error::Config(
                "the gaussian law needs column means and deviations, not order statistics".into(),
            )),
        }
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            ProbeLaw::Triangular(_) => DistributionKind::Triangular,
            ProbeLaw::Uniform(_) => DistributionKind::Uniform,
            ProbeLaw::Gaussian(_) => DistributionKind::Gaussian,
        }
    }

    pub fn n_dims(&self) -> usize {
        match self {
            ProbeLaw::Triangular(s) | ProbeLaw::Uniform(s) => s.n_dims(),
            ProbeLaw::Gaussian(g) => g.means.len(),
        }
    }

    /// Draws one coordinate for dimension `dim`.
    #[inline]
    pub fn draw_coord<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> f64 {
        match self {
            ProbeLaw::Triangular(s) => {
                let u: f64 = rng.random();
                triangular_quantile(u, s.mins[dim], s.medians[dim], s.maxs[dim])
            }
            ProbeLaw::Uniform(s) => {
                let u: f64 = rng.random();
                let (lo, hi) = (s.mins[dim], s.maxs[dim]);
                (lo + u * (hi - lo)).clamp(lo, hi)
            }
            ProbeLaw::Gaussian(g) => {
                let z: f64 = rng.sample(StandardNormal);
                g.means[dim] + g.std_devs[dim] * z
            }
        }
    }

    /// Fills `out` with one coordinate per subset dimension, in subset order.
    pub fn draw_into<R: Rng + ?Sized>(&self, subset: &DimSubset, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        out.extend(subset.indices.iter().map(|&d| self.draw_coord(d, rng)));
    }
}

pub fn draw_probe<R: Rng + ?Sized>(law: &ProbeLaw, subset: &DimSubset, rng: &mut R) -> ProbePoint {
    let mut coords = Vec::with_capacity(subset.len());
    law.draw_into(subset, rng, &mut coords);
    ProbePoint { coords }
}
