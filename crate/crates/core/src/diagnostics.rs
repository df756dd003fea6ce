//! Goodness-of-fit summaries for comparing probe laws against real columns.

use crate::embedding::{compute_dim_stats, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sampling::{DimSubset, DistributionKind, ProbeLaw};

/// One-sample Kolmogorov–Smirnov statistic against an analytic CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |worst: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        worst.max(above).max(below)
    })
}

/// Two-sample Kolmogorov–Smirnov statistic. `None` when either side is empty.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    Some(worst)
}

pub fn fraction_below(values: &[f64], threshold: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().filter(|&&v| v < threshold).count() as f64 / values.len() as f64)
}

/// Real column values next to draws of a probe law on the same column.
#[derive(Debug, Clone)]
pub struct DistCheck {
    pub dim: usize,
    pub kind: DistributionKind,
    pub data: Vec<f64>,
    pub samples: Vec<f64>,
    pub median: f64,
    pub ks: Option<f64>,
    pub fraction_below_median: Option<f64>,
}

impl DistCheck {
    /// `value,source` rows, data first, then samples.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("value,source\n");
        for v in &self.data {
            let _ = writeln!(out, "{v},data");
        }
        for v in &self.samples {
            let _ = writeln!(out, "{v},sample");
        }
        out
    }
}

/// Fits `kind` on `matrix` and draws `samples` coordinates for column `dim`.
pub fn check_distribution(
    matrix: &EmbeddingMatrix,
    dim: usize,
    kind: DistributionKind,
    samples: usize,
    seed: u64,
) -> Result<DistCheck> {
    if dim >= matrix.n_dims() {
        return Err(Error::Domain(format!(
            "dimension {dim} out of range for M={}",
            matrix.n_dims()
        )));
    }
    let law = ProbeLaw::fit(matrix, kind);
    let subset = DimSubset::new(vec![dim], matrix.n_dims())?;
    let mut rng = stream(seed, Purpose::Auxiliary, dim as u64);
    let mut coord = Vec::with_capacity(1);
    let drawn: Vec<f64> = (0..samples)
        .map(|_| {
            law.draw_into(&subset, &mut rng, &mut coord);
            coord[0]
        })
        .collect();
    let data: Vec<f64> = matrix.rows().map(|r| f64::from(r[dim])).collect();
    let median = compute_dim_stats(matrix).medians[dim];
    Ok(DistCheck {
        dim,
        kind,
        ks: ks_two_sample(&data, &drawn),
        fraction_below_median: fraction_below(&drawn, median),
        median,
        data,
        samples: drawn,
    })
}
