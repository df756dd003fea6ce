//! Coreset selection from importance scores, plus per-example loss weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::scores::parse_indexed_csv;
use crate::engine::{ScoreConfig, ScoreVector};
use crate::error::{Error, Result};

/// A pruned coreset and the loss weights of every example.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub prune_rate: f64,
    /// Kept example indices, ascending.
    pub kept_indices: Vec<usize>,
    pub n: usize,
    /// One weight per example of the full dataset.
    pub weights: Vec<f64>,
}

impl SelectionResult {
    pub fn n_total(&self) -> usize {
        self.weights.len()
    }
}

/// Coreset size for a dataset of `total` examples: `round(total·(1−rate))`,
/// at least one.
pub fn coreset_size(total: usize, prune_rate: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&prune_rate) {
        return Err(Error::Domain(format!(
            "prune rate {prune_rate} outside [0, 1)"
        )));
    }
    let n = (total as f64 * (1.0 - prune_rate)).round() as usize;
    Ok(n.clamp(1, total.max(1)))
}

/// Keeps the `n` highest-scored examples; the lowest index wins ties.
pub fn select_coreset(scores: &ScoreVector, prune_rate: f64) -> Result<SelectionResult> {
    let values = scores.as_slice();
    if values.is_empty() {
        return Err(Error::Validation("cannot select from an empty score vector".into()));
    }
    let n = coreset_size(values.len(), prune_rate)?;

    let mut order: Vec<usize> = (0..values.len()).collect();
    let by_rank = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));
    if n < order.len() {
        order.select_nth_unstable_by(n, by_rank);
        order.truncate(n);
    }
    order.sort_unstable();

    Ok(SelectionResult {
        prune_rate,
        kept_indices: order,
        n,
        weights: loss_weights(scores),
    })
}

/// Min-max rescale of scores into `[0, 1]`; all ones when the scores are
/// constant.
pub fn loss_weights(scores: &ScoreVector) -> Vec<f64> {
    let values = scores.as_slice();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range <= 0.0 {
        return vec![1.0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
        .collect()
}

/// Metadata written next to a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub prune_rate: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub config: Option<ScoreConfig>,
}

pub const INDICES_FILE: &str = "indices.txt";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const MANIFEST_FILE: &str = "selection.json";

/// Writes `indices.txt`, `weights.csv` and `selection.json` into `out_dir`.
/// `config` is the configuration that produced the scores, when known.
pub fn write_selection(
    result: &SelectionResult,
    config: Option<&ScoreConfig>,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut indices = String::with_capacity(result.kept_indices.len() * 8);
    for i in &result.kept_indices {
        let _ = writeln!(indices, "{i}");
    }
    write_file(&dir.join(INDICES_FILE), indices.as_bytes())?;

    let mut weights = String::with_capacity(result.weights.len() * 24);
    weights.push_str("index,weight\n");
    for (i, w) in result.weights.iter().enumerate() {
        let _ = writeln!(weights, "{i},{w}");
    }
    write_file(&dir.join(WEIGHTS_FILE), weights.as_bytes())?;

    let manifest = SelectionManifest {
        prune_rate: result.prune_rate,
        n: result.n,
        n_total: result.n_total(),
        config: config.cloned(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Format(format!("cannot encode selection manifest: {e}")))?;
    json.push('\n');
    write_file(&dir.join(MANIFEST_FILE), json.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::Format(format!("{}: bad index '{l}'", path.display())))
        })
        .collect()
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_indexed_csv(&text, "weight")
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<SelectionManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sizes_from_rates() {
        assert_eq!(coreset_size(50_000, 0.9).unwrap(), 5_000);
        assert_eq!(coreset_size(1_281_167, 0.3).unwrap(), 896_817);
        assert_eq!(coreset_size(10, 0.0).unwrap(), 10);
        assert_eq!(coreset_size(3, 0.99).unwrap(), 1);
        assert!(matches!(coreset_size(10, 1.0), Err(Error::Domain(_))));
        assert!(matches!(coreset_size(10, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn hand_ranked_selection() {
        let r = select_coreset(&scores(&[3.0, 1.0, 2.0]), 1.0 / 3.0).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.kept_indices, vec![0, 2]);
    }

    #[test]
    fn boundary_ties_keep_lowest_index() {
        let r = select_coreset(&scores(&[1.0, 2.0, 1.0, 1.0]), 0.5).unwrap();
        assert_eq!(r.kept_indices, vec![0, 1]);
    }

    #[test]
    fn zero_rate_keeps_all() {
        let r = select_coreset(&scores(&[0.3, -1.0, 7.0]), 0.0).unwrap();
        assert_eq!(r.kept_indices, vec![0, 1, 2]);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(loss_weights(&scores(&[2.0, 4.0, 6.0])), vec![0.0, 0.5, 1.0]);
        assert_eq!(loss_weights(&scores(&[5.0, 5.0])), vec![1.0, 1.0]);
        assert_eq!(loss_weights(&scores(&[-1.0, 0.0, 3.0])), vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let s = scores(&[0.1, 0.7, 0.3]);
        let r = select_coreset(&s, 1.0 / 3.0).unwrap();
        let config = ScoreConfig {
            seed: 987_654_321,
            ..ScoreConfig::default()
        };
        write_selection(&r, Some(&config), dir.path()).unwrap();

        let idx = read_indices(dir.path().join(INDICES_FILE)).unwrap();
        assert_eq!(idx, vec![1, 2]);
        let text = fs::read_to_string(dir.path().join(INDICES_FILE)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));

        let w = read_weights(dir.path().join(WEIGHTS_FILE)).unwrap();
        assert_eq!(w.len(), 3);
        for (a, b) in w.iter().zip(&r.weights) {
            assert!((a - b).abs() <= 1e-15);
        }

        let manifest = read_manifest(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.n, 2);
        assert_eq!(manifest.n_total, 3);
        assert_eq!(manifest.config.unwrap().seed, 987_654_321);
        let raw = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(raw.contains("\"N\": 3"));
    }

    proptest! {
        #[test]
        fn kept_dominate_dropped(
            values in prop::collection::vec(-5i32..5, 1..60),
            rate in 0.0f64..0.99,
        ) {
            let s = scores(&values.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
            let r = select_coreset(&s, rate).unwrap();
            prop_assert_eq!(r.kept_indices.len(), r.n);
            prop_assert!(r.kept_indices.windows(2).all(|w| w[0] < w[1]));
            let kept: std::collections::HashSet<_> = r.kept_indices.iter().copied().collect();
            let min_kept = r.kept_indices.iter().map(|&i| s.as_slice()[i]).fold(f64::INFINITY, f64::min);
            for i in 0..s.len() {
                if !kept.contains(&i) {
                    prop_assert!(s.as_slice()[i] <= min_kept);
                }
            }
            prop_assert!(r.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        }

        #[test]
        fn selection_invariant_under_positive_affine_maps(
            values in prop::collection::vec(-100i32..100, 1..60),
            scale in 1u32..50,
            shift in -1000i32..1000,
            rate in 0.0f64..0.99,
        ) {
            let a: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
            let b: Vec<f64> = a.iter().map(|v| v * f64::from(scale) + f64::from(shift)).collect();
            let ra = select_coreset(&scores(&a), rate).unwrap();
            let rb = select_coreset(&scores(&b), rate).unwrap();
            prop_assert_eq!(ra.kept_indices, rb.kept_indices);
        }
    }
}
