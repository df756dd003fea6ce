//! Reference implementations and synthetic data for checking the engine.
//!
//! [`oracle_score`] is a plain serial loop over the scoring definition: full
//! scans, a full sort of every neighbor list and the direct
//! `distance^-β / Σ distance^-β` penalty. It shares only the random stream
//! discipline and the probe law with the engine.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::engine::{random_init, ScoreConfig, ScoreVector};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sampling::{draw_dim_subset, ProbeLaw};

/// Naive serial scorer with the same contract as
/// [`score_dataset`](crate::engine::score_dataset).
pub fn oracle_score(matrix: &EmbeddingMatrix, config: &ScoreConfig) -> Result<ScoreVector> {
    config.validate(matrix.n_dims())?;
    let n = matrix.n_examples();
    let law = ProbeLaw::fit(matrix, config.kind);
    let mut scores = if config.enable_random_init {
        random_init(n, config.seed)
    } else {
        vec![0.0; n]
    };

    let mut probe = Vec::new();
    for t in 0..config.iterations {
        let mut rng = stream(config.seed, Purpose::Iteration, t);
        let subset = draw_dim_subset(matrix.n_dims(), config.sample_dims, &mut rng)?;
        law.draw_into(&subset, &mut rng, &mut probe);
        let dims = subset.indices();

        let distance_to_probe = |i: usize| -> f64 {
            let mut d = 0.0;
            for (&dim, &p) in dims.iter().zip(&probe) {
                d += (p - f64::from(matrix.get(i, dim))).abs();
            }
            d
        };
        let mut k = 0;
        let mut best = distance_to_probe(0);
        for i in 1..n {
            let d = distance_to_probe(i);
            if d < best {
                best = d;
                k = i;
            }
        }
        scores[k] += 1.0;

        if !config.enable_redundancy || config.neighbors == 0 || n < 2 {
            continue;
        }
        let mut neighbors: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != k)
            .map(|i| {
                let mut d = 0.0;
                for &dim in dims {
                    d += (f64::from(matrix.get(k, dim)) - f64::from(matrix.get(i, dim))).abs();
                }
                (d, i)
            })
            .collect();
        neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        neighbors.truncate(config.neighbors);

        let raw: Vec<f64> = neighbors
            .iter()
            .map(|&(d, _)| d.max(config.distance_epsilon).powf(-config.distance_exponent))
            .collect();
        let norm: f64 = raw.iter().sum();
        for (&(_, i), r) in neighbors.iter().zip(&raw) {
            scores[i] -= r / norm;
        }
    }
    ScoreVector::new(scores)
}

/// One Gaussian blob, optionally padded with exact copies of its first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub spread: f64,
    pub count: usize,
    #[serde(default)]
    pub duplicates: usize,
}

/// Description of a synthetic embedding matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub clusters: Vec<Cluster>,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("synthetic spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Two well separated clusters in eight dimensions, one of them with a
    /// block of exact duplicates.
    pub fn two_cluster_example(seed: u64) -> Self {
        Self {
            clusters: vec![
                Cluster {
                    center: vec![0.0; 8],
                    spread: 1.0,
                    count: 100,
                    duplicates: 50,
                },
                Cluster {
                    center: vec![10.0; 8],
                    spread: 1.0,
                    count: 100,
                    duplicates: 0,
                },
            ],
            seed,
        }
    }

    pub fn total_count(&self) -> usize {
        self.clusters.iter().map(|c| c.count).sum()
    }
}

/// Generates rows cluster by cluster: `count − duplicates` Gaussian points
/// around the center, then `duplicates` copies of the cluster's first row.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<EmbeddingMatrix> {
    let m = spec
        .clusters
        .first()
        .map(|c| c.center.len())
        .ok_or_else(|| Error::Validation("synthetic spec has no clusters".into()))?;
    if m == 0 {
        return Err(Error::Validation("cluster centers must be non-empty".into()));
    }
    for (idx, c) in spec.clusters.iter().enumerate() {
        if c.center.len() != m {
            return Err(Error::Validation(format!(
                "cluster {idx} has {} dimensions, expected {m}",
                c.center.len()
            )));
        }
        if !(c.spread.is_finite() && c.spread > 0.0) {
            return Err(Error::Validation(format!("cluster {idx}: spread must be positive")));
        }
        if c.count == 0 {
            return Err(Error::Validation(format!("cluster {idx}: count must be positive")));
        }
        if c.duplicates >= c.count {
            return Err(Error::Validation(format!(
                "cluster {idx}: {} duplicates leave no point to copy out of {}",
                c.duplicates, c.count
            )));
        }
        if c.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("cluster {idx}: center is not finite")));
        }
    }

    let mut data = Vec::with_capacity(spec.total_count() * m);
    for (idx, c) in spec.clusters.iter().enumerate() {
        let mut rng = stream(spec.seed, Purpose::Auxiliary, idx as u64);
        let first = data.len();
        for _ in 0..c.count - c.duplicates {
            for &mu in &c.center {
                let z: f64 = rng.sample(StandardNormal);
                data.push((mu + c.spread * z) as f32);
            }
        }
        for _ in 0..c.duplicates {
            data.extend_from_within(first..first + m);
        }
    }
    EmbeddingMatrix::new(spec.total_count(), m, data)
}

/// Outcome of an element-wise comparison of two score vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub max_abs_diff: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn compare_scores(a: &ScoreVector, b: &ScoreVector, tol: f64) -> Result<CompareReport> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "score vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (worst_index, max_abs_diff) = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Ok(CompareReport {
        max_abs_diff,
        worst_index,
        tolerance: tol,
        passed: max_abs_diff <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::score_dataset;

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn compare_examples() {
        let r = compare_scores(&sv(&[1.0, 2.0]), &sv(&[1.0, 2.0]), 0.0).unwrap();
        assert!(r.passed && r.max_abs_diff == 0.0);

        let r = compare_scores(&sv(&[0.0]), &sv(&[1.0]), 0.5).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_index, 0);

        let r = compare_scores(&sv(&[1.0, 2.0]), &sv(&[1.0, 2.0 + 1e-12]), 1e-9).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_index, 1);

        assert!(compare_scores(&sv(&[1.0]), &sv(&[1.0, 2.0]), 1.0).is_err());
    }

    #[test]
    fn duplicates_copy_first_row() {
        let spec = SyntheticSpec {
            clusters: vec![Cluster {
                center: vec![1.0, -1.0, 0.5],
                spread: 0.3,
                count: 5,
                duplicates: 4,
            }],
            seed: 3,
        };
        let m = gen_synthetic(&spec).unwrap();
        assert_eq!(m.n_examples(), 5);
        for i in 1..5 {
            assert_eq!(m.row(i), m.row(0));
        }
    }

    #[test]
    fn separated_clusters_stay_apart() {
        let spec = SyntheticSpec {
            clusters: vec![
                Cluster { center: vec![0.0; 4], spread: 0.1, count: 20, duplicates: 0 },
                Cluster { center: vec![50.0; 4], spread: 0.1, count: 20, duplicates: 0 },
            ],
            seed: 8,
        };
        let m = gen_synthetic(&spec).unwrap();
        let l1 = |a: usize, b: usize| -> f64 {
            m.row(a).iter().zip(m.row(b)).map(|(x, y)| f64::from((x - y).abs())).sum()
        };
        let cluster = |i: usize| i / 20;
        let mut within: f64 = 0.0;
        let mut between = f64::INFINITY;
        for a in 0..40 {
            for b in (a + 1)..40 {
                if cluster(a) == cluster(b) {
                    within = within.max(l1(a, b));
                } else {
                    between = between.min(l1(a, b));
                }
            }
        }
        assert!(within < between, "{within} vs {between}");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::two_cluster_example(42);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let other = SyntheticSpec::two_cluster_example(43);
        assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn synthetic_spec_validation() {
        let mut spec = SyntheticSpec::two_cluster_example(0);
        spec.clusters[1].center.push(0.0);
        assert!(matches!(gen_synthetic(&spec), Err(Error::Validation(_))));
        let mut spec = SyntheticSpec::two_cluster_example(0);
        spec.clusters[0].duplicates = 100;
        assert!(gen_synthetic(&spec).is_err());
        assert!(gen_synthetic(&SyntheticSpec { clusters: vec![], seed: 0 }).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SyntheticSpec::two_cluster_example(5);
        assert_eq!(SyntheticSpec::from_json(&spec.to_json()).unwrap(), spec);
        let parsed = SyntheticSpec::from_json(
            r#"{"clusters": [{"center": [0, 1], "spread": 0.5, "count": 3}]}"#,
        )
        .unwrap();
        assert_eq!(parsed.clusters[0].duplicates, 0);
        assert_eq!(parsed.seed, 0);
    }

    #[test]
    fn oracle_trivial_cases() {
        let m = EmbeddingMatrix::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        let c = ScoreConfig {
            iterations: 0,
            enable_random_init: false,
            workers: 1,
            sample_dims: 1,
            ..ScoreConfig::default()
        };
        assert_eq!(oracle_score(&m, &c).unwrap().as_slice(), &[0.0; 3]);

        let single = EmbeddingMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let c = ScoreConfig {
            iterations: 250,
            ..c
        };
        let s = oracle_score(&single, &c).unwrap();
        assert_eq!(s.as_slice(), &[250.0]);
    }

    #[test]
    fn oracle_agrees_with_engine_on_example() {
        let m = gen_synthetic(&SyntheticSpec::two_cluster_example(1)).unwrap();
        let c = ScoreConfig {
            iterations: 1_000,
            neighbors: 10,
            workers: 3,
            seed: 17,
            ..ScoreConfig::default()
        };
        let engine = score_dataset(&m, &c).unwrap();
        let oracle = oracle_score(&m, &c).unwrap();
        let report = compare_scores(&engine, &oracle, 1e-9).unwrap();
        assert!(report.passed, "{report:?}");
    }
}
