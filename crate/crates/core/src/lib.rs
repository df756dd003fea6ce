//! Zero-shot coreset selection.
//!
//! Scores every example of an unlabeled dataset from its precomputed
//! embedding matrix. Random probe points drawn per dimension from a
//! triangular law reward the closest example (coverage), and that example's
//! nearest neighbors are penalized with normalized inverse-power distances
//! (redundancy). The highest-scored examples form the coreset; min-max
//! rescaled scores give per-example loss weights.
//!
//! ```
//! use zcore::{gen_synthetic, score_dataset, select_coreset, ScoreConfig, SyntheticSpec};
//!
//! let matrix = gen_synthetic(&SyntheticSpec::two_cluster_example(7)).unwrap();
//! let config = ScoreConfig { iterations: 2_000, neighbors: 10, workers: 1, ..Default::default() };
//! let scores = score_dataset(&matrix, &config).unwrap();
//! let coreset = select_coreset(&scores, 0.9).unwrap();
//! assert_eq!(coreset.kept_indices.len(), 20);
//! ```

pub mod config;
pub mod diagnostics;
pub mod embedding;
pub mod engine;
mod error;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod selection;

pub use embedding::{
    compute_dim_stats, concat_matrices, load_matrix, load_matrix_auto, load_scores, save_matrix,
    save_scores, DimStats, EmbeddingMatrix, GaussStats, MatrixFormat, ScoreFormat,
};
pub use engine::{
    k_nearest_neighbors, nearest_example, redundancy_scores, run_iteration, score_dataset,
    score_dataset_with_progress, IterationDelta, ScoreConfig, ScoreVector, Scorer,
};
pub use error::{Error, Result};
pub use oracle::{compare_scores, gen_synthetic, oracle_score, CompareReport, SyntheticSpec};
pub use sampling::{
    draw_dim_subset, draw_probe, triangular_inverse_cdf, DimSubset, DistributionKind, ProbeLaw,
    ProbePoint,
};
pub use selection::{loss_weights, select_coreset, write_selection, SelectionResult};
