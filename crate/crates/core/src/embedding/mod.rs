//! Embedding matrices, their per-dimension statistics and on-disk formats.
//!
//! Matrices are stored row-major: row `i` is the embedding of dataset
//! example `i`, and every downstream output keeps that indexing.

pub mod npy;
pub mod raw;
pub(crate) mod scores;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use scores::{load_scores, save_scores, ScoreFormat};

/// N×M single-precision matrix of example embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_examples: usize,
    n_dims: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite values.
    pub fn new(n_examples: usize, n_dims: usize, data: Vec<f32>) -> Result<Self> {
        if n_examples == 0 || n_dims == 0 {
            return Err(Error::Validation(format!(
                "matrix must have at least one row and one column, got {n_examples}x{n_dims}"
            )));
        }
        let expected = n_examples.checked_mul(n_dims).ok_or_else(|| {
            Error::Shape(format!("{n_examples}x{n_dims} overflows the address space"))
        })?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{n_examples}x{n_dims} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_dims,
                col: pos % n_dims,
            });
        }
        Ok(Self {
            n_examples,
            n_dims,
            data,
        })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let n_dims = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_dims);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_dims {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, expected {n_dims}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), n_dims, data)
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.n_dims..(i + 1) * self.n_dims]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.n_dims + col]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.n_dims)
    }

    /// Copies column `col` out of the matrix.
    pub fn column(&self, col: usize) -> Vec<f32> {
        self.rows().map(|r| r[col]).collect()
    }

    /// Returns a copy with every column shifted to zero mean and scaled to
    /// unit sample standard deviation. Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let gauss = GaussStats::compute(self);
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.n_dims) {
            for (j, v) in row.iter_mut().enumerate() {
                let centered = f64::from(*v) - gauss.means[j];
                let sd = gauss.std_devs[j];
                *v = if sd > 0.0 { centered / sd } else { centered } as f32;
            }
        }
        Self {
            n_examples: self.n_examples,
            n_dims: self.n_dims,
            data,
        }
    }
}

/// Column-wise concatenation of per-model embeddings, in list order.
pub fn concat_matrices(parts: &[EmbeddingMatrix]) -> Result<EmbeddingMatrix> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Validation("no matrices to concatenate".into()))?;
    let n = first.n_examples;
    for (idx, part) in parts.iter().enumerate() {
        if part.n_examples != n {
            return Err(Error::Alignment {
                part: idx,
                expected: n,
                found: part.n_examples,
            });
        }
    }
    if parts.len() == 1 {
        return Ok(first.clone());
    }
    let n_dims: usize = parts.iter().map(|p| p.n_dims).sum();
    let mut data = Vec::with_capacity(n * n_dims);
    for i in 0..n {
        for part in parts {
            data.extend_from_slice(part.row(i));
        }
    }
    Ok(EmbeddingMatrix {
        n_examples: n,
        n_dims,
        data,
    })
}

/// Per-dimension minimum, median and maximum of an embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DimStats {
    pub mins: Vec<f64>,
    pub medians: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl DimStats {
    pub fn n_dims(&self) -> usize {
        self.mins.len()
    }
}

/// Column statistics. The median of an even-length column is the mean of
/// its two middle order statistics.
pub fn compute_dim_stats(matrix: &EmbeddingMatrix) -> DimStats {
    let m = matrix.n_dims;
    let mut mins = vec![f64::INFINITY; m];
    let mut maxs = vec![f64::NEG_INFINITY; m];
    for row in matrix.rows() {
        for (j, &v) in row.iter().enumerate() {
            let v = f64::from(v);
            if v < mins[j] {
                mins[j] = v;
            }
            if v > maxs[j] {
                maxs[j] = v;
            }
        }
    }

    let n = matrix.n_examples;
    let mut scratch = Vec::with_capacity(n);
    let medians = (0..m)
        .map(|j| {
            scratch.clear();
            scratch.extend(matrix.rows().map(|r| r[j]));
            column_median(&mut scratch)
        })
        .collect();

    DimStats {
        mins,
        medians,
        maxs,
    }
}

fn column_median(values: &mut [f32]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f32::total_cmp);
    let upper = f64::from(*upper);
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        (f64::from(below) + upper) / 2.0
    }
}

/// Per-dimension sample mean and sample standard deviation, used by the
/// Gaussian probe law.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussStats {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl GaussStats {
    pub fn compute(matrix: &EmbeddingMatrix) -> Self {
        let m = matrix.n_dims;
        let n = matrix.n_examples as f64;
        let mut means = vec![0.0; m];
        for row in matrix.rows() {
            for (acc, &v) in means.iter_mut().zip(row) {
                *acc += f64::from(v);
            }
        }
        means.iter_mut().for_each(|s| *s /= n);

        let mut sq = vec![0.0; m];
        for row in matrix.rows() {
            for ((acc, &v), mean) in sq.iter_mut().zip(row).zip(&means) {
                let d = f64::from(v) - mean;
                *acc += d * d;
            }
        }
        let std_devs = sq
            .into_iter()
            .map(|s| {
                if matrix.n_examples > 1 {
                    (s / (n - 1.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Self { means, std_devs }
    }
}

/// On-disk layout of an embedding matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// `.npy` v1.0, dtype `<f4`, C order, 2-D.
    Npy,
    /// 16-byte `ZCEM` header followed by little-endian f32 rows.
    RawF32,
}

impl MatrixFormat {
    /// Identifies the format from the leading magic bytes.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(&npy::MAGIC) {
            Some(MatrixFormat::Npy)
        } else if bytes.starts_with(&raw::MAGIC) {
            Some(MatrixFormat::RawF32)
        } else {
            None
        }
    }

    /// `.npy` paths use the array container, everything else the raw format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("npy") => MatrixFormat::Npy,
            _ => MatrixFormat::RawF32,
        }
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, format)
}

/// Loads a matrix, picking the format from the file's magic bytes.
pub fn load_matrix_auto(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = MatrixFormat::detect(&bytes).ok_or_else(|| {
        Error::Format(format!("{}: unrecognized magic bytes", path.display()))
    })?;
    decode_matrix(&bytes, format)
}

pub fn decode_matrix(bytes: &[u8], format: MatrixFormat) -> Result<EmbeddingMatrix> {
    match format {
        MatrixFormat::Npy => npy::decode_matrix(bytes),
        MatrixFormat::RawF32 => raw::decode(bytes),
    }
}

pub fn encode_matrix(matrix: &EmbeddingMatrix, format: MatrixFormat) -> Vec<u8> {
    match format {
        MatrixFormat::Npy => npy::encode_matrix(matrix),
        MatrixFormat::RawF32 => raw::encode(matrix),
    }
}

pub fn save_matrix(
    matrix: &EmbeddingMatrix,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(matrix, format)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f32]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn odd_column_order_statistics() {
        let s = compute_dim_stats(&col(&[0.0, 10.0, 4.0]));
        assert_eq!((s.mins[0], s.medians[0], s.maxs[0]), (0.0, 4.0, 10.0));
    }

    #[test]
    fn even_column_median_is_mean_of_middle_pair() {
        let s = compute_dim_stats(&col(&[4.0, 1.0, 3.0, 2.0]));
        assert_eq!(s.medians[0], 2.5);
    }

    #[test]
    fn constant_column() {
        let s = compute_dim_stats(&col(&[5.0, 5.0, 5.0]));
        assert_eq!((s.mins[0], s.medians[0], s.maxs[0]), (5.0, 5.0, 5.0));
    }

    #[test]
    fn rejects_nan_with_position() {
        let mut data = vec![0.0f32; 10 * 4];
        data[7 * 4 + 3] = f32::NAN;
        match EmbeddingMatrix::new(10, 4, data) {
            Err(Error::NonFinite { row: 7, col: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            EmbeddingMatrix::new(0, 3, vec![]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn concat_shapes() {
        let a = EmbeddingMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let b = EmbeddingMatrix::new(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = concat_matrices(&[a.clone(), b]).unwrap();
        assert_eq!(c.n_dims(), 3);
        assert_eq!(c.as_slice(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        assert_eq!(concat_matrices(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn concat_misaligned() {
        let a = EmbeddingMatrix::new(3, 1, vec![0.0; 3]).unwrap();
        let b = EmbeddingMatrix::new(4, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(
            concat_matrices(&[a, b]),
            Err(Error::Alignment {
                part: 1,
                expected: 3,
                found: 4
            })
        ));
        assert!(concat_matrices(&[]).is_err());
    }

    #[test]
    fn gauss_stats_sample_moments() {
        let g = GaussStats::compute(&col(&[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(g.means[0], 2.5);
        assert!((g.std_devs[0] - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let single = GaussStats::compute(&col(&[7.0]));
        assert_eq!(single.std_devs[0], 0.0);
    }

    #[test]
    fn standardize_gives_unit_moments() {
        let m = EmbeddingMatrix::new(4, 2, vec![1.0, 3.0, 2.0, 3.0, 3.0, 3.0, 4.0, 3.0]).unwrap();
        let z = m.standardized();
        let g = GaussStats::compute(&z);
        assert!(g.means[0].abs() < 1e-6);
        assert!((g.std_devs[0] - 1.0).abs() < 1e-6);
        assert_eq!(z.column(1), vec![0.0; 4]);
    }

    fn sorted_oracle(column: &[f32]) -> (f64, f64, f64) {
        let mut v: Vec<f64> = column.iter().map(|&x| f64::from(x)).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let med = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        (v[0], med, v[n - 1])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn stats_match_full_sort(
            (n, m, data) in (1usize..=64, 1usize..=8).prop_flat_map(|(n, m)| {
                (Just(n), Just(m), prop::collection::vec(-1e3f32..1e3, n * m))
            })
        ) {
            let matrix = EmbeddingMatrix::new(n, m, data).unwrap();
            let stats = compute_dim_stats(&matrix);
            for j in 0..m {
                let (lo, med, hi) = sorted_oracle(&matrix.column(j));
                prop_assert_eq!(stats.mins[j], lo);
                prop_assert_eq!(stats.medians[j], med);
                prop_assert_eq!(stats.maxs[j], hi);
                prop_assert!(lo <= med && med <= hi);
            }
        }

        #[test]
        fn concat_preserves_columns(
            (n, ma, mb, a, b) in (1usize..=16, 1usize..=4, 1usize..=4).prop_flat_map(|(n, ma, mb)| {
                (Just(n), Just(ma), Just(mb),
                 prop::collection::vec(-10f32..10.0, n * ma),
                 prop::collection::vec(-10f32..10.0, n * mb))
            })
        ) {
            let a = EmbeddingMatrix::new(n, ma, a).unwrap();
            let b = EmbeddingMatrix::new(n, mb, b).unwrap();
            let c = concat_matrices(&[a.clone(), b.clone()]).unwrap();
            for j in 0..ma {
                prop_assert_eq!(c.column(j), a.column(j));
            }
            for j in 0..mb {
                prop_assert_eq!(c.column(ma + j), b.column(j));
            }
        }
    }
}
