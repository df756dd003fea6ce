//! Monte Carlo coverage and redundancy scoring.
//!
//! Each iteration draws a probe point in a random `m`-dimensional slice,
//! credits +1 to the closest example (L1 in the slice), then spreads a unit
//! penalty mass over that example's `α` nearest neighbors in proportion to
//! `distance^-β`. The final score is the per-example random initialization
//! plus the sum over all iterations.
//!
//! Iteration `t` always draws from `stream(seed, Iteration, t)`, and the
//! per-worker accumulators are exact fixed-point integers, so the output is
//! bit-identical for any worker count.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sampling::{draw_dim_subset, DimSubset, DistributionKind, ProbeLaw, ProbePoint};

/// Every tunable of a scoring run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Number of sample-and-score iterations `T`.
    pub iterations: u64,
    /// Dimensions per probe slice `m`.
    pub sample_dims: usize,
    /// Neighbors penalized per iteration `α`.
    pub neighbors: usize,
    /// Distance penalty exponent `β`.
    pub distance_exponent: f64,
    pub kind: DistributionKind,
    pub seed: u64,
    /// Worker threads. Results do not depend on this.
    pub workers: usize,
    pub enable_redundancy: bool,
    pub enable_random_init: bool,
    /// Floor applied to neighbor distances before exponentiation.
    pub distance_epsilon: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            iterations: 1_000_000,
            sample_dims: 2,
            neighbors: 1_000,
            distance_exponent: 4.0,
            kind: DistributionKind::Triangular,
            seed: 0,
            workers: default_workers(),
            enable_redundancy: true,
            enable_random_init: true,
            distance_epsilon: 1e-12,
        }
    }
}

/// Logical core count, or 1 when it cannot be queried.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

impl ScoreConfig {
    /// Checks the configuration against a matrix with `n_dims` columns.
    pub fn validate(&self, n_dims: usize) -> Result<()> {
        if self.sample_dims == 0 || self.sample_dims > n_dims {
            return Err(Error::Config(format!(
                "sample dimension m={} must lie in [1, M={n_dims}]",
                self.sample_dims
            )));
        }
        if !(self.distance_exponent.is_finite() && self.distance_exponent > 0.0) {
            return Err(Error::Config(format!(
                "distance exponent must be positive, got {}",
                self.distance_exponent
            )));
        }
        if !(self.distance_epsilon.is_finite() && self.distance_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "distance epsilon must be positive, got {}",
                self.distance_epsilon
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Accumulated importance score per example.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("score {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// The sparse update produced by one iteration: +1 at `coverage_index` and
/// minus each listed penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDelta {
    pub coverage_index: usize,
    pub redundancy: Vec<(usize, f64)>,
}

impl IterationDelta {
    pub fn penalty_mass(&self) -> f64 {
        self.redundancy.iter().map(|(_, p)| p).sum()
    }

    /// Adds this delta to a dense score vector.
    pub fn apply(&self, scores: &mut [f64]) {
        scores[self.coverage_index] += 1.0;
        for &(i, p) in &self.redundancy {
            scores[i] -= p;
        }
    }
}

/// Projected L1 distances over a subset of columns. Implemented for the
/// row-major matrix and for the column-major copy the engine scans.
pub trait ProjectedSource {
    fn n_examples(&self) -> usize;

    /// Writes `Σ_j |point[j] - Z[start + r, dims[j]]|` into `out[r]`,
    /// summing in subset order.
    fn l1_range(&self, dims: &[usize], point: &[f64], start: usize, out: &mut [f64]);

    fn l1_to_point(&self, dims: &[usize], point: &[f64], out: &mut [f64]) {
        self.l1_range(dims, point, 0, out);
    }

    /// Distances of rows `0, stride, 2*stride, ...`, replacing `out`.
    fn l1_strided(&self, dims: &[usize], point: &[f64], stride: usize, out: &mut Vec<f64>) {
        out.clear();
        let mut one = [0.0];
        for i in (0..self.n_examples()).step_by(stride) {
            self.l1_range(dims, point, i, &mut one);
            out.push(one[0]);
        }
    }

    /// Writes the projected coordinates of `row` into `out`.
    fn projected_row(&self, row: usize, dims: &[usize], out: &mut Vec<f64>);
}

impl ProjectedSource for EmbeddingMatrix {
    fn n_examples(&self) -> usize {
        EmbeddingMatrix::n_examples(self)
    }

    fn l1_range(&self, dims: &[usize], point: &[f64], start: usize, out: &mut [f64]) {
        let m = self.n_dims();
        let rows = self.as_slice()[start * m..].chunks_exact(m);
        for (o, row) in out.iter_mut().zip(rows) {
            let mut acc = 0.0;
            for (&d, &p) in dims.iter().zip(point) {
                acc += (p - f64::from(row[d])).abs();
            }
            *o = acc;
        }
    }

    fn projected_row(&self, row: usize, dims: &[usize], out: &mut Vec<f64>) {
        let r = self.row(row);
        out.clear();
        out.extend(dims.iter().map(|&d| f64::from(r[d])));
    }
}

/// Column-major copy of an embedding matrix, so a slice scan touches `m`
/// contiguous columns instead of striding through whole rows.
#[derive(Debug, Clone)]
pub struct ColumnMajor {
    n_examples: usize,
    data: Vec<f32>,
}

impl ColumnMajor {
    pub fn from_matrix(matrix: &EmbeddingMatrix) -> Self {
        let (n, m) = (matrix.n_examples(), matrix.n_dims());
        let mut data = vec![0.0f32; n * m];
        for (i, row) in matrix.rows().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Self {
            n_examples: n,
            data,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f32] {
        &self.data[j * self.n_examples..(j + 1) * self.n_examples]
    }
}

impl ProjectedSource for ColumnMajor {
    fn n_examples(&self) -> usize {
        self.n_examples
    }

    fn l1_range(&self, dims: &[usize], point: &[f64], start: usize, out: &mut [f64]) {
        let span = start..start + out.len();
        // 0 + |x| == |x| exactly, so seeding with the first term keeps the
        // subset-order sum bit-identical
        match (dims, point) {
            ([a, b], [pa, pb]) => {
                l1_pair(&self.column(*a)[span.clone()], *pa, &self.column(*b)[span], *pb, out)
            }
            _ => {
                let Some((&first, rest)) = dims.split_first() else {
                    out.fill(0.0);
                    return;
                };
                for (o, &z) in out.iter_mut().zip(&self.column(first)[span.clone()]) {
                    *o = (point[0] - f64::from(z)).abs();
                }
                for (&d, &p) in rest.iter().zip(&point[1..]) {
                    for (o, &z) in out.iter_mut().zip(&self.column(d)[span.clone()]) {
                        *o += (p - f64::from(z)).abs();
                    }
                }
            }
        }
    }

    fn l1_strided(&self, dims: &[usize], point: &[f64], stride: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n_examples.div_ceil(stride), 0.0);
        for (&d, &p) in dims.iter().zip(point) {
            for (o, &z) in out.iter_mut().zip(self.column(d).iter().step_by(stride)) {
                *o += (p - f64::from(z)).abs();
            }
        }
    }

    fn projected_row(&self, row: usize, dims: &[usize], out: &mut Vec<f64>) {
        out.clear();
        out.extend(dims.iter().map(|&d| f64::from(self.column(d)[row])));
    }
}

#[inline(always)]
fn l1_pair_kernel(a: &[f32], pa: f64, b: &[f32], pb: f64, out: &mut [f64]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = (pa - f64::from(x)).abs() + (pb - f64::from(y)).abs();
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn l1_pair_avx2(a: &[f32], pa: f64, b: &[f32], pb: f64, out: &mut [f64]) {
    l1_pair_kernel(a, pa, b, pb, out)
}

/// `out[i] = |pa - a[i]| + |pb - b[i]|`. Only exact IEEE operations are
/// involved, so the wide path gives the same bits as the scalar one.
fn l1_pair(a: &[f32], pa: f64, b: &[f32], pb: f64, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above
        return unsafe { l1_pair_avx2(a, pa, b, pb, out) };
    }
    l1_pair_kernel(a, pa, b, pb, out)
}

/// Index of the smallest distance; the lowest index wins ties.
pub fn argmin_distance(dist: &[f64]) -> usize {
    // lane-wise minimum vectorizes, then the first match gives the index
    let mut lanes = [f64::INFINITY; 8];
    let chunks = dist.chunks_exact(8);
    let tail = chunks.remainder();
    for chunk in chunks {
        for (l, &d) in lanes.iter_mut().zip(chunk) {
            *l = if d < *l { d } else { *l };
        }
    }
    let best = tail.iter().chain(&lanes).copied().fold(f64::INFINITY, f64::min);
    dist.iter().position(|&d| d == best).unwrap_or(0)
}

// A neighbor candidate packed as `dist bits << 64 | index`. Distances are
// finite and non-negative, so their bit patterns order like the values and
// the key orders exactly like (distance, index).
#[inline]
fn candidate_key(dist: f64, index: usize) -> u128 {
    (u128::from(dist.to_bits()) << 64) | index as u128
}

#[inline]
fn unpack_key(key: u128) -> (usize, f64) {
    (key as u64 as usize, f64::from_bits((key >> 64) as u64))
}

/// Rows scanned per block, small enough for the block to stay in L1.
const SCAN_BLOCK: usize = 2048;

/// Strided sample size used to guess a distance cutoff before selecting.
const CUTOFF_SAMPLE: usize = 1024;

/// Closest row to `point`, scanning in blocks; the lowest index wins ties.
fn blocked_argmin<S: ProjectedSource + ?Sized>(
    source: &S,
    dims: &[usize],
    point: &[f64],
    block: &mut Vec<f64>,
) -> usize {
    let n = source.n_examples();
    block.resize(SCAN_BLOCK.min(n), 0.0);
    let (mut best, mut best_d) = (0, f64::INFINITY);
    let mut start = 0;
    while start < n {
        let buf = &mut block[..SCAN_BLOCK.min(n - start)];
        source.l1_range(dims, point, start, buf);
        let i = argmin_distance(buf);
        if buf[i] < best_d {
            (best, best_d) = (start + i, buf[i]);
        }
        start += buf.len();
    }
    best
}

/// Keys of every row within `cutoff` of `point`, in index order.
fn collect_within<S: ProjectedSource + ?Sized>(
    source: &S,
    dims: &[usize],
    point: &[f64],
    cutoff: f64,
    block: &mut Vec<f64>,
    keys: &mut Vec<u128>,
) -> usize {
    let n = source.n_examples();
    block.resize(SCAN_BLOCK.min(n), 0.0);
    keys.clear();
    let mut start = 0;
    while start < n {
        let buf = &mut block[..SCAN_BLOCK.min(n - start)];
        source.l1_range(dims, point, start, buf);
        // most lanes miss; test eight at a time and only then look closer
        for (c, chunk) in buf.chunks(8).enumerate() {
            if chunk.iter().fold(false, |hit, &d| hit | (d <= cutoff)) {
                let base = start + c * 8;
                let mut hits = [0u128; 8];
                let mut count = 0;
                for (r, &d) in chunk.iter().enumerate() {
                    hits[count] = candidate_key(d, base + r);
                    count += usize::from(d <= cutoff);
                }
                keys.extend_from_slice(&hits[..count]);
            }
        }
        start += buf.len();
    }
    keys.len()
}

/// Fills `ws.neighbors` with the `min(alpha, N-1)` rows closest to row `k`,
/// excluding `k`, sorted by (distance, index).
///
/// A cutoff taken from a strided sample keeps only a few times `alpha`
/// candidates. If it keeps too few the full set is used, so the result is
/// always exact.
fn nearest_neighbors_into<S: ProjectedSource + ?Sized>(
    source: &S,
    k: usize,
    dims: &[usize],
    alpha: usize,
    ws: &mut Workspace,
) {
    let Workspace {
        point,
        block,
        candidates,
        sample,
        neighbors,
        ..
    } = ws;
    neighbors.clear();
    let n = source.n_examples();
    let wanted = alpha.min(n.saturating_sub(1));
    if wanted == 0 {
        return;
    }
    source.projected_row(k, dims, point);
    let mut cutoff = f64::INFINITY;
    if n > 4 * CUTOFF_SAMPLE && wanted * 8 < n {
        source.l1_strided(dims, point, n / CUTOFF_SAMPLE, sample);
        let rank = ((wanted * sample.len()).div_ceil(n) * 5 / 4 + 8).min(sample.len() - 1);
        let (_, &mut c, _) = sample.select_nth_unstable_by(rank, f64::total_cmp);
        cutoff = c;
    }
    // row k sits at distance 0, so it is always collected and then dropped
    let mut len = collect_within(source, dims, point, cutoff, block, candidates);
    if len <= wanted {
        len = collect_within(source, dims, point, f64::INFINITY, block, candidates);
    }
    let found = &mut candidates[..len];
    let self_at = found
        .binary_search_by_key(&k, |&key| key as u64 as usize)
        .expect("row k is within any cutoff");
    found[self_at] = u128::MAX;
    if found.len() > wanted {
        found.select_nth_unstable(wanted - 1);
    }
    let found = &mut found[..wanted];
    found.sort_unstable();
    neighbors.extend(found.iter().map(|&key| unpack_key(key)));
}

/// The example closest to `probe` in the slice spanned by `subset`.
pub fn nearest_example<S: ProjectedSource + ?Sized>(
    probe: &ProbePoint,
    source: &S,
    subset: &DimSubset,
) -> usize {
    blocked_argmin(source, subset.indices(), &probe.coords, &mut Vec::new())
}

/// The `min(alpha, N-1)` examples closest to example `k` in the slice,
/// excluding `k` itself, sorted by (distance, index).
pub fn k_nearest_neighbors<S: ProjectedSource + ?Sized>(
    k: usize,
    source: &S,
    subset: &DimSubset,
    alpha: usize,
) -> Vec<(usize, f64)> {
    let mut ws = Workspace::new(source.n_examples());
    nearest_neighbors_into(source, k, subset.indices(), alpha, &mut ws);
    ws.neighbors
}

/// Normalized `max(distance, epsilon)^-beta` penalties summing to one.
pub fn redundancy_scores(neighbors: &[(usize, f64)], beta: f64, epsilon: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(neighbors.len());
    redundancy_into(neighbors, beta, epsilon, &mut out);
    out
}

fn redundancy_into(neighbors: &[(usize, f64)], beta: f64, epsilon: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    if neighbors.is_empty() {
        return;
    }
    // scale by the closest distance first so large beta cannot overflow
    let closest = neighbors
        .iter()
        .map(|&(_, d)| d.max(epsilon))
        .fold(f64::INFINITY, f64::min);
    let integral = beta.fract() == 0.0 && beta.abs() <= 64.0;
    let mut total = 0.0;
    for &(i, d) in neighbors {
        let ratio = closest / d.max(epsilon);
        let w = if integral { ratio.powi(beta as i32) } else { ratio.powf(beta) };
        total += w;
        out.push((i, w));
    }
    for (_, w) in out.iter_mut() {
        *w /= total;
    }
}

/// Scratch buffers reused across iterations by one worker.
#[derive(Debug, Default)]
pub struct Workspace {
    probe: Vec<f64>,
    point: Vec<f64>,
    block: Vec<f64>,
    candidates: Vec<u128>,
    sample: Vec<f64>,
    neighbors: Vec<(usize, f64)>,
    penalties: Vec<(usize, f64)>,
}

impl Workspace {
    pub fn new(n_examples: usize) -> Self {
        Self {
            block: vec![0.0; SCAN_BLOCK.min(n_examples)],
            ..Self::default()
        }
    }

    pub fn penalties(&self) -> &[(usize, f64)] {
        &self.penalties
    }
}

/// Runs one iteration against `source`, leaving the penalties in the
/// workspace and returning the covered index.
fn iterate<S, R>(
    source: &S,
    n_dims: usize,
    law: &ProbeLaw,
    config: &ScoreConfig,
    rng: &mut R,
    ws: &mut Workspace,
) -> usize
where
    S: ProjectedSource + ?Sized,
    R: Rng + ?Sized,
{
    let n = source.n_examples();
    let subset = draw_dim_subset(n_dims, config.sample_dims, rng)
        .expect("sample_dims validated against the matrix");
    law.draw_into(&subset, rng, &mut ws.probe);
    let k = blocked_argmin(source, subset.indices(), &ws.probe, &mut ws.block);

    ws.penalties.clear();
    if config.enable_redundancy && config.neighbors > 0 && n > 1 {
        nearest_neighbors_into(source, k, subset.indices(), config.neighbors, ws);
        redundancy_into(
            &ws.neighbors,
            config.distance_exponent,
            config.distance_epsilon,
            &mut ws.penalties,
        );
    }
    k
}

/// One iteration on a row-major matrix with a caller-supplied stream.
pub fn run_iteration<R: Rng + ?Sized>(
    matrix: &EmbeddingMatrix,
    law: &ProbeLaw,
    config: &ScoreConfig,
    rng: &mut R,
) -> Result<IterationDelta> {
    config.validate(matrix.n_dims())?;
    let mut ws = Workspace::new(matrix.n_examples());
    let k = iterate(matrix, matrix.n_dims(), law, config, rng, &mut ws);
    Ok(IterationDelta {
        coverage_index: k,
        redundancy: ws.penalties,
    })
}

/// Per-example U[0,1) initialization from the dedicated init stream.
pub fn random_init(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Init, 0);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

// Fixed-point accumulation: one unit of score is 2^64. Integer sums are
// associative, so any iteration-to-worker split gives the same bits.
const FIXED_SHIFT: u32 = 64;
const FIXED_ONE: i128 = 1 << FIXED_SHIFT;
const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0;

#[inline]
fn to_fixed(x: f64) -> i128 {
    (x * FIXED_SCALE).round() as i128
}

#[inline]
fn from_fixed(x: i128) -> f64 {
    x as f64 / FIXED_SCALE
}

/// Iterations claimed by a worker at a time.
const CHUNK: u64 = 64;

/// A matrix prepared for repeated scoring under one configuration.
pub struct Scorer<'a> {
    matrix: &'a EmbeddingMatrix,
    columns: ColumnMajor,
    law: ProbeLaw,
    config: ScoreConfig,
}

impl<'a> Scorer<'a> {
    pub fn new(matrix: &'a EmbeddingMatrix, config: ScoreConfig) -> Result<Self> {
        config.validate(matrix.n_dims())?;
        Ok(Self {
            matrix,
            columns: ColumnMajor::from_matrix(matrix),
            law: ProbeLaw::fit(matrix, config.kind),
            config,
        })
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.config
    }

    pub fn law(&self) -> &ProbeLaw {
        &self.law
    }

    /// The delta produced by iteration `t`.
    pub fn delta(&self, t: u64, ws: &mut Workspace) -> IterationDelta {
        let k = self.step(t, ws);
        IterationDelta {
            coverage_index: k,
            redundancy: ws.penalties.clone(),
        }
    }

    #[inline]
    fn step(&self, t: u64, ws: &mut Workspace) -> usize {
        let mut rng = stream(self.config.seed, Purpose::Iteration, t);
        iterate(
            &self.columns,
            self.matrix.n_dims(),
            &self.law,
            &self.config,
            &mut rng,
            ws,
        )
    }

    fn run_worker(&self, next: &AtomicU64, done: &AtomicU64, progress: &(dyn Fn(u64) + Sync)) -> Vec<i128> {
        let n = self.matrix.n_examples();
        let total = self.config.iterations;
        let mut acc = vec![0i128; n];
        let mut ws = Workspace::new(n);
        loop {
            let start = next.fetch_add(CHUNK, AtomicOrdering::Relaxed);
            if start >= total {
                break;
            }
            let end = (start + CHUNK).min(total);
            for t in start..end {
                let k = self.step(t, &mut ws);
                acc[k] += FIXED_ONE;
                for &(i, p) in &ws.penalties {
                    acc[i] -= to_fixed(p);
                }
            }
            let finished = done.fetch_add(end - start, AtomicOrdering::Relaxed) + (end - start);
            progress(finished);
        }
        acc
    }

    /// Runs all iterations, calling `progress` with the number of finished
    /// iterations after every chunk.
    pub fn run(&self, progress: &(dyn Fn(u64) + Sync)) -> ScoreVector {
        let n = self.matrix.n_examples();
        let mut total: Vec<i128> = if self.config.enable_random_init {
            random_init(n, self.config.seed).into_iter().map(to_fixed).collect()
        } else {
            vec![0; n]
        };

        let next = AtomicU64::new(0);
        let done = AtomicU64::new(0);
        let chunks = self.config.iterations.div_ceil(CHUNK);
        let workers = (self.config.workers as u64).min(chunks).max(1) as usize;

        let partials: Vec<Vec<i128>> = if workers == 1 {
            vec![self.run_worker(&next, &done, progress)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|_| scope.spawn(|| self.run_worker(&next, &done, progress)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scoring worker panicked"))
                    .collect()
            })
        };
        for partial in &partials {
            for (t, p) in total.iter_mut().zip(partial) {
                *t += p;
            }
        }
        ScoreVector {
            values: total.into_iter().map(from_fixed).collect(),
        }
    }
}

/// Scores every example of `matrix` under `config`.
pub fn score_dataset(matrix: &EmbeddingMatrix, config: &ScoreConfig) -> Result<ScoreVector> {
    score_dataset_with_progress(matrix, config, &|_| {})
}

pub fn score_dataset_with_progress(
    matrix: &EmbeddingMatrix,
    config: &ScoreConfig,
    progress: &(dyn Fn(u64) + Sync),
) -> Result<ScoreVector> {
    Ok(Scorer::new(matrix, config.clone())?.run(progress))
}
