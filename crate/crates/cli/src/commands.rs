use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use zcore::diagnostics::check_distribution;
use zcore::{
    compare_scores, compute_dim_stats, concat_matrices, gen_synthetic, load_matrix_auto,
    load_scores, oracle_score, save_matrix, save_scores, score_dataset, score_dataset_with_progress,
    select_coreset, write_selection, EmbeddingMatrix, Error, MatrixFormat, Result, ScoreConfig,
    ScoreFormat, ScoreVector, SyntheticSpec,
};

use crate::args::{CheckDistArgs, ScoreArgs, SelectArgs, StatsArgs, SynthArgs, VerifyArgs};

const VERIFY_ITERATIONS: u64 = 10_000;

fn load_embeddings(paths: &[PathBuf]) -> Result<EmbeddingMatrix> {
    let parts = paths
        .iter()
        .map(load_matrix_auto)
        .collect::<Result<Vec<_>>>()?;
    concat_matrices(&parts)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Path of the config written next to a score file.
pub fn sidecar_path(scores: &Path) -> PathBuf {
    let mut name = scores.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| io_error(p, source)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_spec(path: Option<&Path>, seed: u64) -> Result<SyntheticSpec> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| io_error(p, source))?;
            SyntheticSpec::from_json(&text)
        }
        None => Ok(SyntheticSpec::two_cluster_example(seed)),
    }
}

pub fn score(args: &ScoreArgs) -> Result<()> {
    let format = ScoreFormat::from_path(&args.out)?;
    let config = args.config.resolve(ScoreConfig::default())?;
    let mut matrix = load_embeddings(&args.embeddings)?;
    if args.standardize {
        matrix = matrix.standardized();
    }
    config.validate(matrix.n_dims())?;
    eprintln!(
        "scoring N={} M={} T={} m={} alpha={} beta={} dist={} workers={}",
        matrix.n_examples(),
        matrix.n_dims(),
        config.iterations,
        config.sample_dims,
        config.neighbors,
        config.distance_exponent,
        config.kind,
        config.workers
    );

    let total = config.iterations;
    let step = (total / 100).max(1);
    let logged = AtomicU64::new(0);
    let progress = |done: u64| {
        let mark = done / step;
        if logged.fetch_max(mark, Ordering::Relaxed) < mark {
            eprintln!("progress {done}/{total}");
        }
    };
    let start = Instant::now();
    let scores = score_dataset_with_progress(&matrix, &config, &progress)?;
    let seconds = start.elapsed().as_secs_f64();

    save_scores(&scores, &args.out, format)?;
    let sidecar = sidecar_path(&args.out);
    let json = serde_json::to_string_pretty(&config)
        .map_err(|e| Error::Format(format!("cannot encode config: {e}")))?;
    fs::write(&sidecar, json + "\n")
        .map_err(|source| io_error(&sidecar, source))?;
    println!(
        "zcore-result N={} M={} T={} seconds={seconds:.3}",
        matrix.n_examples(),
        matrix.n_dims(),
        config.iterations
    );
    Ok(())
}

pub fn select(args: &SelectArgs) -> Result<()> {
    let scores = load_scores(&args.scores, ScoreFormat::from_path(&args.scores)?)?;
    let result = select_coreset(&scores, args.rate)?;
    let config: Option<ScoreConfig> = fs::read_to_string(sidecar_path(&args.scores))
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok());
    write_selection(&result, config.as_ref(), &args.out_dir)?;
    println!("selected n={} of N={}", result.n, result.n_total());
    Ok(())
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let matrix = load_embeddings(&args.embeddings)?;
    let s = compute_dim_stats(&matrix);
    let mut csv = String::from("dim,min,median,max\n");
    for d in 0..s.n_dims() {
        csv.push_str(&format!("{d},{},{},{}\n", s.mins[d], s.medians[d], s.maxs[d]));
    }
    write_text(args.out.as_deref(), &csv)?;
    eprintln!("N={} M={}", matrix.n_examples(), matrix.n_dims());
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = load_spec(args.spec.as_deref(), args.seed)?;
    let matrix = gen_synthetic(&spec)?;
    save_matrix(&matrix, &args.out, MatrixFormat::from_path(&args.out))?;
    println!("wrote N={} M={} to {}", matrix.n_examples(), matrix.n_dims(), args.out.display());
    Ok(())
}

pub fn check_dist(args: &CheckDistArgs) -> Result<()> {
    let matrix = load_embeddings(&args.embeddings)?;
    let check = check_distribution(&matrix, args.dim, args.kind, args.samples, args.seed)?;
    write_text(args.out.as_deref(), &check.to_csv())?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    eprintln!("dim={} kind={} median={}", check.dim, check.kind, check.median);
    eprintln!("ks={}", fmt(check.ks));
    eprintln!("fraction_below_median={}", fmt(check.fraction_below_median));
    Ok(())
}

/// Returns whether both comparisons passed.
pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let base = ScoreConfig {
        iterations: VERIFY_ITERATIONS,
        ..ScoreConfig::default()
    };
    let config = args.config.resolve(base)?;
    let matrix = gen_synthetic(&load_spec(args.spec.as_deref(), config.seed)?)?;
    let mut engine = score_dataset(&matrix, &config)?;
    if let Some(delta) = args.perturb {
        engine.as_mut_slice()[0] += delta;
    }
    let oracle = oracle_score(&matrix, &config)?;
    let against_oracle = compare_scores(&engine, &oracle, args.tol)?;
    println!(
        "oracle: N={} M={} T={} max_abs_diff={:e} worst_index={} tol={:e} {}",
        matrix.n_examples(),
        matrix.n_dims(),
        config.iterations,
        against_oracle.max_abs_diff,
        against_oracle.worst_index,
        args.tol,
        verdict(against_oracle.passed)
    );

    let with_workers = |workers| -> Result<ScoreVector> {
        score_dataset(&matrix, &ScoreConfig { workers, ..config.clone() })
    };
    let serial = with_workers(1)?;
    let parallel = with_workers(8)?;
    let across = compare_scores(&serial, &parallel, 0.0)?;
    println!(
        "workers: W=1 vs W=8 max_abs_diff={:e} worst_index={} {}",
        across.max_abs_diff,
        across.worst_index,
        verdict(across.passed)
    );
    Ok(against_oracle.passed && across.passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}
