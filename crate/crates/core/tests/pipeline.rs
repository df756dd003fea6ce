use zcore::selection::{read_indices, read_manifest, read_weights};
use zcore::{
    concat_matrices, gen_synthetic, load_matrix_auto, load_scores, save_matrix, save_scores,
    score_dataset, select_coreset, write_selection, MatrixFormat, ScoreConfig, ScoreFormat,
    SyntheticSpec,
};

#[test]
fn both_matrix_formats_load_identically() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = gen_synthetic(&SyntheticSpec::two_cluster_example(1)).unwrap();
    let npy = dir.path().join("z.npy");
    let raw = dir.path().join("z.bin");
    save_matrix(&matrix, &npy, MatrixFormat::Npy).unwrap();
    save_matrix(&matrix, &raw, MatrixFormat::RawF32).unwrap();
    assert_eq!(load_matrix_auto(&npy).unwrap(), matrix);
    assert_eq!(load_matrix_auto(&raw).unwrap(), matrix);
}

#[test]
fn score_save_select_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_synthetic(&SyntheticSpec::two_cluster_example(2)).unwrap();
    let b = gen_synthetic(&SyntheticSpec::two_cluster_example(3)).unwrap();
    let matrix = concat_matrices(&[a, b]).unwrap();
    assert_eq!(matrix.n_dims(), 16);

    let config = ScoreConfig {
        iterations: 3_000,
        neighbors: 20,
        seed: 4,
        ..ScoreConfig::default()
    };
    let scores = score_dataset(&matrix, &config).unwrap();
    for (name, format) in [("s.npy", ScoreFormat::Npy), ("s.csv", ScoreFormat::Csv)] {
        let path = dir.path().join(name);
        save_scores(&scores, &path, format).unwrap();
        let back = load_scores(&path, format).unwrap();
        assert_eq!(back.as_slice(), scores.as_slice(), "{name}");
    }

    let result = select_coreset(&scores, 0.8).unwrap();
    let out = dir.path().join("sel");
    write_selection(&result, Some(&config), &out).unwrap();
    assert_eq!(read_indices(out.join("indices.txt")).unwrap(), result.kept_indices);
    assert_eq!(read_weights(out.join("weights.csv")).unwrap(), result.weights);
    let manifest = read_manifest(out.join("selection.json")).unwrap();
    assert_eq!((manifest.n, manifest.n_total), (40, 200));
    assert_eq!(manifest.config.unwrap().seed, 4);
}
