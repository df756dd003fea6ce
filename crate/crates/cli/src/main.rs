mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Score(a) => commands::score(a).map(|_| true),
        Command::Select(a) => commands::select(a).map(|_| true),
        Command::Stats(a) => commands::stats(a).map(|_| true),
        Command::Synth(a) => commands::synth(a).map(|_| true),
        Command::CheckDist(a) => commands::check_dist(a).map(|_| true),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("zcore: verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("zcore: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use std::path::Path;
    use zcore::{DistributionKind, ScoreConfig};

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bare_score_uses_standard_settings() {
        let cli = Cli::try_parse_from(["zcore", "score", "--emb", "x.npy", "--out", "s.npy"]).unwrap();
        let Command::Score(a) = cli.command else { panic!() };
        let c = a.config.resolve(ScoreConfig::default()).unwrap();
        assert_eq!(c.iterations, 1_000_000);
        assert_eq!(c.sample_dims, 2);
        assert_eq!(c.neighbors, 1000);
        assert_eq!(c.distance_exponent, 4.0);
        assert_eq!(c.kind, DistributionKind::Triangular);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "T = 500\nalpha = 3\ndist = uniform\n").unwrap();
        let cli = Cli::try_parse_from([
            "zcore", "score", "--emb", "a", "--emb", "b", "--out", "s.csv",
            "--config", file.to_str().unwrap(), "--alpha", "7", "--no-redundancy",
        ])
        .unwrap();
        let Command::Score(a) = cli.command else { panic!() };
        assert_eq!(a.embeddings.len(), 2);
        let c = a.config.resolve(ScoreConfig::default()).unwrap();
        assert_eq!((c.iterations, c.neighbors, c.kind), (500, 7, DistributionKind::Uniform));
        assert!(!c.enable_redundancy && c.enable_random_init);
    }

    #[test]
    fn rejects_unknown_flags_and_missing_required() {
        assert!(Cli::try_parse_from(["zcore", "score", "--emb", "a", "--out", "b", "--gamma", "1"]).is_err());
        assert!(Cli::try_parse_from(["zcore", "score", "--out", "b"]).is_err());
        assert!(Cli::try_parse_from(["zcore", "select", "--scores", "s.npy", "--out-dir", "d"]).is_err());
        assert!(Cli::try_parse_from(["zcore", "score", "--emb", "a", "--out", "b", "--dist", "cauchy"]).is_err());
    }

    #[test]
    fn sidecar_appends_json() {
        assert_eq!(commands::sidecar_path(Path::new("out/s.npy")), Path::new("out/s.npy.json"));
    }
}
