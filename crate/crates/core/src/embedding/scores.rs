use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::npy;
use crate::engine::ScoreVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    /// `.npy` v1.0, dtype `<f8`, 1-D.
    Npy,
    /// `index,score` header followed by one row per example.
    Csv,
}

impl ScoreFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("npy") => Ok(ScoreFormat::Npy),
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Ok(ScoreFormat::Csv),
            _ => Err(Error::Config(format!(
                "{}: score files must end in .npy or .csv",
                path.display()
            ))),
        }
    }
}

pub fn encode_scores_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 12);
    out.push_str("index,score\n");
    for (i, v) in values.iter().enumerate() {
        // Display for f64 is the shortest representation that round-trips
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

/// Parses `index,<value>` rows after a header, requiring indices 0, 1, 2, ...
pub fn parse_indexed_csv(text: &str, value_name: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let expected_header = format!("index,{value_name}");
    match lines.next().map(str::trim) {
        Some(h) if h == expected_header => {}
        other => {
            return Err(Error::Format(format!(
                "expected header '{expected_header}', found {other:?}"
            )))
        }
    }
    let mut values = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: cannot parse '{line}'", line_no + 2));
        let (idx, value) = line.split_once(',').ok_or_else(bad)?;
        let idx: usize = idx.trim().parse().map_err(|_| bad())?;
        if idx != values.len() {
            return Err(Error::Format(format!(
                "line {}: index {idx} out of order, expected {}",
                line_no + 2,
                values.len()
            )));
        }
        values.push(value.trim().parse::<f64>().map_err(|_| bad())?);
    }
    Ok(values)
}

pub fn save_scores(scores: &ScoreVector, path: impl AsRef<Path>, format: ScoreFormat) -> Result<()> {
    let path = path.as_ref();
    if scores.is_empty() {
        return Err(Error::Validation("refusing to write an empty score vector".into()));
    }
    let bytes = match format {
        ScoreFormat::Npy => npy::encode_vector(scores.as_slice()),
        ScoreFormat::Csv => encode_scores_csv(scores.as_slice()).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_scores(path: impl AsRef<Path>, format: ScoreFormat) -> Result<ScoreVector> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let values = match format {
        ScoreFormat::Npy => npy::decode_vector(&bytes)?,
        ScoreFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|_| Error::Format(format!("{}: not UTF-8", path.display())))?;
            parse_indexed_csv(text, "score")?
        }
    };
    ScoreVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let scores = ScoreVector::new(vec![0.5, 1.25, -3.0e-17, 0.1 + 0.2]).unwrap();
        for (name, format) in [("s.npy", ScoreFormat::Npy), ("s.csv", ScoreFormat::Csv)] {
            let path = dir.path().join(name);
            save_scores(&scores, &path, format).unwrap();
            assert_eq!(ScoreFormat::from_path(&path).unwrap(), format);
            let back = load_scores(&path, format).unwrap();
            assert_eq!(back.as_slice(), scores.as_slice());
        }
    }

    #[test]
    fn csv_layout() {
        let text = encode_scores_csv(&[0.5, 1.25]);
        assert_eq!(text, "index,score\n0,0.5\n1,1.25\n");
        assert_eq!(parse_indexed_csv(&text, "score").unwrap(), vec![0.5, 1.25]);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(parse_indexed_csv("index,score\n1,0.5\n", "score").is_err());
        assert!(parse_indexed_csv("idx,score\n0,0.5\n", "score").is_err());
        assert!(parse_indexed_csv("index,score\n0,abc\n", "score").is_err());
    }

    #[test]
    fn empty_vector_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let empty = ScoreVector::zeros(0);
        let err = save_scores(&empty, dir.path().join("e.npy"), ScoreFormat::Npy).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = ScoreVector::new(vec![1.0]).unwrap();
        let err = save_scores(&s, dir.path().join("missing/x.npy"), ScoreFormat::Npy).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
