//! The subset of the numpy `.npy` v1.0 container used here: little-endian
//! `<f4` 2-D matrices and `<f8` 1-D vectors in C order.

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const PREAMBLE: usize = MAGIC.len() + 2 + 2;
const ALIGN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub descr: String,
    pub fortran_order: bool,
    pub shape: Vec<usize>,
}

impl Header {
    fn render(&self) -> String {
        let shape = match self.shape.as_slice() {
            [single] => format!("({single},)"),
            dims => {
                let parts: Vec<String> = dims.iter().map(ToString::to_string).collect();
                format!("({})", parts.join(", "))
            }
        };
        let order = if self.fortran_order { "True" } else { "False" };
        format!(
            "{{'descr': '{}', 'fortran_order': {order}, 'shape': {shape}, }}",
            self.descr
        )
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut dict = self.render();
        let unpadded = PREAMBLE + dict.len() + 1;
        let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
        dict.extend(std::iter::repeat_n(' ', padding));
        dict.push('\n');

        let mut out = Vec::with_capacity(PREAMBLE + dict.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out
    }

    /// Parses the header and returns it with the payload offset.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < PREAMBLE || bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Format("missing npy magic".into()));
        }
        let (major, minor) = (bytes[6], bytes[7]);
        if (major, minor) != (1, 0) {
            return Err(Error::Format(format!(
                "npy version {major}.{minor} not supported, expected 1.0"
            )));
        }
        let len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let end = PREAMBLE + len;
        let text = bytes
            .get(PREAMBLE..end)
            .ok_or_else(|| Error::Format("npy header truncated".into()))?;
        let text = std::str::from_utf8(text)
            .map_err(|_| Error::Format("npy header is not ASCII".into()))?;
        Ok((parse_dict(text)?, end))
    }
}

fn parse_dict(text: &str) -> Result<Header> {
    let bad = |msg: &str| Error::Format(format!("npy header: {msg}"));
    let body = text
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| bad("not a dict literal"))?;

    let mut descr = None;
    let mut fortran_order = None;
    let mut shape = None;
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let (key, tail) = take_quoted(rest).ok_or_else(|| bad("expected quoted key"))?;
        let tail = tail
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| bad("expected ':'"))?
            .trim_start();
        let tail = match key {
            "descr" => {
                let (value, tail) = take_quoted(tail).ok_or_else(|| bad("descr not a string"))?;
                descr = Some(value.to_string());
                tail
            }
            "fortran_order" => {
                if let Some(t) = tail.strip_prefix("False") {
                    fortran_order = Some(false);
                    t
                } else if let Some(t) = tail.strip_prefix("True") {
                    fortran_order = Some(true);
                    t
                } else {
                    return Err(bad("fortran_order not a bool"));
                }
            }
            "shape" => {
                let inner = tail.strip_prefix('(').ok_or_else(|| bad("shape not a tuple"))?;
                let close = inner.find(')').ok_or_else(|| bad("unterminated shape"))?;
                let dims = inner[..close]
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|_| bad("bad shape entry")))
                    .collect::<Result<Vec<_>>>()?;
                shape = Some(dims);
                &inner[close + 1..]
            }
            other => return Err(bad(&format!("unexpected key '{other}'"))),
        };
        rest = tail.trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }

    Ok(Header {
        descr: descr.ok_or_else(|| bad("missing descr"))?,
        fortran_order: fortran_order.ok_or_else(|| bad("missing fortran_order"))?,
        shape: shape.ok_or_else(|| bad("missing shape"))?,
    })
}

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let quote = s.chars().next().filter(|c| *c == '\'' || *c == '"')?;
    let inner = &s[1..];
    let end = inner.find(quote)?;
    Some((&inner[..end], &inner[end + 1..]))
}

fn check_layout(header: &Header, descr: &str, rank: usize) -> Result<()> {
    if header.descr != descr {
        return Err(Error::Format(format!(
            "dtype '{}' not supported, expected '{descr}'",
            header.descr
        )));
    }
    if header.fortran_order {
        return Err(Error::Format("fortran_order arrays are not supported".into()));
    }
    if header.shape.len() != rank {
        return Err(Error::Shape(format!(
            "expected a {rank}-D array, got shape {:?}",
            header.shape
        )));
    }
    Ok(())
}

fn payload(bytes: &[u8], offset: usize, count: usize, width: usize) -> Result<&[u8]> {
    let len = count
        .checked_mul(width)
        .ok_or_else(|| Error::Shape("array too large".into()))?;
    let data = &bytes[offset..];
    if data.len() != len {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {len}",
            data.len()
        )));
    }
    Ok(data)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let (header, offset) = Header::decode(bytes)?;
    check_layout(&header, "<f4", 2)?;
    let (n, m) = (header.shape[0], header.shape[1]);
    let count = n
        .checked_mul(m)
        .ok_or_else(|| Error::Shape("array too large".into()))?;
    let data = payload(bytes, offset, count, 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingMatrix::new(n, m, data)
}

pub fn encode_matrix(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let header = Header {
        descr: "<f4".into(),
        fortran_order: false,
        shape: vec![matrix.n_examples(), matrix.n_dims()],
    };
    let mut out = header.encode();
    out.reserve(matrix.as_slice().len() * 4);
    for v in matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_vector(bytes: &[u8]) -> Result<Vec<f64>> {
    let (header, offset) = Header::decode(bytes)?;
    check_layout(&header, "<f8", 1)?;
    Ok(payload(bytes, offset, header.shape[0], 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn encode_vector(values: &[f64]) -> Vec<u8> {
    let header = Header {
        descr: "<f8".into(),
        fortran_order: false,
        shape: vec![values.len()],
    };
    let mut out = header.encode();
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
