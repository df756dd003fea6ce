//! Raw f32 matrix files: `ZCEM`, u32 LE rows, u32 LE columns, four zero
//! bytes, then the row-major little-endian payload.

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ZCEM";
pub const HEADER_LEN: usize = 16;

pub fn encode(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.as_slice().len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(matrix.n_examples() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.n_dims() as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    for v in matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN || bytes[..4] != MAGIC {
        return Err(Error::Format("missing ZCEM magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (n, m) = (word(4) as usize, word(8) as usize);
    if word(12) != 0 {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let expected = n
        .checked_mul(m)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Shape(format!("{n}x{m} too large")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingMatrix::new(n, m, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_two_round_trip() {
        let m = EmbeddingMatrix::new(3, 2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
        let bytes = encode(&m);
        assert_eq!(&bytes[..4], b"ZCEM");
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn header_errors() {
        let m = EmbeddingMatrix::new(1, 1, vec![1.0]).unwrap();
        let mut bytes = encode(&m);
        bytes[12] = 1;
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
        assert!(matches!(decode(&bytes[..10]), Err(Error::Format(_))));
        let mut short = encode(&m);
        short.pop();
        assert!(matches!(decode(&short), Err(Error::Format(_))));
    }

    #[test]
    fn nan_row_and_column() {
        let n = 10;
        let m = 4;
        let mut data = vec![1.0f32; n * m];
        data[7 * m + 3] = f32::NAN;
        let mut bytes = Vec::from(MAGIC);
        bytes.extend_from_slice(&(n as u32).to_le_bytes());
        bytes.extend_from_slice(&(m as u32).to_le_bytes());
        bytes.extend_from_slice(&[0; 4]);
        for v in data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let err = decode(&bytes).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 7, col: 3 }));
        assert!(err.to_string().contains("row 7, column 3"));
    }
}
