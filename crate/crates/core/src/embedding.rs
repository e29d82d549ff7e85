//! Embedding matrix row selection and the `EMB1` binary format:
//! 16-byte header (magic `EMB1`, u32 rows, u32 dim, 4 reserved bytes)
//! followed by rows x dim little-endian f32 values, row-major.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::bpe::TokenId;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: u32,
    pub dim: u32,
    /// Row-major, `rows * dim` values.
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: u32, dim: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows as usize * dim as usize {
            return Err(Error::MalformedEmbedding(format!(
                "expected {} values for {rows}x{dim}, got {}",
                rows as usize * dim as usize,
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn row(&self, index: u32) -> &[f32] {
        let d = self.dim as usize;
        &self.data[index as usize * d..(index as usize + 1) * d]
    }
}

/// Select rows by old id and place them at their new ids. The new ids
/// must form a dense 0..n block; values are copied bit-identically.
pub fn embed_prune(matrix: &EmbeddingMatrix, id_map: &BTreeMap<TokenId, TokenId>) -> Result<EmbeddingMatrix> {
    let n = id_map.len();
    let mut seen = vec![false; n];
    for (&old, &new) in id_map {
        if old >= matrix.rows {
            return Err(Error::EmbeddingRowOutOfRange { row: old, rows: matrix.rows });
        }
        let slot = seen.get_mut(new as usize).ok_or_else(|| {
            Error::IdMapNotDense(format!("new id {new} outside 0..{n}"))
        })?;
        if *slot {
            return Err(Error::IdMapNotDense(format!("new id {new} assigned twice")));
        }
        *slot = true;
    }
    let d = matrix.dim as usize;
    let mut data = vec![0f32; n * d];
    for (&old, &new) in id_map {
        data[new as usize * d..(new as usize + 1) * d].copy_from_slice(matrix.row(old));
    }
    EmbeddingMatrix::new(n as u32, matrix.dim, data)
}

pub fn write_embedding(mut w: impl Write, matrix: &EmbeddingMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&matrix.rows.to_le_bytes())?;
    w.write_all(&matrix.dim.to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    for v in &matrix.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_embedding(mut r: impl Read) -> Result<EmbeddingMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::MalformedEmbedding("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::MalformedEmbedding("bad magic, expected EMB1".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let count = (rows as usize)
        .checked_mul(dim as usize)
        .ok_or_else(|| Error::MalformedEmbedding("rows*dim overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(Error::MalformedEmbedding(format!(
            "expected {} value bytes, got {}",
            count * 4,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(rows, dim, data)
}
