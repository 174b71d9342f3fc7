//! The AEMB binary container for embedding matrices.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                          |
//! | ------ | ---- | ------------------------------ |
//! | 0      | 4    | magic `b"AEMB"`                |
//! | 4      | 2    | format version, `1`            |
//! | 6      | 2    | reserved, `0`                  |
//! | 8      | 8    | rows (`u64`)                   |
//! | 16     | 4    | dim (`u32`)                    |
//! | 20     | 4    | flags, bit 0 = normalized      |
//! | 24     | ...  | `rows * dim` IEEE-754 `f32`, row-major |
//!
//! No padding and no trailing bytes.

use alloc::vec::Vec;

use thiserror::Error;

use crate::matrix::{EmbeddingMatrix, MatrixError};

pub const AEMB_MAGIC: [u8; 4] = *b"AEMB";
pub const AEMB_VERSION: u16 = 1;
pub const AEMB_HEADER_LEN: usize = 24;

const FLAG_NORMALIZED: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AembError {
    #[error("bad magic {0:02x?}, expected \"AEMB\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("reserved header field is {0}, expected 0")]
    Reserved(u16),
    #[error("unknown flag bits {0:#x}")]
    UnknownFlags(u32),
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("dimension {0} does not fit the header")]
    DimTooLarge(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Serializes a matrix. Identical matrices always produce identical bytes.
pub fn encode_aemb(matrix: &EmbeddingMatrix) -> Result<Vec<u8>, AembError> {
    let dim = u32::try_from(matrix.dim()).map_err(|_| AembError::DimTooLarge(matrix.dim()))?;
    let mut out = Vec::with_capacity(AEMB_HEADER_LEN + matrix.values().len() * 4);
    out.extend_from_slice(&AEMB_MAGIC);
    out.extend_from_slice(&AEMB_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(matrix.rows() as u64).to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    let flags = if matrix.is_normalized() {
        FLAG_NORMALIZED
    } else {
        0
    };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a complete AEMB buffer.
///
/// A set normalized flag is re-checked against the row norms.
pub fn decode_aemb(bytes: &[u8]) -> Result<EmbeddingMatrix, AembError> {
    if bytes.len() < AEMB_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != AEMB_MAGIC {
            return Err(AembError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(AembError::Truncated {
            expected: AEMB_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let (header, payload) = bytes.split_at(AEMB_HEADER_LEN);
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != AEMB_MAGIC {
        return Err(AembError::BadMagic(magic));
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    if version != AEMB_VERSION {
        return Err(AembError::UnsupportedVersion(version));
    }
    let reserved = u16::from_le_bytes(header[6..8].try_into().unwrap());
    if reserved != 0 {
        return Err(AembError::Reserved(reserved));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(header[16..20].try_into().unwrap());
    let flags = u32::from_le_bytes(header[20..24].try_into().unwrap());
    if flags & !FLAG_NORMALIZED != 0 {
        return Err(AembError::UnknownFlags(flags & !FLAG_NORMALIZED));
    }

    let found = payload.len() as u64;
    let expected = rows
        .checked_mul(u64::from(dim))
        .and_then(|n| n.checked_mul(4))
        .unwrap_or(u64::MAX);
    if found < expected {
        return Err(AembError::Truncated {
            expected: expected.saturating_add(AEMB_HEADER_LEN as u64),
            found: found + AEMB_HEADER_LEN as u64,
        });
    }
    if found > expected {
        return Err(AembError::TrailingBytes(found - expected));
    }

    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    // Lengths were checked against the header, so these fit in usize.
    let matrix = EmbeddingMatrix::new(rows as usize, dim as usize, values)?;
    if flags & FLAG_NORMALIZED != 0 {
        Ok(matrix.mark_normalized()?)
    } else {
        Ok(matrix)
    }
}
