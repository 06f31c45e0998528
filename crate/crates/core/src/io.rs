//! Grid file formats.
//!
//! FGD1 is a little-endian container:
//!
//! ```text
//! offset  size      field
//! 0       4         magic "FGD1"
//! 4       4         u32 rank (2 or 3)
//! 8       4*rank    u32 extents, (depth,) height, width
//! ..      4*rank    f32 spacing, same order
//! ..      4*N       f32 data, row-major, width fastest
//! ```
//!
//! Binary PGM (P5) is supported for 2D intensity import and for 8-bit
//! previews of distance maps.

use std::io::{Read, Write};

use thiserror::Error;

use crate::grid::{ScalarGrid, INF_SENTINEL};

pub const FGD1_MAGIC: [u8; 4] = *b"FGD1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic at offset {offset}: expected \"FGD1\"")]
    BadMagic { offset: usize },
    #[error("bad rank {rank} at offset {offset}: expected 2 or 3")]
    BadRank { offset: usize, rank: u32 },
    #[error("invalid extent {value} at offset {offset}")]
    InvalidExtent { offset: usize, value: u32 },
    #[error("invalid spacing {value} at offset {offset}")]
    InvalidSpacing { offset: usize, value: f32 },
    #[error("truncated at offset {offset}: expected {expected} bytes, got {actual}")]
    Truncated {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("trailing data at offset {offset}: expected {expected} bytes, got {actual}")]
    TrailingData {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: expected {expected} bytes, got {actual}")]
    PayloadSize { expected: usize, actual: usize },
    #[error("preview needs a 2D grid, got rank {0}")]
    Rank(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes `grid` as FGD1 and returns the number of bytes written.
pub fn write_grid_fgd1<W: Write>(grid: &ScalarGrid, mut sink: W) -> Result<usize, FormatError> {
    let mut buf = Vec::with_capacity(8 + 8 * grid.ndim() + 4 * grid.len());
    buf.extend_from_slice(&FGD1_MAGIC);
    buf.extend_from_slice(&(grid.ndim() as u32).to_le_bytes());
    for &d in grid.dims() {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &s in grid.spacing() {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    for &v in grid.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

fn truncated(offset: usize, expected: usize, actual: usize) -> FormatError {
    FormatError::Truncated {
        offset,
        expected,
        actual,
    }
}

fn word(bytes: &[u8], offset: usize, expected: usize) -> Result<[u8; 4], FormatError> {
    bytes
        .get(offset..offset + 4)
        .map(|w| w.try_into().unwrap())
        .ok_or_else(|| truncated(offset, expected.max(offset + 4), bytes.len()))
}

/// Reads an FGD1 stream, validating every header field and the exact
/// payload length.
pub fn read_grid_fgd1<R: Read>(mut source: R) -> Result<ScalarGrid, FormatError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_fgd1(&bytes)
}

pub fn parse_fgd1(bytes: &[u8]) -> Result<ScalarGrid, FormatError> {
    if bytes.len() < 4 {
        return Err(truncated(0, 4, bytes.len()));
    }
    if bytes[..4] != FGD1_MAGIC {
        return Err(FormatError::BadMagic { offset: 0 });
    }
    let rank = u32::from_le_bytes(word(bytes, 4, 8)?);
    if rank != 2 && rank != 3 {
        return Err(FormatError::BadRank { offset: 4, rank });
    }
    let ndim = rank as usize;
    let header_len = 8 + 8 * ndim;

    let mut dims = Vec::with_capacity(ndim);
    for axis in 0..ndim {
        let offset = 8 + 4 * axis;
        let value = u32::from_le_bytes(word(bytes, offset, header_len)?);
        if value == 0 {
            return Err(FormatError::InvalidExtent { offset, value });
        }
        dims.push(value as usize);
    }
    let mut spacing = Vec::with_capacity(ndim);
    for axis in 0..ndim {
        let offset = 8 + 4 * ndim + 4 * axis;
        let value = f32::from_le_bytes(word(bytes, offset, header_len)?);
        if !(value > 0.0) || !value.is_finite() {
            return Err(FormatError::InvalidSpacing { offset, value });
        }
        spacing.push(value);
    }

    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(header_len))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(truncated(bytes.len(), expected, bytes.len()));
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingData {
            offset: expected,
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes[header_len..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarGrid::from_vec(&dims, &spacing, data)
        .map_err(|e| FormatError::MalformedHeader(e.to_string()))
}

/// Cursor over a netpbm header: whitespace-separated tokens, `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::MalformedHeader(format!("missing or invalid {what}")))
    }
}

/// Reads a binary PGM as a 2D intensity grid normalised by maxval, with unit
/// spacing.
pub fn read_pgm<R: Read>(mut source: R) -> Result<ScalarGrid, FormatError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ScalarGrid, FormatError> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(m) => {
            return Err(FormatError::UnsupportedFormat(format!(
                "magic {:?}, only binary P5 is supported",
                String::from_utf8_lossy(m)
            )))
        }
        None => return Err(FormatError::MalformedHeader("missing magic".into())),
    }
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::MalformedHeader("zero extent".into()));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(FormatError::MalformedHeader(format!("maxval {maxval} out of range")));
    }
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(FormatError::MalformedHeader("missing separator after maxval".into())),
    }
    let sample = if maxval > 255 { 2 } else { 1 };
    let n = width as usize * height as usize;
    let payload = &bytes[cursor.pos..];
    if payload.len() != n * sample {
        return Err(FormatError::PayloadSize {
            expected: n * sample,
            actual: payload.len(),
        });
    }
    let scale = maxval as f32;
    let data = if sample == 1 {
        payload.iter().map(|&b| b as f32 / scale).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32 / scale)
            .collect()
    };
    ScalarGrid::from_vec(&[height as usize, width as usize], &[1.0, 1.0], data)
        .map_err(|e| FormatError::MalformedHeader(e.to_string()))
}

/// Writes an 8-bit preview of a 2D grid.
///
/// Finite values are min-max scaled to 0..=255 with round-half-up,
/// sentinel cells become 255 and a constant grid becomes all zeros.
pub fn write_pgm_preview<W: Write>(grid: &ScalarGrid, mut sink: W) -> Result<usize, FormatError> {
    if grid.ndim() != 2 {
        return Err(FormatError::Rank(grid.ndim()));
    }
    let is_sentinel = |v: f32| v.abs() >= INF_SENTINEL || !v.is_finite();
    let (lo, hi) = grid
        .data()
        .iter()
        .copied()
        .filter(|&v| !is_sentinel(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v as f64), hi.max(v as f64))
        });
    let range = hi - lo;
    let pixels: Vec<u8> = grid
        .data()
        .iter()
        .map(|&v| {
            if is_sentinel(v) {
                255
            } else if range > 0.0 {
                ((v as f64 - lo) / range * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let [h, w] = [grid.dims()[0], grid.dims()[1]];
    let mut buf = format!("P5\n{w} {h}\n255\n").into_bytes();
    buf.extend_from_slice(&pixels);
    sink.write_all(&buf)?;
    Ok(buf.len())
}

/// Extracts depth slice `z` of a 3D grid as a 2D grid.
pub fn slice_depth(grid: &ScalarGrid, z: usize) -> Option<ScalarGrid> {
    let [d, h, w] = grid.shape3();
    if grid.ndim() != 3 || z >= d {
        return None;
    }
    let data = grid.data()[z * h * w..(z + 1) * h * w].to_vec();
    ScalarGrid::from_vec(&[h, w], &grid.spacing()[1..], data).ok()
}
