//! Readers and writers for the toolkit's on-disk formats.
//!
//! Every format has a pure byte-level codec (`parse_*` / `encode_*`) and
//! thin path-based wrappers. Orientation conversions (PFM is stored
//! bottom-up) live here and nowhere else.

mod calibration;
mod pfm;
mod pgm;
mod ply;
mod series;

pub use calibration::{encode_calibration, parse_calibration, read_calibration, write_calibration};
pub use pfm::{
    disparity_from_pfm, disparity_to_pfm, encode_pfm, image_from_pfm, image_to_pfm, parse_pfm, read_pfm, write_pfm,
};
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm, PgmDepth};
pub use ply::{encode_ply, parse_ply, read_ply, write_ply, PlyEncoding};
pub use series::{encode_series_csv, parse_series_csv, read_series_csv, write_series_csv};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("dimensions at byte {offset} overflow the addressable size")]
    DimensionOverflow { offset: usize },
    #[error("payload truncated at byte {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("unsupported channel layout (only single-channel \"Pf\" maps are accepted)")]
    UnsupportedChannels,
    #[error("unsupported maxval {maxval} at byte {offset}")]
    UnsupportedMaxval { offset: usize, maxval: u32 },
    #[error("malformed body at {location}: {reason}")]
    MalformedBody { location: String, reason: String },
    #[error("missing key \"{0}\"")]
    MissingKey(String),
    #[error("invalid value for \"{key}\": {reason}")]
    InvalidValue { key: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FormatError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, FormatError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Cursor over a whitespace-separated ASCII header (PFM / PGM).
pub(crate) struct HeaderTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
    comments: bool,
}

impl<'a> HeaderTokens<'a> {
    pub(crate) fn new(bytes: &'a [u8], comments: bool) -> Self {
        Self {
            bytes,
            pos: 0,
            comments,
        }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if self.comments && b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Next token and the byte offset where it starts.
    pub(crate) fn next_token(&mut self) -> Result<(usize, &'a str), FormatError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::MalformedHeader {
                offset: start,
                reason: "unexpected end of header".into(),
            });
        }
        let token = std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| FormatError::MalformedHeader {
            offset: start,
            reason: "non-ASCII header token".into(),
        })?;
        Ok((start, token))
    }

    pub(crate) fn next_dimension(&mut self) -> Result<usize, FormatError> {
        let (offset, token) = self.next_token()?;
        if !token.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FormatError::MalformedHeader {
                offset,
                reason: format!("expected a dimension, found {token:?}"),
            });
        }
        let value: usize = token.parse().map_err(|_| FormatError::DimensionOverflow { offset })?;
        if value == 0 {
            return Err(FormatError::MalformedHeader {
                offset,
                reason: "zero dimension".into(),
            });
        }
        Ok(value)
    }

    /// Consumes the single whitespace byte that terminates a binary header.
    pub(crate) fn end_of_header(&mut self) -> Result<usize, FormatError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(FormatError::MalformedHeader {
                offset: self.pos,
                reason: "header must end with a single whitespace byte".into(),
            }),
        }
    }
}

/// `width * height * sample_bytes`, or an overflow error naming `offset`.
pub(crate) fn payload_size(
    width: usize,
    height: usize,
    sample_bytes: usize,
    offset: usize,
) -> Result<usize, FormatError> {
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(sample_bytes))
        .filter(|&n| n <= isize::MAX as usize)
        .ok_or(FormatError::DimensionOverflow { offset })
}
