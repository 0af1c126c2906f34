use std::path::Path;

use super::{payload_size, read_bytes, write_bytes, FormatError, HeaderTokens};
use crate::model::{Grid, Image};

/// Sample depth used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmDepth {
    /// maxval 255, one byte per sample.
    Eight,
    /// maxval 65535, two big-endian bytes per sample.
    Sixteen,
}

/// Decodes a binary (P5) PGM. Samples are normalized to the 8-bit scale
/// `[0, 255]` regardless of the file's maxval.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut header = HeaderTokens::new(bytes, true);
    let (offset, magic) = header.next_token()?;
    if magic != "P5" {
        return Err(FormatError::MalformedHeader {
            offset,
            reason: format!("bad magic {magic:?}, expected P5"),
        });
    }
    let dims_offset = header.pos();
    let width = header.next_dimension()?;
    let height = header.next_dimension()?;
    let (maxval_offset, token) = header.next_token()?;
    let maxval: u32 = token.parse().map_err(|_| FormatError::MalformedHeader {
        offset: maxval_offset,
        reason: format!("bad maxval {token:?}"),
    })?;
    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::UnsupportedMaxval {
            offset: maxval_offset,
            maxval,
        });
    }
    let data_start = header.end_of_header()?;
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let expected = payload_size(width, height, sample_bytes, dims_offset)?;
    let available = bytes.len() - data_start;
    if available < expected {
        return Err(FormatError::TruncatedPayload {
            offset: data_start + available,
            expected,
            found: available,
        });
    }
    let payload = &bytes[data_start..data_start + expected];
    let scale = 255.0 / maxval as f64;
    let pixels: Vec<f64> = if sample_bytes == 1 {
        payload.iter().map(|&b| b as f64 * scale).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok(Image::new(Grid::from_vec(width, height, pixels)?)?)
}

/// Values are clamped to `[0, 255]` and rounded to the nearest code.
pub fn encode_pgm(image: &Image, depth: PgmDepth) -> Vec<u8> {
    let (width, height) = image.dims();
    let maxval = match depth {
        PgmDepth::Eight => 255,
        PgmDepth::Sixteen => 65535,
    };
    let header = format!("P5\n{width} {height}\n{maxval}\n");
    let mut out = header.into_bytes();
    let scale = maxval as f64 / 255.0;
    for &x in image.pixels() {
        let code = (x.clamp(0.0, 255.0) * scale).round();
        match depth {
            PgmDepth::Eight => out.push(code as u8),
            PgmDepth::Sixteen => out.extend_from_slice(&(code as u16).to_be_bytes()),
        }
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Image, FormatError> {
    parse_pgm(&read_bytes(path)?)
}

pub fn write_pgm(image: &Image, depth: PgmDepth, path: &Path) -> Result<(), FormatError> {
    write_bytes(path, &encode_pgm(image, depth))
}
