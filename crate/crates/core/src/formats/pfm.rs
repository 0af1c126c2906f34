use std::path::Path;

use super::{payload_size, read_bytes, write_bytes, FormatError, HeaderTokens};
use crate::model::{DisparityMap, Grid, Image};

/// Decodes a single-channel PFM. Both endiannesses are accepted (negative
/// scale = little endian); rows are returned top-down.
pub fn parse_pfm(bytes: &[u8]) -> Result<Grid<f32>, FormatError> {
    let mut header = HeaderTokens::new(bytes, false);
    let (offset, magic) = header.next_token()?;
    match magic {
        "Pf" => {}
        "PF" => return Err(FormatError::UnsupportedChannels),
        other => {
            return Err(FormatError::MalformedHeader {
                offset,
                reason: format!("bad magic {other:?}"),
            })
        }
    }
    let dims_offset = header.pos();
    let width = header.next_dimension()?;
    let height = header.next_dimension()?;
    let (scale_offset, scale_token) = header.next_token()?;
    let scale: f64 = scale_token
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| FormatError::MalformedHeader {
            offset: scale_offset,
            reason: format!("bad scale {scale_token:?}"),
        })?;
    let little_endian = scale < 0.0;
    let data_start = header.end_of_header()?;

    let expected = payload_size(width, height, 4, dims_offset)?;
    let available = bytes.len() - data_start;
    if available < expected {
        return Err(FormatError::TruncatedPayload {
            offset: data_start + available,
            expected,
            found: available,
        });
    }

    let payload = &bytes[data_start..data_start + expected];
    let mut data = vec![0f32; width * height];
    for (file_row, chunk) in payload.chunks_exact(width * 4).enumerate() {
        let v = height - 1 - file_row;
        for (u, sample) in chunk.chunks_exact(4).enumerate() {
            let raw = [sample[0], sample[1], sample[2], sample[3]];
            data[v * width + u] = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    Ok(Grid::from_vec(width, height, data)?)
}

/// Canonical encoding: `Pf`, scale -1.0, little endian, rows bottom-up.
pub fn encode_pfm(grid: &Grid<f32>) -> Vec<u8> {
    let (width, height) = grid.dims();
    let header = format!("Pf\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + width * height * 4);
    out.extend_from_slice(header.as_bytes());
    for v in (0..height).rev() {
        for x in grid.row(v) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> Result<Grid<f32>, FormatError> {
    parse_pfm(&read_bytes(path)?)
}

pub fn write_pfm(grid: &Grid<f32>, path: &Path) -> Result<(), FormatError> {
    write_bytes(path, &encode_pfm(grid))
}

pub fn image_to_pfm(image: &Image) -> Grid<f32> {
    image.grid().map(|&x| x as f32)
}

/// Fails on any non-finite sample.
pub fn image_from_pfm(grid: &Grid<f32>) -> Result<Image, FormatError> {
    Ok(Image::new(grid.map(|&x| x as f64))?)
}

/// Masked entries are written as NaN.
pub fn disparity_to_pfm(dmap: &DisparityMap) -> Grid<f32> {
    dmap.values().map(|&d| if d.is_nan() { f32::NAN } else { d as f32 })
}

/// Non-finite and non-positive samples become masked entries.
pub fn disparity_from_pfm(grid: &Grid<f32>) -> DisparityMap {
    DisparityMap::from_values_filtered(grid.map(|&x| x as f64), |_| true)
}
