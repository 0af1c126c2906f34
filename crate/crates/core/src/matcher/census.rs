use rayon::prelude::*;

use super::{check_dims, CostVolume, MatchError, MatchParams, Volume};
use crate::model::{Grid, Image};

/// Census signature per pixel: one bit per window neighbour, set when the
/// neighbour is darker than the centre. Samples beyond the border are
/// clamped to the nearest edge pixel.
pub fn census_transform(image: &Image, window: usize) -> Grid<u128> {
    let (w, h) = image.dims();
    let r = (window / 2) as isize;
    let px = image.pixels();
    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0u128; w * h];
    out.par_chunks_mut(w.max(1)).enumerate().for_each(|(v, row)| {
        for (u, sig) in row.iter_mut().enumerate() {
            let center = px[v * w + u];
            let mut bits = 0u128;
            for dy in -r..=r {
                let y = clamp(v as isize + dy, h);
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let x = clamp(u as isize + dx, w);
                    bits = (bits << 1) | u128::from(px[y * w + x] < center);
                }
            }
            *sig = bits;
        }
    });
    Grid::from_vec(w, h, out).expect("dimensions match")
}

/// Hamming distance between the census signatures of `I_l(u, v)` and
/// `I_r(u - d, v)`. Candidates that fall off the right image cost the full
/// signature length.
pub fn census_cost_volume(left: &Image, right: &Image, params: &MatchParams) -> Result<CostVolume, MatchError> {
    params.validate()?;
    check_dims(left, right)?;
    let (w, h) = left.dims();
    let n = params.ndisp();
    let max_cost = params.census_bits() as u16;
    let cl = census_transform(left, params.census_window);
    let cr = census_transform(right, params.census_window);

    let mut data = vec![0u16; w * h * n];
    let mut informative = vec![false; w * h];
    data.par_chunks_mut((w * n).max(1))
        .zip(informative.par_chunks_mut(w.max(1)))
        .enumerate()
        .for_each(|(v, (row, info))| {
            let (lrow, rrow) = (cl.row(v), cr.row(v));
            for u in 0..w {
                let curve = &mut row[u * n..(u + 1) * n];
                let mut lo = u16::MAX;
                let mut hi = 0u16;
                for (k, c) in curve.iter_mut().enumerate() {
                    let d = params.d_min + k;
                    *c = if d <= u {
                        let cost = (lrow[u] ^ rrow[u - d]).count_ones() as u16;
                        lo = lo.min(cost);
                        hi = hi.max(cost);
                        cost
                    } else {
                        max_cost
                    };
                }
                info[u] = lo < hi;
            }
        });

    Ok(Volume {
        width: w,
        height: h,
        d_min: params.d_min,
        ndisp: n,
        data,
        informative,
    })
}
