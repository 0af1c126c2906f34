use rayon::prelude::*;

use super::{AggregatedVolume, CostVolume, MatchParams, Volume};

const FOUR_PATHS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const EIGHT_PATHS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

/// One step of the path recurrence. `prev` is the predecessor's path cost
/// and its minimum, or `None` where the path enters the image. Returns the
/// minimum of the new path cost.
#[inline]
fn step(cost: &[u16], prev: Option<(&[u32], u32)>, out: &mut [u32], p1: u32, p2: u32) -> u32 {
    let mut min = u32::MAX;
    match prev {
        None => {
            for (o, &c) in out.iter_mut().zip(cost) {
                *o = c as u32;
                min = min.min(*o);
            }
        }
        Some((prev, pmin)) => {
            let n = cost.len();
            let jump = pmin + p2;
            for k in 0..n {
                let mut best = prev[k].min(jump);
                if k > 0 {
                    best = best.min(prev[k - 1] + p1);
                }
                if k + 1 < n {
                    best = best.min(prev[k + 1] + p1);
                }
                let l = cost[k] as u32 + best - pmin;
                out[k] = l;
                min = min.min(l);
            }
        }
    }
    min
}

/// Sums the path costs
/// `L_r(p, d) = C(p, d) + min(L_r(p-r, d), L_r(p-r, d±1) + P1, min_k L_r(p-r, k) + P2) - min_k L_r(p-r, k)`
/// over 4 or 8 directions.
pub fn sgm_aggregate(cost: &CostVolume, params: &MatchParams) -> AggregatedVolume {
    let (w, h, n) = (cost.width, cost.height, cost.ndisp);
    let mut total = vec![0u32; w * h * n];
    let paths: &[(isize, isize)] = if params.paths == 4 { &FOUR_PATHS } else { &EIGHT_PATHS };
    for &(dx, dy) in paths {
        if dy == 0 {
            horizontal(cost, &mut total, dx, params.p1, params.p2);
        } else {
            sweep_rows(cost, &mut total, dx, dy, params.p1, params.p2);
        }
    }
    Volume {
        width: w,
        height: h,
        d_min: cost.d_min,
        ndisp: n,
        data: total,
        informative: cost.informative.clone(),
    }
}

/// Rows are independent along a horizontal path.
fn horizontal(cost: &CostVolume, total: &mut [u32], dx: isize, p1: u32, p2: u32) {
    let (w, n) = (cost.width, cost.ndisp);
    if w == 0 || n == 0 {
        return;
    }
    total.par_chunks_mut(w * n).enumerate().for_each(|(v, acc)| {
        let row = &cost.data[v * w * n..(v + 1) * w * n];
        let mut prev = vec![0u32; n];
        let mut cur = vec![0u32; n];
        let mut pmin = 0;
        let order: Box<dyn Iterator<Item = usize>> = if dx > 0 { Box::new(0..w) } else { Box::new((0..w).rev()) };
        for (i, u) in order.enumerate() {
            let c = &row[u * n..(u + 1) * n];
            let link = (i > 0).then_some((&prev[..], pmin));
            pmin = step(c, link, &mut cur, p1, p2);
            for (a, l) in acc[u * n..(u + 1) * n].iter_mut().zip(&cur) {
                *a += l;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
    });
}

/// Paths with a vertical component: each row depends only on the previous
/// row, so pixels within a row run in parallel.
fn sweep_rows(cost: &CostVolume, total: &mut [u32], dx: isize, dy: isize, p1: u32, p2: u32) {
    let (w, h, n) = (cost.width, cost.height, cost.ndisp);
    if w == 0 || n == 0 {
        return;
    }
    let mut prev = vec![0u32; w * n];
    let mut prev_min = vec![0u32; w];
    let mut cur = vec![0u32; w * n];
    let mut cur_min = vec![0u32; w];
    let rows: Vec<usize> = if dy > 0 {
        (0..h).collect()
    } else {
        (0..h).rev().collect()
    };
    for (i, &v) in rows.iter().enumerate() {
        let row = &cost.data[v * w * n..(v + 1) * w * n];
        let acc = &mut total[v * w * n..(v + 1) * w * n];
        cur.par_chunks_mut(n)
            .zip(cur_min.par_iter_mut())
            .zip(acc.par_chunks_mut(n))
            .enumerate()
            .for_each(|(u, ((out, m), a))| {
                let src = u as isize - dx;
                let link = (i > 0 && src >= 0 && (src as usize) < w).then(|| {
                    let s = src as usize;
                    (&prev[s * n..(s + 1) * n], prev_min[s])
                });
                *m = step(&row[u * n..(u + 1) * n], link, out, p1, p2);
                for (t, l) in a.iter_mut().zip(out.iter()) {
                    *t += l;
                }
            });
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_min, &mut cur_min);
    }
}
