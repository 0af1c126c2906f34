//! Hash-based procedural texture and noise. Every value is a pure function
//! of its inputs, so rendering order and thread count never matter.

#[inline]
fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn hash(words: &[u64]) -> u64 {
    words.iter().fold(0x9e37_79b9_7f4a_7c15, |h, &w| {
        mix(h ^ w.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

/// Uniform in [0, 1) with 53 random bits.
#[inline]
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn lattice(seed: u64, octave: u64, i: i64, j: i64) -> f64 {
    2.0 * unit(hash(&[seed, octave, i as u64, j as u64])) - 1.0
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Smooth value noise in [-1, 1] on a unit lattice.
pub fn value_noise(seed: u64, octave: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (i, j) = (fx as i64, fy as i64);
    let (sx, sy) = (fade(x - fx), fade(y - fy));
    let a = lattice(seed, octave, i, j);
    let b = lattice(seed, octave, i + 1, j);
    let c = lattice(seed, octave, i, j + 1);
    let d = lattice(seed, octave, i + 1, j + 1);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// Root-mean-square of the raw octave sum, measured over 4e6 samples.
const STREAK_RMS: f64 = 0.2825;

/// Zero-mean streaky texture with unit RMS; coordinates are in units of the
/// coarsest lattice spacing. Features are twice as long along y as along x.
pub fn thermal_streaks(seed: u64, x: f64, y: f64) -> f64 {
    const OCTAVES: [(f64, f64); 3] = [(1.0, 1.0), (2.0, 0.6), (4.0, 0.35)];
    let total: f64 = OCTAVES.iter().map(|o| o.1).sum::<f64>() * STREAK_RMS;
    OCTAVES
        .iter()
        .enumerate()
        .map(|(n, &(freq, amp))| amp * value_noise(seed, n as u64, freq * x, 0.5 * freq * y))
        .sum::<f64>()
        / total
}

/// Two-level patchwork on the cylinder wall: `arc` along the circumference
/// and `z` up the wall, both in meters.
pub fn foil_patches(seed: u64, arc: f64, z: f64) -> f64 {
    const PATCH: f64 = 0.008;
    let h = hash(&[
        seed ^ 0xf011,
        (arc / PATCH).floor() as i64 as u64,
        (z / PATCH).floor() as i64 as u64,
    ]);
    if h & 1 == 0 {
        70.0
    } else {
        190.0
    }
}

/// Standard normal deviate keyed by `key` (Box-Muller on two hashed uniforms).
pub fn gaussian_noise(key: &[u64]) -> f64 {
    let h = hash(key);
    let u1 = 1.0 - unit(h); // (0, 1]
    let u2 = unit(mix(h ^ 0x5851_f42d_4c95_7f2d));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_noise_hits_lattice_values_and_is_continuous() {
        assert_eq!(value_noise(3, 0, 2.0, 5.0), lattice(3, 0, 2, 5));
        let a = value_noise(3, 0, 2.999_999_999, 5.5);
        let b = value_noise(3, 0, 3.0, 5.5);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn streaks_have_unit_rms() {
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let x = unit(hash(&[1, i])) * 3000.0;
            let y = unit(hash(&[2, i])) * 3000.0;
            let v = thermal_streaks(11, x, y);
            assert!(v.abs() <= 1.0 / STREAK_RMS);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let rms = (s2 / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.02 && (rms - 1.0).abs() < 0.03, "{mean} {rms}");
    }

    #[test]
    fn gaussian_noise_moments() {
        let n = 200_000u64;
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let g = gaussian_noise(&[1, i]);
            s += g;
            s2 += g * g;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }
}
