use crate::error::{Error, Result};
use crate::vec3::Vec3;

pub const BITS_PER_AXIS: u32 = 21;
pub const MAX_DEPTH: u8 = BITS_PER_AXIS as u8;
const AXIS_MAX: u64 = (1 << BITS_PER_AXIS) - 1;

/// Axis-aligned cube given by centre and half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingCube {
    pub center: Vec3,
    pub half_width: f64,
}

impl BoundingCube {
    pub fn new(center: Vec3, half_width: f64) -> Self {
        Self { center, half_width }
    }

    /// Smallest cube (slightly padded) enclosing all points.
    pub fn enclosing(points: &[Vec3]) -> Self {
        let (lo, hi) = points.iter().fold(
            (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), &p| (lo.min(p), hi.max(p)),
        );
        let center = (lo + hi) * 0.5;
        let extent = (hi - lo).to_array().into_iter().fold(0.0f64, f64::max);
        let half = if extent > 0.0 {
            0.5 * extent * (1.0 + 1e-9) + f64::EPSILON * center.norm()
        } else {
            1.0f64.max(center.norm() * 1e-12)
        };
        Self::new(center, half)
    }

    pub fn min_corner(&self) -> Vec3 {
        self.center - Vec3::splat(self.half_width)
    }

    pub fn max_corner(&self) -> Vec3 {
        self.center + Vec3::splat(self.half_width)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k])
    }
}

/// Spreads the low 21 bits of `v` so that two zero bits separate each pair.
#[inline]
fn spread_bits(v: u64) -> u64 {
    let mut x = v & AXIS_MAX;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn quantize(p: f64, lo: f64, width: f64) -> u64 {
    let t = (p - lo) / width * (1u64 << BITS_PER_AXIS) as f64;
    // the maximum corner belongs to the last cell
    (t as u64).min(AXIS_MAX)
}

/// 63-bit Z-order key; x occupies the most significant bit of every triple.
pub fn morton_key(pos: Vec3, bbox: &BoundingCube) -> Result<u64> {
    if !bbox.contains(pos) {
        return Err(Error::OutOfDomain { pos });
    }
    Ok(morton_key_unchecked(pos, bbox))
}

#[inline]
pub(crate) fn morton_key_unchecked(pos: Vec3, bbox: &BoundingCube) -> u64 {
    let lo = bbox.min_corner();
    let w = 2.0 * bbox.half_width;
    let qx = quantize(pos.x, lo.x, w);
    let qy = quantize(pos.y, lo.y, w);
    let qz = quantize(pos.z, lo.z, w);
    (spread_bits(qx) << 2) | (spread_bits(qy) << 1) | spread_bits(qz)
}

/// Octant digit (0..8) of `key` for the child level below `depth`.
#[inline]
pub fn octant_at(key: u64, depth: u8) -> u64 {
    (key >> (3 * (MAX_DEPTH - 1 - depth) as u32)) & 7
}

/// Stable LSD radix sort of `(key, value)` pairs, 8 bits per pass.
pub fn radix_sort_pairs(keys: &mut Vec<u64>, vals: &mut Vec<u32>) {
    debug_assert_eq!(keys.len(), vals.len());
    let n = keys.len();
    let mut k_tmp = vec![0u64; n];
    let mut v_tmp = vec![0u32; n];
    for pass in 0..8 {
        let shift = pass * 8;
        let mut counts = [0usize; 256];
        for &k in keys.iter() {
            counts[((k >> shift) & 0xff) as usize] += 1;
        }
        if counts.iter().any(|&c| c == n) {
            continue;
        }
        let mut offsets = [0usize; 256];
        let mut sum = 0;
        for (o, c) in offsets.iter_mut().zip(counts) {
            *o = sum;
            sum += c;
        }
        for (&k, &v) in keys.iter().zip(vals.iter()) {
            let d = ((k >> shift) & 0xff) as usize;
            k_tmp[offsets[d]] = k;
            v_tmp[offsets[d]] = v;
            offsets[d] += 1;
        }
        std::mem::swap(keys, &mut k_tmp);
        std::mem::swap(vals, &mut v_tmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_cube() -> BoundingCube {
        BoundingCube::new(Vec3::splat(0.5), 0.5)
    }

    /// Bit-by-bit interleave used as an independent reference.
    fn interleave_naive(qx: u64, qy: u64, qz: u64) -> u64 {
        let mut key = 0;
        for b in (0..21).rev() {
            key = (key << 3) | (((qx >> b) & 1) << 2) | (((qy >> b) & 1) << 1) | ((qz >> b) & 1);
        }
        key
    }

    #[test]
    fn corners_map_to_extremes() {
        let b = unit_cube();
        assert_eq!(morton_key(Vec3::ZERO, &b).unwrap(), 0);
        assert_eq!(morton_key(Vec3::splat(1.0), &b).unwrap(), (1u64 << 63) - 1);
    }

    #[test]
    fn octant_centres_enumerate_top_bits() {
        let b = unit_cube();
        let mut tops = Vec::new();
        for ix in 0..2 {
            for iy in 0..2 {
                for iz in 0..2 {
                    let p = Vec3::new(0.25 + 0.5 * ix as f64, 0.25 + 0.5 * iy as f64, 0.25 + 0.5 * iz as f64);
                    let key = morton_key(p, &b).unwrap();
                    let q = |c: f64| (c * (1u64 << 21) as f64) as u64;
                    assert_eq!(key, interleave_naive(q(p.x), q(p.y), q(p.z)));
                    tops.push(key >> 60);
                }
            }
        }
        assert_eq!(tops, (0..8).collect::<Vec<u64>>());
    }

    #[test]
    fn outside_is_rejected() {
        assert!(matches!(
            morton_key(Vec3::new(1.5, 0.5, 0.5), &unit_cube()),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn radix_sort_matches_std_sort() {
        let mut keys: Vec<u64> = (0..1000u64).map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 1).collect();
        keys.extend_from_slice(&[5, 5, 5]);
        let mut vals: Vec<u32> = (0..keys.len() as u32).collect();
        let mut expect: Vec<(u64, u32)> = keys.iter().copied().zip(vals.iter().copied()).collect();
        expect.sort();
        radix_sort_pairs(&mut keys, &mut vals);
        let got: Vec<(u64, u32)> = keys.into_iter().zip(vals).collect();
        assert_eq!(got, expect);
    }

    proptest! {
        #[test]
        fn spread_matches_naive(qx in 0u64..1 << 21, qy in 0u64..1 << 21, qz in 0u64..1 << 21) {
            let key = (spread_bits(qx) << 2) | (spread_bits(qy) << 1) | spread_bits(qz);
            prop_assert_eq!(key, interleave_naive(qx, qy, qz));
        }

        #[test]
        fn identical_positions_share_keys(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let b = unit_cube();
            let p = Vec3::new(x, y, z);
            prop_assert_eq!(morton_key(p, &b).unwrap(), morton_key(Vec3::new(x, y, z), &b).unwrap());
        }
    }
}
