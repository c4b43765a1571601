use std::collections::HashMap;

use crate::Vec3;

/// Sparse uniform binning of point indices for fixed-radius queries.
///
/// Query results visit bins in z, y, x order and indices within a bin in
/// ascending order, so reductions over them are reproducible.
#[derive(Debug)]
pub(crate) struct SpatialHash {
    bin: Vec3,
    bins: HashMap<[i64; 3], Vec<u32>>,
}

impl SpatialHash {
    pub(crate) fn new(points: &[Vec3], bin: Vec3) -> Self {
        debug_assert!(bin.iter().all(|b| *b > 0.0));
        let mut bins: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (idx, p) in points.iter().enumerate() {
            bins.entry(Self::key_of(p, &bin)).or_default().push(idx as u32);
        }
        Self { bin, bins }
    }

    fn key_of(p: &Vec3, bin: &Vec3) -> [i64; 3] {
        [
            (p.x / bin.x).floor() as i64,
            (p.y / bin.y).floor() as i64,
            (p.z / bin.z).floor() as i64,
        ]
    }

    /// Calls `f` with every index whose bin overlaps the box `[lo, hi]`.
    pub(crate) fn for_each_in_box(&self, lo: &Vec3, hi: &Vec3, mut f: impl FnMut(usize)) {
        let a = Self::key_of(lo, &self.bin);
        let b = Self::key_of(hi, &self.bin);
        let span = (0..3).fold(1u64, |acc, k| acc.saturating_mul(b[k].abs_diff(a[k]).saturating_add(1)));
        if span > self.bins.len() as u64 {
            // Query box covers more bins than exist: walk the occupied ones.
            let mut keys: Vec<&[i64; 3]> = self
                .bins
                .keys()
                .filter(|key| (0..3).all(|k| key[k] >= a[k] && key[k] <= b[k]))
                .collect();
            keys.sort_by_key(|key| [key[2], key[1], key[0]]);
            for key in keys {
                self.bins[key].iter().for_each(|&i| f(i as usize));
            }
            return;
        }
        for z in a[2]..=b[2] {
            for y in a[1]..=b[1] {
                for x in a[0]..=b[0] {
                    if let Some(ids) = self.bins.get(&[x, y, z]) {
                        ids.iter().for_each(|&i| f(i as usize));
                    }
                }
            }
        }
    }
}
