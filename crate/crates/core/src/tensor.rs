//! Sparse tensors keyed by index tuples.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::linalg::{self, CMatrix, C64, ZERO};

/// Entries below this magnitude are not stored.
pub const DROP_TOLERANCE: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseTensor {
    dims: Vec<usize>,
    entries: BTreeMap<Vec<usize>, C64>,
}

impl SparseTensor {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims, entries: BTreeMap::new() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dense_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.entries.get(index).copied().unwrap_or(ZERO)
    }

    /// Adds `value` at `index`; entries that fall below the drop tolerance
    /// are removed.
    pub fn add(&mut self, index: Vec<usize>, value: C64) {
        debug_assert!(index.len() == self.dims.len() && index.iter().zip(&self.dims).all(|(i, d)| i < d));
        let slot = self.entries.entry(index.clone()).or_insert(ZERO);
        *slot += value;
        if slot.norm() < DROP_TOLERANCE {
            self.entries.remove(&index);
        }
    }

    pub fn set(&mut self, index: Vec<usize>, value: C64) {
        if value.norm() < DROP_TOLERANCE {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    /// Entries in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &C64)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        num_traits::Float::sqrt(self.entries.values().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Row-major dense vector.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.dense_len()];
        for (idx, v) in &self.entries {
            out[self.flat_index(idx)] = *v;
        }
        out
    }

    pub fn from_dense(dims: Vec<usize>, data: &[C64]) -> Self {
        let mut t = Self::new(dims);
        for (flat, v) in data.iter().enumerate() {
            if !v.is_zero() && v.norm() >= DROP_TOLERANCE {
                let idx = t.unflatten(flat);
                t.entries.insert(idx, *v);
            }
        }
        t
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }

    /// Largest entrywise difference.
    pub fn max_difference(&self, other: &SparseTensor) -> f64 {
        assert_eq!(self.dims, other.dims);
        let keys = self.entries.keys().chain(other.entries.keys());
        keys.map(|k| (self.get(k) - other.get(k)).norm()).fold(0.0, f64::max)
    }
}

/// Nonzero entries keyed by row-major flat index, sorted by index.
pub type FlatEntries = Vec<(usize, C64)>;

impl SparseTensor {
    pub fn flat_entries(&self) -> FlatEntries {
        // BTreeMap order on index tuples is row-major order.
        self.entries.iter().map(|(idx, v)| (self.flat_index(idx), *v)).collect()
    }
}

fn merge_sorted(mut entries: FlatEntries) -> FlatEntries {
    entries.sort_unstable_by_key(|e| e.0);
    let mut out: FlatEntries = Vec::with_capacity(entries.len());
    for (k, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out
}

/// [`apply_axes`] on flat sparse entries; the cost scales with the number
/// of nonzeros rather than the dense size.
pub fn apply_axes_flat(entries: &[(usize, C64)], dims: &[usize], ops: &[(usize, &CMatrix)]) -> FlatEntries {
    let mut current = entries.to_vec();
    for &(axis, m) in ops {
        let n = dims[axis];
        assert!(m.rows() == n && m.cols() == n, "operator size does not match slot dimension");
        let inner: usize = dims[axis + 1..].iter().product();
        let columns: Vec<Vec<(usize, C64)>> = (0..n).map(|c| (0..n).filter(|&r| !m[(r, c)].is_zero()).map(|r| (r, m[(r, c)])).collect()).collect();
        let mut next = Vec::with_capacity(current.len());
        for &(flat, v) in &current {
            let c = (flat / inner) % n;
            let base = flat - c * inner;
            for &(r, w) in &columns[c] {
                next.push((base + r * inner, w * v));
            }
        }
        current = merge_sorted(next);
    }
    current
}

/// Euclidean distance between two sorted flat entry lists.
pub fn flat_distance(a: &[(usize, C64)], b: &[(usize, C64)]) -> f64 {
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        let d = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                i += 1;
                j += 1;
                x.1 - y.1
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                i += 1;
                x.1
            }
            (Some(x), None) => {
                i += 1;
                x.1
            }
            (_, Some(y)) => {
                j += 1;
                -y.1
            }
            (None, None) => unreachable!(),
        };
        sum += d.norm_sqr();
    }
    num_traits::Float::sqrt(sum)
}

/// Applies one matrix per listed axis to a dense row-major tensor.
pub fn apply_axes(data: &[C64], dims: &[usize], ops: &[(usize, &CMatrix)]) -> Vec<C64> {
    let mut out = data.to_vec();
    for &(axis, m) in ops {
        out = linalg::apply_axis(&out, dims, axis, m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_application_matches_dense() {
        let mut t = SparseTensor::new(vec![2, 3, 2]);
        t.add(vec![1, 2, 0], C64::new(1.5, -0.5));
        t.add(vec![0, 1, 1], C64::new(0.0, 2.0));
        t.add(vec![1, 0, 1], C64::new(-1.0, 0.25));
        let m = CMatrix::from_fn(3, 3, |r, c| C64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let k = CMatrix::from_fn(2, 2, |r, c| C64::new(1.0 + r as f64, c as f64));
        let ops = [(1, &m), (2, &k)];
        let dense = apply_axes(&t.to_dense(), t.dims(), &ops);
        let flat = apply_axes_flat(&t.flat_entries(), t.dims(), &ops);
        let expected: FlatEntries = dense.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (k, *v)).collect();
        assert!(flat_distance(&flat, &expected) < 1e-13);
        assert!((flat_distance(&flat, &[]) - linalg::norm(&dense)).abs() < 1e-12);
    }

    #[test]
    fn dense_round_trip() {
        let mut t = SparseTensor::new(vec![2, 3, 2]);
        t.add(vec![1, 2, 0], C64::new(1.5, -0.5));
        t.add(vec![0, 1, 1], C64::new(0.0, 2.0));
        let dense = t.to_dense();
        assert_eq!(dense[t.flat_index(&[1, 2, 0])], C64::new(1.5, -0.5));
        assert_eq!(SparseTensor::from_dense(vec![2, 3, 2], &dense), t);
        t.add(vec![0, 1, 1], C64::new(0.0, -2.0));
        assert_eq!(t.nnz(), 1);
    }
}
