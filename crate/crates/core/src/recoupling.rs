//! SU(2) recoupling: 6j symbols, F-moves between fusion orders, exchange
//! signs, and conversion of vertex parameters between orderings.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;

use crate::cg::CgTable;
use crate::error::{Error, Result};
use crate::exact;
use crate::group::{GroupId, IrrepLabel, Spin};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::peps::{FusionOrder, VertexKey, VertexParams};

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`, zero when a triangle fails.
pub fn six_j(spins: [Spin; 6]) -> f64 {
    let t = spins.map(|s| s.twice() as i64);
    exact::six_j(t[0], t[1], t[2], t[3], t[4], t[5]).to_f64()
}

/// All 6j symbols with spins up to a cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct SixJTable {
    max_spin: Spin,
    entries: BTreeMap<[u32; 6], f64>,
}

impl SixJTable {
    pub fn new(max_spin: Spin) -> Self {
        let top = max_spin.twice();
        let mut entries = BTreeMap::new();
        let mut t = [0u32; 6];
        loop {
            let triads = [(t[0], t[1], t[2]), (t[0], t[4], t[5]), (t[3], t[1], t[5]), (t[3], t[4], t[2])];
            if triads.iter().all(|&(a, b, c)| exact::triangle(a as i64, b as i64, c as i64)) {
                entries.insert(t, six_j(t.map(Spin::from_twice)));
            }
            let mut k = 0;
            while k < 6 && t[k] == top {
                t[k] = 0;
                k += 1;
            }
            if k == 6 {
                break;
            }
            t[k] += 1;
        }
        Self { max_spin, entries }
    }

    pub fn max_spin(&self) -> Spin {
        self.max_spin
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, spins: [Spin; 6]) -> f64 {
        self.entries.get(&spins.map(Spin::twice)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ([Spin; 6], f64)> + '_ {
        self.entries.iter().map(|(k, &v)| (k.map(Spin::from_twice), v))
    }
}

/// A change of basis between two coupling schemes of three spins with fixed
/// total spin. Rows and columns are labelled by the intermediate spins.
#[derive(Clone, Debug, PartialEq)]
pub struct FMatrix {
    pub outer: [Spin; 3],
    pub total: Spin,
    pub rows: Vec<Spin>,
    pub cols: Vec<Spin>,
    pub matrix: CMatrix,
}

impl FMatrix {
    pub fn entry(&self, row: Spin, col: Spin) -> f64 {
        match (self.rows.iter().position(|&r| r == row), self.cols.iter().position(|&c| c == col)) {
            (Some(r), Some(c)) => self.matrix[(r, c)].re,
            _ => 0.0,
        }
    }

    pub fn unitarity_residual(&self) -> f64 {
        if self.rows.len() != self.cols.len() {
            return f64::INFINITY;
        }
        self.matrix.unitarity_residual()
    }
}

fn fuse(a: Spin, b: Spin) -> Vec<Spin> {
    let (ta, tb) = (a.twice(), b.twice());
    (ta.abs_diff(tb)..=ta + tb).step_by(2).map(Spin::from_twice).collect()
}

fn admits(a: Spin, b: Spin, c: Spin) -> bool {
    exact::triangle(a.twice() as i64, b.twice() as i64, c.twice() as i64)
}

fn sign(twice_exponent: i64) -> f64 {
    debug_assert!(twice_exponent % 2 == 0);
    if (twice_exponent / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Intermediate spins of `((a b) j1, c) total`.
fn left_channels(a: Spin, b: Spin, c: Spin, total: Spin) -> Vec<Spin> {
    fuse(a, b).into_iter().filter(|&j| admits(j, c, total)).collect()
}

/// Intermediate spins of `(a, (b c) j1') total`.
fn right_channels(a: Spin, b: Spin, c: Spin, total: Spin) -> Vec<Spin> {
    fuse(b, c).into_iter().filter(|&j| admits(a, j, total)).collect()
}

/// `F^{a b c}_{total; j1 j1'}` from the closed 6j form, so that
/// `⟨a b|j1⟩⟨j1 c|total⟩ = Σ_{j1'} F_{j1 j1'} ⟨b c|j1'⟩⟨a j1'|total⟩`.
pub fn f_move(a: Spin, b: Spin, c: Spin, total: Spin) -> FMatrix {
    let rows = left_channels(a, b, c, total);
    let cols = right_channels(a, b, c, total);
    if rows.is_empty() {
        return FMatrix { outer: [a, b, c], total, rows, cols, matrix: CMatrix::zeros(0, 0) };
    }
    let phase = sign((a.twice() + b.twice() + c.twice() + total.twice()) as i64);
    let matrix = CMatrix::from_fn(rows.len(), cols.len(), |r, k| {
        let (j1, j1p) = (rows[r], cols[k]);
        let weight = Float::sqrt((j1.dim() * j1p.dim()) as f64);
        C64::new(phase * weight * six_j([a, b, j1, c, total, j1p]), 0.0)
    });
    FMatrix { outer: [a, b, c], total, rows, cols, matrix }
}

/// The same matrix obtained by overlapping the two coupled bases built from
/// Clebsch–Gordan tables.
pub fn f_move_projected(cg: &mut CgTable, a: Spin, b: Spin, c: Spin, total: Spin) -> FMatrix {
    let rows = left_channels(a, b, c, total);
    let cols = right_channels(a, b, c, total);
    let label = IrrepLabel::Spin;
    let m2 = 0;
    let mut matrix = CMatrix::zeros(rows.len(), cols.len());
    for (r, &j1) in rows.iter().enumerate() {
        for (k, &j1p) in cols.iter().enumerate() {
            let mut overlap = 0.0;
            for ma in 0..a.dim() {
                for mb in 0..b.dim() {
                    for mc in 0..c.dim() {
                        let mut left = 0.0;
                        for m1 in 0..j1.dim() {
                            left += cg.coefficient(label(a), ma, label(b), mb, label(j1), m1) * cg.coefficient(label(j1), m1, label(c), mc, label(total), m2);
                        }
                        let mut right = 0.0;
                        for m1 in 0..j1p.dim() {
                            right += cg.coefficient(label(b), mb, label(c), mc, label(j1p), m1) * cg.coefficient(label(a), ma, label(j1p), m1, label(total), m2);
                        }
                        overlap += left * right;
                    }
                }
            }
            matrix[(r, k)] = C64::new(overlap, 0.0);
        }
    }
    FMatrix { outer: [a, b, c], total, rows, cols, matrix }
}

/// Largest entrywise violation of
/// `⟨a b|j1⟩⟨j1 c|total⟩ = Σ_{j1'} F_{j1 j1'} ⟨b c|j1'⟩⟨a j1'|total⟩`
/// over all magnetic numbers.
pub fn f_move_residual(cg: &mut CgTable, f: &FMatrix) -> f64 {
    let [a, b, c] = f.outer;
    let total = f.total;
    let label = IrrepLabel::Spin;
    let mut worst: f64 = 0.0;
    for (r, &j1) in f.rows.iter().enumerate() {
        for ma in 0..a.dim() {
            for mb in 0..b.dim() {
                for mc in 0..c.dim() {
                    for m2 in 0..total.dim() {
                        let mut lhs = 0.0;
                        for m1 in 0..j1.dim() {
                            lhs += cg.coefficient(label(a), ma, label(b), mb, label(j1), m1) * cg.coefficient(label(j1), m1, label(c), mc, label(total), m2);
                        }
                        let mut rhs = 0.0;
                        for (k, &j1p) in f.cols.iter().enumerate() {
                            let mut chain = 0.0;
                            for m1 in 0..j1p.dim() {
                                chain += cg.coefficient(label(b), mb, label(c), mc, label(j1p), m1) * cg.coefficient(label(a), ma, label(j1p), m1, label(total), m2);
                            }
                            rhs += f.matrix[(r, k)].re * chain;
                        }
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }
    worst
}

/// `𝓑^{ab}_c = (−1)^{a+b−c}`, with `⟨a b|c⟩ = 𝓑 ⟨b a|c⟩`.
pub fn exchange(a: Spin, b: Spin, c: Spin) -> f64 {
    sign(a.twice() as i64 + b.twice() as i64 - c.twice() as i64)
}

/// Largest violation of the exchange relation over all `c ∈ a ⊗ b` and all
/// magnetic numbers.
pub fn exchange_residual(cg: &mut CgTable, a: Spin, b: Spin) -> f64 {
    let label = IrrepLabel::Spin;
    let mut worst: f64 = 0.0;
    for c in fuse(a, b) {
        let factor = exchange(a, b, c);
        for ma in 0..a.dim() {
            for mb in 0..b.dim() {
                for mc in 0..c.dim() {
                    let forward = cg.coefficient(label(a), ma, label(b), mb, label(c), mc);
                    let backward = cg.coefficient(label(b), mb, label(a), ma, label(c), mc);
                    worst = worst.max((forward - factor * backward).abs());
                }
            }
        }
    }
    worst
}

/// Matrix `T` with rows labelled by the left-down-first intermediate spin and
/// columns by the intermediate spin of `order`, such that the
/// left-down-first parameters are `α = T α_order`.
pub fn to_left_down_first(order: FusionOrder, left: Spin, down: Spin, physical: Spin, total: Spin) -> FMatrix {
    match order {
        FusionOrder::LeftDownFirst => {
            let rows = left_channels(left, down, physical, total);
            let n = rows.len();
            FMatrix { outer: [left, down, physical], total, cols: rows.clone(), rows, matrix: CMatrix::identity(n) }
        }
        FusionOrder::DownPhysicalFirst => f_move(left, down, physical, total),
        FusionOrder::LeftPhysicalFirst => {
            // α = F^{ldp} 𝓑^{dp} (F^{lpd})ᵀ α̂
            let first = f_move(left, down, physical, total);
            let second = f_move(left, physical, down, total);
            let exchange_diag: Vec<C64> = first.cols.iter().map(|&j| C64::new(exchange(down, physical, j), 0.0)).collect();
            debug_assert_eq!(first.cols, second.cols);
            let matrix = first.matrix.matmul(&CMatrix::diag(&exchange_diag)).matmul(&second.matrix.transpose());
            FMatrix { outer: [left, down, physical], total, rows: first.rows, cols: second.rows, matrix }
        }
    }
}

/// Converts vertex parameters between fusion orders so that the built SU(2)
/// tensors coincide.
pub fn reparameterize(params: &VertexParams, from: FusionOrder, to: FusionOrder) -> Result<VertexParams> {
    let spin = |label: IrrepLabel| label.spin().ok_or(Error::Su2Only);
    // group by everything except the first intermediate spin
    let mut groups: BTreeMap<VertexKey, BTreeMap<Spin, C64>> = BTreeMap::new();
    for (key, &alpha) in params {
        let mut outer = *key;
        outer.inner1 = key.physical;
        groups.entry(outer).or_default().insert(spin(key.inner1)?, alpha);
    }
    let mut out = VertexParams::new();
    for (outer, values) in groups {
        let (l, d, p, j2) = (spin(outer.left)?, spin(outer.down)?, spin(outer.physical)?, spin(outer.inner2)?);
        let source = to_left_down_first(from, l, d, p, j2);
        let target = to_left_down_first(to, l, d, p, j2);
        for j in values.keys() {
            if !source.cols.contains(j) {
                return Err(Error::InadmissibleFusionKey(alloc::format!("{outer:?} with intermediate spin {j}")));
            }
        }
        let standard: Vec<C64> = source
            .rows
            .iter()
            .enumerate()
            .map(|(r, _)| source.cols.iter().enumerate().map(|(k, j)| source.matrix[(r, k)] * values.get(j).copied().unwrap_or(ZERO)).sum())
            .collect();
        for (k, &j) in target.cols.iter().enumerate() {
            let value: C64 = standard.iter().enumerate().map(|(r, v)| target.matrix[(r, k)] * v).sum();
            let mut key = outer;
            key.inner1 = IrrepLabel::Spin(j);
            out.insert(key, value);
        }
    }
    Ok(out)
}

/// Whether a group admits the ordering conversions above.
pub fn supports_reparameterization(group: GroupId) -> bool {
    group == GroupId::SU2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: u32) -> Spin {
        Spin::from_twice(t)
    }

    #[test]
    fn six_j_reference_values() {
        assert!((six_j([s(1), s(1), s(0), s(1), s(1), s(0)]) + 0.5).abs() < 1e-15);
        assert!((six_j([s(1), s(1), s(2), s(1), s(1), s(2)]) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(six_j([s(1), s(1), s(4), s(1), s(1), s(0)]), 0.0);
        let table = SixJTable::new(s(2));
        assert_eq!(table.get([s(1), s(1), s(0), s(1), s(1), s(0)]), -0.5);
        for (spins, value) in table.iter() {
            let [a, b, c, d, e, f] = spins;
            assert_eq!(table.get([b, a, c, e, d, f]), value);
            assert_eq!(table.get([d, e, c, a, b, f]), value);
            assert_eq!(table.get([c, b, a, f, e, d]), value);
        }
    }

    #[test]
    fn f_moves_agree_with_projection() {
        let mut cg = CgTable::new(GroupId::SU2);
        for a in 0..=3 {
            for b in 0..=3 {
                for c in 0..=3 {
                    for t in 0..=9 {
                        let f = f_move(s(a), s(b), s(c), s(t));
                        if f.rows.is_empty() {
                            assert!(f.cols.is_empty());
                            continue;
                        }
                        assert!(f.unitarity_residual() < 1e-13);
                        let p = f_move_projected(&mut cg, s(a), s(b), s(c), s(t));
                        assert!((&f.matrix - &p.matrix).max_abs() < 1e-13);
                        assert!(f_move_residual(&mut cg, &f) < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_label_gives_unit_f() {
        let f = f_move(s(0), s(1), s(2), s(1));
        assert_eq!(f.rows.len(), 1);
        assert!((f.matrix[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exchange_signs() {
        assert_eq!(exchange(s(0), s(3), s(3)), 1.0);
        assert_eq!(exchange(s(1), s(1), s(0)), -1.0);
        assert_eq!(exchange(s(1), s(1), s(2)), 1.0);
        let mut cg = CgTable::new(GroupId::SU2);
        for a in 0..=4 {
            for b in 0..=4 {
                assert!(exchange_residual(&mut cg, s(a), s(b)) < 1e-14);
            }
        }
    }

    #[test]
    fn orderings_build_identical_tensors() {
        use crate::peps::{random_vertex_params, VertexTensor, VirtualLeg};
        use crate::spaces::VertexSpace;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        let group = GroupId::SU2;
        let labels: Vec<IrrepLabel> = (0..=2).map(|t| IrrepLabel::Spin(s(t))).collect();
        let physical = VertexSpace::new(group, &labels).unwrap();
        let leg = VirtualLeg::with_degeneracy(group, &[(labels[0], 1), (labels[1], 2), (labels[2], 1)]).unwrap();
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for from in FusionOrder::ALL {
            let alpha = random_vertex_params(&physical, &legs, from, &mut rng);
            let reference = VertexTensor::build(&physical, &legs, from, &alpha).unwrap();
            for to in FusionOrder::ALL {
                let converted = reparameterize(&alpha, from, to).unwrap();
                let built = VertexTensor::build(&physical, &legs, to, &converted).unwrap();
                assert!(reference.amplitudes().max_difference(built.amplitudes()) < 1e-12, "{from:?} -> {to:?}");
                let back = reparameterize(&converted, to, from).unwrap();
                for (key, value) in &alpha {
                    assert!((back[key] - value).norm() < 1e-12);
                }
            }
        }
    }
}
