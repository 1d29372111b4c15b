//! Clebsch–Gordan coefficients `⟨a m_a b m_b | c m_c⟩`.
//!
//! SU(2) values come from the exact Racah formula. Finite non-Abelian groups
//! use the projection operators
//! `P^c_{lk} = (d_c/|G|) Σ_g conj(D^c_{lk}(g)) D^a(g) ⊗ D^b(g)`, with the
//! phase fixed by making the first nonzero component of `|c, 0⟩` positive.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;

use crate::exact;
use crate::group::{GroupElement, GroupId, IrrepLabel};
use crate::linalg::{self, CMatrix, C64};

/// Coupling of `c` inside `a ⊗ b`: a `(dim a · dim b) × dim c` isometry
/// whose row `m_a · dim b + m_b`, column `m_c` holds the coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct CgBlock {
    pub c: IrrepLabel,
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgSlice {
    pub a: IrrepLabel,
    pub b: IrrepLabel,
    pub blocks: Vec<CgBlock>,
}

impl CgSlice {
    pub(crate) fn compute(group: &GroupId, a: IrrepLabel, b: IrrepLabel) -> CgSlice {
        let blocks = group
            .fusion(a, b)
            .into_iter()
            .map(|c| CgBlock { c, matrix: block(group, a, b, c) })
            .collect();
        CgSlice { a, b, blocks }
    }

    pub fn block(&self, c: IrrepLabel) -> Option<&CMatrix> {
        self.blocks.iter().find(|blk| blk.c == c).map(|blk| &blk.matrix)
    }

    pub fn coefficient(&self, ma: usize, mb: usize, c: IrrepLabel, mc: usize) -> f64 {
        self.block(c).map_or(0.0, |m| m[(ma * self.b.dim() + mb, mc)].re)
    }

    /// All blocks side by side: the change of basis from the coupled to the
    /// product basis.
    pub fn isometry(&self) -> CMatrix {
        let rows = self.a.dim() * self.b.dim();
        let cols: usize = self.blocks.iter().map(|blk| blk.matrix.cols()).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let mut offset = 0;
        for blk in &self.blocks {
            for r in 0..rows {
                for c in 0..blk.matrix.cols() {
                    out[(r, offset + c)] = blk.matrix[(r, c)];
                }
            }
            offset += blk.matrix.cols();
        }
        out
    }
}

fn block(group: &GroupId, a: IrrepLabel, b: IrrepLabel, c: IrrepLabel) -> CMatrix {
    match (group, a, b, c) {
        (GroupId::Cyclic(_) | GroupId::U1, ..) => CMatrix::identity(1),
        (GroupId::SU2, IrrepLabel::Spin(sa), IrrepLabel::Spin(sb), IrrepLabel::Spin(sc)) => {
            CMatrix::from_fn(sa.dim() * sb.dim(), sc.dim(), |row, mc| {
                let (ma, mb) = (row / sb.dim(), row % sb.dim());
                let value = exact::clebsch_gordan(
                    sa.twice() as i64,
                    sa.twice_m(ma),
                    sb.twice() as i64,
                    sb.twice_m(mb),
                    sc.twice() as i64,
                    sc.twice_m(mc),
                );
                C64::new(value.to_f64(), 0.0)
            })
        }
        _ => projection_block(group, a, b, c),
    }
}

fn projection_block(group: &GroupId, a: IrrepLabel, b: IrrepLabel, c: IrrepLabel) -> CMatrix {
    let elements = group.enumerate_elements().expect("projection needs a finite group");
    let order = elements.len() as f64;
    let (dc, dim) = (c.dim(), a.dim() * b.dim());
    let product: Vec<(CMatrix, CMatrix)> = elements
        .iter()
        .map(|g: &GroupElement| (group.wigner_d(a, g).kron(&group.wigner_d(b, g)), group.wigner_d(c, g)))
        .collect();
    let projector = |l: usize, k: usize| {
        let mut p = CMatrix::zeros(dim, dim);
        for (rep, dc_g) in &product {
            p = &p + &rep.scale(dc_g[(l, k)].conj());
        }
        p.scale(C64::new(dc as f64 / order, 0.0))
    };
    let p00 = projector(0, 0);
    let best = (0..dim)
        .max_by(|&x, &y| {
            let nx = linalg::norm(&column(&p00, x));
            let ny = linalg::norm(&column(&p00, y));
            nx.partial_cmp(&ny).unwrap()
        })
        .unwrap();
    let mut e0 = column(&p00, best);
    let n = linalg::norm(&e0);
    assert!(n > 1e-8, "irrep {c} does not occur in {a} ⊗ {b}");
    let pivot = e0.iter().copied().find(|z| z.norm() > 1e-10).unwrap();
    let phase = pivot.conj() / pivot.norm();
    e0.iter_mut().for_each(|z| *z = *z * phase / n);
    let mut out = CMatrix::zeros(dim, dc);
    for l in 0..dc {
        let el = if l == 0 { e0.clone() } else { projector(l, 0).mul_vec(&e0) };
        for (r, v) in el.into_iter().enumerate() {
            out[(r, l)] = clean(v);
        }
    }
    out
}

fn column(m: &CMatrix, c: usize) -> Vec<C64> {
    (0..m.rows()).map(|r| m[(r, c)]).collect()
}

fn clean(z: C64) -> C64 {
    let snap = |x: f64| if Float::abs(x) < 1e-15 { 0.0 } else { x };
    C64::new(snap(z.re), snap(z.im))
}

/// Lazily filled cache of slices for one group.
#[derive(Clone, Debug)]
pub struct CgTable {
    group: GroupId,
    slices: BTreeMap<(IrrepLabel, IrrepLabel), CgSlice>,
}

impl CgTable {
    pub fn new(group: GroupId) -> Self {
        Self { group, slices: BTreeMap::new() }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn slice(&mut self, a: IrrepLabel, b: IrrepLabel) -> &CgSlice {
        let group = self.group;
        self.slices.entry((a, b)).or_insert_with(|| CgSlice::compute(&group, a, b))
    }

    /// `⟨a m_a b m_b | c m_c⟩`, zero when `c ∉ a ⊗ b`.
    pub fn coefficient(&mut self, a: IrrepLabel, ma: usize, b: IrrepLabel, mb: usize, c: IrrepLabel, mc: usize) -> f64 {
        self.slice(a, b).coefficient(ma, mb, c, mc)
    }
}

/// Residual of `V† (D^a ⊗ D^b) V = ⊕_c D^c` for one group element.
pub fn intertwiner_residual(group: &GroupId, slice: &CgSlice, g: &GroupElement) -> f64 {
    let v = slice.isometry();
    let lhs = v.adjoint().matmul(&group.wigner_d(slice.a, g).kron(&group.wigner_d(slice.b, g))).matmul(&v);
    let rhs = CMatrix::direct_sum(&slice.blocks.iter().map(|blk| group.wigner_d(blk.c, g)).collect::<Vec<_>>());
    (&lhs - &rhs).frobenius_norm()
}

/// Residuals of orthogonality (`V†V = 1`) and completeness (`VV† = 1`).
pub fn orthogonality_completeness(slice: &CgSlice) -> (f64, f64) {
    let v = slice.isometry();
    let ortho = (&v.adjoint().matmul(&v) - &CMatrix::identity(v.cols())).frobenius_norm();
    let complete = (&v.matmul(&v.adjoint()) - &CMatrix::identity(v.rows())).frobenius_norm();
    (ortho, complete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Spin;
    use crate::s3::S3Irrep;

    fn spin(t: u32) -> IrrepLabel {
        IrrepLabel::Spin(Spin::from_twice(t))
    }

    #[test]
    fn singlet_from_casimir_diagonalization() {
        // total Casimir on ½ ⊗ ½; the singlet is its null vector
        let [jx, jy, jz] = crate::su2::spin_matrices(1);
        let id = CMatrix::identity(2);
        let total: Vec<CMatrix> = [jx, jy, jz].iter().map(|j| &j.kron(&id) + &id.kron(j)).collect();
        let casimir = total.iter().fold(CMatrix::zeros(4, 4), |acc, t| &acc + &t.matmul(t));
        let slice = GroupId::SU2.clebsch_gordan(spin(1), spin(1)).unwrap();
        let singlet: Vec<C64> = (0..4).map(|r| slice.block(spin(0)).unwrap()[(r, 0)]).collect();
        assert!(linalg::norm(&casimir.mul_vec(&singlet)) < 1e-14);
        // ⟨½ ½; ½ −½ | 0 0⟩: row m_a = +½ (index 1), m_b = −½ (index 0)
        assert!((slice.coefficient(1, 0, spin(0), 0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trivial_factor_is_identity() {
        for (group, label) in [
            (GroupId::SU2, spin(3)),
            (GroupId::SymmetricS3, IrrepLabel::S3(S3Irrep::Standard)),
            (GroupId::Cyclic(5), IrrepLabel::Charge(3)),
        ] {
            let slice = group.clebsch_gordan(group.trivial(), label).unwrap();
            assert_eq!(slice.blocks.len(), 1);
            assert!((&slice.blocks[0].matrix - &CMatrix::identity(label.dim())).frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn cyclic_coupling_is_modular_delta() {
        let z3 = GroupId::Cyclic(3);
        let slice = z3.clebsch_gordan(IrrepLabel::Charge(2), IrrepLabel::Charge(2)).unwrap();
        assert_eq!(slice.blocks.len(), 1);
        assert_eq!(slice.blocks[0].c, IrrepLabel::Charge(1));
        assert_eq!(slice.coefficient(0, 0, IrrepLabel::Charge(1), 0), 1.0);
        assert_eq!(slice.coefficient(0, 0, IrrepLabel::Charge(0), 0), 0.0);
    }

    #[test]
    fn s3_standard_square_intertwines() {
        let group = GroupId::SymmetricS3;
        let std = IrrepLabel::S3(S3Irrep::Standard);
        let slice = group.clebsch_gordan(std, std).unwrap();
        let (o, c) = orthogonality_completeness(&slice);
        assert!(o < 1e-13 && c < 1e-13);
        for g in group.enumerate_elements().unwrap() {
            assert!(intertwiner_residual(&group, &slice, &g) < 1e-13);
        }
        for blk in &slice.blocks {
            assert!(blk.matrix.as_slice().iter().all(|z| z.im == 0.0));
        }
    }
}
