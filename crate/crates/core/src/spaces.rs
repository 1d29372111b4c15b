//! Truncated matter and gauge-link Hilbert spaces.
//!
//! A [`VertexSpace`] is spanned by `|j m⟩`, a [`LinkSpace`] by `|j m n⟩`.
//! Bases are irrep-major with `m` ascending, and on links `n` runs fastest.
//!
//! Transformation matrices follow `⟨j m|Θ_g|j n⟩ = D^j_{mn}(g)`: the right
//! transformation has blocks `D^j`, the left one `D^jᵀ`. On links the right
//! transformation acts on `n` and the left one on `m`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::cg::CgTable;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupId, Irrep, IrrepLabel};
use crate::linalg::{CMatrix, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `Θ_g`
    Right,
    /// `Θ̃_g`
    Left,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexSpace {
    group: GroupId,
    irreps: Vec<Irrep>,
    offsets: Vec<usize>,
    basis: Vec<(IrrepLabel, usize)>,
}

impl VertexSpace {
    pub fn new(group: GroupId, labels: &[IrrepLabel]) -> Result<Self> {
        let irreps = group.irreps(Some(labels))?;
        let mut offsets = Vec::with_capacity(irreps.len());
        let mut basis = Vec::new();
        for irrep in &irreps {
            offsets.push(basis.len());
            basis.extend((0..irrep.dim).map(|m| (irrep.label, m)));
        }
        Ok(Self { group, irreps, offsets, basis })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn labels(&self) -> Vec<IrrepLabel> {
        self.irreps.iter().map(|i| i.label).collect()
    }

    pub fn basis(&self) -> &[(IrrepLabel, usize)] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, label: IrrepLabel) -> bool {
        self.irreps.iter().any(|i| i.label == label)
    }

    /// Index of `|j m⟩`.
    pub fn index(&self, label: IrrepLabel, m: usize) -> Option<usize> {
        let pos = self.irreps.iter().position(|i| i.label == label)?;
        (m < self.irreps[pos].dim).then(|| self.offsets[pos] + m)
    }

    /// Direct sum of `f(j)` over the kept irreps.
    pub fn block_diag(&self, mut f: impl FnMut(IrrepLabel) -> CMatrix) -> CMatrix {
        CMatrix::direct_sum(&self.irreps.iter().map(|i| f(i.label)).collect::<Vec<_>>())
    }

    pub fn theta(&self, side: Side, g: &GroupElement) -> CMatrix {
        let group = self.group;
        self.block_diag(|j| {
            let d = group.wigner_d(j, g);
            match side {
                Side::Right => d,
                Side::Left => d.transpose(),
            }
        })
    }

    /// Generators with `Θ_g(q) = exp(i q·R)`, `Θ̃_g(q) = exp(i q·L)`.
    pub fn generators(&self, side: Side) -> Result<Vec<CMatrix>> {
        let count = self.group.generator_count()?;
        let per_irrep: Vec<Vec<CMatrix>> = self.irreps.iter().map(|i| self.group.lie_generators(i.label)).collect::<Result<_>>()?;
        Ok((0..count)
            .map(|a| {
                let blocks: Vec<CMatrix> = per_irrep
                    .iter()
                    .map(|t| match side {
                        Side::Right => t[a].clone(),
                        Side::Left => t[a].transpose(),
                    })
                    .collect();
                CMatrix::direct_sum(&blocks)
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpace {
    group: GroupId,
    irreps: Vec<Irrep>,
    offsets: Vec<usize>,
    basis: Vec<(IrrepLabel, usize, usize)>,
}

impl LinkSpace {
    pub fn new(group: GroupId, labels: &[IrrepLabel]) -> Result<Self> {
        let irreps = group.irreps(Some(labels))?;
        let mut offsets = Vec::with_capacity(irreps.len());
        let mut basis = Vec::new();
        for irrep in &irreps {
            offsets.push(basis.len());
            for m in 0..irrep.dim {
                basis.extend((0..irrep.dim).map(|n| (irrep.label, m, n)));
            }
        }
        Ok(Self { group, irreps, offsets, basis })
    }

    /// Every irrep of a finite group.
    pub fn full(group: GroupId) -> Result<Self> {
        let labels: Vec<IrrepLabel> = group.irreps(None)?.iter().map(|i| i.label).collect();
        Self::new(group, &labels)
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn labels(&self) -> Vec<IrrepLabel> {
        self.irreps.iter().map(|i| i.label).collect()
    }

    pub fn basis(&self) -> &[(IrrepLabel, usize, usize)] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, label: IrrepLabel) -> bool {
        self.irreps.iter().any(|i| i.label == label)
    }

    /// Index of `|j m n⟩`.
    pub fn index(&self, label: IrrepLabel, m: usize, n: usize) -> Option<usize> {
        let pos = self.irreps.iter().position(|i| i.label == label)?;
        let d = self.irreps[pos].dim;
        (m < d && n < d).then(|| self.offsets[pos] + m * d + n)
    }

    /// Index of `|0 0 0⟩`, the zero-field state.
    pub fn vacuum_index(&self) -> Option<usize> {
        self.index(self.group.trivial(), 0, 0)
    }

    fn block_diag(&self, mut f: impl FnMut(IrrepLabel, usize) -> CMatrix) -> CMatrix {
        CMatrix::direct_sum(&self.irreps.iter().map(|i| f(i.label, i.dim)).collect::<Vec<_>>())
    }

    pub fn theta(&self, side: Side, g: &GroupElement) -> CMatrix {
        let group = self.group;
        self.block_diag(|j, d| {
            let w = group.wigner_d(j, g);
            match side {
                Side::Right => CMatrix::identity(d).kron(&w),
                Side::Left => w.transpose().kron(&CMatrix::identity(d)),
            }
        })
    }

    /// Right (`R_a`, on `n`) or left (`L_a`, on `m`) electric fields.
    pub fn generators(&self, side: Side) -> Result<Vec<CMatrix>> {
        let count = self.group.generator_count()?;
        let per_irrep: Vec<Vec<CMatrix>> = self.irreps.iter().map(|i| self.group.lie_generators(i.label)).collect::<Result<_>>()?;
        Ok((0..count)
            .map(|a| {
                let blocks: Vec<CMatrix> = self
                    .irreps
                    .iter()
                    .zip(&per_irrep)
                    .map(|(irrep, t)| match side {
                        Side::Right => CMatrix::identity(irrep.dim).kron(&t[a]),
                        Side::Left => t[a].transpose().kron(&CMatrix::identity(irrep.dim)),
                    })
                    .collect();
                CMatrix::direct_sum(&blocks)
            })
            .collect())
    }

    /// `E² = Σ_a L_a L_a`, diagonal with the Casimir of each sector.
    pub fn casimir(&self) -> Result<CMatrix> {
        let group = self.group;
        let values: Vec<C64> = self
            .basis
            .iter()
            .map(|&(j, _, _)| group.casimir(j).map(|c| C64::new(c, 0.0)))
            .collect::<Result<_>>()?;
        Ok(CMatrix::diag(&values))
    }

    /// The link operator `U^j` in the representation basis, with its
    /// Clebsch–Gordan expansion restricted to kept irreps.
    pub fn link_operator(&self, j: IrrepLabel) -> Result<LinkOperator> {
        if !self.group.is_valid(j) {
            return Err(Error::UnknownLabel(format!("{j}")));
        }
        let mut table = CgTable::new(self.group);
        let dj = j.dim();
        let mut blocks = alloc::vec![CMatrix::zeros(self.dim(), self.dim()); dj * dj];
        let mut connected = false;
        for big_j in &self.irreps {
            for big_k in &self.irreps {
                if !self.group.fuses(big_j.label, j, big_k.label) {
                    continue;
                }
                connected = true;
                let weight = Float::sqrt(big_j.dim as f64 / big_k.dim as f64);
                let slice = table.slice(big_j.label, j).clone();
                for m in 0..dj {
                    for mp in 0..dj {
                        let block = &mut blocks[m * dj + mp];
                        for mm in 0..big_j.dim {
                            for nn in 0..big_k.dim {
                                let left = slice.coefficient(mm, m, big_k.label, nn);
                                if left == 0.0 {
                                    continue;
                                }
                                for mmp in 0..big_j.dim {
                                    for nnp in 0..big_k.dim {
                                        let right = slice.coefficient(mmp, mp, big_k.label, nnp);
                                        if right == 0.0 {
                                            continue;
                                        }
                                        let row = self.index(big_k.label, nn, nnp).unwrap();
                                        let col = self.index(big_j.label, mm, mmp).unwrap();
                                        block[(row, col)] += C64::new(weight * left * right, 0.0);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if !connected {
            return Err(Error::EmptyResult);
        }
        Ok(LinkOperator { j, blocks })
    }

    /// `⟨g|j m n⟩ = √(dim j/|G|) D^j_{mn}(g)`; square and unitary when
    /// every irrep is kept.
    pub fn group_element_transform(&self) -> Result<CMatrix> {
        let elements = self.group.enumerate_elements().map_err(|_| Error::FiniteGroupOnly)?;
        if self.irreps.len() != self.group.irreps(None)?.len() {
            return Err(Error::IncompleteTruncation);
        }
        let order = elements.len() as f64;
        let mut out = CMatrix::zeros(elements.len(), self.dim());
        for (row, g) in elements.iter().enumerate() {
            for irrep in &self.irreps {
                let d = self.group.wigner_d(irrep.label, g);
                let scale = Float::sqrt(irrep.dim as f64 / order);
                for m in 0..irrep.dim {
                    for n in 0..irrep.dim {
                        out[(row, self.index(irrep.label, m, n).unwrap())] = d[(m, n)] * scale;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The operator-valued matrix `U^j_{mn}` acting on a link space.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkOperator {
    pub j: IrrepLabel,
    blocks: Vec<CMatrix>,
}

impl LinkOperator {
    pub fn dim_j(&self) -> usize {
        self.j.dim()
    }

    pub fn block(&self, m: usize, n: usize) -> &CMatrix {
        &self.blocks[m * self.dim_j() + n]
    }

    /// Builds from explicit blocks, row-major in `(m, n)`.
    pub fn from_blocks(j: IrrepLabel, blocks: Vec<CMatrix>) -> Self {
        assert_eq!(blocks.len(), j.dim() * j.dim());
        Self { j, blocks }
    }

    /// The single operator `Σ_{mn} |m⟩⟨n| ⊗ U_{mn}` on color ⊗ link space.
    pub fn assembled(&self) -> CMatrix {
        let d = self.dim_j();
        let n = self.blocks[0].rows();
        let mut out = CMatrix::zeros(d * n, d * n);
        for a in 0..d {
            for b in 0..d {
                let blk = self.block(a, b);
                for r in 0..n {
                    for c in 0..n {
                        out[(a * n + r, b * n + c)] = blk[(r, c)];
                    }
                }
            }
        }
        out
    }

    /// Color-matrix transpose `(U_{mn}) → (U_{nm})`.
    pub fn color_transposed(&self) -> Self {
        let d = self.dim_j();
        let blocks = (0..d * d).map(|k| self.block(k % d, k / d).clone()).collect();
        Self { j: self.j, blocks }
    }

    /// Residuals of `Θ U_{mn} Θ† = U_{mn'} D_{n'n}` and
    /// `Θ̃ U_{mn} Θ̃† = D_{mm'} U_{m'n}`.
    pub fn covariance_residuals(&self, space: &LinkSpace, g: &GroupElement) -> (f64, f64) {
        let d = self.dim_j();
        let w = space.group.wigner_d(self.j, g);
        let right = space.theta(Side::Right, g);
        let left = space.theta(Side::Left, g);
        let (mut res_r, mut res_l) = (0.0, 0.0);
        for m in 0..d {
            for n in 0..d {
                let lhs_r = right.matmul(self.block(m, n)).matmul(&right.adjoint());
                let lhs_l = left.matmul(self.block(m, n)).matmul(&left.adjoint());
                let mut rhs_r = CMatrix::zeros(space.dim(), space.dim());
                let mut rhs_l = CMatrix::zeros(space.dim(), space.dim());
                for k in 0..d {
                    rhs_r = &rhs_r + &self.block(m, k).scale(w[(k, n)]);
                    rhs_l = &rhs_l + &self.block(k, n).scale(w[(m, k)]);
                }
                res_r += (&lhs_r - &rhs_r).frobenius_norm().powi(2);
                res_l += (&lhs_l - &rhs_l).frobenius_norm().powi(2);
            }
        }
        (Float::sqrt(res_r), Float::sqrt(res_l))
    }

    /// Residuals of `[L_a, U_{mn}] = T_{mm'} U_{m'n}` and
    /// `[R_a, U_{mn}] = U_{mn'} T_{n'n}`, summed over `a, m, n`.
    pub fn commutator_residuals(&self, space: &LinkSpace) -> Result<(f64, f64)> {
        let t = space.group.lie_generators(self.j)?;
        let left = space.generators(Side::Left)?;
        let right = space.generators(Side::Right)?;
        let d = self.dim_j();
        let (mut res_l, mut res_r) = (0.0, 0.0);
        for a in 0..t.len() {
            for m in 0..d {
                for n in 0..d {
                    let mut rhs_l = CMatrix::zeros(space.dim(), space.dim());
                    let mut rhs_r = CMatrix::zeros(space.dim(), space.dim());
                    for k in 0..d {
                        rhs_l = &rhs_l + &self.block(k, n).scale(t[a][(m, k)]);
                        rhs_r = &rhs_r + &self.block(m, k).scale(t[a][(k, n)]);
                    }
                    res_l += (&left[a].commutator(self.block(m, n)) - &rhs_l).frobenius_norm().powi(2);
                    res_r += (&right[a].commutator(self.block(m, n)) - &rhs_r).frobenius_norm().powi(2);
                }
            }
        }
        Ok((Float::sqrt(res_l), Float::sqrt(res_r)))
    }

    /// `U_{mn}|vacuum⟩` as a column.
    pub fn apply_to(&self, m: usize, n: usize, state: &[C64]) -> Vec<C64> {
        self.block(m, n).mul_vec(state)
    }
}

/// A basis vector of length `dim`.
pub fn unit(dim: usize, index: usize) -> Vec<C64> {
    let mut v = alloc::vec![ZERO; dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Spin;
    use crate::linalg::I;
    use crate::s3::S3Irrep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spin(t: u32) -> IrrepLabel {
        IrrepLabel::Spin(Spin::from_twice(t))
    }

    #[test]
    fn identity_transforms_trivially() {
        let v = VertexSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)]).unwrap();
        let l = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)]).unwrap();
        let e = GroupId::SU2.identity();
        for side in [Side::Right, Side::Left] {
            assert!((&v.theta(side, &e) - &CMatrix::identity(v.dim())).frobenius_norm() < 1e-15);
            assert!((&l.theta(side, &e) - &CMatrix::identity(l.dim())).frobenius_norm() < 1e-15);
        }
        assert_eq!(l.dim(), 5);
    }

    #[test]
    fn right_transform_moves_basis_states_by_columns() {
        // Θ_g|j m⟩ = Σ_n D_{nm}|j n⟩
        let v = VertexSpace::new(GroupId::SU2, &[spin(0), spin(1)]).unwrap();
        let g = GroupId::SU2.sample_elements(1, 3).remove(0);
        let theta = v.theta(Side::Right, &g);
        let d = GroupId::SU2.wigner_d(spin(1), &g);
        for m in 0..2 {
            let image = theta.mul_vec(&unit(3, v.index(spin(1), m).unwrap()));
            for n in 0..2 {
                assert!((image[v.index(spin(1), n).unwrap()] - d[(n, m)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn z2_left_link_transform() {
        let l = LinkSpace::full(GroupId::Cyclic(2)).unwrap();
        let t = l.theta(Side::Left, &GroupElement::Finite(1));
        let expected = CMatrix::diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        assert!((&t - &expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn spin_half_link_operator_on_vacuum() {
        let l = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)]).unwrap();
        let u = l.link_operator(spin(1)).unwrap();
        let vac = unit(l.dim(), l.vacuum_index().unwrap());
        for mp in 0..2 {
            for np in 0..2 {
                let out = u.apply_to(mp, np, &vac);
                for m in 0..2 {
                    for n in 0..2 {
                        let expected = if (m, n) == (mp, np) { 1.0 / 2f64.sqrt() } else { 0.0 };
                        assert!((out[l.index(spin(1), m, n).unwrap()].re - expected).abs() < 1e-15);
                    }
                }
            }
        }
        assert_eq!(LinkSpace::new(GroupId::SU2, &[spin(0)]).unwrap().link_operator(spin(1)), Err(Error::EmptyResult));
    }

    #[test]
    fn cyclic_link_operator_is_shift() {
        let l = LinkSpace::full(GroupId::Cyclic(4)).unwrap();
        let u = l.link_operator(IrrepLabel::Charge(1)).unwrap();
        let shift = CMatrix::from_fn(4, 4, |r, c| if r == (c + 1) % 4 { C64::new(1.0, 0.0) } else { ZERO });
        assert!((u.block(0, 0) - &shift).frobenius_norm() < 1e-15);
    }

    #[test]
    fn link_covariance_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cases: Vec<(LinkSpace, IrrepLabel)> = vec![
            (LinkSpace::full(GroupId::SymmetricS3).unwrap(), IrrepLabel::S3(S3Irrep::Standard)),
            (LinkSpace::full(GroupId::Cyclic(3)).unwrap(), IrrepLabel::Charge(2)),
            (LinkSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)]).unwrap(), spin(1)),
        ];
        for (space, j) in cases {
            let u = space.link_operator(j).unwrap();
            for g in space.group().test_elements(10, &mut rng) {
                let (r, l) = u.covariance_residuals(&space, &g);
                assert!(r < 1e-12 && l < 1e-12, "{r} {l}");
            }
            if space.group().is_finite() {
                assert!(u.assembled().unitarity_residual() < 1e-12);
                assert!(space.group_element_transform().unwrap().unitarity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn generator_algebra_and_casimir() {
        let l = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)]).unwrap();
        let left = l.generators(Side::Left).unwrap();
        let right = l.generators(Side::Right).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!(left[a].commutator(&right[b]).frobenius_norm() < 1e-15);
            }
        }
        // [R_x, R_y] = i R_z and [L_x, L_y] = −i L_z
        assert!((&right[0].commutator(&right[1]) - &right[2].scale(I)).frobenius_norm() < 1e-14);
        assert!((&left[0].commutator(&left[1]) + &left[2].scale(I)).frobenius_norm() < 1e-14);
        let e2l = left.iter().fold(CMatrix::zeros(5, 5), |acc, x| &acc + &x.matmul(x));
        let e2r = right.iter().fold(CMatrix::zeros(5, 5), |acc, x| &acc + &x.matmul(x));
        let expected = l.casimir().unwrap();
        assert!((&e2l - &expected).frobenius_norm() < 1e-14 && (&e2r - &expected).frobenius_norm() < 1e-14);
        assert!((expected[(1, 1)].re - 0.75).abs() < 1e-15);
        // R_z|j m n⟩ = n|j m n⟩
        for (k, &(j, _, n)) in l.basis().iter().enumerate() {
            let nval = j.spin().unwrap().twice_m(n) as f64 / 2.0;
            assert!((right[2][(k, k)].re - nval).abs() < 1e-15);
        }
    }

    #[test]
    fn exponentiated_generators_reproduce_transforms() {
        let q = [0.3, -0.8, 1.7];
        let g = GroupId::SU2.element_from_parameters(&q).unwrap();
        let l = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)]).unwrap();
        for side in [Side::Right, Side::Left] {
            let gens = l.generators(side).unwrap();
            let sum = (0..3).fold(CMatrix::zeros(l.dim(), l.dim()), |acc, a| &acc + &gens[a].scale(C64::new(q[a], 0.0)));
            assert!((&sum.scale(I).expm() - &l.theta(side, &g)).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn link_operator_commutators() {
        let l = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)]).unwrap();
        let u = l.link_operator(spin(1)).unwrap();
        let (left, right) = u.commutator_residuals(&l).unwrap();
        assert!(left < 1e-12 && right < 1e-12);
    }
}
