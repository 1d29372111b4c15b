//! Bosonic PEPS building blocks: vertex tensors `A`, link tensors `B`,
//! unified tensors `C` and maximally entangled bond states.
//!
//! Tensor axes are fixed:
//! - vertex tensor: `(p, l, r, u, d)`
//! - link tensor: `(p, a, b)` with `a` the left/down and `b` the right/up leg
//! - unified tensor: `(p, s, t, l, r, u, d)` with `s`, `t` the side and top
//!   link states.
//!
//! Virtual legs carry states `|j m, i⟩` with a degeneracy index `i` running
//! fastest. Transformations act on them as `D^j ⊗ 1` (right) and
//! `D^jᵀ ⊗ 1` (left).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::cg::CgTable;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupId, Irrep, IrrepLabel};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::spaces::{LinkSpace, Side, VertexSpace};
use crate::tensor::{apply_axes, apply_axes_flat, flat_distance, SparseTensor};

/// A virtual leg: a set of irreps, each repeated `d̃_j` times.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualLeg {
    group: GroupId,
    irreps: Vec<Irrep>,
    degeneracy: Vec<usize>,
    offsets: Vec<usize>,
    basis: Vec<(IrrepLabel, usize, usize)>,
}

impl VirtualLeg {
    pub fn new(group: GroupId, labels: &[IrrepLabel]) -> Result<Self> {
        let pairs: Vec<(IrrepLabel, usize)> = labels.iter().map(|&l| (l, 1)).collect();
        Self::with_degeneracy(group, &pairs)
    }

    pub fn with_degeneracy(group: GroupId, degeneracy: &[(IrrepLabel, usize)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(label, d) in degeneracy {
            if d == 0 {
                return Err(Error::InvalidArgument(format!("degeneracy of irrep {label} must be positive")));
            }
            map.insert(label, d);
        }
        let labels: Vec<IrrepLabel> = map.keys().copied().collect();
        let irreps = group.irreps(Some(&labels))?;
        let degeneracy: Vec<usize> = irreps.iter().map(|i| map[&i.label]).collect();
        let mut offsets = Vec::new();
        let mut basis = Vec::new();
        for (irrep, &d) in irreps.iter().zip(&degeneracy) {
            offsets.push(basis.len());
            for m in 0..irrep.dim {
                basis.extend((0..d).map(|i| (irrep.label, m, i)));
            }
        }
        Ok(Self { group, irreps, degeneracy, offsets, basis })
    }

    /// The one-dimensional leg carrying only the trivial irrep.
    pub fn trivial(group: GroupId) -> Self {
        Self::new(group, &[group.trivial()]).expect("the trivial irrep is always valid")
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

    pub fn contains(&self, label: IrrepLabel) -> bool {
        self.irreps.iter().any(|i| i.label == label)
    }

    pub fn degeneracy(&self, label: IrrepLabel) -> usize {
        self.irreps.iter().position(|i| i.label == label).map_or(0, |k| self.degeneracy[k])
    }

    /// Bond dimension `Σ_j d̃_j dim(j)`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[(IrrepLabel, usize, usize)] {
        &self.basis
    }

    pub fn index(&self, label: IrrepLabel, m: usize, i: usize) -> Option<usize> {
        let k = self.irreps.iter().position(|x| x.label == label)?;
        let d = self.degeneracy[k];
        (m < self.irreps[k].dim && i < d).then(|| self.offsets[k] + m * d + i)
    }

    pub fn theta(&self, side: Side, g: &GroupElement) -> CMatrix {
        let blocks: Vec<CMatrix> = self
            .irreps
            .iter()
            .zip(&self.degeneracy)
            .map(|(irrep, &d)| {
                let w = self.group.wigner_d(irrep.label, g);
                let w = match side {
                    Side::Right => w,
                    Side::Left => w.transpose(),
                };
                w.kron(&CMatrix::identity(d))
            })
            .collect();
        CMatrix::direct_sum(&blocks)
    }
}

/// Which two of the incoming representations `l, d, p` fuse first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FusionOrder {
    /// `⟨l d|j1⟩⟨j1 p|j2⟩⟨j2|r u⟩`
    LeftDownFirst,
    /// `⟨d p|j1⟩⟨l j1|j2⟩⟨j2|r u⟩`
    DownPhysicalFirst,
    /// `⟨l p|j1⟩⟨j1 d|j2⟩⟨j2|r u⟩`
    LeftPhysicalFirst,
}

impl FusionOrder {
    pub const ALL: [FusionOrder; 3] = [FusionOrder::LeftDownFirst, FusionOrder::DownPhysicalFirst, FusionOrder::LeftPhysicalFirst];

    pub fn name(self) -> &'static str {
        match self {
            FusionOrder::LeftDownFirst => "left-down-first",
            FusionOrder::DownPhysicalFirst => "down-physical-first",
            FusionOrder::LeftPhysicalFirst => "left-physical-first",
        }
    }

    /// The pair fused into `j1` and the remaining incoming irrep.
    fn split(self, key: &VertexKey) -> ((IrrepLabel, IrrepLabel), IrrepLabel) {
        match self {
            FusionOrder::LeftDownFirst => ((key.left, key.down), key.physical),
            FusionOrder::DownPhysicalFirst => ((key.down, key.physical), key.left),
            FusionOrder::LeftPhysicalFirst => ((key.left, key.physical), key.down),
        }
    }

    /// Whether every coupling in the chain is allowed by the fusion rules.
    pub fn admissible(self, group: &GroupId, key: &VertexKey) -> bool {
        let ((a, b), _) = self.split(key);
        group.fuses(a, b, key.inner1) && group.fuses(key.inner1, self.split(key).1, key.inner2) && group.fuses(key.right, key.up, key.inner2)
    }
}

/// Label of one free parameter of a vertex tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexKey {
    pub physical: IrrepLabel,
    pub inner1: IrrepLabel,
    pub inner2: IrrepLabel,
    pub left: IrrepLabel,
    pub right: IrrepLabel,
    pub up: IrrepLabel,
    pub down: IrrepLabel,
    /// Degeneracy indices on `l, r, u, d`.
    pub degeneracy: [usize; 4],
}

impl VertexKey {
    /// The key with its inner labels forgotten.
    pub fn outer(&self) -> VertexKey {
        let mut k = *self;
        k.inner1 = self.physical;
        k.inner2 = self.physical;
        k
    }
}

pub type VertexParams = BTreeMap<VertexKey, C64>;

pub const AXIS_PHYSICAL: usize = 0;
pub const AXIS_LEFT: usize = 1;
pub const AXIS_RIGHT: usize = 2;
pub const AXIS_UP: usize = 3;
pub const AXIS_DOWN: usize = 4;

/// Every fusion-admissible parameter key of a vertex.
pub fn admissible_keys(physical: &VertexSpace, legs: &[VirtualLeg; 4], order: FusionOrder) -> Vec<VertexKey> {
    let group = physical.group();
    let mut keys = Vec::new();
    for p in physical.labels() {
        for l in legs[0].labels() {
            for r in legs[1].labels() {
                for u in legs[2].labels() {
                    for d in legs[3].labels() {
                        let probe = VertexKey { physical: p, inner1: p, inner2: p, left: l, right: r, up: u, down: d, degeneracy: [0; 4] };
                        let ((a, b), z) = order.split(&probe);
                        for j1 in group.fusion(a, b) {
                            for j2 in group.fusion(j1, z) {
                                if !group.fuses(r, u, j2) {
                                    continue;
                                }
                                let degs = [legs[0].degeneracy(l), legs[1].degeneracy(r), legs[2].degeneracy(u), legs[3].degeneracy(d)];
                                for il in 0..degs[0] {
                                    for ir in 0..degs[1] {
                                        for iu in 0..degs[2] {
                                            for id in 0..degs[3] {
                                                keys.push(VertexKey { inner1: j1, inner2: j2, degeneracy: [il, ir, iu, id], ..probe });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    keys
}

/// Uniform random complex value in the unit square.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)
}

/// Random values for every admissible key.
pub fn random_vertex_params<R: Rng + ?Sized>(physical: &VertexSpace, legs: &[VirtualLeg; 4], order: FusionOrder, rng: &mut R) -> VertexParams {
    admissible_keys(physical, legs, order).into_iter().map(|k| (k, random_complex(rng))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexTensor {
    group: GroupId,
    physical: VertexSpace,
    legs: [VirtualLeg; 4],
    order: FusionOrder,
    params: VertexParams,
    amplitudes: SparseTensor,
}

impl VertexTensor {
    /// Assembles `A = Σ α · (Clebsch–Gordan chain of the chosen order)`.
    pub fn build(physical: &VertexSpace, legs: &[VirtualLeg; 4], order: FusionOrder, params: &VertexParams) -> Result<Self> {
        let group = physical.group();
        if legs.iter().any(|leg| leg.group() != group) {
            return Err(Error::LegMismatch("legs and physical space belong to different groups".into()));
        }
        let dims = vec![physical.dim(), legs[0].dim(), legs[1].dim(), legs[2].dim(), legs[3].dim()];
        let mut amplitudes = SparseTensor::new(dims);
        let mut cg = CgTable::new(group);
        for (key, &alpha) in params {
            let known = physical.contains(key.physical)
                && [key.left, key.right, key.up, key.down].iter().zip(legs.iter()).zip(key.degeneracy).all(|((&j, leg), i)| i < leg.degeneracy(j));
            if !known || !order.admissible(&group, key) {
                return Err(Error::InadmissibleFusionKey(format!("{key:?}")));
            }
            if alpha == ZERO {
                continue;
            }
            for (mp, ml, mr, mu, md, coeff) in fusion_chain(&mut cg, order, key) {
                let index = vec![
                    physical.index(key.physical, mp).unwrap(),
                    legs[0].index(key.left, ml, key.degeneracy[0]).unwrap(),
                    legs[1].index(key.right, mr, key.degeneracy[1]).unwrap(),
                    legs[2].index(key.up, mu, key.degeneracy[2]).unwrap(),
                    legs[3].index(key.down, md, key.degeneracy[3]).unwrap(),
                ];
                amplitudes.add(index, alpha * coeff);
            }
        }
        Ok(Self { group, physical: physical.clone(), legs: legs.clone(), order, params: params.clone(), amplitudes })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn physical(&self) -> &VertexSpace {
        &self.physical
    }

    pub fn legs(&self) -> &[VirtualLeg; 4] {
        &self.legs
    }

    pub fn order(&self) -> FusionOrder {
        self.order
    }

    pub fn params(&self) -> &VertexParams {
        &self.params
    }

    pub fn amplitudes(&self) -> &SparseTensor {
        &self.amplitudes
    }

    /// A copy with `delta` added next to the first stored amplitude, at the
    /// following physical basis state. Used as a symmetry-breaking control.
    pub fn perturbed(&self, delta: C64) -> Self {
        let mut index = self.amplitudes.iter().next().map(|(idx, _)| idx.clone()).unwrap_or_else(|| vec![0; 5]);
        index[AXIS_PHYSICAL] = (index[AXIS_PHYSICAL] + 1) % self.physical.dim();
        let mut out = self.clone();
        out.amplitudes.add(index, delta);
        out
    }

    /// `‖Θ^p_g A − ϴ^{l†}_g Θ̃^r_g Θ̃^u_g ϴ^{d†}_g A‖₂`.
    pub fn gauss_residual(&self, g: &GroupElement) -> f64 {
        vertex_gauss_residual(&self.physical, &self.legs, &self.amplitudes, g)
    }
}

/// The vertex Gauss-law residual of arbitrary amplitudes on the axes
/// `(p, l, r, u, d)`.
pub fn vertex_gauss_residual(physical: &VertexSpace, legs: &[VirtualLeg; 4], amplitudes: &SparseTensor, g: &GroupElement) -> f64 {
    let dims = amplitudes.dims().to_vec();
    let a = amplitudes.flat_entries();
    let tp = physical.theta(Side::Right, g);
    let lhs = apply_axes_flat(&a, &dims, &[(AXIS_PHYSICAL, &tp)]);
    let tl = legs[0].theta(Side::Right, g).adjoint();
    let tr = legs[1].theta(Side::Left, g);
    let tu = legs[2].theta(Side::Left, g);
    let td = legs[3].theta(Side::Right, g).adjoint();
    let rhs = apply_axes_flat(&a, &dims, &[(AXIS_LEFT, &tl), (AXIS_RIGHT, &tr), (AXIS_UP, &tu), (AXIS_DOWN, &td)]);
    flat_distance(&lhs, &rhs)
}

/// Entries `(m_p, m_l, m_r, m_u, m_d, coefficient)` of one Clebsch–Gordan
/// chain.
fn fusion_chain(cg: &mut CgTable, order: FusionOrder, key: &VertexKey) -> Vec<(usize, usize, usize, usize, usize, f64)> {
    let (p, l, r, u, d, j1, j2) = (key.physical, key.left, key.right, key.up, key.down, key.inner1, key.inner2);
    let (dp, dl, dr, du, dd, d1, d2) = (p.dim(), l.dim(), r.dim(), u.dim(), d.dim(), j1.dim(), j2.dim());
    // incoming part indexed [ml][md][mp][m2]
    let mut incoming = vec![0.0; dl * dd * dp * d2];
    for ml in 0..dl {
        for md in 0..dd {
            for mp in 0..dp {
                for m2 in 0..d2 {
                    let mut sum = 0.0;
                    for m1 in 0..d1 {
                        let (first, second) = match order {
                            FusionOrder::LeftDownFirst => (cg.coefficient(l, ml, d, md, j1, m1), cg.coefficient(j1, m1, p, mp, j2, m2)),
                            FusionOrder::DownPhysicalFirst => (cg.coefficient(d, md, p, mp, j1, m1), cg.coefficient(l, ml, j1, m1, j2, m2)),
                            FusionOrder::LeftPhysicalFirst => (cg.coefficient(l, ml, p, mp, j1, m1), cg.coefficient(j1, m1, d, md, j2, m2)),
                        };
                        sum += first * second;
                    }
                    incoming[((ml * dd + md) * dp + mp) * d2 + m2] = sum;
                }
            }
        }
    }
    let mut out = Vec::new();
    for mr in 0..dr {
        for mu in 0..du {
            for m2 in 0..d2 {
                let outgoing = cg.coefficient(r, mr, u, mu, j2, m2);
                if outgoing == 0.0 {
                    continue;
                }
                for ml in 0..dl {
                    for md in 0..dd {
                        for mp in 0..dp {
                            let value = incoming[((ml * dd + md) * dp + mp) * d2 + m2] * outgoing;
                            if value != 0.0 {
                                out.push((mp, ml, mr, mu, md, value));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `β^j` as a `d̃_j × d̃_j` matrix per link irrep.
pub type LinkParams = BTreeMap<IrrepLabel, CMatrix>;

pub fn random_link_params<R: Rng + ?Sized>(physical: &LinkSpace, leg: &VirtualLeg, rng: &mut R) -> LinkParams {
    physical
        .labels()
        .into_iter()
        .filter(|&j| leg.contains(j))
        .map(|j| {
            let d = leg.degeneracy(j);
            (j, CMatrix::from_fn(d, d, |_, _| random_complex(rng)))
        })
        .collect()
}

/// How the right/up leg of a link tensor is tied to the physical state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkWiring {
    /// `δ_{m_p m_a} δ_{n_p m_b}`
    Standard,
    /// `δ_{m_p m_a} δ_{m_p m_b}`: the right index is ignored. Only useful as
    /// a checker control.
    LeftIndexTwice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkTensor {
    physical: LinkSpace,
    leg: VirtualLeg,
    params: LinkParams,
    amplitudes: SparseTensor,
}

pub const LINK_AXIS_PHYSICAL: usize = 0;
pub const LINK_AXIS_IN: usize = 1;
pub const LINK_AXIS_OUT: usize = 2;

impl LinkTensor {
    /// `B^{j m n}_{j m, i; j n, i'} = β^j_{i i'}`.
    pub fn build(physical: &LinkSpace, leg: &VirtualLeg, params: &LinkParams) -> Result<Self> {
        Self::build_wired(physical, leg, params, LinkWiring::Standard)
    }

    pub fn build_wired(physical: &LinkSpace, leg: &VirtualLeg, params: &LinkParams, wiring: LinkWiring) -> Result<Self> {
        if physical.group() != leg.group() {
            return Err(Error::LegMismatch("link space and leg belong to different groups".into()));
        }
        let mut amplitudes = SparseTensor::new(vec![physical.dim(), leg.dim(), leg.dim()]);
        for (&j, beta) in params {
            if !physical.contains(j) || !leg.contains(j) {
                return Err(Error::InvalidArgument(format!("link parameter for irrep {j} outside the truncation")));
            }
            let deg = leg.degeneracy(j);
            if beta.rows() != deg || beta.cols() != deg {
                return Err(Error::InvalidArgument(format!("link parameter for irrep {j} must be {deg}×{deg}")));
            }
            for m in 0..j.dim() {
                for n in 0..j.dim() {
                    let out_m = match wiring {
                        LinkWiring::Standard => n,
                        LinkWiring::LeftIndexTwice => m,
                    };
                    for i in 0..deg {
                        for k in 0..deg {
                            let index = vec![physical.index(j, m, n).unwrap(), leg.index(j, m, i).unwrap(), leg.index(j, out_m, k).unwrap()];
                            amplitudes.add(index, beta[(i, k)]);
                        }
                    }
                }
            }
        }
        Ok(Self { physical: physical.clone(), leg: leg.clone(), params: params.clone(), amplitudes })
    }

    pub fn physical(&self) -> &LinkSpace {
        &self.physical
    }

    pub fn leg(&self) -> &VirtualLeg {
        &self.leg
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn amplitudes(&self) -> &SparseTensor {
        &self.amplitudes
    }

    /// `(‖Θ̃^L B − ϴ^a B‖, ‖Θ^R B − Θ̃^b B‖)`.
    pub fn gauss_residuals(&self, g: &GroupElement) -> (f64, f64) {
        link_gauss_residuals(&self.physical, &self.leg, &self.amplitudes, g)
    }
}

/// The link Gauss-law residuals of arbitrary amplitudes on the axes
/// `(link, in, out)`.
pub fn link_gauss_residuals(physical: &LinkSpace, leg: &VirtualLeg, amplitudes: &SparseTensor, g: &GroupElement) -> (f64, f64) {
    let dims = amplitudes.dims().to_vec();
    let b = amplitudes.flat_entries();
    let phys_left = physical.theta(Side::Left, g);
    let phys_right = physical.theta(Side::Right, g);
    let leg_right = leg.theta(Side::Right, g);
    let leg_left = leg.theta(Side::Left, g);
    let first = flat_distance(&apply_axes_flat(&b, &dims, &[(LINK_AXIS_PHYSICAL, &phys_left)]), &apply_axes_flat(&b, &dims, &[(LINK_AXIS_IN, &leg_right)]));
    let second = flat_distance(&apply_axes_flat(&b, &dims, &[(LINK_AXIS_PHYSICAL, &phys_right)]), &apply_axes_flat(&b, &dims, &[(LINK_AXIS_OUT, &leg_left)]));
    (first, second)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// `Σ_i |i⟩|i⟩ / √D` between the right (up) leg of one vertex and the left
/// (down) leg of its neighbour.
#[derive(Clone, Debug, PartialEq)]
pub struct BondState {
    orientation: Orientation,
    leg: VirtualLeg,
    coefficients: Vec<C64>,
}

impl BondState {
    pub fn new(orientation: Orientation, outgoing: &VirtualLeg, incoming: &VirtualLeg) -> Result<Self> {
        if outgoing != incoming {
            return Err(Error::LegMismatch("bond legs carry different irreps or degeneracies".into()));
        }
        let dim = outgoing.dim();
        let weight = C64::new(1.0 / Float::sqrt(dim as f64), 0.0);
        let mut coefficients = vec![ZERO; dim * dim];
        for i in 0..dim {
            coefficients[i * dim + i] = weight;
        }
        Ok(Self { orientation, leg: outgoing.clone(), coefficients })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn leg(&self) -> &VirtualLeg {
        &self.leg
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// `‖Θ̃^{r/u}_g ϴ^{l/d †}_g |H⟩ − |H⟩‖`.
    pub fn invariance_residual(&self, g: &GroupElement) -> f64 {
        let dim = self.leg.dim();
        let out = self.leg.theta(Side::Left, g);
        let inc = self.leg.theta(Side::Right, g).adjoint();
        let moved = apply_axes(&self.coefficients, &[dim, dim], &[(0, &out), (1, &inc)]);
        linalg::distance(&moved, &self.coefficients)
    }
}

pub const UNIFIED_AXIS_PHYSICAL: usize = 0;
pub const UNIFIED_AXIS_SIDE: usize = 1;
pub const UNIFIED_AXIS_TOP: usize = 2;
pub const UNIFIED_AXIS_LEFT: usize = 3;
pub const UNIFIED_AXIS_RIGHT: usize = 4;
pub const UNIFIED_AXIS_UP: usize = 5;
pub const UNIFIED_AXIS_DOWN: usize = 6;

/// A vertex tensor merged with the link tensors on its right and top links.
#[derive(Clone, Debug, PartialEq)]
pub struct UnifiedTensor {
    group: GroupId,
    physical: VertexSpace,
    side: LinkSpace,
    top: LinkSpace,
    legs: [VirtualLeg; 4],
    amplitudes: SparseTensor,
}

impl UnifiedTensor {
    /// Contracts the right leg of `a` with the incoming leg of `side` and the
    /// up leg with the incoming leg of `top`.
    pub fn unify(a: &VertexTensor, side: &LinkTensor, top: &LinkTensor) -> Result<Self> {
        if a.legs[1] != side.leg {
            return Err(Error::LegMismatch("right leg of the vertex tensor differs from the side link leg".into()));
        }
        if a.legs[2] != top.leg {
            return Err(Error::LegMismatch("up leg of the vertex tensor differs from the top link leg".into()));
        }
        let by_incoming = |t: &LinkTensor| {
            let mut map: BTreeMap<usize, Vec<(usize, usize, C64)>> = BTreeMap::new();
            for (idx, &v) in t.amplitudes.iter() {
                map.entry(idx[LINK_AXIS_IN]).or_default().push((idx[LINK_AXIS_PHYSICAL], idx[LINK_AXIS_OUT], v));
            }
            map
        };
        let side_map = by_incoming(side);
        let top_map = by_incoming(top);
        let legs = [a.legs[0].clone(), side.leg.clone(), top.leg.clone(), a.legs[3].clone()];
        let dims = vec![a.physical.dim(), side.physical.dim(), top.physical.dim(), legs[0].dim(), legs[1].dim(), legs[2].dim(), legs[3].dim()];
        let mut amplitudes = SparseTensor::new(dims);
        for (idx, &va) in a.amplitudes.iter() {
            let (Some(s_entries), Some(t_entries)) = (side_map.get(&idx[AXIS_RIGHT]), top_map.get(&idx[AXIS_UP])) else {
                continue;
            };
            for &(s, r, vs) in s_entries {
                for &(t, u, vt) in t_entries {
                    amplitudes.add(vec![idx[AXIS_PHYSICAL], s, t, idx[AXIS_LEFT], r, u, idx[AXIS_DOWN]], va * vs * vt);
                }
            }
        }
        Ok(Self { group: a.group, physical: a.physical.clone(), side: side.physical.clone(), top: top.physical.clone(), legs, amplitudes })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn physical(&self) -> &VertexSpace {
        &self.physical
    }

    pub fn side(&self) -> &LinkSpace {
        &self.side
    }

    pub fn top(&self) -> &LinkSpace {
        &self.top
    }

    pub fn legs(&self) -> &[VirtualLeg; 4] {
        &self.legs
    }

    pub fn amplitudes(&self) -> &SparseTensor {
        &self.amplitudes
    }

    /// Residuals of the three local laws:
    /// `Θ^p C = ϴ^{l†} Θ̃^{s,L} Θ̃^{t,L} ϴ^{d†} C`, `Θ^{s,R} C = Θ̃^r C` and
    /// `Θ^{t,R} C = Θ̃^u C`.
    pub fn gauss_residuals(&self, g: &GroupElement) -> [f64; 3] {
        unified_gauss_residuals(&self.physical, &self.side, &self.top, &self.legs, &self.amplitudes, g)
    }
}

/// The three unified-tensor residuals of arbitrary amplitudes on the axes
/// `(p, s, t, l, r, u, d)`.
pub fn unified_gauss_residuals(physical: &VertexSpace, side: &LinkSpace, top: &LinkSpace, legs: &[VirtualLeg; 4], amplitudes: &SparseTensor, g: &GroupElement) -> [f64; 3] {
    let dims = amplitudes.dims().to_vec();
    let c = amplitudes.flat_entries();
    let tp = physical.theta(Side::Right, g);
    let lhs = apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_PHYSICAL, &tp)]);
    let tl = legs[0].theta(Side::Right, g).adjoint();
    let ts = side.theta(Side::Left, g);
    let tt = top.theta(Side::Left, g);
    let td = legs[3].theta(Side::Right, g).adjoint();
    let rhs = apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_LEFT, &tl), (UNIFIED_AXIS_SIDE, &ts), (UNIFIED_AXIS_TOP, &tt), (UNIFIED_AXIS_DOWN, &td)]);
    let vertex = flat_distance(&lhs, &rhs);

    let side_r = side.theta(Side::Right, g);
    let leg_r = legs[1].theta(Side::Left, g);
    let side = flat_distance(&apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_SIDE, &side_r)]), &apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_RIGHT, &leg_r)]));
    let top_r = top.theta(Side::Right, g);
    let leg_u = legs[2].theta(Side::Left, g);
    let top = flat_distance(&apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_TOP, &top_r)]), &apply_axes_flat(&c, &dims, &[(UNIFIED_AXIS_UP, &leg_u)]));
    [vertex, side, top]
}

/// Identity link parameters (`β^j = 1`) for every irrep shared by the link
/// space and the leg.
pub fn unit_link_params(physical: &LinkSpace, leg: &VirtualLeg) -> LinkParams {
    physical
        .labels()
        .into_iter()
        .filter(|&j| leg.contains(j))
        .map(|j| (j, CMatrix::identity(leg.degeneracy(j))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Spin;
    use crate::linalg::ONE;
    use crate::s3::S3Irrep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spin(t: u32) -> IrrepLabel {
        IrrepLabel::Spin(Spin::from_twice(t))
    }

    fn legs(leg: &VirtualLeg) -> [VirtualLeg; 4] {
        [leg.clone(), leg.clone(), leg.clone(), leg.clone()]
    }

    #[test]
    fn u1_vertex_obeys_charge_conservation() {
        let group = GroupId::U1;
        let charges: Vec<IrrepLabel> = (-1..=1).map(IrrepLabel::Charge).collect();
        let physical = VertexSpace::new(group, &charges).unwrap();
        let leg = VirtualLeg::new(group, &charges).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = random_vertex_params(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &mut rng);
        let a = VertexTensor::build(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &params).unwrap();
        let q = |space_idx: usize| charges[space_idx].charge().unwrap();
        let mut count = 0;
        for p in 0..3 {
            for l in 0..3 {
                for r in 0..3 {
                    for u in 0..3 {
                        for d in 0..3 {
                            let allowed = q(r) + q(u) - q(l) - q(d) == q(p);
                            let present = a.amplitudes().get(&[p, l, r, u, d]) != ZERO;
                            assert_eq!(allowed, present);
                            count += allowed as usize;
                        }
                    }
                }
            }
        }
        assert_eq!(count, a.amplitudes().nnz());
    }

    #[test]
    fn trivial_vertex_is_single_amplitude() {
        let group = GroupId::SU2;
        let physical = VertexSpace::new(group, &[spin(0)]).unwrap();
        let leg = VirtualLeg::trivial(group);
        let key = VertexKey { physical: spin(0), inner1: spin(0), inner2: spin(0), left: spin(0), right: spin(0), up: spin(0), down: spin(0), degeneracy: [0; 4] };
        let alpha = C64::new(0.3, -1.2);
        let a = VertexTensor::build(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &[(key, alpha)].into_iter().collect()).unwrap();
        assert_eq!(a.amplitudes().nnz(), 1);
        assert_eq!(a.amplitudes().get(&[0, 0, 0, 0, 0]), alpha);
        assert!(a.gauss_residual(&GroupId::SU2.sample_elements(1, 9)[0]) < 1e-15);
    }

    #[test]
    fn inadmissible_key_is_rejected() {
        let group = GroupId::SU2;
        let physical = VertexSpace::new(group, &[spin(0), spin(1)]).unwrap();
        let leg = VirtualLeg::new(group, &[spin(0), spin(1)]).unwrap();
        let key = VertexKey { physical: spin(1), inner1: spin(0), inner2: spin(0), left: spin(0), right: spin(0), up: spin(0), down: spin(0), degeneracy: [0; 4] };
        let err = VertexTensor::build(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &[(key, ONE)].into_iter().collect());
        assert!(matches!(err, Err(Error::InadmissibleFusionKey(_))));
    }

    #[test]
    fn vertex_gauss_law_all_orders_and_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        type Case = (GroupId, Vec<IrrepLabel>, Vec<(IrrepLabel, usize)>);
        let cases: Vec<Case> = vec![
            (GroupId::SU2, vec![spin(0), spin(1)], vec![(spin(0), 2), (spin(1), 1)]),
            (GroupId::SymmetricS3, vec![IrrepLabel::S3(S3Irrep::Sign), IrrepLabel::S3(S3Irrep::Standard)], vec![(IrrepLabel::S3(S3Irrep::Trivial), 1), (IrrepLabel::S3(S3Irrep::Standard), 2)]),
            (GroupId::Cyclic(3), vec![IrrepLabel::Charge(0), IrrepLabel::Charge(2)], vec![(IrrepLabel::Charge(0), 1), (IrrepLabel::Charge(1), 2), (IrrepLabel::Charge(2), 1)]),
        ];
        for (group, phys, deg) in cases {
            let physical = VertexSpace::new(group, &phys).unwrap();
            let leg = VirtualLeg::with_degeneracy(group, &deg).unwrap();
            for order in FusionOrder::ALL {
                let params = random_vertex_params(&physical, &legs(&leg), order, &mut rng);
                let a = VertexTensor::build(&physical, &legs(&leg), order, &params).unwrap();
                assert!(a.amplitudes().nnz() > 0);
                for g in group.test_elements(10, &mut rng) {
                    assert!(a.gauss_residual(&g) < 1e-12, "{group:?} {order:?}");
                }
                let perturbed = a.perturbed(C64::new(0.1, 0.0));
                let bad = group.test_elements(3, &mut rng).iter().map(|g| perturbed.gauss_residual(g)).fold(0.0, f64::max);
                assert!(bad > 1e-3, "{group:?} {order:?} {bad}");
            }
        }
    }

    #[test]
    fn link_tensor_structure_and_laws() {
        let group = GroupId::SU2;
        let link = LinkSpace::new(group, &[spin(0), spin(1)]).unwrap();
        let leg = VirtualLeg::new(group, &[spin(0), spin(1)]).unwrap();
        let b = LinkTensor::build(&link, &leg, &unit_link_params(&link, &leg)).unwrap();
        assert_eq!(b.amplitudes().nnz(), 5);
        let g = group.sample_elements(1, 5).remove(0);
        let (first, second) = b.gauss_residuals(&g);
        assert!(first < 1e-13 && second < 1e-13);
        let (_, bad) = LinkTensor::build_wired(&link, &leg, &unit_link_params(&link, &leg), LinkWiring::LeftIndexTwice).unwrap().gauss_residuals(&g);
        assert!(bad > 1e-3);

        let z2 = GroupId::Cyclic(2);
        let z2_link = LinkSpace::full(z2).unwrap();
        let z2_leg = VirtualLeg::new(z2, &z2_link.labels()).unwrap();
        let mut params = unit_link_params(&z2_link, &z2_leg);
        assert_eq!(LinkTensor::build(&z2_link, &z2_leg, &params).unwrap().amplitudes().nnz(), 2);
        params.insert(IrrepLabel::Charge(1), CMatrix::zeros(1, 1));
        assert_eq!(LinkTensor::build(&z2_link, &z2_leg, &params).unwrap().amplitudes().nnz(), 1);
    }

    #[test]
    fn bond_states() {
        let group = GroupId::SU2;
        let leg = VirtualLeg::with_degeneracy(group, &[(spin(0), 2), (spin(1), 3)]).unwrap();
        let h = BondState::new(Orientation::Horizontal, &leg, &leg).unwrap();
        assert!((linalg::norm(h.coefficients()) - 1.0).abs() < 1e-15);
        for g in group.sample_elements(5, 2) {
            assert!(h.invariance_residual(&g) < 1e-13);
        }
        let other = VirtualLeg::with_degeneracy(group, &[(spin(0), 1), (spin(1), 3)]).unwrap();
        assert!(matches!(BondState::new(Orientation::Vertical, &leg, &other), Err(Error::LegMismatch(_))));
    }

    #[test]
    fn unified_tensor_laws_and_component_formula() {
        let group = GroupId::SU2;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let physical = VertexSpace::new(group, &[spin(0), spin(1)]).unwrap();
        let leg = VirtualLeg::with_degeneracy(group, &[(spin(0), 1), (spin(1), 2)]).unwrap();
        let link = LinkSpace::new(group, &[spin(0), spin(1)]).unwrap();
        let params = random_vertex_params(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &mut rng);
        let a = VertexTensor::build(&physical, &legs(&leg), FusionOrder::LeftDownFirst, &params).unwrap();
        let bs = LinkTensor::build(&link, &leg, &random_link_params(&link, &leg, &mut rng)).unwrap();
        let bt = LinkTensor::build(&link, &leg, &random_link_params(&link, &leg, &mut rng)).unwrap();
        let c = UnifiedTensor::unify(&a, &bs, &bt).unwrap();
        for g in group.sample_elements(5, 8) {
            let res = c.gauss_residuals(&g);
            assert!(res.iter().all(|&r| r < 1e-12), "{res:?}");
        }
        // C = Σ_{i k} A[p l i k d] B_s[s i r] B_t[t k u]
        let dense_a = a.amplitudes();
        for (idx, &v) in c.amplitudes().iter() {
            let (p, s, t, l, r, u, d) = (idx[0], idx[1], idx[2], idx[3], idx[4], idx[5], idx[6]);
            let mut expected = ZERO;
            for i in 0..leg.dim() {
                for k in 0..leg.dim() {
                    expected += dense_a.get(&[p, l, i, k, d]) * bs.amplitudes().get(&[s, i, r]) * bt.amplitudes().get(&[t, k, u]);
                }
            }
            assert!((expected - v).norm() < 1e-14);
        }
        let narrow = VirtualLeg::new(group, &[spin(0)]).unwrap();
        let bad = LinkTensor::build(&link, &narrow, &unit_link_params(&link, &narrow)).unwrap();
        assert!(matches!(UnifiedTensor::unify(&a, &bad, &bt), Err(Error::LegMismatch(_))));
    }
}
