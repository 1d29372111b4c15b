//! Exact contraction of small square lattices and the gauge operators that
//! act on the resulting states.
//!
//! Sites are numbered row-major, `site = y·width + x`; `ê₁` points to larger
//! `x` and `ê₂` to larger `y`. Every site owns the link to its right and the
//! link above it when those neighbours exist. A contracted state is a dense
//! vector over slots: one slot per site, then one per link, in link order.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fermion::{
    bond_operator, fiducial_su2, fiducial_u1, gauge_fiducial, BondWeighting, BosonFactor, FockOperator, FockSpace, GaugedOperator, GaugedState, LinkRegister,
    ModeRole, ModeSet, Substitution, Tau, U1Params,
};
use crate::group::{GroupElement, GroupId, IrrepLabel, Spin};
use crate::linalg::{self, CMatrix, SparseMatrix, C64, ONE, ZERO};
use crate::peps::{
    random_link_params, random_vertex_params, unit_link_params, FusionOrder, LinkTensor, Orientation, UnifiedTensor, VertexTensor, VirtualLeg,
    UNIFIED_AXIS_DOWN, UNIFIED_AXIS_LEFT, UNIFIED_AXIS_PHYSICAL, UNIFIED_AXIS_RIGHT, UNIFIED_AXIS_SIDE, UNIFIED_AXIS_TOP, UNIFIED_AXIS_UP,
};
use crate::spaces::{LinkSpace, Side, VertexSpace};

/// Largest dense state the contraction will produce.
pub const STATE_LIMIT: u128 = 1_000_000;
/// Largest dimension for an explicit operator matrix.
pub const OPERATOR_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    width: usize,
    height: usize,
    boundary: Boundary,
}

/// A directed link from `from` to `to = from + ê`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub orientation: Orientation,
}

impl Geometry {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("lattice size {width}×{height} is empty")));
        }
        if boundary == Boundary::Periodic && (width < 2 || height < 2) {
            return Err(Error::InvalidArgument(format!("periodic lattice {width}×{height} needs at least two sites per direction")));
        }
        Ok(Self { width, height, boundary })
    }

    pub fn open(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, Boundary::Open)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn site_count(&self) -> usize {
        self.width * self.height
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.width, site / self.width)
    }

    /// `(−1)^{x+y}`.
    pub fn staggering(&self, site: usize) -> i64 {
        let (x, y) = self.coords(site);
        if (x + y) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// The site at `site + ê`.
    pub fn forward(&self, site: usize, orientation: Orientation) -> Option<usize> {
        let (x, y) = self.coords(site);
        let periodic = self.boundary == Boundary::Periodic;
        match orientation {
            Orientation::Horizontal if x + 1 < self.width => Some(self.site(x + 1, y)),
            Orientation::Horizontal if periodic => Some(self.site(0, y)),
            Orientation::Vertical if y + 1 < self.height => Some(self.site(x, y + 1)),
            Orientation::Vertical if periodic => Some(self.site(x, 0)),
            _ => None,
        }
    }

    /// Links in slot order: for each site its horizontal then vertical link.
    pub fn links(&self) -> Vec<Link> {
        let mut links = Vec::new();
        for site in 0..self.site_count() {
            for orientation in [Orientation::Horizontal, Orientation::Vertical] {
                if let Some(to) = self.forward(site, orientation) {
                    links.push(Link { from: site, to, orientation });
                }
            }
        }
        links
    }

    pub fn outgoing(&self, site: usize, orientation: Orientation) -> Option<usize> {
        self.links().iter().position(|l| l.from == site && l.orientation == orientation)
    }

    pub fn incoming(&self, site: usize, orientation: Orientation) -> Option<usize> {
        self.links().iter().position(|l| l.to == site && l.orientation == orientation)
    }
}

/// The physical content of a site slot.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteRep {
    /// A bosonic vertex space transforming with `⊕D`.
    Boson(VertexSpace),
    /// `label.dim()` fermionic modes transforming as one irrep, in the local
    /// Fock basis.
    Fermion { group: GroupId, label: IrrepLabel },
}

impl SiteRep {
    pub fn dim(&self) -> usize {
        match self {
            SiteRep::Boson(space) => space.dim(),
            SiteRep::Fermion { label, .. } => 1 << label.dim(),
        }
    }

    /// `Θ^p_g` on the site.
    pub fn theta(&self, g: &GroupElement) -> Result<CMatrix> {
        match self {
            SiteRep::Boson(space) => Ok(space.theta(Side::Right, g)),
            SiteRep::Fermion { group, label } => Ok(FockSpace::new(label.dim())?.lift(&group.wigner_d(*label, g))),
        }
    }

    /// The charges `Q_a`, with `Θ^p_{g(q)} = exp(i q·Q)`.
    pub fn generators(&self) -> Result<Vec<CMatrix>> {
        match self {
            SiteRep::Boson(space) => space.generators(Side::Right),
            SiteRep::Fermion { group, label } => {
                let modes: Vec<usize> = (0..label.dim()).collect();
                group.lie_generators(*label)?.iter().map(|t| FockOperator::bilinear(&modes, t, &modes).matrix(modes.len()).map(|m| m.to_dense())).collect()
            }
        }
    }
}

/// Factors `(slot, matrix)` applied one after another.
pub type LocalProduct = Vec<(usize, CMatrix)>;
/// Terms `(slot, matrix)` that are summed.
pub type LocalSum = Vec<(usize, CMatrix)>;

/// Slot structure of a contracted lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    geometry: Geometry,
    sites: Vec<SiteRep>,
    links: Vec<Link>,
    link_spaces: Vec<LinkSpace>,
}

impl Layout {
    /// `link_spaces` is either empty (no gauge field) or one per link.
    pub fn new(geometry: Geometry, sites: Vec<SiteRep>, link_spaces: Vec<LinkSpace>) -> Result<Self> {
        let links = geometry.links();
        if sites.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!("{} site spaces for {} sites", sites.len(), geometry.site_count())));
        }
        if !link_spaces.is_empty() && link_spaces.len() != links.len() {
            return Err(Error::InvalidArgument(format!("{} link spaces for {} links", link_spaces.len(), links.len())));
        }
        Ok(Self { geometry, sites, links, link_spaces })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn sites(&self) -> &[SiteRep] {
        &self.sites
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_spaces(&self) -> &[LinkSpace] {
        &self.link_spaces
    }

    pub fn is_gauged(&self) -> bool {
        !self.link_spaces.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(SiteRep::dim).chain(self.link_spaces.iter().map(LinkSpace::dim)).collect()
    }

    /// Total dimension, saturating instead of overflowing.
    pub fn dim(&self) -> u128 {
        self.dims().iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
    }

    pub fn link_slot(&self, link: usize) -> usize {
        self.sites.len() + link
    }

    fn incident(&self, site: usize) -> (Vec<usize>, Vec<usize>) {
        let outgoing = (0..self.links.len()).filter(|&k| self.links[k].from == site).collect();
        let incoming = (0..self.links.len()).filter(|&k| self.links[k].to == site).collect();
        (outgoing, incoming)
    }

    /// `Θ_g(x) = Θ^p_g ⊗ Π_out Θ̃^†_g ⊗ Π_in Θ_g`. Without a gauge field only
    /// the site factor remains.
    pub fn gauss_operator(&self, site: usize, g: &GroupElement) -> Result<LocalProduct> {
        let mut factors = vec![(site, self.sites[site].theta(g)?)];
        if self.is_gauged() {
            let (outgoing, incoming) = self.incident(site);
            for k in outgoing {
                factors.push((self.link_slot(k), self.link_spaces[k].theta(Side::Left, g).adjoint()));
            }
            for k in incoming {
                factors.push((self.link_slot(k), self.link_spaces[k].theta(Side::Right, g)));
            }
        }
        Ok(factors)
    }

    /// Generators `G_a(x) = Q_a − Σ_out L_a + Σ_in R_a`, so that
    /// `Θ_{g(q)}(x) = exp(i q·G)`.
    pub fn gauss_generators(&self, site: usize) -> Result<Vec<LocalSum>> {
        let charges = self.sites[site].generators()?;
        let mut out: Vec<LocalSum> = charges.into_iter().map(|q| vec![(site, q)]).collect();
        if self.is_gauged() {
            let (outgoing, incoming) = self.incident(site);
            for k in outgoing {
                for (a, l) in self.link_spaces[k].generators(Side::Left)?.into_iter().enumerate() {
                    out[a].push((self.link_slot(k), l.scale(-ONE)));
                }
            }
            for k in incoming {
                for (a, r) in self.link_spaces[k].generators(Side::Right)?.into_iter().enumerate() {
                    out[a].push((self.link_slot(k), r));
                }
            }
        }
        Ok(out)
    }

    /// The same transformation at every site.
    pub fn global_operator(&self, g: &GroupElement) -> Result<LocalProduct> {
        let mut factors = Vec::new();
        for site in 0..self.sites.len() {
            factors.extend(self.gauss_operator(site, g)?);
        }
        Ok(factors)
    }

    /// Compares `exp(i q·G(x))` with `Θ_{g(q)}(x)` slot by slot; the terms of
    /// `G` on different slots commute.
    pub fn exponentiation_residual(&self, site: usize, q: &[f64]) -> Result<f64> {
        let group = match &self.sites[site] {
            SiteRep::Boson(space) => space.group(),
            SiteRep::Fermion { group, .. } => *group,
        };
        let g = group.element_from_parameters(q)?;
        let generators = self.gauss_generators(site)?;
        let mut exponents: BTreeMap<usize, CMatrix> = BTreeMap::new();
        for (qa, terms) in q.iter().zip(&generators) {
            for (slot, m) in terms {
                let scaled = m.scale(C64::new(0.0, *qa));
                let entry = exponents.entry(*slot).or_insert_with(|| CMatrix::zeros(m.rows(), m.cols()));
                *entry = &*entry + &scaled;
            }
        }
        let mut expected: BTreeMap<usize, CMatrix> = BTreeMap::new();
        for (slot, m) in self.gauss_operator(site, &g)? {
            let entry = expected.entry(slot).or_insert_with(|| CMatrix::identity(m.rows()));
            *entry = m.matmul(entry);
        }
        Ok(exponents.iter().map(|(slot, e)| (&e.expm() - &expected[slot]).frobenius_norm()).fold(0.0, f64::max))
    }

    /// Explicit matrix of a sum of local terms.
    pub fn sum_matrix(&self, terms: &LocalSum) -> Result<SparseMatrix> {
        let dim = self.dim();
        if dim > OPERATOR_LIMIT as u128 {
            return Err(Error::TooLarge { dim, limit: OPERATOR_LIMIT as u128 });
        }
        let dim = dim as usize;
        let dims = self.dims();
        let mut triplets = Vec::new();
        for col in 0..dim {
            let mut basis = vec![ZERO; dim];
            basis[col] = ONE;
            let image = LatticeState { dims: dims.clone(), amplitudes: basis }.apply_sum(terms);
            triplets.extend(image.amplitudes.iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(row, &v)| (row, col, v)));
        }
        Ok(SparseMatrix::from_triplets(dim, dim, triplets))
    }
}

/// Largest unitarity residual among the factors of a product.
pub fn unitarity_residual(factors: &LocalProduct) -> f64 {
    factors.iter().map(|(_, m)| m.unitarity_residual()).fold(0.0, f64::max)
}

/// A dense many-body state over the slots of a [`Layout`].
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl LatticeState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != amplitudes.len() {
            return Err(Error::InvalidArgument(format!("{} amplitudes for dimension {len}", amplitudes.len())));
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn apply_product(&self, factors: &LocalProduct) -> LatticeState {
        let mut amplitudes = self.amplitudes.clone();
        for (slot, m) in factors {
            amplitudes = linalg::apply_axis(&amplitudes, &self.dims, *slot, m);
        }
        LatticeState { dims: self.dims.clone(), amplitudes }
    }

    pub fn apply_sum(&self, terms: &LocalSum) -> LatticeState {
        let mut amplitudes = vec![ZERO; self.amplitudes.len()];
        for (slot, m) in terms {
            for (acc, v) in amplitudes.iter_mut().zip(linalg::apply_axis(&self.amplitudes, &self.dims, *slot, m)) {
                *acc += v;
            }
        }
        LatticeState { dims: self.dims.clone(), amplitudes }
    }

    /// `‖Oψ − ψ‖ / ‖ψ‖`.
    pub fn invariance_residual(&self, factors: &LocalProduct) -> f64 {
        linalg::distance(&self.apply_product(factors).amplitudes, &self.amplitudes) / self.norm()
    }

    /// `‖ABψ − BAψ‖ / ‖ψ‖`.
    pub fn commutator_residual(&self, a: &LocalProduct, b: &LocalProduct) -> f64 {
        let ab = self.apply_product(b).apply_product(a);
        let ba = self.apply_product(a).apply_product(b);
        linalg::distance(&ab.amplitudes, &ba.amplitudes) / self.norm()
    }

    /// `‖Gψ‖ / ‖ψ‖`.
    pub fn annihilation_residual(&self, terms: &LocalSum) -> f64 {
        self.apply_sum(terms).norm() / self.norm()
    }
}

fn guard(dim: u128) -> Result<()> {
    if dim > STATE_LIMIT {
        return Err(Error::TooLarge { dim, limit: STATE_LIMIT });
    }
    Ok(())
}

/// A vertex tensor with the link tensors of the links it owns.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonicSite {
    pub vertex: VertexTensor,
    pub side: Option<LinkTensor>,
    pub top: Option<LinkTensor>,
}

/// A bosonic gauge-invariant PEPS on a finite lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonicLattice {
    geometry: Geometry,
    sites: Vec<BosonicSite>,
}

/// Marks a bond whose first end has not been visited.
const OPEN: usize = usize::MAX;

impl BosonicLattice {
    pub fn new(geometry: Geometry, sites: Vec<BosonicSite>) -> Result<Self> {
        if sites.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!("{} sites for a {}×{} lattice", sites.len(), geometry.width, geometry.height)));
        }
        for (s, site) in sites.iter().enumerate() {
            let has_side = geometry.forward(s, Orientation::Horizontal).is_some();
            let has_top = geometry.forward(s, Orientation::Vertical).is_some();
            if has_side != site.side.is_some() || has_top != site.top.is_some() {
                return Err(Error::InvalidArgument(format!("site {s} must carry exactly the link tensors of its outgoing links")));
            }
        }
        for link in geometry.links() {
            let out = &sites[link.from].vertex.legs()[if link.orientation == Orientation::Horizontal { 1 } else { 2 }];
            let inc = &sites[link.to].vertex.legs()[if link.orientation == Orientation::Horizontal { 0 } else { 3 }];
            if out != inc {
                return Err(Error::LegMismatch(format!("bond {} → {} joins different legs", link.from, link.to)));
            }
        }
        Ok(Self { geometry, sites })
    }

    /// Random vertex and link parameters with the same leg on every bond.
    pub fn random<R: Rng + ?Sized>(geometry: Geometry, physical: &[VertexSpace], leg: &VirtualLeg, link: &LinkSpace, rng: &mut R) -> Result<Self> {
        if physical.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!("{} vertex spaces for {} sites", physical.len(), geometry.site_count())));
        }
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg.clone()];
        let mut sites = Vec::with_capacity(physical.len());
        for (s, space) in physical.iter().enumerate() {
            let params = random_vertex_params(space, &legs, FusionOrder::LeftDownFirst, rng);
            let vertex = VertexTensor::build(space, &legs, FusionOrder::LeftDownFirst, &params)?;
            let mut owned = |o| -> Result<Option<LinkTensor>> {
                match geometry.forward(s, o) {
                    Some(_) => Ok(Some(LinkTensor::build(link, leg, &random_link_params(link, leg, rng))?)),
                    None => Ok(None),
                }
            };
            let side = owned(Orientation::Horizontal)?;
            let top = owned(Orientation::Vertical)?;
            sites.push(BosonicSite { vertex, side, top });
        }
        Self::new(geometry, sites)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn sites(&self) -> &[BosonicSite] {
        &self.sites
    }

    pub fn sites_mut(&mut self) -> &mut [BosonicSite] {
        &mut self.sites
    }

    pub fn layout(&self) -> Result<Layout> {
        let links = self.geometry.links();
        let spaces = links
            .iter()
            .map(|l| {
                let site = &self.sites[l.from];
                let tensor = if l.orientation == Orientation::Horizontal { &site.side } else { &site.top };
                tensor.as_ref().expect("validated on construction").physical().clone()
            })
            .collect();
        Layout::new(self.geometry, self.sites.iter().map(|s| SiteRep::Boson(s.vertex.physical().clone())).collect(), spaces)
    }

    /// The unified tensors; a missing outgoing link is replaced by a
    /// one-dimensional link that only admits the trivial irrep.
    pub fn unified(&self) -> Result<Vec<UnifiedTensor>> {
        self.sites
            .iter()
            .map(|site| {
                let group = site.vertex.group();
                let dummy = |leg: &VirtualLeg| -> Result<LinkTensor> {
                    let space = LinkSpace::new(group, &[group.trivial()])?;
                    LinkTensor::build(&space, leg, &unit_link_params(&space, leg))
                };
                let side = match &site.side {
                    Some(t) => t.clone(),
                    None => dummy(&site.vertex.legs()[1])?,
                };
                let top = match &site.top {
                    Some(t) => t.clone(),
                    None => dummy(&site.vertex.legs()[2])?,
                };
                UnifiedTensor::unify(&site.vertex, &side, &top)
            })
            .collect()
    }

    /// Contracts every bond with `Σ_i |ii⟩/√D`. Legs on an open boundary are
    /// fixed to the trivial irrep.
    pub fn contract(&self) -> Result<LatticeState> {
        let layout = self.layout()?;
        guard(layout.dim())?;
        let unified = self.unified()?;
        let links = layout.links().to_vec();
        let sites = self.sites.len();
        let slots = sites + links.len();
        let mut partial: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        partial.insert(vec![OPEN; slots + links.len()], ONE);
        for (s, c) in unified.iter().enumerate() {
            let out_h = self.geometry.outgoing(s, Orientation::Horizontal);
            let out_v = self.geometry.outgoing(s, Orientation::Vertical);
            let in_h = self.geometry.incoming(s, Orientation::Horizontal);
            let in_v = self.geometry.incoming(s, Orientation::Vertical);
            let trivial = |leg: &VirtualLeg| leg.index(c.group().trivial(), 0, 0);
            let boundary_left = trivial(&c.legs()[0]);
            let boundary_down = trivial(&c.legs()[3]);
            let weight = |leg: &VirtualLeg| C64::new(1.0 / Float::sqrt(leg.dim() as f64), 0.0);
            let mut next: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
            for (key, &amp) in &partial {
                'entries: for (idx, &v) in c.amplitudes().iter() {
                    let mut key = key.clone();
                    let mut value = amp * v;
                    key[s] = idx[UNIFIED_AXIS_PHYSICAL];
                    let ends = [
                        (out_h, idx[UNIFIED_AXIS_RIGHT], Some(idx[UNIFIED_AXIS_SIDE]), &c.legs()[1], None),
                        (out_v, idx[UNIFIED_AXIS_UP], Some(idx[UNIFIED_AXIS_TOP]), &c.legs()[2], None),
                        (in_h, idx[UNIFIED_AXIS_LEFT], None, &c.legs()[0], Some(boundary_left)),
                        (in_v, idx[UNIFIED_AXIS_DOWN], None, &c.legs()[3], Some(boundary_down)),
                    ];
                    for (link, leg_index, physical, leg, boundary) in ends {
                        match link {
                            Some(k) => {
                                if let Some(p) = physical {
                                    key[sites + k] = p;
                                }
                                let bond = slots + k;
                                if key[bond] == OPEN {
                                    key[bond] = leg_index;
                                } else if key[bond] == leg_index {
                                    key[bond] = OPEN;
                                    value *= weight(leg);
                                } else {
                                    continue 'entries;
                                }
                            }
                            None => {
                                if let Some(b) = boundary {
                                    if Some(leg_index) != b {
                                        continue 'entries;
                                    }
                                }
                            }
                        }
                    }
                    *next.entry(key).or_insert(ZERO) += value;
                }
            }
            next.retain(|_, v| v.norm() > 1e-300);
            partial = next;
        }
        let dims = layout.dims();
        let mut amplitudes = vec![ZERO; dims.iter().product()];
        for (key, v) in partial {
            debug_assert!(key[slots..].iter().all(|&b| b == OPEN));
            let flat = key[..slots].iter().zip(&dims).fold(0, |acc, (&i, &d)| acc * d + i);
            amplitudes[flat] += v;
        }
        let state = LatticeState::new(dims, amplitudes)?;
        if state.norm() == 0.0 {
            return Err(Error::EmptyState);
        }
        Ok(state)
    }
}

/// The per-site data of a fermionic PEPS.
#[derive(Clone, Debug, PartialEq)]
pub enum FermionVertex {
    U1(U1Params),
    Su2 { tensor: Box<VertexTensor>, tau: Tau },
}

/// A fermionic PEPS with U(1) or SU(2) symmetry, optionally gauged.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionLattice {
    geometry: Geometry,
    group: GroupId,
    vertices: Vec<FermionVertex>,
    leg_spins: Vec<Spin>,
    gauge: Option<LinkSpace>,
    weighting: BondWeighting,
}

impl FermionLattice {
    pub fn u1(geometry: Geometry, params: Vec<U1Params>) -> Result<Self> {
        if params.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!("{} parameter sets for {} sites", params.len(), geometry.site_count())));
        }
        Ok(Self { geometry, group: GroupId::U1, vertices: params.into_iter().map(FermionVertex::U1).collect(), leg_spins: Vec::new(), gauge: None, weighting: BondWeighting::Unweighted })
    }

    /// Vertex tensors must share one leg, without degeneracy, carrying
    /// spins 0 and ½ only; matter spins are 0 and ½.
    pub fn su2(geometry: Geometry, tensors: Vec<VertexTensor>, tau: Tau) -> Result<Self> {
        if tensors.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!("{} vertex tensors for {} sites", tensors.len(), geometry.site_count())));
        }
        let leg = tensors.first().map(|t| t.legs()[0].clone()).ok_or_else(|| Error::InvalidArgument("empty lattice".into()))?;
        let mut leg_spins = Vec::new();
        for &label in &leg.labels() {
            match label.spin() {
                Some(s) if s.twice() <= 1 && leg.degeneracy(label) == 1 => leg_spins.push(s),
                Some(_) => return Err(Error::InvalidArgument(format!("fermionic lattice legs support spins 0 and 1/2 without degeneracy, got {label}"))),
                None => return Err(Error::Su2Only),
            }
        }
        for t in &tensors {
            if t.group() != GroupId::SU2 {
                return Err(Error::Su2Only);
            }
            if t.legs().iter().any(|l| *l != leg) {
                return Err(Error::LegMismatch("every leg of a fermionic lattice must be the same".into()));
            }
            if t.physical().labels().iter().any(|l| l.spin().is_none_or(|s| s.twice() > 1)) {
                return Err(Error::InvalidArgument("matter carries spins 0 and 1/2 only".into()));
            }
        }
        Ok(Self { geometry, group: GroupId::SU2, vertices: tensors.into_iter().map(|tensor| FermionVertex::Su2 { tensor: Box::new(tensor), tau }).collect(), leg_spins, gauge: None, weighting: BondWeighting::Unweighted })
    }

    pub fn random_u1<R: Rng + ?Sized>(geometry: Geometry, rng: &mut R) -> Result<Self> {
        let params = (0..geometry.site_count()).map(|s| crate::fermion::random_u1_params(geometry.staggering(s), rng)).collect();
        Self::u1(geometry, params)
    }

    pub fn random_su2<R: Rng + ?Sized>(geometry: Geometry, tau: Tau, rng: &mut R) -> Result<Self> {
        let labels = [IrrepLabel::Spin(Spin::ZERO), IrrepLabel::Spin(Spin::HALF)];
        let physical = VertexSpace::new(GroupId::SU2, &labels)?;
        let leg = VirtualLeg::new(GroupId::SU2, &labels)?;
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let tensors = (0..geometry.site_count())
            .map(|_| {
                let params = random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, rng);
                VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &params)
            })
            .collect::<Result<_>>()?;
        Self::su2(geometry, tensors, tau)
    }

    /// Adds the gauge field: creation operators on outgoing bonded legs are
    /// dressed with link operators acting on the bosonic vacuum.
    pub fn gauged(mut self, link: LinkSpace) -> Result<Self> {
        if link.group() != self.group {
            return Err(Error::LegMismatch("link space belongs to another group".into()));
        }
        if link.vacuum_index().is_none() {
            return Err(Error::InvalidArgument("link space must contain the trivial irrep".into()));
        }
        self.gauge = Some(link);
        Ok(self)
    }

    pub fn with_bond_weighting(mut self, weighting: BondWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn modes(&self) -> Result<ModeSet> {
        let mut modes = ModeSet::new();
        for s in 0..self.geometry.site_count() {
            match self.group {
                GroupId::U1 => modes.push_u1_site(s)?,
                _ => modes.push_su2_site(s, &self.leg_spins)?,
            }
        }
        Ok(modes)
    }

    fn matter_label(&self, site: usize) -> IrrepLabel {
        match self.group {
            GroupId::U1 => IrrepLabel::Charge(self.geometry.staggering(site)),
            _ => IrrepLabel::Spin(Spin::HALF),
        }
    }

    pub fn layout(&self) -> Result<Layout> {
        let sites = (0..self.geometry.site_count()).map(|s| SiteRep::Fermion { group: self.group, label: self.matter_label(s) }).collect();
        let links = match &self.gauge {
            Some(space) => vec![space.clone(); self.geometry.links().len()],
            None => Vec::new(),
        };
        Layout::new(self.geometry, sites, links)
    }

    /// Leg modes that carry flux: both U(1) modes, or the spin-½ doublet.
    fn leg_modes(&self, modes: &ModeSet, site: usize, role: ModeRole) -> Vec<usize> {
        match self.group {
            GroupId::U1 => modes.block(site, role),
            _ => modes.irrep_block(site, role, IrrepLabel::Spin(Spin::HALF)),
        }
    }

    fn substitutions(&self, modes: &ModeSet, site: usize) -> Result<Vec<Substitution>> {
        let Some(space) = &self.gauge else {
            return Ok(Vec::new());
        };
        let mut subs = Vec::new();
        for (orientation, role) in [(Orientation::Horizontal, ModeRole::Right), (Orientation::Vertical, ModeRole::Up)] {
            let Some(link) = self.geometry.outgoing(site, orientation) else {
                continue;
            };
            let block = self.leg_modes(modes, site, role);
            match self.group {
                GroupId::U1 => {
                    for (k, &mode) in block.iter().enumerate() {
                        let charge = if k == 0 { -1 } else { 1 };
                        let u = space.link_operator(IrrepLabel::Charge(charge))?;
                        subs.push(Substitution { mode, options: vec![(mode, BosonFactor { link, matrix: u.block(0, 0).clone() })] });
                    }
                }
                _ => {
                    let u = space.link_operator(IrrepLabel::Spin(Spin::HALF))?;
                    for (m, &mode) in block.iter().enumerate() {
                        let options = block.iter().enumerate().map(|(n, &target)| (target, BosonFactor { link, matrix: u.block(m, n).clone() })).collect();
                        subs.push(Substitution { mode, options });
                    }
                }
            }
        }
        Ok(subs)
    }

    fn fiducial(&self, modes: &ModeSet, site: usize) -> Result<FockOperator> {
        Ok(match &self.vertices[site] {
            FermionVertex::U1(params) => fiducial_u1(modes, site, self.geometry.staggering(site), params)?.operator,
            FermionVertex::Su2 { tensor, tau } => fiducial_su2(modes, site, tensor, tau)?.operator,
        })
    }

    /// `⟨Ω_v| Π_bonds H† Π_x 𝒜(x) |Ω⟩`, evaluated site by site: each bond is
    /// closed as soon as both of its ends are placed, and legs without a bond
    /// are projected onto the virtual vacuum.
    pub fn contract(&self) -> Result<LatticeState> {
        let layout = self.layout()?;
        guard(layout.dim())?;
        let modes = self.modes()?;
        let links = self.geometry.links();
        let register = LinkRegister::new(layout.link_spaces().iter().map(LinkSpace::dim).collect())?;
        let vacuum_links = layout.link_spaces().iter().enumerate().fold(0u64, |acc, (k, space)| register.with_digit(acc, k, space.vacuum_index().unwrap_or(0)));
        let mut state: GaugedState = [((0u64, vacuum_links), ONE)].into_iter().collect();
        let mask_of = |list: &[usize]| list.iter().fold(0u64, |m, &k| m | (1 << k));

        for site in 0..self.geometry.site_count() {
            let op = gauge_fiducial(&self.fiducial(&modes, site)?, &self.substitutions(&modes, site)?);
            state = op.apply(&register, &state);
            let mut dangling = 0u64;
            for (orientation, role, outgoing) in [
                (Orientation::Horizontal, ModeRole::Left, false),
                (Orientation::Horizontal, ModeRole::Right, true),
                (Orientation::Vertical, ModeRole::Up, true),
                (Orientation::Vertical, ModeRole::Down, false),
            ] {
                let bonded = if outgoing { self.geometry.outgoing(site, orientation) } else { self.geometry.incoming(site, orientation) };
                if bonded.is_none() {
                    dangling |= mask_of(&modes.block(site, role));
                }
            }
            state.retain(|&(mask, _), _| mask & dangling == 0);

            for link in links.iter().filter(|l| l.from.max(l.to) == site) {
                let (out_role, in_role) = match link.orientation {
                    Orientation::Horizontal => (ModeRole::Right, ModeRole::Left),
                    Orientation::Vertical => (ModeRole::Up, ModeRole::Down),
                };
                let outgoing = self.leg_modes(&modes, link.from, out_role);
                let incoming = self.leg_modes(&modes, link.to, in_role);
                let closing = bond_operator(link.orientation, &outgoing, &incoming, self.weighting)?.adjoint();
                state = GaugedOperator::from_fock(&closing).apply(&register, &state);
                let bond = mask_of(&modes.block(link.from, out_role)) | mask_of(&modes.block(link.to, in_role));
                state.retain(|&(mask, _), _| mask & bond == 0);
            }
        }

        let dims = layout.dims();
        let sites = self.geometry.site_count();
        let mut amplitudes = vec![ZERO; dims.iter().product()];
        for ((mask, packed), v) in state {
            let mut flat = 0usize;
            for site in 0..sites {
                let matter = modes.block(site, ModeRole::Physical);
                let local = matter.iter().enumerate().fold(0usize, |acc, (bit, &k)| acc | ((((mask >> k) & 1) as usize) << bit));
                flat = flat * dims[site] + local;
            }
            for k in 0..register.dims().len() {
                flat = flat * dims[sites + k] + register.digit(packed, k);
            }
            amplitudes[flat] += v;
        }
        let state = LatticeState::new(dims, amplitudes)?;
        if state.norm() == 0.0 {
            return Err(Error::EmptyState);
        }
        Ok(state)
    }
}

/// How the link operator enters the hopping term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoppingWiring {
    /// `ψ†_m(x) U_{mn} ψ_n(y)`
    Standard,
    /// `ψ†_m(x) U_{nm} ψ_n(y)`; a checker control.
    Transposed,
}

/// Largest Frobenius norm of `[Θ_g(z), T + T†]` for `z = x, y` on a two-site
/// fragment `x → y` with one link, where `T = Σ ψ†_m(x) U_{mn} ψ_n(y)`.
/// U(1) uses charge `n` on both sites with electric fields `{−1, 0, 1}`;
/// SU(2) uses spin-½ matter with link irreps `{0, ½}`.
pub fn hopping_residual(group: GroupId, g: &GroupElement, wiring: HoppingWiring) -> Result<f64> {
    let (matter, link_labels) = match group {
        GroupId::U1 => (IrrepLabel::Charge(1), vec![IrrepLabel::Charge(-1), IrrepLabel::Charge(0), IrrepLabel::Charge(1)]),
        GroupId::SU2 => (IrrepLabel::Spin(Spin::HALF), vec![IrrepLabel::Spin(Spin::ZERO), IrrepLabel::Spin(Spin::HALF)]),
        _ => return Err(Error::LieGroupOnly),
    };
    let k = matter.dim();
    let link = LinkSpace::new(group, &link_labels)?;
    let mut u = link.link_operator(matter)?;
    if wiring == HoppingWiring::Transposed {
        u = u.color_transposed();
    }
    let fock = FockSpace::new(2 * k)?;
    let mut hopping = CMatrix::zeros(fock.dim() * link.dim(), fock.dim() * link.dim());
    for m in 0..k {
        for n in 0..k {
            let pair = FockOperator::bilinear(&[m], &CMatrix::identity(1), &[k + n]).matrix(2 * k)?.to_dense();
            hopping = &hopping + &pair.kron(u.block(m, n));
        }
    }
    let hermitian = &hopping + &hopping.adjoint();
    let d = group.wigner_d(matter, g);
    let embed = |offset: usize| CMatrix::from_fn(2 * k, 2 * k, |r, c| match (r.checked_sub(offset), c.checked_sub(offset)) {
        (Some(a), Some(b)) if a < k && b < k => d[(a, b)],
        _ if r == c && (r < offset || r >= offset + k) => ONE,
        _ => ZERO,
    });
    let at_x = fock.lift(&embed(0)).kron(&link.theta(Side::Left, g).adjoint());
    let at_y = fock.lift(&embed(k)).kron(&link.theta(Side::Right, g));
    Ok([at_x, at_y].iter().map(|theta| theta.commutator(&hermitian).frobenius_norm()).fold(0.0, f64::max))
}
