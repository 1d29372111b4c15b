//! Fermionic Fock spaces and the fiducial operators of fermionic
//! gauge-invariant PEPS.
//!
//! Modes are numbered globally. A basis state is a bitmask `n` and stands for
//! `(c†_0)^{n_0} (c†_1)^{n_1} ⋯ |Ω⟩`, so `c†_k` picks up the sign
//! `(−1)^{Σ_{i<k} n_i}` (Jordan–Wigner). Operator terms are products written
//! left to right; the rightmost factor acts first.
//!
//! Within a virtual leg or physical doublet, index `k` follows the ascending
//! magnetic order used everywhere else: for SU(2) `k = m + j`; for the U(1)
//! legs `k = 0` is the `−` mode and `k = 1` the `+` mode.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{GroupId, IrrepLabel, Spin};
use crate::linalg::{CMatrix, SparseMatrix, C64, ONE, ZERO};
use crate::peps::{random_complex, Orientation, VertexTensor, AXIS_PHYSICAL};
use crate::su2;

/// Largest number of modes a bitmask can hold.
pub const MAX_MODES: usize = 64;
/// Largest number of modes for an explicit matrix realization.
pub const MAX_MATRIX_MODES: usize = 16;

/// Amplitudes below this magnitude are dropped from sparse states.
const STATE_EPSILON: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    pub fn mode(self) -> usize {
        match self {
            Ladder::Create(k) | Ladder::Annihilate(k) => k,
        }
    }

    pub fn dagger(self) -> Ladder {
        match self {
            Ladder::Create(k) => Ladder::Annihilate(k),
            Ladder::Annihilate(k) => Ladder::Create(k),
        }
    }

    /// Action on a basis state: the new mask and its sign, or `None` when
    /// the result vanishes.
    pub fn act(self, mask: u64) -> Option<(u64, f64)> {
        let k = self.mode();
        let bit = 1u64 << k;
        let sign = if (mask & (bit - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        match self {
            Ladder::Create(_) if mask & bit == 0 => Some((mask | bit, sign)),
            Ladder::Annihilate(_) if mask & bit != 0 => Some((mask & !bit, sign)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockTerm {
    pub coeff: C64,
    pub ops: Vec<Ladder>,
}

impl FockTerm {
    pub fn new(coeff: C64, ops: Vec<Ladder>) -> Self {
        Self { coeff, ops }
    }

    /// Image of a basis state, without the coefficient.
    pub fn act(&self, mask: u64) -> Option<(u64, f64)> {
        self.ops.iter().rev().try_fold((mask, 1.0), |(m, s), op| op.act(m).map(|(m2, s2)| (m2, s * s2)))
    }
}

/// Sparse state: basis mask to amplitude.
pub type FockState = BTreeMap<u64, C64>;

pub fn vacuum() -> FockState {
    [(0, ONE)].into_iter().collect()
}

pub fn state_norm(state: &FockState) -> f64 {
    Float::sqrt(state.values().map(|z| z.norm_sqr()).sum::<f64>())
}

pub fn state_distance(a: &FockState, b: &FockState) -> f64 {
    let mut sum = 0.0;
    for (k, v) in a {
        sum += (v - b.get(k).copied().unwrap_or(ZERO)).norm_sqr();
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            sum += v.norm_sqr();
        }
    }
    Float::sqrt(sum)
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, C64>, key: K, value: C64) {
    *map.entry(key).or_insert(ZERO) += value;
}

fn prune<K: Ord>(map: &mut BTreeMap<K, C64>) {
    map.retain(|_, v| v.norm() > STATE_EPSILON);
}

/// A sum of products of ladder operators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockOperator {
    terms: Vec<FockTerm>,
}

impl FockOperator {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        Self { terms: vec![FockTerm::new(c, Vec::new())] }
    }

    pub fn ladder(op: Ladder) -> Self {
        Self { terms: vec![FockTerm::new(ONE, vec![op])] }
    }

    pub fn from_terms(terms: Vec<FockTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[FockTerm] {
        &self.terms
    }

    pub fn push(&mut self, term: FockTerm) {
        self.terms.push(term);
    }

    pub fn add(&self, other: &FockOperator) -> FockOperator {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, s: C64) -> FockOperator {
        Self { terms: self.terms.iter().map(|t| FockTerm::new(t.coeff * s, t.ops.clone())).collect() }
    }

    /// The product `self · other`.
    pub fn mul(&self, other: &FockOperator) -> FockOperator {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                terms.push(FockTerm::new(a.coeff * b.coeff, ops));
            }
        }
        Self { terms }
    }

    pub fn adjoint(&self) -> FockOperator {
        Self { terms: self.terms.iter().map(|t| FockTerm::new(t.coeff.conj(), t.ops.iter().rev().map(|op| op.dagger()).collect())).collect() }
    }

    /// Whether every term has an even number of ladder operators.
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.ops.len() % 2 == 0)
    }

    pub fn mode_count(&self) -> usize {
        self.terms.iter().flat_map(|t| t.ops.iter().map(|op| op.mode() + 1)).max().unwrap_or(0)
    }

    pub fn apply(&self, state: &FockState) -> FockState {
        let mut out = FockState::new();
        for (&mask, &amp) in state {
            for term in &self.terms {
                if let Some((image, sign)) = term.act(mask) {
                    accumulate(&mut out, image, term.coeff * amp * sign);
                }
            }
        }
        prune(&mut out);
        out
    }

    /// Matrix on the full Fock space of `modes` modes; basis index = mask.
    pub fn matrix(&self, modes: usize) -> Result<SparseMatrix> {
        if modes > MAX_MATRIX_MODES {
            return Err(Error::TooLarge { dim: 1u128 << modes, limit: 1u128 << MAX_MATRIX_MODES });
        }
        if self.mode_count() > modes {
            return Err(Error::InvalidArgument(format!("operator acts on mode {} outside a {modes}-mode space", self.mode_count() - 1)));
        }
        let dim = 1usize << modes;
        let mut triplets = Vec::new();
        for mask in 0..dim as u64 {
            for term in &self.terms {
                if let Some((image, sign)) = term.act(mask) {
                    triplets.push((image as usize, mask as usize, term.coeff * sign));
                }
            }
        }
        Ok(SparseMatrix::from_triplets(dim, dim, triplets))
    }

    /// `Σ_{ij} c†_{rows[i]} M_{ij} c_{cols[j]}`.
    pub fn bilinear(rows: &[usize], matrix: &CMatrix, cols: &[usize]) -> FockOperator {
        let mut terms = Vec::new();
        for (i, &a) in rows.iter().enumerate() {
            for (j, &b) in cols.iter().enumerate() {
                let v = matrix[(i, j)];
                if v != ZERO {
                    terms.push(FockTerm::new(v, vec![Ladder::Create(a), Ladder::Annihilate(b)]));
                }
            }
        }
        Self { terms }
    }

    pub fn number(mode: usize) -> FockOperator {
        Self { terms: vec![FockTerm::new(ONE, vec![Ladder::Create(mode), Ladder::Annihilate(mode)])] }
    }
}

/// The full Fock space of a few modes, with explicit matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
}

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self> {
        if modes > MAX_MATRIX_MODES {
            return Err(Error::TooLarge { dim: 1u128 << modes, limit: 1u128 << MAX_MATRIX_MODES });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    pub fn creation(&self, k: usize) -> SparseMatrix {
        FockOperator::ladder(Ladder::Create(k)).matrix(self.modes).expect("mode within the space")
    }

    pub fn annihilation(&self, k: usize) -> SparseMatrix {
        FockOperator::ladder(Ladder::Annihilate(k)).matrix(self.modes).expect("mode within the space")
    }

    /// Largest deviation from `{c_i, c†_j} = δ_ij`, `{c_i, c_j} = 0`.
    pub fn anticommutation_residual(&self) -> f64 {
        let up: Vec<SparseMatrix> = (0..self.modes).map(|k| self.creation(k)).collect();
        let down: Vec<SparseMatrix> = (0..self.modes).map(|k| self.annihilation(k)).collect();
        let eye = SparseMatrix::identity(self.dim());
        let mut worst: f64 = 0.0;
        for i in 0..self.modes {
            for j in 0..self.modes {
                let mixed = down[i].anticommutator(&up[j]);
                let mixed = if i == j { mixed.sub(&eye) } else { mixed };
                worst = worst.max(mixed.frobenius_norm());
                worst = worst.max(down[i].anticommutator(&down[j]).frobenius_norm());
            }
        }
        worst
    }

    /// Basis masks with the given fermion-number parity.
    pub fn sector(&self, even: bool) -> Vec<u64> {
        (0..self.dim() as u64).filter(|m| (m.count_ones() % 2 == 0) == even).collect()
    }

    /// The second-quantized lift of a single-particle unitary `u` acting on
    /// all modes: `c†_i ↦ Σ_k u_{ki} c†_k`.
    pub fn lift(&self, u: &CMatrix) -> CMatrix {
        assert_eq!(u.rows(), self.modes);
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for mask in 0..dim as u64 {
            let mut state = vacuum();
            for i in (0..self.modes).rev().filter(|&i| mask & (1 << i) != 0) {
                let rotated = FockOperator::from_terms((0..self.modes).filter(|&k| u[(k, i)] != ZERO).map(|k| FockTerm::new(u[(k, i)], vec![Ladder::Create(k)])).collect());
                state = rotated.apply(&state);
            }
            for (image, v) in state {
                out[(image as usize, mask as usize)] = v;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeRole {
    Physical,
    Left,
    Right,
    Up,
    Down,
}

impl ModeRole {
    pub const LEGS: [ModeRole; 4] = [ModeRole::Left, ModeRole::Right, ModeRole::Up, ModeRole::Down];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub site: usize,
    pub role: ModeRole,
    pub irrep: IrrepLabel,
    pub m: usize,
}

/// An ordered list of modes. Sites are laid out one after another; within a
/// site the physical modes come first, then the legs `l, r, u, d`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeSet {
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new() -> Self {
        Self { modes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    fn push_block(&mut self, site: usize, role: ModeRole, irrep: IrrepLabel, dim: usize) -> Result<()> {
        if self.modes.len() + dim > MAX_MODES {
            return Err(Error::TooLarge { dim: (self.modes.len() + dim) as u128, limit: MAX_MODES as u128 });
        }
        self.modes.extend((0..dim).map(|m| Mode { site, role, irrep, m }));
        Ok(())
    }

    /// One matter mode and `∓` modes on each leg.
    pub fn push_u1_site(&mut self, site: usize) -> Result<()> {
        self.push_block(site, ModeRole::Physical, IrrepLabel::Charge(1), 1)?;
        for role in ModeRole::LEGS {
            self.push_block(site, role, IrrepLabel::Charge(-1), 1)?;
            self.push_block(site, role, IrrepLabel::Charge(1), 1)?;
        }
        Ok(())
    }

    /// A spin-½ matter doublet and `2j+1` modes for every nontrivial spin
    /// kept on a leg.
    pub fn push_su2_site(&mut self, site: usize, leg_spins: &[Spin]) -> Result<()> {
        self.push_block(site, ModeRole::Physical, IrrepLabel::Spin(Spin::HALF), 2)?;
        let mut spins: Vec<Spin> = leg_spins.iter().copied().filter(|s| *s != Spin::ZERO).collect();
        spins.sort();
        spins.dedup();
        for role in ModeRole::LEGS {
            for &s in &spins {
                self.push_block(site, role, IrrepLabel::Spin(s), s.dim())?;
            }
        }
        Ok(())
    }

    pub fn find(&self, site: usize, role: ModeRole, irrep: IrrepLabel, m: usize) -> Option<usize> {
        self.modes.iter().position(|x| x.site == site && x.role == role && x.irrep == irrep && x.m == m)
    }

    /// All modes of one site and role, in order.
    pub fn block(&self, site: usize, role: ModeRole) -> Vec<usize> {
        (0..self.modes.len()).filter(|&k| self.modes[k].site == site && self.modes[k].role == role).collect()
    }

    /// Modes of one irrep on a site and role, ordered by `m`.
    pub fn irrep_block(&self, site: usize, role: ModeRole, irrep: IrrepLabel) -> Vec<usize> {
        (0..self.modes.len()).filter(|&k| self.modes[k].site == site && self.modes[k].role == role && self.modes[k].irrep == irrep).collect()
    }

    pub fn site_range(&self, site: usize) -> Range<usize> {
        let start = self.modes.iter().position(|x| x.site == site).unwrap_or(self.modes.len());
        let end = self.modes.iter().rposition(|x| x.site == site).map_or(start, |k| k + 1);
        start..end
    }
}

/// The operator `𝓐(x)` creating a fiducial state.
#[derive(Clone, Debug, PartialEq)]
pub struct FiducialOperator {
    pub site: usize,
    pub operator: FockOperator,
}

impl FiducialOperator {
    pub fn is_even(&self) -> bool {
        self.operator.is_even()
    }
}

/// Occupations `n_p` and `(n_−, n_+)` of the four legs `l, r, u, d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct U1Occupation {
    pub matter: bool,
    pub legs: [[bool; 2]; 4],
}

impl U1Occupation {
    /// All `2⁹` occupation patterns.
    pub fn all() -> impl Iterator<Item = U1Occupation> {
        (0u16..512).map(|bits| U1Occupation {
            matter: bits & 1 != 0,
            legs: core::array::from_fn(|a| [bits & (1 << (1 + 2 * a)) != 0, bits & (1 << (2 + 2 * a)) != 0]),
        })
    }

    /// Virtual electric field `n_+ − n_−` of a leg.
    pub fn flux(&self, leg: usize) -> i64 {
        self.legs[leg][1] as i64 - self.legs[leg][0] as i64
    }

    /// The Gauss-law delta `Q_p + E_l + E_d = E_r + E_u` with `Q_p = ε n_p`.
    pub fn admissible(&self, staggering: i64) -> bool {
        staggering * self.matter as i64 + self.flux(0) + self.flux(3) == self.flux(1) + self.flux(2)
    }

    pub fn particle_count(&self) -> usize {
        self.matter as usize + self.legs.iter().flatten().filter(|&&b| b).count()
    }
}

pub type U1Params = BTreeMap<U1Occupation, C64>;

pub fn random_u1_params<R: Rng + ?Sized>(staggering: i64, rng: &mut R) -> U1Params {
    U1Occupation::all().filter(|o| o.admissible(staggering)).map(|o| (o, random_complex(rng))).collect()
}

/// `𝓐 = Σ α_{n} δ_{Q_p+E_l+E_d, E_r+E_u} ψ†^{n_p} Π_a a†_+^{n_+} a†_−^{n_−}`.
pub fn fiducial_u1(modes: &ModeSet, site: usize, staggering: i64, params: &U1Params) -> Result<FiducialOperator> {
    if staggering.abs() != 1 {
        return Err(Error::InvalidArgument(format!("staggering sign must be ±1, got {staggering}")));
    }
    let missing = || Error::InvalidArgument(format!("site {site} has no U(1) modes"));
    let matter = modes.find(site, ModeRole::Physical, IrrepLabel::Charge(1), 0).ok_or_else(missing)?;
    let mut legs = [[0usize; 2]; 4];
    for (a, role) in ModeRole::LEGS.into_iter().enumerate() {
        legs[a][0] = modes.find(site, role, IrrepLabel::Charge(-1), 0).ok_or_else(missing)?;
        legs[a][1] = modes.find(site, role, IrrepLabel::Charge(1), 0).ok_or_else(missing)?;
    }
    let mut operator = FockOperator::zero();
    for (occ, &alpha) in params {
        if alpha == ZERO || !occ.admissible(staggering) {
            continue;
        }
        let mut ops = Vec::new();
        if occ.matter {
            ops.push(Ladder::Create(matter));
        }
        for a in 0..4 {
            for k in [1, 0] {
                if occ.legs[a][k] {
                    ops.push(Ladder::Create(legs[a][k]));
                }
            }
        }
        operator.push(FockTerm::new(alpha, ops));
    }
    Ok(FiducialOperator { site, operator })
}

/// Redundancy weights `τ_a` for `a = p, l, r, u, d`.
pub type Tau = [C64; 5];

/// `(−1)^{j−k}`, the sign of `b^{j†}_m` with `m = k − j` for integer `j`.
fn hole_sign(spin: Spin, k: usize) -> f64 {
    if (k as i64 - spin.twice() as i64 / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `b^{j†}_m = (−1)^m a^j_{−m}` on a block of `2j+1` modes.
pub fn hole_creation(block: &[usize], spin: Spin, k: usize) -> FockTerm {
    FockTerm::new(C64::new(hole_sign(spin, k), 0.0), vec![Ladder::Annihilate(block[block.len() - 1 - k])])
}

/// Alternatives `(coefficient, operators)` realizing one basis state of a
/// leg or of the matter.
fn leg_factor(modes: &ModeSet, site: usize, role: ModeRole, label: IrrepLabel, k: usize, tau: C64) -> Result<Vec<(C64, Vec<Ladder>)>> {
    let spin = label.spin().ok_or(Error::Su2Only)?;
    match spin.twice() {
        0 => {
            let mut options = vec![(ONE, Vec::new())];
            if tau != ZERO {
                let half = modes.irrep_block(site, role, IrrepLabel::Spin(Spin::HALF));
                if half.len() != 2 {
                    return Err(Error::InvalidArgument(format!("τ on {role:?} needs spin-1/2 modes")));
                }
                options.push((tau, vec![Ladder::Create(half[1]), Ladder::Create(half[0])]));
            }
            Ok(options)
        }
        1 => {
            let block = modes.irrep_block(site, role, label);
            Ok(vec![(ONE, vec![Ladder::Create(*block.get(k).ok_or_else(|| Error::InvalidArgument(format!("no spin-1/2 modes on {role:?}")))?)])])
        }
        2 if role != ModeRole::Physical => {
            let block = modes.irrep_block(site, role, label);
            if block.len() != 3 {
                return Err(Error::InvalidArgument(format!("no spin-1 modes on {role:?}")));
            }
            let hole = hole_creation(&block, spin, k);
            let mut ops = hole.ops;
            ops.extend(block.iter().map(|&b| Ladder::Create(b)));
            Ok(vec![(hole.coeff, ops)])
        }
        _ => Err(Error::InvalidArgument(format!("spin {spin} is not realized by the fermionic construction on {role:?}"))),
    }
}

/// `𝓐 = Σ A^{p}_{l r u d} Π_{a=p,l,r,u,d} [factor of a]`, where the factor is
/// `1 + τ_a a†_+ a†_−` for spin 0, `a†_m` for spin ½ and `b†_m Π_{m'} a†_{m'}`
/// for spin 1.
pub fn fiducial_su2(modes: &ModeSet, site: usize, tensor: &VertexTensor, tau: &Tau) -> Result<FiducialOperator> {
    if tensor.group() != GroupId::SU2 {
        return Err(Error::Su2Only);
    }
    let roles = [ModeRole::Physical, ModeRole::Left, ModeRole::Right, ModeRole::Up, ModeRole::Down];
    let mut operator = FockOperator::zero();
    for (index, &amp) in tensor.amplitudes().iter() {
        let mut options: Vec<(C64, Vec<Ladder>)> = vec![(amp, Vec::new())];
        for (axis, &role) in roles.iter().enumerate() {
            let (label, k) = if axis == AXIS_PHYSICAL {
                tensor.physical().basis()[index[axis]]
            } else {
                let (label, k, i) = tensor.legs()[axis - 1].basis()[index[axis]];
                if i != 0 {
                    return Err(Error::InvalidArgument("fermionic legs carry no degeneracy".into()));
                }
                (label, k)
            };
            let factor = leg_factor(modes, site, role, label, k, tau[axis])?;
            let mut next = Vec::with_capacity(options.len() * factor.len());
            for (c, ops) in &options {
                for (fc, fops) in &factor {
                    let mut joined = ops.clone();
                    joined.extend_from_slice(fops);
                    next.push((c * fc, joined));
                }
            }
            options = next;
        }
        for (c, ops) in options {
            operator.push(FockTerm::new(c, ops));
        }
    }
    Ok(FiducialOperator { site, operator })
}

/// How the doubly occupied component of a bond operator is weighted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BondWeighting {
    /// `Π_m (1 + l†_m r†_m)` as written.
    Unweighted,
    /// The fully occupied component multiplied by the given factor.
    Doubly(C64),
}

/// `H = Π_m (1 + l†_m(x+ê₁) r†_m(x))` or `V = Π_m (1 + u†_m(x) d†_m(x+ê₂))`.
pub fn bond_operator(orientation: Orientation, outgoing: &[usize], incoming: &[usize], weighting: BondWeighting) -> Result<FockOperator> {
    if outgoing.len() != incoming.len() {
        return Err(Error::LegMismatch(format!("{} outgoing modes against {} incoming", outgoing.len(), incoming.len())));
    }
    let n = outgoing.len();
    let mut terms = Vec::new();
    for subset in 0u32..(1 << n) {
        let mut ops = Vec::new();
        for m in 0..n {
            if subset & (1 << m) != 0 {
                let pair = match orientation {
                    Orientation::Horizontal => [Ladder::Create(incoming[m]), Ladder::Create(outgoing[m])],
                    Orientation::Vertical => [Ladder::Create(outgoing[m]), Ladder::Create(incoming[m])],
                };
                ops.extend(pair);
            }
        }
        let coeff = match weighting {
            BondWeighting::Doubly(w) if n > 1 && subset == (1 << n) - 1 => w,
            _ => ONE,
        };
        terms.push(FockTerm::new(coeff, ops));
    }
    Ok(FockOperator::from_terms(terms))
}

/// Generators `Σ_{mn} a†_m (T_a)_{mn} a_n` (right) or with `T_aᵀ` (left)
/// acting on a block of modes carrying one irrep.
pub fn mode_generators(group: GroupId, label: IrrepLabel, block: &[usize], transpose: bool) -> Result<Vec<FockOperator>> {
    Ok(group
        .lie_generators(label)?
        .iter()
        .map(|t| {
            let t = if transpose { t.transpose() } else { t.clone() };
            FockOperator::bilinear(block, &t, block)
        })
        .collect())
}

/// `ε` with `ε_{+−} = −ε_{−+} = 1` in ascending order.
pub fn epsilon() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, -ONE], &[ONE, ZERO]])
}

/// The unitary `W` on a spin-½ doublet with `W ψ†_m W† = ε_{mn} ψ_n`, built
/// from `W|Ω⟩ = ψ†_− ψ†_+ |Ω⟩`.
pub fn particle_hole_unitary() -> CMatrix {
    let space = FockSpace::new(2).expect("two modes");
    let eps = epsilon();
    let images: Vec<CMatrix> = (0..2).map(|m| (0..2).fold(CMatrix::zeros(4, 4), |acc, n| &acc + &space.annihilation(n).to_dense().scale(eps[(m, n)]))).collect();
    let full = {
        let mut v = CMatrix::zeros(4, 1);
        v[(3, 0)] = ONE;
        v
    };
    let mut w = CMatrix::zeros(4, 4);
    for mask in 0..4usize {
        let mut column = full.clone();
        for m in (0..2).rev().filter(|&m| mask & (1 << m) != 0) {
            column = images[m].matmul(&column);
        }
        for r in 0..4 {
            w[(r, mask)] = column[(r, 0)];
        }
    }
    w
}

/// Residuals of `W ψ†_m W† = ε_{mn} ψ_n` and `W Q_a W† = Q_a`, plus the
/// unitarity residual of `W`.
pub fn particle_hole_residuals() -> [f64; 3] {
    let space = FockSpace::new(2).expect("two modes");
    let w = particle_hole_unitary();
    let wd = w.adjoint();
    let eps = epsilon();
    let mut map: f64 = 0.0;
    for m in 0..2 {
        let lhs = w.matmul(&space.creation(m).to_dense()).matmul(&wd);
        let rhs = (0..2).fold(CMatrix::zeros(4, 4), |acc, n| &acc + &space.annihilation(n).to_dense().scale(eps[(m, n)]));
        map = map.max((&lhs - &rhs).frobenius_norm());
    }
    let mut charge: f64 = 0.0;
    for t in su2::spin_matrices(1) {
        let q = FockOperator::bilinear(&[0, 1], &t, &[0, 1]).matrix(2).expect("two modes").to_dense();
        charge = charge.max((&w.matmul(&q).matmul(&wd) - &q).frobenius_norm());
    }
    [map, charge, w.unitarity_residual()]
}

/// Largest deviation of `e^{iq·R} b†_m e^{−iq·R} = Σ_n b†_n D_{nm}` and of
/// the left analogue with `Dᵀ`, on a block of `2j+1` modes.
pub fn hole_covariance_residual(spin: Spin, q: [f64; 3]) -> Result<f64> {
    if spin.is_half_odd() {
        return Err(Error::InvalidArgument("holes are defined for integer spins".into()));
    }
    let dim = spin.dim();
    let space = FockSpace::new(dim)?;
    let block: Vec<usize> = (0..dim).collect();
    let label = IrrepLabel::Spin(spin);
    let d = GroupId::SU2.wigner_d(label, &GroupId::SU2.element_from_parameters(&q)?);
    let holes: Vec<CMatrix> = (0..dim).map(|k| FockOperator::from_terms(vec![hole_creation(&block, spin, k)]).matrix(dim).map(|m| m.to_dense())).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (transpose, rep) in [(false, d.clone()), (true, d.transpose())] {
        let gens = mode_generators(GroupId::SU2, label, &block, transpose)?;
        let mut exponent = CMatrix::zeros(space.dim(), space.dim());
        for (qa, g) in q.iter().zip(&gens) {
            exponent = &exponent + &g.matrix(dim)?.to_dense().scale(C64::new(0.0, *qa));
        }
        let u = exponent.expm();
        let ud = u.adjoint();
        for m in 0..dim {
            let lhs = u.matmul(&holes[m]).matmul(&ud);
            let rhs = (0..dim).fold(CMatrix::zeros(space.dim(), space.dim()), |acc, n| &acc + &holes[n].scale(rep[(n, m)]));
            worst = worst.max((&lhs - &rhs).frobenius_norm());
        }
    }
    Ok(worst)
}

/// A bosonic operator acting on one link register.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonFactor {
    pub link: usize,
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugedTerm {
    pub coeff: C64,
    pub fermions: Vec<Ladder>,
    pub bosons: Vec<BosonFactor>,
}

/// An operator on the joint fermion ⊗ link-boson space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaugedOperator {
    pub terms: Vec<GaugedTerm>,
}

/// Mixed-radix packing of link basis indices into one integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkRegister {
    dims: Vec<usize>,
    strides: Vec<u64>,
}

impl LinkRegister {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let mut strides = vec![1u64; dims.len()];
        let mut total: u128 = 1;
        for (k, &d) in dims.iter().enumerate().rev() {
            strides[k] = total as u64;
            total *= d as u128;
            if total > u64::MAX as u128 {
                return Err(Error::TooLarge { dim: total, limit: u64::MAX as u128 });
            }
        }
        Ok(Self { dims, strides })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn digit(&self, packed: u64, link: usize) -> usize {
        ((packed / self.strides[link]) % self.dims[link] as u64) as usize
    }

    pub fn with_digit(&self, packed: u64, link: usize, value: usize) -> u64 {
        let old = self.digit(packed, link) as u64;
        packed - old * self.strides[link] + value as u64 * self.strides[link]
    }
}

/// Sparse joint state keyed by (fermion mask, packed link indices). The
/// all-zero link index is taken as the bosonic vacuum only when the caller
/// arranges the link bases so.
pub type GaugedState = BTreeMap<(u64, u64), C64>;

impl GaugedOperator {
    pub fn from_fock(op: &FockOperator) -> Self {
        Self { terms: op.terms().iter().map(|t| GaugedTerm { coeff: t.coeff, fermions: t.ops.clone(), bosons: Vec::new() }).collect() }
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.fermions.len() % 2 == 0)
    }

    pub fn apply(&self, register: &LinkRegister, state: &GaugedState) -> GaugedState {
        let mut out = GaugedState::new();
        for (&(mask, links), &amp) in state {
            for term in &self.terms {
                let Some((image, sign)) = FockTerm::new(ONE, term.fermions.clone()).act(mask) else {
                    continue;
                };
                let mut branches = vec![(links, term.coeff * amp * sign)];
                for factor in term.bosons.iter().rev() {
                    let mut next = Vec::new();
                    for (packed, value) in branches {
                        let d = register.digit(packed, factor.link);
                        for r in 0..factor.matrix.rows() {
                            let v = factor.matrix[(r, d)];
                            if v != ZERO {
                                next.push((register.with_digit(packed, factor.link, r), value * v));
                            }
                        }
                    }
                    branches = next;
                }
                for (packed, value) in branches {
                    accumulate(&mut out, (image, packed), value);
                }
            }
        }
        prune(&mut out);
        out
    }
}

/// Replacement of `c†_mode` by `Σ c†_{new} ⊗ (boson factor)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Substitution {
    pub mode: usize,
    pub options: Vec<(usize, BosonFactor)>,
}

/// Applies the substitutions to every creation operator they name; all other
/// operators are kept.
pub fn gauge_fiducial(op: &FockOperator, substitutions: &[Substitution]) -> GaugedOperator {
    let rules: BTreeMap<usize, &Substitution> = substitutions.iter().map(|s| (s.mode, s)).collect();
    let mut terms = Vec::new();
    for term in op.terms() {
        let mut partial = vec![GaugedTerm { coeff: term.coeff, fermions: Vec::new(), bosons: Vec::new() }];
        for &ladder in &term.ops {
            match (ladder, rules.get(&ladder.mode())) {
                (Ladder::Create(_), Some(rule)) => {
                    let mut next = Vec::with_capacity(partial.len() * rule.options.len());
                    for p in &partial {
                        for (new_mode, factor) in &rule.options {
                            let mut q = p.clone();
                            q.fermions.push(Ladder::Create(*new_mode));
                            q.bosons.push(factor.clone());
                            next.push(q);
                        }
                    }
                    partial = next;
                }
                _ => partial.iter_mut().for_each(|p| p.fermions.push(ladder)),
            }
        }
        terms.extend(partial);
    }
    GaugedOperator { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peps::{random_vertex_params, FusionOrder, VirtualLeg};
    use crate::spaces::VertexSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_modes() {
        let space = FockSpace::new(2).unwrap();
        assert_eq!(space.dim(), 4);
        let n0 = space.creation(0).matmul(&space.annihilation(0)).to_dense();
        for k in 0..4 {
            let v = n0[(k, k)].re;
            assert!(v == 0.0 || v == 1.0);
        }
        assert_eq!(space.annihilation(0).anticommutator(&space.creation(1)).frobenius_norm(), 0.0);
        assert_eq!(FockSpace::new(5).unwrap().anticommutation_residual(), 0.0);
        assert_eq!(FockSpace::new(12).unwrap().sector(true).len(), 1 << 11);
    }

    #[test]
    fn u1_fiducial_is_even_and_admissible() {
        let mut modes = ModeSet::new();
        modes.push_u1_site(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for eps in [1, -1] {
            let params = random_u1_params(eps, &mut rng);
            assert!(params.keys().all(|o| o.particle_count() % 2 == 0));
            let zero = U1Occupation { matter: false, legs: [[false; 2]; 4] };
            assert!(params.contains_key(&zero));
            let a = fiducial_u1(&modes, 0, eps, &params).unwrap();
            assert!(a.is_even());
            assert_eq!(a.operator.terms().len(), params.len());
        }
        let mut one = U1Occupation { matter: true, legs: [[false; 2]; 4] };
        one.legs[1][1] = true;
        assert!(one.admissible(1));
        assert!(!one.admissible(-1));
    }

    fn su2_vertex(rng: &mut ChaCha8Rng) -> (ModeSet, VertexTensor) {
        let group = GroupId::SU2;
        let labels = [IrrepLabel::Spin(Spin::ZERO), IrrepLabel::Spin(Spin::HALF)];
        let physical = VertexSpace::new(group, &labels).unwrap();
        let leg = VirtualLeg::new(group, &labels).unwrap();
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let params = random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, rng);
        let tensor = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &params).unwrap();
        let mut modes = ModeSet::new();
        modes.push_su2_site(0, &[Spin::HALF]).unwrap();
        (modes, tensor)
    }

    fn vertex_gauss(modes: &ModeSet, state: &FockState, spins: &[Spin]) -> f64 {
        let group = GroupId::SU2;
        let mut total = vec![FockOperator::zero(); 3];
        let mut add = |ops: Vec<FockOperator>, sign: f64| {
            for (t, o) in total.iter_mut().zip(ops) {
                *t = t.add(&o.scale(C64::new(sign, 0.0)));
            }
        };
        add(mode_generators(group, IrrepLabel::Spin(Spin::HALF), &modes.block(0, ModeRole::Physical), false).unwrap(), -1.0);
        for &s in spins {
            let label = IrrepLabel::Spin(s);
            for (role, transpose, sign) in [(ModeRole::Right, true, 1.0), (ModeRole::Up, true, 1.0), (ModeRole::Left, false, -1.0), (ModeRole::Down, false, -1.0)] {
                add(mode_generators(group, label, &modes.irrep_block(0, role, label), transpose).unwrap(), sign);
            }
        }
        total.iter().map(|g| state_norm(&g.apply(state))).fold(0.0, f64::max) / state_norm(state)
    }

    #[test]
    fn su2_fiducial_obeys_vertex_gauss_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (modes, tensor) = su2_vertex(&mut rng);
        let tau = [C64::new(0.4, 0.1), C64::new(-0.3, 0.2), C64::new(0.7, 0.0), C64::new(0.0, 1.1), C64::new(0.5, -0.5)];
        let a = fiducial_su2(&modes, 0, &tensor, &tau).unwrap();
        assert!(a.is_even());
        let state = a.operator.apply(&vacuum());
        assert!(vertex_gauss(&modes, &state, &[Spin::HALF]) < 1e-13);

        // τ = 0 keeps one term per amplitude
        let plain = fiducial_su2(&modes, 0, &tensor, &[ZERO; 5]).unwrap();
        assert_eq!(plain.operator.terms().len(), tensor.amplitudes().nnz());
    }

    #[test]
    fn spin_one_legs_use_holes() {
        let group = GroupId::SU2;
        let spins = [Spin::ZERO, Spin::HALF, Spin::ONE];
        let labels: Vec<IrrepLabel> = spins.iter().map(|&s| IrrepLabel::Spin(s)).collect();
        let physical = VertexSpace::new(group, &labels[..2]).unwrap();
        let leg = VirtualLeg::new(group, &labels).unwrap();
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, &mut rng);
        let tensor = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &params).unwrap();
        let mut modes = ModeSet::new();
        modes.push_su2_site(0, &spins).unwrap();
        assert_eq!(modes.len(), 22);
        let a = fiducial_su2(&modes, 0, &tensor, &[C64::new(0.3, 0.0), ZERO, ZERO, ZERO, ZERO]).unwrap();
        assert!(a.is_even());
        let state = a.operator.apply(&vacuum());
        assert!(state_norm(&state) > 0.0);
        assert!(vertex_gauss(&modes, &state, &[Spin::HALF, Spin::ONE]) < 1e-12);
        assert!(hole_covariance_residual(Spin::ONE, [0.3, -1.1, 0.8]).unwrap() < 1e-12);
    }

    #[test]
    fn bond_operator_shape_and_invariance() {
        let h = bond_operator(Orientation::Horizontal, &[0, 1], &[2, 3], BondWeighting::Unweighted).unwrap();
        assert_eq!(h.terms().len(), 4);
        assert!(h.is_even());
        let state = h.apply(&vacuum());
        let label = IrrepLabel::Spin(Spin::HALF);
        let q = [0.2, 0.9, -0.4];
        // outgoing legs rotate with L, incoming legs with −R
        let mut exponent = CMatrix::zeros(16, 16);
        let left = mode_generators(GroupId::SU2, label, &[0, 1], true).unwrap();
        let right = mode_generators(GroupId::SU2, label, &[2, 3], false).unwrap();
        for a in 0..3 {
            let gen = &left[a].matrix(4).unwrap().to_dense() - &right[a].matrix(4).unwrap().to_dense();
            exponent = &exponent + &gen.scale(C64::new(0.0, q[a]));
        }
        let u = exponent.expm();
        let dense: Vec<C64> = (0..16).map(|k| state.get(&(k as u64)).copied().unwrap_or(ZERO)).collect();
        let moved = u.mul_vec(&dense);
        assert!(crate::linalg::distance(&moved, &dense) < 1e-13);
    }

    #[test]
    fn particle_hole() {
        let [map, charge, unitary] = particle_hole_residuals();
        assert!(map < 1e-14 && charge < 1e-14 && unitary < 1e-14);
    }

    #[test]
    fn lift_of_doublet() {
        let space = FockSpace::new(2).unwrap();
        let g = GroupId::SU2.element_from_parameters(&[0.3, 0.2, 1.0]).unwrap();
        let d = GroupId::SU2.wigner_d(IrrepLabel::Spin(Spin::HALF), &g);
        let lifted = space.lift(&d);
        assert!(lifted.unitarity_residual() < 1e-14);
        // vacuum and the pair are singlets
        assert!((lifted[(0, 0)] - ONE).norm() < 1e-14);
        assert!((lifted[(3, 3)] - ONE).norm() < 1e-14);
        let mut exponent = CMatrix::zeros(4, 4);
        for (qa, t) in [0.3, 0.2, 1.0].iter().zip(su2::spin_matrices(1)) {
            exponent = &exponent + &FockOperator::bilinear(&[0, 1], &t, &[0, 1]).matrix(2).unwrap().to_dense().scale(C64::new(0.0, *qa));
        }
        assert!((&exponent.expm() - &lifted).frobenius_norm() < 1e-13);
    }
}
