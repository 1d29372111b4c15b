//! Gauge groups and their irreducible representations.
//!
//! A [`GroupId`] is a cheap value that answers every representation-theory
//! query: irreps, Wigner matrices, fusion rules, Clebsch–Gordan slices,
//! generators and sampling. Within an irrep the basis index runs
//! `0..dim`; for SU(2) index `k` is the state with `m = k − j`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cg::CgSlice;
use crate::error::{Error, Result};
use crate::linalg::{wrap, CMatrix, C64, ZERO};
use crate::s3::{self, S3Irrep};
use crate::su2::{self, Euler, FOUR_PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupId {
    /// Cyclic group `Z_N`, `N ≥ 2`.
    Cyclic(u32),
    /// Compact U(1) with integer charges.
    U1,
    SymmetricS3,
    SU2,
}

/// A spin stored as `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spin(u32);

impl Spin {
    pub const ZERO: Spin = Spin(0);
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub const fn from_twice(twice: u32) -> Self {
        Spin(twice)
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_half_odd(self) -> bool {
        self.0 % 2 == 1
    }

    /// Doubled projection `2m` of basis index `k`.
    pub fn twice_m(self, k: usize) -> i64 {
        2 * k as i64 - self.0 as i64
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Group-specific irrep tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IrrepLabel {
    /// `Z_N` charge in `0..N` or a U(1) charge.
    Charge(i64),
    S3(S3Irrep),
    Spin(Spin),
}

impl IrrepLabel {
    pub fn spin(self) -> Option<Spin> {
        match self {
            IrrepLabel::Spin(s) => Some(s),
            _ => None,
        }
    }

    pub fn charge(self) -> Option<i64> {
        match self {
            IrrepLabel::Charge(q) => Some(q),
            _ => None,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            IrrepLabel::Charge(_) => 1,
            IrrepLabel::S3(s) => s.dim(),
            IrrepLabel::Spin(s) => s.dim(),
        }
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrepLabel::Charge(q) => write!(f, "{q}"),
            IrrepLabel::S3(s) => f.write_str(s.name()),
            IrrepLabel::Spin(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FermionParity {
    Even,
    Odd,
    Unassigned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Irrep {
    pub label: IrrepLabel,
    pub dim: usize,
    pub parity: FermionParity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupElement {
    /// Index into [`GroupId::enumerate_elements`].
    Finite(usize),
    /// U(1) angle in `[0, 2π)`.
    Angle(f64),
    Euler(Euler),
}

impl GroupId {
    pub fn cyclic(order: u32) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!("cyclic group order must be at least 2, got {order}")));
        }
        Ok(GroupId::Cyclic(order))
    }

    pub fn name(&self) -> String {
        match self {
            GroupId::Cyclic(n) => format!("Z{n}"),
            GroupId::U1 => "U1".to_string(),
            GroupId::SymmetricS3 => "S3".to_string(),
            GroupId::SU2 => "SU2".to_string(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, GroupId::Cyclic(_) | GroupId::SymmetricS3)
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            GroupId::Cyclic(n) => Some(*n as usize),
            GroupId::SymmetricS3 => Some(s3::ORDER),
            _ => None,
        }
    }

    pub fn trivial(&self) -> IrrepLabel {
        match self {
            GroupId::Cyclic(_) | GroupId::U1 => IrrepLabel::Charge(0),
            GroupId::SymmetricS3 => IrrepLabel::S3(S3Irrep::Trivial),
            GroupId::SU2 => IrrepLabel::Spin(Spin::ZERO),
        }
    }

    pub fn is_valid(&self, label: IrrepLabel) -> bool {
        match (self, label) {
            (GroupId::Cyclic(n), IrrepLabel::Charge(q)) => (0..*n as i64).contains(&q),
            (GroupId::U1, IrrepLabel::Charge(_)) => true,
            (GroupId::SymmetricS3, IrrepLabel::S3(_)) => true,
            (GroupId::SU2, IrrepLabel::Spin(_)) => true,
            _ => false,
        }
    }

    fn check(&self, label: IrrepLabel) -> Result<()> {
        if self.is_valid(label) {
            Ok(())
        } else {
            Err(Error::UnknownLabel(label.to_string()))
        }
    }

    /// Parses `"1/2"`, `"1"`, `"-1"`, `"standard"`, ... for this group.
    pub fn parse_label(&self, text: &str) -> Result<IrrepLabel> {
        let text = text.trim();
        let unknown = || Error::UnknownLabel(text.to_string());
        let label = match self {
            GroupId::Cyclic(_) | GroupId::U1 => {
                IrrepLabel::Charge(text.trim_start_matches('+').parse::<i64>().map_err(|_| unknown())?)
            }
            GroupId::SymmetricS3 => {
                let irrep = S3Irrep::ALL.into_iter().find(|s| s.name() == text).ok_or_else(unknown)?;
                IrrepLabel::S3(irrep)
            }
            GroupId::SU2 => {
                let twice = match text.split_once('/') {
                    Some((num, "2")) => num.parse::<u32>().ok().filter(|n| n % 2 == 1),
                    Some(_) => None,
                    None => text.parse::<u32>().ok().and_then(|n| n.checked_mul(2)),
                };
                IrrepLabel::Spin(Spin::from_twice(twice.ok_or_else(unknown)?))
            }
        };
        self.check(label)?;
        Ok(label)
    }

    pub fn irrep(&self, label: IrrepLabel) -> Result<Irrep> {
        self.check(label)?;
        let parity = match label {
            IrrepLabel::Spin(s) if s.is_half_odd() => FermionParity::Odd,
            IrrepLabel::Spin(_) => FermionParity::Even,
            _ => FermionParity::Unassigned,
        };
        Ok(Irrep { label, dim: label.dim(), parity })
    }

    /// Kept irreps, sorted by label. Lie groups require a truncation.
    pub fn irreps(&self, truncation: Option<&[IrrepLabel]>) -> Result<Vec<Irrep>> {
        let mut labels: Vec<IrrepLabel> = match (truncation, self) {
            (Some(t), _) => t.to_vec(),
            (None, GroupId::Cyclic(n)) => (0..*n as i64).map(IrrepLabel::Charge).collect(),
            (None, GroupId::SymmetricS3) => S3Irrep::ALL.into_iter().map(IrrepLabel::S3).collect(),
            (None, GroupId::U1 | GroupId::SU2) => return Err(Error::UntruncatedLieGroup),
        };
        labels.sort();
        labels.dedup();
        labels.into_iter().map(|l| self.irrep(l)).collect()
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupId::Cyclic(_) | GroupId::SymmetricS3 => GroupElement::Finite(0),
            GroupId::U1 => GroupElement::Angle(0.0),
            GroupId::SU2 => GroupElement::Euler(Euler::IDENTITY),
        }
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (self, a, b) {
            (GroupId::Cyclic(n), GroupElement::Finite(x), GroupElement::Finite(y)) => GroupElement::Finite((x + y) % *n as usize),
            (GroupId::SymmetricS3, GroupElement::Finite(x), GroupElement::Finite(y)) => GroupElement::Finite(s3::compose(*x, *y)),
            (GroupId::U1, GroupElement::Angle(x), GroupElement::Angle(y)) => GroupElement::Angle(wrap(x + y, 2.0 * PI)),
            (GroupId::SU2, GroupElement::Euler(x), GroupElement::Euler(y)) => GroupElement::Euler(su2::compose(x, y)),
            _ => panic!("group element does not belong to {}", self.name()),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        match (self, a) {
            (GroupId::Cyclic(n), GroupElement::Finite(x)) => GroupElement::Finite((*n as usize - x) % *n as usize),
            (GroupId::SymmetricS3, GroupElement::Finite(x)) => GroupElement::Finite(s3::inverse(*x)),
            (GroupId::U1, GroupElement::Angle(x)) => GroupElement::Angle(wrap(-x, 2.0 * PI)),
            (GroupId::SU2, GroupElement::Euler(x)) => GroupElement::Euler(su2::inverse(x)),
            _ => panic!("group element does not belong to {}", self.name()),
        }
    }

    /// `D^j(g)`, unitary of size `dim(j)`.
    pub fn wigner_d(&self, label: IrrepLabel, g: &GroupElement) -> CMatrix {
        match (self, label, g) {
            (GroupId::Cyclic(n), IrrepLabel::Charge(q), GroupElement::Finite(x)) => {
                let phase = 2.0 * PI * ((*x as i64 * q).rem_euclid(*n as i64)) as f64 / *n as f64;
                CMatrix::diag(&[C64::from_polar(1.0, phase)])
            }
            (GroupId::U1, IrrepLabel::Charge(q), GroupElement::Angle(phi)) => CMatrix::diag(&[C64::from_polar(1.0, q as f64 * phi)]),
            (GroupId::SymmetricS3, IrrepLabel::S3(irrep), GroupElement::Finite(x)) => s3::matrix(irrep, *x),
            (GroupId::SU2, IrrepLabel::Spin(s), GroupElement::Euler(e)) => su2::wigner_d(s.twice(), e),
            _ => panic!("irrep {label} or element {g:?} does not belong to {}", self.name()),
        }
    }

    /// `‖D(g)D(h) − D(gh)‖_F`.
    pub fn homomorphism_residual(&self, label: IrrepLabel, g: &GroupElement, h: &GroupElement) -> f64 {
        let lhs = self.wigner_d(label, g).matmul(&self.wigner_d(label, h));
        (&lhs - &self.wigner_d(label, &self.compose(g, h))).frobenius_norm()
    }

    /// Largest deviation from `Σ_g D^a_{mn}(g)* D^b_{m'n'}(g) = |G|/d_a δ_ab δ_mm' δ_nn'`.
    pub fn peter_weyl_residual(&self) -> Result<f64> {
        let elements = self.enumerate_elements()?;
        let order = elements.len() as f64;
        let irreps = self.irreps(None)?;
        let mut worst: f64 = 0.0;
        for a in &irreps {
            for b in &irreps {
                let mut sums = vec![ZERO; a.dim * a.dim * b.dim * b.dim];
                for g in &elements {
                    let da = self.wigner_d(a.label, g);
                    let db = self.wigner_d(b.label, g);
                    for (k, slot) in sums.iter_mut().enumerate() {
                        let (m, n, mp, np) = (k / (a.dim * b.dim * b.dim), (k / (b.dim * b.dim)) % a.dim, (k / b.dim) % b.dim, k % b.dim);
                        *slot += da[(m, n)].conj() * db[(mp, np)];
                    }
                }
                for (k, v) in sums.iter().enumerate() {
                    let (m, n, mp, np) = (k / (a.dim * b.dim * b.dim), (k / (b.dim * b.dim)) % a.dim, (k / b.dim) % b.dim, k % b.dim);
                    let expected = if a.label == b.label && m == mp && n == np { order / a.dim as f64 } else { 0.0 };
                    worst = worst.max((v - C64::new(expected, 0.0)).norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn enumerate_elements(&self) -> Result<Vec<GroupElement>> {
        let order = self.order().ok_or(Error::FiniteGroupOnly)?;
        Ok((0..order).map(GroupElement::Finite).collect())
    }

    /// Uniformly (Haar) distributed elements.
    pub fn sample_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<GroupElement> {
        (0..count)
            .map(|_| match self {
                GroupId::Cyclic(_) | GroupId::SymmetricS3 => GroupElement::Finite(rng.random_range(0..self.order().unwrap())),
                GroupId::U1 => GroupElement::Angle(rng.random::<f64>() * 2.0 * PI),
                GroupId::SU2 => {
                    let alpha = rng.random::<f64>() * FOUR_PI;
                    let beta = Float::acos(1.0 - 2.0 * rng.random::<f64>());
                    let gamma = rng.random::<f64>() * FOUR_PI;
                    GroupElement::Euler(Euler::new(alpha, beta, gamma))
                }
            })
            .collect()
    }

    pub fn sample_elements(&self, count: usize, seed: u64) -> Vec<GroupElement> {
        self.sample_with(count, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Elements for exhaustive checks: all of them for finite groups,
    /// `count` samples otherwise.
    pub fn test_elements<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<GroupElement> {
        match self.enumerate_elements() {
            Ok(all) => all,
            Err(_) => self.sample_with(count, rng),
        }
    }

    /// Quadratic Casimir: `j(j+1)` for SU(2), `q²` for U(1).
    pub fn casimir(&self, label: IrrepLabel) -> Result<f64> {
        self.check(label)?;
        match (self, label) {
            (GroupId::SU2, IrrepLabel::Spin(s)) => Ok(s.value() * (s.value() + 1.0)),
            (GroupId::U1, IrrepLabel::Charge(q)) => Ok((q * q) as f64),
            _ => Err(Error::NotApplicable("finite groups have no Casimir operator")),
        }
    }

    /// Irreps in `a ⊗ b`, sorted; every group here is multiplicity free.
    pub fn fusion(&self, a: IrrepLabel, b: IrrepLabel) -> Vec<IrrepLabel> {
        match (self, a, b) {
            (GroupId::Cyclic(n), IrrepLabel::Charge(x), IrrepLabel::Charge(y)) => vec![IrrepLabel::Charge((x + y).rem_euclid(*n as i64))],
            (GroupId::U1, IrrepLabel::Charge(x), IrrepLabel::Charge(y)) => vec![IrrepLabel::Charge(x + y)],
            (GroupId::SymmetricS3, IrrepLabel::S3(x), IrrepLabel::S3(y)) => s3::fusion(x, y).into_iter().map(IrrepLabel::S3).collect(),
            (GroupId::SU2, IrrepLabel::Spin(x), IrrepLabel::Spin(y)) => {
                let (lo, hi) = (x.twice().abs_diff(y.twice()), x.twice() + y.twice());
                (lo..=hi).step_by(2).map(|t| IrrepLabel::Spin(Spin::from_twice(t))).collect()
            }
            _ => panic!("irreps {a}, {b} do not belong to {}", self.name()),
        }
    }

    pub fn fuses(&self, a: IrrepLabel, b: IrrepLabel, c: IrrepLabel) -> bool {
        self.fusion(a, b).contains(&c)
    }

    pub fn clebsch_gordan(&self, a: IrrepLabel, b: IrrepLabel) -> Result<CgSlice> {
        self.check(a)?;
        self.check(b)?;
        Ok(CgSlice::compute(self, a, b))
    }

    /// Hermitian generators `T_a` with `D(g(q)) = exp(i q·T)`.
    pub fn lie_generators(&self, label: IrrepLabel) -> Result<Vec<CMatrix>> {
        self.check(label)?;
        match (self, label) {
            (GroupId::SU2, IrrepLabel::Spin(s)) => Ok(su2::spin_matrices(s.twice()).to_vec()),
            (GroupId::U1, IrrepLabel::Charge(q)) => Ok(vec![CMatrix::diag(&[C64::new(q as f64, 0.0)])]),
            _ => Err(Error::LieGroupOnly),
        }
    }

    pub fn generator_count(&self) -> Result<usize> {
        match self {
            GroupId::SU2 => Ok(3),
            GroupId::U1 => Ok(1),
            _ => Err(Error::LieGroupOnly),
        }
    }

    /// The element `g(q)` with `D(g(q)) = exp(i q·T)`.
    pub fn element_from_parameters(&self, q: &[f64]) -> Result<GroupElement> {
        match self {
            GroupId::SU2 if q.len() == 3 => Ok(GroupElement::Euler(su2::element_from_parameters([q[0], q[1], q[2]]))),
            GroupId::U1 if q.len() == 1 => Ok(GroupElement::Angle(wrap(q[0], 2.0 * PI))),
            GroupId::SU2 | GroupId::U1 => Err(Error::InvalidArgument(format!("wrong parameter count {} for {}", q.len(), self.name()))),
            _ => Err(Error::LieGroupOnly),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_and_ordering() {
        let z3 = GroupId::cyclic(3).unwrap();
        let irreps = z3.irreps(None).unwrap();
        assert_eq!(irreps.iter().map(|i| i.label).collect::<Vec<_>>(), vec![IrrepLabel::Charge(0), IrrepLabel::Charge(1), IrrepLabel::Charge(2)]);
        assert!(irreps.iter().all(|i| i.dim == 1));

        let su2 = GroupId::SU2;
        let kept = su2.irreps(Some(&[IrrepLabel::Spin(Spin::HALF), IrrepLabel::Spin(Spin::ZERO)])).unwrap();
        assert_eq!(kept[0], Irrep { label: IrrepLabel::Spin(Spin::ZERO), dim: 1, parity: FermionParity::Even });
        assert_eq!(kept[1], Irrep { label: IrrepLabel::Spin(Spin::HALF), dim: 2, parity: FermionParity::Odd });
        assert_eq!(su2.irreps(None), Err(Error::UntruncatedLieGroup));
        assert_eq!(GroupId::U1.irreps(None), Err(Error::UntruncatedLieGroup));
        assert!(matches!(z3.irreps(Some(&[IrrepLabel::Charge(5)])), Err(Error::UnknownLabel(_))));
        assert!(GroupId::cyclic(1).is_err());
    }

    #[test]
    fn label_parsing() {
        assert_eq!(GroupId::SU2.parse_label("1/2").unwrap(), IrrepLabel::Spin(Spin::HALF));
        assert_eq!(GroupId::SU2.parse_label("1").unwrap(), IrrepLabel::Spin(Spin::ONE));
        assert!(GroupId::SU2.parse_label("2/2").is_err());
        assert!(GroupId::SU2.parse_label("-1").is_err());
        assert_eq!(GroupId::U1.parse_label("+1").unwrap(), IrrepLabel::Charge(1));
        assert_eq!(GroupId::U1.parse_label("-1").unwrap(), IrrepLabel::Charge(-1));
        assert_eq!(GroupId::SymmetricS3.parse_label("standard").unwrap(), IrrepLabel::S3(S3Irrep::Standard));
        assert!(GroupId::Cyclic(2).parse_label("2").is_err());
        for label in [IrrepLabel::Spin(Spin::from_twice(3)), IrrepLabel::Spin(Spin::ONE)] {
            assert_eq!(GroupId::SU2.parse_label(&label.to_string()).unwrap(), label);
        }
    }

    #[test]
    fn cyclic_characters() {
        let z4 = GroupId::Cyclic(4);
        let d = z4.wigner_d(IrrepLabel::Charge(3), &GroupElement::Finite(1));
        assert!((d[(0, 0)] - C64::from_polar(1.0, 2.0 * PI * 3.0 / 4.0)).norm() < 1e-15);
        let z2 = GroupId::Cyclic(2);
        let elems = z2.enumerate_elements().unwrap();
        assert_eq!(elems.len(), 2);
        assert_eq!(z2.compose(&elems[1], &elems[1]), elems[0]);
    }

    #[test]
    fn casimir_values() {
        assert_eq!(GroupId::SU2.casimir(IrrepLabel::Spin(Spin::HALF)), Ok(0.75));
        assert_eq!(GroupId::SU2.casimir(IrrepLabel::Spin(Spin::ZERO)), Ok(0.0));
        assert!(matches!(GroupId::Cyclic(3).casimir(IrrepLabel::Charge(1)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = GroupId::SU2.sample_elements(5, 42);
        let b = GroupId::SU2.sample_elements(5, 42);
        assert_eq!(a, b);
        for g in &a {
            let GroupElement::Euler(e) = g else { panic!() };
            assert!((0.0..FOUR_PI).contains(&e.alpha) && (0.0..=PI).contains(&e.beta) && (0.0..FOUR_PI).contains(&e.gamma));
        }
    }

    #[test]
    fn homomorphism_and_peter_weyl() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (group, label) in [(GroupId::SU2, IrrepLabel::Spin(Spin::from_twice(3))), (GroupId::U1, IrrepLabel::Charge(-2)), (GroupId::SymmetricS3, IrrepLabel::S3(S3Irrep::Standard))] {
            let gs = group.sample_with(2, &mut rng);
            assert!(group.homomorphism_residual(label, &gs[0], &gs[1]) < 1e-12);
        }
        for group in [GroupId::Cyclic(4), GroupId::SymmetricS3] {
            assert!(group.peter_weyl_residual().unwrap() < 1e-12);
        }
        assert_eq!(GroupId::SU2.peter_weyl_residual(), Err(Error::FiniteGroupOnly));
    }

    #[test]
    fn fusion_rules() {
        let su2 = GroupId::SU2;
        let half = IrrepLabel::Spin(Spin::HALF);
        assert_eq!(su2.fusion(half, half), vec![IrrepLabel::Spin(Spin::ZERO), IrrepLabel::Spin(Spin::ONE)]);
        assert_eq!(GroupId::Cyclic(3).fusion(IrrepLabel::Charge(2), IrrepLabel::Charge(2)), vec![IrrepLabel::Charge(1)]);
        let std = IrrepLabel::S3(S3Irrep::Standard);
        assert_eq!(GroupId::SymmetricS3.fusion(std, std).len(), 3);
    }
}
