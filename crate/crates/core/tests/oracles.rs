//! Closed-form values checked through the public API.

use gauge_peps_core::fermion::{fiducial_su2, vacuum, FockSpace, ModeSet, U1Occupation};
use gauge_peps_core::group::{GroupId, IrrepLabel, Spin};
use gauge_peps_core::lattice::{BosonicLattice, FermionLattice, Geometry};
use gauge_peps_core::linalg::C64;
use gauge_peps_core::peps::{random_vertex_params, FusionOrder, VertexTensor, VirtualLeg};
use gauge_peps_core::recoupling::{exchange, six_j};
use gauge_peps_core::spaces::{LinkSpace, Side, VertexSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ZERO: C64 = C64::new(0.0, 0.0);

fn spin(twice: u32) -> IrrepLabel {
    IrrepLabel::Spin(Spin::from_twice(twice))
}

fn charges(range: std::ops::RangeInclusive<i64>) -> Vec<IrrepLabel> {
    range.map(IrrepLabel::Charge).collect()
}

#[test]
fn even_sector_of_twelve_modes() {
    let space = FockSpace::new(12).unwrap();
    let expected: usize = (0..=12).step_by(2).map(|k| binomial(12, k)).sum();
    assert_eq!(expected, 1 << 11);
    assert_eq!(space.sector(true).len(), expected);
    assert_eq!(space.sector(false).len(), 1 << 11);
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn staggered_charge_balances_outgoing_flux() {
    // ε = +1, one matter fermion and one `+` fermion on the right leg.
    let mut occ = U1Occupation { matter: true, legs: [[false; 2]; 4] };
    occ.legs[1][1] = true;
    assert!(occ.admissible(1));
    assert!(!occ.admissible(-1));
    assert_eq!(U1Occupation::all().count(), 512);
}

#[test]
fn fiducial_without_pairs_reproduces_vertex_amplitudes() {
    let group = GroupId::SU2;
    let physical = VertexSpace::new(group, &[spin(0), spin(1)]).unwrap();
    let leg = VirtualLeg::new(group, &[spin(0), spin(1)]).unwrap();
    let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
    let params = random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, &mut ChaCha8Rng::seed_from_u64(3));
    let tensor = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &params).unwrap();
    let mut modes = ModeSet::new();
    modes.push_su2_site(0, &[Spin::HALF]).unwrap();
    let a = fiducial_su2(&modes, 0, &tensor, &[ZERO; 5]).unwrap();
    let mut from_terms: Vec<C64> = a.operator.terms().iter().map(|t| t.coeff).collect();
    let mut from_tensor: Vec<C64> = tensor.amplitudes().iter().map(|(_, &v)| v).collect();
    let key = |c: &C64| (c.re.to_bits(), c.im.to_bits());
    from_terms.sort_by_key(key);
    from_tensor.sort_by_key(key);
    assert_eq!(from_terms, from_tensor);
    // Every term creates distinct modes, so each maps to its own basis state.
    assert_eq!(a.operator.apply(&vacuum()).len(), tensor.amplitudes().nnz());
}

#[test]
fn recoupling_reference_values() {
    let h = Spin::HALF;
    assert!((six_j([h, h, Spin::ZERO, h, h, Spin::ZERO]) + 0.5).abs() < 1e-15);
    assert!((six_j([h, h, Spin::ONE, h, h, Spin::ONE]) - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(exchange(Spin::ZERO, Spin::ONE, Spin::ONE), 1.0);
    assert_eq!(exchange(h, h, Spin::ZERO), -1.0);
    assert_eq!(exchange(h, h, Spin::ONE), 1.0);
}

#[test]
fn s3_group_element_basis_is_regular() {
    let link = LinkSpace::full(GroupId::SymmetricS3).unwrap();
    assert_eq!(link.dim(), 6);
    let t = link.group_element_transform().unwrap();
    assert_eq!(t.rows(), 6);
    assert!(t.unitarity_residual() < 1e-12);
}

#[test]
fn z2_charge_one_sees_the_sign_character() {
    let z2 = GroupId::Cyclic(2);
    let link = LinkSpace::new(z2, &charges(0..=1)).unwrap();
    let flip = z2.enumerate_elements().unwrap().into_iter().find(|g| *g != z2.identity()).unwrap();
    let theta = link.theta(Side::Left, &flip);
    let expected = [1.0, -1.0];
    for (r, e) in expected.iter().enumerate() {
        for c in 0..2 {
            let want = if r == c { *e } else { 0.0 };
            assert!((theta[(r, c)] - C64::new(want, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn two_by_two_dimension_counts() {
    let geometry = Geometry::open(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let u1 = GroupId::U1;
    let physical: Vec<VertexSpace> = (0..4).map(|s| VertexSpace::new(u1, &[IrrepLabel::Charge(0), IrrepLabel::Charge(geometry.staggering(s))]).unwrap()).collect();
    let bosons = BosonicLattice::random(geometry, &physical, &VirtualLeg::new(u1, &charges(-1..=1)).unwrap(), &LinkSpace::new(u1, &charges(-1..=1)).unwrap(), &mut rng).unwrap();
    // 2 matter states per site, 3 charges per link.
    assert_eq!(bosons.layout().unwrap().dim(), 2u128.pow(4) * 3u128.pow(4));

    let su2 = GroupId::SU2;
    let half = [spin(0), spin(1)];
    let tau = [C64::new(0.3, 0.0); 5];
    let fermions = FermionLattice::random_su2(geometry, tau, &mut rng).unwrap().gauged(LinkSpace::new(su2, &half).unwrap()).unwrap();
    // Empty, two singly occupied and the paired state per site; 1 + 4 link states.
    assert_eq!(fermions.layout().unwrap().dim(), 4u128.pow(4) * 5u128.pow(4));
    assert_eq!(fermions.layout().unwrap().dim(), 160_000);

    let physical = VertexSpace::new(su2, &half).unwrap();
    let bosons = BosonicLattice::random(geometry, &vec![physical; 4], &VirtualLeg::new(su2, &half).unwrap(), &LinkSpace::new(su2, &half).unwrap(), &mut rng).unwrap();
    assert_eq!(bosons.layout().unwrap().dim(), 3u128.pow(4) * 5u128.pow(4));
}

#[test]
fn seeded_sampling_repeats() {
    let a = GroupId::SU2.sample_elements(5, 42);
    let b = GroupId::SU2.sample_elements(5, 42);
    assert_eq!(a.len(), 5);
    assert_eq!(a, b);
    assert_ne!(a, GroupId::SU2.sample_elements(5, 43));
}
