use gauge_peps_core::cg::{intertwiner_residual, orthogonality_completeness};
use gauge_peps_core::fermion::{FockOperator, FockSpace, FockTerm, Ladder, U1Occupation};
use gauge_peps_core::group::{GroupElement, GroupId, IrrepLabel, Spin};
use gauge_peps_core::linalg::C64;
use gauge_peps_core::peps::{random_vertex_params, FusionOrder, VertexTensor, VirtualLeg};
use gauge_peps_core::recoupling::{f_move, reparameterize, six_j};
use gauge_peps_core::spaces::{LinkSpace, VertexSpace};
use gauge_peps_core::su2::Euler;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn euler() -> impl Strategy<Value = GroupElement> {
    (0.0..4.0 * std::f64::consts::PI, 0.0..std::f64::consts::PI, 0.0..4.0 * std::f64::consts::PI).prop_map(|(a, b, c)| GroupElement::Euler(Euler::new(a, b, c)))
}

fn spin(twice: u32) -> IrrepLabel {
    IrrepLabel::Spin(Spin::from_twice(twice))
}

fn ladder(modes: usize) -> impl Strategy<Value = Ladder> {
    (0..modes, any::<bool>()).prop_map(|(k, up)| if up { Ladder::Create(k) } else { Ladder::Annihilate(k) })
}

fn operator(modes: usize) -> impl Strategy<Value = FockOperator> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, prop::collection::vec(ladder(modes), 0..4)), 1..4)
        .prop_map(|terms| FockOperator::from_terms(terms.into_iter().map(|(re, im, ops)| FockTerm::new(C64::new(re, im), ops)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wigner_d_is_a_unitary_homomorphism(g in euler(), h in euler(), twice in 0u32..5) {
        let su2 = GroupId::SU2;
        prop_assert!(su2.wigner_d(spin(twice), &g).unitarity_residual() < 1e-12);
        prop_assert!(su2.homomorphism_residual(spin(twice), &g, &h) < 1e-12);
    }

    #[test]
    fn clebsch_gordan_intertwines(g in euler(), a in 0u32..4, b in 0u32..4) {
        let slice = GroupId::SU2.clebsch_gordan(spin(a), spin(b)).unwrap();
        let (ortho, complete) = orthogonality_completeness(&slice);
        prop_assert!(ortho < 1e-12 && complete < 1e-12);
        prop_assert!(intertwiner_residual(&GroupId::SU2, &slice, &g) < 1e-12);
    }

    #[test]
    fn link_operator_is_covariant(g in euler()) {
        let space = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)]).unwrap();
        for j in [spin(1), spin(2)] {
            let (r, l) = space.link_operator(j).unwrap().covariance_residuals(&space, &g);
            prop_assert!(r < 1e-12 && l < 1e-12);
        }
    }

    #[test]
    fn six_j_has_tetrahedral_symmetry(t in prop::array::uniform6(0u32..5)) {
        let s = t.map(Spin::from_twice);
        let v = six_j(s);
        // column permutation and upper/lower swap of two columns
        prop_assert!((v - six_j([s[1], s[0], s[2], s[4], s[3], s[5]])).abs() < 1e-12);
        prop_assert!((v - six_j([s[3], s[4], s[2], s[0], s[1], s[5]])).abs() < 1e-12);
    }

    #[test]
    fn f_moves_are_unitary(a in 0u32..4, b in 0u32..4, c in 0u32..4, total in 0u32..7) {
        let f = f_move(Spin::from_twice(a), Spin::from_twice(b), Spin::from_twice(c), Spin::from_twice(total));
        prop_assert!(f.unitarity_residual() < 1e-12);
    }

    #[test]
    fn vertex_gauss_law_holds_for_random_parameters(seed in any::<u64>(), deg in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let group = GroupId::SU2;
        let physical = VertexSpace::new(group, &[spin(0), spin(1)]).unwrap();
        let leg = VirtualLeg::with_degeneracy(group, &[(spin(0), deg), (spin(1), 1)]).unwrap();
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let order = FusionOrder::ALL[(seed % 3) as usize];
        let params = random_vertex_params(&physical, &legs, order, &mut rng);
        let tensor = VertexTensor::build(&physical, &legs, order, &params).unwrap();
        for g in group.sample_with(3, &mut rng) {
            prop_assert!(tensor.gauss_residual(&g) < 1e-12 * (1.0 + tensor.amplitudes().norm()));
        }
    }

    #[test]
    fn reparameterization_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let group = GroupId::SU2;
        let physical = VertexSpace::new(group, &[spin(0), spin(1), spin(2)]).unwrap();
        let leg = VirtualLeg::new(group, &[spin(0), spin(1)]).unwrap();
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
        let params = random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, &mut rng);
        let other = reparameterize(&params, FusionOrder::LeftDownFirst, FusionOrder::LeftPhysicalFirst).unwrap();
        let back = reparameterize(&other, FusionOrder::LeftPhysicalFirst, FusionOrder::LeftDownFirst).unwrap();
        for (key, v) in &params {
            prop_assert!((back.get(key).copied().unwrap_or_default() - v).norm() < 1e-12);
        }
    }

    #[test]
    fn fock_adjoint_matches_matrix_adjoint(op in operator(4)) {
        let m = op.matrix(4).unwrap().to_dense();
        let md = op.adjoint().matrix(4).unwrap().to_dense();
        prop_assert!((&m.adjoint() - &md).frobenius_norm() < 1e-14);
        prop_assert_eq!(op.adjoint().adjoint(), op);
    }

    #[test]
    fn fock_lift_is_multiplicative(g in euler(), h in euler()) {
        let su2 = GroupId::SU2;
        let label = spin(1);
        let space = FockSpace::new(2).unwrap();
        let dg = su2.wigner_d(label, &g);
        let dh = su2.wigner_d(label, &h);
        let lhs = space.lift(&dg).matmul(&space.lift(&dh));
        prop_assert!((&lhs - &space.lift(&dg.matmul(&dh))).frobenius_norm() < 1e-12);
    }

    #[test]
    fn admissible_u1_occupations_are_even(bits in 0u16..512, positive in any::<bool>()) {
        let occ = U1Occupation::all().nth(bits as usize).unwrap();
        let staggering = if positive { 1 } else { -1 };
        if occ.admissible(staggering) {
            prop_assert_eq!(occ.particle_count() % 2, 0);
        }
    }

    #[test]
    fn u1_link_operator_shifts_flux(phi in 0.0..std::f64::consts::TAU) {
        let labels: Vec<IrrepLabel> = (-2..=2).map(IrrepLabel::Charge).collect();
        let space = LinkSpace::new(GroupId::U1, &labels).unwrap();
        let g = GroupElement::Angle(phi);
        let (r, l) = space.link_operator(IrrepLabel::Charge(1)).unwrap().covariance_residuals(&space, &g);
        prop_assert!(r < 1e-12 && l < 1e-12);
        let raise = space.link_operator(IrrepLabel::Charge(1)).unwrap().assembled();
        prop_assert!((raise[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
