//! Named groups of checks.

use gauge_peps_core::cg::{intertwiner_residual, orthogonality_completeness, CgTable};
use gauge_peps_core::fermion::{
    fiducial_su2, fiducial_u1, hole_covariance_residual, particle_hole_residuals, random_u1_params, state_distance, state_norm, FockOperator, FockSpace, FockState, ModeSet,
};
use gauge_peps_core::group::{GroupElement, GroupId, IrrepLabel, Spin};
use gauge_peps_core::lattice::{hopping_residual, BosonicLattice, FermionLattice, Geometry, HoppingWiring, LatticeState, Layout};
use gauge_peps_core::linalg::C64;
use gauge_peps_core::peps::{
    admissible_keys, random_complex, random_link_params, random_vertex_params, BondState, FusionOrder, LinkTensor, LinkWiring, Orientation, UnifiedTensor, VertexParams, VertexTensor,
    VirtualLeg,
};
use gauge_peps_core::recoupling::{exchange_residual, f_move, f_move_residual, reparameterize};
use gauge_peps_core::spaces::{LinkSpace, VertexSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Matter, Model, RunConfig, Samples, Tolerances};
use crate::kernel::kernel_membership;
use crate::pipeline;
use crate::report::CheckRecord;
use crate::{CliError, CliResult};

pub const SUITES: [&str; 8] = ["model", "representation", "links", "gauss", "recoupling", "lattice", "fermion", "controls"];

/// Everything a suite may read.
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub samples: Samples,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a RunConfig, seed: u64) -> Self {
        Self { config, seed, tolerances: config.tolerances.clone(), samples: config.samples.clone() }
    }

    /// A stream that depends only on the seed and the suite, so selecting
    /// suites in another order changes nothing.
    fn rng(&self, suite: &str) -> ChaCha8Rng {
        let salt = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ salt)
    }
}

pub fn run(name: &str, ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    match name {
        "model" => model(ctx),
        "representation" => representation(ctx),
        "links" => links(ctx),
        "gauss" => gauss(ctx),
        "recoupling" => recoupling(ctx),
        "lattice" => lattice(ctx),
        "fermion" => fermion(ctx),
        "controls" => controls(ctx),
        other => Err(CliError::Usage(format!("unknown suite `{other}`; known suites: {}", SUITES.join(", ")))),
    }
}

fn spin(twice: u32) -> IrrepLabel {
    IrrepLabel::Spin(Spin::from_twice(twice))
}

fn charges(range: std::ops::RangeInclusive<i64>) -> Vec<IrrepLabel> {
    range.map(IrrepLabel::Charge).collect()
}

fn all_labels(group: GroupId) -> Vec<IrrepLabel> {
    group.irreps(None).map(|v| v.into_iter().map(|i| i.label).collect()).unwrap_or_default()
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn z(n: u32) -> GroupId {
    GroupId::cyclic(n).expect("order at least 2")
}

/// Representation backends with the irreps exercised on each.
fn backends() -> Vec<(GroupId, Vec<IrrepLabel>)> {
    vec![
        (z(2), all_labels(z(2))),
        (z(3), all_labels(z(3))),
        (GroupId::SymmetricS3, all_labels(GroupId::SymmetricS3)),
        (GroupId::U1, charges(-2..=2)),
        (GroupId::SU2, (0..=4).map(spin).collect()),
    ]
}

fn representation(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.local;
    let mut rng = ctx.rng("representation");
    let mut out = Vec::new();
    for (group, labels) in backends() {
        let name = group.name();
        let elements = group.sample_with(ctx.samples.elements, &mut rng);
        out.push(CheckRecord::below(format!("representation/{name}/d-unitarity"), worst(labels.iter().flat_map(|&j| elements.iter().map(move |g| group.wigner_d(j, g).unitarity_residual()))), tol));
        let pairs: Vec<_> = (0..ctx.samples.pairs).map(|_| (group.sample_with(1, &mut rng).remove(0), group.sample_with(1, &mut rng).remove(0))).collect();
        out.push(CheckRecord::below(format!("representation/{name}/homomorphism"), worst(labels.iter().flat_map(|&j| pairs.iter().map(move |(g, h)| group.homomorphism_residual(j, g, h)))), tol));
        let mut ortho: f64 = 0.0;
        let mut intertwine: f64 = 0.0;
        for &a in &labels {
            for &b in &labels {
                let slice = group.clebsch_gordan(a, b)?;
                let (o, c) = orthogonality_completeness(&slice);
                ortho = ortho.max(o).max(c);
                intertwine = intertwine.max(worst(elements.iter().map(|g| intertwiner_residual(&group, &slice, g))));
            }
        }
        out.push(CheckRecord::below(format!("representation/{name}/cg-orthogonality-completeness"), ortho, tol));
        out.push(CheckRecord::below(format!("representation/{name}/cg-intertwiner"), intertwine, tol));
        if group.is_finite() {
            out.push(CheckRecord::below(format!("representation/{name}/peter-weyl"), group.peter_weyl_residual()?, tol));
        }
    }
    Ok(out)
}

fn links(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.local;
    let mut rng = ctx.rng("links");
    let cases: Vec<(String, LinkSpace, Vec<IrrepLabel>)> = vec![
        ("Z2".into(), LinkSpace::full(z(2))?, all_labels(z(2))),
        ("Z3".into(), LinkSpace::full(z(3))?, all_labels(z(3))),
        ("S3".into(), LinkSpace::full(GroupId::SymmetricS3)?, all_labels(GroupId::SymmetricS3)),
        ("U1{-2..2}".into(), LinkSpace::new(GroupId::U1, &charges(-2..=2))?, charges(-1..=1)),
        ("SU2{0,1/2}".into(), LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)])?, vec![spin(1), spin(2)]),
        ("SU2{0,1/2,1}".into(), LinkSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)])?, vec![spin(1), spin(2)]),
    ];
    let mut out = Vec::new();
    for (name, space, operators) in cases {
        let group = space.group();
        let elements = group.sample_with(ctx.samples.elements, &mut rng);
        let mut covariance: f64 = 0.0;
        let mut unitarity: f64 = 0.0;
        let mut commutators: f64 = 0.0;
        for j in operators {
            let u = match space.link_operator(j) {
                Ok(u) => u,
                Err(gauge_peps_core::Error::EmptyResult) => continue,
                Err(e) => return Err(e.into()),
            };
            for g in &elements {
                let (r, l) = u.covariance_residuals(&space, g);
                covariance = covariance.max(r).max(l);
            }
            if group.is_finite() {
                unitarity = unitarity.max(u.assembled().unitarity_residual());
            }
            if group == GroupId::SU2 {
                let (l, r) = u.commutator_residuals(&space)?;
                commutators = commutators.max(l).max(r);
            }
        }
        out.push(CheckRecord::below(format!("links/{name}/covariance"), covariance, tol));
        if group.is_finite() {
            out.push(CheckRecord::below(format!("links/{name}/untruncated-unitarity"), unitarity, tol));
            out.push(CheckRecord::below(format!("links/{name}/group-element-transform"), space.group_element_transform()?.unitarity_residual(), tol));
        }
        if group == GroupId::SU2 {
            out.push(CheckRecord::below(format!("links/{name}/generator-commutators"), commutators, tol));
        }
    }
    Ok(out)
}

/// Physical irreps, virtual irreps and link truncation of a Gauss-law backend.
struct Backend {
    group: GroupId,
    physical: VertexSpace,
    virtuals: Vec<IrrepLabel>,
    link: LinkSpace,
}

impl Backend {
    fn new(group: GroupId, physical: VertexSpace, virtuals: Vec<IrrepLabel>, link: LinkSpace) -> Self {
        Self { group, physical, virtuals, link }
    }
}

fn gauss_backends() -> CliResult<Vec<Backend>> {
    let s3 = GroupId::SymmetricS3;
    let s3_labels = all_labels(s3);
    Ok(vec![
        Backend::new(z(2), VertexSpace::new(z(2), &all_labels(z(2)))?, all_labels(z(2)), LinkSpace::full(z(2))?),
        Backend::new(z(3), VertexSpace::new(z(3), &all_labels(z(3)))?, all_labels(z(3)), LinkSpace::full(z(3))?),
        Backend::new(s3, VertexSpace::new(s3, &s3_labels)?, vec![s3_labels[0], s3_labels[2]], LinkSpace::full(s3)?),
        Backend::new(GroupId::U1, VertexSpace::new(GroupId::U1, &charges(0..=1))?, charges(-1..=1), LinkSpace::new(GroupId::U1, &charges(-1..=1))?),
        Backend::new(GroupId::SU2, VertexSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)])?, vec![spin(0), spin(1)], LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)])?),
    ])
}

fn gauss(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.local;
    let mut rng = ctx.rng("gauss");
    let mut out = Vec::new();
    for Backend { group, physical, virtuals, link } in gauss_backends()? {
        let name = group.name();
        let elements = group.sample_with(ctx.samples.elements, &mut rng);
        let (mut vertex, mut link_in, mut link_out, mut unified, mut bond) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for draw in 0..ctx.samples.draws {
            // Degeneracies cycle through 1..=3 on the first irrep and 1..=2 on
            // the others.
            let degeneracy: Vec<(IrrepLabel, usize)> = virtuals.iter().enumerate().map(|(k, &j)| (j, if k == 0 { 1 + draw % 3 } else { 1 + (draw / 3) % 2 })).collect();
            let leg = VirtualLeg::with_degeneracy(group, &degeneracy)?;
            let legs = [leg.clone(), leg.clone(), leg.clone(), leg.clone()];
            let order = FusionOrder::ALL[draw % 3];
            let a = VertexTensor::build(&physical, &legs, order, &random_vertex_params(&physical, &legs, order, &mut rng))?;
            let side = LinkTensor::build(&link, &leg, &random_link_params(&link, &leg, &mut rng))?;
            let top = LinkTensor::build(&link, &leg, &random_link_params(&link, &leg, &mut rng))?;
            let c = UnifiedTensor::unify(&a, &side, &top)?;
            let h = BondState::new(Orientation::Horizontal, &leg, &leg)?;
            for g in &elements {
                vertex = vertex.max(a.gauss_residual(g));
                let (i, o) = side.gauss_residuals(g);
                link_in = link_in.max(i);
                link_out = link_out.max(o);
                unified = unified.max(worst(c.gauss_residuals(g)));
                bond = bond.max(h.invariance_residual(g));
            }
        }
        out.push(CheckRecord::below(format!("gauss/{name}/vertex"), vertex, tol));
        out.push(CheckRecord::below(format!("gauss/{name}/link-in"), link_in, tol));
        out.push(CheckRecord::below(format!("gauss/{name}/link-out"), link_out, tol));
        out.push(CheckRecord::below(format!("gauss/{name}/unified"), unified, tol));
        out.push(CheckRecord::below(format!("gauss/{name}/bond"), bond, tol));

        // One admissible summand at a time.
        let leg = VirtualLeg::new(group, &virtuals)?;
        let legs = [leg.clone(), leg.clone(), leg.clone(), leg.clone()];
        let few = &elements[..elements.len().min(5)];
        let mut single: f64 = 0.0;
        for key in admissible_keys(&physical, &legs, FusionOrder::LeftDownFirst) {
            let params: VertexParams = [(key, random_complex(&mut rng))].into_iter().collect();
            let a = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &params)?;
            single = single.max(worst(few.iter().map(|g| a.gauss_residual(g))));
        }
        out.push(CheckRecord::below(format!("gauss/{name}/per-summand"), single, tol));
    }
    Ok(out)
}

fn recoupling(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.local;
    let mut rng = ctx.rng("recoupling");
    let mut cg = CgTable::new(GroupId::SU2);
    let (mut projection, mut unitarity, mut exchange) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..=4 {
        for b in 0..=4 {
            exchange = exchange.max(exchange_residual(&mut cg, Spin::from_twice(a), Spin::from_twice(b)));
            for c in 0..=4 {
                for total in 0..=12 {
                    let f = f_move(Spin::from_twice(a), Spin::from_twice(b), Spin::from_twice(c), Spin::from_twice(total));
                    if f.rows.is_empty() {
                        continue;
                    }
                    unitarity = unitarity.max(f.unitarity_residual());
                    projection = projection.max(f_move_residual(&mut cg, &f));
                }
            }
        }
    }
    let physical = VertexSpace::new(GroupId::SU2, &[spin(0), spin(1), spin(2)])?;
    let leg = VirtualLeg::with_degeneracy(GroupId::SU2, &[(spin(0), 1), (spin(1), 2), (spin(2), 1)])?;
    let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
    let (mut tensors, mut params) = (0.0f64, 0.0f64);
    for _ in 0..ctx.samples.draws.clamp(1, 4) {
        for from in FusionOrder::ALL {
            let alpha = random_vertex_params(&physical, &legs, from, &mut rng);
            let reference = VertexTensor::build(&physical, &legs, from, &alpha)?;
            for to in FusionOrder::ALL {
                let converted = reparameterize(&alpha, from, to)?;
                let built = VertexTensor::build(&physical, &legs, to, &converted)?;
                tensors = tensors.max(reference.amplitudes().max_difference(built.amplitudes()));
                let back = reparameterize(&converted, to, from)?;
                params = params.max(worst(alpha.iter().map(|(k, v)| (back.get(k).copied().unwrap_or_default() - v).norm())));
            }
        }
    }
    Ok(vec![
        CheckRecord::below("recoupling/f-move-vs-cg", projection, tol),
        CheckRecord::below("recoupling/f-unitarity", unitarity, tol),
        CheckRecord::below("recoupling/exchange-vs-cg", exchange, tol),
        CheckRecord::below("recoupling/round-trip-tensor", tensors, tol),
        CheckRecord::below("recoupling/round-trip-parameters", params, tol),
    ])
}

/// `‖Θ_g(x)ψ − ψ‖/‖ψ‖` over random `(x, g)`, and the same for the global
/// transformation.
fn invariance(layout: &Layout, state: &LatticeState, group: GroupId, samples: usize, rng: &mut ChaCha8Rng) -> CliResult<(f64, f64)> {
    let sites = layout.geometry().site_count();
    let (mut local, mut global) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = rng.random_range(0..sites);
        let g = group.sample_with(1, rng).remove(0);
        if layout.is_gauged() {
            local = local.max(state.invariance_residual(&layout.gauss_operator(x, &g)?));
        }
        global = global.max(state.invariance_residual(&layout.global_operator(&g)?));
    }
    Ok((local, global))
}

fn generator_law(layout: &Layout, state: &LatticeState) -> CliResult<f64> {
    let mut out: f64 = 0.0;
    for x in 0..layout.geometry().site_count() {
        for generator in layout.gauss_generators(x)? {
            out = out.max(state.annihilation_residual(&generator));
        }
    }
    Ok(out)
}

fn dimension_check(name: String, state: &LatticeState, expected: usize) -> CheckRecord {
    CheckRecord::below(name, state.dim().abs_diff(expected) as f64, 0.5)
}

fn lattice(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.global;
    let mut rng = ctx.rng("lattice");
    let geometry = Geometry::open(2, 2)?;
    let mut out = Vec::new();

    let u1 = GroupId::U1;
    let physical: Vec<VertexSpace> = (0..4).map(|s| VertexSpace::new(u1, &[IrrepLabel::Charge(0), IrrepLabel::Charge(geometry.staggering(s))])).collect::<Result<_, _>>()?;
    let leg = VirtualLeg::new(u1, &charges(-1..=1))?;
    let link = LinkSpace::new(u1, &charges(-1..=1))?;
    let lattice = BosonicLattice::random(geometry, &physical, &leg, &link, &mut rng)?;
    let layout = lattice.layout()?;
    let psi = lattice.contract()?;
    out.push(dimension_check("lattice/U1/dimension-1296".into(), &psi, 1296));
    let (local, global) = invariance(&layout, &psi, u1, ctx.samples.elements, &mut rng)?;
    out.push(CheckRecord::below("lattice/U1/local-invariance", local, tol));
    out.push(CheckRecord::below("lattice/U1/global-invariance", global, tol));
    out.push(CheckRecord::below("lattice/U1/generator-law", generator_law(&layout, &psi)?, tol));
    let kernel = kernel_membership(&layout, &psi, 1e-8)?;
    out.push(CheckRecord::below("lattice/U1/kernel-membership", kernel.residual, tol));
    // The same projector must reject a generic state.
    let generic = LatticeState::new(psi.dims().to_vec(), (0..psi.dim()).map(|_| random_complex(&mut rng)).collect())?;
    out.push(CheckRecord::above("lattice/U1/kernel-rejects-generic-state", kernel_membership(&layout, &generic, 1e-8)?.residual, ctx.tolerances.control));

    let su2 = GroupId::SU2;
    let half = [spin(0), spin(1)];
    let tau = std::array::from_fn(|_| random_complex(&mut rng));
    let fermions = FermionLattice::random_su2(geometry, tau, &mut rng)?.gauged(LinkSpace::new(su2, &half)?)?;
    let layout = fermions.layout()?;
    let psi = fermions.contract()?;
    out.push(dimension_check("lattice/SU2/dimension-160000".into(), &psi, 160_000));
    let (local, global) = invariance(&layout, &psi, su2, ctx.samples.elements, &mut rng)?;
    out.push(CheckRecord::below("lattice/SU2/local-invariance", local, tol));
    out.push(CheckRecord::below("lattice/SU2/global-invariance", global, tol));
    out.push(CheckRecord::below("lattice/SU2/generator-law", generator_law(&layout, &psi)?, tol));

    let physical = VertexSpace::new(su2, &half)?;
    let bosons = BosonicLattice::random(geometry, &vec![physical; 4], &VirtualLeg::new(su2, &half)?, &LinkSpace::new(su2, &half)?, &mut rng)?;
    let layout = bosons.layout()?;
    let psi = bosons.contract()?;
    out.push(dimension_check("lattice/SU2-bosonic/dimension-50625".into(), &psi, 50_625));
    let (local, _) = invariance(&layout, &psi, su2, ctx.samples.elements, &mut rng)?;
    out.push(CheckRecord::below("lattice/SU2-bosonic/local-invariance", local, tol));
    out.push(CheckRecord::below("lattice/SU2-bosonic/generator-law", generator_law(&layout, &psi)?, tol));
    Ok(out)
}

/// The vacuum plus `terms` random sparsely occupied basis states, so that
/// creation-heavy operators do not annihilate everything.
fn random_fock_state(modes: usize, terms: usize, rng: &mut ChaCha8Rng) -> FockState {
    let mut state: FockState = [(0u64, random_complex(rng))].into_iter().collect();
    for _ in 0..terms {
        let mask = (0..modes).filter(|_| rng.random_bool(0.1)).fold(0u64, |m, k| m | (1 << k));
        state.insert(mask, random_complex(rng));
    }
    state
}

/// `‖[𝓐(x), 𝓐(y)] φ‖ / (‖𝓐(x)𝓐(y)φ‖ + ‖𝓐(y)𝓐(x)φ‖)` over random `φ`.
fn cross_site_commutator(a: &FockOperator, b: &FockOperator, modes: usize, rng: &mut ChaCha8Rng) -> f64 {
    worst((0..4).map(|_| {
        let phi = random_fock_state(modes, 6, rng);
        let ab = a.apply(&b.apply(&phi));
        let ba = b.apply(&a.apply(&phi));
        let scale = state_norm(&ab) + state_norm(&ba);
        if scale == 0.0 {
            0.0
        } else {
            state_distance(&ab, &ba) / scale
        }
    }))
}

fn odd_weight(op: &FockOperator) -> f64 {
    worst(op.terms().iter().filter(|t| t.ops.len() % 2 == 1).map(|t| t.coeff.norm()))
}

fn fermion(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let (exact, local, global) = (ctx.tolerances.exact, ctx.tolerances.local, ctx.tolerances.global);
    let mut rng = ctx.rng("fermion");
    let mut out = Vec::new();

    let car = worst((1..=6).map(|n| FockSpace::new(n).map(|s| s.anticommutation_residual()).unwrap_or(f64::INFINITY)));
    out.push(CheckRecord::below("fermion/anticommutation", car, exact));

    // Fiducial operators on two neighbouring sites.
    let mut u1_modes = ModeSet::new();
    u1_modes.push_u1_site(0)?;
    u1_modes.push_u1_site(1)?;
    let u1_ops: Vec<FockOperator> = [1i64, -1].iter().enumerate().map(|(s, &st)| fiducial_u1(&u1_modes, s, st, &random_u1_params(st, &mut rng)).map(|f| f.operator)).collect::<Result<_, _>>()?;
    let mut su2_modes = ModeSet::new();
    let leg_spins = [Spin::ZERO, Spin::HALF, Spin::ONE];
    su2_modes.push_su2_site(0, &leg_spins)?;
    su2_modes.push_su2_site(1, &leg_spins)?;
    let physical = VertexSpace::new(GroupId::SU2, &[spin(0), spin(1)])?;
    let leg = VirtualLeg::new(GroupId::SU2, &[spin(0), spin(1), spin(2)])?;
    let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
    let su2_ops: Vec<FockOperator> = (0..2)
        .map(|s| {
            let tensor = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, &mut rng))?;
            let tau = std::array::from_fn(|_| random_complex(&mut rng));
            Ok::<_, CliError>(fiducial_su2(&su2_modes, s, &tensor, &tau)?.operator)
        })
        .collect::<Result<_, _>>()?;
    out.push(CheckRecord::below("fermion/U1/fiducial-parity", worst(u1_ops.iter().map(odd_weight)), exact));
    out.push(CheckRecord::below("fermion/SU2/fiducial-parity", worst(su2_ops.iter().map(odd_weight)), exact));
    out.push(CheckRecord::below("fermion/U1/cross-site-commutation", cross_site_commutator(&u1_ops[0], &u1_ops[1], u1_modes.len(), &mut rng), local));
    out.push(CheckRecord::below("fermion/SU2/cross-site-commutation", cross_site_commutator(&su2_ops[0], &su2_ops[1], su2_modes.len(), &mut rng), local));

    let mut holes: f64 = 0.0;
    for _ in 0..ctx.samples.elements {
        let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        holes = holes.max(hole_covariance_residual(Spin::ZERO, q)?).max(hole_covariance_residual(Spin::ONE, q)?);
    }
    out.push(CheckRecord::below("fermion/hole-covariance", holes, local));

    let u1_link = LinkSpace::new(GroupId::U1, &charges(-1..=1))?;
    let pre = FermionLattice::random_u1(Geometry::open(2, 2)?, &mut rng)?;
    let post = pre.clone().gauged(u1_link)?;
    let su2_link = LinkSpace::new(GroupId::SU2, &[spin(0), spin(1)])?;
    let tau = std::array::from_fn(|_| random_complex(&mut rng));
    let pre_su2 = FermionLattice::random_su2(Geometry::open(2, 1)?, tau, &mut rng)?;
    let post_su2 = pre_su2.clone().gauged(su2_link)?;
    for (name, pre, post) in [("U1", pre, post), ("SU2", pre_su2, post_su2)] {
        let group = pre.group();
        let layout = pre.layout()?;
        let psi = pre.contract()?;
        let (_, global_residual) = invariance(&layout, &psi, group, ctx.samples.elements, &mut rng)?;
        out.push(CheckRecord::below(format!("fermion/{name}/global-invariance-pre-gauging"), global_residual, global));
        let layout = post.layout()?;
        let psi = post.contract()?;
        let (local_residual, _) = invariance(&layout, &psi, group, ctx.samples.elements, &mut rng)?;
        out.push(CheckRecord::below(format!("fermion/{name}/local-invariance-post-gauging"), local_residual, global));
        out.push(CheckRecord::below(format!("fermion/{name}/gauss-annihilation-post-gauging"), generator_law(&layout, &psi)?, global));
    }

    for group in [GroupId::U1, GroupId::SU2] {
        let elements = group.sample_with(ctx.samples.elements, &mut rng);
        let residual = elements.iter().map(|g| hopping_residual(group, g, HoppingWiring::Standard)).collect::<Result<Vec<_>, _>>()?;
        out.push(CheckRecord::below(format!("fermion/{}/tunneling-commutation", group.name()), worst(residual), local));
    }

    let [map, charge, unitary] = particle_hole_residuals();
    out.push(CheckRecord::below("fermion/particle-hole-map", map, local));
    out.push(CheckRecord::below("fermion/particle-hole-charge-invariance", charge, local));
    out.push(CheckRecord::below("fermion/particle-hole-unitarity", unitary, local));
    Ok(out)
}

fn controls(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.control;
    let mut rng = ctx.rng("controls");
    let su2 = GroupId::SU2;
    let half = [spin(0), spin(1)];
    let elements = su2.sample_with(ctx.samples.elements.clamp(1, 10), &mut rng);
    let leg = VirtualLeg::new(su2, &half)?;
    let link = LinkSpace::new(su2, &half)?;

    let wrong = LinkTensor::build_wired(&link, &leg, &random_link_params(&link, &leg, &mut rng), LinkWiring::LeftIndexTwice)?;
    let wrong_delta = worst(elements.iter().map(|g| {
        let (i, o) = wrong.gauss_residuals(g);
        i.max(o)
    }));

    let transposed = elements.iter().map(|g| hopping_residual(su2, g, HoppingWiring::Transposed)).collect::<Result<Vec<_>, _>>()?;

    let physical = VertexSpace::new(su2, &half)?;
    let legs = [leg.clone(), leg.clone(), leg.clone(), leg];
    let a = VertexTensor::build(&physical, &legs, FusionOrder::LeftDownFirst, &random_vertex_params(&physical, &legs, FusionOrder::LeftDownFirst, &mut rng))?;
    let perturbed = a.perturbed(C64::new(0.1, 0.0));
    let perturbed_residual = worst(elements.iter().map(|g| perturbed.gauss_residual(g)));

    Ok(vec![
        CheckRecord::above("controls/link-wrong-delta", wrong_delta, tol),
        CheckRecord::above("controls/tunneling-transposed-u", worst(transposed), tol),
        CheckRecord::above("controls/perturbed-vertex", perturbed_residual, tol),
    ])
}

/// Checks of the configured model.
fn model(ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let model = ctx.config.model()?;
    model_checks(&model, ctx)
}

pub fn model_checks(model: &Model, ctx: &Context) -> CliResult<Vec<CheckRecord>> {
    let tol = ctx.tolerances.local;
    let mut rng = ctx.rng("model");
    let group = model.group;
    let elements = group.sample_with(ctx.samples.elements, &mut rng);
    let mut out = Vec::new();
    match model.matter {
        Matter::Bosonic => {
            let t = pipeline::site_tensors(model, &mut rng)?;
            let bond = BondState::new(Orientation::Horizontal, &model.leg, &model.leg)?;
            let (mut vertex, mut link_in, mut link_out, mut unified, mut bonds) = (0.0f64, 0.0f64, 0.0f64, [0.0f64; 3], 0.0f64);
            for g in &elements {
                vertex = vertex.max(t.vertex.gauss_residual(g));
                for b in [&t.side, &t.top] {
                    let (i, o) = b.gauss_residuals(g);
                    link_in = link_in.max(i);
                    link_out = link_out.max(o);
                }
                for (w, r) in unified.iter_mut().zip(t.unified.gauss_residuals(g)) {
                    *w = w.max(r);
                }
                bonds = bonds.max(bond.invariance_residual(g));
            }
            out.push(CheckRecord::below("model/vertex-gauss", vertex, tol));
            out.push(CheckRecord::below("model/link-gauss-in", link_in, tol));
            out.push(CheckRecord::below("model/link-gauss-out", link_out, tol));
            for (name, r) in ["vertex", "side", "top"].iter().zip(unified) {
                out.push(CheckRecord::below(format!("model/unified-gauss-{name}"), r, tol));
            }
            out.push(CheckRecord::below("model/bond-invariance", bonds, tol));
        }
        Matter::Fermionic => {
            for (name, archive) in pipeline::build_archives(model, &mut rng)? {
                let op = archive.fock_operator().expect("fermionic builds write operators");
                out.push(CheckRecord::below(format!("model/{}-parity", name.trim_end_matches(".txt")), odd_weight(&op), ctx.tolerances.exact));
            }
            if group == GroupId::U1 || group == GroupId::SU2 {
                let residual = elements.iter().map(|g| hopping_residual(group, g, HoppingWiring::Standard)).collect::<Result<Vec<_>, _>>()?;
                out.push(CheckRecord::below("model/tunneling-commutation", worst(residual), tol));
            }
        }
    }
    Ok(out)
}

/// Elements used when checking archives and contracted states.
pub fn check_elements(group: GroupId, ctx: &Context, stream: &str) -> Vec<GroupElement> {
    group.sample_with(ctx.samples.elements, &mut ctx.rng(stream))
}
