//! Turning a resolved [`Model`] into tensors, archives and lattice states.

use gauge_peps_core::fermion::{fiducial_su2, fiducial_u1, random_u1_params};
use gauge_peps_core::group::{GroupElement, GroupId};
use gauge_peps_core::lattice::{BosonicLattice, BosonicSite, FermionLattice, LatticeState, Layout};
use gauge_peps_core::peps::{random_link_params, random_vertex_params, LinkTensor, UnifiedTensor, VertexTensor, VirtualLeg};
use gauge_peps_core::peps::Orientation;
use gauge_peps_core::spaces::VertexSpace;
use rand::Rng;

use crate::archive::{Archive, Content};
use crate::config::{Matter, Model};
use crate::report::CheckRecord;
use crate::{CliError, CliResult};

/// `true` when building needs random numbers.
pub fn needs_rng(model: &Model) -> bool {
    model.alpha.is_none() || model.beta.is_none() || (model.matter == Matter::Fermionic && model.group == GroupId::U1)
}

fn legs(model: &Model) -> [VirtualLeg; 4] {
    [model.leg.clone(), model.leg.clone(), model.leg.clone(), model.leg.clone()]
}

fn vertex<R: Rng + ?Sized>(model: &Model, physical: &VertexSpace, rng: &mut R) -> CliResult<VertexTensor> {
    let legs = legs(model);
    let params = match &model.alpha {
        Some(alpha) => alpha.clone(),
        None => random_vertex_params(physical, &legs, model.order, rng),
    };
    Ok(VertexTensor::build(physical, &legs, model.order, &params)?)
}

fn link<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> CliResult<LinkTensor> {
    let params = match &model.beta {
        Some(beta) => beta.clone(),
        None => random_link_params(&model.link, &model.leg, rng),
    };
    Ok(LinkTensor::build(&model.link, &model.leg, &params)?)
}

/// One vertex tensor, its two link tensors and their union.
pub struct SiteTensors {
    pub vertex: VertexTensor,
    pub side: LinkTensor,
    pub top: LinkTensor,
    pub unified: UnifiedTensor,
}

pub fn site_tensors<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> CliResult<SiteTensors> {
    let vertex = vertex(model, &model.physical, rng)?;
    let side = link(model, rng)?;
    let top = link(model, rng)?;
    let unified = UnifiedTensor::unify(&vertex, &side, &top)?;
    Ok(SiteTensors { vertex, side, top, unified })
}

fn fermion_lattice<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> CliResult<FermionLattice> {
    let geometry = model.geometry;
    let lattice = match model.group {
        GroupId::U1 => FermionLattice::random_u1(geometry, rng)?,
        GroupId::SU2 => match &model.alpha {
            Some(_) => {
                let tensors = (0..geometry.site_count()).map(|_| vertex(model, &model.physical, rng)).collect::<CliResult<Vec<_>>>()?;
                FermionLattice::su2(geometry, tensors, model.tau)?
            }
            None => FermionLattice::random_su2(geometry, model.tau, rng)?,
        },
        other => return Err(CliError::Config(format!("fermionic matter needs U1 or SU2, not {}", other.name()))),
    };
    let lattice = lattice.with_bond_weighting(model.weighting);
    Ok(if model.gauged { lattice.gauged(model.link.clone())? } else { lattice })
}

/// Archives written by `build`, with their file names.
pub fn build_archives<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> CliResult<Vec<(String, Archive)>> {
    match model.matter {
        Matter::Bosonic => {
            let t = site_tensors(model, rng)?;
            let legs = legs(model);
            Ok(vec![
                ("vertex.txt".into(), Archive::tensor(Content::Vertex { physical: model.physical.clone(), legs: legs.clone() }, t.vertex.amplitudes().clone())),
                ("link.txt".into(), Archive::tensor(Content::Link { physical: model.link.clone(), leg: model.leg.clone() }, t.side.amplitudes().clone())),
                ("unified.txt".into(), Archive::tensor(Content::Unified { physical: model.physical.clone(), side: model.link.clone(), top: model.link.clone(), legs }, t.unified.amplitudes().clone())),
            ])
        }
        Matter::Fermionic => {
            let lattice = fermion_lattice(model, rng)?;
            let modes = lattice.modes()?;
            let mut out = Vec::new();
            for site in 0..model.geometry.site_count() {
                let op = match model.group {
                    GroupId::U1 => {
                        let staggering = model.geometry.staggering(site);
                        fiducial_u1(&modes, site, staggering, &random_u1_params(staggering, rng))?
                    }
                    _ => fiducial_su2(&modes, site, &vertex(model, &model.physical, rng)?, &model.tau)?,
                };
                out.push((format!("operator-{site}.txt"), Archive::operator(model.group, site, modes.clone(), &op.operator)));
            }
            Ok(out)
        }
    }
}

/// The contracted lattice state with its layout.
pub fn contract<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> CliResult<(Layout, LatticeState)> {
    match model.matter {
        Matter::Bosonic => {
            let geometry = model.geometry;
            let mut sites = Vec::with_capacity(geometry.site_count());
            for s in 0..geometry.site_count() {
                let vertex = vertex(model, model.physical_at(s), rng)?;
                let side = geometry.forward(s, Orientation::Horizontal).map(|_| link(model, rng)).transpose()?;
                let top = geometry.forward(s, Orientation::Vertical).map(|_| link(model, rng)).transpose()?;
                sites.push(BosonicSite { vertex, side, top });
            }
            let lattice = BosonicLattice::new(geometry, sites)?;
            let layout = lattice.layout()?;
            let state = lattice.contract()?;
            Ok((layout, state))
        }
        Matter::Fermionic => {
            let lattice = fermion_lattice(model, rng)?;
            let layout = lattice.layout()?;
            let state = lattice.contract()?;
            Ok((layout, state))
        }
    }
}

/// Local and global invariance of a contracted state, plus the generator
/// law for Lie groups.
pub fn state_checks(layout: &Layout, state: &LatticeState, elements: &[GroupElement], tolerance: f64) -> CliResult<Vec<CheckRecord>> {
    let sites = layout.geometry().site_count();
    let mut local: f64 = 0.0;
    let mut global: f64 = 0.0;
    for g in elements {
        if layout.is_gauged() {
            for x in 0..sites {
                local = local.max(state.invariance_residual(&layout.gauss_operator(x, g)?));
            }
        }
        global = global.max(state.invariance_residual(&layout.global_operator(g)?));
    }
    let mut out = vec![CheckRecord::below("contract/global-invariance", global, tolerance)];
    if layout.is_gauged() {
        out.push(CheckRecord::below("contract/local-invariance", local, tolerance));
        let group = layout.link_spaces()[0].group();
        if !group.is_finite() {
            let mut worst: f64 = 0.0;
            for x in 0..sites {
                for generator in layout.gauss_generators(x)? {
                    worst = worst.max(state.annihilation_residual(&generator));
                }
            }
            out.push(CheckRecord::below("contract/generator-law", worst, tolerance));
        }
    }
    Ok(out)
}
