//! Run configuration: a TOML document with every key optional except where a
//! randomized suite needs the seed.

use std::collections::BTreeMap;
use std::path::Path;

use gauge_peps_core::fermion::{BondWeighting, Tau};
use gauge_peps_core::group::{GroupId, IrrepLabel};
use gauge_peps_core::lattice::{Boundary, Geometry};
use gauge_peps_core::linalg::{CMatrix, C64};
use gauge_peps_core::peps::{FusionOrder, LinkParams, VertexKey, VertexParams, VirtualLeg};
use gauge_peps_core::spaces::{LinkSpace, VertexSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub group: GroupConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub parameters: Parameters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    #[serde(rename = "Z")]
    Cyclic,
    S3,
    U1,
    SU2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupConfig {
    pub kind: GroupKind,
    /// `N` for `Z_N`.
    pub order: Option<u32>,
    /// Matter irreps on every site, or on even sites when `physical_odd` is
    /// set.
    pub physical: Vec<String>,
    pub physical_odd: Option<Vec<String>>,
    /// Irreps kept on the links.
    pub links: Vec<String>,
    /// Virtual irreps with their degeneracies; the same leg is used on every
    /// bond.
    pub degeneracy: BTreeMap<String, usize>,
}

impl Default for GroupConfig {
    fn default() -> Self {
        Self {
            kind: GroupKind::SU2,
            order: None,
            physical: vec!["0".into(), "1/2".into()],
            physical_odd: None,
            links: vec!["0".into(), "1/2".into()],
            degeneracy: [("0".to_string(), 1), ("1/2".to_string(), 1)].into_iter().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matter {
    Bosonic,
    Fermionic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub width: usize,
    pub height: usize,
    pub boundary: BoundaryKind,
    pub matter: Matter,
    /// Fermionic lattices only: include the gauge field.
    pub gauged: bool,
    /// Fermionic lattices only: weight of the doubly occupied bond component.
    pub bond_weight: Option<[f64; 2]>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { width: 2, height: 2, boundary: BoundaryKind::Open, matter: Matter::Bosonic, gauged: true, bond_weight: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Tensor-level identities.
    pub local: f64,
    /// Identities on contracted lattice states.
    pub global: f64,
    /// Smallest residual a corrupted construction must show.
    pub control: f64,
    /// Exact fermionic algebra.
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { local: 1e-12, global: 1e-10, control: 1e-3, exact: 1e-14 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Random group elements per check.
    pub elements: usize,
    /// Random parameter draws per backend.
    pub draws: usize,
    /// Random pairs for the homomorphism check.
    pub pairs: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self { elements: 100, draws: 20, pairs: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaEntry {
    pub physical: String,
    pub inner: [String; 2],
    pub left: String,
    pub right: String,
    pub up: String,
    pub down: String,
    #[serde(default)]
    pub degeneracy: [usize; 4],
    pub value: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaEntry {
    pub irrep: String,
    /// Rows of `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    pub order: String,
    /// Vertex parameters; drawn at random when empty.
    #[serde(default)]
    pub alpha: Vec<AlphaEntry>,
    /// Link parameters; drawn at random when empty.
    #[serde(default)]
    pub beta: Vec<BetaEntry>,
    /// `τ` for `p, l, r, u, d` as `[re, im]` pairs.
    #[serde(default)]
    pub tau: Option<[[f64; 2]; 5]>,
}

impl Default for Parameters {
    fn default() -> Self {
        Self { order: FusionOrder::LeftDownFirst.name().into(), alpha: Vec::new(), beta: Vec::new(), tau: None }
    }
}

/// A configuration together with the bytes it was read from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { config, hash: digest(text.as_bytes()) })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The built-in defaults, hashed through their canonical TOML form.
    pub fn defaults() -> Self {
        let config = RunConfig::default();
        let text = toml::to_string(&config).expect("defaults serialize");
        Self { config, hash: digest(text.as_bytes()) }
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn cfg_err(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {e}"))
}

/// Everything the constructions need, resolved against the group.
#[derive(Clone, Debug)]
pub struct Model {
    pub group: GroupId,
    pub physical: VertexSpace,
    pub physical_odd: Option<VertexSpace>,
    pub leg: VirtualLeg,
    pub link: LinkSpace,
    pub order: FusionOrder,
    pub alpha: Option<VertexParams>,
    pub beta: Option<LinkParams>,
    pub tau: Tau,
    pub geometry: Geometry,
    pub matter: Matter,
    pub gauged: bool,
    pub weighting: BondWeighting,
}

impl RunConfig {
    pub fn group_id(&self) -> Result<GroupId, CliError> {
        match self.group.kind {
            GroupKind::Cyclic => {
                let n = self.group.order.ok_or_else(|| cfg_err("group.order", "required for kind = \"Z\""))?;
                GroupId::cyclic(n).map_err(|e| cfg_err("group.order", e))
            }
            GroupKind::S3 => Ok(GroupId::SymmetricS3),
            GroupKind::U1 => Ok(GroupId::U1),
            GroupKind::SU2 => Ok(GroupId::SU2),
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let group = self.group_id()?;
        let labels = |key: &str, list: &[String]| -> Result<Vec<IrrepLabel>, CliError> { list.iter().map(|s| group.parse_label(s).map_err(|e| cfg_err(key, e))).collect() };
        let physical = VertexSpace::new(group, &labels("group.physical", &self.group.physical)?).map_err(|e| cfg_err("group.physical", e))?;
        let physical_odd = match &self.group.physical_odd {
            Some(list) => Some(VertexSpace::new(group, &labels("group.physical_odd", list)?).map_err(|e| cfg_err("group.physical_odd", e))?),
            None => None,
        };
        let link = LinkSpace::new(group, &labels("group.links", &self.group.links)?).map_err(|e| cfg_err("group.links", e))?;
        let degeneracy: Vec<(IrrepLabel, usize)> =
            self.group.degeneracy.iter().map(|(k, &d)| group.parse_label(k).map(|l| (l, d)).map_err(|e| cfg_err("group.degeneracy", e))).collect::<Result<_, _>>()?;
        let leg = VirtualLeg::with_degeneracy(group, &degeneracy).map_err(|e| cfg_err("group.degeneracy", e))?;
        let order = FusionOrder::ALL
            .into_iter()
            .find(|o| o.name() == self.parameters.order)
            .ok_or_else(|| cfg_err("parameters.order", format!("unknown fusion order `{}`", self.parameters.order)))?;

        let alpha = if self.parameters.alpha.is_empty() {
            None
        } else {
            let mut params = VertexParams::new();
            for (i, e) in self.parameters.alpha.iter().enumerate() {
                let key_name = format!("parameters.alpha[{i}]");
                let parse = |s: &String| group.parse_label(s).map_err(|err| cfg_err(&key_name, err));
                let key = VertexKey {
                    physical: parse(&e.physical)?,
                    inner1: parse(&e.inner[0])?,
                    inner2: parse(&e.inner[1])?,
                    left: parse(&e.left)?,
                    right: parse(&e.right)?,
                    up: parse(&e.up)?,
                    down: parse(&e.down)?,
                    degeneracy: e.degeneracy,
                };
                params.insert(key, C64::new(e.value[0], e.value[1]));
            }
            Some(params)
        };
        let beta = if self.parameters.beta.is_empty() {
            None
        } else {
            let mut params = LinkParams::new();
            for (i, e) in self.parameters.beta.iter().enumerate() {
                let key_name = format!("parameters.beta[{i}]");
                let label = group.parse_label(&e.irrep).map_err(|err| cfg_err(&key_name, err))?;
                let rows = e.matrix.len();
                if e.matrix.iter().any(|r| r.len() != rows) {
                    return Err(cfg_err(&key_name, "matrix must be square"));
                }
                params.insert(label, CMatrix::from_fn(rows, rows, |r, c| C64::new(e.matrix[r][c][0], e.matrix[r][c][1])));
            }
            Some(params)
        };
        let tau = self.parameters.tau.map(|t| t.map(|[re, im]| C64::new(re, im))).unwrap_or([C64::new(0.0, 0.0); 5]);
        let boundary = match self.lattice.boundary {
            BoundaryKind::Open => Boundary::Open,
            BoundaryKind::Periodic => Boundary::Periodic,
        };
        let geometry = Geometry::new(self.lattice.width, self.lattice.height, boundary).map_err(|e| cfg_err("lattice", e))?;
        let weighting = match self.lattice.bond_weight {
            Some([re, im]) => BondWeighting::Doubly(C64::new(re, im)),
            None => BondWeighting::Unweighted,
        };
        Ok(Model { group, physical, physical_odd, leg, link, order, alpha, beta, tau, geometry, matter: self.lattice.matter, gauged: self.lattice.gauged, weighting })
    }
}

impl Model {
    /// Matter space of a site, honouring the staggered layout.
    pub fn physical_at(&self, site: usize) -> &VertexSpace {
        match (&self.physical_odd, self.geometry.staggering(site)) {
            (Some(odd), -1) => odd,
            _ => &self.physical,
        }
    }
}
