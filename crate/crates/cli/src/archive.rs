//! Plain-text tensor archives.
//!
//! An archive is a header of `key value...` lines, a `---` separator and one
//! line per nonzero entry: the index tuple followed by the real and imaginary
//! parts with 17 significant digits. Entries are sorted, so writing a parsed
//! archive reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gauge_peps_core::fermion::{FockOperator, FockTerm, Ladder, ModeSet};
use gauge_peps_core::group::{GroupElement, GroupId, IrrepLabel};
use gauge_peps_core::lattice::{Boundary, Geometry, LatticeState, Layout, SiteRep};
use gauge_peps_core::linalg::{C64, ZERO};
use gauge_peps_core::peps::{link_gauss_residuals, unified_gauss_residuals, vertex_gauss_residual, VirtualLeg};
use gauge_peps_core::spaces::{LinkSpace, VertexSpace};
use gauge_peps_core::tensor::SparseTensor;

use crate::report::CheckRecord;
use crate::{CliError, CliResult};

pub const FORMAT: &str = "gauge-peps-archive 1";
pub const BASIS: &str = "irrep-major m-ascending n-ascending degeneracy-fastest";

/// What the entries describe.
#[derive(Clone, Debug, PartialEq)]
pub enum Content {
    Vertex { physical: VertexSpace, legs: [VirtualLeg; 4] },
    Link { physical: LinkSpace, leg: VirtualLeg },
    Unified { physical: VertexSpace, side: LinkSpace, top: LinkSpace, legs: [VirtualLeg; 4] },
    State { geometry: Geometry, sites: Vec<SiteRep>, links: Vec<LinkSpace> },
    Operator { group: GroupId, site: usize, modes: ModeSet },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Tensor(SparseTensor),
    Terms(BTreeMap<Vec<Ladder>, C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    pub group: GroupId,
    pub content: Content,
    pub payload: Payload,
}

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Archive(format!("line {line}: {msg}"))
}

fn labels_text(labels: &[IrrepLabel]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

fn leg_text(leg: &VirtualLeg) -> String {
    leg.labels().iter().map(|&l| format!("{l}:{}", leg.degeneracy(l))).collect::<Vec<_>>().join(" ")
}

fn complex_text(v: C64) -> String {
    format!("{:.16e} {:.16e}", v.re, v.im)
}

fn ladder_text(ops: &[Ladder]) -> String {
    if ops.is_empty() {
        return "1".into();
    }
    ops.iter()
        .map(|op| match op {
            Ladder::Create(k) => format!("+{k}"),
            Ladder::Annihilate(k) => format!("-{k}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn role_name(role: gauge_peps_core::fermion::ModeRole) -> &'static str {
    use gauge_peps_core::fermion::ModeRole::*;
    match role {
        Physical => "p",
        Left => "l",
        Right => "r",
        Up => "u",
        Down => "d",
    }
}

pub fn parse_group(text: &str) -> CliResult<GroupId> {
    match text {
        "U1" => Ok(GroupId::U1),
        "S3" => Ok(GroupId::SymmetricS3),
        "SU2" => Ok(GroupId::SU2),
        _ => {
            let n = text.strip_prefix('Z').and_then(|n| n.parse::<u32>().ok()).ok_or_else(|| CliError::Archive(format!("unknown group `{text}`")))?;
            Ok(GroupId::cyclic(n)?)
        }
    }
}

impl Archive {
    pub fn tensor(content: Content, tensor: SparseTensor) -> Self {
        Self { group: content.group(), content, payload: Payload::Tensor(tensor) }
    }

    pub fn state(geometry: Geometry, layout: &Layout, state: &LatticeState) -> Self {
        let dims = state.dims().to_vec();
        let mut tensor = SparseTensor::new(dims);
        for (flat, &v) in state.amplitudes().iter().enumerate() {
            if v != ZERO {
                let index = tensor.unflatten(flat);
                tensor.set(index, v);
            }
        }
        let content = Content::State { geometry, sites: layout.sites().to_vec(), links: layout.link_spaces().to_vec() };
        Self::tensor(content, tensor)
    }

    pub fn operator(group: GroupId, site: usize, modes: ModeSet, op: &FockOperator) -> Self {
        let mut terms: BTreeMap<Vec<Ladder>, C64> = BTreeMap::new();
        for t in op.terms() {
            *terms.entry(t.ops.clone()).or_insert(ZERO) += t.coeff;
        }
        Self { group, content: Content::Operator { group, site, modes }, payload: Payload::Terms(terms) }
    }

    pub fn kind(&self) -> &'static str {
        match self.content {
            Content::Vertex { .. } => "vertex",
            Content::Link { .. } => "link",
            Content::Unified { .. } => "unified",
            Content::State { .. } => "state",
            Content::Operator { .. } => "operator",
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT}");
        let _ = writeln!(out, "kind {}", self.kind());
        let _ = writeln!(out, "group {}", self.group.name());
        let _ = writeln!(out, "basis {BASIS}");
        match &self.content {
            Content::Vertex { physical, legs } => {
                let _ = writeln!(out, "physical {}", labels_text(&physical.labels()));
                for (name, leg) in ["l", "r", "u", "d"].iter().zip(legs) {
                    let _ = writeln!(out, "leg {name} {}", leg_text(leg));
                }
                let _ = writeln!(out, "axes p l r u d");
            }
            Content::Link { physical, leg } => {
                let _ = writeln!(out, "link {}", labels_text(&physical.labels()));
                let _ = writeln!(out, "leg {}", leg_text(leg));
                let _ = writeln!(out, "axes p in out");
            }
            Content::Unified { physical, side, top, legs } => {
                let _ = writeln!(out, "physical {}", labels_text(&physical.labels()));
                let _ = writeln!(out, "side {}", labels_text(&side.labels()));
                let _ = writeln!(out, "top {}", labels_text(&top.labels()));
                for (name, leg) in ["l", "r", "u", "d"].iter().zip(legs) {
                    let _ = writeln!(out, "leg {name} {}", leg_text(leg));
                }
                let _ = writeln!(out, "axes p s t l r u d");
            }
            Content::State { geometry, sites, links } => {
                let boundary = match geometry.boundary() {
                    Boundary::Open => "open",
                    Boundary::Periodic => "periodic",
                };
                let _ = writeln!(out, "geometry {} {} {boundary}", geometry.width(), geometry.height());
                for site in sites {
                    match site {
                        SiteRep::Boson(space) => {
                            let _ = writeln!(out, "site boson {}", labels_text(&space.labels()));
                        }
                        SiteRep::Fermion { label, .. } => {
                            let _ = writeln!(out, "site fermion {label}");
                        }
                    }
                }
                for link in links {
                    let _ = writeln!(out, "link {}", labels_text(&link.labels()));
                }
                let _ = writeln!(out, "axes sites links");
            }
            Content::Operator { site, modes, .. } => {
                let _ = writeln!(out, "site {site}");
                for (k, mode) in modes.modes().iter().enumerate() {
                    let _ = writeln!(out, "mode {k} {} {} {} {}", mode.site, role_name(mode.role), mode.irrep, mode.m);
                }
            }
        }
        match &self.payload {
            Payload::Tensor(t) => {
                let _ = writeln!(out, "dims {}", t.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "));
                out.push_str("---\n");
                for (index, &v) in t.iter() {
                    let idx = index.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
                    let _ = writeln!(out, "{idx} {}", complex_text(v));
                }
            }
            Payload::Terms(terms) => {
                out.push_str("---\n");
                for (ops, &v) in terms {
                    let _ = writeln!(out, "{} {}", ladder_text(ops), complex_text(v));
                }
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Archive(msg) => CliError::Archive(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        match lines.next() {
            Some((_, FORMAT)) => {}
            _ => return Err(err(1, format!("expected `{FORMAT}`"))),
        }
        let mut header: Vec<(usize, String, Vec<String>)> = Vec::new();
        for (n, line) in lines.by_ref() {
            if line == "---" {
                break;
            }
            let mut words = line.split_whitespace().map(str::to_string);
            let key = words.next().ok_or_else(|| err(n, "empty header line"))?;
            header.push((n, key, words.collect()));
        }
        let field = |key: &str| header.iter().find(|(_, k, _)| k == key).ok_or_else(|| CliError::Archive(format!("missing header `{key}`")));
        let single = |key: &str| -> CliResult<(usize, String)> {
            let (n, _, v) = field(key)?;
            match v.as_slice() {
                [one] => Ok((*n, one.clone())),
                _ => Err(err(*n, format!("`{key}` takes one value"))),
            }
        };
        let kind = single("kind")?.1;
        let (gline, gname) = single("group")?;
        let group = parse_group(&gname).map_err(|e| err(gline, e))?;
        let basis = field("basis")?;
        if basis.2.join(" ") != BASIS {
            return Err(err(basis.0, "unsupported basis ordering"));
        }
        let parse_labels = |n: usize, words: &[String]| -> CliResult<Vec<IrrepLabel>> { words.iter().map(|w| group.parse_label(w).map_err(|e| err(n, e))).collect() };
        let parse_leg = |n: usize, words: &[String]| -> CliResult<VirtualLeg> {
            let pairs = words
                .iter()
                .map(|w| {
                    let (l, d) = w.split_once(':').ok_or_else(|| err(n, format!("leg entry `{w}` is not label:degeneracy")))?;
                    Ok((group.parse_label(l).map_err(|e| err(n, e))?, d.parse::<usize>().map_err(|e| err(n, e))?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            VirtualLeg::with_degeneracy(group, &pairs).map_err(|e| err(n, e))
        };
        let four_legs = || -> CliResult<[VirtualLeg; 4]> {
            let legs: Vec<_> = header.iter().filter(|(_, k, _)| k == "leg").collect();
            if legs.len() != 4 {
                return Err(CliError::Archive("expected four `leg` lines".into()));
            }
            let mut out = Vec::new();
            for ((n, _, words), name) in legs.into_iter().zip(["l", "r", "u", "d"]) {
                if words.first().map(String::as_str) != Some(name) {
                    return Err(err(*n, format!("expected leg `{name}`")));
                }
                out.push(parse_leg(*n, &words[1..])?);
            }
            Ok(out.try_into().expect("four legs"))
        };
        let vertex_space = |key: &str| -> CliResult<VertexSpace> {
            let (n, _, words) = field(key)?;
            VertexSpace::new(group, &parse_labels(*n, words)?).map_err(|e| err(*n, e))
        };
        let link_space = |key: &str| -> CliResult<LinkSpace> {
            let (n, _, words) = field(key)?;
            LinkSpace::new(group, &parse_labels(*n, words)?).map_err(|e| err(*n, e))
        };

        let content = match kind.as_str() {
            "vertex" => Content::Vertex { physical: vertex_space("physical")?, legs: four_legs()? },
            "link" => {
                let (n, _, words) = field("leg")?;
                Content::Link { physical: link_space("link")?, leg: parse_leg(*n, words)? }
            }
            "unified" => Content::Unified { physical: vertex_space("physical")?, side: link_space("side")?, top: link_space("top")?, legs: four_legs()? },
            "state" => {
                let (n, _, words) = field("geometry")?;
                let geometry = match words.as_slice() {
                    [w, h, b] => {
                        let w = w.parse().map_err(|e| err(*n, e))?;
                        let h = h.parse().map_err(|e| err(*n, e))?;
                        let b = match b.as_str() {
                            "open" => Boundary::Open,
                            "periodic" => Boundary::Periodic,
                            other => return Err(err(*n, format!("unknown boundary `{other}`"))),
                        };
                        Geometry::new(w, h, b).map_err(|e| err(*n, e))?
                    }
                    _ => return Err(err(*n, "geometry takes width, height and boundary")),
                };
                let mut sites = Vec::new();
                let mut links = Vec::new();
                for (n, key, words) in &header {
                    match (key.as_str(), words.split_first()) {
                        ("site", Some((k, rest))) if k == "boson" => sites.push(SiteRep::Boson(VertexSpace::new(group, &parse_labels(*n, rest)?).map_err(|e| err(*n, e))?)),
                        ("site", Some((k, [label]))) if k == "fermion" => sites.push(SiteRep::Fermion { group, label: group.parse_label(label).map_err(|e| err(*n, e))? }),
                        ("site", _) => return Err(err(*n, "site is `boson <labels>` or `fermion <label>`")),
                        ("link", _) => links.push(LinkSpace::new(group, &parse_labels(*n, words)?).map_err(|e| err(*n, e))?),
                        _ => {}
                    }
                }
                Content::State { geometry, sites, links }
            }
            "operator" => {
                let (n, site) = single("site")?;
                let site = site.parse().map_err(|e| err(n, e))?;
                let mut modes = ModeSet::new();
                let mut rebuilt = Vec::new();
                for (n, key, words) in &header {
                    if key == "mode" {
                        rebuilt.push((*n, words.clone()));
                    }
                }
                // Rebuild from the recorded sites and leg irreps, then insist the
                // table matches exactly.
                let sites: std::collections::BTreeSet<usize> = rebuilt.iter().filter_map(|(_, w)| w.get(1).and_then(|s| s.parse().ok())).collect();
                let leg_spins: std::collections::BTreeSet<IrrepLabel> =
                    rebuilt.iter().filter(|(_, w)| w.get(2).map(String::as_str) == Some("l")).filter_map(|(_, w)| w.get(3).and_then(|l| group.parse_label(l).ok())).collect();
                for s in sites {
                    match group {
                        GroupId::U1 => modes.push_u1_site(s)?,
                        GroupId::SU2 => modes.push_su2_site(s, &leg_spins.iter().filter_map(|l| l.spin()).collect::<Vec<_>>())?,
                        _ => return Err(CliError::Archive("operator archives exist for U1 and SU2 only".into())),
                    }
                }
                let expected: Vec<String> = modes.modes().iter().enumerate().map(|(k, m)| format!("{k} {} {} {} {}", m.site, role_name(m.role), m.irrep, m.m)).collect();
                let found: Vec<String> = rebuilt.iter().map(|(_, w)| w.join(" ")).collect();
                if expected != found {
                    return Err(CliError::Archive("mode table does not describe a known layout".into()));
                }
                Content::Operator { group, site, modes }
            }
            other => return Err(CliError::Archive(format!("unknown archive kind `{other}`"))),
        };

        let parse_value = |n: usize, re: &str, im: &str| -> CliResult<C64> { Ok(C64::new(re.parse().map_err(|e| err(n, e))?, im.parse().map_err(|e| err(n, e))?)) };
        let payload = if let Content::Operator { .. } = content {
            let mut terms = BTreeMap::new();
            for (n, line) in lines {
                let words: Vec<&str> = line.split_whitespace().collect();
                let [ops, re, im] = words.as_slice() else {
                    return Err(err(n, "expected `ops re im`"));
                };
                let ladders = if *ops == "1" {
                    Vec::new()
                } else {
                    ops.split(',')
                        .map(|t| {
                            let k = t[1..].parse::<usize>().map_err(|e| err(n, e))?;
                            match &t[..1] {
                                "+" => Ok(Ladder::Create(k)),
                                "-" => Ok(Ladder::Annihilate(k)),
                                _ => Err(err(n, format!("bad ladder `{t}`"))),
                            }
                        })
                        .collect::<CliResult<Vec<_>>>()?
                };
                if terms.insert(ladders, parse_value(n, re, im)?).is_some() {
                    return Err(err(n, "duplicate term"));
                }
            }
            Payload::Terms(terms)
        } else {
            let (n, _, words) = field("dims")?;
            let dims = words.iter().map(|w| w.parse::<usize>().map_err(|e| err(*n, e))).collect::<CliResult<Vec<_>>>()?;
            let expected = content.dims();
            if dims != expected {
                return Err(err(*n, format!("dims {dims:?} do not match the spaces {expected:?}")));
            }
            let mut tensor = SparseTensor::new(dims.clone());
            for (n, line) in lines {
                let words: Vec<&str> = line.split_whitespace().collect();
                if words.len() != dims.len() + 2 {
                    return Err(err(n, format!("expected {} indices and a complex value", dims.len())));
                }
                let index = words[..dims.len()].iter().map(|w| w.parse::<usize>().map_err(|e| err(n, e))).collect::<CliResult<Vec<_>>>()?;
                if index.iter().zip(&dims).any(|(i, d)| i >= d) {
                    return Err(err(n, "index out of range"));
                }
                tensor.set(index, parse_value(n, words[dims.len()], words[dims.len() + 1])?);
            }
            Payload::Tensor(tensor)
        };
        Ok(Self { group, content, payload })
    }

    /// Symmetry checks appropriate to the archive kind, over `elements`.
    pub fn checks(&self, elements: &[GroupElement], local: f64, global: f64) -> CliResult<Vec<CheckRecord>> {
        let max = |f: &dyn Fn(&GroupElement) -> f64| elements.iter().map(f).fold(0.0, f64::max);
        let tensor = || match &self.payload {
            Payload::Tensor(t) => t,
            Payload::Terms(_) => unreachable!("tensor content carries a tensor payload"),
        };
        Ok(match &self.content {
            Content::Vertex { physical, legs } => vec![CheckRecord::below("archive/vertex-gauss", max(&|g| vertex_gauss_residual(physical, legs, tensor(), g)), local)],
            Content::Link { physical, leg } => vec![
                CheckRecord::below("archive/link-gauss-in", max(&|g| link_gauss_residuals(physical, leg, tensor(), g).0), local),
                CheckRecord::below("archive/link-gauss-out", max(&|g| link_gauss_residuals(physical, leg, tensor(), g).1), local),
            ],
            Content::Unified { physical, side, top, legs } => ["vertex", "side", "top"]
                .iter()
                .enumerate()
                .map(|(k, name)| CheckRecord::below(format!("archive/unified-gauss-{name}"), max(&|g| unified_gauss_residuals(physical, side, top, legs, tensor(), g)[k]), local))
                .collect(),
            Content::State { geometry, sites, links } => {
                let layout = Layout::new(*geometry, sites.clone(), links.clone())?;
                let state = LatticeState::new(tensor().dims().to_vec(), tensor().to_dense())?;
                let mut local_worst: f64 = 0.0;
                let mut global_worst: f64 = 0.0;
                for g in elements {
                    if layout.is_gauged() {
                        for x in 0..geometry.site_count() {
                            local_worst = local_worst.max(state.invariance_residual(&layout.gauss_operator(x, g)?));
                        }
                    }
                    global_worst = global_worst.max(state.invariance_residual(&layout.global_operator(g)?));
                }
                let mut out = vec![CheckRecord::below("archive/state-global-invariance", global_worst, global)];
                if layout.is_gauged() {
                    out.push(CheckRecord::below("archive/state-local-invariance", local_worst, global));
                }
                out
            }
            Content::Operator { .. } => {
                let Payload::Terms(terms) = &self.payload else { unreachable!("operator content carries terms") };
                let odd = terms.iter().filter(|(ops, _)| ops.len() % 2 == 1).map(|(_, v)| v.norm()).fold(0.0, f64::max);
                vec![CheckRecord::below("archive/operator-parity", odd, local)]
            }
        })
    }

    pub fn fock_operator(&self) -> Option<FockOperator> {
        match &self.payload {
            Payload::Terms(terms) => Some(FockOperator::from_terms(terms.iter().map(|(ops, &v)| FockTerm::new(v, ops.clone())).collect())),
            Payload::Tensor(_) => None,
        }
    }
}

impl Content {
    pub fn group(&self) -> GroupId {
        match self {
            Content::Vertex { physical, .. } | Content::Unified { physical, .. } => physical.group(),
            Content::Link { physical, .. } => physical.group(),
            Content::State { sites, links, .. } => links.first().map(LinkSpace::group).unwrap_or_else(|| match &sites[0] {
                SiteRep::Boson(space) => space.group(),
                SiteRep::Fermion { group, .. } => *group,
            }),
            Content::Operator { group, .. } => *group,
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            Content::Vertex { physical, legs } => std::iter::once(physical.dim()).chain(legs.iter().map(VirtualLeg::dim)).collect(),
            Content::Link { physical, leg } => vec![physical.dim(), leg.dim(), leg.dim()],
            Content::Unified { physical, side, top, legs } => [physical.dim(), side.dim(), top.dim()].into_iter().chain(legs.iter().map(VirtualLeg::dim)).collect(),
            Content::State { sites, links, .. } => sites.iter().map(SiteRep::dim).chain(links.iter().map(LinkSpace::dim)).collect(),
            Content::Operator { .. } => Vec::new(),
        }
    }
}
