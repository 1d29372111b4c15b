//! Machine-readable check reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// The residual must stay below the tolerance.
    Below,
    /// The residual must exceed the tolerance (negative controls).
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl CheckRecord {
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, relation: Relation::Below, pass: residual < tolerance }
    }

    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, relation: Relation::Above, pass: residual > tolerance }
    }

    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::Below => "<",
            Relation::Above => ">",
        };
        format!("{} {} residual={:.3e} {op} {:.1e}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.residual, self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self { package: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into(), os: std::env::consts::OS.into(), arch: std::env::consts::ARCH.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl Report {
    pub fn new(suite: impl Into<String>, seed: Option<u64>, config_hash: impl Into<String>, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Self { suite: suite.into(), seed, config_hash: config_hash.into(), environment: Environment::current(), checks, passed }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn write(&self, dir: &Path) -> CliResult<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("report-{}.json", self.suite));
        std::fs::write(&path, self.to_json())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Archive(format!("{}: {e}", path.display())))
    }

    /// Every `report-*.json` in `dir`, by file name.
    pub fn collect(dir: &Path) -> CliResult<Vec<Self>> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("report-") && n.ends_with(".json")))
            .collect();
        paths.sort();
        paths.iter().map(|p| Self::read(p)).collect()
    }
}
