//! Experiment configuration files (TOML).
//!
//! ```toml
//! kind = "flow"
//! seed = 7
//! output = "out/flow"
//!
//! [field]
//! expr = "z1*cj(z1)"
//! dim = 1
//!
//! [flow]
//! x0 = [[3.0, 0.0]]
//! ```

use crate::error::{Error, Result};
use crate::expr::{Domain, PotentialField};
use crate::flow::FlowConfig;
use crate::solve::MultistartConfig;
use crate::symmetry::ActionSpec;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

pub const DEFAULT_OUTPUT: &str = "pshlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CheckPsh,
    Flow,
    Degree,
    Fibers,
    Average,
    OrbitDim,
    Confine,
    Verify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CheckPsh => "check-psh",
            ExperimentKind::Flow => "flow",
            ExperimentKind::Degree => "degree",
            ExperimentKind::Fibers => "fibers",
            ExperimentKind::Average => "average",
            ExperimentKind::OrbitDim => "orbit-dim",
            ExperimentKind::Confine => "confine",
            ExperimentKind::Verify => "verify",
        }
    }

    /// Section holding the kind-specific parameters.
    fn section(self) -> Option<&'static str> {
        match self {
            ExperimentKind::CheckPsh => Some("psh"),
            ExperimentKind::Flow => Some("flow"),
            ExperimentKind::Degree => Some("degree"),
            ExperimentKind::Fibers => Some("fibers"),
            ExperimentKind::Average => Some("average"),
            ExperimentKind::OrbitDim => Some("orbit"),
            ExperimentKind::Confine => Some("confine"),
            ExperimentKind::Verify => None,
        }
    }

    fn needs_field(self) -> bool {
        !matches!(self, ExperimentKind::OrbitDim | ExperimentKind::Verify)
    }

    fn needs_action(self) -> bool {
        matches!(
            self,
            ExperimentKind::Average | ExperimentKind::OrbitDim | ExperimentKind::Confine
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub expr: String,
    pub dim: usize,
    /// Restrict the domain to the ball of this radius.
    pub radius: Option<f64>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<PotentialField> {
        let f = PotentialField::validated(&self.expr, self.dim).map_err(|e| Error::Config {
            path: "field.expr".into(),
            msg: e.to_string(),
        })?;
        Ok(match self.radius {
            Some(r) => f.with_domain(Domain::Ball(r)),
            None => f,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PshParams {
    pub radius: f64,
    pub count: usize,
    pub epsilon: f64,
}

impl Default for PshParams {
    fn default() -> Self {
        PshParams {
            radius: 1.0,
            count: 1000,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeParams {
    pub levels: Vec<f64>,
    pub targets: usize,
    pub seed_level: u32,
    pub area_level: u32,
    pub homotopy_points: usize,
    pub homotopy_s: usize,
    pub level_directions: usize,
}

impl Default for DegreeParams {
    fn default() -> Self {
        DegreeParams {
            levels: vec![1.0],
            targets: 5,
            seed_level: 2,
            area_level: 4,
            homotopy_points: 1000,
            homotopy_s: 11,
            level_directions: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AverageParams {
    /// Node count per circle factor, or `[nα, nβ, nγ]` for SU(2).
    pub nodes: Option<Vec<usize>>,
    pub samples: usize,
}

impl Default for AverageParams {
    fn default() -> Self {
        AverageParams {
            nodes: None,
            samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitParams {
    /// Explicit points; when empty, `samples` seeded points in the ball.
    pub points: Vec<Vec<[f64; 2]>>,
    pub samples: usize,
    pub radius: f64,
}

impl Default for OrbitParams {
    fn default() -> Self {
        OrbitParams {
            points: Vec::new(),
            samples: 32,
            radius: 2.0,
        }
    }
}

/// A parsed and validated experiment.
#[derive(Debug, Clone)]
pub enum Experiment {
    CheckPsh(PshParams),
    Flow {
        x0: Vec<Complex64>,
        config: FlowConfig,
    },
    Degree(DegreeParams),
    Fibers {
        targets: Vec<Vec<Complex64>>,
        search: MultistartConfig,
    },
    Average(AverageParams),
    OrbitDim(OrbitParams),
    Confine(MultistartConfig),
    Verify,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output: PathBuf,
    pub field: Option<FieldSpec>,
    pub action: Option<ActionSpec>,
    pub experiment: Experiment,
    /// Verbatim text the configuration was read from.
    pub source: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            path: "<root>".into(),
            msg: e.message().to_string(),
        })?;
        let kind: ExperimentKind = take_required(&mut root, "kind", "")?;
        let seed: u64 = take_required(&mut root, "seed", "")?;
        let output = take_optional::<PathBuf>(&mut root, "output", "")?
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
        let field: Option<FieldSpec> = take_optional(&mut root, "field", "")?;
        let action: Option<ActionSpec> = take_optional(&mut root, "action", "")?;
        if kind.needs_field() && field.is_none() {
            return Err(missing("field"));
        }
        if kind.needs_action() && action.is_none() {
            return Err(missing("action"));
        }
        if let Some(f) = &field {
            if f.dim == 0 {
                return Err(config_err("field.dim", "must be at least 1"));
            }
            if let Some(r) = f.radius {
                if !(r > 0.0) {
                    return Err(config_err("field.radius", "must be positive"));
                }
            }
        }

        let section = kind.section();
        let mut params = match section {
            Some(name) => match root.remove(name) {
                Some(Value::Table(t)) => t,
                Some(_) => return Err(config_err(name, "must be a table")),
                None => Table::new(),
            },
            None => Table::new(),
        };
        if let Some((key, _)) = root.iter().next() {
            return Err(config_err(key, "unknown key"));
        }
        let prefix = section.unwrap_or("");
        let experiment = match kind {
            ExperimentKind::CheckPsh => {
                let p: PshParams = table_into(params, prefix)?;
                if p.count < crate::geometry::BallSampler::MIN_COUNT {
                    return Err(config_err(
                        "psh.count",
                        &format!(
                            "must be at least {}",
                            crate::geometry::BallSampler::MIN_COUNT
                        ),
                    ));
                }
                if !(p.radius > 0.0) {
                    return Err(config_err("psh.radius", "must be positive"));
                }
                Experiment::CheckPsh(p)
            }
            ExperimentKind::Flow => {
                let x0: Vec<[f64; 2]> = take_required(&mut params, "x0", prefix)?;
                let config: FlowConfig = table_into(params, prefix)?;
                config.validate()?;
                let dim = field.as_ref().map_or(0, |f| f.dim);
                if x0.len() != dim {
                    return Err(config_err(
                        "flow.x0",
                        &format!("expected {dim} coordinates, got {}", x0.len()),
                    ));
                }
                Experiment::Flow {
                    x0: complexify(&x0),
                    config,
                }
            }
            ExperimentKind::Degree => {
                let p: DegreeParams = table_into(params, prefix)?;
                if p.levels.is_empty() {
                    return Err(config_err("degree.levels", "needs at least one level"));
                }
                if p.targets == 0 {
                    return Err(config_err("degree.targets", "must be at least 1"));
                }
                if p.homotopy_s < 2 {
                    return Err(config_err("degree.homotopy_s", "must be at least 2"));
                }
                if field.as_ref().map_or(0, |f| f.dim) != 2 {
                    return Err(config_err("field.dim", "degree experiments need dim = 2"));
                }
                Experiment::Degree(p)
            }
            ExperimentKind::Fibers => {
                let targets: Vec<Vec<[f64; 2]>> = take_required(&mut params, "targets", prefix)?;
                let search = multistart_params(params, prefix, seed)?;
                if targets.is_empty() {
                    return Err(config_err("fibers.targets", "needs at least one target"));
                }
                for (i, t) in targets.iter().enumerate() {
                    if t.len() != 2 {
                        return Err(config_err(
                            &format!("fibers.targets[{i}]"),
                            "targets live in C^2",
                        ));
                    }
                }
                Experiment::Fibers {
                    targets: targets.iter().map(|t| complexify(t)).collect(),
                    search,
                }
            }
            ExperimentKind::Average => {
                let p: AverageParams = table_into(params, prefix)?;
                if p.samples == 0 {
                    return Err(config_err("average.samples", "must be at least 1"));
                }
                Experiment::Average(p)
            }
            ExperimentKind::OrbitDim => {
                let p: OrbitParams = table_into(params, prefix)?;
                if p.points.is_empty() && p.samples == 0 {
                    return Err(config_err(
                        "orbit.samples",
                        "must be at least 1 without points",
                    ));
                }
                Experiment::OrbitDim(p)
            }
            ExperimentKind::Confine => {
                Experiment::Confine(multistart_params(params, prefix, seed)?)
            }
            ExperimentKind::Verify => Experiment::Verify,
        };
        Ok(ExperimentConfig {
            kind,
            seed,
            output,
            field,
            action,
            experiment,
            source: text.to_string(),
        })
    }

    /// SHA-256 of the configuration text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.source.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn multistart_params(mut params: Table, prefix: &str, seed: u64) -> Result<MultistartConfig> {
    if params.remove("seed").is_some() {
        return Err(config_err(
            &format!("{prefix}.seed"),
            "randomness comes from the top-level seed",
        ));
    }
    let mut cfg: MultistartConfig = table_into(params, prefix)?;
    cfg.seed = seed;
    if cfg.starts == 0 {
        return Err(config_err(
            &format!("{prefix}.starts"),
            "must be at least 1",
        ));
    }
    Ok(cfg)
}

fn complexify(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|z| Complex64::new(z[0], z[1])).collect()
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn config_err(path: &str, msg: &str) -> Error {
    Error::Config {
        path: path.to_string(),
        msg: msg.to_string(),
    }
}

fn missing(path: &str) -> Error {
    config_err(path, "required but missing")
}

fn take_optional<T: DeserializeOwned>(t: &mut Table, key: &str, prefix: &str) -> Result<Option<T>> {
    match t.remove(key) {
        None => Ok(None),
        Some(v) => v
            .try_into()
            .map(Some)
            .map_err(|e: toml::de::Error| config_err(&join(prefix, key), e.message())),
    }
}

fn take_required<T: DeserializeOwned>(t: &mut Table, key: &str, prefix: &str) -> Result<T> {
    take_optional(t, key, prefix)?.ok_or_else(|| missing(&join(prefix, key)))
}

fn table_into<T: DeserializeOwned>(t: Table, prefix: &str) -> Result<T> {
    Value::Table(t)
        .try_into()
        .map_err(|e: toml::de::Error| config_err(prefix, e.message()))
}
