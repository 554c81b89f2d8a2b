//! Configuration file schema, built-in presets and resolution of defaults.
//!
//! ```json
//! {
//!   "system": {
//!     "dimension": 1,
//!     "set": {"kind": "intervals", "arcs": [[0.0, 0.3]]},
//!     "v": [0.41421356237309515]
//!   },
//!   "experiment": {"kind": "twopoint", "name": "run1", "horizon": 100000, "seeds": [0, 1]},
//!   "output": {"dir": "out"}
//! }
//! ```
//!
//! The set descriptor accepts `intervals` (`arcs`: `[a, b]` pairs denoting
//! `[a, b)`, wrapping when `a > b`), `boxes` (`dimension` plus `boxes`, each
//! a list of per-axis arcs), `cantor` (`depth`) and `product` (`factors`,
//! each a one-dimensional descriptor). Every experiment field is optional;
//! missing fields take the defaults of the subcommand.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dblrot::displacement::GridSpec;
use dblrot::rds::{geometric_schedule, SystemConfig};
use dblrot::sets::{SetDescriptor, TorusSet};
use dblrot::torus::TorusPoint;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Phi,
    Classify,
    Twopoint,
    Ensemble,
    Reversed,
    Attractor,
    Diffchain,
    Report,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Phi => "phi",
            Kind::Classify => "classify",
            Kind::Twopoint => "twopoint",
            Kind::Ensemble => "ensemble",
            Kind::Reversed => "reversed",
            Kind::Attractor => "attractor",
            Kind::Diffchain => "diffchain",
            Kind::Report => "report",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `A = [0, 0.3)` on the circle.
    Interval,
    /// Depth-8 Cantor approximant on the circle.
    Cantor8,
    /// `A = [0, 0.5)²` on the 2-torus.
    Box2d,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Interval => "interval",
            Preset::Cantor8 => "cantor8",
            Preset::Box2d => "box2d",
        }
    }

    pub fn system(self) -> SystemFile {
        let set = match self {
            Preset::Interval => SetDescriptor::Intervals { arcs: vec![[0.0, 0.3]] },
            Preset::Cantor8 => SetDescriptor::Cantor { depth: 8 },
            Preset::Box2d => SetDescriptor::Boxes {
                dimension: 2,
                boxes: vec![vec![[0.0, 0.5], [0.0, 0.5]]],
            },
        };
        SystemFile {
            dimension: None,
            set,
            v: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<SystemFile>,
    #[serde(default)]
    pub experiment: ExperimentFile,
    #[serde(default)]
    pub output: OutputFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub dimension: Option<usize>,
    pub set: SetDescriptor,
    /// The jump vector; fractional parts of `√2, √3, …` when omitted.
    pub v: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: Option<Kind>,
    pub name: Option<String>,
    pub horizon: Option<usize>,
    pub particles: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub bins: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub checkpoints: Option<Vec<usize>>,
    pub start: Option<StartFile>,
    pub trials: Option<usize>,
    pub law_horizon: Option<usize>,
    pub exclusion_radius: Option<f64>,
    pub component_cap: Option<usize>,
    pub grid: Option<GridFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub uniform_per_axis: Option<usize>,
    pub refine_levels: Option<u32>,
    pub fit_window: Option<(f64, f64)>,
    pub window_levels: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub dir: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

/// A fully resolved run description, embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: ResolvedSystem,
    pub experiment: ResolvedExperiment,
    pub output: ResolvedOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedSystem {
    pub preset: Option<Preset>,
    pub dimension: usize,
    pub set: SetDescriptor,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedExperiment {
    pub kind: Kind,
    pub name: String,
    pub horizon: usize,
    pub particles: usize,
    pub seeds: Vec<u64>,
    pub bins: usize,
    pub deltas: Vec<f64>,
    pub checkpoints: Vec<usize>,
    pub start: StartFile,
    pub trials: usize,
    pub law_horizon: usize,
    pub exclusion_radius: f64,
    pub component_cap: usize,
    pub grid: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedOutput {
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<ConfigFile> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn default_horizon(kind: Kind) -> usize {
    match kind {
        Kind::Twopoint | Kind::Report => 100_000,
        Kind::Ensemble | Kind::Reversed => 1000,
        Kind::Attractor => 10_000,
        Kind::Diffchain => 1_000_000,
        Kind::Phi | Kind::Classify => 1,
    }
}

fn default_start(k: usize) -> StartFile {
    if k == 1 {
        StartFile {
            x: vec![0.1],
            y: vec![0.6],
        }
    } else {
        StartFile {
            x: (0..k).map(|i| 0.1 + 0.1 * i as f64).collect(),
            y: (0..k).map(|i| 0.7 + 0.2 * i as f64).collect(),
        }
    }
}

fn positive(name: &str, x: usize) -> CliResult<usize> {
    if x == 0 {
        Err(CliError::Config(format!("{name} must be positive")))
    } else {
        Ok(x)
    }
}

/// Merge file, preset and flags into an [`ExperimentConfig`] for `kind`.
pub fn resolve(file: ConfigFile, kind: Kind, over: &Overrides) -> CliResult<ExperimentConfig> {
    if let Some(k) = file.experiment.kind {
        if k != kind {
            return Err(CliError::Config(format!(
                "config describes a {k} experiment but {kind} was requested"
            )));
        }
    }
    let system = match (&file.system, over.preset) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => p.system(),
        (Some(_), Some(p)) => {
            return Err(CliError::Config(format!(
                "both a system section and --preset {} were given",
                p.name()
            )))
        }
        (None, None) => return Err(CliError::Config("no system section and no --preset".into())),
    };
    let k = system.set.dim();
    if let Some(d) = system.dimension {
        if d != k {
            return Err(CliError::Config(format!(
                "dimension {d} does not match the {k}-dimensional set"
            )));
        }
    }
    system.set.build()?;
    let v = match &system.v {
        Some(v) if v.len() != k => {
            return Err(CliError::Config(format!("v has {} entries, expected {k}", v.len())))
        }
        Some(v) => TorusPoint::wrap(v)?.coords().to_vec(),
        None => SystemConfig::default_v(k).coords().to_vec(),
    };

    let e = file.experiment;
    let horizon = positive("horizon", e.horizon.unwrap_or(default_horizon(kind)))?;
    let seeds = if !over.seeds.is_empty() {
        over.seeds.clone()
    } else {
        e.seeds.unwrap_or_else(|| vec![0])
    };
    if seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }
    let bins = positive("bins", e.bins.unwrap_or(if k == 1 { 64 } else { 8 }))?;
    let deltas = e.deltas.unwrap_or_else(|| vec![0.01, 0.05, 0.1]);
    if deltas.is_empty() || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(CliError::Config("deltas must be a nonempty list of positive numbers".into()));
    }
    let mut checkpoints = match e.checkpoints {
        Some(c) => c,
        None => {
            let ratio = if kind == Kind::Twopoint || kind == Kind::Report { 10.0 } else { 2.0 };
            geometric_schedule(horizon, ratio)
        }
    };
    checkpoints.retain(|&c| c > 0);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        return Err(CliError::Config("checkpoint schedule is empty".into()));
    }
    if let Some(&c) = checkpoints.last() {
        if c > horizon {
            return Err(CliError::Config(format!("checkpoint {c} beyond horizon {horizon}")));
        }
    }
    let start = e.start.unwrap_or_else(|| default_start(k));
    if start.x.len() != k || start.y.len() != k {
        return Err(CliError::Config(format!("start points must have {k} coordinates")));
    }
    TorusPoint::wrap(&start.x)?;
    TorusPoint::wrap(&start.y)?;
    let exclusion_radius = e.exclusion_radius.unwrap_or(0.01);
    if !(exclusion_radius.is_finite() && exclusion_radius > 0.0) {
        return Err(CliError::Config("exclusion_radius must be positive".into()));
    }

    let g = e.grid.unwrap_or_default();
    let base = GridSpec::for_dim(k);
    let grid = GridSpec {
        uniform_per_axis: positive("grid.uniform_per_axis", g.uniform_per_axis.unwrap_or(base.uniform_per_axis))?,
        refine_levels: g.refine_levels.unwrap_or(base.refine_levels),
        fit_window: g.fit_window.or_else(|| system.set.fit_window()),
        window_levels: positive("grid.window_levels", g.window_levels.unwrap_or(base.window_levels))?,
        ..base
    };

    let name = e
        .name
        .or_else(|| over.preset.map(|p| p.name().to_string()))
        .unwrap_or_else(|| "custom".into());
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(CliError::Config(format!("experiment name {name:?} is not a plain directory name")));
    }
    let dir = over
        .out
        .clone()
        .or(file.output.dir)
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(ExperimentConfig {
        system: ResolvedSystem {
            preset: over.preset,
            dimension: k,
            set: system.set,
            v,
        },
        experiment: ResolvedExperiment {
            kind,
            name,
            horizon,
            particles: positive("particles", e.particles.unwrap_or(10_000))?,
            seeds,
            bins,
            deltas,
            checkpoints,
            start,
            trials: positive("trials", e.trials.unwrap_or(100_000))?,
            law_horizon: positive("law_horizon", e.law_horizon.unwrap_or(30))?,
            exclusion_radius,
            component_cap: positive("component_cap", e.component_cap.unwrap_or(dblrot::rds::DEFAULT_COMPONENT_CAP))?,
            grid,
        },
        output: ResolvedOutput { dir },
    })
}

impl ExperimentConfig {
    pub fn set(&self) -> CliResult<TorusSet> {
        Ok(self.system.set.build()?)
    }

    pub fn system_config(&self) -> CliResult<SystemConfig> {
        Ok(SystemConfig::new(self.set()?, TorusPoint::wrap(&self.system.v)?)?)
    }

    /// `<out>/<experiment>`.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output.dir.join(&self.experiment.name)
    }
}
