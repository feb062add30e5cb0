//! Run configuration: layering of flags over config files over defaults,
//! and the manifest that records a resolved run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use intermingle_core::experiments::default_perturbation;
use intermingle_core::maps::{PerturbationSpec, SystemSpec};
use intermingle_core::{SkewSystem, SystemKind};

use crate::error::CliError;
use crate::params::*;

/// A fully resolved subcommand with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "params", rename_all = "kebab-case")]
pub enum Task {
    Orbit(OrbitParams),
    Lyapunov(LyapunovParams),
    Tau(TauParams),
    Basin(BasinParams),
    Report(ReportParams),
    Segment(SegmentParams),
    Rrho(RRhoParams),
    Pullback(PullbackParams),
    PerturbSweep(SweepParams),
}

pub const SUBCOMMANDS: [&str; 9] =
    ["orbit", "lyapunov", "tau", "basin", "report", "segment", "rrho", "pullback", "perturb-sweep"];

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Orbit(_) => "orbit",
            Task::Lyapunov(_) => "lyapunov",
            Task::Tau(_) => "tau",
            Task::Basin(_) => "basin",
            Task::Report(_) => "report",
            Task::Segment(_) => "segment",
            Task::Rrho(_) => "rrho",
            Task::Pullback(_) => "pullback",
            Task::PerturbSweep(_) => "perturb-sweep",
        }
    }

    fn params_value(&self) -> Value {
        let v = serde_json::to_value(self).expect("parameters serialize");
        v.get("params").cloned().unwrap_or(Value::Object(Map::new()))
    }
}

/// Everything needed to re-run a computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub task: Task,
}

impl RunConfig {
    pub fn system(&self) -> Result<SkewSystem, CliError> {
        SkewSystem::try_from(self.system.clone()).map_err(CliError::from)
    }
}

/// Written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Canonical text of the system.
    pub system: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub results: Value,
}

/// Top-level settings that apply to every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalLayer {
    pub config: Option<PathBuf>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

fn object(v: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match v {
        Value::Object(m) => Ok(m),
        Value::Null => Ok(Map::new()),
        _ => Err(CliError::Config(format!("{what} must be a table"))),
    }
}

/// Config file contents in the common layout
/// `{system, out_dir, threads, <subcommand>: {...}}`.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        let t: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))?
    };
    let mut map = object(value, "config file")?;
    if map.contains_key("config") {
        let manifest: Manifest = serde_json::from_value(Value::Object(map))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        map = manifest_layer(&manifest.config);
    }
    for key in map.keys() {
        if !["system", "out_dir", "threads"].contains(&key.as_str()) && !SUBCOMMANDS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
    }
    Ok(map)
}

/// A resolved run as a config-file layer.
pub fn manifest_layer(cfg: &RunConfig) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("system".into(), serde_json::to_value(&cfg.system).expect("system serializes"));
    map.insert("out_dir".into(), serde_json::to_value(&cfg.out_dir).expect("path serializes"));
    if let Some(t) = cfg.threads {
        map.insert("threads".into(), t.into());
    }
    map.insert(cfg.task.name().into(), cfg.task.params_value());
    map
}

fn overlay(lower: &mut Map<String, Value>, upper: Map<String, Value>) {
    for (k, v) in upper {
        if !v.is_null() {
            lower.insert(k, v);
        }
    }
}

fn resolve_system(file: Option<Value>, flags: &SystemArgs) -> Result<SkewSystem, CliError> {
    let flag_layer = object(serde_json::to_value(flags).expect("flags serialize"), "system")?;
    let mut merged =
        if flags.canonical.is_some() { Map::new() } else { object(file.unwrap_or(Value::Null), "system")? };
    overlay(&mut merged, flag_layer);
    let args: SystemArgs =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("system: {e}")))?;

    let mut spec = match &args.canonical {
        Some(text) => text.parse::<SkewSystem>()?.spec(),
        None => SystemSpec { kind: SystemKind::Annulus, a: 4.0, perturbation: None },
    };
    if let Some(kind) = args.kind {
        spec.kind = kind;
    }
    if let Some(a) = args.a {
        spec.a = a;
    }
    if let Some(p) = args.perturbation {
        spec.perturbation = Some(p);
    }
    if let Some(epsilon) = args.epsilon {
        let base = spec.perturbation.take().unwrap_or_else(default_perturbation);
        spec.perturbation = Some(PerturbationSpec { epsilon, ..base });
    }
    Ok(SkewSystem::try_from(spec)?)
}

fn merge_params<P>(file: Option<Value>, flags: &P, what: &str) -> Result<P, CliError>
where
    P: Serialize + for<'de> Deserialize<'de>,
{
    let mut merged = object(file.unwrap_or(Value::Null), what)?;
    overlay(&mut merged, object(serde_json::to_value(flags).expect("flags serialize"), what)?);
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

/// Subcommand flags before resolution.
#[derive(Debug, Clone)]
pub enum TaskFlags {
    Orbit(OrbitParams),
    Lyapunov(LyapunovParams),
    Tau(TauParams),
    Basin(BasinParams),
    Report(ReportParams),
    Segment(SegmentParams),
    Rrho(RRhoParams),
    Pullback(PullbackParams),
    PerturbSweep(SweepParams),
}

impl TaskFlags {
    fn name(&self) -> &'static str {
        match self {
            TaskFlags::Orbit(_) => "orbit",
            TaskFlags::Lyapunov(_) => "lyapunov",
            TaskFlags::Tau(_) => "tau",
            TaskFlags::Basin(_) => "basin",
            TaskFlags::Report(_) => "report",
            TaskFlags::Segment(_) => "segment",
            TaskFlags::Rrho(_) => "rrho",
            TaskFlags::Pullback(_) => "pullback",
            TaskFlags::PerturbSweep(_) => "perturb-sweep",
        }
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<(), CliError> {
    match seed {
        Some(_) => Ok(()),
        None => Err(CliError::Config(format!("{what} draws random samples and needs --seed"))),
    }
}

/// Merge flags, the config file and defaults into a resolved run.
pub fn resolve(global: &GlobalLayer, system_flags: &SystemArgs, flags: &TaskFlags) -> Result<RunConfig, CliError> {
    let mut file = match &global.config {
        Some(path) => load_config_file(path)?,
        None => Map::new(),
    };
    let system = resolve_system(file.remove("system"), system_flags)?;
    let out_dir = match (&global.out_dir, file.remove("out_dir")) {
        (Some(d), _) => d.clone(),
        (None, Some(v)) => serde_json::from_value(v).map_err(|e| CliError::Config(format!("out_dir: {e}")))?,
        (None, None) => PathBuf::from("."),
    };
    let threads = match (global.threads, file.remove("threads")) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => Some(serde_json::from_value(v).map_err(|e| CliError::Config(format!("threads: {e}")))?),
        (None, None) => None,
    };
    if threads == Some(0) {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    let name = flags.name();
    let section = file.remove(name);
    let task = match flags {
        TaskFlags::Orbit(p) => Task::Orbit(merge_params(section, p, name)?.resolve()),
        TaskFlags::Lyapunov(p) => {
            let p = merge_params(section, p, name)?.resolve(&system);
            if p.method != Some(MethodArg::Quadrature) && p.x0.is_none() {
                require_seed(p.seed, "lyapunov without --x0")?;
            }
            Task::Lyapunov(p)
        }
        TaskFlags::Tau(p) => Task::Tau(merge_params(section, p, name)?.resolve()),
        TaskFlags::Basin(p) => {
            let p = merge_params(section, p, name)?.resolve(&system);
            require_seed(p.seed, name)?;
            Task::Basin(p)
        }
        TaskFlags::Report(p) => {
            let p = merge_params(section, p, name)?.resolve();
            if p.input.is_none() {
                return Err(CliError::Config("report needs --input (a basin grid file)".into()));
            }
            Task::Report(p)
        }
        TaskFlags::Segment(p) => {
            let p = merge_params(section, p, name)?.resolve(&system);
            if p.fates == Some(true) {
                require_seed(p.seed, "segment with --fates")?;
            }
            Task::Segment(p)
        }
        TaskFlags::Rrho(p) => {
            let p = merge_params(section, p, name)?.resolve(&system);
            require_seed(p.seed, name)?;
            Task::Rrho(p)
        }
        TaskFlags::Pullback(p) => Task::Pullback(merge_params(section, p, name)?.resolve(&system)),
        TaskFlags::PerturbSweep(p) => {
            let p = merge_params(section, p, name)?.resolve(&system);
            require_seed(p.seed, name)?;
            Task::PerturbSweep(p)
        }
    };
    Ok(RunConfig { system: system.spec(), out_dir, threads, task })
}
