//! Command-line front end for the `intermingle-core` library.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod params;

use config::{Manifest, RunConfig, Task};
use error::CliError;
use output::Outputs;

/// Execute a resolved run and write its manifest.
pub fn execute(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let system = cfg.system()?;
    let mut out = Outputs::new(&cfg.out_dir)?;
    let results = match &cfg.task {
        Task::Orbit(p) => commands::orbit(&system, p, &mut out)?,
        Task::Lyapunov(p) => commands::lyapunov(&system, p, &mut out)?,
        Task::Tau(p) => commands::tau(&system, p, &mut out)?,
        Task::Basin(p) => commands::basin(&system, p, &mut out)?,
        Task::Report(p) => commands::report(p, &mut out)?,
        Task::Segment(p) => commands::segment(&system, p, &mut out)?,
        Task::Rrho(p) => commands::rrho(&system, p, &mut out)?,
        Task::Pullback(p) => commands::pullback(&system, p, &mut out)?,
        Task::PerturbSweep(p) => commands::perturb_sweep_cmd(&system, p, &mut out)?,
    };
    let manifest = Manifest {
        tool: "intermingle".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        system: system.canonical(),
        config: cfg.clone(),
        outputs: out.names().to_vec(),
        results,
    };
    out.write_json(&format!("{}.manifest.json", cfg.task.name()), &manifest)?;
    Ok(manifest)
}

/// Resolve flags against the config file and defaults, size the thread
/// pool and execute.
pub fn run(cli: &cli::Cli) -> Result<Manifest, CliError> {
    let (system, flags) = cli.task();
    let cfg = config::resolve(&cli.global(), system, &flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    execute(&cfg)
}
