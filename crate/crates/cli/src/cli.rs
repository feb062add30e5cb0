use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{GlobalLayer, TaskFlags};
use crate::params::*;

/// Skew products with intermingled basins: exponents, basin scans and the
/// constructive experiments behind them.
#[derive(Debug, Parser)]
#[command(name = "intermingle", version)]
pub struct Cli {
    /// TOML config file, or the manifest JSON of an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "INTERMINGLE_THREADS")]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate one point and write its orbit.
    Orbit {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: OrbitParams,
    },
    /// Normal or tangent Lyapunov exponent.
    Lyapunov {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: LyapunovParams,
    },
    /// Stable-manifold functional and certified length at boundary points.
    Tau {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: TauParams,
    },
    /// Fate counts on a grid of cells.
    Basin {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: BasinParams,
    },
    /// Intermingling and symmetry statistics of a saved basin grid.
    Report {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: ReportParams,
    },
    /// Forward image of a triadic horizontal segment with slopes.
    Segment {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: SegmentParams,
    },
    /// Base points with long immediate stable manifolds.
    Rrho {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: RRhoParams,
    },
    /// Pull a stable manifold back along the middle inverse branch.
    Pullback {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: PullbackParams,
    },
    /// Exponent and basin statistics over a ladder of perturbation sizes.
    PerturbSweep {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        params: SweepParams,
    },
}

impl Cli {
    pub fn global(&self) -> GlobalLayer {
        GlobalLayer { config: self.config.clone(), threads: self.threads, out_dir: self.out_dir.clone() }
    }

    pub fn task(&self) -> (&SystemArgs, TaskFlags) {
        match &self.command {
            Command::Orbit { system, params } => (system, TaskFlags::Orbit(params.clone())),
            Command::Lyapunov { system, params } => (system, TaskFlags::Lyapunov(params.clone())),
            Command::Tau { system, params } => (system, TaskFlags::Tau(params.clone())),
            Command::Basin { system, params } => (system, TaskFlags::Basin(params.clone())),
            Command::Report { system, params } => (system, TaskFlags::Report(params.clone())),
            Command::Segment { system, params } => (system, TaskFlags::Segment(params.clone())),
            Command::Rrho { system, params } => (system, TaskFlags::Rrho(params.clone())),
            Command::Pullback { system, params } => (system, TaskFlags::Pullback(params.clone())),
            Command::PerturbSweep { system, params } => (system, TaskFlags::PerturbSweep(params.clone())),
        }
    }
}
