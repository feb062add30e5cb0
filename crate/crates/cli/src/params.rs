//! Per-subcommand parameters. Every field is optional so that flags and
//! config files can be layered; `resolve` fills the gaps with defaults.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use intermingle_core::basins::Window;
use intermingle_core::experiments::{default_nodes, LengthSource};
use intermingle_core::lyapunov::{Boundary, Method};
use intermingle_core::{SkewSystem, SystemKind};

/// `NXxNZ`, e.g. `64x64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSize {
    pub nx: usize,
    pub nz: usize,
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (nx, nz) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid must look like 64x64, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad grid dimension `{v}`"));
        Ok(GridSize { nx: parse(nx)?, nz: parse(nz)? })
    }
}

impl TryFrom<String> for GridSize {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSize> for String {
    fn from(g: GridSize) -> String {
        format!("{}x{}", g.nx, g.nz)
    }
}

/// `x_min:x_max:z_min:z_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WindowArg(pub Window);

impl FromStr for WindowArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(':')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad window bound `{t}`")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x_min, x_max, z_min, z_max] => Ok(WindowArg(Window { x_min, x_max, z_min, z_max })),
            _ => Err(format!("window must be x_min:x_max:z_min:z_max, got `{s}`")),
        }
    }
}

impl TryFrom<String> for WindowArg {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<WindowArg> for String {
    fn from(w: WindowArg) -> String {
        let w = w.0;
        format!("{}:{}:{}:{}", w.x_min, w.x_max, w.z_min, w.z_max)
    }
}

impl fmt::Display for WindowArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Quadrature,
    Birkhoff,
    Tangent,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Quadrature => Method::Quadrature,
            MethodArg::Birkhoff => Method::Birkhoff,
            MethodArg::Tangent => Method::Tangent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    A,
    B,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Boundary {
        match b {
            BoundaryArg::A => Boundary::A,
            BoundaryArg::B => Boundary::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Certified,
    Empirical,
}

impl From<SourceArg> for LengthSource {
    fn from(s: SourceArg) -> LengthSource {
        match s {
            SourceArg::Certified => LengthSource::Certified,
            SourceArg::Empirical => LengthSource::Empirical,
        }
    }
}

/// System selection. `--system` takes the canonical text form and replaces
/// whatever lower-precedence layers said about the system.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SystemArgs {
    /// Canonical system text, e.g. "kind=annulus a=4 epsilon=0.001 fiber=1:2:0:0:0".
    #[arg(long = "system")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<String>,
    /// annulus or torus.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<SystemKind>,
    /// Contraction divisor of the fiber term (> 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Perturbation size; adds the default perturbation if none is configured.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Full perturbation terms (config files only).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<intermingle_core::maps::PerturbationSpec>,
}

/// Default crossing threshold: deeper for the slowly contracting `a >= 32`.
pub fn default_z_a(system: &SkewSystem) -> f64 {
    if system.a() >= 32.0 {
        1e-9
    } else {
        1e-6
    }
}

macro_rules! optional_params {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

optional_params!(OrbitParams {
    /// Starting x.
    #[arg(long)]
    x: f64,
    /// Starting y (torus only).
    #[arg(long)]
    y: f64,
    /// Starting height.
    #[arg(long)]
    z: f64,
    /// Number of iterations.
    #[arg(long)]
    steps: u64,
});

impl OrbitParams {
    pub fn resolve(self) -> OrbitParams {
        OrbitParams {
            x: self.x.or(Some(0.1)),
            y: self.y.or(Some(0.0)),
            z: self.z.or(Some(0.5)),
            steps: self.steps.or(Some(100)),
        }
    }
}

optional_params!(LyapunovParams {
    #[arg(long, value_enum)] method: MethodArg,
    /// Orbit length for Birkhoff and tangent estimates.
    #[arg(long)] n: u64,
    /// Comma-separated starting points; random when absent.
    #[arg(long, value_delimiter = ',')] x0: Vec<f64>,
    /// Number of random starting points when --x0 is absent.
    #[arg(long)] orbits: usize,
    #[arg(long, value_enum)] boundary: BoundaryArg,
    /// Tangent vector components.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)] vector: Vec<f64>,
    #[arg(long)] seed: u64,
});

impl LyapunovParams {
    pub fn resolve(self, system: &SkewSystem) -> LyapunovParams {
        let dim = match system.kind() {
            SystemKind::Annulus => 2,
            SystemKind::ThickenedTorus => 3,
        };
        let mut vertical = vec![0.0; dim];
        vertical[dim - 1] = 1.0;
        LyapunovParams {
            method: self.method.or(Some(MethodArg::Quadrature)),
            n: self.n.or(Some(1_000_000)),
            orbits: self.orbits.or(Some(1)),
            boundary: self.boundary.or(Some(BoundaryArg::A)),
            vector: self.vector.or(Some(vertical)),
            ..self
        }
    }
}

optional_params!(TauParams {
    /// Comma-separated starting points on the boundary.
    #[arg(long, value_delimiter = ',')] x0: Vec<f64>,
    #[arg(long)] n_max: u64,
    #[arg(long, value_enum)] boundary: BoundaryArg,
});

impl TauParams {
    pub fn resolve(self) -> TauParams {
        TauParams {
            x0: self.x0.or(Some(vec![0.5])),
            n_max: self.n_max.or(Some(100_000)),
            boundary: self.boundary.or(Some(BoundaryArg::A)),
        }
    }
}

optional_params!(BasinParams {
    /// Cells as NXxNZ.
    #[arg(long)]
    grid: GridSize,
    /// x_min:x_max:z_min:z_max.
    #[arg(long)]
    window: WindowArg,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    budget: u64,
    /// Crossing threshold for commitment to a boundary.
    #[arg(long)]
    z_a: f64,
    /// Section y for torus scans.
    #[arg(long)]
    y_section: f64,
    #[arg(long)]
    seed: u64,
});

impl BasinParams {
    pub fn resolve(self, system: &SkewSystem) -> BasinParams {
        BasinParams {
            grid: self.grid.or(Some(GridSize { nx: 64, nz: 64 })),
            window: self.window.or(Some(WindowArg(Window::FULL))),
            samples: self.samples.or(Some(400)),
            budget: self.budget.or(Some(100_000)),
            z_a: self.z_a.or(Some(default_z_a(system))),
            y_section: self.y_section.or(Some(0.0)),
            ..self
        }
    }
}

optional_params!(ReportParams {
    /// Grid file written by `basin` (`basin.grid.json`).
    #[arg(long)]
    input: PathBuf,
    /// Decided samples a cell needs to qualify; default is a majority.
    #[arg(long)]
    min_decided: u64,
    /// Significance of the per-cell symmetry test.
    #[arg(long)]
    alpha: f64,
});

impl ReportParams {
    pub fn resolve(self) -> ReportParams {
        ReportParams { alpha: self.alpha.or(Some(1e-3)), ..self }
    }
}

optional_params!(SegmentParams {
    /// Segment index, 0 <= n < 3^r.
    #[arg(long)]
    n: u64,
    /// Generation.
    #[arg(long)]
    r: u32,
    /// Height of the horizontal segment.
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    nodes: usize,
    /// Also classify every node.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    fates: bool,
    #[arg(long)]
    budget: u64,
    #[arg(long)]
    z_a: f64,
    #[arg(long)]
    seed: u64,
    /// Check each crossing against the certified length with this horizon.
    #[arg(long)]
    certify_horizon: u64,
});

impl SegmentParams {
    pub fn resolve(self, system: &SkewSystem) -> SegmentParams {
        let r = self.r.unwrap_or(3);
        SegmentParams {
            n: self.n.or(Some(0)),
            r: Some(r),
            rho: self.rho.or(Some(0.5)),
            nodes: self.nodes.or(Some(default_nodes(r))),
            fates: self.fates.or(Some(false)),
            budget: self.budget.or(Some(100_000)),
            z_a: self.z_a.or(Some(default_z_a(system))),
            ..self
        }
    }
}

optional_params!(RRhoParams {
    /// Height threshold in (0, 1).
    #[arg(long)]
    rho: f64,
    /// Number of base points.
    #[arg(long)]
    grid_n: usize,
    /// Orbit length for the exponent, tau and escape height.
    #[arg(long)]
    horizon: u64,
    #[arg(long)]
    z_a: f64,
    #[arg(long)]
    seed: u64,
});

impl RRhoParams {
    pub fn resolve(self, system: &SkewSystem) -> RRhoParams {
        RRhoParams {
            rho: self.rho.or(Some(0.1)),
            grid_n: self.grid_n.or(Some(729)),
            horizon: self.horizon.or(Some(10_000)),
            z_a: self.z_a.or(Some(default_z_a(system))),
            ..self
        }
    }
}

optional_params!(PullbackParams {
    /// Base point on A.
    #[arg(long)]
    x0: f64,
    /// Target gap: pull back until the segment is at least 1 - delta tall.
    #[arg(long)]
    delta: f64,
    /// Descendant generation (3^k segments).
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum)]
    source: SourceArg,
    #[arg(long)]
    horizon: u64,
    #[arg(long)]
    z_a: f64,
    /// Largest admissible pullback count.
    #[arg(long)]
    cap: u64,
    /// Heights classified per descendant; 0 skips the check.
    #[arg(long)]
    check_nodes: usize,
    #[arg(long)]
    check_budget: u64,
});

impl PullbackParams {
    pub fn resolve(self, system: &SkewSystem) -> PullbackParams {
        PullbackParams {
            x0: self.x0.or(Some(0.5)),
            delta: self.delta.or(Some(0.1)),
            k: self.k.or(Some(2)),
            source: self.source.or(Some(SourceArg::Empirical)),
            horizon: self.horizon.or(Some(100_000)),
            z_a: self.z_a.or(Some(default_z_a(system))),
            cap: self.cap.or(Some(10_000)),
            check_nodes: self.check_nodes.or(Some(0)),
            check_budget: self.check_budget.or(Some(100_000)),
        }
    }
}

optional_params!(SweepParams {
    /// Comma-separated perturbation sizes.
    #[arg(long, value_delimiter = ',')] epsilons: Vec<f64>,
    #[arg(long)] grid: GridSize,
    #[arg(long)] window: WindowArg,
    #[arg(long)] samples: usize,
    #[arg(long)] budget: u64,
    #[arg(long)] z_a: f64,
    #[arg(long)] seed: u64,
    /// Orbit length of Birkhoff exponent estimates for perturbed bases.
    #[arg(long)] birkhoff_n: u64,
    #[arg(long)] birkhoff_orbits: usize,
    #[arg(long)] min_decided: u64,
});

impl SweepParams {
    pub fn resolve(self, system: &SkewSystem) -> SweepParams {
        SweepParams {
            epsilons: self.epsilons.or(Some(vec![0.0, 1e-4, 1e-3])),
            grid: self.grid.or(Some(GridSize { nx: 16, nz: 4 })),
            window: self.window.or(Some(WindowArg(Window::band(0.4, 0.6)))),
            samples: self.samples.or(Some(100)),
            budget: self.budget.or(Some(100_000)),
            z_a: self.z_a.or(Some(default_z_a(system))),
            birkhoff_n: self.birkhoff_n.or(Some(1_000_000)),
            birkhoff_orbits: self.birkhoff_orbits.or(Some(4)),
            min_decided: self.min_decided.or(Some(30)),
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_window_round_trip_through_text() {
        let g: GridSize = "64x16".parse().unwrap();
        assert_eq!(g, GridSize { nx: 64, nz: 16 });
        assert_eq!(String::from(g), "64x16");
        assert!("64".parse::<GridSize>().is_err());
        let w: WindowArg = "0:1:0.4:0.6".parse().unwrap();
        assert_eq!(w.0, Window::band(0.4, 0.6));
        assert_eq!(w.to_string().parse::<WindowArg>().unwrap(), w);
        assert!("0:1:0.4".parse::<WindowArg>().is_err());
    }

    #[test]
    fn resolution_keeps_explicit_values() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let p = BasinParams { samples: Some(7), ..Default::default() }.resolve(&s);
        assert_eq!(p.samples, Some(7));
        assert_eq!(p.z_a, Some(1e-9));
        assert_eq!(p.seed, None);
        let seg = SegmentParams { r: Some(8), ..Default::default() }.resolve(&s);
        assert_eq!(seg.nodes, Some(6561));
    }
}
