use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{check_threshold, classify, Fate};
use crate::error::{Error, Result};
use crate::maps::{BaseSpace, Coord, Phase, SkewPoint, SkewSystem, SystemKind, TorusBase};
use crate::sampling::{generic_phase, shifted_lattice, stream_rng};

/// Rectangle in `(x, z)`; a degenerate side samples a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Window {
    pub const FULL: Window = Window { x_min: 0.0, x_max: 1.0, z_min: 0.0, z_max: 1.0 };

    /// Full circle in `x`, `z ∈ [z_min, z_max]`.
    pub fn band(z_min: f64, z_max: f64) -> Window {
        Window { x_min: 0.0, x_max: 1.0, z_min, z_max }
    }

    fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi;
        if !ok(self.x_min, self.x_max) || !ok(self.z_min, self.z_max) {
            return Err(Error::InvalidInput(format!("window {self:?} must satisfy 0 <= min <= max <= 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nz: usize,
    pub window: Window,
    /// The `y` of the section swept on the torus; ignored on the annulus.
    #[serde(default)]
    pub y_section: f64,
}

impl GridSpec {
    pub fn new(nx: usize, nz: usize, window: Window) -> GridSpec {
        GridSpec { nx, nz, window, y_section: 0.0 }
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.nz
    }

    /// Bounds of cell `(row, col)`; row 0 is the lowest `z`.
    pub fn cell_window(&self, row: usize, col: usize) -> Window {
        let w = &self.window;
        let dx = (w.x_max - w.x_min) / self.nx as f64;
        let dz = (w.z_max - w.z_min) / self.nz as f64;
        Window {
            x_min: w.x_min + col as f64 * dx,
            x_max: w.x_min + (col + 1) as f64 * dx,
            z_min: w.z_min + row as f64 * dz,
            z_max: w.z_min + (row + 1) as f64 * dz,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(0.0..1.0).contains(&self.y_section) {
            return Err(Error::InvalidInput(format!("section y must lie in [0, 1), got {}", self.y_section)));
        }
        self.window.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub samples_per_cell: usize,
    pub budget: u64,
    pub z_a: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub n_a: u64,
    pub n_b: u64,
    pub n_undecided: u64,
    pub hit_sum_a: u64,
    pub hit_sum_b: u64,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.n_a + self.n_b + self.n_undecided
    }

    pub fn decided(&self) -> u64 {
        self.n_a + self.n_b
    }

    pub fn count(&self, fate: Fate) -> u64 {
        match fate {
            Fate::A => self.n_a,
            Fate::B => self.n_b,
            Fate::Undecided => self.n_undecided,
        }
    }

    pub fn both_fates(&self) -> bool {
        self.n_a > 0 && self.n_b > 0
    }

    pub fn mean_hit_a(&self) -> Option<f64> {
        (self.n_a > 0).then(|| self.hit_sum_a as f64 / self.n_a as f64)
    }

    pub fn mean_hit_b(&self) -> Option<f64> {
        (self.n_b > 0).then(|| self.hit_sum_b as f64 / self.n_b as f64)
    }

    /// Counts with `A` and `B` exchanged.
    pub fn swapped(&self) -> CellCounts {
        CellCounts {
            n_a: self.n_b,
            n_b: self.n_a,
            n_undecided: self.n_undecided,
            hit_sum_a: self.hit_sum_b,
            hit_sum_b: self.hit_sum_a,
        }
    }

    fn record(&mut self, fate: Fate, hitting_time: Option<u64>) {
        let t = hitting_time.unwrap_or(0);
        match fate {
            Fate::A => {
                self.n_a += 1;
                self.hit_sum_a += t;
            }
            Fate::B => {
                self.n_b += 1;
                self.hit_sum_b += t;
            }
            Fate::Undecided => self.n_undecided += 1,
        }
    }
}

/// Per-cell fate counts over a window, stored row-major with row 0 at the
/// lowest `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    /// Canonical text of the system that was scanned.
    pub system: String,
    pub spec: GridSpec,
    pub settings: ScanSettings,
    pub cells: Vec<CellCounts>,
}

impl BasinGrid {
    pub fn cell(&self, row: usize, col: usize) -> &CellCounts {
        &self.cells[row * self.spec.nx + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[CellCounts]> {
        self.cells.chunks(self.spec.nx)
    }

    pub fn totals(&self) -> CellCounts {
        self.cells.iter().fold(CellCounts::default(), |acc, c| CellCounts {
            n_a: acc.n_a + c.n_a,
            n_b: acc.n_b + c.n_b,
            n_undecided: acc.n_undecided + c.n_undecided,
            hit_sum_a: acc.hit_sum_a + c.hit_sum_a,
            hit_sum_b: acc.hit_sum_b + c.hit_sum_b,
        })
    }

    pub fn undecided_fraction(&self) -> f64 {
        let t = self.totals();
        if t.total() == 0 {
            0.0
        } else {
            t.n_undecided as f64 / t.total() as f64
        }
    }
}

/// The starting points of one cell, in sample order.
pub fn cell_samples<B: BaseSpace>(
    system: &SkewSystem,
    spec: &GridSpec,
    settings: &ScanSettings,
    row: usize,
    col: usize,
) -> Vec<SkewPoint<B>> {
    let cell = spec.cell_window(row, col);
    let mut rng = stream_rng(settings.seed, (row * spec.nx + col) as u64);
    let lattice = shifted_lattice(&mut rng, settings.samples_per_cell);
    let exact = system.exact_base();
    let y = if exact { Coord::Exact(Phase::from_f64(spec.y_section)) } else { Coord::Float(spec.y_section) };
    lattice
        .into_iter()
        .map(|[u, v]| {
            let x_val = cell.x_min + u * (cell.x_max - cell.x_min);
            let z = cell.z_min + v * (cell.z_max - cell.z_min);
            let x =
                if exact { Coord::Exact(generic_phase(x_val, &mut rng)) } else { Coord::Float(x_val.rem_euclid(1.0)) };
            SkewPoint { base: B::from_section(x, y), z: z.clamp(0.0, 1.0) }
        })
        .collect()
}

fn scan_cells<B: BaseSpace>(system: &SkewSystem, spec: &GridSpec, settings: &ScanSettings) -> Vec<CellCounts> {
    (0..spec.cell_count())
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / spec.nx, idx % spec.nx);
            let mut counts = CellCounts::default();
            for p in cell_samples::<B>(system, spec, settings, row, col) {
                let r = classify(system, p, settings.budget, settings.z_a).expect("threshold validated");
                counts.record(r.fate, r.hitting_time);
            }
            counts
        })
        .collect()
}

/// Classify `samples_per_cell` seeded low-discrepancy points in every cell.
///
/// Each cell draws from its own generator stream, so the result depends only
/// on the inputs, never on the thread count or scheduling order.
pub fn basin_scan(system: &SkewSystem, spec: &GridSpec, settings: &ScanSettings) -> Result<BasinGrid> {
    spec.validate()?;
    check_threshold(settings.budget, settings.z_a)?;
    if settings.samples_per_cell == 0 {
        return Err(Error::InvalidInput("samples_per_cell must be >= 1".into()));
    }
    let cells = match system.kind() {
        SystemKind::Annulus => scan_cells::<Coord>(system, spec, settings),
        SystemKind::ThickenedTorus => scan_cells::<TorusBase>(system, spec, settings),
    };
    Ok(BasinGrid { system: system.canonical(), spec: *spec, settings: *settings, cells })
}
