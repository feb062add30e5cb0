//! Fate classification, seeded parallel grid scans and intermingling
//! statistics.

mod classify;
mod io;
mod report;
mod scan;

pub use classify::{classify, classify_certified, Certifier, Fate, OrbitResult};
pub use io::{
    grid_pixels, grid_summary, write_grid_csv, write_grid_pgm, write_summary_json, GridSummary, UNDECIDED_PIXEL,
};
pub use report::{
    intermingling_report, intermingling_report_with, s_image, symmetry_chi_square, BandStats, InterminglingReport,
    SymmetryTest,
};
pub use scan::{basin_scan, cell_samples, BasinGrid, CellCounts, GridSpec, ScanSettings, Window};
