use std::io::Write;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::report::{intermingling_report, InterminglingReport};
use super::scan::{BasinGrid, GridSpec, ScanSettings};
use crate::error::Result;

/// Pixel value of cells without any decided sample.
pub const UNDECIDED_PIXEL: u8 = 255;

#[derive(Debug, Serialize)]
struct CsvRow {
    row: usize,
    col: usize,
    x_lo: f64,
    x_hi: f64,
    z_lo: f64,
    z_hi: f64,
    n_a: u64,
    n_b: u64,
    n_undecided: u64,
    mean_hit_a: Option<f64>,
    mean_hit_b: Option<f64>,
}

/// One line per cell: position, fate counts and mean hitting times.
pub fn write_grid_csv<W: Write>(grid: &BasinGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in 0..grid.spec.nz {
        for col in 0..grid.spec.nx {
            let win = grid.spec.cell_window(row, col);
            let c = grid.cell(row, col);
            w.serialize(CsvRow {
                row,
                col,
                x_lo: win.x_min,
                x_hi: win.x_max,
                z_lo: win.z_min,
                z_hi: win.z_max,
                n_a: c.n_a,
                n_b: c.n_b,
                n_undecided: c.n_undecided,
                mean_hit_a: c.mean_hit_a(),
                mean_hit_b: c.mean_hit_b(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Scan parameters plus the intermingling report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub system: String,
    pub spec: GridSpec,
    pub settings: ScanSettings,
    pub report: InterminglingReport,
}

pub fn grid_summary(grid: &BasinGrid) -> Result<GridSummary> {
    Ok(GridSummary {
        system: grid.system.clone(),
        spec: grid.spec,
        settings: grid.settings,
        report: intermingling_report(grid)?,
    })
}

pub fn write_summary_json<W: Write>(grid: &BasinGrid, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &grid_summary(grid)?)?;
    Ok(())
}

/// One byte per cell: `254·A/(A+B)`, or [`UNDECIDED_PIXEL`]. The top image
/// row is the highest `z`.
pub fn grid_pixels(grid: &BasinGrid) -> Vec<u8> {
    let mut pixels = Vec::with_capacity(grid.cells.len());
    for row in (0..grid.spec.nz).rev() {
        for col in 0..grid.spec.nx {
            let c = grid.cell(row, col);
            pixels.push(match c.decided() {
                0 => UNDECIDED_PIXEL,
                d => ((254 * c.n_a) as f64 / d as f64).round() as u8,
            });
        }
    }
    pixels
}

/// Binary PGM (`P5`) rendering of [`grid_pixels`].
pub fn write_grid_pgm<W: Write>(grid: &BasinGrid, out: W) -> Result<()> {
    let encoder = PnmEncoder::new(out).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder.write_image(&grid_pixels(grid), grid.spec.nx as u32, grid.spec.nz as u32, ExtendedColorType::L8)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::scan::{CellCounts, Window};

    fn sample_grid() -> BasinGrid {
        let cells = vec![
            CellCounts { n_a: 4, n_b: 0, n_undecided: 0, hit_sum_a: 8, hit_sum_b: 0 },
            CellCounts { n_a: 2, n_b: 2, n_undecided: 0, hit_sum_a: 2, hit_sum_b: 10 },
            CellCounts { n_a: 0, n_b: 0, n_undecided: 4, hit_sum_a: 0, hit_sum_b: 0 },
            CellCounts { n_a: 0, n_b: 3, n_undecided: 1, hit_sum_a: 0, hit_sum_b: 3 },
        ];
        BasinGrid {
            system: "kind=annulus a=4".into(),
            spec: GridSpec::new(2, 2, Window::FULL),
            settings: ScanSettings { samples_per_cell: 4, budget: 10, z_a: 1e-6, seed: 1 },
            cells,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_grid_csv(&sample_grid(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,x_lo,x_hi,z_lo,z_hi,n_a,n_b,n_undecided,mean_hit_a,mean_hit_b");
        assert_eq!(lines[1], "0,0,0.0,0.5,0.0,0.5,4,0,0,2.0,");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn pgm_layout() {
        let mut buf = Vec::new();
        write_grid_pgm(&sample_grid(), &mut buf).unwrap();
        assert!(buf.starts_with(b"P5"));
        // top row is row 1: undecided cell, then all-B cell
        assert_eq!(&buf[buf.len() - 4..], &[UNDECIDED_PIXEL, 0, 254, 127]);
    }

    #[test]
    fn summary_json_parses_back() {
        let mut buf = Vec::new();
        write_summary_json(&sample_grid(), &mut buf).unwrap();
        let back: GridSummary = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, grid_summary(&sample_grid()).unwrap());
    }
}
