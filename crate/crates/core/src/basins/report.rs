use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::scan::{BasinGrid, CellCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub row: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    /// `A` share among decided samples in the row.
    pub a_fraction: f64,
    pub undecided_fraction: f64,
    /// Share of qualifying cells in the row that contain both fates.
    pub both_fates_fraction: f64,
    pub qualifying_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterminglingReport {
    pub cells: usize,
    /// A cell qualifies when it has at least this many decided samples.
    pub min_decided: u64,
    pub qualifying_cells: usize,
    /// Share of qualifying cells containing both fates.
    pub both_fates_fraction: f64,
    /// Qualifying cells that miss one of the fates.
    pub single_fate_cells: Vec<(usize, usize)>,
    pub undecided_fraction: f64,
    /// Shares among all samples.
    pub a_fraction: f64,
    pub b_fraction: f64,
    pub bands: Vec<BandStats>,
    /// Mean per-cell total-variation distance between the grid and its
    /// fate-swapped `S`-image; absent when the window is not `S`-invariant.
    pub symmetry_tv: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Report with qualifying cells the decided-majority ones.
pub fn intermingling_report(grid: &BasinGrid) -> Result<InterminglingReport> {
    let majority = (grid.settings.samples_per_cell as u64).div_ceil(2);
    intermingling_report_with(grid, majority)
}

pub fn intermingling_report_with(grid: &BasinGrid, min_decided: u64) -> Result<InterminglingReport> {
    let totals = grid.totals();
    if grid.cells.is_empty() || totals.total() == 0 {
        return Err(Error::EmptyGrid);
    }
    let qualifies = |c: &CellCounts| c.decided() >= min_decided.max(1);
    let mut single_fate_cells = Vec::new();
    let mut bands = Vec::with_capacity(grid.spec.nz);
    for (row, cells) in grid.rows().enumerate() {
        let w = grid.spec.cell_window(row, 0);
        let band = cells.iter().fold(CellCounts::default(), |acc, c| CellCounts {
            n_a: acc.n_a + c.n_a,
            n_b: acc.n_b + c.n_b,
            n_undecided: acc.n_undecided + c.n_undecided,
            ..acc
        });
        let mut qualifying = 0;
        let mut both = 0;
        for (col, c) in cells.iter().enumerate() {
            if qualifies(c) {
                qualifying += 1;
                if c.both_fates() {
                    both += 1;
                } else {
                    single_fate_cells.push((row, col));
                }
            }
        }
        bands.push(BandStats {
            row,
            z_lo: w.z_min,
            z_hi: w.z_max,
            a_fraction: ratio(band.n_a, band.decided()),
            undecided_fraction: ratio(band.n_undecided, band.total()),
            both_fates_fraction: ratio(both, qualifying),
            qualifying_cells: qualifying as usize,
        });
    }
    let qualifying_cells: usize = bands.iter().map(|b| b.qualifying_cells).sum();
    let both_count = qualifying_cells - single_fate_cells.len();
    let symmetry_tv = s_image(grid).ok().map(|image| {
        let sum: f64 = grid.cells.iter().zip(&image.cells).map(|(c, d)| total_variation(c, d)).sum();
        sum / grid.cells.len() as f64
    });
    Ok(InterminglingReport {
        cells: grid.cells.len(),
        min_decided,
        qualifying_cells,
        both_fates_fraction: ratio(both_count as u64, qualifying_cells as u64),
        single_fate_cells,
        undecided_fraction: ratio(totals.n_undecided, totals.total()),
        a_fraction: ratio(totals.n_a, totals.total()),
        b_fraction: ratio(totals.n_b, totals.total()),
        bands,
        symmetry_tv,
    })
}

fn total_variation(c: &CellCounts, d: &CellCounts) -> f64 {
    let (tc, td) = (c.total().max(1) as f64, d.total().max(1) as f64);
    0.5 * [(c.n_a, d.n_a), (c.n_b, d.n_b), (c.n_undecided, d.n_undecided)]
        .iter()
        .map(|&(p, q)| (p as f64 / tc - q as f64 / td).abs())
        .sum::<f64>()
}

/// The grid pushed through `S(x, z) = (x + 1/2, 1 - z)` with fates swapped.
///
/// Requires a window that `S` maps onto itself: the full circle in `x` with
/// an even column count, and `z` limits symmetric about `1/2`.
pub fn s_image(grid: &BasinGrid) -> Result<BasinGrid> {
    let spec = &grid.spec;
    let w = &spec.window;
    let symmetric = w.x_min == 0.0 && w.x_max == 1.0 && spec.nx % 2 == 0 && (w.z_min + w.z_max - 1.0).abs() < 1e-12;
    if !symmetric {
        return Err(Error::NotSymmetric);
    }
    let (nx, nz) = (spec.nx, spec.nz);
    let mut cells = vec![CellCounts::default(); grid.cells.len()];
    for row in 0..nz {
        for col in 0..nx {
            let (r2, c2) = (nz - 1 - row, (col + nx / 2) % nx);
            cells[r2 * nx + c2] = grid.cell(row, col).swapped();
        }
    }
    Ok(BasinGrid { cells, ..grid.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTest {
    pub alpha: f64,
    pub cells_tested: usize,
    pub cells_passed: usize,
    pub pass_fraction: f64,
}

/// Per-cell chi-square homogeneity test of the fate counts of each cell
/// against those of its `S`-partner (fates swapped).
///
/// Fate columns that are empty in both cells are dropped; a cell whose
/// samples all share one fate column passes trivially.
pub fn symmetry_chi_square(grid: &BasinGrid, alpha: f64) -> Result<SymmetryTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("significance must lie in (0, 1), got {alpha}")));
    }
    let image = s_image(grid)?;
    if grid.cells.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut passed = 0;
    for (c, d) in grid.cells.iter().zip(&image.cells) {
        if chi_square_p_value(c, d) >= alpha {
            passed += 1;
        }
    }
    let tested = grid.cells.len();
    Ok(SymmetryTest { alpha, cells_tested: tested, cells_passed: passed, pass_fraction: passed as f64 / tested as f64 })
}

fn chi_square_p_value(c: &CellCounts, d: &CellCounts) -> f64 {
    let columns: Vec<(f64, f64)> = [(c.n_a, d.n_a), (c.n_b, d.n_b), (c.n_undecided, d.n_undecided)]
        .into_iter()
        .filter(|&(p, q)| p + q > 0)
        .map(|(p, q)| (p as f64, q as f64))
        .collect();
    let (rc, rd) = (c.total() as f64, d.total() as f64);
    if columns.len() < 2 || rc == 0.0 || rd == 0.0 {
        return 1.0;
    }
    let n = rc + rd;
    let stat: f64 = columns
        .iter()
        .map(|&(p, q)| {
            let col = p + q;
            let (ep, eq) = (rc * col / n, rd * col / n);
            (p - ep).powi(2) / ep + (q - eq).powi(2) / eq
        })
        .sum();
    let dist = ChiSquared::new((columns.len() - 1) as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::scan::{GridSpec, ScanSettings, Window};

    fn grid(nx: usize, nz: usize, window: Window, cells: Vec<CellCounts>) -> BasinGrid {
        BasinGrid {
            system: "kind=annulus a=4".into(),
            spec: GridSpec::new(nx, nz, window),
            settings: ScanSettings { samples_per_cell: 10, budget: 10, z_a: 1e-6, seed: 0 },
            cells,
        }
    }

    fn counts(n_a: u64, n_b: u64, n_undecided: u64) -> CellCounts {
        CellCounts { n_a, n_b, n_undecided, hit_sum_a: 3 * n_a, hit_sum_b: 5 * n_b }
    }

    #[test]
    fn all_a_grid_has_no_mixed_cells() {
        let g = grid(4, 1, Window::band(0.0, 0.0), vec![counts(10, 0, 0); 4]);
        let r = intermingling_report(&g).unwrap();
        assert_eq!(r.both_fates_fraction, 0.0);
        assert_eq!(r.qualifying_cells, 4);
        assert_eq!(r.single_fate_cells.len(), 4);
        assert_eq!(r.a_fraction, 1.0);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let g = grid(2, 1, Window::FULL, vec![CellCounts::default(); 2]);
        assert!(matches!(intermingling_report(&g), Err(Error::EmptyGrid)));
    }

    #[test]
    fn s_image_is_an_involution_and_relabels_the_report() {
        let cells: Vec<CellCounts> = (0..8).map(|i| counts(i, 9 - i, 1)).collect();
        let g = grid(4, 2, Window::FULL, cells);
        let img = s_image(&g).unwrap();
        assert_eq!(s_image(&img).unwrap(), g);
        assert_eq!(*img.cell(1, 2), g.cell(0, 0).swapped());
        let (r, ri) = (intermingling_report(&g).unwrap(), intermingling_report(&img).unwrap());
        assert_eq!(r.a_fraction, ri.b_fraction);
        assert_eq!(r.b_fraction, ri.a_fraction);
        assert_eq!(r.both_fates_fraction, ri.both_fates_fraction);
        assert_eq!(r.undecided_fraction, ri.undecided_fraction);
        assert_eq!(r.symmetry_tv, ri.symmetry_tv);
        let g_band = grid(4, 1, Window::band(0.0, 0.5), vec![counts(1, 1, 1); 4]);
        assert!(matches!(s_image(&g_band), Err(Error::NotSymmetric)));
        assert!(intermingling_report(&g_band).unwrap().symmetry_tv.is_none());
    }

    #[test]
    fn chi_square_detects_asymmetry() {
        // symmetric by construction: each cell equals the swapped partner
        let mut cells = vec![CellCounts::default(); 4];
        cells[0] = counts(60, 40, 0);
        cells[3] = counts(40, 60, 0);
        cells[1] = counts(30, 70, 0);
        cells[2] = counts(70, 30, 0);
        let g = grid(2, 2, Window::FULL, cells.clone());
        let t = symmetry_chi_square(&g, 1e-3).unwrap();
        assert_eq!(t.cells_passed, 4);
        cells[3] = counts(95, 5, 0);
        let g = grid(2, 2, Window::FULL, cells);
        let t = symmetry_chi_square(&g, 1e-3).unwrap();
        assert_eq!(t.cells_passed, 2);
    }

    #[test]
    fn chi_square_p_value_matches_hand_computation() {
        // 2x2 table [[30, 20], [20, 30]]: statistic 4.0, one degree of freedom
        let p = chi_square_p_value(&counts(30, 20, 0), &counts(20, 30, 0));
        assert!((p - 0.045_500_263_896_358_4).abs() < 1e-9, "{p}");
        assert_eq!(chi_square_p_value(&counts(10, 0, 0), &counts(10, 0, 0)), 1.0);
    }
}
