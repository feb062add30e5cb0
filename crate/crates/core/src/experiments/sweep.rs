use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basins::{basin_scan, intermingling_report_with, GridSpec, ScanSettings};
use crate::error::Result;
use crate::lyapunov::{self, Method};
use crate::maps::{BaseSpace, Coord, PerturbationSpec, SkewPoint, SkewSystem, SystemKind, TorusBase};
use crate::sampling::{generic_phase, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub grid: GridSpec,
    pub scan: ScanSettings,
    /// Orbit length and number of orbits for Birkhoff estimates, used when
    /// the base is perturbed.
    pub birkhoff_n: u64,
    pub birkhoff_orbits: usize,
    /// Decided samples a cell needs to count in the both-fates fraction.
    pub min_decided: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub system: String,
    pub lambda_perp: f64,
    pub lambda_method: Method,
    /// Half-range of the Birkhoff estimates; zero for quadrature.
    pub lambda_spread: f64,
    pub qualifying_cells: usize,
    pub both_fates_fraction: f64,
    pub undecided_fraction: f64,
    pub a_fraction: f64,
    pub b_fraction: f64,
}

fn birkhoff_mean<B: BaseSpace>(system: &SkewSystem, n: u64, orbits: usize, seed: u64) -> Result<(f64, f64)> {
    let exact = system.exact_base();
    let values: Vec<f64> = (0..orbits.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let coord = |t: f64, rng: &mut _| if exact { Coord::Exact(generic_phase(t, rng)) } else { Coord::Float(t) };
            let x = coord(u, &mut rng);
            let y = coord(v, &mut rng);
            let p = SkewPoint { base: B::from_section(x, y), z: 0.0 };
            lyapunov::normal_exponent_birkhoff(system, p, n).map(|e| e.value)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((mean, 0.5 * (hi - lo)))
}

/// Exponent and basin statistics of `template` scaled by each `epsilon`.
pub fn perturb_sweep(
    kind: SystemKind,
    a: f64,
    template: &PerturbationSpec,
    epsilons: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let system = SkewSystem::new(kind, a, Some(PerturbationSpec { epsilon, ..template.clone() }))?;
            let (lambda_perp, lambda_method, lambda_spread) = if system.lebesgue_base() {
                (lyapunov::normal_exponent_quadrature(&system)?.value, Method::Quadrature, 0.0)
            } else {
                let (n, k, seed) = (settings.birkhoff_n, settings.birkhoff_orbits, settings.scan.seed);
                let (m, spread) = match kind {
                    SystemKind::Annulus => birkhoff_mean::<Coord>(&system, n, k, seed)?,
                    SystemKind::ThickenedTorus => birkhoff_mean::<TorusBase>(&system, n, k, seed)?,
                };
                (m, Method::Birkhoff, spread)
            };
            let grid = basin_scan(&system, &settings.grid, &settings.scan)?;
            let report = intermingling_report_with(&grid, settings.min_decided)?;
            Ok(SweepRow {
                epsilon,
                system: system.canonical(),
                lambda_perp,
                lambda_method,
                lambda_spread,
                qualifying_cells: report.qualifying_cells,
                both_fates_fraction: report.both_fates_fraction,
                undecided_fraction: report.undecided_fraction,
                a_fraction: report.a_fraction,
                b_fraction: report.b_fraction,
            })
        })
        .collect()
}

/// Base term `cos 2πx` and fiber term `cos 4πx`.
pub fn default_perturbation() -> PerturbationSpec {
    PerturbationSpec {
        epsilon: 0.0,
        base_x: vec!["1:1:0:0:0".parse().expect("valid term")],
        base_y: vec![],
        fiber: vec!["1:2:0:0:0".parse().expect("valid term")],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::Window;

    #[test]
    fn zero_epsilon_row_matches_the_unperturbed_map() {
        let settings = SweepSettings {
            grid: GridSpec::new(4, 2, Window::band(0.4, 0.6)),
            scan: ScanSettings { samples_per_cell: 20, budget: 20_000, z_a: 1e-6, seed: 9 },
            birkhoff_n: 20_000,
            birkhoff_orbits: 4,
            min_decided: 10,
        };
        let rows = perturb_sweep(SystemKind::Annulus, 4.0, &default_perturbation(), &[0.0, 1e-3], &settings).unwrap();
        assert_eq!(rows[0].lambda_method, Method::Quadrature);
        assert!((rows[0].lambda_perp + 1.600_447_278_427_536_6e-2).abs() < 1e-12);
        assert_eq!(rows[1].lambda_method, Method::Birkhoff);
        assert!(rows[1].lambda_perp < 0.0);
        let plain = basin_scan(&SkewSystem::annulus(4.0).unwrap(), &settings.grid, &settings.scan).unwrap();
        let report = intermingling_report_with(&plain, 10).unwrap();
        assert_eq!(rows[0].both_fates_fraction, report.both_fates_fraction);
        assert_eq!(rows[0].a_fraction, report.a_fraction);
    }
}
