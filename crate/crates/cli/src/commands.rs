//! One runner per subcommand. Each writes its files through `Outputs`,
//! prints a short summary and returns the manifest `results`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, Write};

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use intermingle_core::basins::{
    basin_scan, grid_summary, intermingling_report, intermingling_report_with, symmetry_chi_square, write_grid_csv,
    write_grid_pgm, BasinGrid, GridSpec, ScanSettings,
};
use intermingle_core::experiments::{
    check_descendants, default_perturbation, max_abs_dx_fz, perturb_sweep, propagate_segment_with, r_rho_scan,
    segment_basin_fractions, slope_fixed_point, theta_pullback, write_pullback_csv, write_rrho_csv, write_segment_csv,
    FateSettings, PullbackSettings, RRhoSettings, SweepSettings,
};
use intermingle_core::lyapunov::{self, Boundary, ContractionSetup, ExponentRow, Method};
use intermingle_core::maps::{BaseSpace, TorusBase};
use intermingle_core::sampling::{generic_phase, stream_rng};
use intermingle_core::{Coord, Error, Phase, SkewPoint, SkewSystem, SystemKind};

use crate::error::CliError;
use crate::output::Outputs;
use crate::params::*;

fn coord(system: &SkewSystem, x: f64) -> Coord {
    if system.exact_base() {
        Coord::Exact(Phase::from_f64(x))
    } else {
        Coord::Float(x.rem_euclid(1.0))
    }
}

fn start<B: BaseSpace>(system: &SkewSystem, x: f64, y: f64, z: f64) -> SkewPoint<B> {
    SkewPoint { base: B::from_section(coord(system, x), coord(system, y)), z }
}

/// A generic point on the section `z`, drawn from stream `i` of `seed`.
fn random_start<B: BaseSpace>(system: &SkewSystem, seed: u64, i: u64, z: f64) -> SkewPoint<B> {
    let mut rng = stream_rng(seed, i);
    let (u, v): (f64, f64) = (rng.random(), rng.random());
    let mut draw =
        |t: f64| if system.exact_base() { Coord::Exact(generic_phase(t, &mut rng)) } else { Coord::Float(t) };
    let x = draw(u);
    let y = draw(v);
    SkewPoint { base: B::from_section(x, y), z }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_orbit<B: BaseSpace>(
    system: &SkewSystem,
    mut p: SkewPoint<B>,
    steps: u64,
    out: &mut dyn Write,
) -> Result<[f64; 3], CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z"]).map_err(csv_err)?;
    let mut last = [0.0; 3];
    for t in 0..=steps {
        let [x, y] = p.base.coords();
        last = [x, y, p.z];
        w.write_record([t.to_string(), x.to_string(), y.to_string(), p.z.to_string()]).map_err(csv_err)?;
        if t < steps {
            p = system.apply(p);
        }
    }
    w.flush()?;
    Ok(last)
}

pub fn orbit(system: &SkewSystem, p: &OrbitParams, out: &mut Outputs) -> Result<Value, CliError> {
    let (x, y, z, steps) = (p.x.unwrap(), p.y.unwrap(), p.z.unwrap(), p.steps.unwrap());
    if !(0.0..=1.0).contains(&z) {
        return Err(CliError::Config(format!("z must lie in [0, 1], got {z}")));
    }
    let mut last = [0.0; 3];
    out.write("orbit.csv", |w| {
        last = match system.kind() {
            SystemKind::Annulus => write_orbit(system, start::<Coord>(system, x, y, z), steps, w)?,
            SystemKind::ThickenedTorus => write_orbit(system, start::<TorusBase>(system, x, y, z), steps, w)?,
        };
        Ok(())
    })?;
    println!("orbit of {steps} steps ends at x={} y={} z={}", last[0], last[1], last[2]);
    Ok(json!({ "steps": steps, "final": { "x": last[0], "y": last[1], "z": last[2] } }))
}

fn orbit_exponent<B: BaseSpace>(
    system: &SkewSystem,
    p: SkewPoint<B>,
    method: Method,
    v: &[f64],
    n: u64,
) -> Result<f64, Error> {
    match method {
        Method::Birkhoff => lyapunov::normal_exponent_birkhoff(system, p, n).map(|e| e.value),
        _ => lyapunov::tangent_exponent(system, p, v, n).map(|e| e.value),
    }
}

pub fn lyapunov(system: &SkewSystem, p: &LyapunovParams, out: &mut Outputs) -> Result<Value, CliError> {
    let method = Method::from(p.method.unwrap());
    let boundary = Boundary::from(p.boundary.unwrap());
    let rows: Vec<ExponentRow> = if method == Method::Quadrature {
        let est = lyapunov::normal_exponent_quadrature_at(system, boundary)?;
        println!("normal exponent {:.12e} (quadrature, {} evaluations)", est.value, est.n);
        vec![ExponentRow { x0: None, method, n: est.n, value: est.value, tau: None, wis_lower_bound: None }]
    } else {
        let n = p.n.unwrap();
        let v = p.vector.clone().unwrap();
        let z = boundary.level();
        let starts: Vec<(f64, usize)> = match &p.x0 {
            Some(xs) => xs.iter().map(|&x| (x, 0)).collect(),
            None => (0..p.orbits.unwrap().max(1)).map(|i| (f64::NAN, i)).collect(),
        };
        let seed = p.seed.unwrap_or(0);
        let values: Vec<(f64, f64)> = starts
            .par_iter()
            .map(|&(x, i)| {
                let (x0, value) = match system.kind() {
                    SystemKind::Annulus => {
                        let q = if x.is_nan() {
                            random_start::<Coord>(system, seed, i as u64, z)
                        } else {
                            start(system, x, 0.0, z)
                        };
                        (q.base.coords()[0], orbit_exponent(system, q, method, &v, n)?)
                    }
                    SystemKind::ThickenedTorus => {
                        let q = if x.is_nan() {
                            random_start::<TorusBase>(system, seed, i as u64, z)
                        } else {
                            start(system, x, 0.0, z)
                        };
                        (q.base.coords()[0], orbit_exponent(system, q, method, &v, n)?)
                    }
                };
                Ok((x0, value))
            })
            .collect::<Result<_, Error>>()?;
        for (x0, value) in &values {
            println!("x0={x0} exponent {value:.12e} ({method}, n={n})");
        }
        values
            .into_iter()
            .map(|(x0, value)| ExponentRow { x0: Some(x0), method, n, value, tau: None, wis_lower_bound: None })
            .collect()
    };
    out.write("lyapunov.csv", |w| Ok(lyapunov::write_exponent_csv(&rows, w)?))?;
    let mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;
    if rows.len() > 1 {
        println!("mean {mean:.12e} over {} orbits", rows.len());
    }
    Ok(json!({ "method": method, "mean": mean, "values": rows.iter().map(|r| r.value).collect::<Vec<_>>() }))
}

pub fn tau(system: &SkewSystem, p: &TauParams, out: &mut Outputs) -> Result<Value, CliError> {
    let boundary = Boundary::from(p.boundary.unwrap());
    let n_max = p.n_max.unwrap();
    let setup = ContractionSetup::new(system, boundary)?;
    let z = boundary.level();
    let xs = p.x0.clone().unwrap();
    let results: Vec<(f64, lyapunov::TauResult, f64)> = xs
        .par_iter()
        .map(|&x| {
            let (t, b) = match system.kind() {
                SystemKind::Annulus => {
                    let q = start::<Coord>(system, x, 0.0, z);
                    (lyapunov::tau(system, q, n_max, &setup)?, lyapunov::normal_exponent_birkhoff(system, q, n_max)?)
                }
                SystemKind::ThickenedTorus => {
                    let q = start::<TorusBase>(system, x, 0.0, z);
                    (lyapunov::tau(system, q, n_max, &setup)?, lyapunov::normal_exponent_birkhoff(system, q, n_max)?)
                }
            };
            Ok((x, t, b.value))
        })
        .collect::<Result<_, Error>>()?;
    println!("normal exponent {:.12e}, contraction radius {:.6e}", setup.lambda_perp, setup.c);
    for (x, t, _) in &results {
        let state = if t.diverged { "diverged" } else { "finite" };
        println!("x0={x} tau {:.6} ({state}, argmax {}), certified length {:.6e}", t.tau, t.argmax, t.wis_lower_bound);
    }
    let rows: Vec<ExponentRow> = results
        .iter()
        .map(|(x, t, b)| ExponentRow {
            x0: Some(*x),
            method: Method::Birkhoff,
            n: n_max,
            value: *b,
            tau: Some(t.tau),
            wis_lower_bound: Some(t.wis_lower_bound),
        })
        .collect();
    out.write("tau.csv", |w| Ok(lyapunov::write_exponent_csv(&rows, w)?))?;
    let points: Vec<Value> = results.iter().map(|(x, t, _)| json!({ "x0": x, "tau": t })).collect();
    Ok(json!({ "lambda_perp": setup.lambda_perp, "c": setup.c, "points": points }))
}

fn grid_spec(grid: GridSize, window: WindowArg, y_section: f64) -> GridSpec {
    GridSpec { nx: grid.nx, nz: grid.nz, window: window.0, y_section }
}

pub fn basin(system: &SkewSystem, p: &BasinParams, out: &mut Outputs) -> Result<Value, CliError> {
    let spec = grid_spec(p.grid.unwrap(), p.window.unwrap(), p.y_section.unwrap());
    let settings = ScanSettings {
        samples_per_cell: p.samples.unwrap(),
        budget: p.budget.unwrap(),
        z_a: p.z_a.unwrap(),
        seed: p.seed.unwrap(),
    };
    let grid = basin_scan(system, &spec, &settings)?;
    let summary = grid_summary(&grid)?;
    out.write("basin.csv", |w| Ok(write_grid_csv(&grid, w)?))?;
    out.write("basin.pgm", |w| Ok(write_grid_pgm(&grid, w)?))?;
    out.write_json("basin.json", &summary)?;
    out.write_json("basin.grid.json", &grid)?;
    let r = &summary.report;
    println!(
        "{} cells, {} qualifying, both fates in {:.4}, undecided {:.4}, A {:.4}, B {:.4}",
        r.cells, r.qualifying_cells, r.both_fates_fraction, r.undecided_fraction, r.a_fraction, r.b_fraction
    );
    Ok(serde_json::to_value(&summary.report).expect("report serializes"))
}

pub fn report(p: &ReportParams, out: &mut Outputs) -> Result<Value, CliError> {
    let path = p.input.as_ref().expect("resolution requires an input");
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let grid: BasinGrid = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{} is not a basin grid: {e}", path.display())))?;
    let report = match p.min_decided {
        Some(m) => intermingling_report_with(&grid, m)?,
        None => intermingling_report(&grid)?,
    };
    let symmetry = match symmetry_chi_square(&grid, p.alpha.unwrap()) {
        Ok(t) => Some(t),
        Err(Error::NotSymmetric) => None,
        Err(e) => return Err(e.into()),
    };
    let value = json!({ "system": grid.system, "report": report, "symmetry": symmetry });
    out.write_json("report.json", &value)?;
    println!(
        "{}: {} qualifying cells, both fates in {:.4}, undecided {:.4}",
        grid.system, report.qualifying_cells, report.both_fates_fraction, report.undecided_fraction
    );
    if let Some(t) = symmetry {
        println!("symmetry: {}/{} cells pass at alpha {}", t.cells_passed, t.cells_tested, t.alpha);
    }
    Ok(value)
}

pub fn segment(system: &SkewSystem, p: &SegmentParams, out: &mut Outputs) -> Result<Value, CliError> {
    let graph = propagate_segment_with(system, p.n.unwrap(), p.r.unwrap(), p.rho.unwrap(), p.nodes.unwrap())?;
    let fractions = if p.fates.unwrap() {
        let settings = FateSettings {
            budget: p.budget.unwrap(),
            z_a: p.z_a.unwrap(),
            seed: p.seed.unwrap(),
            certify_horizon: p.certify_horizon,
        };
        Some(segment_basin_fractions(system, &graph, &settings)?)
    } else {
        None
    };
    out.write("segment.csv", |w| Ok(write_segment_csv(&graph, fractions.as_ref(), w)?))?;
    let bound = PI / 10.0;
    let sharp = slope_fixed_point(system.a(), max_abs_dx_fz(system.a()));
    println!("max |slope| {:.6} (bound {:.6}, sharp fixed point {:.6})", graph.max_abs_slope, bound, sharp);
    let mut results = json!({
        "n": graph.n,
        "r": graph.r,
        "rho": graph.rho,
        "nodes": graph.nodes.len(),
        "max_abs_slope": graph.max_abs_slope,
        "slope_bound": bound,
        "within_bound": graph.max_abs_slope <= bound,
        "sharp_fixed_point": sharp,
    });
    if let Some(f) = &fractions {
        println!("fates: A {:.4}, B {:.4}, undecided {:.4}", f.fraction_a, f.fraction_b, f.fraction_undecided);
        results["fraction_a"] = json!(f.fraction_a);
        results["fraction_b"] = json!(f.fraction_b);
        results["fraction_undecided"] = json!(f.fraction_undecided);
        results["certified"] = json!(f.certified);
    }
    Ok(results)
}

pub fn rrho(system: &SkewSystem, p: &RRhoParams, out: &mut Outputs) -> Result<Value, CliError> {
    let settings = RRhoSettings {
        grid_n: p.grid_n.unwrap(),
        horizon: p.horizon.unwrap(),
        z_a: p.z_a.unwrap(),
        seed: p.seed.unwrap(),
    };
    let est = r_rho_scan(system, p.rho.unwrap(), &settings)?;
    out.write("rrho.csv", |w| Ok(write_rrho_csv(&est, w)?))?;
    println!("member fraction {:.4} of {} points at rho {}", est.member_fraction, est.points.len(), est.rho);
    for d in &est.density {
        println!("level {}: {}/{} triadic intervals hold a member", d.k, d.covered, d.intervals);
    }
    Ok(json!({
        "rho": est.rho,
        "lambda_perp": est.lambda_perp,
        "c": est.c,
        "points": est.points.len(),
        "member_fraction": est.member_fraction,
        "density": est.density,
    }))
}

pub fn pullback(system: &SkewSystem, p: &PullbackParams, out: &mut Outputs) -> Result<Value, CliError> {
    let settings = PullbackSettings {
        source: p.source.unwrap().into(),
        horizon: p.horizon.unwrap(),
        z_a: p.z_a.unwrap(),
        cap: p.cap.unwrap(),
    };
    let result = theta_pullback(system, Phase::from_f64(p.x0.unwrap()), p.delta.unwrap(), p.k.unwrap(), &settings)?;
    out.write("pullback.csv", |w| Ok(write_pullback_csv(&result, w)?))?;
    let min_certified = result.descendants.iter().map(|d| d.certified).fold(f64::INFINITY, f64::min);
    println!(
        "n_delta {}, anchor length {:.6}, {} descendants, smallest certified length {:.6}",
        result.n_delta,
        result.anchor_length,
        result.descendants.len(),
        min_certified
    );
    let mut results = json!({
        "initial": result.initial,
        "n_delta": result.n_delta,
        "anchor": result.anchor.to_f64(),
        "anchor_length": result.anchor_length,
        "descendants": result.descendants.len(),
        "min_certified": min_certified,
    });
    let nodes = p.check_nodes.unwrap();
    if nodes > 0 {
        let check = check_descendants(system, &result, nodes, p.check_budget.unwrap(), p.z_a.unwrap())?;
        println!("check: {} heights, {} not in the basin of A", check.nodes_checked, check.failures.len());
        results["check"] = serde_json::to_value(&check).expect("check serializes");
    }
    Ok(results)
}

pub fn perturb_sweep_cmd(system: &SkewSystem, p: &SweepParams, out: &mut Outputs) -> Result<Value, CliError> {
    let template = system.perturbation().cloned().unwrap_or_else(default_perturbation);
    let settings = SweepSettings {
        grid: grid_spec(p.grid.unwrap(), p.window.unwrap(), 0.0),
        scan: ScanSettings {
            samples_per_cell: p.samples.unwrap(),
            budget: p.budget.unwrap(),
            z_a: p.z_a.unwrap(),
            seed: p.seed.unwrap(),
        },
        birkhoff_n: p.birkhoff_n.unwrap(),
        birkhoff_orbits: p.birkhoff_orbits.unwrap(),
        min_decided: p.min_decided.unwrap(),
    };
    let rows = perturb_sweep(system.kind(), system.a(), &template, p.epsilons.as_ref().unwrap(), &settings)?;
    out.write("sweep.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        for row in &rows {
            c.serialize(row).map_err(csv_err)?;
        }
        c.flush()?;
        Ok(())
    })?;
    for r in &rows {
        println!(
            "epsilon {}: exponent {:.6e} ({}), both fates in {:.4} of {} cells, undecided {:.4}",
            r.epsilon, r.lambda_perp, r.lambda_method, r.both_fates_fraction, r.qualifying_cells, r.undecided_fraction
        );
    }
    Ok(serde_json::to_value(&rows).expect("rows serialize"))
}
