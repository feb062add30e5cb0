use intermingle_core::basins::{
    basin_scan, classify, grid_pixels, intermingling_report, intermingling_report_with, s_image, write_grid_csv,
    write_grid_pgm, write_summary_json, Fate, GridSpec, ScanSettings, Window, UNDECIDED_PIXEL,
};
use intermingle_core::maps::PointA;
use intermingle_core::{Phase, SkewSystem};

fn settings(budget: u64) -> ScanSettings {
    ScanSettings { samples_per_cell: 40, budget, z_a: 1e-6, seed: 17 }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn scans_do_not_depend_on_the_thread_count() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let spec = GridSpec::new(8, 8, Window::FULL);
    let one = in_pool(1, || basin_scan(&s, &spec, &settings(20_000)).unwrap());
    let four = in_pool(4, || basin_scan(&s, &spec, &settings(20_000)).unwrap());
    let again = basin_scan(&s, &spec, &settings(20_000)).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, again);

    let t = SkewSystem::torus(4.0).unwrap();
    let spec = GridSpec { y_section: 0.3, ..GridSpec::new(4, 4, Window::FULL) };
    assert_eq!(
        in_pool(1, || basin_scan(&t, &spec, &settings(20_000)).unwrap()),
        in_pool(3, || basin_scan(&t, &spec, &settings(20_000)).unwrap())
    );
}

#[test]
fn larger_budgets_only_resolve_undecided_samples() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let spec = GridSpec::new(8, 8, Window::band(0.3, 0.7));
    let budgets = [100, 1_000, 10_000, 100_000];
    let grids: Vec<_> = budgets.iter().map(|&b| basin_scan(&s, &spec, &settings(b)).unwrap()).collect();
    for pair in grids.windows(2) {
        for (small, large) in pair[0].cells.iter().zip(&pair[1].cells) {
            // every decided sample keeps its fate, so counts only grow
            assert!(large.n_a >= small.n_a && large.n_b >= small.n_b);
            assert!(large.n_undecided <= small.n_undecided);
            assert_eq!(large.total(), small.total());
        }
    }
}

#[test]
fn classification_is_a_deterministic_first_crossing() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let p = PointA::exact(Phase(0x5d1c_0b3a_9e7f_2468), 0.45);
    let r = classify(&s, p, 100_000, 1e-6).unwrap();
    assert_ne!(r.fate, Fate::Undecided);
    let t = r.hitting_time.unwrap();
    let orbit = s.orbit(p, t);
    assert!(orbit[..t as usize].iter().all(|q| q.z >= 1e-6 && q.z <= 1.0 - 1e-6));
    let last = orbit.last().unwrap().z;
    assert_eq!(r.fate == Fate::A, last < 1e-6);
    assert_eq!(classify(&s, p.reflect(), 100_000, 1e-6).unwrap().fate, r.fate.swapped());
}

#[test]
fn both_fates_survive_refinement_of_one_cell() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let scan = ScanSettings { samples_per_cell: 200, budget: 100_000, z_a: 1e-6, seed: 23 };
    let mut window = Window { x_min: 0.25, x_max: 0.25 + 1.0 / 16.0, z_min: 0.5, z_max: 0.5 + 1.0 / 16.0 };
    for level in 0..4 {
        let grid = basin_scan(&s, &GridSpec::new(1, 1, window), &scan).unwrap();
        let cell = grid.cell(0, 0);
        assert!(cell.both_fates(), "level {level}: {cell:?} in {window:?}");
        let (w, h) = ((window.x_max - window.x_min) / 4.0, (window.z_max - window.z_min) / 4.0);
        window = Window { x_min: window.x_min, x_max: window.x_min + w, z_min: window.z_min, z_max: window.z_min + h };
    }
}

#[test]
fn report_of_the_swapped_image_exchanges_the_fates() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let grid = basin_scan(&s, &GridSpec::new(8, 8, Window::FULL), &settings(50_000)).unwrap();
    let image = s_image(&grid).unwrap();
    let (r, ri) = (intermingling_report(&grid).unwrap(), intermingling_report(&image).unwrap());
    assert_eq!(r.a_fraction, ri.b_fraction);
    assert_eq!(r.b_fraction, ri.a_fraction);
    assert_eq!(r.qualifying_cells, ri.qualifying_cells);
    assert_eq!(s_image(&image).unwrap(), grid);
}

#[test]
fn outputs_parse_under_their_formats() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let grid = basin_scan(&s, &GridSpec::new(6, 4, Window::band(0.2, 0.8)), &settings(20_000)).unwrap();

    let mut csv_bytes = Vec::new();
    write_grid_csv(&grid, &mut csv_bytes).unwrap();
    let mut reader = csv::Reader::from_reader(csv_bytes.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(
        header,
        ["row", "col", "x_lo", "x_hi", "z_lo", "z_hi", "n_a", "n_b", "n_undecided", "mean_hit_a", "mean_hit_b"]
    );
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 24);
    for rec in &records {
        let counts: u64 = (6..9).map(|i| rec[i].parse::<u64>().unwrap()).sum();
        assert_eq!(counts, 40);
    }

    let mut json = Vec::new();
    write_summary_json(&grid, &mut json).unwrap();
    let value: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(value["system"], serde_json::Value::String(s.canonical()));
    assert!(value["report"]["both_fates_fraction"].is_number());

    let mut pgm = Vec::new();
    write_grid_pgm(&grid, &mut pgm).unwrap();
    assert!(pgm.starts_with(b"P5"));
    let pixels = grid_pixels(&grid);
    assert_eq!(pixels.len(), 24);
    assert!(pgm.ends_with(&pixels));
    let top_down = (0..grid.spec.nz).rev().flat_map(|row| (0..grid.spec.nx).map(move |col| (row, col)));
    for (&p, (row, col)) in pixels.iter().zip(top_down) {
        let c = grid.cell(row, col);
        match c.decided() {
            0 => assert_eq!(p, UNDECIDED_PIXEL),
            d => assert!(p < UNDECIDED_PIXEL && (p as f64 - 254.0 * c.n_a as f64 / d as f64).abs() <= 0.5),
        }
    }
}

#[test]
fn band_cells_with_enough_decided_samples_hold_both_fates() {
    let s = SkewSystem::annulus(4.0).unwrap();
    let scan = ScanSettings { samples_per_cell: 100, budget: 100_000, z_a: 1e-6, seed: 29 };
    let grid = basin_scan(&s, &GridSpec::new(16, 4, Window::band(0.4, 0.6)), &scan).unwrap();
    let report = intermingling_report_with(&grid, 50).unwrap();
    assert!(report.qualifying_cells > 0);
    assert!(report.single_fate_cells.is_empty(), "{:?}", report.single_fate_cells);
}
