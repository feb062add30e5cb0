//! Normal and tangent Lyapunov exponents, the contraction radius `c`, the
//! supremum functional `τ` and the certified immediate-stable-manifold
//! length `c·exp(-τ)`.
//!
//! Everything here is stated for a boundary (`A` at `z = 0`, `B` at `z = 1`);
//! distances to the boundary are `|z - level|`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{BaseSpace, Coord, Phase, SkewPoint, SkewSystem, SystemKind, TorusBase};
use crate::quadrature;

/// Quadrature absolute tolerance.
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Search-grid step for the contraction radius.
pub const C_RESOLUTION: f64 = 1e-6;
/// Base nodes at which the contraction-radius condition is checked.
pub const C_NODES: usize = 4096;

/// Invariant boundary component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// `z = 0`.
    A,
    /// `z = 1`.
    B,
}

impl Boundary {
    pub fn level(self) -> f64 {
        match self {
            Boundary::A => 0.0,
            Boundary::B => 1.0,
        }
    }

    /// The boundary a fiber coordinate lies on, if any.
    pub fn of(z: f64) -> Result<Boundary> {
        if z == 0.0 {
            Ok(Boundary::A)
        } else if z == 1.0 {
            Ok(Boundary::B)
        } else {
            Err(Error::OffBoundary(z))
        }
    }

    /// The fiber coordinate at distance `d` from this boundary.
    pub fn at_offset(self, d: f64) -> f64 {
        match self {
            Boundary::A => d,
            Boundary::B => 1.0 - d,
        }
    }

    pub fn offset(self, z: f64) -> f64 {
        (z - self.level()).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadrature,
    Birkhoff,
    Tangent,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::Birkhoff => "birkhoff",
            Method::Tangent => "tangent",
        })
    }
}

/// A Lyapunov exponent in nats per iterate.
///
/// `n` is the orbit length for orbit methods and the number of integrand
/// evaluations for quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub n: u64,
    pub method: Method,
    pub x0: Option<Vec<f64>>,
}

/// Yields `ln|D_z f_z(f^k(p))|` for `k = 0, 1, 2, ...` along a boundary orbit.
struct BoundaryLogDerivatives<'s, B> {
    system: &'s SkewSystem,
    point: SkewPoint<B>,
}

impl<B: BaseSpace> Iterator for BoundaryLogDerivatives<'_, B> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let value = self.system.fiber_derivative(&self.point.base, self.point.z).abs().ln();
        if self.system.is_perturbed() {
            self.point = self.system.apply(self.point);
        } else {
            self.point.base = self.point.base.step_linear();
        }
        Some(value)
    }
}

fn boundary_orbit<B: BaseSpace>(system: &SkewSystem, p: SkewPoint<B>) -> Result<BoundaryLogDerivatives<'_, B>> {
    Boundary::of(p.z)?;
    Ok(BoundaryLogDerivatives { system, point: p })
}

/// `λ⊥ = ∫ ln|D_z f_z(x, 0)| dx` over the base, for boundary `A`.
pub fn normal_exponent_quadrature(system: &SkewSystem) -> Result<ExponentEstimate> {
    normal_exponent_quadrature_at(system, Boundary::A)
}

/// Space average of `ln|D_z f_z|` on either boundary.
///
/// Seed panels split the circle at the cosine extrema `x ∈ {0, 1/2}` and
/// the zeros in between.
pub fn normal_exponent_quadrature_at(system: &SkewSystem, boundary: Boundary) -> Result<ExponentEstimate> {
    if !system.lebesgue_base() {
        return Err(Error::RequiresLebesgueBase);
    }
    let level = boundary.level();
    let breaks = [0.0, 0.25, 0.5, 0.75, 1.0];
    let integral = match system.kind() {
        SystemKind::Annulus => quadrature::integrate(
            |x| system.fiber_derivative(&Coord::Float(x), level).abs().ln(),
            &breaks,
            QUADRATURE_TOL,
        ),
        SystemKind::ThickenedTorus if !system.fiber_depends_on_y() => quadrature::integrate(
            |x| system.fiber_derivative(&TorusBase::from_floats([x, 0.0]), level).abs().ln(),
            &breaks,
            QUADRATURE_TOL,
        ),
        SystemKind::ThickenedTorus => {
            let evaluations = std::cell::Cell::new(0u64);
            let mut outer = quadrature::integrate(
                |y| {
                    let inner = quadrature::integrate(
                        |x| system.fiber_derivative(&TorusBase::from_floats([x, y]), level).abs().ln(),
                        &breaks,
                        QUADRATURE_TOL,
                    );
                    evaluations.set(evaluations.get() + inner.evaluations);
                    inner.value
                },
                &breaks,
                QUADRATURE_TOL,
            );
            outer.evaluations = evaluations.get();
            outer
        }
    };
    Ok(ExponentEstimate { value: integral.value, n: integral.evaluations, method: Method::Quadrature, x0: None })
}

/// `(1/n) Σ_{k=1..n} ln|D_z f_z(f^k(x0))|` along the orbit of a boundary point.
pub fn normal_exponent_birkhoff<B: BaseSpace>(
    system: &SkewSystem,
    x0: SkewPoint<B>,
    n: u64,
) -> Result<ExponentEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("Birkhoff average needs n >= 1".into()));
    }
    let sum: f64 = boundary_orbit(system, x0)?.skip(1).take(n as usize).sum();
    Ok(ExponentEstimate { value: sum / n as f64, n, method: Method::Birkhoff, x0: Some(x0.to_vec()) })
}

/// Log growth of a tangent vector under `J f^n`, with the state at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentGrowth<B> {
    /// `ln(‖J f^n(p) v‖ / ‖v‖)`.
    pub log_growth: f64,
    pub end: SkewPoint<B>,
    /// Unit vector along `J f^n(p) v`.
    pub direction: Vec<f64>,
}

pub fn tangent_growth<B: BaseSpace>(
    system: &SkewSystem,
    p: SkewPoint<B>,
    v: &[f64],
    n: u64,
) -> Result<TangentGrowth<B>> {
    if v.len() != B::DIM + 1 {
        return Err(Error::InvalidInput(format!("tangent vector needs {} components", B::DIM + 1)));
    }
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut dir: Vec<f64> = v.iter().map(|c| c / norm).collect();
    let mut point = p;
    let mut log_growth = 0.0;
    for _ in 0..n {
        let image = system.jacobian(point).apply(&dir);
        let len = image.iter().map(|c| c * c).sum::<f64>().sqrt();
        log_growth += len.ln();
        dir = image.into_iter().map(|c| c / len).collect();
        point = system.apply(point);
    }
    Ok(TangentGrowth { log_growth, end: point, direction: dir })
}

/// `(1/n) ln‖J f^n(p) v‖`, renormalizing every step.
pub fn tangent_exponent<B: BaseSpace>(
    system: &SkewSystem,
    p: SkewPoint<B>,
    v: &[f64],
    n: u64,
) -> Result<ExponentEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("tangent exponent needs n >= 1".into()));
    }
    let g = tangent_growth(system, p, v, n)?;
    Ok(ExponentEstimate { value: g.log_growth / n as f64, n, method: Method::Tangent, x0: Some(p.to_vec()) })
}

fn node_grid(kind: SystemKind) -> Vec<[Phase; 2]> {
    match kind {
        SystemKind::Annulus => {
            let shift = 64 - C_NODES.trailing_zeros();
            (0..C_NODES as u64).map(|i| [Phase(i << shift), Phase::ZERO]).collect()
        }
        SystemKind::ThickenedTorus => {
            let side = (C_NODES as f64).sqrt() as u64;
            let shift = 64 - side.trailing_zeros();
            (0..side).flat_map(|i| (0..side).map(move |j| [Phase(i << shift), Phase(j << shift)])).collect()
        }
    }
}

fn neighborhood_ok<B: BaseSpace>(system: &SkewSystem, nodes: &[B], boundary: Boundary, c: f64, budget: f64) -> bool {
    let level = boundary.level();
    let inner = boundary.at_offset(c);
    nodes.iter().all(|b| {
        let d0 = system.fiber_derivative(b, level).abs().ln();
        let d1 = system.fiber_derivative(b, inner).abs().ln();
        (d0 - d1).abs() < budget
    })
}

fn choose_c_on<B: BaseSpace>(system: &SkewSystem, boundary: Boundary, lambda_perp: f64) -> Result<f64> {
    let nodes: Vec<B> =
        node_grid(system.kind()).into_iter().map(|[x, y]| B::from_section(Coord::Exact(x), Coord::Exact(y))).collect();
    let budget = lambda_perp.abs() / 4.0;
    let ok = |j: u64| neighborhood_ok(system, &nodes, boundary, j as f64 * C_RESOLUTION, budget);
    let top = (0.5 / C_RESOLUTION) as u64 - 1;
    if !ok(1) {
        return Err(Error::NoValidC);
    }
    if ok(top) {
        return Ok(top as f64 * C_RESOLUTION);
    }
    // ok(lo) && !ok(hi)
    let (mut lo, mut hi) = (1u64, top);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo as f64 * C_RESOLUTION)
}

/// Largest `c` on the `1e-6` grid such that `z` within `c` of the boundary
/// changes `ln|D_z f_z|` by less than `|λ⊥|/4` at every base node.
///
/// The change is monotone in the distance for the builtin maps, so the
/// grid is bisected and the condition is checked at the distance `c` itself.
pub fn choose_c(system: &SkewSystem, boundary: Boundary, lambda_perp: f64) -> Result<f64> {
    if lambda_perp.is_nan() || lambda_perp >= 0.0 {
        return Err(Error::InvalidInput(format!("choose_c needs a negative exponent, got {lambda_perp}")));
    }
    match system.kind() {
        SystemKind::Annulus => choose_c_on::<Coord>(system, boundary, lambda_perp),
        SystemKind::ThickenedTorus => choose_c_on::<TorusBase>(system, boundary, lambda_perp),
    }
}

/// The global exponent and contraction radius used by `τ` and trapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionSetup {
    pub boundary: Boundary,
    pub lambda_perp: f64,
    pub c: f64,
}

impl ContractionSetup {
    /// Uses the quadrature value of `λ⊥`.
    pub fn new(system: &SkewSystem, boundary: Boundary) -> Result<ContractionSetup> {
        let lambda = normal_exponent_quadrature_at(system, boundary)?.value;
        ContractionSetup::with_lambda(system, boundary, lambda)
    }

    pub fn with_lambda(system: &SkewSystem, boundary: Boundary, lambda_perp: f64) -> Result<ContractionSetup> {
        let c = choose_c(system, boundary, lambda_perp)?;
        Ok(ContractionSetup { boundary, lambda_perp, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    /// Running maximum over `n ∈ [0, n_max]`.
    pub tau: f64,
    /// Heuristic divergence flag: the maximum sits in the last tenth of the
    /// horizon and the running term is still rising there.
    pub diverged: bool,
    pub n_max: u64,
    pub argmax: u64,
    pub lambda_perp: f64,
    pub c: f64,
    /// `c·exp(-max(τ, 0))`, zero when diverged.
    pub wis_lower_bound: f64,
}

impl TauResult {
    pub fn is_finite(&self) -> bool {
        !self.diverged
    }
}

/// `τ = sup_n { -3nλ⊥/4 + Σ_{k=0..n} ln|D_z f_z(f^k(x0))| }`, truncated at `n_max`.
pub fn tau<B: BaseSpace>(
    system: &SkewSystem,
    x0: SkewPoint<B>,
    n_max: u64,
    setup: &ContractionSetup,
) -> Result<TauResult> {
    if n_max == 0 {
        return Err(Error::InvalidInput("tau needs n_max >= 1".into()));
    }
    if Boundary::of(x0.z)? != setup.boundary {
        return Err(Error::InvalidInput("starting point is on the other boundary".into()));
    }
    let drift = -0.75 * setup.lambda_perp;
    let tail_start = n_max - n_max / 10;
    let mut terms = boundary_orbit(system, x0)?;
    let mut running = terms.next().unwrap_or(0.0);
    let (mut best, mut argmax) = (running, 0);
    let mut at_tail_start = running;
    for (n, log_d) in (1..=n_max).zip(terms) {
        running += drift + log_d;
        if running > best {
            best = running;
            argmax = n;
        }
        if n == tail_start {
            at_tail_start = running;
        }
    }
    let diverged = argmax >= tail_start && running > at_tail_start;
    let wis_lower_bound = if diverged { 0.0 } else { setup.c * (-best.max(0.0)).exp() };
    Ok(TauResult { tau: best, diverged, n_max, argmax, lambda_perp: setup.lambda_perp, c: setup.c, wis_lower_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingResult {
    pub trapped: bool,
    /// Largest distance to the boundary along the orbit, start included.
    pub max_offset: f64,
    pub final_offset: f64,
}

/// Follow `(x0, z0)` for `n` steps and check it stays within `c` of the
/// boundary and ends closer than it started.
///
/// `z0` is a distance from the boundary of `x0`; it should be below the
/// certified length `c·exp(-τ(x0))`.
pub fn verify_trapping<B: BaseSpace>(
    system: &SkewSystem,
    x0: SkewPoint<B>,
    z0: f64,
    n: u64,
    setup: &ContractionSetup,
) -> Result<TrappingResult> {
    let boundary = Boundary::of(x0.z)?;
    if !(0.0..=1.0).contains(&z0) {
        return Err(Error::InvalidInput(format!("offset must lie in [0, 1], got {z0}")));
    }
    let mut p = SkewPoint { base: x0.base, z: boundary.at_offset(z0) };
    let mut max_offset = z0;
    for _ in 0..n {
        p = system.apply(p);
        max_offset = max_offset.max(boundary.offset(p.z));
    }
    let final_offset = boundary.offset(p.z);
    let trapped = max_offset < setup.c && (z0 == 0.0 || final_offset < z0);
    Ok(TrappingResult { trapped, max_offset, final_offset })
}

/// One CSV row of a per-point exponent report; `x0` is empty for quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub x0: Option<f64>,
    pub method: Method,
    pub n: u64,
    pub value: f64,
    pub tau: Option<f64>,
    pub wis_lower_bound: Option<f64>,
}

pub fn write_exponent_csv<W: Write>(rows: &[ExponentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{PointA, PointT};

    fn closed_form(a: f64) -> f64 {
        let b = 1.0 / a;
        ((1.0 + (1.0 - b * b).sqrt()) / 2.0).ln()
    }

    #[test]
    fn quadrature_matches_closed_form() {
        // Frozen closed-form values ln((1 + sqrt(1 - a^-2)) / 2).
        let cases = [(32.0, -2.442_300_805_046_431_6e-4), (4.0, -1.600_447_278_427_536_6e-2)];
        for (a, frozen) in cases {
            let est = normal_exponent_quadrature(&SkewSystem::annulus(a).unwrap()).unwrap();
            assert!((closed_form(a) - frozen).abs() < 1e-18);
            assert!((est.value - frozen).abs() < 1e-12, "a={a}: {} vs {frozen}", est.value);
            assert_eq!(est.method, Method::Quadrature);
            assert!(est.n >= 60);
        }
        for a in [1.01, 1.5, 2.0, 7.0, 100.0, 1e4] {
            let est = normal_exponent_quadrature(&SkewSystem::annulus(a).unwrap()).unwrap();
            assert!(est.value < 0.0);
            assert!((est.value - closed_form(a)).abs() < 1e-10, "a={a}");
        }
    }

    #[test]
    fn quadrature_same_on_torus_and_on_b() {
        for a in [4.0, 32.0] {
            let ann = SkewSystem::annulus(a).unwrap();
            let tor = SkewSystem::torus(a).unwrap();
            let va = normal_exponent_quadrature(&ann).unwrap().value;
            let vt = normal_exponent_quadrature(&tor).unwrap().value;
            let vb = normal_exponent_quadrature_at(&ann, Boundary::B).unwrap().value;
            assert!((va - vt).abs() < 1e-14 && (va - vb).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_refuses_perturbed_base() {
        let pert = crate::maps::PerturbationSpec {
            epsilon: 1e-3,
            base_x: vec![crate::maps::TrigTerm::new(1.0, 1, 0, 0.0, 0)],
            ..Default::default()
        };
        let s = SkewSystem::new(SystemKind::Annulus, 4.0, Some(pert)).unwrap();
        assert!(matches!(normal_exponent_quadrature(&s), Err(Error::RequiresLebesgueBase)));
    }

    #[test]
    fn birkhoff_on_fixed_orbits() {
        let s = SkewSystem::annulus(32.0).unwrap();
        for n in [1, 10, 1000] {
            let e = normal_exponent_birkhoff(&s, PointA::exact(Phase::ZERO, 0.0), n).unwrap();
            assert!((e.value - (33.0f64 / 32.0).ln()).abs() < 1e-15);
            let e = normal_exponent_birkhoff(&s, PointA::exact(Phase::HALF, 0.0), n).unwrap();
            assert!((e.value - (31.0f64 / 32.0).ln()).abs() < 1e-15);
        }
        assert!(normal_exponent_birkhoff(&s, PointA::exact(Phase::ZERO, 0.0), 0).is_err());
        assert!(matches!(normal_exponent_birkhoff(&s, PointA::exact(Phase::ZERO, 0.3), 5), Err(Error::OffBoundary(_))));
    }

    #[test]
    fn birkhoff_symmetric_between_boundaries() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let p = PointA::exact(Phase(0x9e37_79b9_7f4a_7c15), 0.0);
        let on_a = normal_exponent_birkhoff(&s, p, 100_000).unwrap();
        let on_b = normal_exponent_birkhoff(&s, p.reflect(), 100_000).unwrap();
        assert_eq!(on_a.value, on_b.value);
        let t = SkewSystem::torus(4.0).unwrap();
        let q = PointT::exact(Phase(0x1234_5678_9abc_def1), Phase(0x0fed_cba9_8765_4321), 0.0);
        let on_a = normal_exponent_birkhoff(&t, q, 50_000).unwrap();
        let on_b = normal_exponent_birkhoff(&t, q.reflect(), 50_000).unwrap();
        assert_eq!(on_a.value, on_b.value);
    }

    #[test]
    fn tangent_examples() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let e = tangent_exponent(&s, PointA::exact(Phase::ZERO, 0.0), &[0.0, 1.0], 50).unwrap();
        assert!((e.value - (33.0f64 / 32.0).ln()).abs() < 1e-14);
        let p = PointA::exact(Phase(0x5851_f42d_4c95_7f2d), 0.4);
        let e = tangent_exponent(&s, p, &[1.0, 0.0], 20_000).unwrap();
        assert!((e.value - 3.0f64.ln()).abs() < 1e-3, "{}", e.value);
        assert!(matches!(tangent_exponent(&s, p, &[0.0, 0.0], 10), Err(Error::ZeroVector)));
        assert!(tangent_exponent(&s, p, &[1.0], 10).is_err());
    }

    #[test]
    fn tangent_growth_is_additive() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let p = PointA::exact(Phase(0x2545_f491_4f6c_dd1d), 0.3);
        let v = [0.6, 0.8];
        let whole = tangent_growth(&s, p, &v, 400).unwrap();
        let first = tangent_growth(&s, p, &v, 200).unwrap();
        let second = tangent_growth(&s, first.end, &first.direction, 200).unwrap();
        assert_eq!(whole.end, second.end);
        assert!((whole.log_growth - (first.log_growth + second.log_growth)).abs() < 1e-10);
    }

    #[test]
    fn choose_c_matches_brute_force_scan() {
        // Brute-force oracle: step z upward on the 1e-6 grid over a 2048-node
        // x grid until the neighborhood condition first fails.
        fn scan(a: f64, lambda: f64) -> f64 {
            let budget = lambda.abs() / 4.0;
            let xs: Vec<f64> = (0..2048).map(|i| i as f64 / 2048.0).collect();
            let ln_d = |x: f64, z: f64| (1.0 + (1.0 - 2.0 * z) * (std::f64::consts::TAU * x).cos() / a).ln();
            let mut j = 1u64;
            loop {
                let z = j as f64 * 1e-6;
                if xs.iter().any(|&x| (ln_d(x, 0.0) - ln_d(x, z)).abs() >= budget) {
                    return (j - 1) as f64 * 1e-6;
                }
                j += 1;
            }
        }
        for (a, frozen) in [(32.0, 9.46e-4), (4.0, 6.013e-3)] {
            let s = SkewSystem::annulus(a).unwrap();
            let lambda = normal_exponent_quadrature(&s).unwrap().value;
            let c = choose_c(&s, Boundary::A, lambda).unwrap();
            let brute = scan(a, lambda);
            assert!((c - brute).abs() < 1.5e-6, "a={a}: {c} vs {brute}");
            assert!((c - frozen).abs() < 1e-6, "a={a}: {c}");
            // closed form: the worst node is cos = -1, giving (a-1)/2·(exp(|λ|/4) - 1)
            let closed = (a - 1.0) / 2.0 * ((lambda.abs() / 4.0).exp() - 1.0);
            assert!(c <= closed && closed - c < 1e-6);
            // recheck on a 4x finer node grid
            let fine: Vec<Coord> = (0..4 * C_NODES as u64).map(|i| Coord::Exact(Phase(i << 50))).collect();
            assert!(neighborhood_ok(&s, &fine, Boundary::A, c, lambda.abs() / 4.0));
        }
        let s = SkewSystem::annulus(4.0).unwrap();
        assert!(choose_c(&s, Boundary::A, 0.1).is_err());
    }

    #[test]
    fn tau_examples() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let setup = ContractionSetup::new(&s, Boundary::A).unwrap();
        let t = tau(&s, PointA::exact(Phase::HALF, 0.0), 10_000, &setup).unwrap();
        assert!((t.tau - (31.0f64 / 32.0).ln()).abs() < 1e-12);
        assert_eq!(t.argmax, 0);
        assert!(!t.diverged);
        assert_eq!(t.wis_lower_bound, setup.c);

        let t = tau(&s, PointA::exact(Phase::ZERO, 0.0), 10_000, &setup).unwrap();
        assert!(t.diverged);
        assert_eq!(t.argmax, 10_000);
        assert_eq!(t.wis_lower_bound, 0.0);
    }

    #[test]
    fn tau_is_monotone_in_horizon() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let setup = ContractionSetup::new(&s, Boundary::A).unwrap();
        let p = PointA::exact(Phase(0x7f4a_7c15_9e37_79b9), 0.0);
        let mut prev = tau(&s, p, 1, &setup).unwrap();
        for n in [10, 100, 1000, 10_000] {
            let cur = tau(&s, p, n, &setup).unwrap();
            assert!(cur.tau >= prev.tau);
            if !cur.diverged && !prev.diverged {
                assert!(cur.wis_lower_bound <= prev.wis_lower_bound);
            }
            prev = cur;
        }
    }

    #[test]
    fn trapping_on_the_invariant_line() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let setup = ContractionSetup::new(&s, Boundary::A).unwrap();
        let x0 = PointA::exact(Phase::HALF, 0.0);
        let t = tau(&s, x0, 10_000, &setup).unwrap();
        let z0 = 0.5 * t.wis_lower_bound;
        let r = verify_trapping(&s, x0, z0, 10_000, &setup).unwrap();
        assert!(r.trapped);
        assert_eq!(r.max_offset, z0);
        // decay rate on x = 1/2 is 31/32 per step to first order
        let predicted = z0 * (31.0f64 / 32.0).powi(10_000);
        assert!(r.final_offset <= predicted * 1.01 && r.final_offset >= predicted * 0.99);

        let r = verify_trapping(&s, x0, 0.0, 100, &setup).unwrap();
        assert!(r.trapped && r.final_offset == 0.0);
    }

    #[test]
    fn exponent_csv_header() {
        let mut buf = Vec::new();
        let rows = vec![ExponentRow {
            x0: Some(0.5),
            method: Method::Birkhoff,
            n: 10,
            value: -0.03,
            tau: Some(-0.03),
            wis_lower_bound: Some(1e-3),
        }];
        write_exponent_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,method,n,value,tau,wis_lower_bound\n0.5,birkhoff,10,"));
    }
}
