use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basins::{classify, Fate};
use crate::error::{Error, Result};
use crate::lyapunov::{self, ContractionSetup};
use crate::maps::{Phase, PointA, SkewSystem, SystemKind};
use crate::sampling::{generic_phase, stream_rng};

/// Bisection steps for the escape height, resolving it to `2^-40`.
pub const BISECTION_STEPS: u32 = 40;
/// Deepest triadic level of the density probe.
pub const DENSITY_LEVELS: u32 = 6;

/// Height of the vertical segment through a point of `A` that is known to
/// lie in the basin of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WisLength {
    /// `c·exp(-τ)`; zero when `τ` diverged.
    pub certified: f64,
    /// Supremum of heights classified as `A`, found by bisection.
    pub empirical: f64,
    pub tau: f64,
    pub tau_diverged: bool,
}

/// Which length estimate drives a construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthSource {
    Certified,
    Empirical,
}

impl WisLength {
    pub fn get(&self, source: LengthSource) -> f64 {
        match source {
            LengthSource::Certified => self.certified,
            LengthSource::Empirical => self.empirical,
        }
    }
}

fn check_annulus(system: &SkewSystem) -> Result<()> {
    if system.kind() != SystemKind::Annulus || !system.exact_base() {
        return Err(Error::Unsupported("needs an annulus map with the exact linear base".into()));
    }
    Ok(())
}

/// Largest `z` (to `2^-40`) such that `(x, z)` is classified `A`.
///
/// Points on one vertical line share their base orbit and the fiber maps
/// are increasing, so the heights classified `A` form an interval `[0, L)`
/// up to budget effects; undecided heights count as outside, and heights
/// above `1 - z_a` are classified `B` outright.
pub fn escape_height(system: &SkewSystem, x: Phase, budget: u64, z_a: f64) -> Result<f64> {
    check_annulus(system)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if classify(system, PointA::exact(x, mid), budget, z_a)?.fate == Fate::A {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Certified and empirical immediate-stable-manifold heights at `(x, 0)`.
pub fn wis_length(
    system: &SkewSystem,
    x: Phase,
    setup: &ContractionSetup,
    horizon: u64,
    z_a: f64,
) -> Result<WisLength> {
    let t = lyapunov::tau(system, PointA::exact(x, 0.0), horizon, setup)?;
    Ok(WisLength {
        certified: t.wis_lower_bound,
        empirical: escape_height(system, x, horizon, z_a)?,
        tau: t.tau,
        tau_diverged: t.diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RRhoSettings {
    pub grid_n: usize,
    /// Orbit length for the finite-time exponent, `τ` and classification.
    pub horizon: u64,
    pub z_a: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RRhoPoint {
    pub phase: Phase,
    pub x: f64,
    /// Finite-time normal exponent over the horizon.
    pub lambda: f64,
    pub length: WisLength,
    pub member: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityLevel {
    pub k: u32,
    pub intervals: usize,
    /// Intervals `[j·3^-k, (j+1)·3^-k)` containing a member.
    pub covered: usize,
}

impl DensityLevel {
    pub fn all_covered(&self) -> bool {
        self.covered == self.intervals
    }
}

/// Points of `A` with negative finite-time exponent and an immediate stable
/// manifold of height at least `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RRhoEstimate {
    pub system: String,
    pub rho: f64,
    pub settings: RRhoSettings,
    pub lambda_perp: f64,
    pub c: f64,
    pub points: Vec<RRhoPoint>,
    pub member_fraction: f64,
    pub density: Vec<DensityLevel>,
}

pub fn is_member(lambda: f64, length: &WisLength, rho: f64) -> bool {
    lambda < 0.0 && length.empirical >= rho
}

impl RRhoEstimate {
    /// The same scan re-thresholded at another `rho`.
    pub fn with_threshold(&self, rho: f64) -> Result<RRhoEstimate> {
        check_rho(rho)?;
        let points: Vec<RRhoPoint> =
            self.points.iter().map(|p| RRhoPoint { member: is_member(p.lambda, &p.length, rho), ..*p }).collect();
        Ok(RRhoEstimate {
            rho,
            member_fraction: member_fraction(&points),
            density: density_probe(&points),
            points,
            ..self.clone()
        })
    }

    pub fn members(&self) -> impl Iterator<Item = &RRhoPoint> {
        self.points.iter().filter(|p| p.member)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

fn member_fraction(points: &[RRhoPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().filter(|p| p.member).count() as f64 / points.len() as f64
}

fn density_probe(points: &[RRhoPoint]) -> Vec<DensityLevel> {
    (1..=DENSITY_LEVELS)
        .map(|k| {
            let intervals = 3usize.pow(k);
            let mut hit = vec![false; intervals];
            for p in points.iter().filter(|p| p.member) {
                hit[((p.phase.0 as u128 * intervals as u128) >> 64) as usize] = true;
            }
            DensityLevel { k, intervals, covered: hit.iter().filter(|&&h| h).count() }
        })
        .collect()
}

/// Evaluate one base point.
pub fn r_rho_point(
    system: &SkewSystem,
    x: Phase,
    rho: f64,
    settings: &RRhoSettings,
    setup: &ContractionSetup,
) -> Result<RRhoPoint> {
    let lambda = lyapunov::normal_exponent_birkhoff(system, PointA::exact(x, 0.0), settings.horizon)?.value;
    let length = wis_length(system, x, setup, settings.horizon, settings.z_a)?;
    Ok(RRhoPoint { phase: x, x: x.to_f64(), lambda, member: is_member(lambda, &length, rho), length })
}

/// Scan `grid_n` jittered points `(i + u_i)/grid_n` of `A`.
pub fn r_rho_scan(system: &SkewSystem, rho: f64, settings: &RRhoSettings) -> Result<RRhoEstimate> {
    check_annulus(system)?;
    check_rho(rho)?;
    if settings.grid_n == 0 {
        return Err(Error::EmptyGrid);
    }
    let setup = ContractionSetup::new(system, lyapunov::Boundary::A)?;
    let n = settings.grid_n;
    let points: Vec<RRhoPoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(settings.seed, i as u64);
            let u: f64 = rng.random();
            let x = generic_phase((i as f64 + u) / n as f64, &mut rng);
            r_rho_point(system, x, rho, settings, &setup)
        })
        .collect::<Result<_>>()?;
    Ok(RRhoEstimate {
        system: system.canonical(),
        rho,
        settings: *settings,
        lambda_perp: setup.lambda_perp,
        c: setup.c,
        member_fraction: member_fraction(&points),
        density: density_probe(&points),
        points,
    })
}
