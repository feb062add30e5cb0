use serde::{Deserialize, Serialize};

use super::rrho::{wis_length, LengthSource, WisLength};
use super::triadic::{classify_branch_point, BranchPoint};
use crate::basins::Fate;
use crate::error::{Error, Result};
use crate::lyapunov::{Boundary, ContractionSetup};
use crate::maps::{Coord, Phase, SkewSystem, SystemKind};

/// Deepest descendant generation (`3^k` segments).
pub const MAX_GENERATIONS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackSettings {
    pub source: LengthSource,
    /// Horizon for `τ` and classification budget for the escape height.
    pub horizon: u64,
    pub z_a: f64,
    /// Largest admissible `n_δ`.
    pub cap: u64,
}

impl Default for PullbackSettings {
    fn default() -> Self {
        PullbackSettings { source: LengthSource::Empirical, horizon: 100_000, z_a: 1e-6, cap: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descendant {
    pub position: BranchPoint,
    pub x: f64,
    /// Height of the vertical segment obtained by fiber inversion.
    pub length: f64,
    /// `1 - (a/(a-1))^k·(1 - anchor length)`, from the lower bound
    /// `1 - 1/a` on `D_z f_z`.
    pub certified: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackResult {
    pub system: String,
    pub x0: Phase,
    pub delta: f64,
    pub k: u32,
    pub initial: WisLength,
    pub source: LengthSource,
    pub n_delta: u64,
    /// Heights of `θ^j(W(x0))` for `j = 0..=n_delta`.
    pub chain_lengths: Vec<f64>,
    pub anchor: BranchPoint,
    pub anchor_length: f64,
    /// Ordered by `x`; consecutive entries are `3^-k` apart.
    pub descendants: Vec<Descendant>,
}

fn check_system(system: &SkewSystem) -> Result<()> {
    if system.kind() != SystemKind::Annulus || system.is_perturbed() {
        return Err(Error::Unsupported("pullbacks need the unperturbed annulus map".into()));
    }
    Ok(())
}

/// Pull the immediate stable manifold of `(x0, 0)` back along the middle
/// branch until it is at least `1 - delta` tall, then take all `3^k`
/// preimages of that segment.
pub fn theta_pullback(
    system: &SkewSystem,
    x0: Phase,
    delta: f64,
    k: u32,
    settings: &PullbackSettings,
) -> Result<PullbackResult> {
    check_system(system)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k > MAX_GENERATIONS {
        return Err(Error::InvalidInput(format!("generation {k} exceeds {MAX_GENERATIONS}")));
    }
    let setup = ContractionSetup::new(system, Boundary::A)?;
    let initial = wis_length(system, x0, &setup, settings.horizon, settings.z_a)?;
    if initial.tau_diverged {
        return Err(Error::TauDiverged);
    }

    let mut anchor = BranchPoint::from_phase(x0);
    let mut length = initial.get(settings.source);
    let mut chain_lengths = vec![length];
    while length < 1.0 - delta {
        if anchor.theta >= settings.cap {
            return Err(Error::DeltaTooSmall(settings.cap));
        }
        anchor = anchor.theta_step()?;
        length = system.fiber_preimage(&Coord::Float(anchor.to_f64()), length);
        chain_lengths.push(length);
    }

    // level m holds the 3^m preimages (y + j)/3^m, indexed by j
    let mut level = vec![(anchor, length)];
    for m in 0..k {
        let width = level.len();
        let mut next = vec![(anchor, 0.0); 3 * width];
        for (j, &(parent, len)) in level.iter().enumerate() {
            for b in 0..3u128 {
                let child = parent.preimage(b, 1)?;
                debug_assert_eq!(child.index, j as u128 + b * 3u128.pow(m));
                next[j + b as usize * width] = (child, system.fiber_preimage(&Coord::Float(child.to_f64()), len));
            }
        }
        level = next;
    }
    let growth = system.a() / (system.a() - 1.0);
    let certified = 1.0 - growth.powi(k as i32) * (1.0 - length);
    let descendants = level
        .into_iter()
        .map(|(position, len)| Descendant { position, x: position.to_f64(), length: len, certified })
        .collect();
    Ok(PullbackResult {
        system: system.canonical(),
        x0,
        delta,
        k,
        initial,
        source: settings.source,
        n_delta: anchor.theta,
        chain_lengths,
        anchor,
        anchor_length: length,
        descendants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescendantCheck {
    pub nodes_checked: usize,
    /// `(descendant index, height)` of nodes not classified `A`.
    pub failures: Vec<(usize, f64)>,
}

/// Classify `nodes` heights evenly spaced in `(0, certified]` on every
/// descendant segment with a positive certified length.
pub fn check_descendants(
    system: &SkewSystem,
    result: &PullbackResult,
    nodes: usize,
    budget: u64,
    z_a: f64,
) -> Result<DescendantCheck> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (i, d) in result.descendants.iter().enumerate() {
        if d.certified <= 0.0 {
            continue;
        }
        for m in 1..=nodes {
            let z = d.certified * m as f64 / nodes as f64;
            checked += 1;
            if classify_branch_point(system, d.position, z, budget, z_a)?.fate != Fate::A {
                failures.push((i, z));
            }
        }
    }
    Ok(DescendantCheck { nodes_checked: checked, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_needs_no_pullback() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let r = theta_pullback(&s, Phase::HALF, 0.1, 0, &PullbackSettings::default()).unwrap();
        assert_eq!(r.n_delta, 0);
        assert_eq!(r.descendants.len(), 1);
        assert!(r.anchor_length >= 0.9);
        assert_eq!(r.descendants[0].x, 0.5);
    }

    #[test]
    fn certified_source_climbs_to_the_target() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let settings = PullbackSettings { source: LengthSource::Certified, horizon: 10_000, ..Default::default() };
        let r = theta_pullback(&s, Phase::HALF, 0.1, 1, &settings).unwrap();
        assert!(r.n_delta > 0);
        assert!(r.chain_lengths.windows(2).all(|w| w[1] > w[0]));
        assert!(*r.chain_lengths.last().unwrap() >= 0.9);
        assert!(r.chain_lengths[r.chain_lengths.len() - 2] < 0.9);
    }

    #[test]
    fn descendants_are_evenly_spaced() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let x0 = Phase(0x7d3a_91c4_5e2b_f068);
        let r = theta_pullback(&s, x0, 0.1, 3, &PullbackSettings::default()).unwrap();
        assert_eq!(r.descendants.len(), 27);
        for (j, d) in r.descendants.iter().enumerate() {
            assert_eq!((d.position.index, d.position.depth), (j as u128, 3));
            assert_eq!(d.position.theta, r.n_delta);
        }
        for w in r.descendants.windows(2) {
            assert!((w[1].x - w[0].x - 1.0 / 27.0).abs() < 1e-15);
        }
    }

    #[test]
    fn diverged_and_bad_inputs() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let settings = PullbackSettings { horizon: 1000, ..Default::default() };
        assert!(matches!(theta_pullback(&s, Phase::ZERO, 0.1, 1, &settings), Err(Error::TauDiverged)));
        assert!(theta_pullback(&s, Phase::HALF, 0.0, 1, &settings).is_err());
        assert!(theta_pullback(&s, Phase::HALF, 0.1, 13, &settings).is_err());
        let tight = PullbackSettings { source: LengthSource::Certified, cap: 3, ..settings };
        assert!(matches!(theta_pullback(&s, Phase::HALF, 1e-9, 0, &tight), Err(Error::DeltaTooSmall(3))));
    }
}
