use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basins::{classify, Certifier, Fate};
use crate::error::{Error, Result};
use crate::maps::{Coord, Phase, PointA, SkewSystem, SystemKind};
use crate::sampling::stream_rng;

/// Node-count floor and cap for segment graphs.
pub const MIN_NODES: usize = 1024;
pub const MAX_NODES: usize = 1 << 20;
/// Deepest supported generation; keeps `nodes·3^r` well inside `u64`.
pub const MAX_GENERATIONS: u32 = 20;

/// Default node count for generation `r`.
pub fn default_nodes(r: u32) -> usize {
    let pow = 3usize.saturating_pow(r);
    pow.clamp(MIN_NODES, MAX_NODES)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentNode {
    pub x: f64,
    pub z: f64,
    /// `dZ/dx` of the image graph at this node.
    pub slope: f64,
}

/// `f^r` of the horizontal segment `[n·3^-r, (n+1)·3^-r) × {rho}`, sampled
/// on the uniform grid `x_i = i/N` of the full circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentGraph {
    pub system: String,
    pub n: u64,
    pub r: u32,
    pub rho: f64,
    pub nodes: Vec<SegmentNode>,
    pub max_abs_slope: f64,
}

impl SegmentGraph {
    /// The ancestor segment `[lo, hi)` at height `rho`.
    pub fn ancestor(&self) -> (f64, f64) {
        let w = 3f64.powi(-(self.r as i32));
        (self.n as f64 * w, (self.n + 1) as f64 * w)
    }
}

fn check_segment_system(system: &SkewSystem) -> Result<()> {
    if system.kind() != SystemKind::Annulus || !system.lebesgue_base() {
        return Err(Error::Unsupported("segment propagation needs an annulus map with the linear base".into()));
    }
    Ok(())
}

pub fn propagate_segment(system: &SkewSystem, n: u64, r: u32, rho: f64) -> Result<SegmentGraph> {
    propagate_segment_with(system, n, r, rho, default_nodes(r))
}

/// Forward `r` steps of the triadic segment with slope tracking.
///
/// Node `i` starts at `(n + i/N)·3^-r`, so its base orbit is the exact
/// rational `3^j·(nN + i) / (N·3^r) mod 1` and lands on `i/N`. The slope
/// follows `s' = (D_x f_z + s·D_z f_z) / D_x f_x` at the node itself.
pub fn propagate_segment_with(system: &SkewSystem, n: u64, r: u32, rho: f64, nodes: usize) -> Result<SegmentGraph> {
    check_segment_system(system)?;
    if r > MAX_GENERATIONS {
        return Err(Error::BadSegment(format!("generation {r} exceeds {MAX_GENERATIONS}")));
    }
    let width = 3u64.pow(r);
    if n >= width {
        return Err(Error::BadSegment(format!("index {n} must be below 3^{r} = {width}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::BadSegment(format!("height {rho} outside [0, 1]")));
    }
    if nodes == 0 || nodes > MAX_NODES {
        return Err(Error::InvalidInput(format!("node count must lie in 1..={MAX_NODES}")));
    }
    let count = nodes as u64;
    let den = count * width;
    let out: Vec<SegmentNode> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut num = (n * count + i) % den;
            let (mut z, mut slope) = (rho, 0.0);
            for _ in 0..r {
                let p = PointA { base: Coord::Float(num as f64 / den as f64), z };
                let j = system.jacobian(p);
                slope = (j.dx_fz() + slope * j.dz_fz()) / j.dx_fx();
                z = system.fiber_value(&p.base, z);
                num = (3 * num) % den;
            }
            SegmentNode { x: num as f64 / den as f64, z, slope }
        })
        .collect();
    let max_abs_slope = out.iter().map(|s| s.slope.abs()).fold(0.0, f64::max);
    Ok(SegmentGraph { system: system.canonical(), n, r, rho, nodes: out, max_abs_slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FateSettings {
    pub budget: u64,
    pub z_a: f64,
    pub seed: u64,
    /// `τ` horizon for certificate checks; none skips them.
    #[serde(default)]
    pub certify_horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFractions {
    pub fraction_a: f64,
    pub fraction_b: f64,
    pub fraction_undecided: f64,
    /// Decided nodes whose crossing was certified, when requested.
    pub certified: Option<usize>,
    pub fates: Vec<Fate>,
}

/// Classify one point per node of the image graph.
///
/// Node `i` is represented by a point drawn uniformly from its grid cell
/// `[i/N, (i+1)/N)` on the graph, using the node slope, so that its base
/// orbit is generic rather than the eventually fixed orbit of `i/N`. Since
/// `f^r` is linear in `x` on the ancestor segment, the fractions estimate
/// the `x`-measure fractions of the ancestor.
pub fn segment_basin_fractions(
    system: &SkewSystem,
    graph: &SegmentGraph,
    settings: &FateSettings,
) -> Result<SegmentFractions> {
    check_segment_system(system)?;
    if graph.nodes.is_empty() {
        return Err(Error::InvalidInput("segment graph has no nodes".into()));
    }
    let certifier = match settings.certify_horizon {
        Some(h) => Some(Certifier::new(system, h)?),
        None => None,
    };
    let count = graph.nodes.len() as u128;
    let span = (1u128 << 64) / count;
    let results: Vec<(Fate, Option<bool>)> = graph
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| -> Result<(Fate, Option<bool>)> {
            let mut rng = stream_rng(settings.seed, i as u64);
            let start = ((i as u128) << 64) / count;
            let offset = (rng.next_u64() as u128 * span) >> 64;
            let x = Phase((start + offset) as u64);
            let dx = offset as f64 / 2f64.powi(64);
            let z = (node.z + node.slope * dx).clamp(0.0, 1.0);
            let p = PointA::exact(x, z);
            let r = match &certifier {
                Some(c) => crate::basins::classify_certified(system, p, settings.budget, settings.z_a, c)?,
                None => classify(system, p, settings.budget, settings.z_a)?,
            };
            Ok((r.fate, r.certified))
        })
        .collect::<Result<_>>()?;
    let total = results.len() as f64;
    let share = |f: Fate| results.iter().filter(|r| r.0 == f).count() as f64 / total;
    let certified = certifier.map(|_| results.iter().filter(|r| r.1 == Some(true)).count());
    Ok(SegmentFractions {
        fraction_a: share(Fate::A),
        fraction_b: share(Fate::B),
        fraction_undecided: share(Fate::Undecided),
        certified,
        fates: results.into_iter().map(|r| r.0).collect(),
    })
}

/// Sup of `|D_x f_z|` over the annulus, `2π/a · 1/4`.
pub fn max_abs_dx_fz(a: f64) -> f64 {
    std::f64::consts::PI / (2.0 * a)
}

/// Fixed point `m / (3 - M)` of the slope-bound recurrence `s ↦ (m + M·s)/3`
/// with `m` a bound on `|D_x f_z|` and `M = 1 + 1/a` on `|D_z f_z|`.
pub fn slope_fixed_point(a: f64, dx_fz_bound: f64) -> f64 {
    dx_fz_bound / (3.0 - (1.0 + 1.0 / a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trivial_segments() {
        let s = SkewSystem::annulus(32.0).unwrap();
        let g = propagate_segment(&s, 5, 3, 0.0).unwrap();
        assert!(g.nodes.iter().all(|p| p.z == 0.0 && p.slope == 0.0));
        let g = propagate_segment_with(&s, 0, 0, 0.37, 100).unwrap();
        assert!(g.nodes.iter().all(|p| p.z == 0.37 && p.slope == 0.0));
        assert_eq!(g.max_abs_slope, 0.0);
    }

    #[test]
    fn image_covers_the_circle_once() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let g = propagate_segment_with(&s, 7, 4, 0.6, 500).unwrap();
        for (i, p) in g.nodes.iter().enumerate() {
            assert_eq!(p.x, i as f64 / 500.0);
        }
        assert_eq!(g.ancestor(), (7.0 / 81.0, 8.0 / 81.0));
    }

    #[test]
    fn slopes_match_difference_quotients() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let (n, r, rho) = (11u64, 3u32, 0.45);
        let g = propagate_segment_with(&s, n, r, rho, 2000).unwrap();
        let lo = n as f64 / 27.0;
        let image_z = |x0: f64| {
            let mut p = PointA::float(x0, rho);
            for _ in 0..r {
                p = s.apply(p);
            }
            p.z
        };
        for i in [100usize, 777, 1500] {
            let x0 = lo + i as f64 / 2000.0 / 27.0;
            let h = 1e-7;
            // d/dx of the image = (d/dx0 of z_r) / 3^r
            let fd = (image_z(x0 + h) - image_z(x0 - h)) / (2.0 * h) / 27.0;
            assert!((fd - g.nodes[i].slope).abs() < 1e-6, "{fd} vs {}", g.nodes[i].slope);
            assert!((image_z(x0) - g.nodes[i].z).abs() < 1e-13);
        }
    }

    #[test]
    fn slopes_stay_below_the_bound() {
        let s = SkewSystem::annulus(32.0).unwrap();
        for (n, r) in [(0u64, 1u32), (100, 6), (4000, 9), (0, 10)] {
            let g = propagate_segment(&s, n, r, 0.5).unwrap();
            assert!(g.max_abs_slope <= PI / 10.0);
            assert!(g.max_abs_slope <= slope_fixed_point(32.0, max_abs_dx_fz(32.0)) + 1e-12);
        }
        assert!((slope_fixed_point(32.0, PI / 16.0) - 2.0 * PI / 63.0).abs() < 1e-15);
        assert!((slope_fixed_point(32.0, PI / 64.0) - PI / 126.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_triadic_segments() {
        let s = SkewSystem::annulus(32.0).unwrap();
        assert!(matches!(propagate_segment(&s, 9, 2, 0.5), Err(Error::BadSegment(_))));
        assert!(matches!(propagate_segment(&s, 0, 2, 1.5), Err(Error::BadSegment(_))));
        assert!(matches!(propagate_segment(&s, 0, 21, 0.5), Err(Error::BadSegment(_))));
        let t = SkewSystem::torus(32.0).unwrap();
        assert!(matches!(propagate_segment(&t, 0, 2, 0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fractions_on_the_boundary_and_in_the_middle() {
        let s = SkewSystem::annulus(4.0).unwrap();
        let settings = FateSettings { budget: 100_000, z_a: 1e-6, seed: 3, certify_horizon: None };
        let g = propagate_segment_with(&s, 0, 2, 0.0, 256).unwrap();
        let f = segment_basin_fractions(&s, &g, &settings).unwrap();
        assert_eq!(f.fraction_a, 1.0);
        let g = propagate_segment_with(&s, 4, 2, 0.5, 512).unwrap();
        let f = segment_basin_fractions(&s, &g, &settings).unwrap();
        assert!(f.fraction_a > 0.0 && f.fraction_b > 0.0);
        assert!((f.fraction_a + f.fraction_b + f.fraction_undecided - 1.0).abs() < 1e-12);
        assert_eq!(f.fates.len(), 512);
    }
}
