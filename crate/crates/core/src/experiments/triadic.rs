use serde::{Deserialize, Serialize};

use crate::basins::{classify, Fate, OrbitResult};
use crate::error::{Error, Result};
use crate::maps::{Coord, Phase, PointA, SkewSystem};

/// Deepest supported preimage level.
pub const MAX_DEPTH: u32 = 40;

/// A point of the circle reached from the dyadic `root` by `theta` steps of
/// the middle inverse branch `x ↦ (x + 1)/3` and then the preimage
/// `(y + index)/3^depth` of the result `y`.
///
/// Forward tripling undoes these steps exactly: it first lowers `depth`,
/// then `theta`, and from then on moves the exact root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchPoint {
    pub root: Phase,
    pub theta: u64,
    pub index: u128,
    pub depth: u32,
}

impl BranchPoint {
    pub fn from_phase(root: Phase) -> BranchPoint {
        BranchPoint { root, theta: 0, index: 0, depth: 0 }
    }

    /// One more middle-branch step; only valid before any other preimage.
    pub fn theta_step(self) -> Result<BranchPoint> {
        if self.depth > 0 {
            return Err(Error::InvalidInput("middle-branch steps must precede other preimages".into()));
        }
        Ok(BranchPoint { theta: self.theta + 1, ..self })
    }

    /// `(self + j)/3^k` for `0 <= j < 3^k`.
    pub fn preimage(self, j: u128, k: u32) -> Result<BranchPoint> {
        let depth = self.depth + k;
        if depth > MAX_DEPTH {
            return Err(Error::InvalidInput(format!("preimage depth {depth} exceeds {MAX_DEPTH}")));
        }
        if j >= 3u128.pow(k) {
            return Err(Error::InvalidInput(format!("preimage index {j} out of range for depth {k}")));
        }
        Ok(BranchPoint { index: self.index + j * 3u128.pow(self.depth), depth, ..self })
    }

    /// `3x mod 1`.
    pub fn step(self) -> BranchPoint {
        if self.depth > 0 {
            let depth = self.depth - 1;
            BranchPoint { index: self.index % 3u128.pow(depth), depth, ..self }
        } else if self.theta > 0 {
            BranchPoint { theta: self.theta - 1, ..self }
        } else {
            BranchPoint { root: self.root.triple(), ..self }
        }
    }

    /// The anchor `y = θ^theta(root) = 1/2 + (root - 1/2)/3^theta`.
    fn anchor(self) -> f64 {
        // root - 1/2 as a signed fraction in [-1/2, 1/2)
        let offset = self.root.wrapping_add(Phase::HALF).0 as i64 as f64 / 2f64.powi(64);
        let scale = 3f64.powi(-(self.theta.min(i32::MAX as u64) as i32));
        0.5 + offset * scale
    }

    pub fn to_f64(self) -> f64 {
        let y = self.anchor();
        let x = (y + self.index as f64) / 3f64.powi(self.depth as i32);
        if x >= 1.0 {
            0.0
        } else {
            x
        }
    }

    /// The exact phase once every preimage step has been undone.
    pub fn as_phase(self) -> Option<Phase> {
        (self.depth == 0 && self.theta == 0).then_some(self.root)
    }
}

/// Classify `(x, z)`: iterate with floating base values until the base is
/// an exact dyadic phase again, then hand off to the exact classifier.
pub fn classify_branch_point(
    system: &SkewSystem,
    x: BranchPoint,
    z: f64,
    budget: u64,
    z_a: f64,
) -> Result<OrbitResult> {
    if system.is_perturbed() {
        return Err(Error::Unsupported("preimage classification needs the unperturbed map".into()));
    }
    let (mut x, mut z) = (x, z);
    let (mut z_min, mut z_max) = (z, z);
    let mut t = 0;
    loop {
        let fate = if z < z_a {
            Fate::A
        } else if z > 1.0 - z_a {
            Fate::B
        } else {
            Fate::Undecided
        };
        if fate != Fate::Undecided || t == budget {
            let hitting_time = (fate != Fate::Undecided).then_some(t);
            return Ok(OrbitResult { fate, hitting_time, z_min, z_max, certified: None });
        }
        if let Some(root) = x.as_phase() {
            let mut r = classify(system, PointA::exact(root, z), budget - t, z_a)?;
            r.hitting_time = r.hitting_time.map(|h| h + t);
            r.z_min = r.z_min.min(z_min);
            r.z_max = r.z_max.max(z_max);
            return Ok(r);
        }
        z = system.fiber_value(&Coord::Float(x.to_f64()), z);
        x = x.step();
        t += 1;
        z_min = z_min.min(z);
        z_max = z_max.max(z);
    }
}
