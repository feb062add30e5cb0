use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{self, Boundary, ContractionSetup};
use crate::maps::{BaseSpace, SkewPoint, SkewSystem};

/// Which attractor an orbit committed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fate {
    A,
    B,
    Undecided,
}

impl Fate {
    /// The fate of the `S`-image of a point with this fate.
    pub fn swapped(self) -> Fate {
        match self {
            Fate::A => Fate::B,
            Fate::B => Fate::A,
            Fate::Undecided => Fate::Undecided,
        }
    }
}

impl std::fmt::Display for Fate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fate::A => "A",
            Fate::B => "B",
            Fate::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult {
    pub fate: Fate,
    /// First `t` with `z_t < z_A` or `z_t > 1 - z_A`.
    pub hitting_time: Option<u64>,
    /// Fiber extremes over the iterates examined.
    pub z_min: f64,
    pub z_max: f64,
    /// Certificate outcome, when one was requested and a fate was reached.
    pub certified: Option<bool>,
}

pub(crate) fn check_threshold(budget: u64, z_a: f64) -> Result<()> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    if !(z_a > 0.0 && z_a < 0.5) {
        return Err(Error::InvalidInput(format!("threshold must lie in (0, 1/2), got {z_a}")));
    }
    Ok(())
}

/// Iterate until the fiber coordinate drops below `z_a` (fate `A`), rises
/// above `1 - z_a` (fate `B`) or `budget` steps have been spent.
pub fn classify<B: BaseSpace>(system: &SkewSystem, p: SkewPoint<B>, budget: u64, z_a: f64) -> Result<OrbitResult> {
    check_threshold(budget, z_a)?;
    Ok(run(system, p, budget, z_a).0)
}

#[inline]
fn run<B: BaseSpace>(system: &SkewSystem, mut p: SkewPoint<B>, budget: u64, z_a: f64) -> (OrbitResult, SkewPoint<B>) {
    let z_b = 1.0 - z_a;
    let (mut z_min, mut z_max) = (p.z, p.z);
    let mut t = 0;
    loop {
        let fate = if p.z < z_a {
            Fate::A
        } else if p.z > z_b {
            Fate::B
        } else {
            Fate::Undecided
        };
        if fate != Fate::Undecided || t == budget {
            let hitting_time = (fate != Fate::Undecided).then_some(t);
            return (OrbitResult { fate, hitting_time, z_min, z_max, certified: None }, p);
        }
        p = system.apply(p);
        t += 1;
        z_min = z_min.min(p.z);
        z_max = z_max.max(p.z);
    }
}

/// Checks a threshold crossing against the certified stable-manifold length
/// of the boundary point below (or above) it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certifier {
    pub setup: ContractionSetup,
    /// Horizon for the `τ` evaluation.
    pub horizon: u64,
}

impl Certifier {
    pub fn new(system: &SkewSystem, horizon: u64) -> Result<Certifier> {
        Ok(Certifier { setup: ContractionSetup::new(system, Boundary::A)?, horizon })
    }

    /// True iff the distance of `p` to `boundary` is below `c·exp(-τ)` of its foot point.
    pub fn certifies<B: BaseSpace>(&self, system: &SkewSystem, p: SkewPoint<B>, boundary: Boundary) -> Result<bool> {
        let setup = ContractionSetup { boundary, ..self.setup };
        let foot = SkewPoint { base: p.base, z: boundary.level() };
        let t = lyapunov::tau(system, foot, self.horizon, &setup)?;
        Ok(!t.diverged && boundary.offset(p.z) < t.wis_lower_bound)
    }
}

/// [`classify`] followed by a certificate check at the crossing point.
pub fn classify_certified<B: BaseSpace>(
    system: &SkewSystem,
    p: SkewPoint<B>,
    budget: u64,
    z_a: f64,
    certifier: &Certifier,
) -> Result<OrbitResult> {
    check_threshold(budget, z_a)?;
    let (mut result, end) = run(system, p, budget, z_a);
    result.certified = match result.fate {
        Fate::A => Some(certifier.certifies(system, end, Boundary::A)?),
        Fate::B => Some(certifier.certifies(system, end, Boundary::B)?),
        Fate::Undecided => None,
    };
    Ok(result)
}
