use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base-space selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// `S^1 × [0,1]` over the tripling map.
    Annulus,
    /// `T^2 × [0,1]` over the cat-like automorphism `(3x + y, 2x + y)`.
    #[serde(rename = "torus")]
    ThickenedTorus,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Annulus => "annulus",
            SystemKind::ThickenedTorus => "torus",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "annulus" => Ok(SystemKind::Annulus),
            "torus" | "thickened-torus" | "thickenedtorus" => Ok(SystemKind::ThickenedTorus),
            other => Err(Error::InvalidSystem(format!("unknown kind `{other}`"))),
        }
    }
}

/// One term `amp · cos(2π(kx·x + ky·y) + phase) · z^z_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub kx: i32,
    #[serde(default)]
    pub ky: i32,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub z_power: u32,
}

impl TrigTerm {
    pub fn new(amp: f64, kx: i32, ky: i32, phase: f64, z_power: u32) -> TrigTerm {
        TrigTerm { amp, kx, ky, phase, z_power }
    }

    #[inline]
    fn angle(&self, x: f64, y: f64) -> f64 {
        TAU * (self.kx as f64 * x + self.ky as f64 * y) + self.phase
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64, z: f64) -> f64 {
        self.amp * self.angle(x, y).cos() * z.powi(self.z_power as i32)
    }

    /// Partial derivatives `(∂x, ∂y, ∂z)`.
    pub fn gradient(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let (s, c) = self.angle(x, y).sin_cos();
        let zp = z.powi(self.z_power as i32);
        let dz =
            if self.z_power == 0 { 0.0 } else { self.amp * c * self.z_power as f64 * z.powi(self.z_power as i32 - 1) };
        [-self.amp * s * TAU * self.kx as f64 * zp, -self.amp * s * TAU * self.ky as f64 * zp, dz]
    }

    /// Sup bound of `|∂x| + |∂y|` over the domain.
    fn base_gradient_bound(&self) -> f64 {
        self.amp.abs() * TAU * (self.kx.unsigned_abs() + self.ky.unsigned_abs()) as f64
    }
}

impl fmt::Display for TrigTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}", self.amp, self.kx, self.ky, self.phase, self.z_power)
    }
}

impl FromStr for TrigTerm {
    type Err = Error;

    /// `amp:kx[:ky[:phase[:z_power]]]`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSystem(format!("bad trig term `{s}`, expected amp:kx:ky:phase:z_power"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() < 2 || parts.len() > 5 {
            return Err(bad());
        }
        let amp = parts[0].parse().map_err(|_| bad())?;
        let kx = parts[1].parse().map_err(|_| bad())?;
        let ky = parts.get(2).map_or(Ok(0), |p| p.parse()).map_err(|_| bad())?;
        let phase = parts.get(3).map_or(Ok(0.0), |p| p.parse()).map_err(|_| bad())?;
        let z_power = parts.get(4).map_or(Ok(0), |p| p.parse()).map_err(|_| bad())?;
        Ok(TrigTerm { amp, kx, ky, phase, z_power })
    }
}

fn sum_terms(terms: &[TrigTerm], x: f64, y: f64, z: f64) -> f64 {
    terms.iter().map(|t| t.value(x, y, z)).sum()
}

fn sum_gradients(terms: &[TrigTerm], x: f64, y: f64, z: f64) -> [f64; 3] {
    terms.iter().fold([0.0; 3], |acc, t| {
        let g = t.gradient(x, y, z);
        [acc[0] + g[0], acc[1] + g[1], acc[2] + g[2]]
    })
}

/// A finite trigonometric perturbation of the builtin map.
///
/// The base components are added to the linear base map; the fiber
/// component enters as `z + z(1-z)·(cos(2πx)/a + ε·fiber(x, y, z))`, so the
/// boundary fibers `z = 0` and `z = 1` stay invariant for every `ε`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub base_x: Vec<TrigTerm>,
    #[serde(default)]
    pub base_y: Vec<TrigTerm>,
    #[serde(default)]
    pub fiber: Vec<TrigTerm>,
}

impl PerturbationSpec {
    pub fn is_trivial(&self) -> bool {
        self.epsilon == 0.0 || (self.base_x.is_empty() && self.base_y.is_empty() && self.fiber.is_empty())
    }

    fn perturbs_base(&self) -> bool {
        !self.is_trivial() && !(self.base_x.is_empty() && self.base_y.is_empty())
    }

    fn perturbs_fiber(&self) -> bool {
        !self.is_trivial() && !self.fiber.is_empty()
    }

    pub fn base_depends_on_z(&self) -> bool {
        self.perturbs_base() && self.base_x.iter().chain(&self.base_y).any(|t| t.z_power > 0)
    }

    #[inline]
    pub(crate) fn base_shift(&self, x: f64, y: f64, z: f64) -> [f64; 2] {
        [self.epsilon * sum_terms(&self.base_x, x, y, z), self.epsilon * sum_terms(&self.base_y, x, y, z)]
    }

    #[inline]
    pub(crate) fn fiber_value(&self, x: f64, y: f64, z: f64) -> f64 {
        self.epsilon * sum_terms(&self.fiber, x, y, z)
    }

    pub(crate) fn base_gradients(&self, x: f64, y: f64, z: f64) -> [[f64; 3]; 2] {
        let gx = sum_gradients(&self.base_x, x, y, z);
        let gy = sum_gradients(&self.base_y, x, y, z);
        let e = self.epsilon;
        [[e * gx[0], e * gx[1], e * gx[2]], [e * gy[0], e * gy[1], e * gy[2]]]
    }

    pub(crate) fn fiber_gradient(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let g = sum_gradients(&self.fiber, x, y, z);
        [self.epsilon * g[0], self.epsilon * g[1], self.epsilon * g[2]]
    }

    fn fiber_depends_on_y(&self) -> bool {
        self.perturbs_fiber() && self.fiber.iter().any(|t| t.ky != 0)
    }
}

/// Serializable description of a system; validated into a [`SkewSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
}

/// A concrete boundary-preserving skew product.
///
/// `a` is the contraction-strength divisor in the fiber term
/// `cos(2πx)·(z/a)·(1 - z)`; `a = 32` is the classical example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemSpec", into = "SystemSpec")]
pub struct SkewSystem {
    kind: SystemKind,
    a: f64,
    perturbation: Option<PerturbationSpec>,
    lebesgue_base: bool,
}

impl SkewSystem {
    pub fn new(kind: SystemKind, a: f64, perturbation: Option<PerturbationSpec>) -> Result<SkewSystem> {
        if !a.is_finite() || a <= 1.0 {
            return Err(Error::InvalidSystem(format!("a must be finite and > 1, got {a}")));
        }
        if let Some(p) = &perturbation {
            validate_perturbation(kind, a, p)?;
        }
        let lebesgue_base = !perturbation.as_ref().is_some_and(PerturbationSpec::perturbs_base);
        Ok(SkewSystem { kind, a, perturbation, lebesgue_base })
    }

    pub fn annulus(a: f64) -> Result<SkewSystem> {
        SkewSystem::new(SystemKind::Annulus, a, None)
    }

    pub fn torus(a: f64) -> Result<SkewSystem> {
        SkewSystem::new(SystemKind::ThickenedTorus, a, None)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn perturbation(&self) -> Option<&PerturbationSpec> {
        self.perturbation.as_ref()
    }

    /// The perturbation if it changes the map at all.
    #[inline]
    pub(crate) fn active(&self) -> Option<&PerturbationSpec> {
        self.perturbation.as_ref().filter(|p| !p.is_trivial())
    }

    /// True iff the base map provably preserves Lebesgue measure.
    pub fn lebesgue_base(&self) -> bool {
        self.lebesgue_base
    }

    /// True iff base coordinates can be carried in exact fixed point.
    pub fn exact_base(&self) -> bool {
        self.lebesgue_base
    }

    pub fn is_perturbed(&self) -> bool {
        self.active().is_some()
    }

    pub(crate) fn base_perturbation(&self) -> Option<&PerturbationSpec> {
        self.active().filter(|p| p.perturbs_base())
    }

    pub(crate) fn fiber_perturbation(&self) -> Option<&PerturbationSpec> {
        self.active().filter(|p| p.perturbs_fiber())
    }

    pub(crate) fn fiber_depends_on_y(&self) -> bool {
        self.active().is_some_and(PerturbationSpec::fiber_depends_on_y)
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec { kind: self.kind, a: self.a, perturbation: self.perturbation.clone() }
    }

    /// One-line canonical text form, parseable by `FromStr`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

fn validate_perturbation(kind: SystemKind, a: f64, p: &PerturbationSpec) -> Result<()> {
    if !p.epsilon.is_finite() || p.epsilon < 0.0 {
        return Err(Error::InvalidSystem(format!("epsilon must be finite and >= 0, got {}", p.epsilon)));
    }
    let all = p.base_x.iter().chain(&p.base_y).chain(&p.fiber);
    if all.clone().any(|t| !t.amp.is_finite() || !t.phase.is_finite()) {
        return Err(Error::InvalidSystem("non-finite trig coefficient".into()));
    }
    if kind == SystemKind::Annulus && (!p.base_y.is_empty() || all.clone().any(|t| t.ky != 0)) {
        return Err(Error::InvalidSystem("annulus perturbations cannot depend on y".into()));
    }
    // Fiber: |cos/a + εF| <= 1 keeps [0,1] invariant; the derivative bound keeps it monotone.
    let fiber_sup: f64 = p.fiber.iter().map(|t| t.amp.abs()).sum();
    let fiber_dz: f64 = p.fiber.iter().map(|t| t.amp.abs() * (1.0 + t.z_power as f64 / 4.0)).sum();
    if 1.0 / a + p.epsilon * fiber_sup > 1.0 || 1.0 / a + p.epsilon * fiber_dz >= 1.0 {
        return Err(Error::InvalidSystem(
            "fiber perturbation too large: fiber map would leave [0,1] or lose monotonicity".into(),
        ));
    }
    // Base: keep the covering degree (annulus) / invertibility margin (torus).
    let base_grad: f64 = p.base_x.iter().chain(&p.base_y).map(TrigTerm::base_gradient_bound).sum();
    let limit = match kind {
        SystemKind::Annulus => 3.0,
        SystemKind::ThickenedTorus => 0.5,
    };
    if p.epsilon * base_grad >= limit {
        return Err(Error::InvalidSystem("base perturbation too large".into()));
    }
    Ok(())
}

impl TryFrom<SystemSpec> for SkewSystem {
    type Error = Error;

    fn try_from(spec: SystemSpec) -> Result<Self> {
        SkewSystem::new(spec.kind, spec.a, spec.perturbation)
    }
}

impl From<SkewSystem> for SystemSpec {
    fn from(s: SkewSystem) -> Self {
        s.spec()
    }
}

fn join_terms(terms: &[TrigTerm]) -> String {
    terms.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl fmt::Display for SkewSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} a={}", self.kind, self.a)?;
        if let Some(p) = &self.perturbation {
            write!(f, " epsilon={}", p.epsilon)?;
            for (key, terms) in [("base_x", &p.base_x), ("base_y", &p.base_y), ("fiber", &p.fiber)] {
                if !terms.is_empty() {
                    write!(f, " {key}={}", join_terms(terms))?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for SkewSystem {
    type Err = Error;

    /// Parses the canonical form, e.g. `kind=annulus a=4 epsilon=0.001 fiber=1:2:0:0:0`.
    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut a = None;
        let mut pert: Option<PerturbationSpec> = None;
        for tok in s.split_whitespace() {
            let (key, value) =
                tok.split_once('=').ok_or_else(|| Error::InvalidSystem(format!("expected key=value, got `{tok}`")))?;
            let parse_terms =
                |v: &str| -> Result<Vec<TrigTerm>> { v.split(';').filter(|t| !t.is_empty()).map(str::parse).collect() };
            match key {
                "kind" => kind = Some(value.parse()?),
                "a" => a = Some(value.parse().map_err(|_| Error::InvalidSystem(format!("bad a `{value}`")))?),
                "epsilon" => {
                    pert.get_or_insert_with(Default::default).epsilon =
                        value.parse().map_err(|_| Error::InvalidSystem(format!("bad epsilon `{value}`")))?
                }
                "base_x" => pert.get_or_insert_with(Default::default).base_x = parse_terms(value)?,
                "base_y" => pert.get_or_insert_with(Default::default).base_y = parse_terms(value)?,
                "fiber" => pert.get_or_insert_with(Default::default).fiber = parse_terms(value)?,
                other => return Err(Error::InvalidSystem(format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::InvalidSystem("missing kind".into()))?;
        let a = a.ok_or_else(|| Error::InvalidSystem("missing a".into()))?;
        SkewSystem::new(kind, a, pert)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_perturbation() -> PerturbationSpec {
        PerturbationSpec {
            epsilon: 1e-3,
            base_x: vec![TrigTerm::new(1.0, 1, 0, 0.0, 0)],
            base_y: vec![],
            fiber: vec![TrigTerm::new(0.5, 2, 0, 0.25, 1)],
        }
    }

    #[test]
    fn rejects_weak_contraction_divisor() {
        assert!(SkewSystem::annulus(1.0).is_err());
        assert!(SkewSystem::annulus(0.5).is_err());
        assert!(SkewSystem::annulus(f64::NAN).is_err());
        assert!(SkewSystem::annulus(1.0001).is_ok());
    }

    #[test]
    fn canonical_form_round_trips() {
        let sys = SkewSystem::new(SystemKind::Annulus, 4.0, Some(sample_perturbation())).unwrap();
        let text = sys.canonical();
        assert_eq!(text, "kind=annulus a=4 epsilon=0.001 base_x=1:1:0:0:0 fiber=0.5:2:0:0.25:1");
        assert_eq!(text.parse::<SkewSystem>().unwrap(), sys);
        let t = SkewSystem::torus(32.0).unwrap();
        assert_eq!(t.canonical(), "kind=torus a=32");
        assert_eq!(t.canonical().parse::<SkewSystem>().unwrap(), t);
    }

    #[test]
    fn lebesgue_flag_tracks_base_perturbation() {
        assert!(SkewSystem::annulus(32.0).unwrap().lebesgue_base());
        let base = SkewSystem::new(SystemKind::Annulus, 4.0, Some(sample_perturbation())).unwrap();
        assert!(!base.lebesgue_base());
        let fiber_only = PerturbationSpec { base_x: vec![], ..sample_perturbation() };
        let s = SkewSystem::new(SystemKind::Annulus, 4.0, Some(fiber_only)).unwrap();
        assert!(s.lebesgue_base());
        assert!(s.is_perturbed());
        let zero = PerturbationSpec { epsilon: 0.0, ..sample_perturbation() };
        let s = SkewSystem::new(SystemKind::Annulus, 4.0, Some(zero)).unwrap();
        assert!(s.lebesgue_base() && !s.is_perturbed());
    }

    #[test]
    fn rejects_oversized_perturbations() {
        let big = PerturbationSpec { epsilon: 1.0, ..sample_perturbation() };
        assert!(SkewSystem::new(SystemKind::Annulus, 4.0, Some(big)).is_err());
        let with_y = PerturbationSpec { base_y: vec![TrigTerm::new(1.0, 0, 1, 0.0, 0)], ..sample_perturbation() };
        assert!(SkewSystem::new(SystemKind::Annulus, 4.0, Some(with_y.clone())).is_err());
        assert!(SkewSystem::new(SystemKind::ThickenedTorus, 4.0, Some(with_y)).is_ok());
    }

    #[test]
    fn json_goes_through_validation() {
        let json = r#"{"kind":"annulus","a":0.5}"#;
        assert!(serde_json::from_str::<SkewSystem>(json).is_err());
        let json = r#"{"kind":"torus","a":4.0}"#;
        let s: SkewSystem = serde_json::from_str(json).unwrap();
        assert_eq!(s.kind(), SystemKind::ThickenedTorus);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"torus","a":4.0}"#);
    }

    #[test]
    fn trig_term_gradient_matches_difference_quotient() {
        let t = TrigTerm::new(0.7, 2, -1, 0.3, 2);
        let (x, y, z) = (0.31, 0.77, 0.42);
        let h = 1e-6;
        let g = t.gradient(x, y, z);
        let fd = [
            (t.value(x + h, y, z) - t.value(x - h, y, z)) / (2.0 * h),
            (t.value(x, y + h, z) - t.value(x, y - h, z)) / (2.0 * h),
            (t.value(x, y, z + h) - t.value(x, y, z - h)) / (2.0 * h),
        ];
        for i in 0..3 {
            assert!((g[i] - fd[i]).abs() < 1e-6, "{i}: {} vs {}", g[i], fd[i]);
        }
    }
}
