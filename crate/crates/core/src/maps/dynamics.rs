use std::f64::consts::TAU;

use super::phase::{Coord, Phase};
use super::space::{BaseSpace, Jacobian, PointA, SkewPoint};
use super::system::{PerturbationSpec, SkewSystem, SystemKind};
use crate::error::{Error, Result};

const PREIMAGE_TOL: f64 = 1e-14;
const NEWTON_MAX_ITERS: usize = 50;

impl SkewSystem {
    /// One application of the map.
    ///
    /// Unperturbed systems keep exact base coordinates exact; a base
    /// perturbation moves the base to floating point.
    #[inline]
    pub fn apply<B: BaseSpace>(&self, p: SkewPoint<B>) -> SkewPoint<B> {
        debug_assert_eq!(B::KIND, self.kind(), "point type does not match system kind");
        match self.active() {
            None => SkewPoint { base: p.base.step_linear(), z: self.builtin_fiber(p.base.driver().cos_turn(), p.z) },
            Some(pert) => self.apply_perturbed(pert, p),
        }
    }

    #[inline]
    fn builtin_fiber(&self, cos: f64, z: f64) -> f64 {
        z + cos * (z / self.a()) * (1.0 - z)
    }

    fn apply_perturbed<B: BaseSpace>(&self, pert: &PerturbationSpec, p: SkewPoint<B>) -> SkewPoint<B> {
        let [x, y] = p.base.coords();
        let z = self.fiber_value(&p.base, p.z);
        let base = if self.base_perturbation().is_some() {
            p.base.step_shifted(pert.base_shift(x, y, p.z))
        } else {
            p.base.step_linear()
        };
        SkewPoint { base, z }
    }

    /// The fiber component `f_z(base, z)`.
    #[inline]
    pub fn fiber_value<B: BaseSpace>(&self, base: &B, z: f64) -> f64 {
        let cos = base.driver().cos_turn();
        match self.fiber_perturbation() {
            None => self.builtin_fiber(cos, z),
            Some(pert) => {
                let [x, y] = base.coords();
                z + z * (1.0 - z) * (cos / self.a() + pert.fiber_value(x, y, z))
            }
        }
    }

    /// `D_z f_z(base, z)`.
    #[inline]
    pub fn fiber_derivative<B: BaseSpace>(&self, base: &B, z: f64) -> f64 {
        let cos = base.driver().cos_turn();
        match self.fiber_perturbation() {
            None => 1.0 + (1.0 - 2.0 * z) * cos / self.a(),
            Some(pert) => {
                let [x, y] = base.coords();
                let f = pert.fiber_value(x, y, z);
                let g = pert.fiber_gradient(x, y, z);
                1.0 + (1.0 - 2.0 * z) * (cos / self.a() + f) + z * (1.0 - z) * g[2]
            }
        }
    }

    /// Full Jacobian at `p`.
    pub fn jacobian<B: BaseSpace>(&self, p: SkewPoint<B>) -> Jacobian {
        let d = B::DIM;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(d) {
            for (j, e) in row.iter_mut().enumerate().take(d) {
                *e = B::MATRIX[i][j] as f64;
            }
        }
        let z = p.z;
        let w = z * (1.0 - z);
        let (sin, cos) = p.base.driver().sin_cos_turn();
        m[d][0] = -(TAU / self.a()) * w * sin;
        m[d][d] = 1.0 + (1.0 - 2.0 * z) * cos / self.a();

        let [x, y] = p.base.coords();
        if let Some(pert) = self.base_perturbation() {
            let g = pert.base_gradients(x, y, z);
            for i in 0..d {
                for j in 0..d {
                    m[i][j] += g[i][j];
                }
                m[i][d] = g[i][2];
            }
        }
        if let Some(pert) = self.fiber_perturbation() {
            let f = pert.fiber_value(x, y, z);
            let g = pert.fiber_gradient(x, y, z);
            for j in 0..d {
                m[d][j] += w * g[j];
            }
            m[d][d] += (1.0 - 2.0 * z) * f + w * g[2];
        }
        Jacobian::new(d + 1, m)
    }

    /// `n`-fold composition.
    pub fn iterate<B: BaseSpace>(&self, mut p: SkewPoint<B>, n: u64) -> SkewPoint<B> {
        for _ in 0..n {
            p = self.apply(p);
        }
        p
    }

    /// The orbit `p, f(p), ..., f^n(p)`.
    pub fn orbit<B: BaseSpace>(&self, mut p: SkewPoint<B>, n: u64) -> Vec<SkewPoint<B>> {
        let mut out = Vec::with_capacity(n as usize + 1);
        out.push(p);
        for _ in 0..n {
            p = self.apply(p);
            out.push(p);
        }
        out
    }

    /// The inverse branch landing in the strip `[b/3, (b+1)/3) × [0,1]`.
    ///
    /// Branch 1 is the branch that contracts the base toward `x = 1/2`.
    /// Exact base coordinates are rounded down to the nearest `2^-64`.
    pub fn inverse_branch(&self, branch: u8, p: PointA) -> Result<PointA> {
        if self.kind() != SystemKind::Annulus {
            return Err(Error::Unsupported("inverse branches are defined for the annulus only".into()));
        }
        if self.base_perturbation().is_some() {
            return Err(Error::NotInvertible("perturbed base map has no fixed triadic branch structure".into()));
        }
        if branch > 2 {
            return Err(Error::InvalidInput(format!("branch must be 0, 1 or 2, got {branch}")));
        }
        let base = match p.base {
            Coord::Exact(k) => {
                let lifted = ((branch as u128) << 64) | k.0 as u128;
                Coord::Exact(Phase((lifted / 3) as u64))
            }
            Coord::Float(x) => Coord::Float((x + branch as f64) / 3.0),
        };
        Ok(PointA { base, z: self.fiber_preimage(&base, p.z) })
    }

    /// The unique `w ∈ [0,1]` with `f_z(base, w) = target`.
    ///
    /// Newton from `target`, falling back to bisection when an iterate
    /// leaves `[0, 1]` or fails to settle.
    pub fn fiber_preimage<B: BaseSpace>(&self, base: &B, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        if target >= 1.0 {
            return 1.0;
        }
        let residual = |w: f64| self.fiber_value(base, w) - target;
        let mut w = target;
        for _ in 0..NEWTON_MAX_ITERS {
            let step = residual(w) / self.fiber_derivative(base, w);
            let next = w - step;
            if !(0.0..=1.0).contains(&next) || !next.is_finite() {
                break;
            }
            w = next;
            if step.abs() <= PREIMAGE_TOL {
                return w;
            }
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > PREIMAGE_TOL * 0.01 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All fixed points of an unperturbed builtin map.
    ///
    /// Base fixed points solve `(M - I)v ≡ 0 (mod 1)`; each is crossed with
    /// the invariant boundaries `z ∈ {0, 1}`.
    pub fn fixed_points<B: BaseSpace>(&self) -> Result<Vec<SkewPoint<B>>> {
        if B::KIND != self.kind() {
            return Err(Error::InvalidInput("point type does not match system kind".into()));
        }
        if self.is_perturbed() {
            return Err(Error::Unsupported("fixed points of perturbed systems need root finding".into()));
        }
        let mut out = Vec::new();
        for v in base_fixed_points(B::MATRIX, B::DIM)? {
            let base = B::from_section(Coord::Exact(v[0]), Coord::Exact(v[1]));
            if base.driver().cos_turn() == 0.0 {
                return Err(Error::Unsupported("a whole fiber is fixed".into()));
            }
            for z in [0.0, 1.0] {
                out.push(SkewPoint { base, z });
            }
        }
        Ok(out)
    }
}

/// Solutions of `(M - I)v ≡ 0 (mod 1)`, as exact phases (second entry zero for `dim = 1`).
pub(crate) fn base_fixed_points(matrix: [[i64; 2]; 2], dim: usize) -> Result<Vec<[Phase; 2]>> {
    let mut out = Vec::new();
    match dim {
        1 => {
            let det = matrix[0][0] - 1;
            if det == 0 {
                return Err(Error::Unsupported("base map has a continuum of fixed points".into()));
            }
            let den = det.unsigned_abs();
            for m in 0..den {
                out.push([dyadic_phase(m as i128, den)?, Phase::ZERO]);
            }
        }
        2 => {
            let (a, b, c, d) = (matrix[0][0] - 1, matrix[0][1], matrix[1][0], matrix[1][1] - 1);
            let det = a * d - b * c;
            if det == 0 {
                return Err(Error::Unsupported("base map has a continuum of fixed points".into()));
            }
            let den = det.unsigned_abs();
            // v = adj(M - I)·m / det for integer m; det·Z^2 ⊂ (M - I)Z^2, so m ∈ [0, |det|)^2 covers every class.
            for m0 in 0..den as i128 {
                for m1 in 0..den as i128 {
                    let n0 = d as i128 * m0 - b as i128 * m1;
                    let n1 = -(c as i128) * m0 + a as i128 * m1;
                    let sign = det.signum() as i128;
                    let v = [dyadic_phase(n0 * sign, den)?, dyadic_phase(n1 * sign, den)?];
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        _ => unreachable!("base dimension is 1 or 2"),
    }
    out.sort();
    Ok(out)
}

fn dyadic_phase(num: i128, den: u64) -> Result<Phase> {
    let reduced = num.rem_euclid(den as i128) as u64;
    Phase::from_dyadic(reduced, den)
        .ok_or_else(|| Error::Unsupported(format!("fixed point with denominator {den} is not dyadic")))
}
