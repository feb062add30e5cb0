use std::fmt;

use serde::{Deserialize, Serialize};

use super::phase::{wrap_unit, Coord, Phase};
use super::system::SystemKind;

/// The base of a skew product: the circle or the 2-torus.
///
/// The unperturbed base map is the integer-linear map [`BaseSpace::MATRIX`]
/// (upper-left `DIM × DIM` block), iterated exactly on [`Coord::Exact`].
pub trait BaseSpace: Copy + Send + Sync + PartialEq + fmt::Debug + 'static {
    const KIND: SystemKind;
    const DIM: usize;
    const MATRIX: [[i64; 2]; 2];

    /// The coordinate that drives the fiber (`x`).
    fn driver(&self) -> Coord;

    /// `(x, y)` as floats; `y = 0` on the circle.
    fn coords(&self) -> [f64; 2];

    fn step_linear(self) -> Self;

    /// Linear step followed by a shift, in floating point.
    fn step_shifted(self, shift: [f64; 2]) -> Self;

    /// The base half of `S(x, z) = (x + 1/2, 1 - z)`.
    fn shift_half(self) -> Self;

    fn to_float(self) -> Self;

    fn is_exact(&self) -> bool;

    /// A point on the section `y = y0` (ignored on the circle).
    fn from_section(x: Coord, y: Coord) -> Self;

    /// Build from raw float coordinates.
    fn from_floats(c: [f64; 2]) -> Self;
}

impl BaseSpace for Coord {
    const KIND: SystemKind = SystemKind::Annulus;
    const DIM: usize = 1;
    const MATRIX: [[i64; 2]; 2] = [[3, 0], [0, 0]];

    #[inline]
    fn driver(&self) -> Coord {
        *self
    }

    fn coords(&self) -> [f64; 2] {
        [self.value(), 0.0]
    }

    #[inline]
    fn step_linear(self) -> Self {
        match self {
            Coord::Exact(p) => Coord::Exact(p.triple()),
            Coord::Float(x) => Coord::Float(wrap_unit(3.0 * x)),
        }
    }

    fn step_shifted(self, shift: [f64; 2]) -> Self {
        Coord::Float(wrap_unit(3.0 * self.value() + shift[0]))
    }

    fn shift_half(self) -> Self {
        Coord::shift_half(self)
    }

    fn to_float(self) -> Self {
        Coord::to_float(self)
    }

    fn is_exact(&self) -> bool {
        Coord::is_exact(*self)
    }

    fn from_section(x: Coord, _y: Coord) -> Self {
        x
    }

    fn from_floats(c: [f64; 2]) -> Self {
        Coord::Float(wrap_unit(c[0]))
    }
}

/// A point of `T^2 = [0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusBase {
    pub x: Coord,
    pub y: Coord,
}

impl TorusBase {
    pub fn exact(x: Phase, y: Phase) -> TorusBase {
        TorusBase { x: Coord::Exact(x), y: Coord::Exact(y) }
    }
}

impl BaseSpace for TorusBase {
    const KIND: SystemKind = SystemKind::ThickenedTorus;
    const DIM: usize = 2;
    const MATRIX: [[i64; 2]; 2] = [[3, 1], [2, 1]];

    #[inline]
    fn driver(&self) -> Coord {
        self.x
    }

    fn coords(&self) -> [f64; 2] {
        [self.x.value(), self.y.value()]
    }

    #[inline]
    fn step_linear(self) -> Self {
        TorusBase { x: self.x.combine(3, self.y, 1), y: self.x.combine(2, self.y, 1) }
    }

    fn step_shifted(self, shift: [f64; 2]) -> Self {
        let [x, y] = self.coords();
        TorusBase {
            x: Coord::Float(wrap_unit(3.0 * x + y + shift[0])),
            y: Coord::Float(wrap_unit(2.0 * x + y + shift[1])),
        }
    }

    fn shift_half(self) -> Self {
        TorusBase { x: self.x.shift_half(), y: self.y }
    }

    fn to_float(self) -> Self {
        TorusBase { x: self.x.to_float(), y: self.y.to_float() }
    }

    fn is_exact(&self) -> bool {
        self.x.is_exact() && self.y.is_exact()
    }

    fn from_section(x: Coord, y: Coord) -> Self {
        TorusBase { x, y }
    }

    fn from_floats(c: [f64; 2]) -> Self {
        TorusBase { x: Coord::Float(wrap_unit(c[0])), y: Coord::Float(wrap_unit(c[1])) }
    }
}

/// A state `(base, z)` with `z ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint<B> {
    pub base: B,
    pub z: f64,
}

/// Annulus point `(x, z)`.
pub type PointA = SkewPoint<Coord>;
/// Thickened-torus point `(x, y, z)`.
pub type PointT = SkewPoint<TorusBase>;

impl<B: BaseSpace> SkewPoint<B> {
    pub fn new(base: B, z: f64) -> Self {
        SkewPoint { base, z }
    }

    /// The conjugacy `S`: half turn in `x`, reflection `z -> 1 - z`.
    pub fn reflect(self) -> Self {
        SkewPoint { base: self.base.shift_half(), z: 1.0 - self.z }
    }

    /// `[x, z]` or `[x, y, z]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let c = self.base.coords();
        match B::DIM {
            1 => vec![c[0], self.z],
            _ => vec![c[0], c[1], self.z],
        }
    }
}

impl PointA {
    pub fn exact(x: Phase, z: f64) -> PointA {
        SkewPoint { base: Coord::Exact(x), z }
    }

    pub fn float(x: f64, z: f64) -> PointA {
        SkewPoint { base: Coord::Float(wrap_unit(x)), z }
    }

    pub fn x(&self) -> f64 {
        self.base.value()
    }
}

impl PointT {
    pub fn exact(x: Phase, y: Phase, z: f64) -> PointT {
        SkewPoint { base: TorusBase::exact(x, y), z }
    }

    pub fn float(x: f64, y: f64, z: f64) -> PointT {
        SkewPoint { base: TorusBase::from_floats([x, y]), z }
    }
}

/// Jacobian of the full map, `(DIM + 1) × (DIM + 1)`; the fiber is the last index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl Jacobian {
    pub(crate) fn new(dim: usize, m: [[f64; 3]; 3]) -> Jacobian {
        Jacobian { dim, m }
    }

    /// Matrix size (2 for the annulus, 3 for the torus).
    pub fn size(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.dim && col < self.dim, "Jacobian index out of range");
        self.m[row][col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.m[i][..self.dim].to_vec()).collect()
    }

    /// `D_x f_x`.
    pub fn dx_fx(&self) -> f64 {
        self.m[0][0]
    }

    /// `D_z f_x`.
    pub fn dz_fx(&self) -> f64 {
        self.m[0][self.dim - 1]
    }

    /// `D_x f_z`.
    pub fn dx_fz(&self) -> f64 {
        self.m[self.dim - 1][0]
    }

    /// `D_z f_z`.
    pub fn dz_fz(&self) -> f64 {
        self.m[self.dim - 1][self.dim - 1]
    }

    /// True when no base row depends on `z`.
    pub fn is_lower_triangular_in_z(&self) -> bool {
        (0..self.dim - 1).all(|i| self.m[i][self.dim - 1] == 0.0)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.m[i][j] * v[j]).sum()).collect()
    }
}
