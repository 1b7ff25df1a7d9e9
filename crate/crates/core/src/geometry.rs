//! Axis-aligned cuboids, their bounding half-spaces and faces, and the exact
//! predicates the planner is checked against.
//!
//! Every set here is closed: points on a face plane count as inside the
//! cuboid and as viewing the face. Comparisons carry an absolute slack of
//! [`EPS_GEO`]; a solver output sitting on a boundary is classified the way
//! the linear rows classify it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for geometric comparisons, in meters.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("cuboid extent along {axis} must be positive and finite (lo={lo}, hi={hi})")]
    BadExtent { axis: Axis, lo: f64, hi: f64 },
    #[error("feature point {face}:{idx} at {pos} does not lie on face {face}")]
    PointOffFace { face: usize, idx: usize, pos: Vec3 },
    #[error("face id {0} out of range (expected 0..6)")]
    BadFace(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two remaining axes, in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn unit(axis: Axis) -> Self {
        let mut v = Self::ZERO;
        v[axis] = 1.0;
        v
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }
}

impl std::ops::Index<Axis> for Vec3 {
    type Output = f64;
    fn index(&self, a: Axis) -> &f64 {
        match a {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

impl std::ops::IndexMut<Axis> for Vec3 {
    fn index_mut(&mut self, a: Axis) -> &mut f64 {
        match a {
            Axis::X => &mut self.x,
            Axis::Y => &mut self.y,
            Axis::Z => &mut self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// `{x : normal · x <= offset}` with an axis-aligned unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec3,
    pub offset: f64,
}

impl HalfSpace {
    /// Half-space bounded by the plane `x[axis] = coord` whose outward normal
    /// points along `+axis` when `positive`, along `-axis` otherwise.
    pub fn axis_aligned(axis: Axis, positive: bool, coord: f64) -> Self {
        let s = if positive { 1.0 } else { -1.0 };
        Self { normal: Vec3::unit(axis) * s, offset: s * coord }
    }

    pub fn axis(&self) -> Axis {
        if self.normal.x != 0.0 {
            Axis::X
        } else if self.normal.y != 0.0 {
            Axis::Y
        } else {
            Axis::Z
        }
    }

    /// +1 or -1: orientation of the outward normal along [`Self::axis`].
    pub fn sign(&self) -> f64 {
        self.normal[self.axis()]
    }

    /// Coordinate of the bounding plane along the normal axis.
    pub fn plane_coord(&self) -> f64 {
        self.offset * self.sign()
    }

    /// Signed value `normal · p - offset`; positive outside.
    pub fn excess(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Face ids follow the order x-min, x-max, y-min, y-max, z-min, z-max.
pub const FACE_NAMES: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

pub fn face_id_from_name(name: &str) -> Option<usize> {
    FACE_NAMES.iter().position(|n| *n == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub id: usize,
    pub halfspace: HalfSpace,
    /// In-plane axes `[a, b]`; the rectangle is `rect_lo[k] <= p[axes[k]] <= rect_hi[k]`.
    pub axes: [Axis; 2],
    pub rect_lo: [f64; 2],
    pub rect_hi: [f64; 2],
    pub inspectable: bool,
}

impl Face {
    pub fn name(&self) -> &'static str {
        FACE_NAMES[self.id]
    }

    pub fn normal_axis(&self) -> Axis {
        self.halfspace.axis()
    }

    pub fn plane_coord(&self) -> f64 {
        self.halfspace.plane_coord()
    }

    /// In-plane coordinates of `p` (its orthogonal projection on the face plane).
    pub fn project(&self, p: Vec3) -> [f64; 2] {
        [p[self.axes[0]], p[self.axes[1]]]
    }

    /// Lift in-plane coordinates back to a 3D point on the face plane.
    pub fn lift(&self, ab: [f64; 2]) -> Vec3 {
        let mut v = Vec3::ZERO;
        v[self.normal_axis()] = self.plane_coord();
        v[self.axes[0]] = ab[0];
        v[self.axes[1]] = ab[1];
        v
    }

    pub fn contains_projection(&self, ab: [f64; 2]) -> bool {
        (0..2).all(|k| ab[k] >= self.rect_lo[k] - EPS_GEO && ab[k] <= self.rect_hi[k] + EPS_GEO)
    }

    pub fn on_face(&self, p: Vec3) -> bool {
        (p[self.normal_axis()] - self.plane_coord()).abs() <= EPS_GEO
            && self.contains_projection(self.project(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    lo: Vec3,
    hi: Vec3,
    faces: Vec<Face>,
}

impl Cuboid {
    pub fn from_bounds(lo: Vec3, hi: Vec3) -> Result<Self, GeometryError> {
        for axis in Axis::ALL {
            let (l, h) = (lo[axis], hi[axis]);
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(GeometryError::BadExtent { axis, lo: l, hi: h });
            }
        }
        let mut faces = Vec::with_capacity(6);
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            let others = axis.others();
            for (s, positive) in [false, true].into_iter().enumerate() {
                let coord = if positive { hi[axis] } else { lo[axis] };
                faces.push(Face {
                    id: 2 * k + s,
                    halfspace: HalfSpace::axis_aligned(axis, positive, coord),
                    axes: others,
                    rect_lo: [lo[others[0]], lo[others[1]]],
                    rect_hi: [hi[others[0]], hi[others[1]]],
                    inspectable: false,
                });
            }
        }
        Ok(Self { lo, hi, faces })
    }

    pub fn from_center(center: Vec3, dims: Vec3) -> Result<Self, GeometryError> {
        Self::from_bounds(center - dims * 0.5, center + dims * 0.5)
    }

    pub fn lo(&self) -> Vec3 {
        self.lo
    }

    pub fn hi(&self) -> Vec3 {
        self.hi
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, id: usize) -> Result<&Face, GeometryError> {
        self.faces.get(id).ok_or(GeometryError::BadFace(id))
    }

    pub fn set_inspectable(&mut self, id: usize, on: bool) -> Result<(), GeometryError> {
        let f = self.faces.get_mut(id).ok_or(GeometryError::BadFace(id))?;
        f.inspectable = on;
        Ok(())
    }

    /// Ids of inspectable faces, in increasing order (the set L).
    pub fn inspectable_faces(&self) -> Vec<usize> {
        self.faces.iter().filter(|f| f.inspectable).map(|f| f.id).collect()
    }

    /// Rows of the `Phi x <= Gamma` description.
    pub fn phi(&self) -> [[f64; 3]; 6] {
        let mut out = [[0.0; 3]; 6];
        for (row, f) in out.iter_mut().zip(&self.faces) {
            *row = f.halfspace.normal.to_array();
        }
        out
    }

    pub fn gamma(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (g, f) in out.iter_mut().zip(&self.faces) {
            *g = f.halfspace.offset;
        }
        out
    }

    /// Whether `x` lies strictly inside, i.e. at least `EPS_GEO` away from every face plane.
    pub fn contains_interior(&self, x: Vec3) -> bool {
        self.faces.iter().all(|f| f.halfspace.excess(x) < -EPS_GEO)
    }
}

/// `x` lies in the closed cuboid: every row of `Phi x <= Gamma` holds.
pub fn contains(c: &Cuboid, x: Vec3) -> bool {
    c.faces.iter().all(|f| f.halfspace.excess(x) <= EPS_GEO)
}

/// Perpendicular distance from `p` to the plane containing `f`.
pub fn face_distance(f: &Face, p: Vec3) -> f64 {
    (p[f.normal_axis()] - f.plane_coord()).abs()
}

/// `p` projects inside the face rectangle and sits in the face's outer half-space.
pub fn face_view_predicate(f: &Face, p: Vec3) -> bool {
    f.contains_projection(f.project(p)) && f.halfspace.excess(p) >= -EPS_GEO
}

/// `J p <= K` encoding of the face-view predicate: four rectangle rows
/// followed by the half-space row `-phi . p <= -gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceMatrices {
    pub j: [[f64; 3]; 5],
    pub k: [f64; 5],
}

impl FaceMatrices {
    pub fn row_holds(&self, c: usize, p: Vec3) -> bool {
        let a = Vec3::from_array(self.j[c]);
        a.dot(p) <= self.k[c] + EPS_GEO
    }
}

pub fn build_face_matrices(f: &Face) -> FaceMatrices {
    let [a, b] = f.axes;
    let ea = Vec3::unit(a).to_array();
    let eb = Vec3::unit(b).to_array();
    let neg = |v: [f64; 3]| [-v[0], -v[1], -v[2]];
    FaceMatrices {
        j: [neg(ea), ea, neg(eb), eb, neg(f.halfspace.normal.to_array())],
        k: [-f.rect_lo[0], f.rect_hi[0], -f.rect_lo[1], f.rect_hi[1], -f.halfspace.offset],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub face_id: usize,
    pub idx: usize,
    pub pos: Vec3,
}

impl FeaturePoint {
    pub fn key(&self) -> (usize, usize) {
        (self.face_id, self.idx)
    }

    /// Checks that the point sits on its declared face.
    pub fn validate(&self, c: &Cuboid) -> Result<(), GeometryError> {
        let f = c.face(self.face_id)?;
        if f.on_face(self.pos) {
            Ok(())
        } else {
            Err(GeometryError::PointOffFace { face: self.face_id, idx: self.idx, pos: self.pos })
        }
    }
}
