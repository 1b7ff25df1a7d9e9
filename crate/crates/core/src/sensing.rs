//! Downward-projected square camera footprint whose side grows affinely with
//! the distance to the viewed face.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{face_distance, face_view_predicate, Face, FeaturePoint, Vec3, EPS_GEO};

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("feature point lies on face {point_face}, footprint is on face {footprint_face}")]
    FaceMismatch { point_face: usize, footprint_face: usize },
    #[error("invalid camera parameter {field}: {value}")]
    BadParameter { field: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Footprint side at zero distance (m).
    pub z0: f64,
    /// Footprint growth per meter of distance.
    pub z1: f64,
    /// Cut-off distance beyond which nothing counts as inspected (m).
    pub d_max: f64,
}

impl CameraModel {
    pub fn new(z0: f64, z1: f64, d_max: f64) -> Result<Self, SensingError> {
        if !(z0.is_finite() && z0 >= 0.0) {
            return Err(SensingError::BadParameter { field: "z0", value: z0 });
        }
        if !(z1.is_finite() && z1 >= 0.0) {
            return Err(SensingError::BadParameter { field: "z1", value: z1 });
        }
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(SensingError::BadParameter { field: "d_max", value: d_max });
        }
        Ok(Self { z0, z1, d_max })
    }

    /// Side at distance `d`, without the sign check.
    pub(crate) fn side_unchecked(&self, d: f64) -> f64 {
        self.z1 * d + self.z0
    }
}

pub fn fov_side(c: &CameraModel, d: f64) -> Result<f64, SensingError> {
    if d < 0.0 || d.is_nan() {
        return Err(SensingError::NegativeDistance(d));
    }
    Ok(c.side_unchecked(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub face_id: usize,
    /// Projection of the agent position on the face plane, in the face's in-plane axes.
    pub center: [f64; 2],
    pub side: f64,
}

impl Footprint {
    /// Whether in-plane coordinates fall inside the (closed) square.
    pub fn covers(&self, ab: [f64; 2]) -> bool {
        let half = 0.5 * self.side;
        (0..2).all(|k| (ab[k] - self.center[k]).abs() <= half + EPS_GEO)
    }
}

/// Hypothetical footprint on `f` for an agent at `p`, whether or not the face is viewed.
pub fn footprint(c: &CameraModel, f: &Face, p: Vec3) -> Footprint {
    Footprint { face_id: f.id, center: f.project(p), side: c.side_unchecked(face_distance(f, p)) }
}

/// Uses the canonical in-plane axes for the face id (see [`crate::geometry::Axis::others`]).
pub fn point_in_fov(fp: &Footprint, xi: &FeaturePoint) -> Result<bool, SensingError> {
    if xi.face_id != fp.face_id {
        return Err(SensingError::FaceMismatch { point_face: xi.face_id, footprint_face: fp.face_id });
    }
    let axes = face_axes(fp.face_id);
    Ok(fp.covers([xi.pos[axes[0]], xi.pos[axes[1]]]))
}

fn face_axes(face_id: usize) -> [crate::geometry::Axis; 2] {
    use crate::geometry::Axis;
    match face_id / 2 {
        0 => Axis::X.others(),
        1 => Axis::Y.others(),
        _ => Axis::Z.others(),
    }
}

/// The agent at `p` views `f`, `xi` is inside the footprint and the face is within the cut-off.
pub fn inspects(c: &CameraModel, f: &Face, p: Vec3, xi: &FeaturePoint) -> bool {
    if xi.face_id != f.id || !face_view_predicate(f, p) {
        return false;
    }
    if face_distance(f, p) > c.d_max + EPS_GEO {
        return false;
    }
    footprint(c, f, p).covers(f.project(xi.pos))
}

/// [`inspects`] with every comparison relaxed by `tol`.
pub fn inspects_within(c: &CameraModel, f: &Face, p: Vec3, xi: &FeaturePoint, tol: f64) -> bool {
    if xi.face_id != f.id || f.halfspace.excess(p) < -tol {
        return false;
    }
    let [a, b] = f.project(p);
    let in_rect = a >= f.rect_lo[0] - tol && a <= f.rect_hi[0] + tol && b >= f.rect_lo[1] - tol && b <= f.rect_hi[1] + tol;
    let d = face_distance(f, p);
    if !in_rect || d > c.d_max + tol {
        return false;
    }
    let half = 0.5 * c.side_unchecked(d);
    let xy = f.project(xi.pos);
    (xy[0] - a).abs() <= half + tol && (xy[1] - b).abs() <= half + tol
}
