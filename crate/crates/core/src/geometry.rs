//! Geometric primitives shared by every pipeline stage.
//!
//! Frame convention: x points forward from the vehicle, y to the left and
//! z up. Yaw is measured counterclockwise from +x, so 90° is +y and 180°
//! faces back toward the vehicle.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("zero-length vector has no direction")]
    ZeroLength,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("box corners out of order: min {min:?} exceeds max {max:?}")]
    InvertedBox { min: Vec3, max: Vec3 },
    #[error("negative box timestamp {0}")]
    NegativeTimestamp(f64),
}

/// Three-component vector, used for both positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Projection onto the ground plane.
    pub fn planar(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn planar_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn component_min(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    pub fn component_max(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

/// Planar vector on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };
    pub const FORWARD: Vec2 = Vec2 { x: 1.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, other: &Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn extend(self, z: f64) -> Vec3 {
        Vec3::new(self.x, self.y, z)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned box in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox3D {
    pub min_corner: Point3,
    pub max_corner: Point3,
    /// Virtual seconds.
    pub timestamp: f64,
    pub box_id: u64,
}

impl BoundingBox3D {
    pub fn new(
        min_corner: Point3,
        max_corner: Point3,
        timestamp: f64,
        box_id: u64,
    ) -> Result<Self, GeometryError> {
        if !min_corner.is_finite() || !max_corner.is_finite() || !timestamp.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if min_corner.x > max_corner.x || min_corner.y > max_corner.y || min_corner.z > max_corner.z
        {
            return Err(GeometryError::InvertedBox {
                min: min_corner,
                max: max_corner,
            });
        }
        if timestamp < 0.0 {
            return Err(GeometryError::NegativeTimestamp(timestamp));
        }
        Ok(Self {
            min_corner,
            max_corner,
            timestamp,
            box_id,
        })
    }

    /// Box of the given full size centered on `center`.
    pub fn from_center(
        center: Point3,
        size: Vec3,
        timestamp: f64,
        box_id: u64,
    ) -> Result<Self, GeometryError> {
        let half = size * 0.5;
        Self::new(center - half, center + half, timestamp, box_id)
    }

    pub fn center(&self) -> Point3 {
        (self.min_corner + self.max_corner) * 0.5
    }

    pub fn size(&self) -> Vec3 {
        self.max_corner - self.min_corner
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s.x * s.y * s.z
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min_corner.x
            && p.x <= self.max_corner.x
            && p.y >= self.min_corner.y
            && p.y <= self.max_corner.y
            && p.z >= self.min_corner.z
            && p.z <= self.max_corner.z
    }

    fn same_extent(&self, other: &BoundingBox3D) -> bool {
        self.min_corner == other.min_corner && self.max_corner == other.max_corner
    }
}

/// Volumetric intersection over union of two axis-aligned boxes.
///
/// Zero-volume boxes give 0 unless both boxes have identical corners.
pub fn iou_3d(a: &BoundingBox3D, b: &BoundingBox3D) -> f64 {
    let lo = a.min_corner.component_max(&b.min_corner);
    let hi = a.max_corner.component_min(&b.max_corner);
    let overlap = (hi.x - lo.x).max(0.0) * (hi.y - lo.y).max(0.0) * (hi.z - lo.z).max(0.0);
    let union = a.volume() + b.volume() - overlap;
    if union <= 0.0 {
        return if a.same_extent(b) { 1.0 } else { 0.0 };
    }
    (overlap / union).clamp(0.0, 1.0)
}

/// Unsigned angle between two planar vectors, in degrees within [0, 180].
pub fn angle_between(u: Vec2, v: Vec2) -> Result<f64, GeometryError> {
    let (nu, nv) = (u.norm(), v.norm());
    if !(nu.is_finite() && nv.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(GeometryError::ZeroLength);
    }
    // Same angle as acos(u·v / |u||v|), without its loss of precision near 0° and 180°.
    let cross = u.x * v.y - u.y * v.x;
    Ok(cross.abs().atan2(u.dot(&v)).to_degrees())
}

/// Heading in degrees, normalized into [0, 360).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct YawDegrees(f64);

impl YawDegrees {
    pub fn new(degrees: f64) -> Self {
        let v = degrees.rem_euclid(360.0);
        // rem_euclid of a tiny negative value rounds up to exactly 360.
        YawDegrees(if v >= 360.0 { 0.0 } else { v })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Mirror across the x-axis (y → −y).
    pub fn mirrored(self) -> Self {
        YawDegrees::new(360.0 - self.0)
    }
}

impl fmt::Display for YawDegrees {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}°", self.0)
    }
}

/// Counterclockwise heading of a planar displacement.
///
/// The magnitude is the angle against +x; the y-component picks the
/// half-plane. Returns `None` for a zero displacement (stationary).
pub fn heading_to_yaw(displacement: Vec2) -> Option<YawDegrees> {
    let theta = angle_between(displacement, Vec2::FORWARD).ok()?;
    Some(if displacement.y >= 0.0 {
        YawDegrees::new(theta)
    } else {
        YawDegrees::new(360.0 - theta)
    })
}
