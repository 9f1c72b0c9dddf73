use std::fmt;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit vector in real 3-space. Every measurement setting is a direction.
///
/// The constructor normalizes, so the tuples of the direction tables can be
/// passed in unnormalized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction3(Vector3<f64>);

impl Direction3 {
    pub const X: Direction3 = Direction3(Vector3::new(1.0, 0.0, 0.0));
    pub const Y: Direction3 = Direction3(Vector3::new(0.0, 1.0, 0.0));
    pub const Z: Direction3 = Direction3(Vector3::new(0.0, 0.0, 1.0));

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::ZeroVector);
        }
        // Already-unit input is kept bit-for-bit so serialized tables round-trip.
        if (norm - 1.0).abs() <= 2.0 * f64::EPSILON {
            return Ok(Direction3(v));
        }
        Ok(Direction3(v / norm))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        Self::new(v.x, v.y, v.z)
    }

    /// Spherical angles in degrees: `polar` from +z, `azimuth` from +x.
    pub fn from_spherical_deg(polar: f64, azimuth: f64) -> Self {
        let (st, ct) = polar.to_radians().sin_cos();
        let (sp, cp) = azimuth.to_radians().sin_cos();
        Direction3(Vector3::new(st * cp, st * sp, ct))
    }

    /// Uniformly distributed on the sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
        Direction3(Vector3::new(x, y, z))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn dot(&self, other: &Direction3) -> f64 {
        self.0.dot(&other.0)
    }

    /// Raw cross product; not normalized.
    pub fn cross(&self, other: &Direction3) -> Vector3<f64> {
        self.0.cross(&other.0)
    }

    pub fn neg(&self) -> Direction3 {
        Direction3(-self.0)
    }

    /// Angle in degrees, in [0°, 180°].
    pub fn angle_deg(&self, other: &Direction3) -> f64 {
        // atan2 keeps precision near 0° and 180° where acos does not.
        let s = self.0.cross(&other.0).norm();
        let c = self.0.dot(&other.0);
        s.atan2(c).to_degrees()
    }

    pub fn is_orthogonal(&self, other: &Direction3, tol: f64) -> bool {
        self.dot(other).abs() < tol
    }

    /// Parallel or antiparallel. `(S·n)²` does not distinguish `n` from `-n`.
    pub fn is_parallel(&self, other: &Direction3, tol: f64) -> bool {
        self.cross(other).norm() < tol
    }

    /// Some unit vector orthogonal to `self`.
    pub fn any_orthogonal(&self) -> Direction3 {
        let v = &self.0;
        let helper = if v.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        Direction3(v.cross(&helper).normalize())
    }
}

impl TryFrom<[f64; 3]> for Direction3 {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction3::new(v[0], v[1], v[2])
    }
}

impl From<Direction3> for [f64; 3] {
    fn from(d: Direction3) -> Self {
        d.to_array()
    }
}

impl fmt::Display for Direction3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.0.x, self.0.y, self.0.z)
    }
}
