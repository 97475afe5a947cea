//! Minimal 3-vector used for positions and directions.

use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance used when checking that a direction is unit length.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    /// Returns the unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector from azimuth (in the x-y plane, from +x towards +y) and
    /// elevation (above the x-y plane), both in degrees.
    pub fn from_azimuth_elevation(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
        let a = azimuth_deg.to_radians();
        let e = elevation_deg.to_radians();
        let ce = libm::cos(e);
        Vec3::new(ce * libm::cos(a), ce * libm::sin(a), libm::sin(e))
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azimuth_elevation_is_unit() {
        for (a, e) in [(45.0, 70.0), (135.0, 70.0), (225.0, 70.0), (315.0, 70.0), (0.0, 90.0)] {
            assert!(Vec3::from_azimuth_elevation(a, e).is_unit());
        }
        let up = Vec3::from_azimuth_elevation(0.0, 90.0);
        assert!((up.z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_has_no_direction() {
        assert!(Vec3::default().normalized().is_none());
    }
}
