//! Points of R^n for n <= 3, stored in a fixed three-slot array.
//!
//! Planar points keep their third coordinate at zero, so norms and inner
//! products are dimension-agnostic.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; 3]);

    pub fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    /// Unit vector along the first axis.
    pub fn e1() -> Self {
        Point([1.0, 0.0, 0.0])
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut p = [0.0; 3];
        for (dst, src) in p.iter_mut().zip(c) {
            *dst = *src;
        }
        Point(p)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// Returns `self / |self|`, or `self` unchanged at the origin.
    pub fn normalized(&self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            *self * (1.0 / n)
        } else {
            *self
        }
    }

    /// Geodesic angle between two nonzero vectors.
    pub fn angle_to(&self, other: &Point) -> f64 {
        // atan2 form stays accurate for nearly parallel vectors
        let c = self.dot(other);
        let cross = self.cross_norm(other);
        cross.atan2(c)
    }

    fn cross_norm(&self, o: &Point) -> f64 {
        let a = self.0;
        let b = o.0;
        let cx = a[1] * b[2] - a[2] * b[1];
        let cy = a[2] * b[0] - a[0] * b[2];
        let cz = a[0] * b[1] - a[1] * b[0];
        (cx * cx + cy * cy + cz * cz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn coords(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An orthonormal frame `(e, u, v)` with `e` the given unit vector.
///
/// In the plane only `u` is meaningful; `v` is zero.
pub fn frame(dim: usize, e: Point) -> (Point, Point) {
    if dim == 2 {
        return (Point::new2(-e[1], e[0]), Point::ORIGIN);
    }
    let helper = if e[0].abs() < 0.9 { Point::e1() } else { Point::new3(0.0, 1.0, 0.0) };
    let u = (helper - e * helper.dot(&e)).normalized();
    let v = Point::new3(
        e[1] * u[2] - e[2] * u[1],
        e[2] * u[0] - e[0] * u[2],
        e[0] * u[1] - e[1] * u[0],
    );
    (u, v)
}

/// The unit vector at polar angle `phi` from `e` and azimuth `alpha` around it.
pub fn direction_from(dim: usize, e: Point, phi: f64, alpha: f64) -> Point {
    let (u, v) = frame(dim, e);
    if dim == 2 {
        // alpha selects the side: 0 -> +u, pi -> -u
        let side = if alpha.cos() >= 0.0 { 1.0 } else { -1.0 };
        e * phi.cos() + u * (side * phi.sin())
    } else {
        e * phi.cos() + (u * alpha.cos() + v * alpha.sin()) * phi.sin()
    }
}
