use serde::{Deserialize, Serialize};

use crate::math::{Ray, Vec3};

/// Minimum ray parameter; keeps rays from re-hitting their origin surface.
pub const T_MIN: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub material: usize,
}

/// A parallelogram `corner + a * edge_u + b * edge_v`, `a, b` in `[0, 1]`.
///
/// Emission, if any, leaves the side `edge_u x edge_v` points to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub material: usize,
    pub emission: Option<Vec3>,
}

impl Sphere {
    /// Nearest intersection with `t` in `(T_MIN, t_max)`.
    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        let oc = ray.origin - self.center;
        let b = oc.dot(ray.dir);
        let c = oc.length_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots
        let q = if b > 0.0 { -b - sq } else { -b + sq };
        let (mut t0, mut t1) = (q, if q != 0.0 { c / q } else { -b });
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        [t0, t1].into_iter().find(|&t| t > T_MIN && t < t_max)
    }

    pub fn normal_at(&self, p: Vec3) -> Vec3 {
        ((p - self.center) / self.radius).normalize()
    }
}

impl Quad {
    pub fn normal(&self) -> Vec3 {
        self.edge_u.cross(self.edge_v).normalize()
    }

    pub fn area(&self) -> f64 {
        self.edge_u.cross(self.edge_v).length()
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.corner + self.edge_u * a + self.edge_v * b
    }

    /// Parallelogram coordinates of a point in the quad's plane.
    pub fn coords(&self, p: Vec3) -> (f64, f64) {
        let w = self.edge_u.cross(self.edge_v);
        let inv = 1.0 / w.length_squared();
        let d = p - self.corner;
        (w.dot(d.cross(self.edge_v)) * inv, w.dot(self.edge_u.cross(d)) * inv)
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        let w = self.edge_u.cross(self.edge_v);
        let denom = w.dot(ray.dir);
        if denom.abs() < 1e-12 * w.length() {
            return None;
        }
        let t = w.dot(self.corner - ray.origin) / denom;
        if !(t > T_MIN && t < t_max) {
            return None;
        }
        let (a, b) = self.coords(ray.at(t));
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            Some(t)
        } else {
            None
        }
    }
}
