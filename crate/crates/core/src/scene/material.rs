//! BRDFs with analytically invertible direction sampling.
//!
//! Directions are world-space unit vectors pointing away from the surface.
//! `n` is the normal on the side the light arrives from.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::math::{Frame, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Material {
    Lambertian {
        albedo: Vec3,
    },
    /// Normalized Phong lobe around the mirror direction.
    Phong {
        albedo: Vec3,
        exponent: f64,
    },
}

impl Material {
    pub fn validate(&self) -> Result<(), String> {
        let albedo = match self {
            Material::Lambertian { albedo } => albedo,
            Material::Phong { albedo, exponent } => {
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return Err(format!("phong exponent must be nonnegative, got {exponent}"));
                }
                albedo
            }
        };
        if !(albedo.min_elem() >= 0.0 && albedo.max_elem() <= 1.0) {
            return Err(format!("albedo components must lie in [0, 1], got {albedo:?}"));
        }
        Ok(())
    }

    pub fn albedo(&self) -> Vec3 {
        match self {
            Material::Lambertian { albedo } | Material::Phong { albedo, .. } => *albedo,
        }
    }

    /// Lobe exponent used by the connectability test; zero for diffuse.
    pub fn lobe_exponent(&self) -> f64 {
        match self {
            Material::Lambertian { .. } => 0.0,
            Material::Phong { exponent, .. } => *exponent,
        }
    }

    pub fn is_black(&self) -> bool {
        self.albedo().max_elem() <= 0.0
    }

    /// BRDF value (without the cosine term).
    pub fn eval(&self, n: Vec3, wo: Vec3, wi: Vec3) -> Vec3 {
        if wi.dot(n) <= 0.0 || wo.dot(n) <= 0.0 {
            return Vec3::ZERO;
        }
        match *self {
            Material::Lambertian { albedo } => albedo / PI,
            Material::Phong { albedo, exponent } => {
                let c = wi.dot(wo.reflect(n));
                if c <= 0.0 {
                    Vec3::ZERO
                } else {
                    albedo * ((exponent + 2.0) / TAU * c.powf(exponent))
                }
            }
        }
    }

    /// Solid-angle density of [`Material::sample`].
    pub fn pdf(&self, n: Vec3, wo: Vec3, wi: Vec3) -> f64 {
        match *self {
            Material::Lambertian { .. } => {
                let c = wi.dot(n);
                if c > 0.0 {
                    c / PI
                } else {
                    0.0
                }
            }
            Material::Phong { exponent, .. } => {
                let c = wi.dot(wo.reflect(n));
                if c > 0.0 {
                    (exponent + 1.0) / TAU * c.powf(exponent)
                } else {
                    0.0
                }
            }
        }
    }

    /// Maps a primary-sample-space point to a direction.
    ///
    /// Phong directions may fall below the surface; those carry zero BRDF.
    pub fn sample(&self, n: Vec3, wo: Vec3, u: [f64; 2]) -> Vec3 {
        match *self {
            Material::Lambertian { .. } => {
                let (x, y) = concentric_disk(u);
                let z = (1.0 - x * x - y * y).max(0.0).sqrt();
                Frame::from_normal(n).to_world(Vec3::new(x, y, z))
            }
            Material::Phong { exponent, .. } => {
                let cos_a = u[0].powf(1.0 / (exponent + 1.0));
                let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
                let (s, c) = (TAU * u[1]).sin_cos();
                Frame::from_normal(wo.reflect(n)).to_world(Vec3::new(sin_a * c, sin_a * s, cos_a))
            }
        }
    }

    /// Inverse of [`Material::sample`]; `None` outside the sampled hemisphere.
    pub fn invert(&self, n: Vec3, wo: Vec3, wi: Vec3) -> Option<[f64; 2]> {
        match *self {
            Material::Lambertian { .. } => {
                let local = Frame::from_normal(n).to_local(wi);
                if local.z <= 0.0 {
                    return None;
                }
                Some(invert_concentric_disk(local.x, local.y))
            }
            Material::Phong { exponent, .. } => {
                let local = Frame::from_normal(wo.reflect(n)).to_local(wi);
                if local.z <= 0.0 {
                    return None;
                }
                let u0 = local.z.min(1.0).powf(exponent + 1.0);
                let phi = local.y.atan2(local.x);
                let u1 = if phi < 0.0 { phi / TAU + 1.0 } else { phi / TAU };
                Some([clamp_unit(u0), clamp_unit(u1)])
            }
        }
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Shirley-Chiu concentric map from the unit square to the unit disk.
pub fn concentric_disk(u: [f64; 2]) -> (f64, f64) {
    let a = 2.0 * u[0] - 1.0;
    let b = 2.0 * u[1] - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, FRAC_PI_4 * (b / a))
    } else {
        (b, FRAC_PI_2 - FRAC_PI_4 * (a / b))
    };
    let (s, c) = phi.sin_cos();
    (r * c, r * s)
}

pub fn invert_concentric_disk(x: f64, y: f64) -> [f64; 2] {
    let r = (x * x + y * y).sqrt();
    if r == 0.0 {
        return [0.5, 0.5];
    }
    let (a, b) = if x.abs() > y.abs() {
        let a = r.copysign(x);
        let phi = (y / x).atan();
        (a, a * phi / FRAC_PI_4)
    } else {
        let b = r.copysign(y);
        let phi = (y / b).atan2(x / b);
        (b * (FRAC_PI_2 - phi) / FRAC_PI_4, b)
    };
    [clamp_unit((a + 1.0) / 2.0), clamp_unit((b + 1.0) / 2.0)]
}
