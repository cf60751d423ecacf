//! A small analytic scene: spheres, parallelograms, one-sided area emitters and
//! a pinhole camera.

mod camera;
mod description;
mod di;
mod domain;
mod geometry;
mod material;
mod path;

pub use camera::{Camera, CameraDescription};
pub use description::{QuadDescription, SceneDescription, SphereDescription};
pub use di::DiSample;
pub use domain::{DiDomain, PathDomain, SampleId};
pub use geometry::{Quad, Sphere, T_MIN};
pub use material::{concentric_disk, invert_concentric_disk, Material};
pub use path::{reconnection_shift, ConnectConfig, PathSample, SurfacePoint, GRAZING_COS};

use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};

/// A point on an emitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightPoint {
    pub position: Vec3,
    /// Emitting side normal.
    pub normal: Vec3,
    /// Index into [`Scene::emitters`].
    pub emitter: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub position: Vec3,
    /// Geometric normal (outward for spheres, `edge_u x edge_v` for quads).
    pub normal: Vec3,
    pub material: usize,
    pub emitter: Option<u32>,
}

/// Per-pixel primary hit: position, normal facing the viewer, outgoing
/// direction and material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingContext {
    pub position: Vec3,
    pub normal: Vec3,
    pub wo: Vec3,
    pub material: Material,
    /// Radiance emitted toward the camera by the primary hit itself.
    pub emitted: Vec3,
}

impl ShadingContext {
    pub fn new(position: Vec3, normal: Vec3, wo: Vec3, material: Material) -> Self {
        let normal = if normal.dot(wo) < 0.0 { -normal } else { normal };
        ShadingContext {
            position,
            normal,
            wo,
            material,
            emitted: Vec3::ZERO,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub spheres: Vec<Sphere>,
    pub quads: Vec<Quad>,
    pub materials: Vec<Material>,
    pub camera: Camera,
    /// Quad indices of the emitters.
    pub emitters: Vec<usize>,
    emitter_cdf: Vec<f64>,
    emitter_area: f64,
    diameter: f64,
}

impl Scene {
    pub fn new(spheres: Vec<Sphere>, quads: Vec<Quad>, materials: Vec<Material>, camera: Camera) -> Result<Self> {
        for (i, m) in materials.iter().enumerate() {
            m.validate().map_err(|e| Error::Scene(format!("material {i}: {e}")))?;
        }
        let mut lo = Vec3::splat(f64::INFINITY);
        let mut hi = Vec3::splat(f64::NEG_INFINITY);
        let mut grow = |p: Vec3| {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        };
        for (i, s) in spheres.iter().enumerate() {
            if !(s.center.is_finite() && s.radius.is_finite() && s.radius > 0.0) {
                return Err(Error::Scene(format!(
                    "sphere {i}: center must be finite and radius positive"
                )));
            }
            if s.material >= materials.len() {
                return Err(Error::Scene(format!("sphere {i}: unknown material {}", s.material)));
            }
            grow(s.center - Vec3::splat(s.radius));
            grow(s.center + Vec3::splat(s.radius));
        }
        let mut emitters = Vec::new();
        let mut emitter_cdf = Vec::new();
        let mut total = 0.0;
        for (i, q) in quads.iter().enumerate() {
            if !(q.corner.is_finite() && q.edge_u.is_finite() && q.edge_v.is_finite()) {
                return Err(Error::Scene(format!("quad {i}: geometry must be finite")));
            }
            if !(q.area() > 0.0) {
                return Err(Error::Scene(format!("quad {i}: zero area")));
            }
            if q.material >= materials.len() {
                return Err(Error::Scene(format!("quad {i}: unknown material {}", q.material)));
            }
            for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                grow(q.point(a, b));
            }
            if let Some(le) = q.emission {
                if !(le.is_finite() && le.min_elem() >= 0.0) {
                    return Err(Error::Scene(format!(
                        "quad {i}: emission must be finite and nonnegative"
                    )));
                }
                if le.max_elem() > 0.0 {
                    emitters.push(i);
                    total += q.area();
                    emitter_cdf.push(total);
                }
            }
        }
        if emitters.is_empty() {
            return Err(Error::Scene("scene has no emitter".into()));
        }
        for c in &mut emitter_cdf {
            *c /= total;
        }
        Ok(Scene {
            spheres,
            quads,
            materials,
            camera,
            emitters,
            emitter_cdf,
            emitter_area: total,
            diameter: (hi - lo).length(),
        })
    }

    pub fn from_description(desc: &SceneDescription) -> Result<Self> {
        desc.build()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let desc: SceneDescription = serde_json::from_str(&text)?;
        desc.build()
    }

    /// Built-in scene by name (`glossy_box` or `glossy_box_slot`).
    pub fn builtin(name: &str) -> Option<Self> {
        SceneDescription::builtin(name).map(|d| d.build().expect("built-in scenes are valid"))
    }

    /// Diagonal of the scene's bounding box.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn emitter_area(&self) -> f64 {
        self.emitter_area
    }

    /// Area density of [`Scene::sample_light`].
    pub fn light_pdf(&self) -> f64 {
        1.0 / self.emitter_area
    }

    /// Uniform point over the total emitter area.
    pub fn sample_light(&self, u: [f64; 3]) -> LightPoint {
        let k = self
            .emitter_cdf
            .partition_point(|&c| c <= u[0])
            .min(self.emitters.len() - 1);
        let q = &self.quads[self.emitters[k]];
        LightPoint {
            position: q.point(u[1], u[2]),
            normal: q.normal(),
            emitter: k as u32,
        }
    }

    pub fn emission(&self, emitter: u32) -> Vec3 {
        self.quads[self.emitters[emitter as usize]]
            .emission
            .unwrap_or(Vec3::ZERO)
    }

    /// Radiance leaving a light point toward `dir` (unit, pointing away from the light).
    pub fn emitted(&self, light: &LightPoint, dir: Vec3) -> Vec3 {
        if light.normal.dot(dir) > 0.0 {
            self.emission(light.emitter)
        } else {
            Vec3::ZERO
        }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_within(ray, f64::INFINITY)
    }

    pub fn intersect_within(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<(f64, usize, bool)> = None;
        let mut t_best = t_max;
        for (i, s) in self.spheres.iter().enumerate() {
            if let Some(t) = s.intersect(ray, t_best) {
                t_best = t;
                best = Some((t, i, true));
            }
        }
        for (i, q) in self.quads.iter().enumerate() {
            if let Some(t) = q.intersect(ray, t_best) {
                t_best = t;
                best = Some((t, i, false));
            }
        }
        best.map(|(t, i, sphere)| self.make_hit(ray, t, i, sphere))
    }

    fn make_hit(&self, ray: &Ray, t: f64, index: usize, sphere: bool) -> Hit {
        let position = ray.at(t);
        if sphere {
            let s = &self.spheres[index];
            Hit {
                t,
                position,
                normal: s.normal_at(position),
                material: s.material,
                emitter: None,
            }
        } else {
            let q = &self.quads[index];
            Hit {
                t,
                position,
                normal: q.normal(),
                material: q.material,
                emitter: self.emitters.iter().position(|&e| e == index).map(|e| e as u32),
            }
        }
    }

    /// True if nothing blocks the open segment between two surface points.
    pub fn visible(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let dist = d.length();
        if !(dist > 0.0) {
            return false;
        }
        let ray = Ray::new(a, d / dist);
        let t_max = dist * (1.0 - 1e-7);
        !(self.spheres.iter().any(|s| s.intersect(&ray, t_max).is_some())
            || self.quads.iter().any(|q| q.intersect(&ray, t_max).is_some()))
    }

    /// Shading context of the primary hit through pixel `(x, y)`.
    pub fn primary(&self, x: usize, y: usize, width: usize, height: usize) -> Option<ShadingContext> {
        let ray = self.camera.ray(x, y, width, height);
        let hit = self.intersect(&ray)?;
        let wo = -ray.dir;
        let mut ctx = ShadingContext::new(hit.position, hit.normal, wo, self.materials[hit.material]);
        if let Some(e) = hit.emitter {
            let light = LightPoint {
                position: hit.position,
                normal: hit.normal,
                emitter: e,
            };
            ctx.emitted = self.emitted(&light, wo);
        }
        Some(ctx)
    }
}
