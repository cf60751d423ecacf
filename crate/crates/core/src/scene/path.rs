//! One-bounce paths `y1 -> y2 -> y3`: `y1` is the primary hit, `y2` the
//! reconnection vertex found by BRDF sampling, `y3` a light point.
//!
//! The integration domain is (direction at `y1`) x (emitter area), so the
//! target carries no geometry term for the `y1 -> y2` segment.

use serde::{Deserialize, Serialize};

use super::{LightPoint, Scene, ShadingContext};
use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};
use crate::resampling::ShiftResult;

/// Minimum `|cos|` at the reconnection vertex for a shift to be valid.
pub const GRAZING_COS: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// Geometric normal; either orientation.
    pub normal: Vec3,
    pub material: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub vertex: SurfacePoint,
    pub light: LightPoint,
    pub id: u64,
}

/// Conditions under which a vertex may serve as a reconnection vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectConfig {
    /// Largest Phong exponent treated as rough enough to reconnect.
    pub max_lobe_exponent: f64,
    /// Minimum segment length as a fraction of the scene diameter.
    pub min_distance_fraction: f64,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            max_lobe_exponent: 50.0,
            min_distance_fraction: 0.01,
        }
    }
}

impl ConnectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_lobe_exponent >= 0.0) {
            return Err(Error::config("max_lobe_exponent", "must be nonnegative"));
        }
        if !(self.min_distance_fraction >= 0.0 && self.min_distance_fraction < 1.0) {
            return Err(Error::config("min_distance_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }

    fn min_distance(&self, scene: &Scene) -> f64 {
        self.min_distance_fraction * scene.diameter()
    }

    /// True if the vertex is rough enough and far enough from both neighbors.
    pub fn connectable(&self, scene: &Scene, prev: Vec3, v: &SurfacePoint, next: Vec3) -> bool {
        let d = self.min_distance(scene);
        scene.materials[v.material].lobe_exponent() <= self.max_lobe_exponent
            && (v.position - prev).length() >= d
            && (next - v.position).length() >= d
    }
}

/// Normal of `v` oriented toward `toward`.
fn facing(v: &SurfacePoint, toward: Vec3) -> Vec3 {
    if v.normal.dot(toward - v.position) < 0.0 {
        -v.normal
    } else {
        v.normal
    }
}

impl ShadingContext {
    /// Throughput times emission of the path, without visibility.
    fn path_unshadowed(&self, scene: &Scene, s: &PathSample) -> Vec3 {
        let y2 = s.vertex.position;
        let y3 = s.light.position;
        let d1 = y2 - self.position;
        let l1 = d1.length();
        let d2 = y3 - y2;
        let r23_sq = d2.length_squared();
        if !(l1 > 0.0 && r23_sq > 0.0) {
            return Vec3::ZERO;
        }
        let w1 = d1 / l1;
        let w2 = d2 / r23_sq.sqrt();
        let cos1 = self.normal.dot(w1);
        let n2 = facing(&s.vertex, self.position);
        let cos2 = n2.dot(w2);
        let cos3 = -s.light.normal.dot(w2);
        if cos1 <= 0.0 || cos2 <= 0.0 || cos3 <= 0.0 {
            return Vec3::ZERO;
        }
        let rho1 = self.material.eval(self.normal, self.wo, w1);
        let rho2 = scene.materials[s.vertex.material].eval(n2, -w1, w2);
        rho1.mul_elem(rho2).mul_elem(scene.emission(s.light.emitter)) * (cos1 * cos2 * cos3 / r23_sq)
    }

    /// Path integrand in (solid angle at `y1`) x (emitter area) measure.
    pub fn path_integrand(&self, scene: &Scene, s: &PathSample) -> Vec3 {
        let f = self.path_unshadowed(scene, s);
        if f == Vec3::ZERO
            || !scene.visible(self.position, s.vertex.position)
            || !scene.visible(s.vertex.position, s.light.position)
        {
            return Vec3::ZERO;
        }
        f
    }

    pub fn path_target(&self, scene: &Scene, s: &PathSample) -> f64 {
        self.path_integrand(scene, s).luminance()
    }

    /// Solid-angle density of the first bounce direction toward `y2`.
    pub fn bounce_pdf(&self, y2: Vec3) -> f64 {
        let w1 = (y2 - self.position).normalize();
        self.material.pdf(self.normal, self.wo, w1)
    }

    /// Primary-sample coordinates of the first bounce direction.
    pub fn path_pss(&self, s: &PathSample) -> Option<[f64; 2]> {
        let w1 = (s.vertex.position - self.position).normalize();
        self.material.invert(self.normal, self.wo, w1)
    }

    /// Traces the first bounce generated by `u` to the next surface.
    pub fn trace_bounce(&self, scene: &Scene, u: [f64; 2]) -> Option<SurfacePoint> {
        let w1 = self.material.sample(self.normal, self.wo, u);
        if w1.dot(self.normal) <= 0.0 {
            return None;
        }
        let hit = scene.intersect(&Ray::new(self.position, w1))?;
        Some(SurfacePoint {
            position: hit.position,
            normal: hit.normal,
            material: hit.material,
        })
    }

    /// Builds a path from bounce coordinates `u_dir` and light coordinates
    /// `u_light`. Returns the sample and its source density, or `None` when the
    /// bounce escapes or leaves below the surface.
    pub fn trace_one_bounce(
        &self,
        scene: &Scene,
        u_dir: [f64; 2],
        u_light: [f64; 3],
        id: u64,
    ) -> Option<(PathSample, f64)> {
        let vertex = self.trace_bounce(scene, u_dir)?;
        let light = scene.sample_light(u_light);
        let pdf = self.bounce_pdf(vertex.position) * scene.light_pdf();
        if !(pdf > 0.0) {
            return None;
        }
        Some((PathSample { vertex, light, id }, pdf))
    }
}

/// `|cos| / r^2` at the reconnection vertex for the segment from `y1`.
fn solid_angle_factor(y1: Vec3, v: &SurfacePoint) -> (f64, f64, f64) {
    let d = y1 - v.position;
    let r2 = d.length_squared();
    let r = r2.sqrt();
    let cos = (v.normal.dot(d) / r).abs();
    (cos / r2, cos, r)
}

/// Reconnection shift: keeps `y2` and `y3` and re-anchors the path at the
/// primary hit of `to`.
///
/// The Jacobian of the bounce direction is
/// `(|cos_to| / r_to^2) / (|cos_from| / r_from^2)` at `y2`. The validity test is
/// symmetric in the two pixels so that the shift is a bijection between the
/// valid sets of both domains.
pub fn reconnection_shift(
    scene: &Scene,
    connect: &ConnectConfig,
    sample: &PathSample,
    from: &ShadingContext,
    to: &ShadingContext,
) -> ShiftResult<PathSample> {
    if from.position == to.position {
        return ShiftResult::identity(*sample);
    }
    let v = &sample.vertex;
    let (g_from, cos_from, _) = solid_angle_factor(from.position, v);
    let (g_to, cos_to, _) = solid_angle_factor(to.position, v);
    let valid = cos_from >= GRAZING_COS
        && cos_to >= GRAZING_COS
        && connect.connectable(scene, from.position, v, sample.light.position)
        && connect.connectable(scene, to.position, v, sample.light.position)
        && scene.visible(to.position, v.position)
        && g_from > 0.0
        && g_to.is_finite();
    if !valid {
        return ShiftResult::invalid(*sample);
    }
    ShiftResult {
        sample: *sample,
        jacobian: g_to / g_from,
        valid: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::scene::{Material, SceneDescription};
    use rand::Rng;
    use std::f64::consts::PI;

    fn diffuse_box() -> Scene {
        let mut d = SceneDescription::builtin("glossy_box").unwrap();
        d.spheres.clear();
        for q in d.quads.iter_mut().filter(|q| q.emission.is_none()) {
            q.material = "white".into();
        }
        d.build().unwrap()
    }

    fn floor_ctx() -> ShadingContext {
        ShadingContext::new(
            Vec3::new(0.2, 0.0, 0.1),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.6, 0.8),
            Material::Lambertian {
                albedo: Vec3::splat(0.7),
            },
        )
    }

    #[test]
    fn throughput_matches_per_vertex_factors() {
        let scene = diffuse_box();
        let ctx = floor_ctx();
        let mut rng = rng::stream(9, 0, 0, 0);
        let mut checked = 0;
        for _ in 0..2000 {
            let u = [rng.random(), rng.random()];
            let ul = [rng.random(), rng.random(), rng.random()];
            let Some((s, _)) = ctx.trace_one_bounce(&scene, u, ul, 0) else {
                continue;
            };
            let f = ctx.path_integrand(&scene, &s);
            if f == Vec3::ZERO {
                continue;
            }
            let y1 = ctx.position;
            let y2 = s.vertex.position;
            let y3 = s.light.position;
            let w1 = (y2 - y1).normalize();
            let w2 = (y3 - y2).normalize();
            let n2 = if s.vertex.normal.dot(y1 - y2) > 0.0 {
                s.vertex.normal
            } else {
                -s.vertex.normal
            };
            let albedo2 = scene.materials[s.vertex.material].albedo();
            let le = scene.emission(s.light.emitter);
            let geo = 0.7 / PI * ctx.normal.dot(w1) / PI * n2.dot(w2) * (-s.light.normal.dot(w2))
                / (y3 - y2).length_squared();
            let expected = Vec3::new(albedo2.x * le.x, albedo2.y * le.y, albedo2.z * le.z) * geo;
            assert!(
                (f - expected).length() <= 1e-12 * expected.length(),
                "{f:?} vs {expected:?}"
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn escaped_bounce_has_no_sample() {
        let scene = diffuse_box();
        // looking out of the open front of the box
        let ctx = ShadingContext::new(
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
            Material::Phong {
                albedo: Vec3::ONE,
                exponent: 1e6,
            },
        );
        assert!(ctx.trace_one_bounce(&scene, [0.5, 0.5], [0.5, 0.5, 0.5], 0).is_none());
    }

    #[test]
    fn stored_coordinates_replay_the_path() {
        let scene = Scene::builtin("glossy_box").unwrap();
        let ctx = floor_ctx();
        let mut rng = rng::stream(10, 0, 0, 0);
        for _ in 0..1000 {
            let u = [rng.random(), rng.random()];
            let Some((s, _)) = ctx.trace_one_bounce(&scene, u, [0.3, 0.3, 0.3], 0) else {
                continue;
            };
            let back = ctx.path_pss(&s).unwrap();
            let v = ctx.trace_bounce(&scene, back).unwrap();
            assert!((v.position - s.vertex.position).length() < 1e-9);
        }
    }

    #[test]
    fn self_shift_is_identity() {
        let scene = diffuse_box();
        let ctx = floor_ctx();
        let (s, _) = ctx.trace_one_bounce(&scene, [0.3, 0.6], [0.5, 0.5, 0.5], 7).unwrap();
        let r = reconnection_shift(&scene, &ConnectConfig::default(), &s, &ctx, &ctx);
        assert!(r.valid);
        assert!((r.jacobian - 1.0).abs() <= 1e-9);
        assert_eq!(r.sample, s);
    }

    #[test]
    fn glossy_vertices_do_not_connect() {
        let scene = Scene::builtin("glossy_box").unwrap();
        let connect = ConnectConfig {
            max_lobe_exponent: 10.0,
            ..ConnectConfig::default()
        };
        let v = SurfacePoint {
            position: Vec3::new(0.0, 0.0, 0.0),
            normal: Vec3::new(0.0, 1.0, 0.0),
            material: scene.quads[0].material,
        };
        assert!(!connect.connectable(&scene, Vec3::new(0.0, 1.0, 0.0), &v, Vec3::new(0.0, 2.0, 0.0)));
        let near = Vec3::new(0.0, 0.001, 0.0);
        assert!(!ConnectConfig::default().connectable(&scene, near, &v, Vec3::new(0.0, 2.0, 0.0)));
    }
}
