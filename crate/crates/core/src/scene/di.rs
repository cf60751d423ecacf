//! Direct lighting: samples are points on emitters.

use super::{LightPoint, Scene, ShadingContext};
use crate::math::{Ray, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiSample {
    pub light: LightPoint,
    pub id: u64,
}

impl ShadingContext {
    /// `Le * rho * cos * G * V` for a light point, in area measure on the emitter.
    ///
    /// `G` here is only the emitter-side factor `cos_light / r^2`; the
    /// receiver cosine is the separate `cos` term.
    pub fn di_integrand(&self, scene: &Scene, light: &LightPoint) -> Vec3 {
        let f = self.di_unshadowed(scene, light);
        if f == Vec3::ZERO || !scene.visible(self.position, light.position) {
            return Vec3::ZERO;
        }
        f
    }

    fn di_unshadowed(&self, scene: &Scene, light: &LightPoint) -> Vec3 {
        let d = light.position - self.position;
        let r2 = d.length_squared();
        if !(r2 > 0.0) {
            return Vec3::ZERO;
        }
        let wi = d / r2.sqrt();
        let cos_recv = self.normal.dot(wi);
        let cos_light = -light.normal.dot(wi);
        if cos_recv <= 0.0 || cos_light <= 0.0 {
            return Vec3::ZERO;
        }
        let rho = self.material.eval(self.normal, self.wo, wi);
        scene.emission(light.emitter).mul_elem(rho) * (cos_recv * cos_light / r2)
    }

    /// Target function: luminance of [`ShadingContext::di_integrand`].
    pub fn di_target(&self, scene: &Scene, light: &LightPoint) -> f64 {
        self.di_integrand(scene, light).luminance()
    }

    /// Area density on the emitter induced by BRDF direction sampling.
    pub fn di_direction_pdf(&self, light: &LightPoint) -> f64 {
        let d = light.position - self.position;
        let r2 = d.length_squared();
        let wi = d / r2.sqrt();
        let cos_light = -light.normal.dot(wi);
        if !(cos_light > 0.0) {
            return 0.0;
        }
        self.material.pdf(self.normal, self.wo, wi) * cos_light / r2
    }

    /// Primary-sample coordinates of the direction toward `light`.
    pub fn di_pss(&self, light: &LightPoint) -> Option<[f64; 2]> {
        let wi = (light.position - self.position).normalize();
        self.material.invert(self.normal, self.wo, wi)
    }

    /// Traces the direction generated by `u` and returns the emitter point it
    /// hits, if the first surface along it is the front of an emitter.
    pub fn di_trace(&self, scene: &Scene, u: [f64; 2]) -> Option<LightPoint> {
        let wi = self.material.sample(self.normal, self.wo, u);
        if wi.dot(self.normal) <= 0.0 {
            return None;
        }
        let hit = scene.intersect(&Ray::new(self.position, wi))?;
        let emitter = hit.emitter?;
        if hit.normal.dot(wi) >= 0.0 {
            return None;
        }
        Some(LightPoint {
            position: hit.position,
            normal: hit.normal,
            emitter,
        })
    }
}
