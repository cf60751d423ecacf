//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use restir_core::mcmc::{chain, MutationConfig, MutationProposal, Mutator};
use restir_core::scene::{
    CameraDescription, ConnectConfig, DiSample, LightPoint, Material, PathSample, QuadDescription, SceneDescription,
    SurfacePoint,
};
use restir_core::testbed::{quad_oracle_on, total_variation};
use restir_core::{rng, Scene, ShadingContext, Vec3};

pub fn quad(
    corner: [f64; 3],
    edge_u: [f64; 3],
    edge_v: [f64; 3],
    material: &str,
    emission: Option<f64>,
) -> QuadDescription {
    QuadDescription {
        corner: corner.into(),
        edge_u: edge_u.into(),
        edge_v: edge_v.into(),
        material: material.into(),
        emission: emission.map(Vec3::splat),
    }
}

fn camera() -> CameraDescription {
    CameraDescription {
        position: Vec3::new(0.5, 2.0, 3.0),
        look_at: Vec3::new(0.5, 0.0, 0.5),
        up: Vec3::new(0.0, 1.0, 0.0),
        vfov_degrees: 40.0,
    }
}

fn materials() -> BTreeMap<String, Material> {
    let mut m = BTreeMap::new();
    m.insert(
        "floor".to_string(),
        Material::Lambertian {
            albedo: Vec3::new(0.7, 0.6, 0.5),
        },
    );
    m.insert("emitter".to_string(), Material::Lambertian { albedo: Vec3::ZERO });
    m
}

/// Unit floor on `[0,1] x {0} x [0,1]` and a small light hanging near the
/// `(1, 1)` corner, facing down.
pub fn slice_scene() -> Scene {
    SceneDescription {
        camera: camera(),
        materials: materials(),
        spheres: vec![],
        quads: vec![
            quad([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], "floor", None),
            quad([0.9, 0.3, 0.9], [0.1, 0.0, 0.0], [0.0, 0.0, 0.1], "emitter", Some(10.0)),
        ],
    }
    .build()
    .unwrap()
}

/// Shading point to the left of the slice floor, facing it.
pub fn slice_context() -> ShadingContext {
    ShadingContext::new(
        Vec3::new(-0.3, 0.6, 0.5),
        Vec3::new(1.0, -1.0, 0.0).normalize(),
        Vec3::new(1.0, 0.0, 0.2).normalize(),
        Material::Lambertian {
            albedo: Vec3::splat(0.8),
        },
    )
}

/// Fixed light point of the slice: centre of the light, facing down.
pub fn slice_light() -> LightPoint {
    LightPoint {
        position: Vec3::new(0.95, 0.3, 0.95),
        normal: Vec3::new(0.0, -1.0, 0.0),
        emitter: 0,
    }
}

/// Path through the floor point `(x, 0, z)` to [`slice_light`].
pub fn slice_sample(scene: &Scene, x: f64, z: f64) -> PathSample {
    PathSample {
        vertex: SurfacePoint {
            position: Vec3::new(x, 0.0, z),
            normal: Vec3::new(0.0, 1.0, 0.0),
            material: scene.quads[0].material,
        },
        light: slice_light(),
        id: 0,
    }
}

pub fn slice_connect() -> ConnectConfig {
    ConnectConfig::default()
}

/// Bin masses of the reconnection vertex's floor `x` coordinate under the
/// path target with the light point held fixed, in floor-area measure.
pub fn slice_oracle(scene: &Scene, ctx: &ShadingContext, bins: usize) -> Vec<f64> {
    let density = |x: f64, z: f64| {
        let s = slice_sample(scene, x, z);
        let d = s.vertex.position - ctx.position;
        let r2 = d.length_squared();
        let cos2 = (d.y / r2.sqrt()).abs();
        ctx.path_target(scene, &s) * cos2 / r2
    };
    let masses: Vec<f64> = (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            quad_oracle_on(|x| quad_oracle_on(|z| density(x, z), 0.0, 1.0, 32).unwrap(), lo, hi, 8).unwrap()
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.into_iter().map(|m| m / total).collect()
}

/// Shading point for the direct-lighting chain: glossy floor point under an
/// offset square light.
pub fn di_scene() -> Scene {
    SceneDescription {
        camera: camera(),
        materials: materials(),
        spheres: vec![],
        quads: vec![
            quad([-1.0, 0.0, -1.0], [0.0, 0.0, 3.0], [3.0, 0.0, 0.0], "floor", None),
            quad([0.3, 1.0, 0.2], [0.6, 0.0, 0.0], [0.0, 0.0, 0.6], "emitter", Some(5.0)),
        ],
    }
    .build()
    .unwrap()
}

pub fn di_context() -> ShadingContext {
    ShadingContext::new(
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(-1.0, 1.0, -0.6).normalize(),
        Material::Phong {
            albedo: Vec3::splat(0.8),
            exponent: 8.0,
        },
    )
}

/// Bin masses of the light-point `u` coordinate under the direct-lighting
/// target, in emitter-area measure.
pub fn di_oracle(scene: &Scene, ctx: &ShadingContext, bins: usize) -> Vec<f64> {
    let q = &scene.quads[scene.emitters[0]];
    let n = q.normal();
    let density = |a: f64, b: f64| {
        let light = LightPoint {
            position: q.point(a, b),
            normal: n,
            emitter: 0,
        };
        ctx.di_target(scene, &light)
    };
    let masses: Vec<f64> = (0..bins)
        .map(|i| {
            let (lo, hi) = (i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
            quad_oracle_on(|a| quad_oracle_on(|b| density(a, b), 0.0, 1.0, 32).unwrap(), lo, hi, 8).unwrap()
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.into_iter().map(|m| m / total).collect()
}

pub fn di_start(scene: &Scene) -> DiSample {
    let q = &scene.quads[scene.emitters[0]];
    DiSample {
        light: LightPoint {
            position: q.point(0.5, 0.5),
            normal: q.normal(),
            emitter: 0,
        },
        id: 0,
    }
}

/// Accepts every proposal that lands on the target support.
pub struct AlwaysAccept<M>(pub M);

impl<M: Mutator> Mutator for AlwaysAccept<M> {
    type Sample = M::Sample;

    fn target(&self, s: &M::Sample) -> f64 {
        self.0.target(s)
    }

    fn propose<R: Rng + ?Sized>(
        &self,
        s: &M::Sample,
        cfg: &MutationConfig,
        rng: &mut R,
    ) -> MutationProposal<M::Sample> {
        let p = self.0.propose(s, cfg, rng);
        let on = self.0.target(&p.candidate) > 0.0;
        MutationProposal {
            contribution_ratio: if on { 1.0 } else { 0.0 },
            kernel_ratio: 1.0,
            candidate: p.candidate,
        }
    }
}

/// Histograms `coord` over a chain of `steps` proposals after `warmup`
/// discarded steps; returns (TV distance, acceptance rate).
#[allow(clippy::too_many_arguments)]
pub fn chain_tv<M: Mutator>(
    mutator: &M,
    start: M::Sample,
    cfg: &MutationConfig,
    warmup: usize,
    steps: usize,
    seed: u64,
    expected: &[f64],
    coord: impl Fn(&M::Sample) -> f64,
) -> (f64, f64) {
    let bins = expected.len();
    let mut counts = vec![0u64; bins];
    let mut rng = rng::stream(seed, 0, 0, 99);
    let mut visited = 0usize;
    let stats = chain(mutator, start, warmup + steps, cfg, &mut rng, |s| {
        if visited >= warmup {
            let c = coord(s).clamp(0.0, 1.0);
            counts[((c * bins as f64) as usize).min(bins - 1)] += 1;
        }
        visited += 1;
    })
    .unwrap();
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
    (total_variation(&hist, expected), stats.acceptance_rate())
}
