use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::camera::{Camera, CameraDescription};
use super::geometry::{Quad, Sphere};
use super::material::Material;
use super::Scene;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// JSON scene file. Materials are referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub camera: CameraDescription,
    pub materials: BTreeMap<String, Material>,
    #[serde(default)]
    pub spheres: Vec<SphereDescription>,
    #[serde(default)]
    pub quads: Vec<QuadDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereDescription {
    pub center: Vec3,
    pub radius: f64,
    pub material: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadDescription {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec3>,
}

impl SceneDescription {
    pub const BUILTIN_NAMES: [&'static str; 2] = ["glossy_box", "glossy_box_slot"];

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "glossy_box" => Some(glossy_box(false)),
            "glossy_box_slot" => Some(glossy_box(true)),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Scene> {
        let names: Vec<&String> = self.materials.keys().collect();
        let materials: Vec<Material> = self.materials.values().copied().collect();
        let lookup = |name: &str, what: String| {
            names
                .iter()
                .position(|n| n.as_str() == name)
                .ok_or_else(|| Error::Scene(format!("{what}: unknown material \"{name}\"")))
        };
        let spheres = self
            .spheres
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(Sphere {
                    center: s.center,
                    radius: s.radius,
                    material: lookup(&s.material, format!("sphere {i}"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let quads = self
            .quads
            .iter()
            .enumerate()
            .map(|(i, q)| {
                Ok(Quad {
                    corner: q.corner,
                    edge_u: q.edge_u,
                    edge_v: q.edge_v,
                    material: lookup(&q.material, format!("quad {i}"))?,
                    emission: q.emission,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let camera = Camera::new(&self.camera).map_err(Error::Scene)?;
        Scene::new(spheres, quads, materials, camera)
    }
}

fn quad(corner: [f64; 3], edge_u: [f64; 3], edge_v: [f64; 3], material: &str) -> QuadDescription {
    QuadDescription {
        corner: corner.into(),
        edge_u: edge_u.into(),
        edge_v: edge_v.into(),
        material: material.into(),
        emission: None,
    }
}

/// A 2x2x2 box open toward the camera, with a glossy floor, satin back wall
/// and ceiling, a glossy and a diffuse sphere and a square ceiling light. The slot variant hides the light
/// behind two plates separated by a narrow gap.
fn glossy_box(slot: bool) -> SceneDescription {
    let mut materials = BTreeMap::new();
    let lambert = |r, g, b| Material::Lambertian {
        albedo: Vec3::new(r, g, b),
    };
    materials.insert("white".to_string(), lambert(0.7, 0.7, 0.7));
    materials.insert(
        "satin".to_string(),
        Material::Phong {
            albedo: Vec3::new(0.7, 0.7, 0.7),
            exponent: 20.0,
        },
    );
    materials.insert("red".to_string(), lambert(0.65, 0.1, 0.1));
    materials.insert("green".to_string(), lambert(0.15, 0.6, 0.15));
    materials.insert("emitter".to_string(), lambert(0.0, 0.0, 0.0));
    materials.insert(
        "glossy_floor".to_string(),
        Material::Phong {
            albedo: Vec3::new(0.7, 0.7, 0.7),
            exponent: 60.0,
        },
    );
    materials.insert(
        "glossy_sphere".to_string(),
        Material::Phong {
            albedo: Vec3::new(0.8, 0.75, 0.6),
            exponent: 80.0,
        },
    );

    let mut quads = vec![
        quad([-1.0, 0.0, 1.0], [2.0, 0.0, 0.0], [0.0, 0.0, -2.0], "glossy_floor"),
        quad([-1.0, 2.0, -1.0], [2.0, 0.0, 0.0], [0.0, 0.0, 2.0], "satin"),
        quad([-1.0, 0.0, -1.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0], "satin"),
        quad([-1.0, 0.0, 1.0], [0.0, 0.0, -2.0], [0.0, 2.0, 0.0], "red"),
        quad([1.0, 0.0, -1.0], [0.0, 0.0, 2.0], [0.0, 2.0, 0.0], "green"),
    ];
    let mut light = quad([-0.3, 1.999, -0.3], [0.6, 0.0, 0.0], [0.0, 0.0, 0.6], "emitter");
    if slot {
        light.emission = Some(Vec3::splat(60.0));
        quads.push(quad([-0.5, 1.9, -0.5], [1.0, 0.0, 0.0], [0.0, 0.0, 0.48], "satin"));
        quads.push(quad([-0.5, 1.9, 0.02], [1.0, 0.0, 0.0], [0.0, 0.0, 0.48], "satin"));
    } else {
        light.emission = Some(Vec3::splat(15.0));
    }
    quads.push(light);

    SceneDescription {
        camera: CameraDescription {
            position: Vec3::new(0.0, 1.0, 3.2),
            look_at: Vec3::new(0.0, 1.0, 0.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vfov_degrees: 40.0,
        },
        materials,
        spheres: vec![
            SphereDescription {
                center: Vec3::new(-0.4, 0.35, -0.3),
                radius: 0.35,
                material: "glossy_sphere".into(),
            },
            SphereDescription {
                center: Vec3::new(0.45, 0.3, 0.3),
                radius: 0.3,
                material: "white".into(),
            },
        ],
        quads,
    }
}
