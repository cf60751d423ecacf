//! The per-frame pipeline: initial candidates, temporal reuse, mutation,
//! spatial reuse, shading.
//!
//! Each stage runs over all pixels in parallel and completes before the next
//! begins. Every pixel draws from its own random stream per stage, keyed by
//! `(seed, frame, pixel, stage)`, so output does not depend on thread count.

mod image;
mod pipeline;

pub use image::{heatmap_ppm, read_ids, write_ids, Image, NO_SAMPLE};
pub use pipeline::{FrameOutput, FrameState, History, Renderer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{MutationConfig, MutationStrategy};
use crate::scene::ConnectConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderMode {
    /// Direct lighting from area emitters.
    #[default]
    Di,
    /// One indirect bounce (plus emission seen directly).
    Path,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    /// Neighbors per round.
    pub k: usize,
    /// Disc radius in pixels.
    pub radius: f64,
    pub rounds: u32,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            k: 5,
            radius: 10.0,
            rounds: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub mode: RenderMode,
    /// Initial candidates per pixel.
    pub candidates: u32,
    pub m_cap: f64,
    pub mutation: MutationConfig,
    pub spatial: SpatialConfig,
    pub connect: ConnectConfig,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 64,
            height: 64,
            mode: RenderMode::Di,
            candidates: 32,
            m_cap: 50.0,
            mutation: MutationConfig::default(),
            spatial: SpatialConfig::default(),
            connect: ConnectConfig::default(),
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("width/height", "image dimensions must be positive"));
        }
        if self.candidates == 0 {
            return Err(Error::config(
                "candidates",
                "at least one initial candidate is required",
            ));
        }
        if !(self.m_cap >= 0.0 && self.m_cap.is_finite()) {
            return Err(Error::config(
                "m_cap",
                format!("must be finite and nonnegative, got {}", self.m_cap),
            ));
        }
        if !(self.spatial.radius >= 0.0 && self.spatial.radius.is_finite()) {
            return Err(Error::config("spatial.radius", "must be finite and nonnegative"));
        }
        self.mutation.validate()?;
        self.connect.validate()?;
        let expected = match self.mode {
            RenderMode::Di => MutationStrategy::DiDirection,
            RenderMode::Path => MutationStrategy::ReconnectionVertex,
        };
        if self.mutation.iters > 0 && self.mutation.strategy != expected {
            return Err(Error::config(
                "strategy",
                format!("{:?} mode requires the {:?} mutation strategy", self.mode, expected),
            ));
        }
        Ok(())
    }

    /// Mutation strategy matching the render mode.
    pub fn strategy_for(mode: RenderMode) -> MutationStrategy {
        match mode {
            RenderMode::Di => MutationStrategy::DiDirection,
            RenderMode::Path => MutationStrategy::ReconnectionVertex,
        }
    }
}
