//! Pixel grids as resampling domains.

use super::path::reconnection_shift;
use super::{ConnectConfig, DiSample, PathSample, Scene, ShadingContext};
use crate::resampling::{ResamplingDomain, ShiftResult};

/// Samples that carry a stable identifier for duplicate tracking.
pub trait SampleId {
    fn id(&self) -> u64;
    fn set_id(&mut self, id: u64);
}

impl SampleId for DiSample {
    fn id(&self) -> u64 {
        self.id
    }
    fn set_id(&mut self, id: u64) {
        self.id = id;
    }
}

impl SampleId for PathSample {
    fn id(&self) -> u64 {
        self.id
    }
    fn set_id(&mut self, id: u64) {
        self.id = id;
    }
}

/// Direct lighting over a pixel grid. All pixels share the emitter-area
/// domain, so the shift is the identity.
#[derive(Clone, Copy)]
pub struct DiDomain<'a> {
    pub scene: &'a Scene,
    pub contexts: &'a [Option<ShadingContext>],
}

impl ResamplingDomain for DiDomain<'_> {
    type Sample = DiSample;
    type Pixel = usize;

    fn target(&self, pixel: usize, s: &DiSample) -> f64 {
        self.contexts[pixel]
            .as_ref()
            .map_or(0.0, |c| c.di_target(self.scene, &s.light))
    }

    fn shift(&self, s: &DiSample, _: usize, _: usize) -> ShiftResult<DiSample> {
        ShiftResult::identity(*s)
    }
}

/// One-bounce paths over a pixel grid, shifted by reconnection.
#[derive(Clone, Copy)]
pub struct PathDomain<'a> {
    pub scene: &'a Scene,
    pub contexts: &'a [Option<ShadingContext>],
    pub connect: ConnectConfig,
}

impl ResamplingDomain for PathDomain<'_> {
    type Sample = PathSample;
    type Pixel = usize;

    fn target(&self, pixel: usize, s: &PathSample) -> f64 {
        self.contexts[pixel]
            .as_ref()
            .map_or(0.0, |c| c.path_target(self.scene, s))
    }

    fn shift(&self, s: &PathSample, from: usize, to: usize) -> ShiftResult<PathSample> {
        if from == to {
            return ShiftResult::identity(*s);
        }
        match (&self.contexts[from], &self.contexts[to]) {
            (Some(a), Some(b)) => reconnection_shift(self.scene, &self.connect, s, a, b),
            _ => ShiftResult::invalid(*s),
        }
    }
}
