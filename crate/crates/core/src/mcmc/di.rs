use rand::Rng;

use super::mh::{MutationConfig, MutationProposal, Mutator};
use super::pss::{perturb, PssVector};
use crate::scene::{DiSample, Scene, ShadingContext};

/// Direct-lighting mutation: perturbs the primary-sample coordinates of the
/// direction from the shading point to the light sample and re-traces.
///
/// The perturbation is symmetric, so the kernel ratio is 1. The contribution
/// function is `p / q` with `q` the emitter-area density induced by BRDF
/// direction sampling.
pub struct DiDirectionMutator<'a> {
    pub scene: &'a Scene,
    pub ctx: &'a ShadingContext,
}

impl<'a> DiDirectionMutator<'a> {
    pub fn new(scene: &'a Scene, ctx: &'a ShadingContext) -> Self {
        DiDirectionMutator { scene, ctx }
    }

    /// `C(u) = p(y(u)) / q(y(u))`.
    pub fn contribution(&self, s: &DiSample) -> f64 {
        let q = self.ctx.di_direction_pdf(&s.light);
        if !(q > 0.0) {
            return 0.0;
        }
        let c = self.ctx.di_target(self.scene, &s.light) / q;
        if c.is_finite() {
            c
        } else {
            0.0
        }
    }

    /// Proposal for the given perturbed coordinates.
    pub fn propose_at(&self, current: &DiSample, u: [f64; 2]) -> MutationProposal<DiSample> {
        let Some(light) = self.ctx.di_trace(self.scene, u) else {
            return MutationProposal::rejected(*current);
        };
        let candidate = DiSample { light, id: current.id };
        let c_cur = self.contribution(current);
        let c_new = self.contribution(&candidate);
        MutationProposal {
            candidate,
            kernel_ratio: 1.0,
            contribution_ratio: if c_cur > 0.0 { c_new / c_cur } else { 0.0 },
        }
    }
}

impl Mutator for DiDirectionMutator<'_> {
    type Sample = DiSample;

    fn target(&self, s: &DiSample) -> f64 {
        self.ctx.di_target(self.scene, &s.light)
    }

    fn propose<R: Rng + ?Sized>(
        &self,
        current: &DiSample,
        cfg: &MutationConfig,
        rng: &mut R,
    ) -> MutationProposal<DiSample> {
        let u = self.ctx.di_pss(&current.light);
        let moved = perturb(&PssVector::wrapped(u.unwrap_or([0.5; 2])), cfg.s1, cfg.s2, rng);
        match u {
            Some(_) => self.propose_at(current, moved.get()),
            None => MutationProposal::rejected(*current),
        }
    }
}
