use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mh::{MutationConfig, MutationProposal, Mutator};
use super::pss::{perturb, PssVector};
use crate::math::Vec3;
use crate::scene::{ConnectConfig, PathSample, Scene, ShadingContext};

/// How the transition-kernel ratio of the reconnection mutation is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelRatioMode {
    /// The exact ratio for a mutation that moves `y2` and keeps `y3`.
    #[default]
    Exact,
    /// Pretends the kernel is symmetric. Biased; for negative controls only.
    ForceUnit,
}

/// Mutates only the reconnection vertex of a one-bounce path.
///
/// The bounce coordinates at `y1` are perturbed and re-traced to a new `y2`;
/// the light point `y3` stays fixed. Keeping `y3` fixed makes the kernel
/// asymmetric in primary sample space: the implied coordinates at `y2` move,
/// so the ratio
/// `(cos3' / cos3) * (r23^2 / r23'^2) * (p2' / p2)`
/// enters the acceptance test. The path ends at `y3`, so there is no factor
/// for a direction sampled there.
pub struct ReconnectionMutator<'a> {
    pub scene: &'a Scene,
    pub ctx: &'a ShadingContext,
    pub connect: ConnectConfig,
    pub mode: KernelRatioMode,
}

/// Density terms of the path in primary sample space.
struct Densities {
    target: f64,
    /// `p1(w1) * p2(w2 | w1) * cos3 / r23^2`.
    pss: f64,
    /// `p2(w2 | w1) * cos3 / r23^2`.
    tail: f64,
}

impl<'a> ReconnectionMutator<'a> {
    pub fn new(scene: &'a Scene, ctx: &'a ShadingContext, connect: ConnectConfig, mode: KernelRatioMode) -> Self {
        ReconnectionMutator {
            scene,
            ctx,
            connect,
            mode,
        }
    }

    fn densities(&self, s: &PathSample) -> Densities {
        let y1 = self.ctx.position;
        let y2 = s.vertex.position;
        let y3 = s.light.position;
        let to_prev = (y1 - y2).normalize();
        let d23 = y3 - y2;
        let r23_sq = d23.length_squared();
        let w2 = d23 / r23_sq.sqrt();
        let n2 = if s.vertex.normal.dot(to_prev) < 0.0 {
            -s.vertex.normal
        } else {
            s.vertex.normal
        };
        let p2 = self.scene.materials[s.vertex.material].pdf(n2, to_prev, w2);
        let cos3 = (-s.light.normal.dot(w2)).max(0.0);
        let tail = p2 * cos3 / r23_sq;
        Densities {
            target: self.ctx.path_target(self.scene, s),
            pss: self.ctx.bounce_pdf(y2) * tail,
            tail,
        }
    }

    fn connectable(&self, s: &PathSample) -> bool {
        self.connect
            .connectable(self.scene, self.ctx.position, &s.vertex, s.light.position)
    }

    /// Proposal for the given perturbed bounce coordinates.
    pub fn propose_at(&self, current: &PathSample, u: [f64; 2]) -> MutationProposal<PathSample> {
        // non-connectable states are left alone so both directions of every
        // move are treated alike
        if !self.connectable(current) {
            return MutationProposal::rejected(*current);
        }
        let Some(vertex) = self.ctx.trace_bounce(self.scene, u) else {
            return MutationProposal::rejected(*current);
        };
        let candidate = PathSample { vertex, ..*current };
        if !self.connectable(&candidate) {
            return MutationProposal::rejected(*current);
        }
        let cur = self.densities(current);
        let new = self.densities(&candidate);
        if !(cur.pss > 0.0 && cur.target > 0.0 && new.pss > 0.0) {
            return MutationProposal::rejected(*current);
        }
        let contribution_ratio = (new.target / new.pss) / (cur.target / cur.pss);
        let kernel_ratio = match self.mode {
            KernelRatioMode::Exact => new.tail / cur.tail,
            KernelRatioMode::ForceUnit => 1.0,
        };
        if !(contribution_ratio.is_finite() && kernel_ratio.is_finite() && kernel_ratio > 0.0) {
            return MutationProposal::rejected(*current);
        }
        MutationProposal {
            candidate,
            kernel_ratio,
            contribution_ratio,
        }
    }

    /// The kernel ratio written out factor by factor, for checks.
    pub fn kernel_ratio_factors(&self, current: &PathSample, candidate: &PathSample) -> [f64; 3] {
        let y3 = current.light.position;
        let n3 = current.light.normal;
        let geom = |y2: Vec3| {
            let d = y3 - y2;
            let r2 = d.length_squared();
            ((-n3.dot(d / r2.sqrt())), r2)
        };
        let (cos, r2) = geom(current.vertex.position);
        let (cos_new, r2_new) = geom(candidate.vertex.position);
        let p2 = self.densities(current).tail * r2 / cos;
        let p2_new = self.densities(candidate).tail * r2_new / cos_new;
        [cos_new / cos, r2 / r2_new, p2_new / p2]
    }
}

impl Mutator for ReconnectionMutator<'_> {
    type Sample = PathSample;

    fn target(&self, s: &PathSample) -> f64 {
        self.ctx.path_target(self.scene, s)
    }

    fn propose<R: Rng + ?Sized>(
        &self,
        current: &PathSample,
        cfg: &MutationConfig,
        rng: &mut R,
    ) -> MutationProposal<PathSample> {
        let u = self.ctx.path_pss(current);
        let moved = perturb(&PssVector::wrapped(u.unwrap_or([0.5; 2])), cfg.s1, cfg.s2, rng);
        match u {
            Some(_) => self.propose_at(current, moved.get()),
            None => MutationProposal::rejected(*current),
        }
    }
}
