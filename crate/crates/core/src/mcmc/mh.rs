use std::ops::AddAssign;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resampling::Reservoir;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationStrategy {
    /// Perturb the direction from the shading point to the light sample.
    #[default]
    DiDirection,
    /// Perturb only the reconnection vertex of a one-bounce path.
    ReconnectionVertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub iters: u32,
    pub s1: f64,
    pub s2: f64,
    pub strategy: MutationStrategy,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            iters: 1,
            s1: 1.0 / 1024.0,
            s2: 1.0 / 64.0,
            strategy: MutationStrategy::DiDirection,
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s1.is_finite()) {
            return Err(Error::config("s1", format!("must be positive, got {}", self.s1)));
        }
        if !(self.s2 >= self.s1 && self.s2 < 1.0) {
            return Err(Error::config(
                "s2",
                format!("must satisfy s1 <= s2 < 1, got s1 = {}, s2 = {}", self.s1, self.s2),
            ));
        }
        Ok(())
    }
}

/// A candidate state together with the ratios that enter the acceptance test.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationProposal<S> {
    pub candidate: S,
    /// `T(u' -> u) / T(u -> u')`.
    pub kernel_ratio: f64,
    /// `C(u') / C(u)`; zero for infeasible candidates.
    pub contribution_ratio: f64,
}

impl<S> MutationProposal<S> {
    pub fn rejected(candidate: S) -> Self {
        MutationProposal {
            candidate,
            kernel_ratio: 1.0,
            contribution_ratio: 0.0,
        }
    }

    pub fn acceptance(&self) -> f64 {
        ratio_acceptance(self.contribution_ratio * self.kernel_ratio)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MutationStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MutationStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

impl AddAssign for MutationStats {
    fn add_assign(&mut self, o: Self) {
        self.proposed += o.proposed;
        self.accepted += o.accepted;
    }
}

/// Metropolis-Hastings acceptance probability `min(1, p(z)/p(x) * kernel_ratio)`.
pub fn acceptance(p_hat_x: f64, p_hat_z: f64, kernel_ratio: f64) -> Result<f64> {
    if !(p_hat_x > 0.0) {
        return Err(Error::OffSupport(p_hat_x));
    }
    if !(p_hat_z > 0.0 && kernel_ratio > 0.0) {
        return Ok(0.0);
    }
    Ok(ratio_acceptance(p_hat_z / p_hat_x * kernel_ratio))
}

#[inline]
fn ratio_acceptance(r: f64) -> f64 {
    if r > 0.0 && !r.is_nan() {
        r.min(1.0)
    } else {
        0.0
    }
}

/// A mutation strategy bound to one pixel's target function.
pub trait Mutator {
    type Sample: Clone;

    fn target(&self, sample: &Self::Sample) -> f64;

    /// Must consume a fixed number of random variates.
    fn propose<R: Rng + ?Sized>(
        &self,
        current: &Self::Sample,
        cfg: &MutationConfig,
        rng: &mut R,
    ) -> MutationProposal<Self::Sample>;
}

/// Runs `cfg.iters` Metropolis-Hastings steps on the reservoir sample and
/// rescales its contribution weight by `p(x0) / p(xk)`.
///
/// `w_sum` and `m` are left untouched. Empty reservoirs and samples off the
/// target support are returned unchanged.
pub fn mutate_sample<M, R>(
    mutator: &M,
    r: &Reservoir<M::Sample>,
    cfg: &MutationConfig,
    rng: &mut R,
) -> (Reservoir<M::Sample>, MutationStats)
where
    M: Mutator,
    R: Rng + ?Sized,
{
    let mut stats = MutationStats::default();
    let Some(x0) = &r.sample else {
        return (r.clone(), stats);
    };
    if cfg.iters == 0 {
        return (r.clone(), stats);
    }
    let p0 = mutator.target(x0);
    if !(p0 > 0.0) {
        return (r.clone(), stats);
    }

    let mut current = x0.clone();
    let mut p_current = p0;
    for _ in 0..cfg.iters {
        let proposal = mutator.propose(&current, cfg, rng);
        let a = proposal.acceptance();
        let u: f64 = rng.random();
        stats.proposed += 1;
        if u < a {
            let p = mutator.target(&proposal.candidate);
            if p > 0.0 {
                current = proposal.candidate;
                p_current = p;
                stats.accepted += 1;
            }
        }
    }

    let mut out = r.clone();
    out.w = p0 / p_current * r.w;
    out.sample = Some(current);
    (out, stats)
}

/// Runs a plain Metropolis-Hastings chain of `steps` proposals from `start`,
/// calling `visit` with the state after every step. The start must lie on
/// the target support.
pub fn chain<M, R>(
    mutator: &M,
    start: M::Sample,
    steps: usize,
    cfg: &MutationConfig,
    rng: &mut R,
    mut visit: impl FnMut(&M::Sample),
) -> Result<MutationStats>
where
    M: Mutator,
    R: Rng + ?Sized,
{
    let p = mutator.target(&start);
    if !(p > 0.0) {
        return Err(Error::OffSupport(p));
    }
    let mut current = start;
    let mut stats = MutationStats::default();
    for _ in 0..steps {
        let proposal = mutator.propose(&current, cfg, rng);
        let a = proposal.acceptance();
        let u: f64 = rng.random();
        stats.proposed += 1;
        if u < a && mutator.target(&proposal.candidate) > 0.0 {
            current = proposal.candidate;
            stats.accepted += 1;
        }
        visit(&current);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance(1.0, 2.0, 1.0).unwrap(), 1.0);
        assert_eq!(acceptance(4.0, 1.0, 1.0).unwrap(), 0.25);
        assert_eq!(acceptance(2.0, 1.0, 4.0).unwrap(), 1.0);
        assert_eq!(acceptance(2.0, 0.0, 4.0).unwrap(), 0.0);
        assert_eq!(acceptance(2.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(matches!(acceptance(0.0, 1.0, 1.0), Err(Error::OffSupport(_))));
    }

    #[test]
    fn config_validation() {
        assert!(MutationConfig::default().validate().is_ok());
        let bad = MutationConfig {
            s1: 0.1,
            s2: 0.01,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MutationConfig {
            s2: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    /// Integer states; `target` is tabulated and proposals move to a fixed state.
    struct Table {
        target: Vec<f64>,
        next: u32,
        ratio: f64,
    }

    impl Mutator for Table {
        type Sample = u32;
        fn target(&self, s: &u32) -> f64 {
            self.target[*s as usize]
        }
        fn propose<R: Rng + ?Sized>(&self, current: &u32, _: &MutationConfig, _: &mut R) -> MutationProposal<u32> {
            let p_cur = self.target(current);
            let p_next = self.target(&self.next);
            MutationProposal {
                candidate: self.next,
                kernel_ratio: self.ratio,
                contribution_ratio: p_next / p_cur,
            }
        }
    }

    fn reservoir(sample: u32, p_hat: f64, w_sum: f64) -> Reservoir<u32> {
        let mut r = Reservoir {
            sample: Some(sample),
            w_sum,
            m: 5.0,
            w: 0.0,
        };
        r.finalize(p_hat);
        r
    }

    #[test]
    fn zero_iterations_is_identity() {
        let t = Table {
            target: vec![2.0, 4.0],
            next: 1,
            ratio: 1.0,
        };
        let r = reservoir(0, 2.0, 1.0);
        let cfg = MutationConfig {
            iters: 0,
            ..Default::default()
        };
        let (out, stats) = mutate_sample(&t, &r, &cfg, &mut rng::stream(0, 0, 0, 0));
        assert_eq!(out, r);
        assert_eq!(stats, MutationStats::default());
    }

    #[test]
    fn rejected_proposals_leave_reservoir_alone() {
        let t = Table {
            target: vec![2.0, 0.0],
            next: 1,
            ratio: 1.0,
        };
        let r = reservoir(0, 2.0, 1.0);
        let cfg = MutationConfig {
            iters: 10,
            ..Default::default()
        };
        let (out, stats) = mutate_sample(&t, &r, &cfg, &mut rng::stream(0, 0, 0, 0));
        assert_eq!(out, r);
        assert_eq!(stats.proposed, 10);
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn weight_update_follows_target_ratio() {
        // p(x0) = 2, p(xk) = 4, W(x0) = 0.5 -> W(xk) = 0.25
        let t = Table {
            target: vec![2.0, 4.0],
            next: 1,
            ratio: 1.0,
        };
        let r = reservoir(0, 2.0, 1.0);
        assert_eq!(r.w, 0.5);
        let (out, stats) = mutate_sample(&t, &r, &MutationConfig::default(), &mut rng::stream(0, 0, 0, 0));
        assert_eq!(stats.accepted, 1);
        assert_eq!(out.sample, Some(1));
        assert_eq!(out.w, 0.25);
        assert_eq!(out.w_sum, r.w_sum);
        assert_eq!(out.m, r.m);
        assert!((out.w * 4.0 - r.w * 2.0).abs() < 1e-15);
    }
}
