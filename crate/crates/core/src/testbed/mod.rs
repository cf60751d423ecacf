//! Statistical experiments on analytic targets over `[0, 1]`.
//!
//! Every expected value used as a gate comes from [`quad_oracle`].

mod two_pixel;

pub use two_pixel::{run_two_pixel_covariance, InputSampling, TwoPixelConfig, TwoPixelReport};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{mutate_sample, MutationConfig, MutationProposal, Mutator};
use crate::resampling::Reservoir;
use crate::rng::{self, stream_id, StreamRng};

/// Relative tolerance between successive refinements of [`quad_oracle`].
pub const QUAD_TOLERANCE: f64 = 1e-10;
/// Largest interval count [`quad_oracle`] will try.
pub const QUAD_MAX_INTERVALS: usize = 1 << 20;

/// Composite Simpson quadrature of `g` over `[0, 1]`, starting at `n` intervals
/// and doubling until successive values agree to [`QUAD_TOLERANCE`].
pub fn quad_oracle(g: impl Fn(f64) -> f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::config("n", "at least 2 intervals are required"));
    }
    let mut n = n + n % 2;
    let mut prev = simpson(&g, n);
    while n < QUAD_MAX_INTERVALS {
        n *= 2;
        let cur = simpson(&g, n);
        if (cur - prev).abs() <= QUAD_TOLERANCE * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureDiverged(n))
}

/// Integral of `g` over `[a, b]` by [`quad_oracle`].
pub fn quad_oracle_on(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<f64> {
    Ok(quad_oracle(|t| g(a + (b - a) * t), n)? * (b - a))
}

fn simpson(g: &impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// One Gaussian bump `weight * exp(-(x - mean)^2 / (2 sd^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Nonnegative function on `[0, 1]`: a constant floor plus Gaussian bumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub floor: f64,
    pub bumps: Vec<Bump>,
}

impl Mixture {
    pub fn new(floor: f64, bumps: &[(f64, f64, f64)]) -> Self {
        Mixture {
            floor,
            bumps: bumps
                .iter()
                .map(|&(weight, mean, sd)| Bump { weight, mean, sd })
                .collect(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Mixture::new(c, &[])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.floor
            + self
                .bumps
                .iter()
                .map(|b| b.weight * (-(x - b.mean).powi(2) / (2.0 * b.sd * b.sd)).exp())
                .sum::<f64>()
    }

    /// Upper bound of [`Mixture::eval`] on `[0, 1]`.
    pub fn bound(&self) -> f64 {
        self.floor + self.bumps.iter().map(|b| b.weight).sum::<f64>()
    }

    pub fn integral(&self) -> Result<f64> {
        quad_oracle(|x| self.eval(x), 64)
    }

    /// Exact sample of the normalized density by rejection. Consumes a
    /// variable number of uniforms.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let bound = self.bound();
        loop {
            let x: f64 = rng.random();
            if rng.random::<f64>() * bound < self.eval(x) {
                return x;
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(Error::config(name, "floor must be finite and nonnegative"));
        }
        if self
            .bumps
            .iter()
            .any(|b| !(b.weight >= 0.0 && b.sd > 0.0 && b.weight.is_finite() && b.mean.is_finite()))
        {
            return Err(Error::config(
                name,
                "bumps need finite nonnegative weights and positive widths",
            ));
        }
        Ok(())
    }
}

/// Target function `p_hat` and integrand `f`, both on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTarget {
    pub p_hat: Mixture,
    pub f: Mixture,
}

impl AnalyticTarget {
    /// Bimodal target with a floor, and an integrand that differs from it.
    pub fn bimodal() -> Self {
        AnalyticTarget {
            p_hat: Mixture::new(0.05, &[(1.0, 0.25, 0.06), (0.6, 0.7, 0.1)]),
            f: Mixture::new(0.2, &[(1.0, 0.3, 0.1), (0.5, 0.75, 0.05)]),
        }
    }

    /// `f == p_hat`.
    pub fn matched(p_hat: Mixture) -> Self {
        AnalyticTarget {
            f: p_hat.clone(),
            p_hat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.p_hat.validate("p_hat")?;
        self.f.validate("f")?;
        if !(self.p_hat.floor > 0.0) {
            return Err(Error::config("p_hat", "target needs a positive floor for full support"));
        }
        Ok(())
    }
}

/// Source density for initial candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SourcePdf {
    Uniform,
    /// `q(x) = low + 2 (1 - low) (1 - x)`: piles samples up near 0.
    Ramp {
        low: f64,
    },
}

impl SourcePdf {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            SourcePdf::Uniform => 1.0,
            SourcePdf::Ramp { low } => low + 2.0 * (1.0 - low) * (1.0 - x),
        }
    }

    /// Consumes exactly two uniforms.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick: f64 = rng.random();
        let u: f64 = rng.random();
        match *self {
            SourcePdf::Uniform => u,
            // mixture of uniform (weight low) and the triangle 2 (1 - x)
            SourcePdf::Ramp { low } => {
                if pick < low {
                    u
                } else {
                    1.0 - (1.0 - u).sqrt()
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MisMode {
    /// `1 / M` for every candidate.
    #[default]
    Constant,
    /// Balance heuristic over the candidate techniques.
    Balance,
}

/// Random walk on the unit torus with a Gaussian step.
pub struct GaussianWalk<'a> {
    pub target: &'a Mixture,
    pub sigma: f64,
    /// Accept every proposal (breaks detailed balance; negative control).
    pub always_accept: bool,
}

impl Mutator for GaussianWalk<'_> {
    type Sample = f64;

    fn target(&self, x: &f64) -> f64 {
        self.target.eval(*x)
    }

    fn propose<R: Rng + ?Sized>(&self, x: &f64, _: &MutationConfig, rng: &mut R) -> MutationProposal<f64> {
        let (z, _) = normal_pair(rng);
        let y = x + self.sigma * z;
        let candidate = y - y.floor();
        let candidate = if candidate >= 1.0 { 0.0 } else { candidate };
        let contribution_ratio = if self.always_accept {
            1.0
        } else {
            self.target.eval(candidate) / self.target.eval(*x)
        };
        MutationProposal {
            candidate,
            kernel_ratio: 1.0,
            contribution_ratio,
        }
    }
}

pub(crate) fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Default random-walk step on the testbed.
pub const DEFAULT_SIGMA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessConfig {
    pub target: AnalyticTarget,
    /// Candidates per RIS selection.
    pub m: usize,
    pub mutations: u32,
    pub trials: usize,
    pub seed: u64,
    /// Candidate `i` is drawn from `sources[i % sources.len()]`.
    pub sources: Vec<SourcePdf>,
    pub mis: MisMode,
    pub sigma: f64,
}

impl UnbiasednessConfig {
    pub fn new(target: AnalyticTarget, m: usize, mutations: u32, trials: usize, seed: u64) -> Self {
        UnbiasednessConfig {
            target,
            m,
            mutations,
            trials,
            seed,
            sources: vec![SourcePdf::Uniform],
            mis: MisMode::Constant,
            sigma: DEFAULT_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if self.m == 0 {
            return Err(Error::config("m", "at least one candidate is required"));
        }
        if self.trials < 2 {
            return Err(Error::config("trials", "at least two trials are required"));
        }
        if self.sources.is_empty() {
            return Err(Error::config("sources", "at least one source density is required"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("sigma", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    pub mean: f64,
    pub standard_error: f64,
    pub oracle: f64,
    pub z: f64,
    /// Per-trial estimator variance.
    pub variance: f64,
    /// Largest relative change of `W * p_hat` between the RIS sample and the
    /// mutated sample.
    pub max_conservation_error: f64,
    pub acceptance_rate: f64,
}

/// Resamples one sample from `cfg.m` candidates.
pub fn ris_select(cfg: &UnbiasednessConfig, rng: &mut StreamRng) -> Result<Reservoir<f64>> {
    let p_hat = &cfg.target.p_hat;
    let mut r = Reservoir::new();
    let m = cfg.m;
    let k = cfg.sources.len();
    for i in 0..m {
        let src = cfg.sources[i % k];
        let x = src.sample(rng);
        let w = match cfg.mis {
            MisMode::Constant => p_hat.eval(x) / (m as f64 * src.pdf(x)),
            MisMode::Balance => {
                let total: f64 = (0..m).map(|j| cfg.sources[j % k].pdf(x)).sum();
                p_hat.eval(x) / total
            }
        };
        r.update(x, w, rng)?;
    }
    let p = r.sample.map_or(0.0, |x| p_hat.eval(x));
    r.finalize(p);
    Ok(r)
}

/// RIS followed by `cfg.mutations` Metropolis-Hastings steps and the
/// contribution-weight update, repeated over independent trials. Reports the
/// mean of `f(x) W(x)` against the quadrature value of the integral of `f`.
pub fn run_unbiasedness_trial(cfg: &UnbiasednessConfig) -> Result<UnbiasednessReport> {
    cfg.validate()?;
    let oracle = cfg.target.f.integral()?;
    let walk = GaussianWalk {
        target: &cfg.target.p_hat,
        sigma: cfg.sigma,
        always_accept: false,
    };
    let mcfg = MutationConfig {
        iters: cfg.mutations,
        ..MutationConfig::default()
    };
    let per_trial: Vec<(f64, f64, u64, u64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(cfg.seed, 0, t as u64, stream_id::TESTBED);
            let r0 = ris_select(cfg, &mut rng)?;
            let (r, stats) = mutate_sample(&walk, &r0, &mcfg, &mut rng);
            let (Some(x0), Some(x)) = (r0.sample, r.sample) else {
                return Ok((0.0, 0.0, 0, 0));
            };
            let before = r0.w * cfg.target.p_hat.eval(x0);
            let after = r.w * cfg.target.p_hat.eval(x);
            let err = if before > 0.0 {
                (after - before).abs() / before
            } else {
                0.0
            };
            Ok((cfg.target.f.eval(x) * r.w, err, stats.proposed, stats.accepted))
        })
        .collect::<Result<_>>()?;

    let n = per_trial.len() as f64;
    let mean = per_trial.iter().map(|v| v.0).sum::<f64>() / n;
    let variance = per_trial.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let standard_error = (variance / n).sqrt();
    let proposed: u64 = per_trial.iter().map(|v| v.2).sum();
    let accepted: u64 = per_trial.iter().map(|v| v.3).sum();
    Ok(UnbiasednessReport {
        mean,
        standard_error,
        oracle,
        z: (mean - oracle) / standard_error,
        variance,
        max_conservation_error: per_trial.iter().map(|v| v.1).fold(0.0, f64::max),
        acceptance_rate: if proposed > 0 {
            accepted as f64 / proposed as f64
        } else {
            0.0
        },
    })
}

/// Runs `chains` chains of `steps` single mutations each and returns the
/// largest relative drift of `W * p_hat` observed after any step.
pub fn conservation_check(cfg: &UnbiasednessConfig, chains: usize, steps: u32) -> Result<f64> {
    cfg.validate()?;
    let walk = GaussianWalk {
        target: &cfg.target.p_hat,
        sigma: cfg.sigma,
        always_accept: false,
    };
    let one = MutationConfig {
        iters: 1,
        ..MutationConfig::default()
    };
    let worst: Vec<f64> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(cfg.seed, 1, c as u64, stream_id::TESTBED);
            let mut r = ris_select(cfg, &mut rng)?;
            let Some(x0) = r.sample else { return Ok(0.0) };
            let invariant = r.w * cfg.target.p_hat.eval(x0);
            let mut worst = 0.0f64;
            for _ in 0..steps {
                r = mutate_sample(&walk, &r, &one, &mut rng).0;
                let x = r.sample.unwrap();
                worst = worst.max((r.w * cfg.target.p_hat.eval(x) - invariant).abs() / invariant);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub target: Mixture,
    pub steps: usize,
    pub bins: usize,
    pub sigma: f64,
    pub warmup: usize,
    pub always_accept: bool,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(target: Mixture, steps: usize, bins: usize, seed: u64) -> Self {
        ChainConfig {
            target,
            steps,
            bins,
            sigma: DEFAULT_SIGMA,
            warmup: 1000,
            always_accept: false,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub total_variation: f64,
    pub acceptance_rate: f64,
    pub histogram: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Bin masses of the normalized density of `g` over `bins` equal bins of `[0, 1]`.
pub fn bin_masses(g: impl Fn(f64) -> f64 + Copy, bins: usize) -> Result<Vec<f64>> {
    let masses = (0..bins)
        .map(|b| quad_oracle_on(g, b as f64 / bins as f64, (b + 1) as f64 / bins as f64, 16))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = masses.iter().sum();
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Total-variation distance between two discrete distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// One long chain started from an exact sample of the target; compares the
/// histogram of visited states with the normalized target.
pub fn chain_distribution_test(cfg: &ChainConfig) -> Result<ChainReport> {
    if cfg.bins == 0 || cfg.steps == 0 {
        return Err(Error::config("bins/steps", "must be positive"));
    }
    cfg.target.validate("target")?;
    let expected = bin_masses(|x| cfg.target.eval(x), cfg.bins)?;
    let walk = GaussianWalk {
        target: &cfg.target,
        sigma: cfg.sigma,
        always_accept: cfg.always_accept,
    };
    let mut rng = rng::stream(cfg.seed, 2, 0, stream_id::TESTBED);
    let mut x = cfg.target.sample_exact(&mut rng);
    let dummy = MutationConfig::default();
    let mut counts = vec![0u64; cfg.bins];
    let mut accepted = 0u64;
    for step in 0..cfg.warmup + cfg.steps {
        let p = walk.propose(&x, &dummy, &mut rng);
        let moved = rng.random::<f64>() < p.acceptance();
        if moved {
            x = p.candidate;
        }
        if step >= cfg.warmup {
            accepted += moved as u64;
            counts[((x * cfg.bins as f64) as usize).min(cfg.bins - 1)] += 1;
        }
    }
    let histogram: Vec<f64> = counts.iter().map(|&c| c as f64 / cfg.steps as f64).collect();
    Ok(ChainReport {
        total_variation: total_variation(&histogram, &expected),
        acceptance_rate: accepted as f64 / cfg.steps as f64,
        histogram,
        expected,
    })
}
