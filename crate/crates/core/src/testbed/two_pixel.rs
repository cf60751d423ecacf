//! Two pixels resampling from a common pool of inputs.
//!
//! Each input `X_j` carries a contribution weight `W_j` for the input target.
//! Without mutations pixel `i` estimates `F^i = (1/M) sum_j p^i(X_j) W_j`. With
//! mutations, each pixel first runs its own Metropolis-Hastings chain on every
//! input (targeting the input target) and updates the weight accordingly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GaussianWalk, Mixture, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::mcmc::{mutate_sample, MutationConfig};
use crate::resampling::Reservoir;
use crate::rng::{self, stream_id, StreamRng};

/// How the shared inputs are distributed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InputSampling {
    /// Exact samples of the normalized input target, `W = integral / p(x)`.
    Exact,
    /// RIS from uniform candidates.
    Ris { candidates: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPixelConfig {
    pub target_1: Mixture,
    pub target_2: Mixture,
    pub input_target: Mixture,
    /// Inputs per trial.
    pub m: usize,
    pub mutations: u32,
    pub trials: usize,
    pub input_sampling: InputSampling,
    /// Both pixels see the same inputs; otherwise each draws its own.
    pub shared: bool,
    pub sigma: f64,
    pub seed: u64,
}

impl TwoPixelConfig {
    /// Neighbouring but dissimilar pixel targets, a broad input target.
    pub fn dissimilar(seed: u64) -> Self {
        TwoPixelConfig {
            target_1: Mixture::new(0.02, &[(1.0, 0.45, 0.08)]),
            target_2: Mixture::new(0.02, &[(1.0, 0.55, 0.08)]),
            input_target: Mixture::new(0.1, &[(1.0, 0.5, 0.3)]),
            m: 8,
            mutations: 64,
            trials: 100_000,
            input_sampling: InputSampling::Ris { candidates: 4 },
            shared: true,
            sigma: DEFAULT_SIGMA,
            seed,
        }
    }

    /// Every target equal to the input target, with exact inputs.
    pub fn identical(seed: u64) -> Self {
        let t = Mixture::new(0.1, &[(1.0, 0.5, 0.3)]);
        TwoPixelConfig {
            target_1: t.clone(),
            target_2: t.clone(),
            input_target: t,
            input_sampling: InputSampling::Exact,
            ..TwoPixelConfig::dissimilar(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.target_1.validate("target_1")?;
        self.target_2.validate("target_2")?;
        self.input_target.validate("input_target")?;
        if !(self.input_target.floor > 0.0) {
            return Err(Error::config("input_target", "needs a positive floor for full support"));
        }
        if self.m == 0 {
            return Err(Error::config("m", "at least one input is required"));
        }
        if self.trials < 2 {
            return Err(Error::config("trials", "at least two trials are required"));
        }
        if let InputSampling::Ris { candidates: 0 } = self.input_sampling {
            return Err(Error::config("input_sampling.candidates", "must be positive"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("sigma", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoPixelReport {
    pub cov_without: f64,
    pub cov_with: f64,
    pub se_without: f64,
    pub se_with: f64,
    /// `cov_with / cov_without`.
    pub ratio: f64,
}

fn draw_inputs(cfg: &TwoPixelConfig, integral: f64, rng: &mut StreamRng) -> Result<Vec<Reservoir<f64>>> {
    let p = &cfg.input_target;
    (0..cfg.m)
        .map(|_| match cfg.input_sampling {
            InputSampling::Exact => {
                let x = p.sample_exact(rng);
                Ok(Reservoir {
                    sample: Some(x),
                    w_sum: integral,
                    m: 1.0,
                    w: integral / p.eval(x),
                })
            }
            InputSampling::Ris { candidates } => {
                let mut r = Reservoir::new();
                for _ in 0..candidates {
                    let x: f64 = rand::Rng::random(rng);
                    r.update(x, p.eval(x) / candidates as f64, rng)?;
                }
                let ph = r.sample.map_or(0.0, |x| p.eval(x));
                r.finalize(ph);
                Ok(r)
            }
        })
        .collect()
}

fn estimate(target: &Mixture, inputs: &[Reservoir<f64>]) -> f64 {
    inputs
        .iter()
        .filter_map(|r| r.sample.map(|x| target.eval(x) * r.w))
        .sum::<f64>()
        / inputs.len() as f64
}

fn covariance(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let prods: Vec<f64> = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let var = prods.iter().map(|v| (v - cov).powi(2)).sum::<f64>() / (n - 1.0);
    (cov, (var / n).sqrt())
}

/// Estimates the covariance between the two pixel estimates with and
/// without per-pixel mutations of the inputs.
pub fn run_two_pixel_covariance(cfg: &TwoPixelConfig) -> Result<TwoPixelReport> {
    cfg.validate()?;
    let integral = cfg.input_target.integral()?;
    let walk = GaussianWalk {
        target: &cfg.input_target,
        sigma: cfg.sigma,
        always_accept: false,
    };
    let mcfg = MutationConfig {
        iters: cfg.mutations,
        ..MutationConfig::default()
    };
    let rows: Vec<[f64; 4]> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let t = t as u64;
            let mut rng = rng::stream(cfg.seed, 3, t, stream_id::TESTBED);
            let inputs_1 = draw_inputs(cfg, integral, &mut rng)?;
            let inputs_2 = if cfg.shared {
                inputs_1.clone()
            } else {
                draw_inputs(cfg, integral, &mut rng)?
            };
            let mut rng_1 = rng::stream(cfg.seed, 3, t, stream_id::TESTBED_PIXEL_A);
            let mut rng_2 = rng::stream(cfg.seed, 3, t, stream_id::TESTBED_PIXEL_B);
            let mutated_1: Vec<_> = inputs_1
                .iter()
                .map(|r| mutate_sample(&walk, r, &mcfg, &mut rng_1).0)
                .collect();
            let mutated_2: Vec<_> = inputs_2
                .iter()
                .map(|r| mutate_sample(&walk, r, &mcfg, &mut rng_2).0)
                .collect();
            Ok([
                estimate(&cfg.target_1, &inputs_1),
                estimate(&cfg.target_2, &inputs_2),
                estimate(&cfg.target_1, &mutated_1),
                estimate(&cfg.target_2, &mutated_2),
            ])
        })
        .collect::<Result<_>>()?;
    let without: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let with: Vec<(f64, f64)> = rows.iter().map(|r| (r[2], r[3])).collect();
    let (cov_without, se_without) = covariance(&without);
    let (cov_with, se_with) = covariance(&with);
    Ok(TwoPixelReport {
        cov_without,
        cov_with,
        se_without,
        se_with,
        ratio: cov_with / cov_without,
    })
}
