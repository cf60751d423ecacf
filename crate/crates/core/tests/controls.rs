//! Negative controls: deliberately wrong variants must show the failure the
//! correct code avoids.

use rayon::prelude::*;
use restir_core::mcmc::{mutate_sample, MutationConfig};
use restir_core::rng;
use restir_core::testbed::{quad_oracle, ris_select, AnalyticTarget, GaussianWalk, SourcePdf, UnbiasednessConfig};

/// Mean and standard error of `f(x) * W` over `trials` mutated reservoirs.
/// With `update_weight` false the weight of the initial sample is kept.
fn estimate(update_weight: bool, trials: usize) -> (f64, f64) {
    let target = AnalyticTarget::bimodal();
    let mut cfg = UnbiasednessConfig::new(target.clone(), 1, 16, trials, 77);
    cfg.sources = vec![SourcePdf::Ramp { low: 0.05 }];
    let walk = GaussianWalk {
        target: &target.p_hat,
        sigma: 0.05,
        always_accept: false,
    };
    let mcfg = MutationConfig {
        iters: 16,
        ..MutationConfig::default()
    };
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(77, 0, t as u64, rng::stream_id::TESTBED);
            let r = ris_select(&cfg, &mut rng).unwrap();
            let (m, _) = mutate_sample(&walk, &r, &mcfg, &mut rng);
            let w = if update_weight { m.w } else { r.w };
            m.sample.map_or(0.0, |x| target.f.eval(x) * w)
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn skipping_the_weight_update_biases_the_estimate() {
    let target = AnalyticTarget::bimodal();
    let oracle = quad_oracle(|x| target.f.eval(x), 64).unwrap();
    let (good, se_good) = estimate(true, 200_000);
    let (bad, se_bad) = estimate(false, 200_000);
    assert!(
        ((good - oracle) / se_good).abs() < 3.0,
        "updated: {good} vs {oracle} (se {se_good})"
    );
    assert!(
        ((bad - oracle) / se_bad).abs() > 6.0,
        "not updated: {bad} vs {oracle} (se {se_bad})"
    );
}
