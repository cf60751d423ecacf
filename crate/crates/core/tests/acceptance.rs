//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! Runs for several minutes in release mode.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use rand::Rng;
use restir_core::mcmc::{DiDirectionMutator, KernelRatioMode, MutationConfig, ReconnectionMutator};
use restir_core::metrics::{covariance_report, mean_duplicates, mse, ImageEnsemble};
use restir_core::render::RenderConfig;
use restir_core::resampling::Reservoir;
use restir_core::scene::{reconnection_shift, ConnectConfig, LightPoint, Material, PathSample, SurfacePoint};
use restir_core::testbed::{
    chain_distribution_test, conservation_check, run_two_pixel_covariance, run_unbiasedness_trial, AnalyticTarget,
    ChainConfig, SourcePdf, TwoPixelConfig, UnbiasednessConfig,
};
use restir_core::{rng, FrameState, Image, RenderMode, Renderer, Scene, ShadingContext, Vec3};
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Step sizes for the long stationarity chains. Larger than the rendering
/// defaults so that a million steps cover the state space many times over.
fn chain_steps() -> MutationConfig {
    MutationConfig {
        iters: 1,
        s1: 1.0 / 256.0,
        s2: 1.0 / 8.0,
        ..MutationConfig::default()
    }
}

fn wrs_exactness() -> Outcome {
    let streams: Vec<Vec<f64>> = vec![
        vec![1.0],
        vec![0.0, 2.0],
        vec![1.0, 1.0],
        vec![0.3, 2.7],
        vec![1.0, 2.0, 3.0],
        vec![5.0, 0.0, 5.0],
        vec![1e-3, 1.0, 0.2],
        vec![0.25, 0.25, 0.25, 0.25],
        vec![4.0, 3.0, 2.0, 1.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![10.0, 0.1, 0.1, 10.0],
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
        vec![5.0, 4.0, 3.0, 2.0, 1.0],
        vec![0.5, 0.0, 0.5, 0.0, 0.5],
        vec![100.0, 1.0, 1.0, 1.0, 1.0],
        vec![0.01, 0.02, 0.03, 0.04, 0.9],
    ];
    let runs = 100_000;
    let mut worst_p = 1.0f64;
    let mut zero_hit = false;
    for (si, weights) in streams.iter().enumerate() {
        let mut counts = vec![0u64; weights.len()];
        let mut rng = rng::stream(1, 0, si as u64, 0);
        for _ in 0..runs {
            let mut r = Reservoir::new();
            for (i, &w) in weights.iter().enumerate() {
                r.update(i, w, &mut rng).unwrap();
            }
            counts[r.sample.unwrap()] += 1;
        }
        let total: f64 = weights.iter().sum();
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (c, &w) in counts.iter().zip(weights) {
            if w == 0.0 {
                zero_hit |= *c > 0;
                continue;
            }
            let e = runs as f64 * w / total;
            chi2 += (*c as f64 - e).powi(2) / e;
            cells += 1;
        }
        if cells > 1 {
            let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
            worst_p = worst_p.min(p);
        }
    }
    outcome(
        worst_p > 0.001 && !zero_hit,
        format!(
            "{} streams, min chi-square p = {worst_p:.4}, zero-weight selected: {zero_hit}",
            streams.len()
        ),
    )
}

fn ris_unbiasedness() -> Outcome {
    let mut zs = vec![];
    for (i, m) in [1usize, 4, 32].into_iter().enumerate() {
        let mut cfg = UnbiasednessConfig::new(AnalyticTarget::bimodal(), m, 0, 1_000_000, 100 + i as u64);
        cfg.sources = vec![SourcePdf::Ramp { low: 0.1 }];
        zs.push(run_unbiasedness_trial(&cfg).unwrap().z);
    }
    outcome(
        zs.iter().all(|z| z.abs() < 3.0),
        format!("z for M = 1, 4, 32: {zs:.2?}"),
    )
}

fn startup_bias() -> Outcome {
    let mut zs = vec![];
    for (i, k) in [1u32, 4, 16].into_iter().enumerate() {
        // one candidate from a density skewed toward 0: the chain starts far from the target
        let mut cfg = UnbiasednessConfig::new(AnalyticTarget::bimodal(), 1, k, 1_000_000, 200 + i as u64);
        cfg.sources = vec![SourcePdf::Ramp { low: 0.05 }];
        zs.push(run_unbiasedness_trial(&cfg).unwrap().z);
    }
    outcome(
        zs.iter().all(|z| z.abs() < 3.0),
        format!("z for k = 1, 4, 16: {zs:.2?}"),
    )
}

fn conservation() -> Outcome {
    let cfg = UnbiasednessConfig::new(AnalyticTarget::bimodal(), 4, 1, 2, 300);
    let drift = conservation_check(&cfg, 100_000, 16).unwrap();
    outcome(
        drift <= 1e-12,
        format!("max relative drift over 100000 chains x 16 steps: {drift:.2e}"),
    )
}

fn stationarity() -> Outcome {
    let tb = chain_distribution_test(&ChainConfig::new(AnalyticTarget::bimodal().p_hat, 1_000_000, 32, 400)).unwrap();
    let tb_bad = chain_distribution_test(&ChainConfig {
        always_accept: true,
        ..ChainConfig::new(AnalyticTarget::bimodal().p_hat, 1_000_000, 32, 400)
    })
    .unwrap();

    let scene = di_scene();
    let ctx = di_context();
    let expected = di_oracle(&scene, &ctx, 32);
    let q = scene.quads[scene.emitters[0]];
    let di = DiDirectionMutator::new(&scene, &ctx);
    let (di_tv, _) = chain_tv(
        &di,
        di_start(&scene),
        &chain_steps(),
        10_000,
        1_000_000,
        401,
        &expected,
        |s| q.coords(s.light.position).0,
    );

    let slice = slice_scene();
    let sctx = slice_context();
    let expected = slice_oracle(&slice, &sctx, 32);
    let recon = ReconnectionMutator::new(&slice, &sctx, slice_connect(), KernelRatioMode::Exact);
    let start = slice_sample(&slice, 0.5, 0.5);
    let (rc_tv, _) = chain_tv(&recon, start, &chain_steps(), 10_000, 1_000_000, 402, &expected, |s| {
        s.vertex.position.x
    });
    let (rc_bad, _) = chain_tv(
        &AlwaysAccept(recon),
        start,
        &chain_steps(),
        10_000,
        1_000_000,
        403,
        &expected,
        |s| s.vertex.position.x,
    );
    outcome(
        tb.total_variation < 0.02 && di_tv < 0.02 && rc_tv < 0.02 && tb_bad.total_variation > 0.2 && rc_bad > 0.2,
        format!(
            "TV testbed {:.4}, direct {di_tv:.4}, reconnection {rc_tv:.4}; always-accept testbed {:.4}, reconnection {rc_bad:.4}",
            tb.total_variation, tb_bad.total_variation
        ),
    )
}

fn kernel_ratio_necessity() -> Outcome {
    let slice = slice_scene();
    let ctx = slice_context();
    let expected = slice_oracle(&slice, &ctx, 32);
    let start = slice_sample(&slice, 0.5, 0.5);
    let tv = |mode| {
        let m = ReconnectionMutator::new(&slice, &ctx, slice_connect(), mode);
        chain_tv(&m, start, &chain_steps(), 10_000, 1_000_000, 500, &expected, |s| {
            s.vertex.position.x
        })
        .0
    };
    let exact = tv(KernelRatioMode::Exact);
    let unit = tv(KernelRatioMode::ForceUnit);
    outcome(
        exact < 0.02 && unit >= 0.02,
        format!("TV with kernel ratio {exact:.4}, forced to 1 {unit:.4}"),
    )
}

/// Unit vectors spanning the plane orthogonal to `w`.
fn tangents(w: Vec3) -> (Vec3, Vec3) {
    let a = if w.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let t = w.cross(a).normalize();
    (t, w.cross(t))
}

/// Solid-angle Jacobian of `w_from -> w_to` by central differences: the
/// direction from `from` is pushed onto the surface plane at `y2` and
/// re-aimed from `to`.
fn jacobian_fd(from: Vec3, to: Vec3, y2: Vec3, n2: Vec3) -> f64 {
    let w = (y2 - from).normalize();
    let (t, b) = tangents(w);
    let map = |e1: f64, e2: f64| {
        let d = (w + t * e1 + b * e2).normalize();
        let s = (y2 - from).dot(n2) / d.dot(n2);
        ((from + d * s) - to).normalize()
    };
    let src = |e1: f64, e2: f64| (w + t * e1 + b * e2).normalize();
    let h = 1e-5;
    let area = |f: &dyn Fn(f64, f64) -> Vec3| {
        let du = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let dv = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        du.cross(dv).length()
    };
    area(&map) / area(&src)
}

fn shift_jacobians() -> Outcome {
    let mut desc = restir_core::scene::SceneDescription::builtin("glossy_box").unwrap();
    desc.spheres.clear();
    let scene = desc.build().unwrap();
    let connect = ConnectConfig::default();
    let mut rng = rng::stream(600, 0, 0, 0);
    let material = Material::Lambertian {
        albedo: Vec3::splat(0.5),
    };
    let light = LightPoint {
        position: Vec3::new(0.0, 1.999, 0.0),
        normal: Vec3::new(0.0, -1.0, 0.0),
        emitter: 0,
    };
    let (mut checked, mut worst_fd, mut worst_trip) = (0, 0.0f64, 0.0f64);
    let mut attempts = 0;
    while checked < 1000 && attempts < 100_000 {
        attempts += 1;
        // reconnection vertex on a random non-emitting wall
        let qi = rng.random_range(0..scene.quads.len());
        let quad = &scene.quads[qi];
        if quad.emission.is_some() {
            continue;
        }
        let y2 = quad.point(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let n2 = quad.normal();
        let inside = |rng: &mut rng::StreamRng| {
            Vec3::new(
                rng.random_range(-0.9..0.9),
                rng.random_range(0.1..1.9),
                rng.random_range(-0.9..0.9),
            )
        };
        let (a, b) = (inside(&mut rng), inside(&mut rng));
        let ctx = |p: Vec3| ShadingContext::new(p, (y2 - p).normalize(), (y2 - p).normalize(), material);
        let (ca, cb) = (ctx(a), ctx(b));
        let sample = PathSample {
            vertex: SurfacePoint {
                position: y2,
                normal: n2,
                material: quad.material,
            },
            light,
            id: 0,
        };
        let fwd = reconnection_shift(&scene, &connect, &sample, &ca, &cb);
        if !fwd.valid {
            continue;
        }
        let back = reconnection_shift(&scene, &connect, &fwd.sample, &cb, &ca);
        let fd = jacobian_fd(a, b, y2, n2);
        worst_fd = worst_fd.max((fwd.jacobian - fd).abs() / fd);
        worst_trip = worst_trip.max((fwd.jacobian * back.jacobian - 1.0).abs());
        checked += 1;
    }
    outcome(
        checked == 1000 && worst_fd <= 1e-4 && worst_trip <= 1e-6,
        format!(
            "{checked} configurations, max relative FD error {worst_fd:.2e}, max round-trip error {worst_trip:.2e}"
        ),
    )
}

fn render_config(mode: RenderMode, iters: u32, seed: u64) -> RenderConfig {
    let mut cfg = RenderConfig {
        mode,
        seed,
        ..RenderConfig::default()
    };
    cfg.mutation.iters = iters;
    cfg.mutation.strategy = RenderConfig::strategy_for(mode);
    cfg
}

/// Renders `frames` consecutive frames and hands every frame to `visit`.
fn sequence(renderer: &Renderer, frames: u64, mut visit: impl FnMut(u64, &restir_core::FrameOutput)) {
    let mut state = FrameState::new();
    for f in 0..frames {
        state.frame = f;
        let out = renderer.render_frame(&state).unwrap();
        visit(f, &out);
        state = out.state;
    }
}

/// Mean of 500 independent three-frame runs (temporal, mutation and spatial
/// stages all active in the last frame) against a 32768-sample-per-pixel
/// reference. Pixels whose reference is numerically negligible get an
/// absolute tolerance; at most 1% of pixels may exceed 3 standard errors.
fn render_unbiasedness(mode: RenderMode, reference: &Image, reference_se: &Image) -> (bool, String) {
    let scene = Scene::builtin("glossy_box").unwrap();
    let n = reference.len();
    let floor = 1e-3 * reference.data.iter().map(|v| v.luminance()).sum::<f64>() / n as f64;
    let runs = 500;
    let mut pass = true;
    let mut report = vec![];
    for iters in [0u32, 1, 5] {
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for run in 0..runs {
            let r = Renderer::new(scene.clone(), render_config(mode, iters, 10_000 + run)).unwrap();
            sequence(&r, 3, |f, out| {
                if f == 2 {
                    for (p, v) in out.image.data.iter().enumerate() {
                        let l = v.luminance();
                        sum[p] += l;
                        sq[p] += l * l;
                    }
                }
            });
        }
        let k = runs as f64;
        let (mut over, mut diff, mut var_total) = (0usize, 0.0, 0.0);
        for p in 0..n {
            let mean = sum[p] / k;
            let var = ((sq[p] - mean * mean * k) / (k - 1.0)).max(0.0);
            let se2 = var / k + reference_se.data[p].luminance().powi(2);
            let d = mean - reference.data[p].luminance();
            if d.abs() > 3.0 * se2.sqrt() + floor {
                over += 1;
            }
            diff += d;
            var_total += se2;
        }
        let image_z = diff / var_total.sqrt();
        let ok = (over as f64) <= 0.01 * n as f64 && image_z.abs() < 3.0;
        pass &= ok;
        report.push(format!(
            "{iters} mutations: {over}/{n} pixels beyond 3 SE, image z {image_z:.2}"
        ));
    }
    (pass, report.join("; "))
}

fn render_unbiasedness_all() -> Outcome {
    let scene = Scene::builtin("glossy_box").unwrap();
    let mut pass = true;
    let mut details = vec![];
    for mode in [RenderMode::Di, RenderMode::Path] {
        let base = Renderer::new(scene.clone(), render_config(mode, 0, 0)).unwrap();
        let (reference, se) = base.reference(64, 8, 4242);
        let (ok, text) = render_unbiasedness(mode, &reference, &se);
        pass &= ok;
        details.push(format!("{mode:?}: {text}"));
    }
    outcome(pass, details.join(" | "))
}

/// Settings for the covariance and MSE experiments: few initial candidates so
/// that reuse dominates, and wide perturbations.
fn covariance_config(iters: u32, seed: u64) -> RenderConfig {
    let mut cfg = render_config(RenderMode::Di, iters, seed);
    cfg.candidates = 4;
    cfg.mutation.s1 = 1.0 / 256.0;
    cfg.mutation.s2 = 1.0 / 4.0;
    cfg
}

const WARMUP: u64 = 30;
const ENSEMBLE: u64 = 100;
const ENSEMBLE_SEEDS: u64 = 16;

/// Radius-8 covariance and mean per-frame MSE for 0, 1 and 5 mutations,
/// each averaged over independent ensembles of 100 post-warm-up frames.
fn covariance_and_mse() -> [(f64, f64); 3] {
    let scene = Scene::builtin("glossy_box").unwrap();
    let (reference, _) = Renderer::new(scene.clone(), covariance_config(0, 0))
        .unwrap()
        .reference(64, 8, 777);
    let mut out = [(0.0, 0.0); 3];
    for (slot, iters) in [0u32, 1, 5].into_iter().enumerate() {
        let (mut cov, mut err) = (0.0, 0.0);
        for s in 0..ENSEMBLE_SEEDS {
            let r = Renderer::new(scene.clone(), covariance_config(iters, 900 + s)).unwrap();
            let mut images = Vec::with_capacity(ENSEMBLE as usize);
            sequence(&r, WARMUP + ENSEMBLE, |f, o| {
                if f >= WARMUP {
                    err += mse(&o.image, &reference).unwrap();
                    images.push(o.image.clone());
                }
            });
            let report = covariance_report(&ImageEnsemble::new(images).unwrap(), &[8], false);
            cov += report.image_average[0];
        }
        out[slot] = (cov / ENSEMBLE_SEEDS as f64, err / (ENSEMBLE_SEEDS * ENSEMBLE) as f64);
    }
    out
}

fn impoverishment() -> Outcome {
    let scene = Scene::builtin("glossy_box_slot").unwrap();
    let mut dups = vec![];
    for iters in [0u32, 1, 5] {
        let mut total = 0.0;
        let mut count = 0.0;
        for s in 0..2 {
            let r = Renderer::new(scene.clone(), render_config(RenderMode::Di, iters, 50 + s)).unwrap();
            sequence(&r, WARMUP + ENSEMBLE, |f, o| {
                if f >= WARMUP {
                    total += mean_duplicates(&o.sample_ids, 64, 64, 20).unwrap();
                    count += 1.0;
                }
            });
        }
        dups.push(total / count);
    }
    outcome(
        dups[1] < dups[0] && dups[2] < dups[1],
        format!("mean duplicates in 20x20 windows for 0, 1, 5 mutations: {dups:.3?}"),
    )
}

fn two_pixel() -> Outcome {
    let d = run_two_pixel_covariance(&TwoPixelConfig::dissimilar(1200)).unwrap();
    let significant = d.cov_without - d.cov_with > 3.0 * (d.se_without.powi(2) + d.se_with.powi(2)).sqrt();
    let same = run_two_pixel_covariance(&TwoPixelConfig {
        trials: 100_000,
        ..TwoPixelConfig::identical(1201)
    })
    .unwrap();
    // with identical targets and exact inputs every estimate equals the
    // integral up to rounding, so the noise floor is rounding error
    let noise = |cov: f64, se: f64| cov.abs() <= 3.0 * se + 1e-12;
    let zero = noise(same.cov_without, same.se_without) && noise(same.cov_with, same.se_with);
    outcome(
        d.ratio <= 0.7 && significant && zero,
        format!(
            "dissimilar: cov {:.3e} -> {:.3e} (ratio {:.3}); identical: {:.1e}, {:.1e}",
            d.cov_without, d.cov_with, d.ratio, same.cov_without, same.cov_with
        ),
    )
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![];
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        o.detail = format!("{} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
        // written to the raw handle so the line shows up without --nocapture
        let line = format!("{} {id:>2} {name}: {}\n", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        let _ = std::io::stderr().write_all(line.as_bytes());
        results.push((id, name, o));
    };
    run(1, "reservoir selection frequencies", &wrs_exactness);
    run(2, "RIS unbiasedness", &ris_unbiasedness);
    run(3, "startup-bias elimination", &startup_bias);
    run(4, "contribution-weight conservation", &conservation);
    run(5, "chain stationarity", &stationarity);
    run(6, "kernel ratio necessity", &kernel_ratio_necessity);
    run(7, "shift Jacobians", &shift_jacobians);
    run(8, "render unbiasedness", &render_unbiasedness_all);

    let t = Instant::now();
    let stats = covariance_and_mse();
    let secs = t.elapsed().as_secs_f64();
    run(9, "covariance reduction", &|| {
        let [c0, c1, c5] = [stats[0].0, stats[1].0, stats[2].0];
        outcome(
            c1 <= 0.9 * c0 && c5 <= 0.9 * c1,
            format!(
                "radius-8 covariance for 0, 1, 5 mutations: {c0:.3e}, {c1:.3e}, {c5:.3e} [{secs:.1}s shared with 10]"
            ),
        )
    });
    run(10, "MSE neutrality", &|| {
        let rel = stats[2].1 / stats[0].1 - 1.0;
        outcome(
            rel.abs() <= 0.2,
            format!(
                "MSE for 0, 1, 5 mutations: {:.3e}, {:.3e}, {:.3e} ({:+.1}%)",
                stats[0].1,
                stats[1].1,
                stats[2].1,
                100.0 * rel
            ),
        )
    });
    run(11, "impoverishment reduction", &impoverishment);
    run(12, "two-pixel covariance", &two_pixel);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
