use std::fs;
use std::path::{Path, PathBuf};

use restir_core::metrics::{covariance_report, duplicate_heatmap, mean_duplicates, mse};
use restir_core::render::{heatmap_ppm, read_ids, write_ids};
use restir_core::testbed::{
    chain_distribution_test, run_two_pixel_covariance, run_unbiasedness_trial, AnalyticTarget, ChainConfig,
    TwoPixelConfig, UnbiasednessConfig,
};
use restir_core::{FrameState, Image, ImageEnsemble, Renderer};

use crate::config::{Mode, RunConfig};
use crate::Failure;

const Z_GATE: f64 = 3.0;
const TV_GATE: f64 = 0.02;
const TWO_PIXEL_RATIO_GATE: f64 = 0.7;
const TWO_PIXEL_MUTATIONS: u32 = 64;

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.output();
    fs::create_dir_all(out)?;
    fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(cfg).expect("config serializes"),
    )?;
    match cfg.mode() {
        Mode::RenderDi | Mode::RenderPath => render(cfg, out),
        Mode::Metrics => metrics(cfg, out),
        Mode::TestbedUnbiasedness => unbiasedness(cfg, out),
        Mode::TestbedTwoPixel => two_pixel(cfg, out),
        Mode::TestbedChain => chain(cfg, out),
    }
}

fn render(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let renderer = Renderer::new(cfg.scene()?, cfg.render_config()?)?;
    let pixels = renderer.contexts().iter().filter(|c| c.is_some()).count();
    let mut csv = csv::Writer::from_path(out.join("acceptance.csv"))?;
    csv.write_record(["frame", "pixels", "proposed", "accepted"])?;
    let mut state = FrameState::new();
    let total = cfg.warmup + cfg.frames;
    for f in 0..total as u64 {
        state.frame = f;
        let frame = renderer.render_frame(&state)?;
        let s = frame.stats;
        csv.serialize((f, pixels, s.proposed, s.accepted))?;
        if f as usize >= cfg.warmup {
            let stem = out.join(format!("frame_{f:04}"));
            frame.image.write_ppm(&stem.with_extension("ppm"))?;
            frame.image.write_pfm(&stem.with_extension("pfm"))?;
            write_ids(&stem.with_extension("ids"), &frame.sample_ids)?;
        }
        eprintln!(
            "frame {f}/{total}: {} of {} mutations accepted{}",
            s.accepted,
            s.proposed,
            if (f as usize) < cfg.warmup { " (warm-up)" } else { "" }
        );
        state = frame.state;
    }
    csv.flush()?;
    Ok(())
}

/// Files in `dir` with extension `ext`, sorted by name.
fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut files = vec![];
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn metrics(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dir = cfg.metrics.ensemble.as_deref().expect("validated");
    let k = cfg.ensemble_size;
    let frames = files_with_extension(dir, "pfm")?;
    if frames.len() < k {
        return Err(Failure::Config(format!(
            "ensemble_size: {k} frames requested but {} holds only {} PFM files",
            dir.display(),
            frames.len()
        )));
    }
    let images = frames[..k]
        .iter()
        .map(|p| Image::read_pfm(p))
        .collect::<Result<Vec<_>, _>>()?;
    let (w, h) = (images[0].width, images[0].height);
    let ensemble = ImageEnsemble::new(images)?;

    let report = covariance_report(&ensemble, &cfg.metrics.radii, cfg.metrics.include_self);
    let mut csv = csv::Writer::from_path(out.join("covariance.csv"))?;
    csv.write_record(["radius", "image_avg_covariance"])?;
    for (r, v) in report.radii.iter().zip(&report.image_average) {
        csv.serialize((r, v))?;
    }
    csv.flush()?;

    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    summary.write_record(["metric", "value"])?;
    summary.serialize(("ensemble_size", k as f64))?;

    let ids: Vec<PathBuf> = files_with_extension(dir, "ids")?.into_iter().take(k).collect();
    if let Some(last) = ids.last() {
        let map = read_ids(last)?;
        if map.len() != w * h {
            return Err(Failure::Io(format!(
                "{}: id map does not match the {w}x{h} frames",
                last.display()
            )));
        }
        let window = cfg.metrics.window;
        let counts = duplicate_heatmap(&map, w, h, window)?;
        let mut dup = csv::Writer::from_path(out.join("duplicates.csv"))?;
        dup.write_record(["pixel_x", "pixel_y", "duplicates"])?;
        for (i, c) in counts.iter().enumerate() {
            dup.serialize((i % w, i / w, c))?;
        }
        dup.flush()?;
        let max = (window * window - 1) as u32;
        fs::write(out.join("duplicates.ppm"), heatmap_ppm(&counts, w, h, max))?;
        let mut total = 0.0;
        for p in &ids {
            total += mean_duplicates(&read_ids(p)?, w, h, window)?;
        }
        summary.serialize(("mean_duplicates", total / ids.len() as f64))?;
    }

    if let Some(reference) = &cfg.metrics.reference {
        let reference = Image::read_pfm(reference)?;
        let mut total = 0.0;
        for img in ensemble.images() {
            total += mse(img, &reference)?;
        }
        summary.serialize(("mse", total / k as f64))?;
    }
    summary.flush()?;
    Ok(())
}

fn gate(passed: bool, what: String) -> Result<(), Failure> {
    if passed {
        eprintln!("gate passed: {what}");
        Ok(())
    } else {
        Err(Failure::Gate(what))
    }
}

fn unbiasedness(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let mutations = cfg.testbed.mutations.unwrap_or(cfg.mutation.iters);
    let tb = UnbiasednessConfig::new(
        AnalyticTarget::bimodal(),
        cfg.m as usize,
        mutations,
        cfg.testbed.trials,
        cfg.seed,
    );
    let r = run_unbiasedness_trial(&tb)?;
    let mut csv = csv::Writer::from_path(out.join("unbiasedness.csv"))?;
    csv.write_record(["statistic", "value"])?;
    for (k, v) in [
        ("trials", tb.trials as f64),
        ("m", tb.m as f64),
        ("mutations", mutations as f64),
        ("mean", r.mean),
        ("standard_error", r.standard_error),
        ("oracle", r.oracle),
        ("z", r.z),
        ("variance", r.variance),
        ("max_conservation_error", r.max_conservation_error),
        ("acceptance_rate", r.acceptance_rate),
    ] {
        csv.serialize((k, v))?;
    }
    csv.flush()?;
    gate(
        r.z.abs() < Z_GATE,
        format!("|z| = {:.3} against the quadrature oracle (limit {Z_GATE})", r.z.abs()),
    )
}

fn two_pixel(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let tp = TwoPixelConfig {
        trials: cfg.testbed.trials,
        mutations: cfg.testbed.mutations.unwrap_or(TWO_PIXEL_MUTATIONS),
        ..TwoPixelConfig::dissimilar(cfg.seed)
    };
    let r = run_two_pixel_covariance(&tp)?;
    let mut csv = csv::Writer::from_path(out.join("two_pixel.csv"))?;
    csv.write_record(["statistic", "value"])?;
    for (k, v) in [
        ("trials", tp.trials as f64),
        ("mutations", tp.mutations as f64),
        ("cov_without", r.cov_without),
        ("se_without", r.se_without),
        ("cov_with", r.cov_with),
        ("se_with", r.se_with),
        ("ratio", r.ratio),
    ] {
        csv.serialize((k, v))?;
    }
    csv.flush()?;
    gate(
        r.ratio <= TWO_PIXEL_RATIO_GATE,
        format!("covariance ratio {:.3} (limit {TWO_PIXEL_RATIO_GATE})", r.ratio),
    )
}

fn chain(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let cc = ChainConfig {
        always_accept: cfg.testbed.always_accept,
        ..ChainConfig::new(
            AnalyticTarget::bimodal().p_hat,
            cfg.testbed.steps,
            cfg.testbed.bins,
            cfg.seed,
        )
    };
    let r = chain_distribution_test(&cc)?;
    let mut csv = csv::Writer::from_path(out.join("chain.csv"))?;
    csv.write_record(["bin", "observed", "expected"])?;
    for (i, (o, e)) in r.histogram.iter().zip(&r.expected).enumerate() {
        csv.serialize((i, o, e))?;
    }
    csv.flush()?;
    let mut summary = csv::Writer::from_path(out.join("chain_summary.csv"))?;
    summary.write_record(["statistic", "value"])?;
    summary.serialize(("total_variation", r.total_variation))?;
    summary.serialize(("acceptance_rate", r.acceptance_rate))?;
    summary.flush()?;
    gate(
        r.total_variation < TV_GATE,
        format!("total variation {:.4} (limit {TV_GATE})", r.total_variation),
    )
}
