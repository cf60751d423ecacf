use rand::Rng;
use rayon::prelude::*;

use super::image::{Image, NO_SAMPLE};
use super::{RenderConfig, RenderMode};
use crate::error::Result;
use crate::math::Vec3;
use crate::mcmc::{
    mutate_sample, DiDirectionMutator, KernelRatioMode, MutationConfig, MutationStats, ReconnectionMutator,
};
use crate::resampling::{combine_spatial, combine_temporal, ResamplingDomain, Reservoir};
use crate::rng::{self, stream_id, StreamRng};
use crate::scene::{DiDomain, DiSample, PathDomain, PathSample, SampleId, Scene, ShadingContext};

/// Post-spatial reservoirs of the previous frame.
#[derive(Clone, Debug, Default)]
pub enum History {
    #[default]
    None,
    Di(Vec<Reservoir<DiSample>>),
    Path(Vec<Reservoir<PathSample>>),
}

#[derive(Clone, Debug, Default)]
pub struct FrameState {
    pub frame: u64,
    pub history: History,
}

impl FrameState {
    pub fn new() -> Self {
        FrameState::default()
    }

    /// A state for `frame` without temporal history.
    pub fn fresh(frame: u64) -> Self {
        FrameState {
            frame,
            history: History::None,
        }
    }
}

pub struct FrameOutput {
    pub image: Image,
    /// Per-pixel id of the shaded sample, [`NO_SAMPLE`] where there is none.
    pub sample_ids: Vec<u64>,
    pub stats: MutationStats,
    /// State to pass to the next frame.
    pub state: FrameState,
}

pub struct Renderer {
    scene: Scene,
    config: RenderConfig,
    contexts: Vec<Option<ShadingContext>>,
}

/// Mode-specific pieces of the pipeline.
trait Stages: ResamplingDomain<Pixel = usize, Sample: SampleId + Send + Sync> + Sync {
    fn initial(&self, ctx: &ShadingContext, m: u32, rng: &mut StreamRng) -> Result<Reservoir<Self::Sample>>;
    fn mutate(
        &self,
        ctx: &ShadingContext,
        r: &Reservoir<Self::Sample>,
        cfg: &MutationConfig,
        rng: &mut StreamRng,
    ) -> (Reservoir<Self::Sample>, MutationStats);
    fn integrand(&self, ctx: &ShadingContext, s: &Self::Sample) -> Vec3;
}

impl Stages for DiDomain<'_> {
    fn initial(&self, ctx: &ShadingContext, m: u32, rng: &mut StreamRng) -> Result<Reservoir<DiSample>> {
        let mut r = Reservoir::new();
        let inv = 1.0 / (m as f64 * self.scene.light_pdf());
        for _ in 0..m {
            let light = self.scene.sample_light([rng.random(), rng.random(), rng.random()]);
            let w = ctx.di_target(self.scene, &light) * inv;
            r.update(DiSample { light, id: NO_SAMPLE }, w, rng)?;
        }
        let p = r.sample.as_ref().map_or(0.0, |s| ctx.di_target(self.scene, &s.light));
        r.finalize(p);
        Ok(r)
    }

    fn mutate(
        &self,
        ctx: &ShadingContext,
        r: &Reservoir<DiSample>,
        cfg: &MutationConfig,
        rng: &mut StreamRng,
    ) -> (Reservoir<DiSample>, MutationStats) {
        mutate_sample(&DiDirectionMutator::new(self.scene, ctx), r, cfg, rng)
    }

    fn integrand(&self, ctx: &ShadingContext, s: &DiSample) -> Vec3 {
        ctx.di_integrand(self.scene, &s.light)
    }
}

impl Stages for PathDomain<'_> {
    fn initial(&self, ctx: &ShadingContext, m: u32, rng: &mut StreamRng) -> Result<Reservoir<PathSample>> {
        let mut r = Reservoir::new();
        for _ in 0..m {
            let u_dir = [rng.random(), rng.random()];
            let u_light = [rng.random(), rng.random(), rng.random()];
            match ctx.trace_one_bounce(self.scene, u_dir, u_light, NO_SAMPLE) {
                Some((s, pdf)) => {
                    let w = ctx.path_target(self.scene, &s) / (m as f64 * pdf);
                    r.update(s, if w.is_finite() { w } else { 0.0 }, rng)?;
                }
                None => {
                    // a zero-weight candidate: counts toward M, never selected
                    r.m += 1.0;
                    let _: f64 = rng.random();
                }
            }
        }
        let p = r.sample.as_ref().map_or(0.0, |s| ctx.path_target(self.scene, s));
        r.finalize(p);
        Ok(r)
    }

    fn mutate(
        &self,
        ctx: &ShadingContext,
        r: &Reservoir<PathSample>,
        cfg: &MutationConfig,
        rng: &mut StreamRng,
    ) -> (Reservoir<PathSample>, MutationStats) {
        let m = ReconnectionMutator::new(self.scene, ctx, self.connect, KernelRatioMode::Exact);
        mutate_sample(&m, r, cfg, rng)
    }

    fn integrand(&self, ctx: &ShadingContext, s: &PathSample) -> Vec3 {
        ctx.path_integrand(self.scene, s)
    }
}

fn fresh_id(seed: u64, frame: u64, pixel: usize, stage: u64) -> u64 {
    let id = rng::hash_key(seed, frame, pixel as u64, stream_id::SAMPLE_ID | (stage << 8));
    if id == NO_SAMPLE {
        id - 1
    } else {
        id
    }
}

/// Drops NaN, infinite and negative components.
fn guard(v: Vec3) -> Vec3 {
    let g = |c: f64| if c.is_finite() && c > 0.0 { c } else { 0.0 };
    Vec3::new(g(v.x), g(v.y), g(v.z))
}

impl Renderer {
    pub fn new(scene: Scene, config: RenderConfig) -> Result<Self> {
        config.validate()?;
        let (w, h) = (config.width, config.height);
        let contexts = (0..w * h)
            .into_par_iter()
            .map(|p| scene.primary(p % w, p / w, w, h))
            .collect();
        Ok(Renderer {
            scene,
            config,
            contexts,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn config(&self) -> &RenderConfig {
        &self.config
    }

    pub fn contexts(&self) -> &[Option<ShadingContext>] {
        &self.contexts
    }

    pub fn di_domain(&self) -> DiDomain<'_> {
        DiDomain {
            scene: &self.scene,
            contexts: &self.contexts,
        }
    }

    pub fn path_domain(&self) -> PathDomain<'_> {
        PathDomain {
            scene: &self.scene,
            contexts: &self.contexts,
            connect: self.config.connect,
        }
    }

    pub fn render_frame(&self, state: &FrameState) -> Result<FrameOutput> {
        match self.config.mode {
            RenderMode::Di => {
                let prev = match &state.history {
                    History::Di(v) => Some(v.as_slice()),
                    _ => None,
                };
                let (grid, out) = self.run(&self.di_domain(), state.frame, prev)?;
                Ok(out.with_state(state.frame, History::Di(grid)))
            }
            RenderMode::Path => {
                let prev = match &state.history {
                    History::Path(v) => Some(v.as_slice()),
                    _ => None,
                };
                let (grid, out) = self.run(&self.path_domain(), state.frame, prev)?;
                Ok(out.with_state(state.frame, History::Path(grid)))
            }
        }
    }

    fn run<D: Stages>(
        &self,
        domain: &D,
        frame: u64,
        prev: Option<&[Reservoir<D::Sample>]>,
    ) -> Result<(Vec<Reservoir<D::Sample>>, Partial)> {
        let cfg = &self.config;
        let n = self.contexts.len();
        let seed = cfg.seed;
        let prev = prev.filter(|p| p.len() == n);

        let mut grid: Vec<Reservoir<D::Sample>> = (0..n)
            .into_par_iter()
            .map(|p| {
                let Some(ctx) = &self.contexts[p] else {
                    return Ok(Reservoir::new());
                };
                let mut rng = rng::stream(seed, frame, p as u64, stream_id::INITIAL);
                let mut r = domain.initial(ctx, cfg.candidates, &mut rng)?;
                if let Some(s) = r.sample.as_mut() {
                    s.set_id(fresh_id(seed, frame, p, 0));
                }
                Ok(r)
            })
            .collect::<Result<_>>()?;

        if let Some(prev) = prev {
            grid = (0..n)
                .into_par_iter()
                .map(|p| {
                    if self.contexts[p].is_none() {
                        return Ok(Reservoir::new());
                    }
                    let mut rng = rng::stream(seed, frame, p as u64, stream_id::TEMPORAL);
                    combine_temporal(domain, p, &grid[p], p, &prev[p], cfg.m_cap, &mut rng)
                })
                .collect::<Result<_>>()?;
        }

        let mut stats = MutationStats::default();
        if cfg.mutation.iters > 0 {
            let mutated: Vec<(Reservoir<D::Sample>, MutationStats)> = (0..n)
                .into_par_iter()
                .map(|p| {
                    let Some(ctx) = &self.contexts[p] else {
                        return (grid[p].clone(), MutationStats::default());
                    };
                    let mut rng = rng::stream(seed, frame, p as u64, stream_id::MUTATION);
                    let (mut r, s) = domain.mutate(ctx, &grid[p], &cfg.mutation, &mut rng);
                    if s.accepted > 0 {
                        if let Some(x) = r.sample.as_mut() {
                            x.set_id(fresh_id(seed, frame, p, 1));
                        }
                    }
                    (r, s)
                })
                .collect();
            grid = Vec::with_capacity(n);
            for (r, s) in mutated {
                stats += s;
                grid.push(r);
            }
        }

        for round in 0..cfg.spatial.rounds {
            grid = (0..n)
                .into_par_iter()
                .map(|p| {
                    if self.contexts[p].is_none() {
                        return Ok(Reservoir::new());
                    }
                    let mut rng = rng::stream(seed, frame, p as u64, stream_id::SPATIAL | ((round as u64) << 8));
                    let picks = self.pick_neighbors(p, &mut rng);
                    let neighbors: Vec<(usize, &Reservoir<D::Sample>)> = picks.iter().map(|&q| (q, &grid[q])).collect();
                    combine_spatial(domain, p, &grid[p], &neighbors, &mut rng)
                })
                .collect::<Result<_>>()?;
        }

        let (colors, ids): (Vec<Vec3>, Vec<u64>) = (0..n)
            .into_par_iter()
            .map(|p| {
                let Some(ctx) = &self.contexts[p] else {
                    return (Vec3::ZERO, NO_SAMPLE);
                };
                let r = &grid[p];
                let direct = match &r.sample {
                    Some(s) if r.w > 0.0 => domain.integrand(ctx, s) * r.w,
                    _ => Vec3::ZERO,
                };
                let id = r.sample.as_ref().map_or(NO_SAMPLE, |s| s.id());
                (guard(ctx.emitted + guard(direct)), id)
            })
            .unzip();

        let image = Image::from_data(cfg.width, cfg.height, colors)?;
        Ok((
            grid,
            Partial {
                image,
                sample_ids: ids,
                stats,
            },
        ))
    }

    /// Up to `k` distinct pixels drawn uniformly from the disc around `p`,
    /// excluding `p`, pixels outside the image and pixels without geometry.
    /// Always consumes `16 k` uniforms.
    fn pick_neighbors(&self, p: usize, rng: &mut StreamRng) -> Vec<usize> {
        let (w, h) = (self.config.width as i64, self.config.height as i64);
        let k = self.config.spatial.k;
        let radius = self.config.spatial.radius;
        let ri = radius.floor() as i64;
        let (px, py) = (p as i64 % w, p as i64 / w);
        let mut picks = Vec::with_capacity(k);
        for _ in 0..8 * k {
            let dx = (rng.random::<f64>() * (2 * ri + 1) as f64).floor() as i64 - ri;
            let dy = (rng.random::<f64>() * (2 * ri + 1) as f64).floor() as i64 - ri;
            if picks.len() == k || (dx == 0 && dy == 0) || ((dx * dx + dy * dy) as f64) > radius * radius {
                continue;
            }
            let (x, y) = (px + dx, py + dy);
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let q = (y * w + x) as usize;
            if self.contexts[q].is_some() && !picks.contains(&q) {
                picks.push(q);
            }
        }
        picks
    }

    /// High-sample estimate of the converged image together with its
    /// per-pixel standard error.
    ///
    /// Each repetition stratifies `strata x strata` samples over the light
    /// (direct lighting) or over the bounce direction (path mode).
    pub fn reference(&self, strata: usize, repetitions: usize, seed: u64) -> (Image, Image) {
        assert!(strata > 0 && repetitions > 1);
        let n = self.contexts.len();
        let per_pixel: Vec<(Vec3, Vec3)> = (0..n)
            .into_par_iter()
            .map(|p| {
                let Some(ctx) = &self.contexts[p] else {
                    return (Vec3::ZERO, Vec3::ZERO);
                };
                let mut rng = rng::stream(seed, u64::MAX, p as u64, stream_id::INITIAL);
                let mut sum = Vec3::ZERO;
                let mut sum_sq = Vec3::ZERO;
                for _ in 0..repetitions {
                    let est = self.stratified_estimate(ctx, strata, &mut rng);
                    sum += est;
                    sum_sq += est.mul_elem(est);
                }
                let r = repetitions as f64;
                let mean = sum / r;
                let var = (sum_sq - mean.mul_elem(mean) * r) / (r - 1.0);
                let se = Vec3::new(var.x.max(0.0).sqrt(), var.y.max(0.0).sqrt(), var.z.max(0.0).sqrt()) / r.sqrt();
                (ctx.emitted + mean, se)
            })
            .collect();
        let (w, h) = (self.config.width, self.config.height);
        let mean = Image::from_data(w, h, per_pixel.iter().map(|v| v.0).collect()).unwrap();
        let se = Image::from_data(w, h, per_pixel.iter().map(|v| v.1).collect()).unwrap();
        (mean, se)
    }

    fn stratified_estimate(&self, ctx: &ShadingContext, strata: usize, rng: &mut StreamRng) -> Vec3 {
        let mut sum = Vec3::ZERO;
        let inv = 1.0 / strata as f64;
        for i in 0..strata {
            for j in 0..strata {
                let a = (i as f64 + rng.random::<f64>()) * inv;
                let b = (j as f64 + rng.random::<f64>()) * inv;
                let c: f64 = rng.random();
                match self.config.mode {
                    RenderMode::Di => {
                        let light = self.scene.sample_light([c, a, b]);
                        sum += ctx.di_integrand(&self.scene, &light) / self.scene.light_pdf();
                    }
                    RenderMode::Path => {
                        let ul = [c, rng.random(), rng.random()];
                        if let Some((s, pdf)) = ctx.trace_one_bounce(&self.scene, [a, b], ul, 0) {
                            sum += ctx.path_integrand(&self.scene, &s) / pdf;
                        }
                    }
                }
            }
        }
        guard(sum * (inv * inv))
    }
}

struct Partial {
    image: Image,
    sample_ids: Vec<u64>,
    stats: MutationStats,
}

impl Partial {
    fn with_state(self, frame: u64, history: History) -> FrameOutput {
        FrameOutput {
            image: self.image,
            sample_ids: self.sample_ids,
            stats: self.stats,
            state: FrameState {
                frame: frame + 1,
                history,
            },
        }
    }
}
