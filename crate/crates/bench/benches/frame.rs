use criterion::{criterion_group, criterion_main, Criterion};
use restir_core::render::RenderConfig;
use restir_core::{FrameState, RenderMode, Renderer, Scene};

fn renderer(mode: RenderMode, iters: u32) -> Renderer {
    let mut cfg = RenderConfig {
        width: 32,
        height: 32,
        mode,
        ..RenderConfig::default()
    };
    cfg.mutation.iters = iters;
    cfg.mutation.strategy = RenderConfig::strategy_for(mode);
    Renderer::new(Scene::builtin("glossy_box").unwrap(), cfg).unwrap()
}

fn frames(c: &mut Criterion) {
    let mut group = c.benchmark_group("frame 32x32");
    group.sample_size(20);
    for (name, mode) in [("di", RenderMode::Di), ("path", RenderMode::Path)] {
        for iters in [0u32, 1, 5] {
            let r = renderer(mode, iters);
            // steady state: bench a frame that has temporal history
            let warm = r.render_frame(&FrameState::new()).unwrap().state;
            group.bench_function(format!("{name}, {iters} mutations"), |b| {
                b.iter(|| r.render_frame(&warm).unwrap().image)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, frames);
criterion_main!(benches);
