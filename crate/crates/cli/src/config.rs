//! Run configuration: a JSON file, then command-line overrides, then defaults.

use std::path::{Path, PathBuf};

use restir_core::mcmc::MutationStrategy;
use restir_core::render::RenderConfig;
use restir_core::scene::ConnectConfig;
use restir_core::{MutationConfig, RenderMode, Scene, SpatialConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const OUT_ENV: &str = "RESTIR_OUT_DIR";
const DEFAULT_OUT_ROOT: &str = "restir-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    RenderDi,
    RenderPath,
    TestbedUnbiasedness,
    TestbedTwoPixel,
    TestbedChain,
    Metrics,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::RenderDi => "render-di",
            Mode::RenderPath => "render-path",
            Mode::TestbedUnbiasedness => "testbed-unbiasedness",
            Mode::TestbedTwoPixel => "testbed-two-pixel",
            Mode::TestbedChain => "testbed-chain",
            Mode::Metrics => "metrics",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Mode::RenderDi | Mode::RenderPath => Family::Render,
            Mode::TestbedUnbiasedness | Mode::TestbedTwoPixel | Mode::TestbedChain => Family::Testbed,
            Mode::Metrics => Family::Metrics,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Render,
    Testbed,
    Metrics,
}

impl Family {
    fn default_mode(self) -> Mode {
        match self {
            Family::Render => Mode::RenderDi,
            Family::Testbed => Mode::TestbedUnbiasedness,
            Family::Metrics => Mode::Metrics,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationSettings {
    pub iters: u32,
    pub s1: f64,
    pub s2: f64,
    /// Defaults to the strategy matching the render mode.
    pub strategy: Option<MutationStrategy>,
}

impl Default for MutationSettings {
    fn default() -> Self {
        let d = MutationConfig::default();
        MutationSettings {
            iters: d.iters,
            s1: d.s1,
            s2: d.s2,
            strategy: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSettings {
    /// Directory holding `frame_*.pfm` and `frame_*.ids` from a render run.
    pub ensemble: Option<PathBuf>,
    /// Optional PFM reference for MSE.
    pub reference: Option<PathBuf>,
    pub radii: Vec<usize>,
    pub include_self: bool,
    /// Side of the duplicate-counting window.
    pub window: usize,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        MetricsSettings {
            ensemble: None,
            reference: None,
            radii: vec![1, 2, 4, 8, 16],
            include_self: false,
            window: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestbedSettings {
    pub trials: usize,
    /// Mutations per trial; unset means `mutation.iters` for the
    /// unbiasedness experiment and 64 for the two-pixel experiment.
    pub mutations: Option<u32>,
    pub steps: usize,
    pub bins: usize,
    pub always_accept: bool,
}

impl Default for TestbedSettings {
    fn default() -> Self {
        TestbedSettings {
            trials: 100_000,
            mutations: None,
            steps: 1_000_000,
            bins: 32,
            always_accept: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    /// Built-in scene name or path to a scene JSON file.
    pub scene: String,
    pub width: usize,
    pub height: usize,
    /// Frames written after the warm-up.
    pub frames: usize,
    pub warmup: usize,
    /// Ensemble size K for the metrics mode.
    pub ensemble_size: usize,
    /// Initial candidates per pixel.
    pub m: u32,
    pub m_cap: f64,
    pub mutation: MutationSettings,
    pub spatial: SpatialConfig,
    pub connect: ConnectConfig,
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub metrics: MetricsSettings,
    pub testbed: TestbedSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            scene: "glossy_box".into(),
            width: 64,
            height: 64,
            frames: 1,
            warmup: 30,
            ensemble_size: 100,
            m: 32,
            m_cap: 50.0,
            mutation: MutationSettings::default(),
            spatial: SpatialConfig::default(),
            connect: ConnectConfig::default(),
            seed: 0,
            threads: None,
            output: None,
            metrics: MetricsSettings::default(),
            testbed: TestbedSettings::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

fn config_error(field: &str, reason: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{field}: {reason}"))
}

/// Parses a config file. An empty file yields all defaults.
pub fn parse(text: &str) -> Result<RunConfig, Failure> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(if path == "." { "config" } else { &path }, e.inner())
    })
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| config_error("--config", format!("{}: {e}", p.display())))?;
            parse(&text)
        }
    }
}

impl RunConfig {
    /// Applies overrides, fills mode-dependent defaults and validates.
    pub fn resolve(mut self, family: Family, over: &Overrides, env_root: Option<PathBuf>) -> Result<Self, Failure> {
        let mode = over.mode.or(self.mode).unwrap_or(family.default_mode());
        if mode.family() != family {
            return Err(config_error(
                "mode",
                format!("{} cannot run under this subcommand", mode.name()),
            ));
        }
        self.mode = Some(mode);
        if let Some(seed) = over.seed {
            self.seed = seed;
        }
        if over.threads.is_some() {
            self.threads = over.threads;
        }
        if over.out.is_some() {
            self.output = over.out.clone();
        }
        if self.output.is_none() {
            let root = env_root.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
            self.output = Some(root.join(mode.name()));
        }
        if self.mutation.strategy.is_none() {
            if let Some(m) = self.render_mode() {
                self.mutation.strategy = Some(RenderConfig::strategy_for(m));
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode.expect("resolved config has a mode")
    }

    pub fn output(&self) -> &Path {
        self.output.as_deref().expect("resolved config has an output directory")
    }

    pub fn render_mode(&self) -> Option<RenderMode> {
        match self.mode? {
            Mode::RenderDi => Some(RenderMode::Di),
            Mode::RenderPath => Some(RenderMode::Path),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        if !(self.m_cap >= 0.0 && self.m_cap.is_finite()) {
            return Err(config_error(
                "m_cap",
                format!("must be finite and nonnegative, got {}", self.m_cap),
            ));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be at least 1"));
        }
        match self.mode().family() {
            Family::Render => {
                if self.m < 1 {
                    return Err(config_error("m", "render modes need at least one initial candidate"));
                }
                self.scene()?;
                self.render_config()?.validate().map_err(Failure::from)?;
            }
            Family::Metrics => {
                if self.ensemble_size < 2 {
                    return Err(config_error(
                        "ensemble_size",
                        format!("must be at least 2, got {}", self.ensemble_size),
                    ));
                }
                match &self.metrics.ensemble {
                    None => return Err(config_error("metrics.ensemble", "an ensemble directory is required")),
                    Some(p) if !p.is_dir() => {
                        return Err(config_error(
                            "metrics.ensemble",
                            format!("{} is not a directory", p.display()),
                        ))
                    }
                    _ => {}
                }
                if let Some(p) = &self.metrics.reference {
                    if !p.is_file() {
                        return Err(config_error(
                            "metrics.reference",
                            format!("{} does not exist", p.display()),
                        ));
                    }
                }
                if self.metrics.window == 0 {
                    return Err(config_error("metrics.window", "must be at least 1"));
                }
            }
            Family::Testbed => {
                if self.testbed.trials < 2 {
                    return Err(config_error("testbed.trials", "must be at least 2"));
                }
                if self.mode() == Mode::TestbedChain {
                    if self.testbed.steps < 100_000 {
                        return Err(config_error("testbed.steps", "must be at least 100000"));
                    }
                    if self.testbed.bins == 0 {
                        return Err(config_error("testbed.bins", "must be at least 1"));
                    }
                } else if self.m < 1 {
                    return Err(config_error("m", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn scene(&self) -> Result<Scene, Failure> {
        if let Some(s) = Scene::builtin(&self.scene) {
            return Ok(s);
        }
        let path = Path::new(&self.scene);
        if !path.is_file() {
            return Err(config_error(
                "scene",
                format!("{} is neither a built-in scene nor a file", self.scene),
            ));
        }
        Scene::load(path).map_err(|e| config_error("scene", e))
    }

    pub fn render_config(&self) -> Result<RenderConfig, Failure> {
        let mode = self
            .render_mode()
            .ok_or_else(|| config_error("mode", "not a render mode"))?;
        Ok(RenderConfig {
            width: self.width,
            height: self.height,
            mode,
            candidates: self.m,
            m_cap: self.m_cap,
            mutation: MutationConfig {
                iters: self.mutation.iters,
                s1: self.mutation.s1,
                s2: self.mutation.s2,
                strategy: self.mutation.strategy.unwrap_or(RenderConfig::strategy_for(mode)),
            },
            spatial: self.spatial,
            connect: self.connect,
            seed: self.seed,
        })
    }
}
