//! Sound matching: recover synthesizer controls from a target clip.
//!
//! The search runs over the normalized values of the free controls only; fixed
//! controls are copied from [`MatchTask::fixed_values`].

mod smoothing;

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::features::{extract, mae, ReprKind};
use crate::optimizers::{optimize, Bounds, Method, OptimizationResult, OptimizerConfig, Problem, StopCriteria};
use crate::rng::derive_seed;
use crate::vocal_tract::{synthesize_static, NormalizedParams, Param, SynthConfig, TractParams, N_PARAMS};

pub use smoothing::{savgol_filter, savgol_smooth};

pub const DEFAULT_WINDOW_MS: f64 = 100.0;
pub const SAVGOL_POINTS: usize = 9;
pub const SAVGOL_ORDER: usize = 2;

#[derive(Debug, Clone)]
pub struct MatchTask {
    pub target: AudioClip,
    pub repr: ReprKind,
    /// Starting point, if any, is given over the free controls in `Param::ALL` order.
    pub optimizer: OptimizerConfig,
    pub free_mask: [bool; N_PARAMS],
    pub fixed_values: TractParams,
    pub stop: StopCriteria,
    pub synth: SynthConfig,
    /// Candidates are rendered with this much extra signal in front, then trimmed,
    /// so that they start in steady state like a window cut from a longer clip.
    pub preroll_s: f64,
}

impl MatchTask {
    /// All eight controls free.
    pub fn new(target: AudioClip, repr: ReprKind, optimizer: OptimizerConfig) -> Self {
        Self {
            target,
            repr,
            optimizer,
            free_mask: [true; N_PARAMS],
            fixed_values: TractParams::midpoint(),
            stop: StopCriteria::default(),
            synth: SynthConfig::default(),
            preroll_s: 0.0,
        }
    }

    /// Only `param` free; the others are held at `fixed`.
    pub fn single(
        target: AudioClip,
        repr: ReprKind,
        optimizer: OptimizerConfig,
        param: Param,
        fixed: TractParams,
    ) -> Self {
        let mut free_mask = [false; N_PARAMS];
        free_mask[param.index()] = true;
        Self {
            free_mask,
            fixed_values: fixed,
            ..Self::new(target, repr, optimizer)
        }
    }

    pub fn free_params(&self) -> Vec<Param> {
        Param::ALL.into_iter().filter(|p| self.free_mask[p.index()]).collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.free_mask.iter().any(|f| *f) {
            return Err(Error::InvalidConfig("at least one parameter must be free".into()));
        }
        if self.target.sample_rate_hz() != self.synth.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                left: self.target.sample_rate_hz(),
                right: self.synth.sample_rate_hz,
            });
        }
        if !(self.preroll_s >= 0.0 && self.preroll_s.is_finite()) {
            return Err(Error::InvalidConfig("preroll must be non-negative".into()));
        }
        self.synth.validate()
    }
}

/// The matching objective: feature MAE between the target and a candidate rendering.
pub struct MatchObjective {
    repr: ReprKind,
    target_features: Vec<f64>,
    free: Vec<usize>,
    fixed: TractParams,
    n_samples: usize,
    preroll_samples: usize,
    synth: SynthConfig,
}

pub fn make_objective(task: &MatchTask) -> Result<MatchObjective> {
    task.validate()?;
    let sr = f64::from(task.synth.sample_rate_hz);
    Ok(MatchObjective {
        repr: task.repr,
        target_features: extract(task.repr, &task.target)?,
        free: task.free_params().iter().map(|p| p.index()).collect(),
        fixed: task.fixed_values,
        n_samples: task.target.len(),
        preroll_samples: (task.preroll_s * sr).round() as usize,
        synth: task.synth,
    })
}

impl MatchObjective {
    /// Fixed controls copied bitwise, free ones denormalized from `x`.
    pub fn params_for(&self, x: &[f64]) -> TractParams {
        let mut values = self.fixed.as_array();
        for (&i, &xi) in self.free.iter().zip(x) {
            let (lo, hi) = Param::ALL[i].bounds();
            let xi = xi.clamp(0.0, 1.0);
            values[i] = (lo * (1.0 - xi) + hi * xi).clamp(lo, hi);
        }
        TractParams::from_array(values).expect("values lie within bounds")
    }

    pub fn normalized_for(&self, x: &[f64]) -> NormalizedParams {
        self.params_for(x).normalize()
    }

    pub fn render(&self, x: &[f64]) -> Result<AudioClip> {
        let total = self.n_samples + self.preroll_samples;
        let clip = synthesize_static(
            &self.params_for(x),
            total as f64 / f64::from(self.synth.sample_rate_hz),
            &self.synth,
        )?;
        Ok(clip.slice(clip.len() - self.n_samples, clip.len()))
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        extract(self.repr, &self.render(x)?)
    }

    pub fn try_cost(&self, x: &[f64]) -> Result<f64> {
        mae(&self.target_features, &self.features(x)?)
    }
}

impl Problem for MatchObjective {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.try_cost(x).unwrap_or(f64::INFINITY)
    }

    fn residuals(&self, x: &[f64]) -> Option<Vec<f64>> {
        let cand = self.features(x).ok()?;
        Some(self.target_features.iter().zip(&cand).map(|(t, c)| t - c).collect())
    }
}

/// Per-control normalized errors and their mean over the free controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamError {
    pub per_param: [f64; N_PARAMS],
    pub mean: f64,
}

pub fn param_error(truth: &TractParams, estimate: &TractParams, free_mask: &[bool; N_PARAMS]) -> ParamError {
    let (t, e) = (truth.normalize().as_array(), estimate.normalize().as_array());
    let mut per_param = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        per_param[i] = (t[i] - e[i]).abs();
    }
    let free: Vec<f64> = (0..N_PARAMS).filter(|&i| free_mask[i]).map(|i| per_param[i]).collect();
    let mean = if free.is_empty() {
        0.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    ParamError { per_param, mean }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub optimization: OptimizationResult,
    pub estimate: TractParams,
    pub free_mask: [bool; N_PARAMS],
    /// Mean absolute waveform difference between the target and the resynthesis.
    pub audio_mae: f64,
    pub resynthesis: AudioClip,
}

impl MatchResult {
    pub fn param_error(&self, truth: &TractParams) -> ParamError {
        param_error(truth, &self.estimate, &self.free_mask)
    }
}

/// Runs the configured optimizer on any free mask.
pub fn match_task(task: &MatchTask) -> Result<MatchResult> {
    let objective = make_objective(task)?;
    let bounds = Bounds::unit(objective.dim());
    let optimization = optimize(&objective, &bounds, &task.optimizer, &task.stop)?;
    let resynthesis = objective.render(&optimization.best_x)?;
    let audio_mae = mae(task.target.samples(), resynthesis.samples())?;
    Ok(MatchResult {
        estimate: objective.params_for(&optimization.best_x),
        optimization,
        free_mask: task.free_mask,
        audio_mae,
        resynthesis,
    })
}

/// All eight controls at once.
pub fn match_static(task: &MatchTask) -> Result<MatchResult> {
    if task.free_mask.iter().any(|f| !f) {
        return Err(Error::InvalidConfig(
            "static matching expects every parameter free".into(),
        ));
    }
    match_task(task)
}

/// Exactly one free control.
pub fn match_single_param(task: &MatchTask) -> Result<MatchResult> {
    if task.free_mask.iter().filter(|f| **f).count() != 1 {
        return Err(Error::InvalidConfig(
            "single-parameter matching expects exactly one free parameter".into(),
        ));
    }
    if task.optimizer.method == Method::Cmaes {
        return Err(Error::UnsupportedDimension {
            method: Method::Cmaes.name(),
            dim: 1,
        });
    }
    match_task(task)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowedConfig {
    pub window_ms: f64,
    pub smoothing_points: usize,
    pub smoothing_order: usize,
    pub preroll_s: f64,
}

impl Default for WindowedConfig {
    fn default() -> Self {
        Self {
            window_ms: DEFAULT_WINDOW_MS,
            smoothing_points: SAVGOL_POINTS,
            smoothing_order: SAVGOL_ORDER,
            preroll_s: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub windows: Vec<MatchResult>,
    /// Sample range `[start, end)` of each window in the target.
    pub extents: Vec<(usize, usize)>,
    pub window_centers_s: Vec<f64>,
    pub raw: Vec<NormalizedParams>,
    pub smoothed: Vec<NormalizedParams>,
    /// True when smoothing overshot `[0, 1]` somewhere and was clamped.
    pub clamped: bool,
}

/// Matches consecutive non-overlapping windows, each warm-started from the previous
/// solution, then smooths every control across windows.
pub fn match_windowed(task: &MatchTask, cfg: &WindowedConfig) -> Result<TrajectoryResult> {
    task.validate()?;
    let sr = f64::from(task.synth.sample_rate_hz);
    let win = (cfg.window_ms * 1e-3 * sr).round() as usize;
    if win == 0 || task.target.len() < win {
        return Err(Error::SignalTooShort {
            needed: win.max(1),
            got: task.target.len(),
        });
    }
    let n_windows = task.target.len() / win;

    let mut windows = Vec::with_capacity(n_windows);
    let mut extents = Vec::with_capacity(n_windows);
    let mut initial = task.optimizer.initial.clone();
    for w in 0..n_windows {
        let (start, end) = (w * win, (w + 1) * win);
        let mut optimizer = task.optimizer.clone();
        optimizer.seed = derive_seed(task.optimizer.seed, &[w as u64]);
        optimizer.initial = initial.clone();
        let sub = MatchTask {
            target: task.target.slice(start, end),
            optimizer,
            synth: SynthConfig {
                seed: derive_seed(task.synth.seed, &[w as u64]),
                ..task.synth
            },
            preroll_s: cfg.preroll_s,
            ..task.clone()
        };
        let result = match_task(&sub)?;
        initial = Some(result.optimization.best_x.clone());
        windows.push(result);
        extents.push((start, end));
    }

    let raw: Vec<NormalizedParams> = windows.iter().map(|r| r.estimate.normalize()).collect();
    let mut columns = [const { Vec::new() }; N_PARAMS];
    let mut clamped = false;
    for (i, col) in columns.iter_mut().enumerate() {
        let series: Vec<f64> = raw.iter().map(|x| x.as_array()[i]).collect();
        let filtered = if task.free_mask[i] {
            savgol_filter(&series, cfg.smoothing_points, cfg.smoothing_order)?
        } else {
            series
        };
        clamped |= filtered.iter().any(|v| !(0.0..=1.0).contains(v));
        *col = filtered;
    }
    if clamped {
        log::info!("smoothed trajectory clamped into the unit range");
    }
    let smoothed = (0..n_windows)
        .map(|w| NormalizedParams::clamped(&columns.iter().map(|c| c[w]).collect::<Vec<_>>()))
        .collect();
    Ok(TrajectoryResult {
        window_centers_s: extents.iter().map(|(s, e)| (s + e) as f64 / 2.0 / sr).collect(),
        windows,
        extents,
        raw,
        smoothed,
        clamped,
    })
}
