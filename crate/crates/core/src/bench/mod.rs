//! The experiment grid: target generation, runs over optimizer × representation ×
//! repetition, and the CSV/SVG report.

mod dataset;
mod plots;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio_io::{add_noise_snr, read_wav, AudioClip};
use crate::error::{Error, Result};
use crate::features::{mae, ReprKind};
use crate::inversion::{match_single_param, match_static, match_windowed, MatchTask, WindowedConfig};
use crate::optimizers::{Method, OptimizerConfig, StopCriteria};
use crate::quality::stoi_value;
use crate::rng::{derive_seed, hash_label, stream_rng};
use crate::vocal_tract::{
    synthesize_static, synthesize_trajectory, Param, ParamTrajectory, SynthConfig, TractParams, N_PARAMS,
};

pub use dataset::{
    entry_seed, generate_dataset, generate_dataset_with_duration, random_params, DatasetManifest, ManifestEntry,
    MANIFEST_FILE,
};
pub use plots::render_plots;
pub use report::{read_report, write_report, ExperimentReport, ReportRow, FAILED, REPORT_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SingleParam,
    AllParams,
    Noisy,
    TimeVarying,
    RealAudio,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SingleParam => "single_param",
            Experiment::AllParams => "all_params",
            Experiment::Noisy => "noisy",
            Experiment::TimeVarying => "time_varying",
            Experiment::RealAudio => "real_audio",
        }
    }
}

pub const DEFAULT_SNR_GRID: [f64; 6] = [40.0, 30.0, 20.0, 10.0, 5.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub optimizers: Vec<Method>,
    pub representations: Vec<ReprKind>,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Evaluation budget of one row; windowed runs split it evenly across windows.
    pub max_evals: usize,
    pub clip_duration_s: f64,
    pub snr_grid: Vec<f64>,
    /// Directory of mono 48 kHz WAVs for `real_audio`.
    pub target_dir: Option<PathBuf>,
    /// Controls matched one at a time in `single_param`.
    pub params: Vec<Param>,
    pub window_ms: f64,
    pub compute_stoi: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk(Experiment::AllParams)
    }
}

impl ExperimentConfig {
    /// Small budgets and half-second clips.
    pub fn desk(experiment: Experiment) -> Self {
        Self {
            experiment,
            optimizers: Method::ALL.to_vec(),
            representations: ReprKind::ALL.to_vec(),
            repetitions: 20,
            master_seed: 0,
            max_evals: 2000,
            clip_duration_s: if experiment == Experiment::TimeVarying {
                1.0
            } else {
                0.5
            },
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            target_dir: None,
            params: Param::ALL.to_vec(),
            window_ms: 100.0,
            compute_stoi: false,
        }
    }

    /// One-second clips and larger budgets.
    pub fn full(experiment: Experiment) -> Self {
        Self {
            clip_duration_s: 1.0,
            max_evals: 10_000,
            compute_stoi: true,
            ..Self::desk(experiment)
        }
    }

    pub fn stop(&self) -> StopCriteria {
        StopCriteria::with_budget(self.max_evals)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.optimizers.is_empty() || self.representations.is_empty() {
            return bad("at least one optimizer and one representation are required");
        }
        if self.max_evals == 0 {
            return bad("max_evals must be at least 1");
        }
        if !(self.clip_duration_s > 0.0 && self.clip_duration_s.is_finite()) {
            return bad("clip duration must be positive");
        }
        if self.experiment == Experiment::Noisy && self.snr_grid.is_empty() {
            return bad("snr_grid must not be empty for the noisy experiment");
        }
        if self.experiment == Experiment::SingleParam && self.params.is_empty() {
            return bad("params must not be empty for the single_param experiment");
        }
        if self.experiment == Experiment::RealAudio && self.target_dir.is_none() {
            return bad("real_audio needs target_dir");
        }
        if matches!(self.experiment, Experiment::TimeVarying | Experiment::RealAudio) && !(self.window_ms > 0.0) {
            return bad("window_ms must be positive");
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seed of repetition `rep`'s target and starting point, shared by every optimizer
/// and representation.
pub fn target_seed(master_seed: u64, rep: usize) -> u64 {
    derive_seed(master_seed, &[hash_label("target"), rep as u64])
}

pub fn optimizer_seed(master_seed: u64, method: Method, repr: ReprKind, rep: usize) -> u64 {
    derive_seed(
        master_seed,
        &[hash_label(method.name()), hash_label(repr.name()), rep as u64],
    )
}

/// Ground-truth controls of repetition `rep`.
pub fn target_params(master_seed: u64, rep: usize) -> TractParams {
    random_params(target_seed(master_seed, rep), 0)
}

/// Normalized starting point of repetition `rep`.
pub fn initial_point(master_seed: u64, rep: usize) -> Vec<f64> {
    let mut rng = stream_rng(target_seed(master_seed, rep), 1);
    (0..N_PARAMS).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellTarget {
    Single(Param),
    All,
    /// `None` is the clean reference condition.
    Noisy(Option<f64>),
    TimeVarying,
    Real(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub repr: ReprKind,
    pub repetition: usize,
    pub target: CellTarget,
}

impl Cell {
    pub fn target_id(&self) -> String {
        let base = format!("t{:03}", self.repetition);
        match &self.target {
            CellTarget::Single(p) => format!("{base}-{}", p.short_label()),
            CellTarget::All | CellTarget::TimeVarying | CellTarget::Noisy(None) => base,
            CellTarget::Noisy(Some(snr)) => format!("{base}@snr{snr}"),
            CellTarget::Real(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or(base),
        }
    }
}

fn real_targets(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidConfig(format!("no WAV files in {}", dir.display())));
    }
    Ok(files)
}

/// Every cell of the grid in report order. CMA-ES is left out of `single_param`.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let targets: Vec<CellTarget> = match cfg.experiment {
        Experiment::SingleParam => cfg.params.iter().map(|&p| CellTarget::Single(p)).collect(),
        Experiment::AllParams => vec![CellTarget::All],
        Experiment::Noisy => std::iter::once(CellTarget::Noisy(None))
            .chain(cfg.snr_grid.iter().map(|&s| CellTarget::Noisy(Some(s))))
            .collect(),
        Experiment::TimeVarying => vec![CellTarget::TimeVarying],
        Experiment::RealAudio => real_targets(cfg.target_dir.as_deref().expect("validated"))?
            .into_iter()
            .map(CellTarget::Real)
            .collect(),
    };
    let mut cells = Vec::new();
    for &method in &cfg.optimizers {
        if cfg.experiment == Experiment::SingleParam && !method.supports_dim(1) {
            continue;
        }
        for &repr in &cfg.representations {
            for target in &targets {
                for repetition in 0..cfg.repetitions {
                    cells.push(Cell {
                        method,
                        repr,
                        repetition,
                        target: target.clone(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

struct Outcome {
    errors: Option<[f64; N_PARAMS]>,
    mean_norm_error: Option<f64>,
    audio_mae: f64,
    stoi: Option<f64>,
    n_evals: usize,
    elapsed_s: f64,
    stop_reason: String,
}

fn optional_stoi(cfg: &ExperimentConfig, reference: &AudioClip, resynthesis: &AudioClip) -> Option<f64> {
    if !cfg.compute_stoi {
        return None;
    }
    match stoi_value(reference, resynthesis) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("stoi unavailable: {e}");
            None
        }
    }
}

fn windowed(cfg: &ExperimentConfig, task: &MatchTask, truth: Option<&ParamTrajectory>) -> Result<Outcome> {
    let wcfg = WindowedConfig {
        window_ms: cfg.window_ms,
        ..WindowedConfig::default()
    };
    let win = (cfg.window_ms * 1e-3 * f64::from(task.synth.sample_rate_hz)).round() as usize;
    let n_windows = (task.target.len() / win.max(1)).max(1);
    let task = MatchTask {
        stop: StopCriteria::with_budget((cfg.max_evals / n_windows).max(1)),
        ..task.clone()
    };
    let r = match_windowed(&task, &wcfg)?;
    let mut resynth = vec![0.0; task.target.len()];
    for (w, &(s, e)) in r.windows.iter().zip(&r.extents) {
        resynth[s..e].copy_from_slice(w.resynthesis.samples());
    }
    let covered = r.extents.last().map_or(0, |e| e.1);
    let target = task.target.slice(0, covered);
    let resynth = AudioClip::new(resynth[..covered].to_vec(), task.target.sample_rate_hz())?;
    let (errors, mean) = match truth {
        Some(traj) => {
            let mut errors = [0.0; N_PARAMS];
            for (t, est) in r.window_centers_s.iter().zip(&r.smoothed) {
                let want = traj.normalized_at(*t).as_array();
                for (i, e) in errors.iter_mut().enumerate() {
                    *e += (want[i] - est.as_array()[i]).abs() / r.smoothed.len() as f64;
                }
            }
            (Some(errors), Some(errors.iter().sum::<f64>() / N_PARAMS as f64))
        }
        None => (None, None),
    };
    Ok(Outcome {
        errors,
        mean_norm_error: mean,
        audio_mae: mae(target.samples(), resynth.samples())?,
        stoi: optional_stoi(cfg, &target, &resynth),
        n_evals: r.windows.iter().map(|w| w.optimization.n_evals).sum(),
        elapsed_s: r.windows.iter().map(|w| w.optimization.elapsed_s).sum(),
        stop_reason: r
            .windows
            .last()
            .map(|w| w.optimization.stop_reason.name())
            .unwrap_or("budget")
            .to_owned(),
    })
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<Outcome> {
    let tseed = target_seed(cfg.master_seed, cell.repetition);
    let synth = SynthConfig::with_seed(tseed);
    let truth = target_params(cfg.master_seed, cell.repetition);
    let x0 = initial_point(cfg.master_seed, cell.repetition);
    let optimizer = OptimizerConfig::new(
        cell.method,
        optimizer_seed(cfg.master_seed, cell.method, cell.repr, cell.repetition),
    );
    let base = |target: AudioClip, optimizer: OptimizerConfig| MatchTask {
        stop: cfg.stop(),
        synth,
        ..MatchTask::new(target, cell.repr, optimizer)
    };

    if let CellTarget::TimeVarying = cell.target {
        let end = random_params(tseed, 2);
        let traj = ParamTrajectory::glide(truth, end, cfg.clip_duration_s)?;
        let target = synthesize_trajectory(&traj, cfg.clip_duration_s, &synth)?;
        return windowed(cfg, &base(target, optimizer.with_initial(x0)), Some(&traj));
    }
    if let CellTarget::Real(path) = &cell.target {
        let target = read_wav(path)?;
        return windowed(cfg, &base(target, optimizer.with_initial(x0)), None);
    }

    let clean = synthesize_static(&truth, cfg.clip_duration_s, &synth)?;
    let result = match &cell.target {
        CellTarget::Single(p) => {
            let task = MatchTask {
                free_mask: std::array::from_fn(|i| i == p.index()),
                fixed_values: truth,
                ..base(clean.clone(), optimizer.with_initial(vec![x0[p.index()]]))
            };
            match_single_param(&task)?
        }
        CellTarget::All => match_static(&base(clean.clone(), optimizer.with_initial(x0)))?,
        CellTarget::Noisy(snr) => {
            let target = match snr {
                Some(s) => add_noise_snr(&clean, *s, derive_seed(tseed, &[hash_label("noise")]))?,
                None => clean.clone(),
            };
            match_static(&base(target, optimizer.with_initial(x0)))?
        }
        CellTarget::TimeVarying | CellTarget::Real(_) => unreachable!(),
    };
    let e = result.param_error(&truth);
    Ok(Outcome {
        errors: Some(e.per_param),
        mean_norm_error: Some(e.mean),
        // against the clean clip, so noisy conditions measure recovery rather than the noise
        audio_mae: mae(clean.samples(), result.resynthesis.samples())?,
        stoi: optional_stoi(cfg, &clean, &result.resynthesis),
        n_evals: result.optimization.n_evals,
        elapsed_s: result.optimization.elapsed_s,
        stop_reason: result.optimization.stop_reason.name().to_owned(),
    })
}

/// Runs every cell of the grid. A cell that errors becomes a `failed` row.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let cells = plan(cfg)?;
    let started = Instant::now();
    let rows = cells
        .par_iter()
        .map(|cell| {
            let mut row = ReportRow {
                experiment: cfg.experiment.name().to_owned(),
                optimizer: cell.method.name().to_owned(),
                representation: cell.repr.name().to_owned(),
                repetition: cell.repetition,
                target_id: cell.target_id(),
                errors: None,
                mean_norm_error: None,
                audio_mae: None,
                stoi: None,
                n_evals: 0,
                elapsed_s: 0.0,
                stop_reason: FAILED.to_owned(),
            };
            match run_cell(cfg, cell) {
                Ok(o) => {
                    row.errors = o.errors;
                    row.mean_norm_error = o.mean_norm_error;
                    row.audio_mae = Some(o.audio_mae);
                    row.stoi = o.stoi;
                    row.n_evals = o.n_evals;
                    row.elapsed_s = o.elapsed_s;
                    row.stop_reason = o.stop_reason;
                    log::info!(
                        "{} {} {} {}: {} evals, {:.2}s",
                        row.experiment,
                        row.optimizer,
                        row.representation,
                        row.target_id,
                        row.n_evals,
                        row.elapsed_s
                    );
                }
                Err(e) => log::warn!(
                    "{} {} {} {}: {e}",
                    row.experiment,
                    row.optimizer,
                    row.representation,
                    row.target_id
                ),
            }
            row
        })
        .collect();
    log::info!("grid finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(ExperimentReport { rows })
}
