//! Bounded black-box minimizers sharing one stop rule and result type.
//!
//! Every method evaluates the configured initial point first, so a run with a budget
//! of one evaluation returns exactly that point.

mod cmaes;
mod ga;
mod nelder_mead;
mod pso;
mod tracker;
mod trf;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, hash_label, stream_rng};

pub use cmaes::{CmaesParams, CmaesState};
pub use ga::{chromosome_bits, decode_gene, encode_gene, GaParams};
pub use nelder_mead::NmParams;
pub use pso::PsoParams;
pub use trf::TrfParams;

use tracker::Tracker;

/// A function to minimize over a box.
pub trait Problem: Sync {
    fn dim(&self) -> usize;

    fn cost(&self, x: &[f64]) -> f64;

    /// Residual vector for least-squares methods; `None` makes them minimize the
    /// scalar residual `sqrt(cost)`.
    fn residuals(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Adapts a closure into a [`Problem`].
pub struct FnProblem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnProblem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Problem for FnProblem<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn cost(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Residual-defined problem whose scalar cost is the mean absolute residual.
pub struct ResidualProblem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> ResidualProblem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> Problem for ResidualProblem<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn cost(&self, x: &[f64]) -> f64 {
        mean_abs(&(self.f)(x))
    }
    fn residuals(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some((self.f)(x))
    }
}

pub(crate) fn mean_abs(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!("component {i}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim]).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub(crate) fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    pub target_cost: f64,
    pub patience_loops: usize,
    pub relative_tol: f64,
    pub max_evals: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            target_cost: 1e-4,
            patience_loops: 20,
            relative_tol: 1e-6,
            max_evals: 2000,
        }
    }
}

impl StopCriteria {
    pub fn with_budget(max_evals: usize) -> Self {
        Self {
            max_evals,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_cost > 0.0) {
            return Err(Error::InvalidConfig("target_cost must be positive".into()));
        }
        if self.patience_loops == 0 || self.max_evals == 0 {
            return Err(Error::InvalidConfig(
                "patience_loops and max_evals must be at least 1".into(),
            ));
        }
        if !(self.relative_tol >= 0.0) {
            return Err(Error::InvalidConfig("relative_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Target,
    Stalled,
    Budget,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Target => "target",
            StopReason::Stalled => "stalled",
            StopReason::Budget => "budget",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

/// Applies the stop rule to a best-so-far history after `n_evals` evaluations.
///
/// Target is checked before budget, and budget before stagnation. The run has
/// stalled when the last `patience_loops` iterations improved the best cost by no
/// more than `relative_tol` relative to where they started.
pub fn check_stop(history: &[f64], n_evals: usize, stop: &StopCriteria) -> StopDecision {
    let Some(&last) = history.last() else {
        return StopDecision::Continue;
    };
    if last < stop.target_cost {
        return StopDecision::Stop(StopReason::Target);
    }
    if n_evals >= stop.max_evals {
        return StopDecision::Stop(StopReason::Budget);
    }
    if history.len() > stop.patience_loops {
        let before = history[history.len() - 1 - stop.patience_loops];
        if before - last <= stop.relative_tol * before.abs() {
            return StopDecision::Stop(StopReason::Stalled);
        }
    }
    StopDecision::Continue
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ga,
    Pso,
    Cmaes,
    Nm,
    Trf,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ga, Method::Pso, Method::Cmaes, Method::Nm, Method::Trf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ga => "ga",
            Method::Pso => "pso",
            Method::Cmaes => "cmaes",
            Method::Nm => "nm",
            Method::Trf => "trf",
        }
    }

    pub fn supports_dim(self, dim: usize) -> bool {
        dim >= 1 && !(self == Method::Cmaes && dim < 2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown optimizer `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub seed: u64,
    /// Starting point; drawn uniformly from the box when absent.
    pub initial: Option<Vec<f64>>,
    pub ga: GaParams,
    pub pso: PsoParams,
    pub cmaes: CmaesParams,
    pub nm: NmParams,
    pub trf: TrfParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Ga,
            seed: 0,
            initial: None,
            ga: GaParams::default(),
            pso: PsoParams::default(),
            cmaes: CmaesParams::default(),
            nm: NmParams::default(),
            trf: TrfParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            seed,
            ..Self::default()
        }
    }

    pub fn with_initial(mut self, x0: Vec<f64>) -> Self {
        self.initial = Some(x0);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_x: Vec<f64>,
    pub best_cost: f64,
    pub n_evals: usize,
    pub n_iterations: usize,
    pub elapsed_s: f64,
    pub stop_reason: StopReason,
    /// Best cost after each iteration; the first entry follows the initial evaluations.
    pub history: Vec<f64>,
}

const INIT_STREAM: u64 = 0;
const METHOD_STREAM: u64 = 1;

/// Minimizes `problem` over `bounds` with the configured method.
pub fn optimize(
    problem: &dyn Problem,
    bounds: &Bounds,
    cfg: &OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    let dim = problem.dim();
    if bounds.dim() != dim {
        return Err(Error::InvalidBounds(format!(
            "bounds have {} dimensions, problem has {dim}",
            bounds.dim()
        )));
    }
    if !cfg.method.supports_dim(dim) {
        return Err(Error::UnsupportedDimension {
            method: cfg.method.name(),
            dim,
        });
    }
    stop.validate()?;
    let x0 = match &cfg.initial {
        Some(x) if x.len() != dim => {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: dim,
            })
        }
        Some(x) if !bounds.contains(x) => {
            return Err(Error::InvalidConfig("initial point lies outside the bounds".into()))
        }
        Some(x) => x.clone(),
        None => bounds.sample(&mut stream_rng(cfg.seed, INIT_STREAM)),
    };
    let rng = stream_rng(derive_seed(cfg.seed, &[hash_label(cfg.method.name())]), METHOD_STREAM);
    let mut tracker = Tracker::new(problem, bounds, stop);
    let reason = match cfg.method {
        Method::Ga => ga::run(&mut tracker, x0, &cfg.ga, rng)?,
        Method::Pso => pso::run(&mut tracker, x0, &cfg.pso, rng)?,
        Method::Cmaes => cmaes::run(&mut tracker, x0, &cfg.cmaes, rng)?,
        Method::Nm => nelder_mead::run(&mut tracker, x0, &cfg.nm)?,
        Method::Trf => trf::run(&mut tracker, x0, &cfg.trf)?,
    };
    Ok(tracker.finish(reason))
}
