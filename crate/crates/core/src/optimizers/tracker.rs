use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{check_stop, mean_abs, Bounds, OptimizationResult, Problem, StopCriteria, StopDecision, StopReason};

/// Counts evaluations, enforces the budget and keeps the best point seen.
pub(crate) struct Tracker<'a> {
    problem: &'a dyn Problem,
    pub bounds: &'a Bounds,
    stop: &'a StopCriteria,
    n_evals: usize,
    best_x: Vec<f64>,
    best_cost: f64,
    history: Vec<f64>,
    residual_len: Option<usize>,
    start: Instant,
}

/// Residual vector with its reported cost.
pub(crate) struct ResidualEval {
    pub r: Vec<f64>,
    pub cost: f64,
}

fn sanitize(c: f64) -> f64 {
    if c.is_nan() {
        f64::INFINITY
    } else {
        c
    }
}

impl<'a> Tracker<'a> {
    pub fn new(problem: &'a dyn Problem, bounds: &'a Bounds, stop: &'a StopCriteria) -> Self {
        Self {
            problem,
            bounds,
            stop,
            n_evals: 0,
            best_x: Vec::new(),
            best_cost: f64::INFINITY,
            history: Vec::new(),
            residual_len: None,
            start: Instant::now(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.stop.max_evals.saturating_sub(self.n_evals)
    }

    fn record(&mut self, x: &[f64], cost: f64) {
        self.n_evals += 1;
        self.consider(x, cost);
    }

    /// Offers an already evaluated point as the best-so-far.
    pub fn consider(&mut self, x: &[f64], cost: f64) {
        debug_assert!(self.bounds.contains(x), "infeasible candidate {x:?}");
        if cost < self.best_cost || self.best_x.is_empty() {
            self.best_cost = cost;
            self.best_x = x.to_vec();
        }
    }

    /// Evaluates as many of `xs` as the budget allows, in parallel, in order.
    pub fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        let n = xs.len().min(self.remaining());
        let problem = self.problem;
        let costs: Vec<f64> = xs[..n].par_iter().map(|x| sanitize(problem.cost(x))).collect();
        for (x, &c) in xs[..n].iter().zip(&costs) {
            self.record(x, c);
        }
        costs
    }

    pub fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.remaining() == 0 {
            return None;
        }
        let c = sanitize(self.problem.cost(x));
        self.record(x, c);
        Some(c)
    }

    /// Residual evaluations; without problem residuals the scalar `sqrt(cost)` is used
    /// and the cost itself is reported. The points are counted but not ranked; the
    /// caller offers accepted iterates through [`Tracker::consider`].
    pub fn eval_residuals_batch(&mut self, xs: &[Vec<f64>]) -> Result<Vec<ResidualEval>> {
        let n = xs.len().min(self.remaining());
        let problem = self.problem;
        let evals: Vec<ResidualEval> = xs[..n]
            .par_iter()
            .map(|x| match problem.residuals(x) {
                Some(r) => {
                    let cost = sanitize(mean_abs(&r));
                    ResidualEval { r, cost }
                }
                None => {
                    let cost = sanitize(problem.cost(x));
                    ResidualEval {
                        r: vec![cost.max(0.0).sqrt()],
                        cost,
                    }
                }
            })
            .collect();
        for (x, e) in xs[..n].iter().zip(&evals) {
            let expected = *self.residual_len.get_or_insert(e.r.len());
            if e.r.len() != expected {
                return Err(Error::LengthMismatch {
                    left: expected,
                    right: e.r.len(),
                });
            }
            debug_assert!(self.bounds.contains(x), "infeasible candidate {x:?}");
            self.n_evals += 1;
        }
        Ok(evals)
    }

    /// Closes an iteration and applies the stop rule.
    pub fn end_iteration(&mut self) -> StopDecision {
        self.history.push(self.best_cost);
        check_stop(&self.history, self.n_evals, self.stop)
    }

    pub fn finish(mut self, reason: StopReason) -> OptimizationResult {
        if self.history.last() != Some(&self.best_cost) {
            self.history.push(self.best_cost);
        }
        OptimizationResult {
            best_x: self.best_x,
            best_cost: self.best_cost,
            n_evals: self.n_evals,
            n_iterations: self.history.len(),
            elapsed_s: self.start.elapsed().as_secs_f64(),
            stop_reason: reason,
            history: self.history,
        }
    }
}
