//! (mu/mu_w, lambda) CMA-ES with rank-one and rank-mu covariance updates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tracker::Tracker;
use super::{Bounds, StopDecision, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaesParams {
    /// Initial step size relative to the box width.
    pub sigma0: f64,
    /// Offspring per generation; `None` gives `4 + floor(3 ln d)`.
    pub lambda: Option<usize>,
    pub max_resamples: usize,
}

impl Default for CmaesParams {
    fn default() -> Self {
        Self {
            sigma0: 0.3,
            lambda: None,
            max_resamples: 100,
        }
    }
}

pub fn default_lambda(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

/// Strategy state, advanced by alternating [`CmaesState::ask`] and [`CmaesState::tell`].
#[derive(Debug, Clone)]
pub struct CmaesState {
    n: usize,
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DVector<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    generation: usize,
}

impl CmaesState {
    /// `mean` and `sigma` are in the unit-scaled coordinates of the caller.
    pub fn new(mean: &[f64], sigma: f64, lambda: usize) -> Self {
        let n = mean.len();
        let nf = n as f64;
        let lambda = lambda.max(2);
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            n,
            lambda,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: DVector::from_column_slice(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            b: DMatrix::identity(n, n),
            d: DVector::from_element(n, 1.0),
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            generation: 0,
        }
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Draws `lambda` candidates inside the unit box, resampling up to `max_resamples`
    /// times before clamping.
    pub fn ask(&self, rng: &mut ChaCha8Rng, max_resamples: usize) -> Vec<Vec<f64>> {
        (0..self.lambda)
            .map(|_| {
                let mut x = self.draw(rng);
                for _ in 0..max_resamples {
                    if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                        break;
                    }
                    x = self.draw(rng);
                }
                x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                x
            })
            .collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &self.b * z.component_mul(&self.d);
        (&self.mean + self.sigma * y).iter().copied().collect()
    }

    /// Updates the distribution from evaluated candidates.
    pub fn tell(&mut self, xs: &[Vec<f64>], costs: &[f64]) {
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
        let mu = self.mu.min(order.len());
        let n = self.n as f64;

        // steps of the (possibly clamped) selected points
        let ys: Vec<DVector<f64>> = order[..mu]
            .iter()
            .map(|&i| (DVector::from_column_slice(&xs[i]) - &self.mean) / self.sigma)
            .collect();
        let wsum: f64 = self.weights[..mu].iter().sum();
        let mut y_w = DVector::zeros(self.n);
        for (y, w) in ys.iter().zip(&self.weights) {
            y_w += y * (w / wsum);
        }
        self.mean += &y_w * self.sigma;

        let inv_sqrt = &self.b * DMatrix::from_diagonal(&self.d.map(|v| 1.0 / v)) * self.b.transpose();
        self.ps = &self.ps * (1.0 - self.cs) + (&inv_sqrt * &y_w) * (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
        self.generation += 1;
        let ps_norm = self.ps.norm();
        let hsig_bound = (1.4 + 2.0 / (n + 1.0)) * self.chi_n;
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powi(2 * self.generation as i32)).sqrt() < hsig_bound;
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        self.pc = &self.pc * (1.0 - self.cc) + &y_w * (hsig_f * (self.cc * (2.0 - self.cc) * self.mueff).sqrt());

        let mut rank_mu = DMatrix::zeros(self.n, self.n);
        for (y, w) in ys.iter().zip(&self.weights) {
            rank_mu += y * y.transpose() * (w / wsum);
        }
        let old = (1.0 - self.c1 - self.cmu) + (1.0 - hsig_f) * self.c1 * self.cc * (2.0 - self.cc);
        self.cov = &self.cov * old + &self.pc * self.pc.transpose() * self.c1 + rank_mu * self.cmu;
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;

        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();
        self.sigma = self.sigma.clamp(1e-12, 1e3);

        let eig = SymmetricEigen::new(self.cov.clone());
        let floor = 1e-20 * eig.eigenvalues.max().max(1e-300);
        let vals = eig.eigenvalues.map(|v| v.max(floor));
        self.b = eig.eigenvectors;
        self.d = vals.map(f64::sqrt);
        self.cov = &self.b * DMatrix::from_diagonal(&vals) * self.b.transpose();
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
    }
}

fn to_unit(x: &[f64], b: &Bounds) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| (v - b.lower()[i]) / b.width(i))
        .collect()
}

fn from_unit(u: &[f64], b: &Bounds) -> Vec<f64> {
    u.iter()
        .enumerate()
        .map(|(i, v)| (b.lower()[i] * (1.0 - v) + b.upper()[i] * v).clamp(b.lower()[i], b.upper()[i]))
        .collect()
}

pub(crate) fn run(t: &mut Tracker, x0: Vec<f64>, params: &CmaesParams, mut rng: ChaCha8Rng) -> Result<StopReason> {
    let bounds = t.bounds;
    let lambda = params.lambda.unwrap_or_else(|| default_lambda(bounds.dim()));
    let mut state = CmaesState::new(&to_unit(&x0, bounds), params.sigma0, lambda);
    t.eval_batch(&[x0]);
    loop {
        if let StopDecision::Stop(r) = t.end_iteration() {
            return Ok(r);
        }
        let unit = state.ask(&mut rng, params.max_resamples);
        let xs: Vec<Vec<f64>> = unit.iter().map(|u| from_unit(u, bounds)).collect();
        let costs = t.eval_batch(&xs);
        if costs.len() == xs.len() {
            state.tell(&unit, &costs);
        }
    }
}
