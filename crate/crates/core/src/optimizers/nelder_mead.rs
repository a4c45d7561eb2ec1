//! Nelder-Mead simplex search with proposals clamped to the box.

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tracker::Tracker;
use super::{Bounds, StopDecision, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmParams {
    /// Initial edge length relative to the box width.
    pub initial_step: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    /// Simplex diameter below which the search counts as converged.
    pub x_tol: f64,
}

impl Default for NmParams {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            alpha: 1.0,
            gamma: 2.0,
            rho: 0.5,
            sigma: 0.5,
            x_tol: 1e-10,
        }
    }
}

/// `x0` plus one step per axis; a step that would leave the box goes the other way.
pub(crate) fn initial_simplex(x0: &[f64], step: f64, bounds: &Bounds) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let h = step * bounds.width(i);
        let mut v = x0.to_vec();
        v[i] = if x0[i] + h <= bounds.upper()[i] {
            x0[i] + h
        } else {
            x0[i] - h
        };
        v[i] = v[i].clamp(bounds.lower()[i], bounds.upper()[i]);
        simplex.push(v);
    }
    simplex
}

fn toward(from: &[f64], to: &[f64], t: f64, bounds: &Bounds) -> Vec<f64> {
    let mut x: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect();
    bounds.clamp(&mut x);
    x
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

pub(crate) fn run(t: &mut Tracker, x0: Vec<f64>, p: &NmParams) -> Result<StopReason> {
    let bounds = t.bounds;
    let d = bounds.dim();
    let mut simplex = initial_simplex(&x0, p.initial_step, bounds);
    let Some(f0) = t.eval(&x0) else {
        return Ok(StopReason::Budget);
    };
    if let StopDecision::Stop(r) = t.end_iteration() {
        return Ok(r);
    }
    let mut f = vec![f0];
    f.extend(t.eval_batch(&simplex[1..]));
    simplex.truncate(f.len());

    loop {
        if let StopDecision::Stop(r) = t.end_iteration() {
            return Ok(r);
        }
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        f = order.iter().map(|&i| f[i]).collect();
        if diameter(&simplex) < p.x_tol {
            return Ok(StopReason::Stalled);
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let xr = toward(&centroid, &worst, -p.alpha, bounds);
        let Some(fr) = t.eval(&xr) else { continue };

        if fr < f[0] {
            let xe = toward(&centroid, &xr, p.gamma, bounds);
            match t.eval(&xe) {
                Some(fe) if fe < fr => {
                    simplex[d] = xe;
                    f[d] = fe;
                }
                _ => {
                    simplex[d] = xr;
                    f[d] = fr;
                }
            }
            continue;
        }
        if fr < f[d - 1] {
            simplex[d] = xr;
            f[d] = fr;
            continue;
        }
        let (xc, limit) = if fr < f[d] {
            (toward(&centroid, &xr, p.rho, bounds), fr)
        } else {
            (toward(&centroid, &worst, p.rho, bounds), f[d])
        };
        let Some(fc) = t.eval(&xc) else { continue };
        if fc < limit {
            simplex[d] = xc;
            f[d] = fc;
            continue;
        }
        let shrunk: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|v| toward(&simplex[0], v, p.sigma, bounds))
            .collect();
        let fs = t.eval_batch(&shrunk);
        for (k, c) in fs.into_iter().enumerate() {
            simplex[k + 1] = shrunk[k].clone();
            f[k + 1] = c;
        }
    }
}
