//! Trust-region reflective least squares with a finite-difference Jacobian.
//!
//! Each iteration builds the Jacobian, fixes coordinates held at a bound by the
//! gradient, solves the trust-region model on the span of the gradient and
//! Gauss-Newton directions, and takes either the reflected or the truncated version
//! of the step when it leaves the box.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tracker::{ResidualEval, Tracker};
use super::{Bounds, StopDecision, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrfParams {
    /// Finite-difference step relative to the box width.
    pub fd_step: f64,
    /// Initial trust radius relative to the box diagonal.
    pub initial_radius: f64,
    pub ftol: f64,
    pub xtol: f64,
    pub gtol: f64,
}

impl Default for TrfParams {
    fn default() -> Self {
        Self {
            fd_step: 1e-3,
            initial_radius: 0.5,
            ftol: 1e-8,
            xtol: 1e-8,
            gtol: 1e-8,
        }
    }
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Minimizes `g'a + a'Ba/2` subject to `|a| <= radius` for a small symmetric `B`.
pub(crate) fn solve_trust_region(b: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(b.clone());
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let c = q.transpose() * g;
    let step = |shift: f64| -> DVector<f64> {
        let coef = DVector::from_fn(c.len(), |i, _| {
            let denom = lam[i] + shift;
            if denom.abs() > 0.0 {
                -c[i] / denom
            } else {
                0.0
            }
        });
        q * coef
    };
    let lam_min = lam.min();
    let scale = lam.amax().max(1e-300);
    if lam_min > 1e-14 * scale {
        let a = step(0.0);
        if a.norm() <= radius {
            return a;
        }
    }
    let lo = (-lam_min).max(0.0) + 1e-14 * scale.max(1.0);
    let a_lo = step(lo);
    if a_lo.norm() < radius {
        // hard case: move along the lowest-curvature direction to the boundary
        let imin = lam.imin();
        let dir = q.column(imin).into_owned();
        let base = a_lo;
        let bd = base.dot(&dir);
        let tau = -bd + (bd * bd + radius * radius - base.norm_squared()).max(0.0).sqrt();
        return base + dir * tau;
    }
    let (mut lo, mut hi) = (lo, (-lam_min).max(0.0) + c.norm() / radius + 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if step(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    step(hi)
}

struct Linearization {
    j: DMatrix<f64>,
    g: DVector<f64>,
}

fn model(lin: &Linearization, p: &DVector<f64>) -> f64 {
    lin.g.dot(p) + 0.5 * (&lin.j * p).norm_squared()
}

/// Largest `t` in `[0, 1]` keeping `x + t p` inside the box, and the components that bind.
fn max_fraction(x: &[f64], p: &[f64], bounds: &Bounds) -> (f64, Vec<usize>) {
    let mut t = 1.0;
    let mut hits = Vec::new();
    for i in 0..x.len() {
        let lim = if p[i] > 0.0 {
            (bounds.upper()[i] - x[i]) / p[i]
        } else if p[i] < 0.0 {
            (bounds.lower()[i] - x[i]) / p[i]
        } else {
            continue;
        };
        if lim < t {
            t = lim.max(0.0);
            hits.clear();
            hits.push(i);
        } else if lim == t && t < 1.0 {
            hits.push(i);
        }
    }
    (t, hits)
}

fn advance(x: &[f64], p: &[f64], t: f64, hits: &[usize], bounds: &Bounds) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + t * b).collect();
    for &i in hits {
        y[i] = if p[i] > 0.0 {
            bounds.upper()[i]
        } else {
            bounds.lower()[i]
        };
    }
    bounds.clamp(&mut y);
    y
}

/// Candidate points for step `p`: the plain step if feasible, otherwise the better of
/// its reflection and its truncation by model value.
fn feasible_step(x: &[f64], p: &DVector<f64>, lin: &Linearization, bounds: &Bounds) -> Vec<f64> {
    let p: Vec<f64> = p.iter().copied().collect();
    let (t, hits) = max_fraction(x, &p, bounds);
    if t >= 1.0 {
        let mut y: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        bounds.clamp(&mut y);
        return y;
    }
    let truncated = advance(x, &p, t, &hits, bounds);
    let mut reflected_dir = p.clone();
    for &i in &hits {
        reflected_dir[i] = -reflected_dir[i];
    }
    let rest: Vec<f64> = reflected_dir.iter().map(|v| v * (1.0 - t)).collect();
    let (t2, hits2) = max_fraction(&truncated, &rest, bounds);
    let reflected = advance(&truncated, &rest, t2, &hits2, bounds);

    let delta = |y: &[f64]| DVector::from_iterator(x.len(), y.iter().zip(x).map(|(a, b)| a - b));
    if model(lin, &delta(&reflected)) < model(lin, &delta(&truncated)) {
        reflected
    } else {
        truncated
    }
}

pub(crate) fn run(t: &mut Tracker, x0: Vec<f64>, params: &TrfParams) -> Result<StopReason> {
    let bounds = t.bounds;
    let n = bounds.dim();
    let diag = (0..n).map(|i| bounds.width(i).powi(2)).sum::<f64>().sqrt();
    let mut radius = params.initial_radius * diag;

    let Some(ResidualEval { r, cost }) = t.eval_residuals_batch(std::slice::from_ref(&x0))?.pop() else {
        return Ok(StopReason::Budget);
    };
    t.consider(&x0, cost);
    let mut x = x0;
    let mut r = DVector::from_vec(r);
    if let StopDecision::Stop(reason) = t.end_iteration() {
        return Ok(reason);
    }

    loop {
        // forward differences, backward at the upper bound
        let probes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let h = params.fd_step * bounds.width(i);
                let mut y = x.clone();
                y[i] = if x[i] + h <= bounds.upper()[i] {
                    x[i] + h
                } else {
                    x[i] - h
                };
                y
            })
            .collect();
        let evals = t.eval_residuals_batch(&probes)?;
        if evals.len() < n {
            return Ok(StopReason::Budget);
        }
        let mut j = DMatrix::zeros(r.len(), n);
        for (i, e) in evals.iter().enumerate() {
            let h = probes[i][i] - x[i];
            for k in 0..r.len() {
                j[(k, i)] = (e.r[k] - r[k]) / h;
            }
        }
        let g_full = j.transpose() * &r;

        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lo = x[i] <= bounds.lower()[i] && g_full[i] > 0.0;
                let at_hi = x[i] >= bounds.upper()[i] && g_full[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let g_norm = free.iter().map(|&i| g_full[i].abs()).fold(0.0, f64::max);
        if free.is_empty() || g_norm < params.gtol {
            return Ok(StopReason::Stalled);
        }

        let jf = DMatrix::from_fn(r.len(), free.len(), |k, c| j[(k, free[c])]);
        let gf = jf.transpose() * &r;
        let mut basis = vec![&gf / gf.norm()];
        let gn = jf
            .clone()
            .svd(true, true)
            .solve(&(-&r), 1e-12)
            .unwrap_or_else(|_| DVector::zeros(free.len()));
        let ortho = &gn - &basis[0] * basis[0].dot(&gn);
        if ortho.norm() > 1e-10 * gn.norm().max(1e-300) && ortho.norm() > 0.0 {
            basis.push(&ortho / ortho.norm());
        }
        let s = DMatrix::from_columns(&basis);
        let js = &jf * &s;
        let b_sub = js.transpose() * &js;
        let g_sub = s.transpose() * &gf;

        let lin = Linearization {
            j: j.clone(),
            g: g_full.clone(),
        };
        let cost = half_sq(r.as_slice());
        loop {
            let a = solve_trust_region(&b_sub, &g_sub, radius);
            let pf = &s * a;
            let mut p = DVector::zeros(n);
            for (c, &i) in free.iter().enumerate() {
                p[i] = pf[c];
            }
            let y = feasible_step(&x, &p, &lin, bounds);
            let step = DVector::from_iterator(n, y.iter().zip(&x).map(|(a, b)| a - b));
            let step_norm = step.norm();
            let predicted = -model(&lin, &step);
            if step_norm == 0.0 || predicted <= 0.0 {
                radius *= 0.25;
                if radius < 1e-12 * diag {
                    return Ok(StopReason::Stalled);
                }
                continue;
            }
            let Some(e) = t.eval_residuals_batch(std::slice::from_ref(&y))?.pop() else {
                return Ok(StopReason::Budget);
            };
            let new_cost = half_sq(&e.r);
            let actual = cost - new_cost;
            let rho = actual / predicted;
            if rho < 0.25 {
                radius = 0.25 * step_norm;
            } else if rho > 0.75 && step_norm > 0.95 * radius {
                radius *= 2.0;
            }
            if actual > 0.0 {
                let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let converged =
                    (actual < params.ftol * cost && rho > 0.25) || step_norm < params.xtol * (params.xtol + x_norm);
                t.consider(&y, e.cost);
                x = y;
                r = DVector::from_vec(e.r);
                if let StopDecision::Stop(reason) = t.end_iteration() {
                    return Ok(reason);
                }
                if converged {
                    return Ok(StopReason::Stalled);
                }
                break;
            }
            if t.remaining() == 0 {
                t.end_iteration();
                return Ok(StopReason::Budget);
            }
            if radius < 1e-12 * diag {
                return Ok(StopReason::Stalled);
            }
        }
    }
}
