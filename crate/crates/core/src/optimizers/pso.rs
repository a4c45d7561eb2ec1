//! Global-best particle swarm.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tracker::Tracker;
use super::{StopDecision, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub particles: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
    /// Initial velocities are uniform in `±initial_velocity * width`.
    pub initial_velocity: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            particles: 10,
            c1: 0.5,
            c2: 0.3,
            inertia: 0.9,
            initial_velocity: 0.1,
        }
    }
}

struct Swarm {
    x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pbest: Vec<Vec<f64>>,
    pbest_cost: Vec<f64>,
    gbest: Vec<f64>,
    gbest_cost: f64,
}

impl Swarm {
    fn absorb(&mut self, costs: &[f64]) {
        for (i, &c) in costs.iter().enumerate() {
            if c < self.pbest_cost[i] {
                self.pbest_cost[i] = c;
                self.pbest[i] = self.x[i].clone();
            }
            if c < self.gbest_cost {
                self.gbest_cost = c;
                self.gbest = self.x[i].clone();
            }
        }
    }
}

pub(crate) fn run(t: &mut Tracker, x0: Vec<f64>, params: &PsoParams, mut rng: ChaCha8Rng) -> Result<StopReason> {
    let bounds = t.bounds;
    let d = bounds.dim();
    let n = params.particles.max(1);
    let mut x = vec![x0];
    x.extend((1..n).map(|_| bounds.sample(&mut rng)));
    let v: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|j| params.initial_velocity * bounds.width(j) * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    let mut swarm = Swarm {
        pbest: x.clone(),
        x,
        v,
        pbest_cost: vec![f64::INFINITY; n],
        gbest: Vec::new(),
        gbest_cost: f64::INFINITY,
    };
    let Some(seed_cost) = t.eval(&swarm.x[0]) else {
        return Ok(StopReason::Budget);
    };
    if let StopDecision::Stop(r) = t.end_iteration() {
        return Ok(r);
    }
    let mut costs = vec![seed_cost];
    costs.extend(t.eval_batch(&swarm.x[1..]));
    swarm.absorb(&costs);

    loop {
        if let StopDecision::Stop(r) = t.end_iteration() {
            return Ok(r);
        }
        step(&mut swarm, params, bounds, &mut rng);
        let costs = t.eval_batch(&swarm.x);
        swarm.absorb(&costs);
    }
}

fn step(s: &mut Swarm, p: &PsoParams, bounds: &super::Bounds, rng: &mut ChaCha8Rng) {
    for i in 0..s.x.len() {
        for j in 0..s.x[i].len() {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let v =
                p.inertia * s.v[i][j] + p.c1 * r1 * (s.pbest[i][j] - s.x[i][j]) + p.c2 * r2 * (s.gbest[j] - s.x[i][j]);
            let mut x = s.x[i][j] + v;
            let mut v = v;
            let (lo, hi) = (bounds.lower()[j], bounds.upper()[j]);
            if x < lo || x > hi {
                x = x.clamp(lo, hi);
                v = 0.0;
            }
            s.x[i][j] = x;
            s.v[i][j] = v;
        }
    }
}
