//! Binary-coded genetic algorithm with tournament selection and one elite.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tracker::Tracker;
use super::{Bounds, StopDecision, StopReason};

pub const BITS_PER_GENE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub crossover_rate: f64,
    /// Independent flip probability of every bit.
    pub mutation_rate: f64,
    pub tournament: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 10,
            crossover_rate: 0.9,
            mutation_rate: 0.03,
            tournament: 2,
        }
    }
}

pub fn chromosome_bits(dim: usize) -> usize {
    dim * BITS_PER_GENE
}

pub fn decode_gene(gene: u32, lo: f64, hi: f64) -> f64 {
    let t = f64::from(gene) / f64::from(u32::MAX);
    lo * (1.0 - t) + hi * t
}

pub fn encode_gene(x: f64, lo: f64, hi: f64) -> u32 {
    (((x - lo) / (hi - lo)).clamp(0.0, 1.0) * f64::from(u32::MAX)).round() as u32
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<u32>,
    cost: f64,
}

fn decode(genes: &[u32], bounds: &Bounds) -> Vec<f64> {
    genes
        .iter()
        .enumerate()
        .map(|(i, &g)| decode_gene(g, bounds.lower()[i], bounds.upper()[i]))
        .collect()
}

fn tournament<'p>(pop: &'p [Individual], size: usize, rng: &mut ChaCha8Rng) -> &'p Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.cost < best.cost {
            best = c;
        }
    }
    best
}

fn bit(genes: &[u32], i: usize) -> bool {
    genes[i / BITS_PER_GENE] >> (i % BITS_PER_GENE) & 1 == 1
}

fn set_bit(genes: &mut [u32], i: usize, v: bool) {
    let mask = 1u32 << (i % BITS_PER_GENE);
    if v {
        genes[i / BITS_PER_GENE] |= mask;
    } else {
        genes[i / BITS_PER_GENE] &= !mask;
    }
}

/// Single-point crossover on the concatenated bit string.
fn crossover(a: &[u32], b: &[u32], point: usize) -> (Vec<u32>, Vec<u32>) {
    let (mut c, mut d) = (a.to_vec(), b.to_vec());
    for i in point..a.len() * BITS_PER_GENE {
        set_bit(&mut c, i, bit(b, i));
        set_bit(&mut d, i, bit(a, i));
    }
    (c, d)
}

fn mutate(genes: &mut [u32], rate: f64, rng: &mut ChaCha8Rng) {
    if rate <= 0.0 {
        return;
    }
    for g in genes.iter_mut() {
        for b in 0..BITS_PER_GENE {
            if rng.random::<f64>() < rate {
                *g ^= 1 << b;
            }
        }
    }
}

fn breed(
    pop: &[Individual],
    params: &GaParams,
    bounds: &Bounds,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(Vec<u32>, Vec<f64>)> {
    let n_bits = chromosome_bits(bounds.dim());
    let mut children = Vec::with_capacity(n + 1);
    while children.len() < n {
        let a = &tournament(pop, params.tournament, rng).genes;
        let b = &tournament(pop, params.tournament, rng).genes;
        let (mut c, mut d) = if n_bits > 1 && rng.random::<f64>() < params.crossover_rate {
            crossover(a, b, rng.random_range(1..n_bits))
        } else {
            (a.clone(), b.clone())
        };
        mutate(&mut c, params.mutation_rate, rng);
        mutate(&mut d, params.mutation_rate, rng);
        children.push(c);
        children.push(d);
    }
    children.truncate(n);
    children
        .into_iter()
        .map(|g| {
            let x = decode(&g, bounds);
            (g, x)
        })
        .collect()
}

pub(crate) fn run(t: &mut Tracker, x0: Vec<f64>, params: &GaParams, mut rng: ChaCha8Rng) -> Result<StopReason> {
    let Some(seed_cost) = t.eval(&x0) else {
        return Ok(StopReason::Budget);
    };
    if let StopDecision::Stop(r) = t.end_iteration() {
        return Ok(r);
    }
    let mut pop = initial_population(t, &x0, seed_cost, params, &mut rng);
    loop {
        if let StopDecision::Stop(r) = t.end_iteration() {
            return Ok(r);
        }
        pop = generation(t, &pop, params, &mut rng);
    }
}

fn initial_population(
    t: &mut Tracker,
    x0: &[f64],
    seed_cost: f64,
    params: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Individual> {
    let bounds = t.bounds;
    // the seed individual was evaluated at its exact coordinates, not their decoded copy
    let mut pop = vec![Individual {
        genes: x0
            .iter()
            .enumerate()
            .map(|(i, &v)| encode_gene(v, bounds.lower()[i], bounds.upper()[i]))
            .collect(),
        cost: seed_cost,
    }];
    let genes: Vec<Vec<u32>> = (1..params.population.max(2))
        .map(|_| (0..bounds.dim()).map(|_| rng.random()).collect())
        .collect();
    let xs: Vec<Vec<f64>> = genes.iter().map(|g| decode(g, bounds)).collect();
    let costs = t.eval_batch(&xs);
    pop.extend(
        genes
            .into_iter()
            .zip(costs)
            .map(|(genes, cost)| Individual { genes, cost }),
    );
    pop
}

fn generation(t: &mut Tracker, pop: &[Individual], params: &GaParams, rng: &mut ChaCha8Rng) -> Vec<Individual> {
    let elite = pop
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("non-empty population")
        .clone();
    let children = breed(pop, params, t.bounds, pop.len() - 1, rng);
    let xs: Vec<Vec<f64>> = children.iter().map(|c| c.1.clone()).collect();
    let costs = t.eval_batch(&xs);
    let mut next = vec![elite];
    next.extend(
        children
            .into_iter()
            .zip(costs)
            .map(|((genes, _), cost)| Individual { genes, cost }),
    );
    next
}
