//! Panmictic two-population coevolution on the closed-form model.
//!
//! Each generation every parent slot is refilled by tournament selection and
//! Gaussian mutation, parents and offspring of both populations are evaluated
//! all-versus-all, and the best `population` individuals of each side
//! survive.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{toy_loss, ToyDiscriminator, ToyGenerator, ToyTarget};
use crate::error::{Error, Result};

/// How a generator's losses against the discriminator population are
/// collapsed into one fitness value (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimpleCoevConfig {
    pub population: usize,
    pub generations: usize,
    pub step: f64,
    pub tournament: usize,
    pub generator_fitness: Aggregate,
    pub evolve_generators: bool,
    pub evolve_discriminators: bool,
}

impl Default for SimpleCoevConfig {
    fn default() -> Self {
        Self {
            population: 10,
            generations: 100,
            step: 1.0,
            tournament: 2,
            generator_fitness: Aggregate::WorstCase,
            evolve_generators: true,
            evolve_discriminators: true,
        }
    }
}

impl SimpleCoevConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::config("coevolution.population", "must be at least 1"));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(Error::config("coevolution.tournament", "must be in 1..=population"));
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(Error::config("coevolution.step", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoevOutcome {
    pub generators: Vec<ToyGenerator>,
    pub discriminators: Vec<ToyDiscriminator>,
    pub best_generator: ToyGenerator,
    pub best_discriminator: ToyDiscriminator,
    /// Number of `toy_loss` evaluations performed.
    pub evaluations: u64,
}

struct Fitness {
    generators: Vec<f64>,
    discriminators: Vec<f64>,
}

fn evaluate(
    target: &ToyTarget,
    gens: &[ToyGenerator],
    discs: &[ToyDiscriminator],
    agg: Aggregate,
    evaluations: &mut u64,
) -> Fitness {
    let mut generators = vec![0.0; gens.len()];
    let mut col_sum = vec![0.0; discs.len()];
    // A population of clones (the frozen-generator experiments) needs one row.
    let distinct = if gens.windows(2).all(|w| w[0] == w[1]) { 1 } else { gens.len() };
    let mut row = vec![0.0; discs.len()];
    for (i, g) in gens.iter().enumerate() {
        if i < distinct {
            for (r, d) in row.iter_mut().zip(discs) {
                *r = toy_loss(target, g, d);
            }
        }
        generators[i] = match agg {
            Aggregate::Mean => row.iter().sum::<f64>() / discs.len() as f64,
            Aggregate::WorstCase => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        for (c, l) in col_sum.iter_mut().zip(&row) {
            *c += l;
        }
    }
    *evaluations += (gens.len() * discs.len()) as u64;
    // Discriminators maximize the loss; store the negated mean so lower is better.
    let discriminators = col_sum.iter().map(|s| -s / gens.len() as f64).collect();
    Fitness {
        generators,
        discriminators,
    }
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    index::sample(rng, fitness.len(), size)
        .into_iter()
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
        .expect("tournament size is at least 1")
}

fn survivors<T: Clone>(pool: &[T], fitness: &[f64], n: usize) -> Vec<T> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    order.into_iter().take(n).map(|i| pool[i].clone()).collect()
}

/// Runs the coevolutionary loop from the given initial populations.
pub fn run_simple_coevolution<R: Rng + ?Sized>(
    target: &ToyTarget,
    mut gens: Vec<ToyGenerator>,
    mut discs: Vec<ToyDiscriminator>,
    cfg: &SimpleCoevConfig,
    rng: &mut R,
) -> Result<CoevOutcome> {
    cfg.validate()?;
    if gens.len() != cfg.population || discs.len() != cfg.population {
        return Err(Error::domain(format!(
            "expected {} generators and discriminators, got {} and {}",
            cfg.population,
            gens.len(),
            discs.len()
        )));
    }
    let n = cfg.population;
    let mut evaluations = 0;

    for _ in 0..cfg.generations {
        let fit = evaluate(target, &gens, &discs, cfg.generator_fitness, &mut evaluations);

        let mut gen_pool = gens.clone();
        if cfg.evolve_generators {
            for _ in 0..n {
                let p = tournament(&fit.generators, cfg.tournament, rng);
                gen_pool.push(gens[p].mutated(cfg.step, rng));
            }
        }
        let mut disc_pool = discs.clone();
        if cfg.evolve_discriminators {
            for _ in 0..n {
                let p = tournament(&fit.discriminators, cfg.tournament, rng);
                disc_pool.push(discs[p].mutated(cfg.step, rng));
            }
        }

        let pool_fit = evaluate(
            target,
            &gen_pool,
            &disc_pool,
            cfg.generator_fitness,
            &mut evaluations,
        );
        gens = survivors(&gen_pool, &pool_fit.generators, n);
        discs = survivors(&disc_pool, &pool_fit.discriminators, n);
    }

    let fit = evaluate(target, &gens, &discs, cfg.generator_fitness, &mut evaluations);
    let best_generator = gens[argmin(&fit.generators)];
    let best_discriminator = discs[argmin(&fit.discriminators)];
    Ok(CoevOutcome {
        generators: gens,
        discriminators: discs,
        best_generator,
        best_discriminator,
        evaluations,
    })
}
