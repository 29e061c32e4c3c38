use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Counters, Individual, NeighborhoodState, Role, TrainConfig, LEARNING_RATE_MAX, LEARNING_RATE_MIN};
use crate::backend::{cell_rng, Backend, CellRng, PairLoss};
use crate::error::{Error, Result};
use crate::grid::GridCoord;

/// Losses of every generator (rows) against every discriminator (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<PairLoss>,
}

impl LossMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<PairLoss>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} entries do not form a nonempty {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> PairLoss {
        self.entries[i * self.cols + j]
    }
}

fn with_context(e: Error, what: String) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("{what}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{what}: {m}")),
        other => other,
    }
}

pub fn evaluate_all_pairs<B: Backend>(
    backend: &B,
    gens: &[Individual<B::Gen>],
    discs: &[Individual<B::Disc>],
    batch: &B::Batch,
    counters: &mut Counters,
) -> Result<LossMatrix> {
    let mut entries = Vec::with_capacity(gens.len() * discs.len());
    for (i, g) in gens.iter().enumerate() {
        for (j, d) in discs.iter().enumerate() {
            let l = backend
                .pair_loss(&g.params, &d.params, batch)
                .map_err(|e| with_context(e, format!("pair ({i},{j})")))?;
            counters.pairwise_evaluations += 1;
            entries.push(l);
        }
    }
    LossMatrix::from_entries(gens.len(), discs.len(), entries)
}

/// Generator fitness is its mean loss over its row, discriminator fitness
/// the mean of its own loss over its column. Both are minimized.
pub fn fitness_from_matrix(m: &LossMatrix) -> (Vec<f64>, Vec<f64>) {
    let gens = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j).generator).sum::<f64>() / m.cols as f64)
        .collect();
    let discs = (0..m.cols)
        .map(|j| (0..m.rows).map(|i| m.get(i, j).discriminator).sum::<f64>() / m.rows as f64)
        .collect();
    (gens, discs)
}

fn argmin(xs: &[f64]) -> usize {
    (0..xs.len())
        .min_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)))
        .expect("nonempty")
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len())
        .min_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)))
        .expect("nonempty")
}

/// Index of the fittest of `tau` distinct uniformly drawn contestants.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[f64], tau: usize, rng: &mut R) -> Result<usize> {
    if tau == 0 || tau > fitness.len() {
        return Err(Error::domain(format!(
            "tournament size {tau} for a population of {}",
            fitness.len()
        )));
    }
    Ok(index::sample(rng, fitness.len(), tau)
        .into_iter()
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
        .expect("tau >= 1"))
}

fn cached_fitness<P>(pop: &[Individual<P>]) -> Result<Vec<f64>> {
    pop.iter()
        .map(|i| i.fitness.ok_or_else(|| Error::domain("individual has no fitness")))
        .collect()
}

fn replace_worst_and_center<P: Clone>(pop: &mut [Individual<P>]) -> Result<()> {
    let f = cached_fitness(pop)?;
    let best = argmin(&f);
    let worst = argmax(&f);
    if worst != best {
        pop[worst] = pop[best].clone();
    }
    pop.swap(0, best);
    Ok(())
}

/// Overwrites the worst generator and discriminator with copies of the best
/// and moves the best of each role to index 0.
pub fn replace_and_center<G: Clone, D: Clone>(mut neigh: NeighborhoodState<G, D>) -> Result<NeighborhoodState<G, D>> {
    replace_worst_and_center(&mut neigh.generators)?;
    replace_worst_and_center(&mut neigh.discriminators)?;
    Ok(neigh)
}

/// With probability `beta`, multiplies by `exp(scale * N(0, 1))`; the
/// result is clamped to `[1e-6, 1]`.
pub fn mutate_learning_rate<R: Rng + ?Sized>(lr: f64, beta: f64, scale: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < beta {
        let z: f64 = rng.sample(StandardNormal);
        (lr * (scale * z).exp()).clamp(LEARNING_RATE_MIN, LEARNING_RATE_MAX)
    } else {
        lr
    }
}

fn check_batches<T>(batches: &[T]) -> Result<()> {
    if batches.is_empty() {
        Err(Error::domain("an epoch needs at least one batch"))
    } else {
        Ok(())
    }
}

/// Trains only the center pair, each against a uniformly drawn adversary
/// from the neighborhood, once per batch.
pub fn spagan_epoch<B: Backend>(
    backend: &B,
    mut neigh: NeighborhoodState<B::Gen, B::Disc>,
    batches: &[B::Batch],
    cfg: &TrainConfig,
    rng: &mut CellRng,
    counters: &mut Counters,
) -> Result<NeighborhoodState<B::Gen, B::Disc>> {
    check_batches(batches)?;
    let s = neigh.size();
    for batch in batches {
        let g = &mut neigh.generators[0];
        g.learning_rate = mutate_learning_rate(g.learning_rate, cfg.lr_mutation_prob, cfg.lr_mutation_scale, rng);
        let d = &mut neigh.discriminators[0];
        d.learning_rate = mutate_learning_rate(d.learning_rate, cfg.lr_mutation_prob, cfg.lr_mutation_scale, rng);

        let j = rng.random_range(0..s);
        let adversary = neigh.discriminators[j].params.clone();
        let g = &mut neigh.generators[0];
        g.params = backend.train_generator(&g.params, &adversary, batch, g.learning_rate, rng)?;
        counters.gradient_updates += 1;

        let i = rng.random_range(0..s);
        let adversary = neigh.generators[i].params.clone();
        let d = &mut neigh.discriminators[0];
        d.params = backend.train_discriminator(&d.params, &adversary, batch, d.learning_rate, rng)?;
        counters.gradient_updates += 1;
    }
    Ok(neigh)
}

fn assign_fitness<G, D>(neigh: &mut NeighborhoodState<G, D>, m: &LossMatrix) {
    let (fg, fd) = fitness_from_matrix(m);
    for (ind, f) in neigh.generators.iter_mut().zip(fg) {
        ind.fitness = Some(f);
    }
    for (ind, f) in neigh.discriminators.iter_mut().zip(fd) {
        ind.fitness = Some(f);
    }
}

fn select_population<P: Clone>(
    pop: &[Individual<P>],
    tau: usize,
    rng: &mut CellRng,
    counters: &mut Counters,
) -> Result<Vec<Individual<P>>> {
    let f = cached_fitness(pop)?;
    (0..pop.len())
        .map(|_| {
            counters.selections += 1;
            Ok(pop[tournament_select(&f, tau, rng)?].clone())
        })
        .collect()
}

/// Evaluate, select, train every member against random adversaries,
/// re-evaluate, replace the worst and recenter.
pub fn coevolutionary_epoch<B: Backend>(
    backend: &B,
    mut neigh: NeighborhoodState<B::Gen, B::Disc>,
    batches: &[B::Batch],
    cfg: &TrainConfig,
    rng: &mut CellRng,
    counters: &mut Counters,
) -> Result<NeighborhoodState<B::Gen, B::Disc>> {
    check_batches(batches)?;
    let eval_batch = &batches[rng.random_range(0..batches.len())];
    let m = evaluate_all_pairs(backend, &neigh.generators, &neigh.discriminators, eval_batch, counters)?;
    assign_fitness(&mut neigh, &m);

    neigh.generators = select_population(&neigh.generators, cfg.tournament_size, rng, counters)?;
    neigh.discriminators = select_population(&neigh.discriminators, cfg.tournament_size, rng, counters)?;

    let s_g = neigh.generators.len();
    let s_d = neigh.discriminators.len();
    for batch in batches {
        for i in 0..s_g {
            let j = rng.random_range(0..s_d);
            let adversary = neigh.discriminators[j].params.clone();
            let g = &mut neigh.generators[i];
            g.learning_rate = mutate_learning_rate(g.learning_rate, cfg.lr_mutation_prob, cfg.lr_mutation_scale, rng);
            g.params = backend.train_generator(&g.params, &adversary, batch, g.learning_rate, rng)?;
            counters.gradient_updates += 1;
        }
        for j in 0..s_d {
            let i = rng.random_range(0..s_g);
            let adversary = neigh.generators[i].params.clone();
            let d = &mut neigh.discriminators[j];
            d.learning_rate = mutate_learning_rate(d.learning_rate, cfg.lr_mutation_prob, cfg.lr_mutation_scale, rng);
            d.params = backend.train_discriminator(&d.params, &adversary, batch, d.learning_rate, rng)?;
            counters.gradient_updates += 1;
        }
    }

    let m = evaluate_all_pairs(backend, &neigh.generators, &neigh.discriminators, eval_batch, counters)?;
    assign_fitness(&mut neigh, &m);
    replace_and_center(neigh)
}

/// An independently trained pair and the interactions it took.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair<G, D> {
    pub cell: GridCoord,
    pub generator: Individual<G>,
    pub discriminator: Individual<D>,
    pub counters: Counters,
}

/// Trains one isolated pair per cell for `cfg.epochs` epochs. Each pair uses
/// only its own cell stream, so the result does not depend on scheduling.
pub fn pagan_train<B: Backend>(
    backend: &B,
    cfg: &TrainConfig,
    seed: u64,
    cells: &[GridCoord],
) -> Result<Vec<TrainedPair<B::Gen, B::Disc>>> {
    cells
        .par_iter()
        .map(|&cell| {
            let mut rng = cell_rng(seed, cell);
            let mut counters = Counters::default();
            let g = Individual::new(Role::Generator, backend.init_generator(&mut rng), cfg.learning_rate);
            let d = Individual::new(Role::Discriminator, backend.init_discriminator(&mut rng), cfg.learning_rate);
            let mut neigh = NeighborhoodState::filled(cell, g, d, 1);
            for epoch in 0..cfg.epochs {
                let batches = backend.epoch_batches(cfg.batches_per_epoch, &mut rng)?;
                neigh = spagan_epoch(backend, neigh, &batches, cfg, &mut rng, &mut counters)
                    .map_err(|e| Error::Cell {
                        cell,
                        epoch: epoch + 1,
                        source: Box::new(e),
                    })?;
            }
            let NeighborhoodState {
                mut generators,
                mut discriminators,
                ..
            } = neigh;
            Ok(TrainedPair {
                cell,
                generator: generators.remove(0),
                discriminator: discriminators.remove(0),
                counters,
            })
        })
        .collect()
}

/// `n` subsets of `s` distinct indices into a population of `n`.
pub fn bootstrap_subpopulations<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if s > n {
        return Err(Error::domain(format!("subsets of {s} from a population of {n}")));
    }
    Ok((0..n).map(|_| index::sample(rng, n, s).into_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ToyBackend;
    use crate::toy::{toy_loss, ToyDiscriminator, ToyGenerator, ToyTarget};
    use rand::SeedableRng;

    fn toy() -> ToyBackend {
        ToyBackend::new(ToyTarget::new(-2.0, 2.0))
    }

    fn rng(seed: u64) -> CellRng {
        CellRng::seed_from_u64(seed)
    }

    fn neigh(b: &ToyBackend, s: usize, r: &mut CellRng) -> NeighborhoodState<ToyGenerator, ToyDiscriminator> {
        NeighborhoodState {
            cell: GridCoord::new(0, 0),
            generators: (0..s)
                .map(|_| Individual::new(Role::Generator, b.init_generator(r), 0.01))
                .collect(),
            discriminators: (0..s)
                .map(|_| Individual::new(Role::Discriminator, b.init_discriminator(r), 0.01))
                .collect(),
        }
    }

    fn scalar_matrix(rows: &[&[f64]]) -> LossMatrix {
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&l| PairLoss { generator: l, discriminator: -l }))
            .collect();
        LossMatrix::from_entries(rows.len(), rows[0].len(), entries).unwrap()
    }

    #[test]
    fn pair_matrix_matches_direct_losses() {
        let b = toy();
        let mut r = rng(0);
        let n = neigh(&b, 2, &mut r);
        let mut c = Counters::default();
        let m = evaluate_all_pairs(&b, &n.generators, &n.discriminators, &(), &mut c).unwrap();
        assert_eq!(c.pairwise_evaluations, 4);
        for i in 0..2 {
            for j in 0..2 {
                let direct = toy_loss(&b.target, &n.generators[i].params, &n.discriminators[j].params);
                assert_eq!(m.get(i, j).generator, direct);
            }
        }
    }

    #[test]
    fn target_generators_give_constant_rows() {
        let b = toy();
        let mut r = rng(1);
        let mut n = neigh(&b, 5, &mut r);
        for g in &mut n.generators {
            g.params = b.target.as_generator();
        }
        let m = evaluate_all_pairs(&b, &n.generators, &n.discriminators, &(), &mut Counters::default()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((m.get(i, j).generator - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fitness_examples() {
        let m = scalar_matrix(&[&[1.0, 3.0], &[2.0, 4.0]]);
        let (g, d) = fitness_from_matrix(&m);
        assert_eq!(g, vec![2.0, 3.0]);
        // Column 1 carries the larger adversarial loss, so it ranks first.
        assert_eq!(d, vec![-1.5, -3.5]);
        assert_eq!(argmin(&d), 1);
        let (g, d) = fitness_from_matrix(&scalar_matrix(&[&[0.7, 0.7], &[0.7, 0.7]]));
        assert!(g.iter().all(|x| *x == 0.7) && d.iter().all(|x| *x == -0.7));
    }

    #[test]
    fn tournament_limits() {
        let f = [0.3, 0.1, 0.9, 0.1];
        let mut r = rng(2);
        assert_eq!(tournament_select(&f, 4, &mut r).unwrap(), 1);
        assert!(tournament_select(&f, 5, &mut r).is_err());
        assert!(tournament_select(&f, 0, &mut r).is_err());
        let mut seen = [false; 4];
        for _ in 0..200 {
            seen[tournament_select(&f, 1, &mut r).unwrap()] = true;
        }
        assert_eq!(seen, [true; 4]);
    }

    #[test]
    fn replacement_examples() {
        let b = toy();
        let mut r = rng(3);
        let mut n = neigh(&b, 5, &mut r);
        for g in &mut n.generators {
            g.fitness = Some(1.0);
        }
        for d in &mut n.discriminators {
            d.fitness = Some(1.0);
        }
        let same = replace_and_center(n.clone()).unwrap();
        assert_eq!(same, n);

        let fs = [0.5, 0.2, 0.9, 0.1, 0.4];
        for (ind, f) in n.generators.iter_mut().zip(fs) {
            ind.fitness = Some(f);
        }
        let best = n.generators[3].clone();
        let out = replace_and_center(n).unwrap();
        assert_eq!(out.generators[0], best);
        assert_eq!(out.generators[2], best);
        assert_eq!(out.generators.iter().filter(|g| **g == best).count(), 2);
    }

    #[test]
    fn learning_rate_mutation() {
        let mut r = rng(4);
        assert_eq!(mutate_learning_rate(0.3, 0.0, 5.0, &mut r), 0.3);
        for _ in 0..1000 {
            let lr = mutate_learning_rate(0.9, 1.0, 3.0, &mut r);
            assert!((LEARNING_RATE_MIN..=LEARNING_RATE_MAX).contains(&lr));
        }
    }

    #[test]
    fn spagan_touches_only_the_center() {
        let b = toy();
        let mut r = rng(5);
        let n = neigh(&b, 5, &mut r);
        let mut c = Counters::default();
        let out = spagan_epoch(&b, n.clone(), &[(), (), ()], &TrainConfig::default(), &mut r, &mut c).unwrap();
        assert_eq!(out.generators[1..], n.generators[1..]);
        assert_eq!(out.discriminators[1..], n.discriminators[1..]);
        assert_ne!(out.generators[0], n.generators[0]);
        assert_eq!(c.gradient_updates, 6);
    }

    #[test]
    fn coevolutionary_counts() {
        let b = toy();
        let mut r = rng(6);
        let n = neigh(&b, 5, &mut r);
        let mut c = Counters::default();
        let out = coevolutionary_epoch(&b, n, &[(); 4], &TrainConfig::default(), &mut r, &mut c).unwrap();
        assert_eq!(c.gradient_updates, 2 * 5 * 4);
        assert_eq!(c.pairwise_evaluations, 2 * 25);
        assert_eq!(c.selections, 10);
        let f: Vec<f64> = out.generators.iter().map(|g| g.fitness.unwrap()).collect();
        assert_eq!(argmin(&f), 0);
    }

    #[test]
    fn empty_batches_rejected() {
        let b = toy();
        let mut r = rng(7);
        let n = neigh(&b, 1, &mut r);
        let cfg = TrainConfig::default();
        assert!(spagan_epoch(&b, n.clone(), &[], &cfg, &mut r, &mut Counters::default()).is_err());
        assert!(coevolutionary_epoch(&b, n, &[], &cfg, &mut r, &mut Counters::default()).is_err());
    }

    #[test]
    fn pagan_is_order_independent() {
        let b = toy();
        let cfg = TrainConfig {
            epochs: 3,
            batches_per_epoch: 2,
            ..Default::default()
        };
        let cells: Vec<GridCoord> = (0..4).map(|i| GridCoord::new(i / 2, i % 2)).collect();
        let forward = pagan_train(&b, &cfg, 9, &cells).unwrap();
        let mut reversed_cells = cells.clone();
        reversed_cells.reverse();
        let mut reversed = pagan_train(&b, &cfg, 9, &reversed_cells).unwrap();
        reversed.reverse();
        assert_eq!(forward, reversed);
        assert!(forward.iter().all(|p| p.counters.migrations == 0 && p.counters.gradient_updates == 12));
    }

    #[test]
    fn bootstrap_examples() {
        let mut r = rng(8);
        for subset in bootstrap_subpopulations(4, 4, &mut r).unwrap() {
            let mut s = subset.clone();
            s.sort();
            assert_eq!(s, vec![0, 1, 2, 3]);
        }
        assert!(bootstrap_subpopulations(2, 3, &mut r).is_err());
        assert!(bootstrap_subpopulations(6, 1, &mut r).unwrap().iter().all(|s| s.len() == 1));
    }
}
