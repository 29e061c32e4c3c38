//! Runs every cell of the grid on its own worker thread.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};

use super::board::{CellSnapshot, SnapshotBoard};
use crate::backend::{auxiliary_rng, cell_rng, Backend, CellRng};
use crate::coev::{
    bootstrap_subpopulations, coevolutionary_epoch, pagan_train, spagan_epoch, Counters, Individual, Method,
    NeighborhoodState, Role, TrainConfig,
};
use crate::error::{Error, Result};
use crate::grid::{neighborhood, GridConfig, GridCoord, NEIGHBORHOOD_SIZE};
use crate::mixture::{best_ensemble, evolve_mixture, CellEnsemble, MixtureEvolutionConfig, MixtureWeights};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    /// Epoch barriers around the gather phase make runs reproducible.
    #[default]
    Lockstep,
    /// Cells only synchronize once, after publishing their initial networks.
    Async,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub grid: GridConfig,
    pub method: Method,
    pub train: TrainConfig,
    pub mixture: MixtureEvolutionConfig,
    pub mode: ExecutionMode,
    pub seed: u64,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.train.validate(NEIGHBORHOOD_SIZE)?;
        self.mixture.validate()
    }
}

/// One line of the per-cell, per-epoch progress log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRow {
    pub cell: GridCoord,
    pub epoch: usize,
    pub best_g_fitness: Option<f64>,
    pub best_d_fitness: Option<f64>,
    pub mixture_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult<G, D> {
    pub cell: GridCoord,
    pub ensemble: CellEnsemble<G>,
    pub center_generator: Individual<G>,
    pub center_discriminator: Individual<D>,
    pub counters: Counters,
    /// Largest distance between the epoch a gathered snapshot was expected
    /// from and the epoch it actually carried.
    pub max_staleness: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult<G, D> {
    pub method: Method,
    pub cells: Vec<CellResult<G, D>>,
    pub counters: Counters,
    pub progress: Vec<ProgressRow>,
    pub best_cell: GridCoord,
    pub max_staleness: u64,
}

impl<G, D> GridResult<G, D> {
    pub fn best(&self) -> &CellResult<G, D> {
        self.cells
            .iter()
            .find(|c| c.cell == self.best_cell)
            .expect("best cell is part of the result")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Ready,
    Finished,
}

/// Holds a run specification until it is executed once.
pub struct GridExecutor<'a, B: Backend> {
    backend: &'a B,
    spec: RunSpec,
    phase: Phase,
}

impl<'a, B: Backend> GridExecutor<'a, B> {
    pub fn new(backend: &'a B, spec: RunSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            backend,
            spec,
            phase: Phase::Ready,
        })
    }

    pub fn set_execution_mode(&mut self, mode: ExecutionMode) -> Result<()> {
        if self.phase != Phase::Ready {
            return Err(Error::Runtime("execution mode can only change before the run".into()));
        }
        self.spec.mode = mode;
        Ok(())
    }

    pub fn run(&mut self) -> Result<GridResult<B::Gen, B::Disc>> {
        if self.phase != Phase::Ready {
            return Err(Error::Runtime("executor has already run".into()));
        }
        self.phase = Phase::Finished;
        match self.spec.method {
            Method::Pagan => run_isolated(self.backend, &self.spec),
            _ => run_spatial(self.backend, &self.spec),
        }
    }
}

pub fn run_grid<B: Backend>(backend: &B, spec: &RunSpec) -> Result<GridResult<B::Gen, B::Disc>> {
    GridExecutor::new(backend, spec.clone())?.run()
}

struct CellOutput<G, D> {
    result: CellResult<G, D>,
    progress: Vec<ProgressRow>,
}

struct Shared<'a, G, D> {
    board: SnapshotBoard<G, D>,
    barrier: Barrier,
    failed: AtomicBool,
    error: Mutex<Option<Error>>,
    spec: &'a RunSpec,
}

impl<G, D> Shared<'_, G, D> {
    fn lockstep_barrier(&self) {
        if self.spec.mode == ExecutionMode::Lockstep {
            self.barrier.wait();
        }
    }

    fn fail(&self, cell: GridCoord, epoch: usize, e: Error) {
        self.failed.store(true, Ordering::SeqCst);
        let mut slot = self.error.lock().expect("error slot poisoned");
        if slot.is_none() {
            *slot = Some(match e {
                Error::Cell { .. } => e,
                e => Error::Cell {
                    cell,
                    epoch,
                    source: Box::new(e),
                },
            });
        }
    }
}

fn snapshot<G: Clone, D: Clone>(neigh: &NeighborhoodState<G, D>, epoch: u64) -> CellSnapshot<G, D> {
    CellSnapshot {
        cell: neigh.cell,
        generator: neigh.center_generator().clone(),
        discriminator: neigh.center_discriminator().clone(),
        epoch,
    }
}

/// Copies the latest centers of the four neighbors into slots 1..5.
fn gather<G: Clone, D: Clone>(
    board: &SnapshotBoard<G, D>,
    neigh: &mut NeighborhoodState<G, D>,
    epoch: usize,
    counters: &mut Counters,
) -> Result<u64> {
    let cells = neighborhood(neigh.cell, board.grid())?;
    let mut staleness = 0;
    for (k, c) in cells.iter().enumerate().skip(1) {
        let snap = board
            .read(*c)?
            .ok_or_else(|| Error::Runtime(format!("cell {c} has not published")))?;
        staleness = staleness.max(snap.epoch.abs_diff(epoch as u64 - 1));
        neigh.generators[k] = snap.generator.clone();
        neigh.discriminators[k] = snap.discriminator.clone();
        counters.migrations += 1;
    }
    Ok(staleness)
}

fn evolve_cell_mixture<B: Backend>(
    backend: &B,
    gens: Vec<B::Gen>,
    weights: &MixtureWeights,
    cfg: &MixtureEvolutionConfig,
    cell: GridCoord,
    rng: &mut CellRng,
) -> Result<CellEnsemble<B::Gen>> {
    let scorer = backend.mixture_scorer(&gens, rng)?;
    let evolved = evolve_mixture(weights, scorer.as_ref(), cfg, rng)?;
    Ok(CellEnsemble {
        cell,
        generator_scores: scorer.component_scores(),
        generators: gens,
        weights: evolved.weights,
        score: evolved.score,
    })
}

fn spatial_epoch<B: Backend>(
    backend: &B,
    spec: &RunSpec,
    neigh: NeighborhoodState<B::Gen, B::Disc>,
    rng: &mut CellRng,
    counters: &mut Counters,
) -> Result<NeighborhoodState<B::Gen, B::Disc>> {
    let batches = backend.epoch_batches(spec.train.batches_per_epoch, rng)?;
    if spec.method.selects() {
        coevolutionary_epoch(backend, neigh, &batches, &spec.train, rng, counters)
    } else {
        spagan_epoch(backend, neigh, &batches, &spec.train, rng, counters)
    }
}

fn spatial_worker<B: Backend>(
    backend: &B,
    shared: &Shared<'_, B::Gen, B::Disc>,
    cell: GridCoord,
) -> Option<CellOutput<B::Gen, B::Disc>> {
    let spec = shared.spec;
    let lr = spec.train.learning_rate;
    let mut rng = cell_rng(spec.seed, cell);
    let g = Individual::new(Role::Generator, backend.init_generator(&mut rng), lr);
    let d = Individual::new(Role::Discriminator, backend.init_discriminator(&mut rng), lr);
    let mut neigh = Some(NeighborhoodState::filled(cell, g, d, NEIGHBORHOOD_SIZE));
    let mut counters = Counters::default();
    let mut weights = MixtureWeights::uniform(NEIGHBORHOOD_SIZE);
    let mut ensemble = None;
    let mut progress = Vec::with_capacity(spec.train.epochs);
    let mut max_staleness = 0;

    if let Err(e) = shared.board.publish(snapshot(neigh.as_ref().expect("initialized"), 0)) {
        shared.fail(cell, 0, e);
    }
    shared.barrier.wait();

    for epoch in 1..=spec.train.epochs {
        shared.lockstep_barrier();
        let wants_gather = spec.method.migrates() || (spec.method == Method::IsoCogan && epoch == 1);
        if wants_gather && !shared.failed.load(Ordering::SeqCst) {
            if let Some(n) = neigh.as_mut() {
                match gather(&shared.board, n, epoch, &mut counters) {
                    Ok(s) => max_staleness = max_staleness.max(s),
                    Err(e) => shared.fail(cell, epoch, e),
                }
            }
        }
        shared.lockstep_barrier();
        if shared.failed.load(Ordering::SeqCst) {
            continue;
        }

        let step = (|| -> Result<()> {
            let n = spatial_epoch(backend, spec, neigh.take().expect("state present"), &mut rng, &mut counters)?;
            shared.board.publish(snapshot(&n, epoch as u64))?;
            let gens = n.generators.iter().map(|i| i.params.clone()).collect();
            let e = evolve_cell_mixture(backend, gens, &weights, &spec.mixture, cell, &mut rng)?;
            weights = e.weights.clone();
            progress.push(ProgressRow {
                cell,
                epoch,
                best_g_fitness: n.center_generator().fitness,
                best_d_fitness: n.center_discriminator().fitness,
                mixture_score: Some(e.score),
            });
            ensemble = Some(e);
            neigh = Some(n);
            Ok(())
        })();
        if let Err(e) = step {
            shared.fail(cell, epoch, e);
        }
    }

    let neigh = neigh?;
    Some(CellOutput {
        result: CellResult {
            cell,
            ensemble: ensemble?,
            center_generator: neigh.center_generator().clone(),
            center_discriminator: neigh.center_discriminator().clone(),
            counters,
            max_staleness,
        },
        progress,
    })
}

fn assemble<G: Clone, D>(method: Method, outputs: Vec<CellOutput<G, D>>) -> Result<GridResult<G, D>> {
    let mut counters = Counters::default();
    let mut progress = Vec::new();
    let mut cells = Vec::with_capacity(outputs.len());
    for o in outputs {
        counters += o.result.counters;
        progress.extend(o.progress);
        cells.push(o.result);
    }
    let ensembles: Vec<CellEnsemble<G>> = cells.iter().map(|c| c.ensemble.clone()).collect();
    let best_cell = best_ensemble(&ensembles)?.cell;
    let max_staleness = cells.iter().map(|c| c.max_staleness).max().unwrap_or(0);
    Ok(GridResult {
        method,
        cells,
        counters,
        progress,
        best_cell,
        max_staleness,
    })
}

fn run_spatial<B: Backend>(backend: &B, spec: &RunSpec) -> Result<GridResult<B::Gen, B::Disc>> {
    let cells: Vec<GridCoord> = spec.grid.cells().collect();
    let shared = Shared {
        board: SnapshotBoard::new(spec.grid),
        barrier: Barrier::new(cells.len()),
        failed: AtomicBool::new(false),
        error: Mutex::new(None),
        spec,
    };
    let outputs: Vec<Option<CellOutput<B::Gen, B::Disc>>> = thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&cell| {
                let shared = &shared;
                scope.spawn(move || spatial_worker(backend, shared, cell))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cell worker panicked"))
            .collect()
    });
    if let Some(e) = shared.error.into_inner().expect("error slot poisoned") {
        return Err(e);
    }
    let outputs = outputs
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Runtime("a cell finished without a result".into()))?;
    assemble(spec.method, outputs)
}

/// Independent pairs, then one bootstrapped sub-population per cell whose
/// mixture weights evolve for `generations * epochs` steps.
fn run_isolated<B: Backend>(backend: &B, spec: &RunSpec) -> Result<GridResult<B::Gen, B::Disc>> {
    let cells: Vec<GridCoord> = spec.grid.cells().collect();
    let pairs = pagan_train(backend, &spec.train, spec.seed, &cells)?;
    let n = pairs.len();
    let s = NEIGHBORHOOD_SIZE.min(n);
    let subsets = bootstrap_subpopulations(n, s, &mut auxiliary_rng(spec.seed, 0))?;
    let mixture = MixtureEvolutionConfig {
        generations: spec.mixture.generations * spec.train.epochs,
        ..spec.mixture.clone()
    };
    let trained: Vec<B::Gen> = pairs.iter().map(|p| p.generator.params.clone()).collect();
    let mut outputs = Vec::with_capacity(n);
    for (k, (pair, subset)) in pairs.into_iter().zip(subsets).enumerate() {
        let mut rng = auxiliary_rng(spec.seed, 1 + k as u64);
        let gens: Vec<B::Gen> = subset.iter().map(|&i| trained[i].clone()).collect();
        let ensemble = evolve_cell_mixture(backend, gens, &MixtureWeights::uniform(s), &mixture, pair.cell, &mut rng)
            .map_err(|e| Error::Cell {
                cell: pair.cell,
                epoch: spec.train.epochs,
                source: Box::new(e),
            })?;
        let progress = (1..=spec.train.epochs)
            .map(|epoch| ProgressRow {
                cell: pair.cell,
                epoch,
                best_g_fitness: None,
                best_d_fitness: None,
                mixture_score: (epoch == spec.train.epochs).then_some(ensemble.score),
            })
            .collect();
        outputs.push(CellOutput {
            result: CellResult {
                cell: pair.cell,
                ensemble,
                center_generator: pair.generator,
                center_discriminator: pair.discriminator,
                counters: pair.counters,
                max_staleness: 0,
            },
            progress,
        });
    }
    assemble(spec.method, outputs)
}
