//! What the trainers need from a model family.

pub mod neural;
pub mod toy;

use std::fmt::Debug;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::grid::GridCoord;
use crate::mixture::MixtureScorer;

pub use neural::{NeuralBackend, NeuralSpec, ScorerKind};
pub use toy::ToyBackend;

/// Random source owned by one worker.
pub type CellRng = ChaCha8Rng;

/// Stream derived from the master seed and a cell coordinate, so that every
/// cell draws from its own reproducible sequence regardless of scheduling.
pub fn cell_rng(seed: u64, cell: GridCoord) -> CellRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell.row as u64) << 32) | cell.col as u64);
    rng
}

/// Stream for work that is not tied to a single cell.
pub fn auxiliary_rng(seed: u64, tag: u64) -> CellRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - tag);
    rng
}

/// Generator and discriminator losses of one pairing. Both are
/// minimized by their owner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLoss {
    pub generator: f64,
    pub discriminator: f64,
}

pub trait Backend: Send + Sync {
    type Gen: Clone + Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned;
    type Disc: Clone + Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned;
    type Batch: Send + Sync;

    fn init_generator(&self, rng: &mut CellRng) -> Self::Gen;

    fn init_discriminator(&self, rng: &mut CellRng) -> Self::Disc;

    /// Draws the mini-batches of one epoch.
    fn epoch_batches(&self, count: usize, rng: &mut CellRng) -> Result<Vec<Self::Batch>>;

    fn pair_loss(&self, gen: &Self::Gen, disc: &Self::Disc, batch: &Self::Batch) -> Result<PairLoss>;

    fn train_generator(
        &self,
        gen: &Self::Gen,
        adversary: &Self::Disc,
        batch: &Self::Batch,
        learning_rate: f64,
        rng: &mut CellRng,
    ) -> Result<Self::Gen>;

    fn train_discriminator(
        &self,
        disc: &Self::Disc,
        adversary: &Self::Gen,
        batch: &Self::Batch,
        learning_rate: f64,
        rng: &mut CellRng,
    ) -> Result<Self::Disc>;

    fn flatten_generator(&self, gen: &Self::Gen) -> Vec<f64>;

    /// Builds the scorer used to weight an ensemble of `gens`.
    fn mixture_scorer(&self, gens: &[Self::Gen], rng: &mut CellRng) -> Result<Box<dyn MixtureScorer>>;
}
