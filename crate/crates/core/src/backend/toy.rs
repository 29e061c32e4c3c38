use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, CellRng, PairLoss};
use crate::error::Result;
use crate::mixture::{DominantComponent, MixtureScorer};
use crate::toy::{generator_distance, toy_loss, ToyDiscriminator, ToyGenerator, ToyTarget};

/// Closed-form model. A batch is a single analytic evaluation and a training
/// step is an unconditionally accepted Gaussian mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyBackend {
    pub target: ToyTarget,
    pub step: f64,
    /// Initial parameters are drawn uniformly from `[-init_range, init_range]`.
    pub init_range: f64,
}

impl ToyBackend {
    pub fn new(target: ToyTarget) -> Self {
        Self {
            target,
            step: 1.0,
            init_range: 10.0,
        }
    }
}

impl Backend for ToyBackend {
    type Gen = ToyGenerator;
    type Disc = ToyDiscriminator;
    type Batch = ();

    fn init_generator(&self, rng: &mut CellRng) -> ToyGenerator {
        let r = self.init_range;
        ToyGenerator::new(rng.random_range(-r..=r), rng.random_range(-r..=r))
    }

    fn init_discriminator(&self, rng: &mut CellRng) -> ToyDiscriminator {
        let r = self.init_range;
        ToyDiscriminator::repaired([0; 4].map(|_| rng.random_range(-r..=r)))
    }

    fn epoch_batches(&self, count: usize, _rng: &mut CellRng) -> Result<Vec<()>> {
        Ok(vec![(); count])
    }

    fn pair_loss(&self, gen: &ToyGenerator, disc: &ToyDiscriminator, _batch: &()) -> Result<PairLoss> {
        let l = toy_loss(&self.target, gen, disc);
        Ok(PairLoss {
            generator: l,
            discriminator: -l,
        })
    }

    fn train_generator(
        &self,
        gen: &ToyGenerator,
        _adversary: &ToyDiscriminator,
        _batch: &(),
        _learning_rate: f64,
        rng: &mut CellRng,
    ) -> Result<ToyGenerator> {
        Ok(gen.mutated(self.step, rng))
    }

    fn train_discriminator(
        &self,
        disc: &ToyDiscriminator,
        _adversary: &ToyGenerator,
        _batch: &(),
        _learning_rate: f64,
        rng: &mut CellRng,
    ) -> Result<ToyDiscriminator> {
        Ok(disc.mutated(self.step, rng))
    }

    fn flatten_generator(&self, gen: &ToyGenerator) -> Vec<f64> {
        gen.params().to_vec()
    }

    fn mixture_scorer(&self, gens: &[ToyGenerator], _rng: &mut CellRng) -> Result<Box<dyn MixtureScorer>> {
        Ok(Box::new(DominantComponent {
            scores: gens.iter().map(|g| generator_distance(g, &self.target)).collect(),
        }))
    }
}
