use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Backend, CellRng, PairLoss};
use crate::error::{Error, Result};
use crate::metrics::{ModeAssigner, ModeHistogram};
use crate::mixture::{MixtureScorer, MixtureWeights, WeightedSum};
use crate::neural::{
    bce_loss_and_grads, generate, make_ring_dataset, sgd_step, Architecture, MiniBatch, MlpParams, RingDataset, RingDatasetSpec, Side,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// Weighted sum of each generator's own mode-balance score.
    #[default]
    WeightedSum,
    /// Mode balance of the weighted ensemble's expected output.
    Ensemble,
}

/// Mode histograms of each generator on a fixed set of latent draws. The
/// score of a weighting is the TVD of the ensemble's expected accepted mode
/// proportions plus its expected low-quality fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleProfile {
    pub histograms: Vec<ModeHistogram>,
}

impl MixtureScorer for EnsembleProfile {
    fn components(&self) -> usize {
        self.histograms.len()
    }

    fn score(&self, w: &MixtureWeights) -> f64 {
        let modes = self.histograms.first().map_or(0, |h| h.counts.len());
        let mut p = vec![0.0; modes];
        for (h, wi) in self.histograms.iter().zip(w.as_slice()) {
            let total = h.total() as f64;
            for (pk, c) in p.iter_mut().zip(&h.counts) {
                *pk += wi * *c as f64 / total;
            }
        }
        let accepted: f64 = p.iter().sum();
        let tvd = if accepted > 0.0 {
            let q = 1.0 / modes as f64;
            0.5 * p.iter().map(|pk| (pk / accepted - q).abs()).sum::<f64>()
        } else {
            1.0
        };
        tvd + (1.0 - accepted)
    }
}

/// Serializable recipe for a [`NeuralBackend`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuralSpec {
    pub dataset: RingDatasetSpec,
    pub latent_dim: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub eval_samples: usize,
    pub scorer: ScorerKind,
}

impl Default for NeuralSpec {
    fn default() -> Self {
        Self {
            dataset: RingDatasetSpec::default(),
            latent_dim: 2,
            hidden: 32,
            batch_size: 32,
            eval_samples: 1000,
            scorer: ScorerKind::default(),
        }
    }
}

impl NeuralSpec {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        for (field, v) in [
            ("neural.latent_dim", self.latent_dim),
            ("neural.hidden", self.hidden),
            ("neural.batch_size", self.batch_size),
            ("neural.eval_samples", self.eval_samples),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<NeuralBackend> {
        self.validate()?;
        Ok(NeuralBackend {
            generator_arch: Architecture::generator(self.latent_dim, self.hidden),
            discriminator_arch: Architecture::discriminator(self.hidden),
            dataset_spec: self.dataset.clone(),
            dataset: Arc::new(make_ring_dataset(&self.dataset)?),
            batch_size: self.batch_size,
            eval_samples: self.eval_samples,
            scorer: self.scorer,
        })
    }
}

#[derive(Debug, Clone)]
pub struct NeuralBackend {
    pub generator_arch: Architecture,
    pub discriminator_arch: Architecture,
    pub dataset_spec: RingDatasetSpec,
    pub dataset: Arc<RingDataset>,
    pub batch_size: usize,
    /// Samples per generator used when scoring mixtures.
    pub eval_samples: usize,
    pub scorer: ScorerKind,
}

impl NeuralBackend {
    pub fn latent_dim(&self) -> usize {
        self.generator_arch.input_dim()
    }

    pub fn mode_assigner(&self) -> ModeAssigner {
        ModeAssigner {
            centers: self.dataset_spec.centers(),
            std: self.dataset_spec.std,
        }
    }

    pub fn sample_latent(&self, count: usize, rng: &mut CellRng) -> Vec<Vec<f64>> {
        let d = self.latent_dim();
        (0..count)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    pub fn histogram(&self, gen: &MlpParams, latent: &[Vec<f64>]) -> Result<ModeHistogram> {
        Ok(self.mode_assigner().histogram(&generate(gen, latent)?))
    }
}

impl Backend for NeuralBackend {
    type Gen = MlpParams;
    type Disc = MlpParams;
    type Batch = MiniBatch;

    fn init_generator(&self, rng: &mut CellRng) -> MlpParams {
        MlpParams::init(&self.generator_arch, rng)
    }

    fn init_discriminator(&self, rng: &mut CellRng) -> MlpParams {
        MlpParams::init(&self.discriminator_arch, rng)
    }

    fn epoch_batches(&self, count: usize, rng: &mut CellRng) -> Result<Vec<MiniBatch>> {
        let n = self.dataset.len();
        (0..count)
            .map(|_| {
                let real = (0..self.batch_size)
                    .map(|_| self.dataset.points[rng.random_range(0..n)])
                    .collect();
                MiniBatch::new(real, self.sample_latent(self.batch_size, rng))
            })
            .collect()
    }

    fn pair_loss(&self, gen: &MlpParams, disc: &MlpParams, batch: &MiniBatch) -> Result<PairLoss> {
        let out = bce_loss_and_grads(gen, disc, batch, None)?;
        Ok(PairLoss {
            generator: out.generator_loss,
            discriminator: out.discriminator_loss,
        })
    }

    fn train_generator(
        &self,
        gen: &MlpParams,
        adversary: &MlpParams,
        batch: &MiniBatch,
        learning_rate: f64,
        _rng: &mut CellRng,
    ) -> Result<MlpParams> {
        let out = bce_loss_and_grads(gen, adversary, batch, Some(Side::Generator))?;
        sgd_step(gen, &out.grads.expect("generator gradients requested"), learning_rate)
    }

    fn train_discriminator(
        &self,
        disc: &MlpParams,
        adversary: &MlpParams,
        batch: &MiniBatch,
        learning_rate: f64,
        _rng: &mut CellRng,
    ) -> Result<MlpParams> {
        let out = bce_loss_and_grads(adversary, disc, batch, Some(Side::Discriminator))?;
        sgd_step(disc, &out.grads.expect("discriminator gradients requested"), learning_rate)
    }

    fn flatten_generator(&self, gen: &MlpParams) -> Vec<f64> {
        gen.flatten()
    }

    fn mixture_scorer(&self, gens: &[MlpParams], rng: &mut CellRng) -> Result<Box<dyn MixtureScorer>> {
        let latent = self.sample_latent(self.eval_samples, rng);
        let histograms = gens
            .iter()
            .map(|g| self.histogram(g, &latent))
            .collect::<Result<Vec<_>>>()?;
        let profile = EnsembleProfile { histograms };
        Ok(match self.scorer {
            ScorerKind::Ensemble => Box::new(profile),
            ScorerKind::WeightedSum => Box::new(WeightedSum {
                scores: profile.component_scores(),
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: Vec<u64>, rejected: u64) -> ModeHistogram {
        ModeHistogram { counts, rejected }
    }

    #[test]
    fn complementary_generators_balance_each_other() {
        let p = EnsembleProfile {
            histograms: vec![hist(vec![10, 0], 0), hist(vec![0, 10], 0)],
        };
        assert_eq!(p.score(&MixtureWeights::vertex(2, 0)), 0.5);
        assert_eq!(p.score(&MixtureWeights::uniform(2)), 0.0);
    }

    #[test]
    fn rejected_mass_counts_against_the_score() {
        let p = EnsembleProfile {
            histograms: vec![hist(vec![5, 5], 10), hist(vec![0, 0], 4)],
        };
        assert_eq!(p.score(&MixtureWeights::vertex(2, 0)), 0.5);
        assert_eq!(p.score(&MixtureWeights::vertex(2, 1)), 2.0);
    }
}
