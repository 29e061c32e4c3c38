//! Mixture weights over a sub-population of generators, evolved with an
//! elitist (1+1) evolution strategy.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridCoord;

const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain(format!("weights must be finite and non-negative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn uniform(s: usize) -> Self {
        Self(vec![1.0 / s as f64; s])
    }

    pub fn vertex(s: usize, i: usize) -> Self {
        let mut w = vec![0.0; s];
        w[i] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Scores a weighting of a fixed set of generators. Lower is better.
pub trait MixtureScorer {
    fn components(&self) -> usize;

    fn score(&self, w: &MixtureWeights) -> f64;

    /// Score of each generator on its own.
    fn component_scores(&self) -> Vec<f64> {
        let s = self.components();
        (0..s).map(|i| self.score(&MixtureWeights::vertex(s, i))).collect()
    }
}

/// `sum_i w_i * score_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSum {
    pub scores: Vec<f64>,
}

impl MixtureScorer for WeightedSum {
    fn components(&self) -> usize {
        self.scores.len()
    }

    fn score(&self, w: &MixtureWeights) -> f64 {
        self.scores.iter().zip(w.as_slice()).map(|(s, w)| s * w).sum()
    }

    fn component_scores(&self) -> Vec<f64> {
        self.scores.clone()
    }
}

/// Score of the generator carrying the largest weight, the earliest one on
/// ties.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantComponent {
    pub scores: Vec<f64>,
}

impl MixtureScorer for DominantComponent {
    fn components(&self) -> usize {
        self.scores.len()
    }

    fn score(&self, w: &MixtureWeights) -> f64 {
        let mut best = 0;
        for (i, wi) in w.as_slice().iter().enumerate() {
            if *wi > w.as_slice()[best] {
                best = i;
            }
        }
        self.scores[best]
    }

    fn component_scores(&self) -> Vec<f64> {
        self.scores.clone()
    }
}

pub fn mixture_score(scorer: &dyn MixtureScorer, w: &MixtureWeights) -> Result<f64> {
    if scorer.components() != w.len() {
        return Err(Error::domain(format!(
            "{} weights for {} generators",
            w.len(),
            scorer.components()
        )));
    }
    Ok(scorer.score(w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureEvolutionConfig {
    pub generations: usize,
    pub mutation_rate: f64,
}

impl Default for MixtureEvolutionConfig {
    fn default() -> Self {
        Self {
            generations: 10,
            mutation_rate: 0.01,
        }
    }
}

impl MixtureEvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mutation_rate > 0.0 && self.mutation_rate.is_finite()) {
            return Err(Error::config("mixture.mutation_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Adds `rate * N(0, 1)` to each weight, clamps at zero and renormalizes,
/// drawing again whenever every coordinate clamps.
pub fn mutate_weights<R: Rng + ?Sized>(w: &MixtureWeights, rate: f64, rng: &mut R) -> MixtureWeights {
    loop {
        let v: Vec<f64> = w
            .as_slice()
            .iter()
            .map(|x| {
                let z: f64 = rng.sample(StandardNormal);
                (x + rate * z).max(0.0)
            })
            .collect();
        let sum: f64 = v.iter().sum();
        if sum > 0.0 {
            return MixtureWeights(v.into_iter().map(|x| x / sum).collect());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedMixture {
    pub weights: MixtureWeights,
    pub score: f64,
    /// Champion score after each generation.
    pub history: Vec<f64>,
}

pub fn evolve_mixture<R: Rng + ?Sized>(
    w: &MixtureWeights,
    scorer: &dyn MixtureScorer,
    cfg: &MixtureEvolutionConfig,
    rng: &mut R,
) -> Result<EvolvedMixture> {
    cfg.validate()?;
    let mut best = w.clone();
    let mut best_score = mixture_score(scorer, w)?;
    let mut history = Vec::with_capacity(cfg.generations);
    for _ in 0..cfg.generations {
        let child = mutate_weights(&best, cfg.mutation_rate, rng);
        let s = scorer.score(&child);
        if s < best_score {
            best = child;
            best_score = s;
        }
        history.push(best_score);
    }
    Ok(EvolvedMixture {
        weights: best,
        score: best_score,
        history,
    })
}

/// Component index of each of `count` draws.
pub fn sample_mixture<R: Rng + ?Sized>(w: &MixtureWeights, count: usize, rng: &mut R) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let dist = WeightedIndex::new(w.as_slice()).expect("weights lie on the simplex");
    (0..count).map(|_| dist.sample(rng)).collect()
}

/// A cell's final generators with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEnsemble<G> {
    pub cell: GridCoord,
    pub generators: Vec<G>,
    pub weights: MixtureWeights,
    pub generator_scores: Vec<f64>,
    pub score: f64,
}

/// The ensemble with the lowest score; ties go to the earliest entry.
pub fn best_ensemble<G>(cells: &[CellEnsemble<G>]) -> Result<&CellEnsemble<G>> {
    let mut best: Option<&CellEnsemble<G>> = None;
    for c in cells {
        if best.is_none_or(|b| c.score < b.score || (c.score == b.score && c.cell < b.cell)) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::Runtime("no finished cells".into()))
}
