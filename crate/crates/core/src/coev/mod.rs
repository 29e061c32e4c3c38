//! Sub-populations, fitness, selection and the per-epoch update rules of the
//! four training methods, generic over the model backend.

mod ops;

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridCoord;

pub use ops::{
    bootstrap_subpopulations, coevolutionary_epoch, evaluate_all_pairs, fitness_from_matrix, mutate_learning_rate,
    pagan_train, replace_and_center, spagan_epoch, tournament_select, LossMatrix, TrainedPair,
};

pub const LEARNING_RATE_MIN: f64 = 1e-6;
pub const LEARNING_RATE_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Generator,
    Discriminator,
}

/// One network with its own learning rate and cached fitness (lower is
/// better for both roles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual<P> {
    pub role: Role,
    pub params: P,
    pub learning_rate: f64,
    pub fitness: Option<f64>,
}

impl<P> Individual<P> {
    pub fn new(role: Role, params: P, learning_rate: f64) -> Self {
        Self {
            role,
            params,
            learning_rate,
            fitness: None,
        }
    }
}

/// The generators and discriminators a cell trains with. Index 0 holds the
/// cell's own center networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodState<G, D> {
    pub cell: GridCoord,
    pub generators: Vec<Individual<G>>,
    pub discriminators: Vec<Individual<D>>,
}

impl<G: Clone, D: Clone> NeighborhoodState<G, D> {
    /// `size` copies of the center pair.
    pub fn filled(cell: GridCoord, gen: Individual<G>, disc: Individual<D>, size: usize) -> Self {
        Self {
            cell,
            generators: vec![gen; size],
            discriminators: vec![disc; size],
        }
    }

    pub fn center_generator(&self) -> &Individual<G> {
        &self.generators[0]
    }

    pub fn center_discriminator(&self) -> &Individual<D> {
        &self.discriminators[0]
    }

    pub fn size(&self) -> usize {
        self.generators.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lipizzaner,
    Spagan,
    IsoCogan,
    Pagan,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lipizzaner, Method::Spagan, Method::IsoCogan, Method::Pagan];

    /// Whether neighbors' centers are copied in every epoch.
    pub fn migrates(self) -> bool {
        matches!(self, Method::Lipizzaner | Method::Spagan)
    }

    pub fn selects(self) -> bool {
        matches!(self, Method::Lipizzaner | Method::IsoCogan)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lipizzaner => "lipizzaner",
            Method::Spagan => "spagan",
            Method::IsoCogan => "isocogan",
            Method::Pagan => "pagan",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub tournament_size: usize,
    pub lr_mutation_prob: f64,
    pub lr_mutation_scale: f64,
    pub learning_rate: f64,
    pub batches_per_epoch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            tournament_size: 2,
            lr_mutation_prob: 0.5,
            lr_mutation_scale: 0.1,
            learning_rate: 0.05,
            batches_per_epoch: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, neighborhood: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        if self.tournament_size == 0 || self.tournament_size > neighborhood {
            return Err(Error::config(
                "train.tournament_size",
                format!("must be in 1..={neighborhood}"),
            ));
        }
        if !(0.0..=1.0).contains(&self.lr_mutation_prob) {
            return Err(Error::config("train.lr_mutation_prob", "must be in [0, 1]"));
        }
        if !(self.lr_mutation_scale >= 0.0 && self.lr_mutation_scale.is_finite()) {
            return Err(Error::config("train.lr_mutation_scale", "must be finite and non-negative"));
        }
        if !(LEARNING_RATE_MIN..=LEARNING_RATE_MAX).contains(&self.learning_rate) {
            return Err(Error::config("train.learning_rate", "must be in [1e-6, 1]"));
        }
        if self.batches_per_epoch == 0 {
            return Err(Error::config("train.batches_per_epoch", "must be at least 1"));
        }
        Ok(())
    }
}

/// Instrumentation of the interactions a run performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub pairwise_evaluations: u64,
    pub gradient_updates: u64,
    pub migrations: u64,
    pub selections: u64,
}

impl Counters {
    pub fn as_array(&self) -> [u64; 4] {
        [
            self.pairwise_evaluations,
            self.gradient_updates,
            self.migrations,
            self.selections,
        ]
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Self) {
        self.pairwise_evaluations += o.pairwise_evaluations;
        self.gradient_updates += o.gradient_updates;
        self.migrations += o.migrations;
        self.selections += o.selections;
    }
}
