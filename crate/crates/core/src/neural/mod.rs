//! Small multilayer-perceptron GAN trained with SGD on a ring of Gaussians.

pub mod dataset;
pub mod loss;
pub mod mlp;

pub use dataset::{make_ring_dataset, RingDataset, RingDatasetSpec};
pub use loss::{bce_loss_and_grads, generate, LossOutput, LossSpec, MiniBatch, Side, EPS};
pub use mlp::{sgd_step, Activation, Architecture, MlpParams};

/// A 2D sample.
pub type Point = [f64; 2];
