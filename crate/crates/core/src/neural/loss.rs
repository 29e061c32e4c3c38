//! Binary cross-entropy objectives for a generator/discriminator pair.

use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use super::Point;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

/// The measuring function applied to discriminator outputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    #[default]
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch {
    pub real: Vec<Point>,
    pub latent: Vec<Vec<f64>>,
}

impl MiniBatch {
    pub fn new(real: Vec<Point>, latent: Vec<Vec<f64>>) -> Result<Self> {
        if real.is_empty() || real.len() != latent.len() {
            return Err(Error::domain(format!(
                "mini-batch needs equal nonempty real and latent sets, got {} and {}",
                real.len(),
                latent.len()
            )));
        }
        Ok(Self { real, latent })
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }
}

/// Which network receives gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Generator,
    Discriminator,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub generator_loss: f64,
    pub discriminator_loss: f64,
    pub grads: Option<MlpParams>,
}

fn as_point(v: &[f64]) -> Result<Point> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::domain(format!(
            "generator output has dimension {}, expected 2",
            v.len()
        ))),
    }
}

/// Forward pass of the generator over a set of latent vectors.
pub fn generate(gen: &MlpParams, latent: &[Vec<f64>]) -> Result<Vec<Point>> {
    latent
        .iter()
        .map(|z| {
            let p = as_point(&gen.forward(z)?)?;
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::numeric("generator produced a non-finite sample"));
            }
            Ok(p)
        })
        .collect()
}

fn clamp_prob(p: f64) -> (f64, bool) {
    if p < EPS {
        (EPS, true)
    } else if p > 1.0 - EPS {
        (1.0 - EPS, true)
    } else {
        (p, false)
    }
}

/// Discriminator loss `-mean log D(x) - mean log(1 - D(G(z)))` and the
/// non-saturating generator loss `-mean log D(G(z))`. With `side` set,
/// gradients of that side's own loss are returned.
pub fn bce_loss_and_grads(
    gen: &MlpParams,
    disc: &MlpParams,
    batch: &MiniBatch,
    side: Option<Side>,
) -> Result<LossOutput> {
    let n = batch.len() as f64;
    let mut grads = side.map(|s| match s {
        Side::Generator => MlpParams::zeros(&gen.arch),
        Side::Discriminator => MlpParams::zeros(&disc.arch),
    });
    let mut d_loss = 0.0;
    let mut g_loss = 0.0;

    for x in &batch.real {
        let t = disc.trace(x)?;
        let (p, clamped) = clamp_prob(t.output()[0]);
        d_loss -= p.ln();
        if let (Some(Side::Discriminator), Some(g)) = (side, grads.as_mut()) {
            let dp = if clamped { 0.0 } else { -1.0 / (p * n) };
            disc.backward(&t, &[dp], g);
        }
    }

    for z in &batch.latent {
        let gt = gen.trace(z)?;
        let fake = as_point(gt.output())?;
        let dt = disc.trace(&fake)?;
        let (p, clamped) = clamp_prob(dt.output()[0]);
        d_loss -= (1.0 - p).ln();
        g_loss -= p.ln();
        match (side, grads.as_mut()) {
            (Some(Side::Discriminator), Some(g)) => {
                let dp = if clamped { 0.0 } else { 1.0 / ((1.0 - p) * n) };
                disc.backward(&dt, &[dp], g);
            }
            (Some(Side::Generator), Some(g)) => {
                let dp = if clamped { 0.0 } else { -1.0 / (p * n) };
                let dx = disc.input_gradient(&dt, &[dp]);
                gen.backward(&gt, &dx, g);
            }
            _ => {}
        }
    }

    let out = LossOutput {
        generator_loss: g_loss / n,
        discriminator_loss: d_loss / n,
        grads,
    };
    if !(out.generator_loss.is_finite() && out.discriminator_loss.is_finite())
        || out.grads.as_ref().is_some_and(|g| !g.is_finite())
    {
        return Err(Error::numeric("non-finite loss or gradient"));
    }
    Ok(out)
}
