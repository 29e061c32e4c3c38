//! Success-rate heatmaps of the closed-form coevolution over initial
//! conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toy::coevolution::{run_simple_coevolution, SimpleCoevConfig};
use crate::toy::{expected_mass, generator_distance, ToyDiscriminator, ToyGenerator, ToyTarget};

/// Evenly spaced values `min, min + step, ..., max` shared by both axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(format!("{field}.step"), "must be positive"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::config(format!("{field}.min"), "must be finite and not above max"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeHeatmapSpec {
    pub axis: AxisSpec,
    pub repetitions: usize,
    pub target: [f64; 2],
    /// Generators start uniformly within this distance of the grid point
    /// along each axis.
    pub init_spread: f64,
    /// Discriminator bounds start uniformly in `[-disc_range, disc_range]`.
    pub disc_range: f64,
    pub threshold: f64,
    pub coevolution: SimpleCoevConfig,
}

impl Default for ModeHeatmapSpec {
    fn default() -> Self {
        Self {
            axis: AxisSpec {
                min: -10.0,
                max: 10.0,
                step: 1.0,
            },
            repetitions: 5,
            target: [-3.0, 3.0],
            init_spread: 0.5,
            disc_range: 10.0,
            threshold: 0.1,
            coevolution: SimpleCoevConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscHeatmapSpec {
    /// Centers of the first (x) and second (y) initial interval.
    pub axis: AxisSpec,
    pub repetitions: usize,
    pub target: [f64; 2],
    pub frozen_generator: [f64; 2],
    /// Each initial bound lies uniformly within this distance of its center.
    pub init_spread: f64,
    /// Success when the final best discriminator captures at least this
    /// much target mass.
    pub escape_threshold: f64,
    pub coevolution: SimpleCoevConfig,
}

impl Default for DiscHeatmapSpec {
    fn default() -> Self {
        Self {
            axis: AxisSpec {
                min: -9.5,
                max: 9.5,
                step: 1.0,
            },
            repetitions: 10,
            target: [-1.5, 1.5],
            frozen_generator: [-1.0, 2.5],
            init_spread: 1.0,
            escape_threshold: 0.5,
            coevolution: SimpleCoevConfig {
                evolve_generators: false,
                ..SimpleCoevConfig::default()
            },
        }
    }
}

/// `success[i][j]` belongs to `x = axis[i]`, `y = axis[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub axis: Vec<f64>,
    pub success: Vec<Vec<f64>>,
    pub repetitions: usize,
}

impl HeatmapResult {
    pub fn mean(&self) -> f64 {
        let all: Vec<f64> = self.success.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len() as f64
    }

    pub fn diagonal_mean(&self) -> f64 {
        let n = self.success.len();
        (0..n).map(|i| self.success[i][i]).sum::<f64>() / n as f64
    }

    /// Mean success over cells whose axis values have the given signs
    /// (`true` = positive). Cells on a zero axis value are skipped.
    pub fn quadrant_mean(&self, x_positive: bool, y_positive: bool) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0;
        for (i, x) in self.axis.iter().enumerate() {
            for (j, y) in self.axis.iter().enumerate() {
                if *x != 0.0 && *y != 0.0 && (*x > 0.0) == x_positive && (*y > 0.0) == y_positive {
                    sum += self.success[i][j];
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// The matrix as an image: `x` grows to the right, `y` grows upward.
    pub fn image_rows(&self) -> Vec<Vec<f64>> {
        let n = self.axis.len();
        (0..n)
            .map(|r| (0..n).map(|c| self.success[c][n - 1 - r]).collect())
            .collect()
    }

    /// Rows of `x,y,success`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,success\n");
        for (i, x) in self.axis.iter().enumerate() {
            for (j, y) in self.axis.iter().enumerate() {
                out.push_str(&format!("{x},{y},{}\n", self.success[i][j]));
            }
        }
        out
    }
}

fn run_rng(seed: u64, cell: usize, rep: usize, reps: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((cell * reps + rep) as u64);
    rng
}

fn around<R: Rng + ?Sized>(center: f64, spread: f64, rng: &mut R) -> f64 {
    if spread > 0.0 {
        center + rng.random_range(-spread..=spread)
    } else {
        center
    }
}

fn sweep<F>(axis: &[f64], reps: usize, seed: u64, run: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, f64, &mut ChaCha8Rng) -> Result<bool> + Sync,
{
    let n = axis.len();
    let hits: Vec<Result<usize>> = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let (x, y) = (axis[cell / n], axis[cell % n]);
            let mut hits = 0;
            for rep in 0..reps {
                let mut rng = run_rng(seed, cell, rep, reps);
                hits += run(x, y, &mut rng)? as usize;
            }
            Ok(hits)
        })
        .collect();
    let mut out = vec![vec![0.0; n]; n];
    for (cell, h) in hits.into_iter().enumerate() {
        out[cell / n][cell % n] = h? as f64 / reps as f64;
    }
    Ok(out)
}

fn check_reps(reps: usize, field: &str) -> Result<()> {
    if reps == 0 {
        return Err(Error::config(format!("{field}.repetitions"), "must be at least 1"));
    }
    Ok(())
}

/// Both generator means start near each grid point; success means the best
/// final generator lies within `threshold` of the target.
pub fn mode_collapse_heatmap(spec: &ModeHeatmapSpec, seed: u64) -> Result<HeatmapResult> {
    spec.axis.validate("heatmap_mode.axis")?;
    check_reps(spec.repetitions, "heatmap_mode")?;
    spec.coevolution.validate()?;
    let target = ToyTarget::new(spec.target[0], spec.target[1]);
    let n = spec.coevolution.population;
    let axis = spec.axis.values();
    let success = sweep(&axis, spec.repetitions, seed, |x, y, rng| {
        let gens = (0..n)
            .map(|_| ToyGenerator::new(around(x, spec.init_spread, rng), around(y, spec.init_spread, rng)))
            .collect();
        let r = spec.disc_range;
        let discs = (0..n)
            .map(|_| ToyDiscriminator::repaired([0; 4].map(|_| rng.random_range(-r..=r))))
            .collect();
        let out = run_simple_coevolution(&target, gens, discs, &spec.coevolution, rng)?;
        Ok(generator_distance(&out.best_generator, &target) < spec.threshold)
    })?;
    Ok(HeatmapResult {
        axis,
        success,
        repetitions: spec.repetitions,
    })
}

/// Generators stay at `frozen_generator`; each discriminator's first
/// interval starts around `x` and its second around `y`.
pub fn disc_collapse_heatmap(spec: &DiscHeatmapSpec, seed: u64) -> Result<HeatmapResult> {
    spec.axis.validate("heatmap_disc.axis")?;
    check_reps(spec.repetitions, "heatmap_disc")?;
    spec.coevolution.validate()?;
    let target = ToyTarget::new(spec.target[0], spec.target[1]);
    let frozen = ToyGenerator::new(spec.frozen_generator[0], spec.frozen_generator[1]);
    let n = spec.coevolution.population;
    let cfg = SimpleCoevConfig {
        evolve_generators: false,
        ..spec.coevolution.clone()
    };
    let axis = spec.axis.values();
    let success = sweep(&axis, spec.repetitions, seed, |x, y, rng| {
        let s = spec.init_spread;
        let discs = (0..n)
            .map(|_| {
                ToyDiscriminator::repaired([
                    around(x, s, rng),
                    around(x, s, rng),
                    around(y, s, rng),
                    around(y, s, rng),
                ])
            })
            .collect();
        let out = run_simple_coevolution(&target, vec![frozen; n], discs, &cfg, rng)?;
        Ok(expected_mass(&target, &out.best_discriminator) >= spec.escape_threshold)
    })?;
    Ok(HeatmapResult {
        axis,
        success,
        repetitions: spec.repetitions,
    })
}
