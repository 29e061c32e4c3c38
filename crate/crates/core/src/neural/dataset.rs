//! Mixture of isotropic Gaussians placed evenly on a circle.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingDatasetSpec {
    pub modes: usize,
    pub radius: f64,
    pub std: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RingDatasetSpec {
    fn default() -> Self {
        Self {
            modes: 8,
            radius: 2.0,
            std: 0.2,
            samples: 4096,
            seed: 0,
        }
    }
}

impl RingDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::config("dataset.modes", "must be at least 1"));
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(Error::config("dataset.std", "must be positive"));
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return Err(Error::config("dataset.radius", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.modes)
            .map(|k| {
                let a = TAU * k as f64 / self.modes as f64;
                [self.radius * a.cos(), self.radius * a.sin()]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingDataset {
    pub points: Vec<Point>,
    pub labels: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    mode_label: usize,
}

impl RingDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (p, &mode_label) in self.points.iter().zip(&self.labels) {
            w.serialize(Row {
                x: p[0],
                y: p[1],
                mode_label,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row.map_err(csv_error)?;
            points.push([row.x, row.y]);
            labels.push(row.mode_label);
        }
        Ok(Self { points, labels })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::domain(format!("csv: {e}"))
}

/// Each sample picks a mode uniformly and adds `std * N(0, I)` around its center.
pub fn make_ring_dataset(spec: &RingDatasetSpec) -> Result<RingDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = spec.centers();
    let mut points = Vec::with_capacity(spec.samples);
    let mut labels = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let k = rng.random_range(0..spec.modes);
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        points.push([centers[k][0] + spec.std * dx, centers[k][1] + spec.std * dy]);
        labels.push(k);
    }
    Ok(RingDataset { points, labels })
}
