//! Closed-form adversarial model on the real line.
//!
//! Generators are equal mixtures of two unit-variance Gaussians, discriminators
//! are indicators of two ordered intervals, and the adversarial loss
//!
//! ```text
//! L(mu, l, r) = E_{x~target}[D(x)] + E_{x~G_mu}[1 - D(x)]
//! ```
//!
//! is evaluated analytically through the normal CDF. The generator minimizes
//! `L`, the discriminator maximizes it.

pub mod coevolution;
pub mod normal;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that is an equal two-component unit-variance Gaussian mixture.
pub trait GaussianPair {
    fn means(&self) -> [f64; 2];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyGenerator {
    pub mu1: f64,
    pub mu2: f64,
}

impl ToyGenerator {
    pub fn new(mu1: f64, mu2: f64) -> Self {
        Self { mu1, mu2 }
    }

    pub fn params(&self) -> [f64; 2] {
        [self.mu1, self.mu2]
    }

    pub fn mutated<R: Rng + ?Sized>(&self, step: f64, rng: &mut R) -> Self {
        let p = mutate_toy(&self.params(), step, rng);
        Self::new(p[0], p[1])
    }
}

impl GaussianPair for ToyGenerator {
    fn means(&self) -> [f64; 2] {
        [self.mu1, self.mu2]
    }
}

/// The distribution the generators try to match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyTarget {
    pub mu_star: [f64; 2],
}

impl ToyTarget {
    pub fn new(a: f64, b: f64) -> Self {
        Self { mu_star: [a, b] }
    }

    pub fn as_generator(&self) -> ToyGenerator {
        ToyGenerator::new(self.mu_star[0], self.mu_star[1])
    }
}

impl GaussianPair for ToyTarget {
    fn means(&self) -> [f64; 2] {
        self.mu_star
    }
}

/// `D(x) = 1[l1 <= x <= r1] + 1[l2 <= x <= r2]` with `l1 <= r1 <= l2 <= r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyDiscriminator {
    bounds: [f64; 4],
}

impl ToyDiscriminator {
    pub fn new(l1: f64, r1: f64, l2: f64, r2: f64) -> Result<Self> {
        Self::from_bounds([l1, r1, l2, r2])
    }

    pub fn from_bounds(bounds: [f64; 4]) -> Result<Self> {
        if bounds.iter().any(|b| b.is_nan()) {
            return Err(Error::domain("discriminator bound is NaN"));
        }
        if !(bounds[0] <= bounds[1] && bounds[1] <= bounds[2] && bounds[2] <= bounds[3]) {
            return Err(Error::domain(format!(
                "discriminator bounds must satisfy l1 <= r1 <= l2 <= r2, got {bounds:?}"
            )));
        }
        Ok(Self { bounds })
    }

    /// Sorts arbitrary bounds into a valid discriminator.
    pub fn repaired(mut bounds: [f64; 4]) -> Self {
        bounds.sort_by(f64::total_cmp);
        Self { bounds }
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn mutated<R: Rng + ?Sized>(&self, step: f64, rng: &mut R) -> Self {
        let p = mutate_toy(&self.bounds, step, rng);
        Self::repaired([p[0], p[1], p[2], p[3]])
    }
}

/// `F(x) = (Phi(x - mu1) + Phi(x - mu2)) / 2`.
pub fn mixture_cdf(x: f64, gen: &impl GaussianPair) -> f64 {
    let [a, b] = gen.means();
    0.5 * (normal::cdf(x - a) + normal::cdf(x - b))
}

fn mass_of(means: [f64; 2], bounds: [f64; 4]) -> f64 {
    let [l1, r1, l2, r2] = bounds;
    means
        .iter()
        .map(|&m| {
            0.5 * (normal::interval_mass(l1 - m, r1 - m) + normal::interval_mass(l2 - m, r2 - m))
        })
        .sum()
}

/// Probability mass the mixture puts inside the discriminator's two intervals.
pub fn expected_mass(dist: &impl GaussianPair, disc: &ToyDiscriminator) -> f64 {
    mass_of(dist.means(), disc.bounds)
}

pub fn toy_loss(target: &ToyTarget, gen: &ToyGenerator, disc: &ToyDiscriminator) -> f64 {
    // Grouped so that identical masses cancel to exactly 1.
    1.0 + (expected_mass(target, disc) - expected_mass(gen, disc))
}

/// Gradient of [`toy_loss`] with respect to `(mu1, mu2)` and `(l1, r1, l2, r2)`.
pub fn toy_loss_grad(
    target: &ToyTarget,
    gen: &ToyGenerator,
    disc: &ToyDiscriminator,
) -> ([f64; 2], [f64; 4]) {
    let b = disc.bounds;
    let density = |means: [f64; 2], x: f64| -> f64 {
        0.5 * (normal::pdf(x - means[0]) + normal::pdf(x - means[1]))
    };
    let g = gen.means();
    let t = target.mu_star;

    let mut d_mu = [0.0; 2];
    for (k, m) in g.iter().enumerate() {
        // d/dmu of -mass = +0.5 * sum over intervals of [pdf(r - mu) - pdf(l - mu)]
        d_mu[k] = 0.5
            * (normal::pdf(b[1] - m) - normal::pdf(b[0] - m) + normal::pdf(b[3] - m)
                - normal::pdf(b[2] - m));
    }
    let mut d_b = [0.0; 4];
    for (i, x) in b.iter().enumerate() {
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        d_b[i] = sign * (density(t, *x) - density(g, *x));
    }
    (d_mu, d_b)
}

/// Adds `step * N(0, 1)` to every parameter.
pub fn mutate_toy<R: Rng + ?Sized>(params: &[f64], step: f64, rng: &mut R) -> Vec<f64> {
    params
        .iter()
        .map(|p| {
            let z: f64 = rng.sample(StandardNormal);
            p + step * z
        })
        .collect()
}

/// Euclidean distance between the sorted mean pairs, so that relabeling the
/// mixture components does not matter.
pub fn generator_distance(gen: &impl GaussianPair, target: &impl GaussianPair) -> f64 {
    let sorted = |m: [f64; 2]| if m[0] <= m[1] { m } else { [m[1], m[0]] };
    let a = sorted(gen.means());
    let b = sorted(target.means());
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disc(b: [f64; 4]) -> ToyDiscriminator {
        ToyDiscriminator::from_bounds(b).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert!((mixture_cdf(1.5, &ToyGenerator::new(1.5, 1.5)) - 0.5).abs() < 1e-15);
        assert!((mixture_cdf(1e6, &ToyGenerator::new(0.0, 3.0)) - 1.0).abs() < 1e-15);
        assert!((mixture_cdf(0.0, &ToyGenerator::new(-1.0, 1.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        let g = ToyGenerator::new(0.0, 10.0);
        assert_eq!(expected_mass(&g, &disc([1.0, 1.0, 3.0, 3.0])), 0.0);
        let all = disc([-1e6, 0.0, 0.0, 1e6]);
        assert!((expected_mass(&g, &all) - 1.0).abs() < 1e-12);
        let half = expected_mass(&g, &disc([5.0, 15.0, 15.0, 15.0]));
        assert!((half - 0.5).abs() < 1e-6, "{half}");
    }

    #[test]
    fn ordering_is_enforced() {
        assert!(ToyDiscriminator::new(0.0, 2.0, 1.0, 3.0).is_err());
        assert!(ToyDiscriminator::new(0.0, f64::NAN, 1.0, 3.0).is_err());
        let d = ToyDiscriminator::repaired([3.0, 1.0, 2.0, 0.0]);
        assert_eq!(d.bounds(), [0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn loss_examples() {
        let target = ToyTarget::new(0.0, 10.0);
        let d = disc([5.0, 15.0, 15.0, 15.0]);
        assert!((toy_loss(&target, &target.as_generator(), &d) - 1.0).abs() < 1e-15);
        assert_eq!(toy_loss(&target, &ToyGenerator::new(3.0, 4.0), &disc([2.0; 4])), 1.0);
        let l = toy_loss(&target, &ToyGenerator::new(0.0, 0.0), &d);
        assert!((l - 1.5).abs() < 1e-6, "{l}");
    }

    #[test]
    fn distance_examples() {
        let t = ToyTarget::new(-1.0, 2.5);
        assert_eq!(generator_distance(&ToyGenerator::new(2.5, -1.0), &t), 0.0);
        let d = generator_distance(&ToyGenerator::new(0.0, 0.06), &ToyTarget::new(0.0, 0.0));
        assert!((d - 0.06).abs() < 1e-15 && d < 0.1);
        assert_eq!(generator_distance(&ToyGenerator::new(3.0, 4.0), &ToyTarget::new(0.0, 0.0)), 5.0);
    }

    #[test]
    fn mutation_zero_step_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(mutate_toy(&[1.0, -2.0], 0.0, &mut rng), vec![1.0, -2.0]);
        let a = mutate_toy(&[0.0; 4], 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = mutate_toy(&[0.0; 4], 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn mutation_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| mutate_toy(&[0.0], 1.0, &mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn mutated_discriminator_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut d = disc([-1.0, 0.0, 0.5, 2.0]);
        for _ in 0..1000 {
            d = d.mutated(1.0, &mut rng);
            assert!(ToyDiscriminator::from_bounds(d.bounds()).is_ok());
        }
    }
}
