use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cellgan::neural::{bce_loss_and_grads, sgd_step, Architecture, MiniBatch, MlpParams, Side};

fn instance(seed: u64, hidden: usize, batch: usize) -> (MlpParams, MlpParams, MiniBatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = MlpParams::init(&Architecture::generator(2, hidden), &mut rng);
    let disc = MlpParams::init(&Architecture::discriminator(hidden), &mut rng);
    let mut normal = |scale: f64| scale * rng.sample::<f64, _>(StandardNormal);
    let real = (0..batch).map(|_| [normal(2.0), normal(2.0)]).collect();
    let latent = (0..batch).map(|_| vec![normal(1.0), normal(1.0)]).collect();
    (gen, disc, MiniBatch::new(real, latent).unwrap())
}

fn side_loss(gen: &MlpParams, disc: &MlpParams, batch: &MiniBatch, side: Side) -> f64 {
    let out = bce_loss_and_grads(gen, disc, batch, None).unwrap();
    match side {
        Side::Generator => out.generator_loss,
        Side::Discriminator => out.discriminator_loss,
    }
}

/// Largest relative error between analytic and central-difference gradients.
fn max_relative_error(gen: &MlpParams, disc: &MlpParams, batch: &MiniBatch, side: Side) -> f64 {
    let analytic = bce_loss_and_grads(gen, disc, batch, Some(side)).unwrap().grads.unwrap().flatten();
    let own = match side {
        Side::Generator => gen,
        Side::Discriminator => disc,
    };
    let flat = own.flatten();
    let h = 1e-5;
    let loss_at = |theta: &[f64]| {
        let p = MlpParams::unflatten(&own.arch, theta).unwrap();
        match side {
            Side::Generator => side_loss(&p, disc, batch, side),
            Side::Discriminator => side_loss(gen, &p, batch, side),
        }
    };
    let mut worst: f64 = 0.0;
    let mut theta = flat.clone();
    for (k, a) in analytic.iter().enumerate() {
        theta[k] = flat[k] + h;
        let up = loss_at(&theta);
        theta[k] = flat[k] - h;
        let down = loss_at(&theta);
        theta[k] = flat[k];
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
    }
    worst
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..10 {
        let (gen, disc, batch) = instance(seed, 6, 8);
        for side in [Side::Generator, Side::Discriminator] {
            let err = max_relative_error(&gen, &disc, &batch, side);
            assert!(err < 1e-4, "seed {seed} {side:?}: {err}");
        }
    }
}

#[test]
fn small_discriminator_step_does_not_raise_its_loss() {
    let mut raised = 0;
    for seed in 0..200 {
        let (gen, disc, batch) = instance(1000 + seed, 8, 16);
        let out = bce_loss_and_grads(&gen, &disc, &batch, Some(Side::Discriminator)).unwrap();
        let stepped = sgd_step(&disc, &out.grads.unwrap(), 1e-4).unwrap();
        if side_loss(&gen, &stepped, &batch, Side::Discriminator) > out.discriminator_loss {
            raised += 1;
        }
    }
    assert_eq!(raised, 0);
}
