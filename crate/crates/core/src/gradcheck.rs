//! Finite-difference check of the self-teaching update.
//!
//! Each trial draws a random controller and a random binary input, applies
//! one real `self_teach` step, and compares every weight delta with
//! `-learning_rate` times the central difference of the teaching loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::neural::{init_weights, teaching_loss, LayerSpec, NetworkWeights, SelfTaughtController, SensoryInput};

/// Gradients below this magnitude are compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub weights_checked: usize,
    pub max_relative_error: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Central difference of the teaching loss with respect to every action weight.
pub fn numeric_gradient(
    action: &NetworkWeights,
    reinforcement: &NetworkWeights,
    x: &[f64],
    eps: f64,
) -> Vec<f64> {
    let flat = action.to_flat();
    let spec = action.spec();
    (0..flat.len())
        .map(|i| {
            let mut plus = flat.clone();
            plus[i] += eps;
            let mut minus = flat.clone();
            minus[i] -= eps;
            let lp = teaching_loss(&NetworkWeights::from_flat(spec, &plus).unwrap(), reinforcement, x);
            let lm = teaching_loss(&NetworkWeights::from_flat(spec, &minus).unwrap(), reinforcement, x);
            (lp - lm) / (2.0 * eps)
        })
        .collect()
}

pub fn run_gradcheck(spec: LayerSpec, learning_rate: f64, trials: usize, eps: f64, seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let lr = if learning_rate > 0.0 { learning_rate } else { 1.0 };
    for _ in 0..trials {
        let action = init_weights(spec, &mut rng);
        let reinforcement = init_weights(spec, &mut rng);
        let input = SensoryInput::new(rng.random(), rng.random(), rng.random());
        let x = input.to_array();

        let numeric = numeric_gradient(&action, &reinforcement, &x, eps);
        let mut controller = SelfTaughtController::new(action.clone(), reinforcement, lr)
            .expect("shapes agree by construction");
        controller.self_teach(input);

        for ((before, after), g) in action.iter().zip(controller.action.iter()).zip(&numeric) {
            let delta = (after - before) / lr;
            worst = worst.max(relative_error(-delta, *g));
            checked += 1;
        }
    }
    GradCheckReport {
        trials,
        weights_checked: checked,
        max_relative_error: worst,
    }
}
