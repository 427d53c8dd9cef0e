//! Three-layer sigmoid networks and the self-teaching update.
//!
//! A controller owns two networks with identical layer sizes. The action
//! network drives the motors; the reinforcement network is fixed for the
//! lifetime of the agent and its output is the regression target that the
//! action network is pulled toward, one gradient step per world step.
//!
//! There are no bias terms. With an all-zero sensory input every hidden unit
//! sits at 0.5, so the output depends only on the hidden-to-output weights.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Default learning rate of the self-teaching step.
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

/// Layer sizes shared by the action and reinforcement networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    pub n_input: usize,
    pub n_hidden: usize,
    pub n_output: usize,
}

impl Default for LayerSpec {
    fn default() -> Self {
        Self {
            n_input: 3,
            n_hidden: 10,
            n_output: 3,
        }
    }
}

impl LayerSpec {
    pub fn new(n_input: usize, n_hidden: usize, n_output: usize) -> Result<Self> {
        let spec = Self {
            n_input,
            n_hidden,
            n_output,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_input == 0 || self.n_hidden == 0 || self.n_output == 0 {
            return Err(Error::InvalidShape(format!(
                "layer sizes must be at least 1, got {}/{}/{}",
                self.n_input, self.n_hidden, self.n_output
            )));
        }
        Ok(())
    }

    pub fn input_hidden_len(&self) -> usize {
        self.n_hidden * self.n_input
    }

    pub fn hidden_output_len(&self) -> usize {
        self.n_output * self.n_hidden
    }

    /// Total number of synapses in one network.
    pub fn weight_count(&self) -> usize {
        self.input_hidden_len() + self.hidden_output_len()
    }
}

/// Synaptic strengths of one network, both matrices stored row-major.
///
/// `w_ih[j * n_input + i]` connects input `i` to hidden unit `j`;
/// `w_ho[k * n_hidden + j]` connects hidden unit `j` to output `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    spec: LayerSpec,
    w_ih: Vec<f64>,
    w_ho: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(spec: LayerSpec) -> Self {
        Self {
            spec,
            w_ih: vec![0.0; spec.input_hidden_len()],
            w_ho: vec![0.0; spec.hidden_output_len()],
        }
    }

    pub fn from_parts(spec: LayerSpec, w_ih: Vec<f64>, w_ho: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if w_ih.len() != spec.input_hidden_len() || w_ho.len() != spec.hidden_output_len() {
            return Err(Error::InvalidShape(format!(
                "expected {}+{} weights, got {}+{}",
                spec.input_hidden_len(),
                spec.hidden_output_len(),
                w_ih.len(),
                w_ho.len()
            )));
        }
        if !w_ih.iter().chain(&w_ho).all(|w| w.is_finite()) {
            return Err(Error::InvalidShape("non-finite weight".into()));
        }
        Ok(Self { spec, w_ih, w_ho })
    }

    /// Builds a network from a flat slice in canonical order
    /// (`w_ih` row-major, then `w_ho` row-major).
    pub fn from_flat(spec: LayerSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.weight_count() {
            return Err(Error::InvalidShape(format!(
                "expected {} weights, got {}",
                spec.weight_count(),
                flat.len()
            )));
        }
        let (ih, ho) = flat.split_at(spec.input_hidden_len());
        Self::from_parts(spec, ih.to_vec(), ho.to_vec())
    }

    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    pub fn w_ih(&self) -> &[f64] {
        &self.w_ih
    }

    pub fn w_ho(&self) -> &[f64] {
        &self.w_ho
    }

    /// Input-to-hidden weight from input `i` to hidden unit `j`.
    pub fn ih(&self, j: usize, i: usize) -> f64 {
        self.w_ih[j * self.spec.n_input + i]
    }

    /// Hidden-to-output weight from hidden unit `j` to output `k`.
    pub fn ho(&self, k: usize, j: usize) -> f64 {
        self.w_ho[k * self.spec.n_hidden + j]
    }

    /// All weights in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w_ih.iter().chain(self.w_ho.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w_ih.iter_mut().chain(self.w_ho.iter_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.w_ih.len() + self.w_ho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws every weight from N(0, 1): `w_ih` row-major, then `w_ho` row-major.
pub fn init_weights<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> NetworkWeights {
    let mut weights = NetworkWeights::zeros(spec);
    for w in weights.iter_mut() {
        *w = rng.sample(StandardNormal);
    }
    weights
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary left/front/right food detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SensoryInput {
    pub left: bool,
    pub front: bool,
    pub right: bool,
}

impl SensoryInput {
    pub const NONE: Self = Self {
        left: false,
        front: false,
        right: false,
    };
    pub const LEFT: Self = Self {
        left: true,
        front: false,
        right: false,
    };
    pub const FRONT: Self = Self {
        left: false,
        front: true,
        right: false,
    };
    pub const RIGHT: Self = Self {
        left: false,
        front: false,
        right: true,
    };

    pub fn new(left: bool, front: bool, right: bool) -> Self {
        Self { left, front, right }
    }

    /// Network input vector in (left, front, right) order.
    pub fn to_array(self) -> [f64; 3] {
        [
            f64::from(u8::from(self.left)),
            f64::from(u8::from(self.front)),
            f64::from(u8::from(self.right)),
        ]
    }

    pub fn is_empty(self) -> bool {
        !(self.left || self.front || self.right)
    }
}

/// Motor primitive selected from the three network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    TurnLeft,
    Forward,
    TurnRight,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::TurnLeft, Action::Forward, Action::TurnRight];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        match self {
            Action::TurnLeft => 0,
            Action::Forward => 1,
            Action::TurnRight => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::TurnLeft => "left",
            Action::Forward => "forward",
            Action::TurnRight => "right",
        }
    }
}

/// Layer activations; stays on the stack for the default sizes.
pub type Layer = SmallVec<[f64; 16]>;

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Layer,
    pub output: Layer,
}

/// Forward pass keeping the hidden layer, for backpropagation.
pub fn forward_full(w: &NetworkWeights, x: &[f64]) -> Activations {
    let spec = w.spec;
    debug_assert_eq!(x.len(), spec.n_input);
    let hidden: Layer = w
        .w_ih
        .chunks_exact(spec.n_input)
        .map(|row| sigmoid(row.iter().zip(x).map(|(w, x)| w * x).sum()))
        .collect();
    let output = w
        .w_ho
        .chunks_exact(spec.n_hidden)
        .map(|row| sigmoid(row.iter().zip(&hidden).map(|(w, h)| w * h).sum()))
        .collect();
    Activations { hidden, output }
}

/// Output activations for a sensory input.
pub fn forward(w: &NetworkWeights, x: SensoryInput) -> Layer {
    forward_full(w, &x.to_array()).output
}

/// Index of the largest output; the lowest index wins ties.
pub fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate().skip(1) {
        if v > y[best] {
            best = i;
        }
    }
    best
}

pub fn choose_action(y: &[f64]) -> Action {
    assert_eq!(y.len(), 3, "action selection needs exactly three outputs");
    Action::ALL[argmax(y)]
}

/// Half squared error between the action and reinforcement outputs.
pub fn teaching_loss(action: &NetworkWeights, reinforcement: &NetworkWeights, x: &[f64]) -> f64 {
    let a = forward_full(action, x).output;
    let r = forward_full(reinforcement, x).output;
    0.5 * a.iter().zip(&r).map(|(a, r)| (a - r).powi(2)).sum::<f64>()
}

/// Analytic gradient of [`teaching_loss`] with respect to the action weights,
/// laid out like [`NetworkWeights`]. The reinforcement output is a constant.
pub fn teaching_gradient(
    action: &NetworkWeights,
    reinforcement: &NetworkWeights,
    x: &[f64],
) -> NetworkWeights {
    let spec = action.spec;
    let act = forward_full(action, x);
    let target = forward_full(reinforcement, x).output;

    let delta_out: Layer = act
        .output
        .iter()
        .zip(&target)
        .map(|(&a, &r)| (a - r) * a * (1.0 - a))
        .collect();

    let mut grad = NetworkWeights::zeros(spec);
    for (k, &d) in delta_out.iter().enumerate() {
        let row = &mut grad.w_ho[k * spec.n_hidden..(k + 1) * spec.n_hidden];
        for (g, &h) in row.iter_mut().zip(&act.hidden) {
            *g = d * h;
        }
    }
    for (j, &h) in act.hidden.iter().enumerate() {
        let back: f64 = delta_out
            .iter()
            .enumerate()
            .map(|(k, &d)| d * action.ho(k, j))
            .sum();
        let delta_hidden = back * h * (1.0 - h);
        let row = &mut grad.w_ih[j * spec.n_input..(j + 1) * spec.n_input];
        for (g, &xi) in row.iter_mut().zip(x) {
            *g = delta_hidden * xi;
        }
    }
    grad
}

/// Action network plus its lifetime teacher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTaughtController {
    pub action: NetworkWeights,
    reinforcement: NetworkWeights,
    learning_rate: f64,
}

impl SelfTaughtController {
    pub fn new(
        action: NetworkWeights,
        reinforcement: NetworkWeights,
        learning_rate: f64,
    ) -> Result<Self> {
        if action.spec != reinforcement.spec {
            return Err(Error::InvalidShape(
                "action and reinforcement networks must share layer sizes".into(),
            ));
        }
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidShape(format!(
                "learning rate must be a finite non-negative number, got {learning_rate}"
            )));
        }
        Ok(Self {
            action,
            reinforcement,
            learning_rate,
        })
    }

    pub fn reinforcement(&self) -> &NetworkWeights {
        &self.reinforcement
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn act(&self, x: SensoryInput) -> Action {
        choose_action(&forward(&self.action, x))
    }

    /// One gradient step pulling the action output toward the
    /// reinforcement output for this input. Same arithmetic as
    /// [`teaching_gradient`], applied in place.
    pub fn self_teach(&mut self, x: SensoryInput) {
        if self.learning_rate == 0.0 {
            return;
        }
        let x = x.to_array();
        let spec = self.action.spec;
        let lr = self.learning_rate;
        let act = forward_full(&self.action, &x);
        let target = forward_full(&self.reinforcement, &x).output;
        let delta_out: Layer = act
            .output
            .iter()
            .zip(&target)
            .map(|(&a, &r)| (a - r) * a * (1.0 - a))
            .collect();
        // hidden deltas use the hidden-to-output weights before this update
        let delta_hidden: Layer = act
            .hidden
            .iter()
            .enumerate()
            .map(|(j, &h)| {
                let back: f64 = delta_out
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| d * self.action.ho(k, j))
                    .sum();
                back * h * (1.0 - h)
            })
            .collect();
        for (row, &d) in self.action.w_ho.chunks_exact_mut(spec.n_hidden).zip(&delta_out) {
            for (w, &h) in row.iter_mut().zip(&act.hidden) {
                *w -= lr * (d * h);
            }
        }
        for (row, &d) in self.action.w_ih.chunks_exact_mut(spec.n_input).zip(&delta_hidden) {
            for (w, &xi) in row.iter_mut().zip(&x) {
                *w -= lr * (d * xi);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_inputs() -> impl Iterator<Item = SensoryInput> + Clone {
        (0..8u8).map(|b| SensoryInput::new(b & 1 != 0, b & 2 != 0, b & 4 != 0))
    }

    #[test]
    fn default_spec_has_sixty_weights() {
        let spec = LayerSpec::default();
        assert_eq!((spec.n_input, spec.n_hidden, spec.n_output), (3, 10, 3));
        assert_eq!(spec.weight_count(), 60);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(init_weights(spec, &mut rng).len(), 60);
    }

    #[test]
    fn zero_sized_layer_is_rejected() {
        assert!(LayerSpec::new(3, 0, 3).is_err());
        assert!(LayerSpec::new(0, 10, 3).is_err());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = LayerSpec::default();
        let a = init_weights(spec, &mut ChaCha8Rng::seed_from_u64(42));
        let b = init_weights(spec, &mut ChaCha8Rng::seed_from_u64(42));
        let c = init_weights(spec, &mut ChaCha8Rng::seed_from_u64(43));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_follows_canonical_draw_order() {
        let spec = LayerSpec::new(2, 2, 2).unwrap();
        let w = init_weights(spec, &mut ChaCha8Rng::seed_from_u64(9));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        assert_eq!(w.w_ih(), &draws[..4]);
        assert_eq!(w.w_ho(), &draws[4..]);
    }

    #[test]
    fn init_is_standard_normal() {
        let spec = LayerSpec::new(10, 10, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<f64> = (0..50)
            .flat_map(|_| init_weights(spec, &mut rng).to_flat())
            .collect();
        assert_eq!(samples.len(), 10_000);
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.05, "mean {mean}");
        assert!((0.95..=1.05).contains(&var.sqrt()), "std {}", var.sqrt());
    }

    #[test]
    fn zero_weights_output_one_half() {
        let w = NetworkWeights::zeros(LayerSpec::default());
        for x in all_inputs() {
            assert_eq!(forward(&w, x).as_slice(), &[0.5, 0.5, 0.5]);
        }
    }

    #[test]
    fn zero_input_depends_only_on_hidden_to_output() {
        let spec = LayerSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = init_weights(spec, &mut rng);
        let mut b = init_weights(spec, &mut rng);
        b.w_ho = a.w_ho.clone();
        let ya = forward(&a, SensoryInput::NONE);
        assert_eq!(ya, forward(&b, SensoryInput::NONE));
        // scalar evaluation: every hidden unit is sigmoid(0) = 0.5
        for (k, y) in ya.iter().enumerate() {
            let z: f64 = (0..10).map(|j| 0.5 * a.ho(k, j)).sum();
            assert!((y - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn small_network_matches_scalar_evaluation() {
        let spec = LayerSpec::new(3, 2, 3).unwrap();
        let w_ih = vec![0.3, -1.2, 0.7, 1.5, 0.25, -0.4];
        let w_ho = vec![0.9, -0.6, -1.1, 0.45, 2.0, -0.3];
        let w = NetworkWeights::from_parts(spec, w_ih, w_ho).unwrap();
        let y = forward(&w, SensoryInput::new(true, false, true));

        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let h0 = s(0.3 * 1.0 + -1.2 * 0.0 + 0.7 * 1.0);
        let h1 = s(1.5 * 1.0 + 0.25 * 0.0 + -0.4 * 1.0);
        let expected = [
            s(0.9 * h0 + -0.6 * h1),
            s(-1.1 * h0 + 0.45 * h1),
            s(2.0 * h0 + -0.3 * h1),
        ];
        for (a, b) in y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_picks_largest_with_low_index_ties() {
        assert_eq!(choose_action(&[0.9, 0.2, 0.1]), Action::TurnLeft);
        assert_eq!(choose_action(&[0.1, 0.2, 0.9]), Action::TurnRight);
        assert_eq!(choose_action(&[0.1, 0.9, 0.2]), Action::Forward);
        assert_eq!(choose_action(&[0.5, 0.5, 0.5]), Action::TurnLeft);
        assert_eq!(choose_action(&[0.1, 0.5, 0.5]), Action::Forward);
    }

    #[test]
    fn action_index_roundtrip() {
        for a in Action::ALL {
            assert_eq!(Action::from_index(a.index()), Some(a));
        }
        assert_eq!(Action::from_index(3), None);
    }

    #[test]
    fn teaching_toward_itself_is_a_no_op() {
        let spec = LayerSpec::default();
        let w = init_weights(spec, &mut ChaCha8Rng::seed_from_u64(3));
        let mut c = SelfTaughtController::new(w.clone(), w.clone(), 0.01).unwrap();
        for x in all_inputs() {
            c.self_teach(x);
        }
        assert_eq!(c.action, w);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let spec = LayerSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = init_weights(spec, &mut rng);
        let r = init_weights(spec, &mut rng);
        let mut c = SelfTaughtController::new(a.clone(), r, 0.0).unwrap();
        c.self_teach(SensoryInput::FRONT);
        assert_eq!(c.action, a);
    }

    #[test]
    fn teaching_never_touches_reinforcement() {
        let spec = LayerSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = init_weights(spec, &mut rng);
        let r = init_weights(spec, &mut rng);
        let mut c = SelfTaughtController::new(a.clone(), r.clone(), 0.5).unwrap();
        for x in all_inputs().cycle().take(100) {
            c.self_teach(x);
        }
        assert_ne!(c.action, a);
        let before: Vec<u64> = r.iter().map(|w| w.to_bits()).collect();
        let after: Vec<u64> = c.reinforcement().iter().map(|w| w.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn zero_input_leaves_input_weights_alone() {
        let spec = LayerSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = init_weights(spec, &mut rng);
        let r = init_weights(spec, &mut rng);
        let mut c = SelfTaughtController::new(a.clone(), r, 0.01).unwrap();
        c.self_teach(SensoryInput::NONE);
        assert_eq!(c.action.w_ih(), a.w_ih());
        assert_ne!(c.action.w_ho(), a.w_ho());
    }

    #[test]
    fn mismatched_modules_are_rejected() {
        let a = NetworkWeights::zeros(LayerSpec::default());
        let r = NetworkWeights::zeros(LayerSpec::new(3, 4, 3).unwrap());
        assert!(SelfTaughtController::new(a.clone(), r, 0.01).is_err());
        assert!(SelfTaughtController::new(a.clone(), a.clone(), -0.1).is_err());
        assert!(SelfTaughtController::new(a.clone(), a, f64::NAN).is_err());
    }

    #[test]
    fn from_parts_checks_shape_and_finiteness() {
        let spec = LayerSpec::new(1, 1, 1).unwrap();
        assert!(NetworkWeights::from_parts(spec, vec![1.0], vec![1.0]).is_ok());
        assert!(NetworkWeights::from_parts(spec, vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(NetworkWeights::from_parts(spec, vec![f64::INFINITY], vec![1.0]).is_err());
    }
}
