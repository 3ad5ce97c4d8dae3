//! Minimal fully-connected Q-network: forward pass, backpropagation
//! through rectifier layers, action-masked mean-squared-error loss, and
//! Adam. Everything is 64-bit and allocation-simple; at the scales this
//! crate targets, determinism and easy oracle comparison beat speed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CheckpointError, ConfigError};

/// Weights and biases of a fully-connected network with rectifier
/// hidden layers and an identity output layer. Weight matrices are
/// row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Post-activation values of every layer for one input, kept for the
/// backward pass. `activations[0]` is the input itself.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache has layers")
    }
}

/// Parameter gradients, same shapes as [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    d_weights: Vec<Vec<f64>>,
    d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            d_weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn d_weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        let in_dim = self.d_weights[layer].len() / self.d_biases[layer].len();
        self.d_weights[layer][row * in_dim + col]
    }

    pub fn d_bias(&self, layer: usize, row: usize) -> f64 {
        self.d_biases[layer][row]
    }
}

impl MlpParams {
    /// He-uniform initialization: weights uniform on
    /// `[-sqrt(6/fan_in), sqrt(6/fan_in)]`, biases zero.
    pub fn init(layer_dims: &[usize], rng: &mut impl Rng) -> Result<Self, ConfigError> {
        if layer_dims.len() < 2 {
            return Err(ConfigError::new(
                "layer_dims",
                format!("need at least input and output dims, got {layer_dims:?}"),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(ConfigError::new(
                "layer_dims",
                format!("all dims must be >= 1, got {layer_dims:?}"),
            ));
        }
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        self.weights[layer][row * self.layer_dims[layer] + col]
    }

    pub fn weight_mut(&mut self, layer: usize, row: usize, col: usize) -> &mut f64 {
        let in_dim = self.layer_dims[layer];
        &mut self.weights[layer][row * in_dim + col]
    }

    pub fn bias_mut(&mut self, layer: usize, row: usize) -> &mut f64 {
        &mut self.biases[layer][row]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Forward pass. Pure: the network is untouched, all intermediate
    /// state lives in the returned cache.
    pub fn forward(&self, input: &[f64]) -> ForwardCache {
        assert_eq!(
            input.len(),
            self.input_dim(),
            "input dim {} does not match network input {}",
            input.len(),
            self.input_dim()
        );
        let mut activations = Vec::with_capacity(self.layer_dims.len());
        activations.push(input.to_vec());
        for layer in 0..self.weights.len() {
            let in_dim = self.layer_dims[layer];
            let out_dim = self.layer_dims[layer + 1];
            let last_layer = layer + 1 == self.layer_dims.len() - 1;
            let prev = &activations[layer];
            let w = &self.weights[layer];
            let b = &self.biases[layer];
            let mut out = Vec::with_capacity(out_dim);
            for o in 0..out_dim {
                let mut z = b[o];
                let row = &w[o * in_dim..(o + 1) * in_dim];
                for (wi, xi) in row.iter().zip(prev.iter()) {
                    z += wi * xi;
                }
                out.push(if last_layer { z } else { z.max(0.0) });
            }
            activations.push(out);
        }
        ForwardCache { activations }
    }

    /// Q-values for one encoded state.
    pub fn q_values(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input).output().to_vec()
    }

    /// Backward pass for one sample: accumulates parameter gradients
    /// into `grads` given the loss gradient at the output layer.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) {
        assert_eq!(output_grad.len(), self.output_dim(), "output grad dim mismatch");
        assert_eq!(
            grads.d_weights.len(),
            self.weights.len(),
            "gradient shape mismatch"
        );
        let mut delta = output_grad.to_vec();
        for layer in (0..self.weights.len()).rev() {
            let in_dim = self.layer_dims[layer];
            let out_dim = self.layer_dims[layer + 1];
            let prev = &cache.activations[layer];
            let dw = &mut grads.d_weights[layer];
            let db = &mut grads.d_biases[layer];
            for o in 0..out_dim {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut dw[o * in_dim..(o + 1) * in_dim];
                    for (slot, xi) in row.iter_mut().zip(prev.iter()) {
                        *slot += d * xi;
                    }
                    db[o] += d;
                }
            }
            if layer > 0 {
                let w = &self.weights[layer];
                let mut next_delta = vec![0.0; in_dim];
                for o in 0..out_dim {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &w[o * in_dim..(o + 1) * in_dim];
                        for (nd, wi) in next_delta.iter_mut().zip(row.iter()) {
                            *nd += d * wi;
                        }
                    }
                }
                // Rectifier derivative from the post-activation value.
                for (nd, &a) in next_delta.iter_mut().zip(prev.iter()) {
                    if a <= 0.0 {
                        *nd = 0.0;
                    }
                }
                delta = next_delta;
            }
        }
    }
}

/// Action-masked MSE over a batch: `mean((Q[s, a] - y)^2)`. The output
/// gradient is nonzero only at the taken-action entries, with value
/// `2 (Q - y) / batch`.
pub fn mse_loss_and_grad(
    q_values: &[Vec<f64>],
    taken_actions: &[usize],
    targets: &[f64],
) -> (f64, Vec<Vec<f64>>) {
    assert_eq!(q_values.len(), taken_actions.len(), "batch size mismatch");
    assert_eq!(q_values.len(), targets.len(), "batch size mismatch");
    let batch = q_values.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(q_values.len());
    for ((q, &action), &target) in q_values.iter().zip(taken_actions).zip(targets) {
        assert!(action < q.len(), "action index {action} out of range");
        let diff = q[action] - target;
        loss += diff * diff;
        let mut g = vec![0.0; q.len()];
        g[action] = 2.0 * diff / batch;
        grads.push(g);
    }
    (loss / batch, grads)
}

/// Adam optimizer state: first and second moments per parameter plus
/// the step counter used for bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        Self {
            m_weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update with bias correction.
pub fn adam_step(params: &mut MlpParams, grads: &Gradients, state: &mut AdamState, lr: f64) {
    assert_eq!(
        params.weights.len(),
        grads.d_weights.len(),
        "gradient shape mismatch"
    );
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let update = |value: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
        assert_eq!(value.len(), grad.len(), "gradient shape mismatch");
        for i in 0..value.len() {
            let g = grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            value[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    };
    for layer in 0..params.weights.len() {
        update(
            &mut params.weights[layer],
            &grads.d_weights[layer],
            &mut state.m_weights[layer],
            &mut state.v_weights[layer],
        );
        update(
            &mut params.biases[layer],
            &grads.d_biases[layer],
            &mut state.m_biases[layer],
            &mut state.v_biases[layer],
        );
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"QNET";
const CHECKPOINT_VERSION: u32 = 1;

/// Serializes parameters to the flat binary checkpoint format:
/// magic, version, layer count, dims, then weights and biases per layer
/// as little-endian f64. `from_checkpoint_bytes(to_checkpoint_bytes(p))`
/// is the identity, bit for bit.
pub fn to_checkpoint_bytes(params: &MlpParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.layer_dims.len() as u32).to_le_bytes());
    for &dim in &params.layer_dims {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for layer in 0..params.weights.len() {
        for &w in &params.weights[layer] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for &b in &params.biases[layer] {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<MlpParams, CheckpointError> {
    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8], CheckpointError> {
        if cursor + n > bytes.len() {
            return Err(CheckpointError::Format("truncated checkpoint".into()));
        }
        let slice = &bytes[cursor..cursor + n];
        cursor += n;
        Ok(slice)
    };

    if take(4)? != CHECKPOINT_MAGIC {
        return Err(CheckpointError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Format(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let dim_count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if dim_count < 2 {
        return Err(CheckpointError::Format("fewer than two layer dims".into()));
    }
    let mut layer_dims = Vec::with_capacity(dim_count);
    for _ in 0..dim_count {
        let dim = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(CheckpointError::Format("zero layer dim".into()));
        }
        layer_dims.push(dim);
    }
    let mut weights = Vec::with_capacity(dim_count - 1);
    let mut biases = Vec::with_capacity(dim_count - 1);
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let mut w = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            w.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let mut b = Vec::with_capacity(fan_out);
        for _ in 0..fan_out {
            b.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        weights.push(w);
        biases.push(b);
    }
    if cursor != bytes.len() {
        return Err(CheckpointError::Format("trailing bytes".into()));
    }
    Ok(MlpParams {
        layer_dims,
        weights,
        biases,
    })
}

pub fn write_checkpoint(params: &MlpParams, path: &std::path::Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_checkpoint_bytes(params))?;
    Ok(())
}

pub fn read_checkpoint(path: &std::path::Path) -> Result<MlpParams, CheckpointError> {
    from_checkpoint_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn init_zeroes_biases_and_bounds_weights() {
        let mut rng = rng::stream(1, "init");
        let params = MlpParams::init(&[6, 4, 3], &mut rng).unwrap();
        assert!(params.biases.iter().flatten().all(|&b| b == 0.0));
        // fan_in 6: bound sqrt(6/6) = 1.
        assert!(params.weights[0].iter().all(|w| w.abs() <= 1.0));
        let bound = (6.0f64 / 4.0).sqrt();
        assert!(params.weights[1].iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = MlpParams::init(&[5, 8, 3], &mut rng::stream(7, "i")).unwrap();
        let b = MlpParams::init(&[5, 8, 3], &mut rng::stream(7, "i")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(MlpParams::init(&[4], &mut rng::stream(0, "i")).is_err());
        assert!(MlpParams::init(&[4, 0, 2], &mut rng::stream(0, "i")).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut params = MlpParams::init(&[3, 4, 2], &mut rng::stream(2, "z")).unwrap();
        for w in &mut params.weights {
            w.fill(0.0);
        }
        let out = params.q_values(&[0.3, -0.7, 1.1]);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let mut params = MlpParams::init(&[3, 3], &mut rng::stream(3, "id")).unwrap();
        for w in &mut params.weights {
            w.fill(0.0);
        }
        for i in 0..3 {
            *params.weight_mut(0, i, i) = 1.0;
        }
        let input = [0.25, -1.5, 2.0];
        // Single layer is the output layer: identity activation.
        assert_eq!(params.q_values(&input), input.to_vec());
    }

    #[test]
    fn forward_matches_straight_line_reevaluation() {
        let params = MlpParams::init(&[4, 5, 3], &mut rng::stream(4, "fwd")).unwrap();
        let input = [0.1, -0.4, 0.9, 0.05];

        // Independent re-evaluation with explicit loops.
        let mut hidden = vec![0.0f64; 5];
        for o in 0..5 {
            let mut z = params.biases[0][o];
            for i in 0..4 {
                z += params.weights[0][o * 4 + i] * input[i];
            }
            hidden[o] = z.max(0.0);
        }
        let mut expected = vec![0.0f64; 3];
        for o in 0..3 {
            let mut z = params.biases[1][o];
            for i in 0..5 {
                z += params.weights[1][o * 5 + i] * hidden[i];
            }
            expected[o] = z;
        }

        let got = params.q_values(&input);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_pure() {
        let params = MlpParams::init(&[3, 4, 2], &mut rng::stream(5, "pure")).unwrap();
        let before = params.clone();
        let _ = params.q_values(&[1.0, 2.0, 3.0]);
        assert_eq!(params, before);
    }

    #[test]
    #[should_panic(expected = "input dim")]
    fn forward_rejects_wrong_input_dim() {
        let params = MlpParams::init(&[3, 2], &mut rng::stream(6, "dim")).unwrap();
        params.forward(&[1.0, 2.0]);
    }

    #[test]
    fn masked_loss_zero_when_predictions_match() {
        let q = vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.0]];
        let (loss, grads) = mse_loss_and_grad(&q, &[1, 0], &[2.0, -1.0]);
        assert_eq!(loss, 0.0);
        assert!(grads.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn masked_loss_single_sample_arithmetic() {
        let q = vec![vec![0.0, 2.0]];
        let (loss, grads) = mse_loss_and_grad(&q, &[1], &[0.0]);
        assert_eq!(loss, 4.0);
        assert_eq!(grads[0], vec![0.0, 4.0]);
    }

    #[test]
    fn masked_loss_gradient_matches_finite_differences() {
        let mut rng = rng::stream(8, "fd");
        use rand::Rng as _;
        let batch = 6;
        let actions: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..4)).collect();
        let targets: Vec<f64> = (0..batch).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let q: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();

        let (_, grads) = mse_loss_and_grad(&q, &actions, &targets);
        let h = 1e-6;
        for s in 0..batch {
            for a in 0..4 {
                let mut plus = q.clone();
                plus[s][a] += h;
                let mut minus = q.clone();
                minus[s][a] -= h;
                let (lp, _) = mse_loss_and_grad(&plus, &actions, &targets);
                let (lm, _) = mse_loss_and_grad(&minus, &actions, &targets);
                let numeric = (lp - lm) / (2.0 * h);
                assert!(
                    (numeric - grads[s][a]).abs() < 1e-6,
                    "sample {s} action {a}: numeric {numeric} analytic {}",
                    grads[s][a]
                );
            }
        }
    }

    /// Central-difference gradient check through the whole network on
    /// the 4-2-3 reference shape.
    #[test]
    fn backprop_matches_finite_differences_on_4_2_3() {
        let mut rng = rng::stream(9, "gradcheck");
        use rand::Rng as _;
        let params = MlpParams::init(&[4, 2, 3], &mut rng).unwrap();
        let input: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = 1usize;
        let target = 0.37;

        let loss_of = |p: &MlpParams| {
            let q = p.q_values(&input);
            let (loss, _) = mse_loss_and_grad(&[q], &[action], &[target]);
            loss
        };

        let cache = params.forward(&input);
        let (_, out_grads) =
            mse_loss_and_grad(&[cache.output().to_vec()], &[action], &[target]);
        let mut grads = Gradients::zeros_like(&params);
        params.backward_accumulate(&cache, &out_grads[0], &mut grads);

        let h = 1e-5;
        let mut per = params.clone();
        for layer in 0..per.layer_count() {
            let (in_dim, out_dim) = (per.layer_dims[layer], per.layer_dims[layer + 1]);
            for r in 0..out_dim {
                for c in 0..in_dim {
                    let orig = *per.weight_mut(layer, r, c);
                    *per.weight_mut(layer, r, c) = orig + h;
                    let lp = loss_of(&per);
                    *per.weight_mut(layer, r, c) = orig - h;
                    let lm = loss_of(&per);
                    *per.weight_mut(layer, r, c) = orig;
                    let numeric = (lp - lm) / (2.0 * h);
                    let analytic = grads.d_weight(layer, r, c);
                    let scale = numeric.abs().max(analytic.abs()).max(1e-8);
                    assert!(
                        (numeric - analytic).abs() / scale < 1e-4,
                        "layer {layer} w[{r},{c}]: numeric {numeric} analytic {analytic}"
                    );
                }
                let orig = *per.bias_mut(layer, r);
                *per.bias_mut(layer, r) = orig + h;
                let lp = loss_of(&per);
                *per.bias_mut(layer, r) = orig - h;
                let lm = loss_of(&per);
                *per.bias_mut(layer, r) = orig;
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grads.d_bias(layer, r);
                let scale = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / scale < 1e-4,
                    "layer {layer} b[{r}]: numeric {numeric} analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn adam_ignores_zero_gradients_from_fresh_state() {
        let mut params = MlpParams::init(&[3, 4, 2], &mut rng::stream(10, "adam")).unwrap();
        let before = params.clone();
        let grads = Gradients::zeros_like(&params);
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, 0.01);
        assert_eq!(params, before);
        assert_eq!(state.step_count, 1);
        assert!(state.m_weights.iter().flatten().all(|&m| m == 0.0));
        assert!(state.v_weights.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // Single scalar parameter, gradient 1: bias-corrected update is
        // -lr * g / (|g| + eps) ~ -lr.
        let mut params = MlpParams::init(&[1, 1], &mut rng::stream(11, "adam1")).unwrap();
        params.weights[0][0] = 0.0;
        let mut grads = Gradients::zeros_like(&params);
        grads.d_weights[0][0] = 1.0;
        let mut state = AdamState::new(&params);
        let lr = 0.05;
        adam_step(&mut params, &grads, &mut state, lr);
        assert!((params.weights[0][0] + lr).abs() < 1e-9);
    }

    /// A single-layer network trained against a fixed linear target
    /// reaches negligible loss quickly.
    #[test]
    fn adam_fits_a_linear_target() {
        let mut rng = rng::stream(12, "fit");
        use rand::Rng as _;
        let mut params = MlpParams::init(&[3, 2], &mut rng).unwrap();
        let mut state = AdamState::new(&params);

        // Fixed dataset from a fixed linear map.
        let truth = [[0.5, -1.0, 0.25], [1.5, 0.75, -0.5]];
        let inputs: Vec<Vec<f64>> = (0..32)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<Vec<f64>> = inputs
            .iter()
            .map(|x| {
                truth
                    .iter()
                    .map(|row| row.iter().zip(x).map(|(w, xi)| w * xi).sum())
                    .collect()
            })
            .collect();

        let mut last_loss = f64::INFINITY;
        for step in 0..5000 {
            let mut batch_q = Vec::new();
            let mut actions = Vec::new();
            let mut targets = Vec::new();
            let mut caches = Vec::new();
            for (i, x) in inputs.iter().enumerate() {
                let cache = params.forward(x);
                let action = (step + i) % 2;
                batch_q.push(cache.output().to_vec());
                actions.push(action);
                targets.push(labels[i][action]);
                caches.push(cache);
            }
            let (loss, out_grads) = mse_loss_and_grad(&batch_q, &actions, &targets);
            last_loss = loss;
            if loss < 1e-7 {
                break;
            }
            let mut grads = Gradients::zeros_like(&params);
            for (cache, g) in caches.iter().zip(&out_grads) {
                params.backward_accumulate(cache, g, &mut grads);
            }
            adam_step(&mut params, &grads, &mut state, 0.01);
        }
        assert!(last_loss < 1e-6, "final loss {last_loss}");
    }

    #[test]
    fn checkpoint_roundtrip_is_bitwise() {
        let params = MlpParams::init(&[6, 16, 16, 27], &mut rng::stream(13, "ckpt")).unwrap();
        let bytes = to_checkpoint_bytes(&params);
        let restored = from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(params, restored);
        assert_eq!(bytes, to_checkpoint_bytes(&restored));
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(from_checkpoint_bytes(b"nope").is_err());
        let params = MlpParams::init(&[3, 2], &mut rng::stream(14, "bad")).unwrap();
        let mut bytes = to_checkpoint_bytes(&params);
        bytes.truncate(bytes.len() - 3);
        assert!(from_checkpoint_bytes(&bytes).is_err());
        let mut padded = to_checkpoint_bytes(&params);
        padded.push(0);
        assert!(from_checkpoint_bytes(&padded).is_err());
    }
}
