//! Dense feed-forward networks with exact analytic gradients.
//!
//! This is the numeric kernel behind the feature extractor, the regressor,
//! and the critic. It is deliberately small: dense layers, ReLU/identity
//! activations, inverted dropout, L2 kernel regularization, and
//! adaptive-moment updates. Gradients are written out by hand, including
//! gradients with respect to the *inputs* (needed by the critic's gradient
//! penalty) and the closed-form parameter gradient of the penalty itself.
//!
//! Training mutates an `Mlp` through `&mut`; eval-mode forward passes take
//! `&self` and are safe to run from concurrent readers.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise activation of a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Configuration of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    /// Probability of dropping a unit in train mode; must be < 1.
    pub dropout_rate: f64,
    /// Weight of the squared kernel norm added to the loss.
    pub l2_strength: f64,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            input_dim,
            output_dim,
            activation,
            dropout_rate: 0.0,
            l2_strength: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn with_l2(mut self, strength: f64) -> Self {
        self.l2_strength = strength;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig("layer dims must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.l2_strength < 0.0 || !self.l2_strength.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "l2_strength must be nonnegative, got {}",
                self.l2_strength
            )));
        }
        Ok(())
    }
}

/// One dense layer: `out = act(x Wᵀ + b)`, weights stored out_dim × in_dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub spec: LayerSpec,
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// A feed-forward network as an ordered list of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Per-layer intermediate results retained by a forward pass. Backward
/// consumes these; eval-mode activations carry no dropout masks.
#[derive(Debug, Clone)]
pub struct Activations {
    input: Array2<f64>,
    /// Pre-activation values per layer.
    zs: Vec<Array2<f64>>,
    /// Post-activation, post-dropout outputs per layer.
    outs: Vec<Array2<f64>>,
    /// Dropout masks (already scaled by 1/(1-rate)); `None` in eval mode or
    /// for layers without dropout.
    masks: Vec<Option<Array2<f64>>>,
}

impl Activations {
    /// Final layer output.
    pub fn output(&self) -> &Array2<f64> {
        self.outs.last().expect("network has at least one layer")
    }
}

/// Gradients mirroring the parameter shapes of an `Mlp`.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    biases: Array1::zeros(l.biases.raw_dim()),
                })
                .collect(),
        }
    }

    /// Accumulates `scale * other` into self.
    pub fn add_scaled(&mut self, other: &MlpGrads, scale: f64) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.scaled_add(scale, &b.weights);
            a.biases.scaled_add(scale, &b.biases);
        }
    }
}

/// Builds a network from layer specs. Weights are drawn uniformly from
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases start at zero. The draw is
/// deterministic in `seed`.
pub fn mlp_init(specs: &[LayerSpec], seed: u64) -> Result<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mlp::init_with_rng(specs, &mut rng)
}

impl Mlp {
    pub fn init_with_rng(specs: &[LayerSpec], rng: &mut impl Rng) -> Result<Mlp> {
        if specs.is_empty() {
            return Err(Error::EmptyData("mlp needs at least one layer"));
        }
        for spec in specs {
            spec.validate()?;
        }
        for pair in specs.windows(2) {
            if pair[0].output_dim != pair[1].input_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: pair[0].output_dim,
                    got: pair[1].input_dim,
                });
            }
        }
        let layers = specs
            .iter()
            .map(|spec| {
                let scale = 1.0 / (spec.input_dim as f64).sqrt();
                let weights = Array2::from_shape_fn((spec.output_dim, spec.input_dim), |_| {
                    rng.gen_range(-scale..=scale)
                });
                DenseLayer {
                    spec: *spec,
                    weights,
                    biases: Array1::zeros(spec.output_dim),
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Mlp> {
        if layers.is_empty() {
            return Err(Error::EmptyData("mlp needs at least one layer"));
        }
        for l in &layers {
            l.spec.validate()?;
            if l.weights.dim() != (l.spec.output_dim, l.spec.input_dim)
                || l.biases.len() != l.spec.output_dim
            {
                return Err(Error::DimensionMismatch {
                    context: "layer parameter shapes",
                    expected: l.spec.output_dim,
                    got: l.biases.len(),
                });
            }
        }
        for pair in layers.windows(2) {
            if pair[0].spec.output_dim != pair[1].spec.input_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: pair[0].spec.output_dim,
                    got: pair[1].spec.input_dim,
                });
            }
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().spec.output_dim
    }

    /// Sum of `l2_strength * ||W||²` over layers: the penalty the L2 terms
    /// of `backward` correspond to.
    pub fn l2_penalty(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.spec.l2_strength * l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    pub fn all_weights_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite()))
    }

    fn check_batch(&self, batch: &Array2<f64>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "forward batch columns",
                expected: self.input_dim(),
                got: batch.ncols(),
            });
        }
        Ok(())
    }

    /// Eval-mode forward pass: no dropout, no mutation, pure.
    pub fn forward_eval(&self, batch: &Array2<f64>) -> Result<Activations> {
        self.check_batch(batch)?;
        Ok(self.forward_inner(batch, None::<&mut ChaCha8Rng>))
    }

    /// Train-mode forward pass. Layers with a positive dropout rate sample
    /// an inverted-dropout mask (survivors scaled by 1/(1-rate)); masks are
    /// retained in the activations for backward.
    pub fn forward_train(&self, batch: &Array2<f64>, rng: &mut impl Rng) -> Result<Activations> {
        self.check_batch(batch)?;
        Ok(self.forward_inner(batch, Some(rng)))
    }

    fn forward_inner(&self, batch: &Array2<f64>, mut rng: Option<&mut impl Rng>) -> Activations {
        let n = batch.nrows();
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut outs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = if k == 0 { batch } else { &outs[k - 1] };
            let mut z = prev.dot(&layer.weights.t());
            z += &layer.biases;
            let mut out = match layer.spec.activation {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Identity => z.clone(),
            };
            let mask = match (&mut rng, layer.spec.dropout_rate) {
                (Some(rng), rate) if rate > 0.0 => {
                    let keep = 1.0 - rate;
                    let scale = 1.0 / keep;
                    let m = Array2::from_shape_fn((n, layer.spec.output_dim), |_| {
                        if rng.gen::<f64>() < keep {
                            scale
                        } else {
                            0.0
                        }
                    });
                    out *= &m;
                    Some(m)
                }
                _ => None,
            };
            zs.push(z);
            outs.push(out);
            masks.push(mask);
        }
        Activations {
            input: batch.clone(),
            zs,
            outs,
            masks,
        }
    }

    /// Backpropagates `upstream` (∂loss/∂output) through activations
    /// produced by a matching forward pass. Returns parameter gradients —
    /// including the L2 term `2·l2_strength·W` — and the gradient of the
    /// scalarized loss with respect to the batch inputs.
    pub fn backward(
        &self,
        acts: &Activations,
        upstream: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        self.backward_raw(acts, upstream, true)
    }

    /// Like `backward` but lets callers skip the L2 term so it can be added
    /// exactly once when several backward passes are accumulated per step.
    pub(crate) fn backward_raw(
        &self,
        acts: &Activations,
        upstream: &Array2<f64>,
        include_l2: bool,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        if acts.outs.len() != self.layers.len()
            || acts.input.ncols() != self.input_dim()
            || acts.output().dim() != upstream.dim()
        {
            return Err(Error::StaleActivations);
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if acts.zs[k].ncols() != layer.spec.output_dim {
                return Err(Error::StaleActivations);
            }
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &acts.masks[k] {
                g *= mask;
            }
            if layer.spec.activation == Activation::Relu {
                // Subgradient 0 at exactly 0.
                g.zip_mut_with(&acts.zs[k], |gv, &z| {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
            let prev = if k == 0 { &acts.input } else { &acts.outs[k - 1] };
            let mut gw = g.t().dot(prev);
            if include_l2 && layer.spec.l2_strength > 0.0 {
                gw.scaled_add(2.0 * layer.spec.l2_strength, &layer.weights);
            }
            let gb = g.sum_axis(Axis(0));
            grads.push(LayerGrads {
                weights: gw,
                biases: gb,
            });
            g = g.dot(&layer.weights);
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, g))
    }
}

/// Per-sample input gradients `∇_h f(h_i)` of a scalar-output network,
/// evaluated in eval mode. For ReLU nets this is the exact piecewise
/// gradient under the realized activation pattern.
pub fn critic_input_gradient(critic: &Mlp, latents: &Array2<f64>) -> Result<Array2<f64>> {
    if critic.output_dim() != 1 {
        return Err(Error::NonScalarOutput(critic.output_dim()));
    }
    let acts = critic.forward_eval(latents)?;
    let upstream = Array2::ones((latents.nrows(), 1));
    let (_, input_grads) = critic.backward_raw(&acts, &upstream, false)?;
    Ok(input_grads)
}

/// Value and closed-form parameter gradient of the gradient penalty
/// `mean((||∇_ĥ f(ĥ)||₂ − 1)²)` over a batch of interpolates.
///
/// Supported critics: depth 1 (linear) or depth 2 (ReLU hidden, identity
/// out). The ReLU activation pattern is treated as locally constant, which
/// is exact away from kink boundaries. Bias gradients are zero because the
/// input gradient does not depend on the biases under a fixed pattern.
pub fn gradient_penalty_grads(critic: &Mlp, interpolates: &Array2<f64>) -> Result<(f64, MlpGrads)> {
    if critic.output_dim() != 1 {
        return Err(Error::NonScalarOutput(critic.output_dim()));
    }
    let depth = critic.layers.len();
    if depth > 2 {
        return Err(Error::InvalidConfig(format!(
            "gradient penalty supports critics of depth <= 2, got {depth}"
        )));
    }
    if critic.layers.last().unwrap().spec.activation != Activation::Identity {
        return Err(Error::InvalidConfig(
            "critic output layer must use the identity activation".into(),
        ));
    }
    let n = interpolates.nrows();
    if n == 0 {
        return Err(Error::EmptyData("gradient penalty needs interpolates"));
    }
    let mut grads = MlpGrads::zeros_like(critic);
    let mut value = 0.0;

    if depth == 1 {
        // Linear critic: gradient = w for every sample.
        let w = critic.layers[0].weights.row(0);
        let norm = w.dot(&w).sqrt();
        value = (norm - 1.0).powi(2);
        if norm > 0.0 {
            let coef = 2.0 * (norm - 1.0) / norm;
            for (j, gw) in grads.layers[0].weights.row_mut(0).iter_mut().enumerate() {
                *gw = coef * w[j];
            }
        }
        return Ok((value, grads));
    }

    if critic.layers[0].spec.activation != Activation::Relu {
        return Err(Error::InvalidConfig(
            "depth-2 critic hidden layer must use relu".into(),
        ));
    }
    let w1 = &critic.layers[0].weights; // h × l
    let b1 = &critic.layers[0].biases;
    let w2 = critic.layers[1].weights.row(0); // h
    let hidden = w1.nrows();
    let inv_n = 1.0 / n as f64;
    for row in interpolates.rows() {
        // Active pattern and masked second-layer weights.
        let mut v = Array1::<f64>::zeros(hidden); // d ⊙ w2
        for a in 0..hidden {
            let z = w1.row(a).dot(&row) + b1[a];
            if z > 0.0 {
                v[a] = w2[a];
            }
        }
        let g = w1.t().dot(&v); // input gradient, length l
        let norm = g.dot(&g).sqrt();
        value += inv_n * (norm - 1.0).powi(2);
        if norm == 0.0 {
            continue;
        }
        let coef = 2.0 * inv_n * (norm - 1.0) / norm;
        let u = g.mapv(|x| coef * x); // ∂penalty/∂g for this sample
        // ∂/∂W1 = v uᵀ ; ∂/∂w2 = d ⊙ (W1 u)
        let w1u = w1.dot(&u);
        for a in 0..hidden {
            if v[a] != 0.0 {
                let va = v[a];
                grads.layers[0]
                    .weights
                    .row_mut(a)
                    .zip_mut_with(&u, |gw, &uj| *gw += va * uj);
                grads.layers[1].weights[(0, a)] += w1u[a];
            }
        }
    }
    Ok((value, grads))
}

/// Adaptive-moment optimizer state; accumulator shapes mirror the network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<LayerGrads>,
    v: Vec<LayerGrads>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, learning_rate: f64) -> Self {
        let zeros = || MlpGrads::zeros_like(mlp).layers;
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One bias-corrected adaptive-moment update; increments the step counter.
pub fn adam_step(mlp: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != mlp.layers.len() {
        return Err(Error::DimensionMismatch {
            context: "adam gradient layers",
            expected: mlp.layers.len(),
            got: grads.layers.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    let update = move |p: &mut f64, m: &mut f64, v: &mut f64, grad: f64| {
        *m = b1 * *m + (1.0 - b1) * grad;
        *v = b2 * *v + (1.0 - b2) * grad * grad;
        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
    };
    for (k, layer) in mlp.layers.iter_mut().enumerate() {
        let g = &grads.layers[k];
        if g.weights.dim() != layer.weights.dim() || g.biases.len() != layer.biases.len() {
            return Err(Error::DimensionMismatch {
                context: "adam gradient shapes",
                expected: layer.biases.len(),
                got: g.biases.len(),
            });
        }
        for (((p, m), v), grad) in layer
            .weights
            .iter_mut()
            .zip(state.m[k].weights.iter_mut())
            .zip(state.v[k].weights.iter_mut())
            .zip(g.weights.iter())
        {
            update(p, m, v, *grad);
        }
        for (((p, m), v), grad) in layer
            .biases
            .iter_mut()
            .zip(state.m[k].biases.iter_mut())
            .zip(state.v[k].biases.iter_mut())
            .zip(g.biases.iter())
        {
            update(p, m, v, *grad);
        }
    }
    Ok(())
}
