//! Discrete non-Archimedean networks.
//!
//! Layer `l` has one neuron per element of `G_l`, so `p^l` neurons. The
//! previous state `X^{[l-1]}` lives on `G_{l-1}` and is first copied up the
//! tree (`X̲^{[l-1]}(k) = X^{[l-1]}(Λ_l(k))`), then mixed:
//!
//! ```text
//! Z^[l] = W^[l] · X̲^[l-1] + θ^[l],    X^[l] = σ_M(Z^[l])
//! ```
//!
//! A convolutional layer has `W^[l]_{j,k} = w(j - k)` with the subtraction
//! taken in `G_l`, so the same kernel yields different matrices in the two
//! characteristics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localfield::{Characteristic, FieldConfig};
use crate::testfn::{check_finite, embed_values, TestFunction};

/// Scaled hyperbolic tangent `σ_M(u) = M tanh(u)`, valued in `(-M, M)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation {
    bound: f64,
}

impl Activation {
    pub fn scaled_tanh(bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "activation bound M must be positive and finite, got {bound}"
            )));
        }
        Ok(Self { bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn apply(&self, u: f64) -> f64 {
        self.bound * u.tanh()
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let t = u.tanh();
        self.bound * (1.0 - t * t)
    }

    /// `σ_M^{-1}(y) = atanh(y / M)`, defined for `|y| < M`.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let r = y / self.bound;
        (r.abs() < 1.0).then(|| r.atanh())
    }

    /// Global Lipschitz constant, `M · sup |tanh'| = M`.
    pub fn lipschitz(&self) -> f64 {
        self.bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "conv")]
    Convolutional,
}

impl std::str::FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(LayerKind::Dense),
            "conv" | "convolutional" => Ok(LayerKind::Convolutional),
            other => Err(Error::Parse(format!(
                "unknown layer kind {other:?} (expected \"dense\" or \"conv\")"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    /// Row-major `p^l × p^l` matrix; entry `(rank j, rank k)` is `w(j, k)`.
    Dense(Vec<f64>),
    /// Kernel of length `p^l`; entry `rank d` is `w(d)`.
    Convolutional(Vec<f64>),
}

impl Weights {
    pub fn kind(&self) -> LayerKind {
        match self {
            Weights::Dense(_) => LayerKind::Dense,
            Weights::Convolutional(_) => LayerKind::Convolutional,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Weights::Dense(w) | Weights::Convolutional(w) => w,
        }
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        match self {
            Weights::Dense(w) | Weights::Convolutional(w) => w,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    level: u32,
    weights: Weights,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(cfg: &FieldConfig, level: u32, weights: Weights, bias: Vec<f64>) -> Result<Self> {
        let n = cfg.size(level)?;
        let expected = match weights {
            Weights::Dense(_) => n
                .checked_mul(n)
                .ok_or(Error::Capacity { p: cfg.p(), level })?,
            Weights::Convolutional(_) => n,
        };
        if weights.values().len() != expected {
            return Err(Error::Shape {
                expected,
                actual: weights.values().len(),
            });
        }
        if bias.len() != n {
            return Err(Error::Shape {
                expected: n,
                actual: bias.len(),
            });
        }
        check_finite(weights.values())?;
        check_finite(&bias)?;
        Ok(Self {
            level,
            weights,
            bias,
        })
    }

    pub fn zeros(cfg: &FieldConfig, level: u32, kind: LayerKind) -> Result<Self> {
        let n = cfg.size(level)?;
        let weights = match kind {
            LayerKind::Dense => Weights::Dense(vec![0.0; n * n]),
            LayerKind::Convolutional => Weights::Convolutional(vec![0.0; n]),
        };
        Self::new(cfg, level, weights, vec![0.0; n])
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn kind(&self) -> LayerKind {
        self.weights.kind()
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        self.weights.values_mut()
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// `Z = W x + θ` for an already lifted state `x`.
    pub(crate) fn weighted_input(&self, cfg: &FieldConfig, lifted: &[f64]) -> Vec<f64> {
        let n = self.bias.len();
        match &self.weights {
            Weights::Dense(w) => w
                .chunks_exact(n)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(lifted).map(|(a, x)| a * x).sum::<f64>() + b)
                .collect(),
            Weights::Convolutional(kernel) => (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| lifted[k] * kernel[cfg.sub_rank(self.level, j, k)])
                        .sum::<f64>()
                        + self.bias[j]
                })
                .collect(),
        }
    }

    /// `Wᵀ δ`.
    pub(crate) fn transpose_apply(&self, cfg: &FieldConfig, delta: &[f64]) -> Vec<f64> {
        let n = self.bias.len();
        let mut out = vec![0.0; n];
        match &self.weights {
            Weights::Dense(w) => {
                for (row, d) in w.chunks_exact(n).zip(delta) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * d;
                    }
                }
            }
            Weights::Convolutional(kernel) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = (0..n)
                        .map(|j| kernel[cfg.sub_rank(self.level, j, k)] * delta[j])
                        .sum();
                }
            }
        }
        out
    }
}

/// Copies a state on `G_{l-1}` up to `G_l`: entry `k` of the result is the
/// input at `Λ_l(k)`, which in rank order is `rank(k) mod p^{l-1}`.
pub fn lift_state(cfg: &FieldConfig, state: &[f64]) -> Vec<f64> {
    embed_values(state, cfg.p() as usize)
}

/// Adjoint of [`lift_state`]: sums each parent's `p` children.
pub fn lift_adjoint(cfg: &FieldConfig, values: &[f64]) -> Result<Vec<f64>> {
    let p = cfg.p() as usize;
    if !values.len().is_multiple_of(p) {
        return Err(Error::Shape {
            expected: values.len().div_ceil(p) * p,
            actual: values.len(),
        });
    }
    let n = values.len() / p;
    let mut out = values[..n].to_vec();
    for chunk in values.chunks_exact(n).skip(1) {
        for (o, v) in out.iter_mut().zip(chunk) {
            *o += v;
        }
    }
    Ok(out)
}

/// Equivalent dense layer of a convolutional one: entry `(j, k)` is
/// `kernel(j - k)`. Dense layers are returned unchanged.
pub fn conv_to_dense(cfg: &FieldConfig, layer: &Layer) -> Layer {
    match &layer.weights {
        Weights::Dense(_) => layer.clone(),
        Weights::Convolutional(kernel) => {
            let n = kernel.len();
            let mut matrix = Vec::with_capacity(n * n);
            for j in 0..n {
                for k in 0..n {
                    matrix.push(kernel[cfg.sub_rank(layer.level, j, k)]);
                }
            }
            Layer {
                level: layer.level,
                weights: Weights::Dense(matrix),
                bias: layer.bias.clone(),
            }
        }
    }
}

/// Every intermediate quantity of a forward pass. Index `i` of `lifted`,
/// `weighted` and `states[i + 1]` belongs to layer level `L + 1 + i`;
/// `states[0]` is the input.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub states: Vec<Vec<f64>>,
    pub lifted: Vec<Vec<f64>>,
    pub weighted: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.states.last().expect("trace holds the input state")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    cfg: FieldConfig,
    input_level: u32,
    activation: Activation,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(
        cfg: FieldConfig,
        input_level: u32,
        activation: Activation,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        if input_level < 1 {
            return Err(Error::InvalidParameter(
                "input level L must be at least 1".into(),
            ));
        }
        if layers.is_empty() {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            let expected = input_level + 1 + i as u32;
            if layer.level != expected {
                return Err(Error::LevelMismatch {
                    expected,
                    actual: layer.level,
                });
            }
            let n = cfg.size(layer.level)?;
            if layer.bias.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: layer.bias.len(),
                });
            }
        }
        Ok(Self {
            cfg,
            input_level,
            activation,
            layers,
        })
    }

    pub fn zeros(
        cfg: FieldConfig,
        input_level: u32,
        depth: u32,
        activation: Activation,
        kind: LayerKind,
    ) -> Result<Self> {
        let layers = (1..=depth)
            .map(|i| Layer::zeros(&cfg, input_level + i, kind))
            .collect::<Result<_>>()?;
        Self::new(cfg, input_level, activation, layers)
    }

    /// Weights and biases drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(
        cfg: FieldConfig,
        input_level: u32,
        depth: u32,
        activation: Activation,
        kind: LayerKind,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(cfg, input_level, depth, activation, kind)?;
        for layer in &mut net.layers {
            for w in layer.weights_mut() {
                *w = rng.gen_range(-scale..=scale);
            }
            for b in layer.bias_mut() {
                *b = rng.gen_range(-scale..=scale);
            }
        }
        Ok(net)
    }

    pub fn cfg(&self) -> FieldConfig {
        self.cfg
    }

    pub fn input_level(&self) -> u32 {
        self.input_level
    }

    pub fn depth(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn output_level(&self) -> u32 {
        self.input_level + self.depth()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.values().len() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.values());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`Network::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Shape {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        check_finite(params)?;
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.values().len());
            l.weights_mut().copy_from_slice(w);
            let (b, tail) = tail.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Same network with every convolutional layer expanded to a dense one.
    pub fn to_dense(&self) -> Network {
        Network {
            layers: self
                .layers
                .iter()
                .map(|l| conv_to_dense(&self.cfg, l))
                .collect(),
            ..self.clone()
        }
    }

    /// Forward pass on a raw state vector over `G_L`.
    pub fn forward_values(&self, input: &[f64]) -> Result<ForwardTrace> {
        let n = self.cfg.size(self.input_level)?;
        if input.len() != n {
            return Err(Error::Shape {
                expected: n,
                actual: input.len(),
            });
        }
        let mut trace = ForwardTrace {
            states: vec![input.to_vec()],
            lifted: Vec::with_capacity(self.layers.len()),
            weighted: Vec::with_capacity(self.layers.len()),
        };
        for layer in &self.layers {
            let lifted = lift_state(&self.cfg, trace.output());
            let z = layer.weighted_input(&self.cfg, &lifted);
            let x: Vec<f64> = z.iter().map(|&u| self.activation.apply(u)).collect();
            if let Some(neuron) = x.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLayer {
                    level: layer.level,
                    neuron,
                });
            }
            trace.lifted.push(lifted);
            trace.weighted.push(z);
            trace.states.push(x);
        }
        Ok(trace)
    }

    /// Runs the network on `input ∈ D^L`, returning the output in `D^{L+Δ}`
    /// and the full trace.
    pub fn forward(&self, input: &TestFunction) -> Result<(TestFunction, ForwardTrace)> {
        self.cfg.ensure_same(&input.cfg())?;
        if input.level() != self.input_level {
            return Err(Error::LevelMismatch {
                expected: self.input_level,
                actual: input.level(),
            });
        }
        let trace = self.forward_values(input.coeffs())?;
        let out = TestFunction::new(self.cfg, self.output_level(), trace.output().to_vec())?;
        Ok((out, trace))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(s)?.try_into()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerFile {
    pub level: u32,
    pub kind: LayerKind,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// On-disk model form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub p: u32,
    #[serde(rename = "char")]
    pub characteristic: Characteristic,
    #[serde(rename = "L")]
    pub input_level: u32,
    pub delta: u32,
    #[serde(rename = "M")]
    pub bound: f64,
    pub layers: Vec<LayerFile>,
}

impl From<&Network> for ModelFile {
    fn from(net: &Network) -> Self {
        Self {
            p: net.cfg.p() as u32,
            characteristic: net.cfg.characteristic(),
            input_level: net.input_level,
            delta: net.depth(),
            bound: net.activation.bound(),
            layers: net
                .layers
                .iter()
                .map(|l| LayerFile {
                    level: l.level,
                    kind: l.kind(),
                    weights: l.weights.values().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for Network {
    type Error = Error;

    fn try_from(m: ModelFile) -> Result<Self> {
        let cfg = FieldConfig::new(m.p, m.characteristic)?;
        if m.layers.len() != m.delta as usize {
            return Err(Error::Shape {
                expected: m.delta as usize,
                actual: m.layers.len(),
            });
        }
        let layers = m
            .layers
            .into_iter()
            .map(|l| {
                let weights = match l.kind {
                    LayerKind::Dense => Weights::Dense(l.weights),
                    LayerKind::Convolutional => Weights::Convolutional(l.weights),
                };
                Layer::new(&cfg, l.level, weights, l.bias)
            })
            .collect::<Result<_>>()?;
        Network::new(
            cfg,
            m.input_level,
            Activation::scaled_tanh(m.bound)?,
            layers,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u32, c: Characteristic) -> FieldConfig {
        FieldConfig::new(p, c).unwrap()
    }

    const BOTH: [Characteristic; 2] = [Characteristic::Positive, Characteristic::Zero];

    #[test]
    fn activation_shape() {
        let a = Activation::scaled_tanh(2.0).unwrap();
        assert_eq!(a.apply(0.0), 0.0);
        assert!(a.apply(50.0) <= 2.0 && a.apply(-50.0) >= -2.0);
        assert_eq!(a.apply(-0.3), -a.apply(0.3));
        let y = a.apply(0.7);
        assert!((a.inverse(y).unwrap() - 0.7).abs() < 1e-15);
        assert!(a.inverse(2.0).is_none());
        let h = 1e-6;
        let fd = (a.apply(0.4 + h) - a.apply(0.4 - h)) / (2.0 * h);
        assert!((fd - a.derivative(0.4)).abs() < 1e-9);
        assert!(Activation::scaled_tanh(0.0).is_err());
    }

    #[test]
    fn lift_examples() {
        let c = cfg(2, Characteristic::Zero);
        assert_eq!(lift_state(&c, &[1.0, 2.0]), vec![1.0, 2.0, 1.0, 2.0]);
        let c3 = cfg(3, Characteristic::Positive);
        assert_eq!(lift_state(&c3, &[4.0; 3]), vec![4.0; 9]);
        // agrees with the Λ table
        for l in 1..=3 {
            let x: Vec<f64> = (0..c3.size(l - 1).unwrap())
                .map(|i| i as f64 * 0.5 - 1.0)
                .collect();
            let lifted = lift_state(&c3, &x);
            for k in c3.enumerate(l).unwrap() {
                let parent = c3.project(&k).unwrap();
                assert_eq!(lifted[c3.rank(&k)], x[c3.rank(&parent)]);
            }
        }
        assert_eq!(
            lift_adjoint(&c, &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![4.0, 6.0]
        );
        assert!(lift_adjoint(&c3, &[1.0; 4]).is_err());
    }

    #[test]
    fn zero_weights_yield_activated_bias() {
        let c = cfg(3, Characteristic::Zero);
        let act = Activation::scaled_tanh(1.5).unwrap();
        let mut net = Network::zeros(c, 1, 2, act, LayerKind::Dense).unwrap();
        let last = net.layers_mut().last_mut().unwrap();
        last.bias_mut().iter_mut().for_each(|b| *b = 0.3);
        let x = TestFunction::constant(c, 1, 0.9).unwrap();
        let (y, trace) = net.forward(&x).unwrap();
        assert_eq!(y.level(), 3);
        assert!(y.coeffs().iter().all(|&v| v == act.apply(0.3)));
        assert_eq!(trace.states.len(), 3);
        assert_eq!(trace.weighted[0].len(), 9);
        assert_eq!(trace.lifted[1].len(), 27);
    }

    #[test]
    fn inverse_bias_reproduces_target() {
        let c = cfg(2, Characteristic::Positive);
        let act = Activation::scaled_tanh(2.0).unwrap();
        let target = [1.0, -1.0, 0.5, -0.5];
        let bias = target.iter().map(|&t| act.inverse(t).unwrap()).collect();
        let layer = Layer::new(&c, 2, Weights::Dense(vec![0.0; 16]), bias).unwrap();
        let net = Network::new(c, 1, act, vec![layer]).unwrap();
        let (y, _) = net
            .forward(&TestFunction::new(c, 1, vec![0.3, -0.8]).unwrap())
            .unwrap();
        for (a, b) in y.coeffs().iter().zip(target) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_rejects_wrong_input() {
        let c = cfg(2, Characteristic::Zero);
        let net = Network::zeros(
            c,
            2,
            1,
            Activation::scaled_tanh(1.0).unwrap(),
            LayerKind::Dense,
        )
        .unwrap();
        assert!(matches!(
            net.forward(&TestFunction::constant(c, 1, 0.0).unwrap()),
            Err(Error::LevelMismatch { .. })
        ));
        let other = cfg(2, Characteristic::Positive);
        assert!(matches!(
            net.forward(&TestFunction::constant(other, 2, 0.0).unwrap()),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn conv_identity_kernel_is_identity_matrix() {
        for ch in BOTH {
            let c = cfg(3, ch);
            let mut kernel = vec![0.0; 9];
            kernel[0] = 1.0;
            let layer = Layer::new(&c, 2, Weights::Convolutional(kernel), vec![0.0; 9]).unwrap();
            let dense = conv_to_dense(&c, &layer);
            let Weights::Dense(m) = dense.weights() else {
                panic!()
            };
            for j in 0..9 {
                for k in 0..9 {
                    assert_eq!(m[j * 9 + k], if j == k { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn conv_matrix_depends_on_characteristic() {
        let mut kernel = vec![0.0; 4];
        kernel[1] = 1.0;
        let mats: Vec<Vec<f64>> = BOTH
            .iter()
            .map(|&ch| {
                let c = cfg(2, ch);
                let layer = Layer::new(&c, 2, Weights::Convolutional(kernel.clone()), vec![0.0; 4])
                    .unwrap();
                conv_to_dense(&c, &layer).weights().values().to_vec()
            })
            .collect();
        // j - k = 1: digit-wise (pos) pairs ranks {0,1},{2,3}; mod 4 (zero) is a 4-cycle
        #[rustfmt::skip]
        let pos = vec![
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        #[rustfmt::skip]
        let zero = vec![
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        assert_eq!(mats[0], pos);
        assert_eq!(mats[1], zero);
    }

    #[test]
    fn conv_and_dense_forward_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [2, 3] {
            for ch in BOTH {
                let c = cfg(p, ch);
                let act = Activation::scaled_tanh(2.0).unwrap();
                for _ in 0..5 {
                    let net =
                        Network::random(c, 1, 2, act, LayerKind::Convolutional, 0.8, &mut rng)
                            .unwrap();
                    let dense = net.to_dense();
                    let n = c.size(1).unwrap();
                    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let a = net.forward_values(&x).unwrap();
                    let b = dense.forward_values(&x).unwrap();
                    for (u, v) in a.output().iter().zip(b.output()) {
                        assert!((u - v).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_supported_kernel_ignores_characteristic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut kernel = vec![0.0; 9];
        kernel[0] = 0.7;
        let bias: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = [0.2, -0.4, 0.9];
        let outs: Vec<Vec<f64>> = BOTH
            .iter()
            .map(|&ch| {
                let c = cfg(3, ch);
                let layer = Layer::new(&c, 2, Weights::Convolutional(kernel.clone()), bias.clone())
                    .unwrap();
                let net =
                    Network::new(c, 1, Activation::scaled_tanh(1.0).unwrap(), vec![layer]).unwrap();
                net.forward_values(&x).unwrap().output().to_vec()
            })
            .collect();
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn outputs_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = cfg(2, Characteristic::Zero);
        let act = Activation::scaled_tanh(0.5).unwrap();
        let net = Network::random(c, 2, 3, act, LayerKind::Dense, 0.3, &mut rng).unwrap();
        let trace = net.forward_values(&[5.0, -3.0, 2.0, 0.0]).unwrap();
        for (i, state) in trace.states.iter().enumerate().skip(1) {
            assert_eq!(state.len(), 1 << (2 + i));
            assert!(state.iter().all(|v| v.abs() < 0.5));
        }
        // tanh rounds to ±1 once |Z| exceeds about 19, so saturated layers reach ±M in f64
        let net = Network::random(c, 2, 3, act, LayerKind::Dense, 30.0, &mut rng).unwrap();
        let trace = net.forward_values(&[5.0, -3.0, 2.0, 0.0]).unwrap();
        assert!(trace
            .states
            .iter()
            .skip(1)
            .flatten()
            .all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [LayerKind::Dense, LayerKind::Convolutional] {
            let c = cfg(3, Characteristic::Positive);
            let net = Network::random(
                c,
                1,
                2,
                Activation::scaled_tanh(1.7).unwrap(),
                kind,
                1.0,
                &mut rng,
            )
            .unwrap();
            let s = net.to_json().unwrap();
            assert_eq!(Network::from_json(&s).unwrap(), net);
        }
        let bad = r#"{"p":2,"char":"pos","L":1,"delta":1,"M":1.0,"layers":[{"level":3,"kind":"dense","weights":[],"bias":[]}]}"#;
        assert!(Network::from_json(bad).is_err());
    }

    #[test]
    fn parameters_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = cfg(2, Characteristic::Zero);
        let mut net = Network::random(
            c,
            1,
            2,
            Activation::scaled_tanh(1.0).unwrap(),
            LayerKind::Dense,
            1.0,
            &mut rng,
        )
        .unwrap();
        let params = net.parameters();
        assert_eq!(params.len(), 16 + 4 + 64 + 8);
        let copy = net.clone();
        net.set_parameters(&params).unwrap();
        assert_eq!(net, copy);
        assert!(net.set_parameters(&params[1..]).is_err());
    }
}
