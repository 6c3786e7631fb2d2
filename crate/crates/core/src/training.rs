//! Quadratic cost, backpropagation and (stochastic) gradient descent.
//!
//! Backpropagation runs the usual recursion with one extra step. Layer `l+1`
//! consumes the lifted state `X̲^{[l]} ∈ R^{p^{l+1}}`, not `X^{[l]}` itself,
//! so `Wᵀ δ^{[l+1]}` has to be pulled back through the adjoint of the copy
//! operator (summing the `p` children of each neuron) before the Hadamard
//! product with `σ'_M(Z^{[l]})`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{lift_adjoint, ForwardTrace, Network, Weights};
use crate::testfn::TestFunction;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub input: TestFunction,
    pub target: TestFunction,
}

impl TrainingSample {
    pub fn new(input: TestFunction, target: TestFunction) -> Self {
        Self { input, target }
    }

    fn check(&self, net: &Network) -> Result<()> {
        net.cfg().ensure_same(&self.input.cfg())?;
        net.cfg().ensure_same(&self.target.cfg())?;
        if self.input.level() != net.input_level() {
            return Err(Error::LevelMismatch {
                expected: net.input_level(),
                actual: self.input.level(),
            });
        }
        if self.target.level() != net.output_level() {
            return Err(Error::LevelMismatch {
                expected: net.output_level(),
                actual: self.target.level(),
            });
        }
        Ok(())
    }
}

/// How the per-sample squared distance is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CostMetric {
    /// `Σ_k (Y_k − X_k)²`, unweighted.
    #[default]
    Euclidean,
    /// `Σ_k p^{-l} (Y_k − X_k)²`, the squared Haar `L²` distance.
    Haar,
}

impl std::str::FromStr for CostMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(CostMetric::Euclidean),
            "haar" => Ok(CostMetric::Haar),
            other => Err(Error::Parse(format!(
                "unknown cost metric {other:?} (expected \"euclidean\" or \"haar\")"
            ))),
        }
    }
}

impl CostMetric {
    fn weight(&self, net: &Network) -> f64 {
        match self {
            CostMetric::Euclidean => 1.0,
            CostMetric::Haar => net.cfg().ball_measure(net.output_level()),
        }
    }
}

/// Mean over samples of `½ |Y − X^{[L+Δ]}|²`.
pub fn cost(net: &Network, samples: &[TrainingSample], metric: CostMetric) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let weight = metric.weight(net);
    let mut total = 0.0;
    for s in samples {
        s.check(net)?;
        let trace = net.forward_values(s.input.coeffs())?;
        let sq: f64 = trace
            .output()
            .iter()
            .zip(s.target.coeffs())
            .map(|(o, y)| (o - y) * (o - y))
            .sum();
        total += 0.5 * weight * sq;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Partial derivatives of the cost, shaped like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub layers: Vec<LayerGradient>,
}

impl Gradient {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights().values().len()],
                    bias: vec![0.0; l.bias().len()],
                })
                .collect(),
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
    }

    /// Flattened in the order of [`Network::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradient of one sample's cost from an existing forward trace.
pub fn backprop_trace(
    net: &Network,
    trace: &ForwardTrace,
    target: &[f64],
    metric: CostMetric,
) -> Result<Gradient> {
    let depth = net.layers().len();
    if trace.weighted.len() != depth
        || trace.lifted.len() != depth
        || trace.states.len() != depth + 1
    {
        return Err(Error::InvalidParameter(
            "forward trace does not belong to this network".into(),
        ));
    }
    if target.len() != trace.output().len() {
        return Err(Error::Shape {
            expected: trace.output().len(),
            actual: target.len(),
        });
    }
    let cfg = net.cfg();
    let act = net.activation();
    let weight = metric.weight(net);

    let mut grads = Vec::with_capacity(depth);
    let mut delta: Vec<f64> = trace.weighted[depth - 1]
        .iter()
        .zip(trace.output())
        .zip(target)
        .map(|((&z, &x), &y)| act.derivative(z) * weight * (x - y))
        .collect();

    for i in (0..depth).rev() {
        let layer = &net.layers()[i];
        let lifted = &trace.lifted[i];
        let n = delta.len();
        let weights = match layer.weights() {
            Weights::Dense(_) => {
                let mut g = Vec::with_capacity(n * n);
                for d in &delta {
                    g.extend(lifted.iter().map(|x| d * x));
                }
                g
            }
            Weights::Convolutional(_) => (0..n)
                .map(|shift| {
                    (0..n)
                        .map(|j| delta[j] * lifted[cfg.sub_rank(layer.level(), j, shift)])
                        .sum()
                })
                .collect(),
        };
        grads.push(LayerGradient {
            weights,
            bias: delta.clone(),
        });
        if i > 0 {
            let back = layer.transpose_apply(&cfg, &delta);
            let pulled = lift_adjoint(&cfg, &back)?;
            delta = pulled
                .iter()
                .zip(&trace.weighted[i - 1])
                .map(|(u, &z)| act.derivative(z) * u)
                .collect();
        }
    }
    grads.reverse();
    Ok(Gradient { layers: grads })
}

/// Gradient of `½ |Y − X^{[L+Δ]}|²` for one sample.
pub fn backprop(net: &Network, sample: &TrainingSample, metric: CostMetric) -> Result<Gradient> {
    sample.check(net)?;
    let trace = net.forward_values(sample.input.coeffs())?;
    backprop_trace(net, &trace, sample.target.coeffs(), metric)
}

/// Mean gradient over a batch, summed in sample order.
pub fn batch_gradient(
    net: &Network,
    batch: &[TrainingSample],
    metric: CostMetric,
) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut total = Gradient::zeros_like(net);
    for s in batch {
        total.add_scaled(&backprop(net, s, metric)?, 1.0);
    }
    let mut mean = Gradient::zeros_like(net);
    mean.add_scaled(&total, 1.0 / batch.len() as f64);
    Ok(mean)
}

/// One update `Θ ← Θ − (η / |batch|) Σ ∇C`.
pub fn sgd_step(
    net: &mut Network,
    batch: &[TrainingSample],
    learning_rate: f64,
    metric: CostMetric,
) -> Result<()> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidLearningRate(learning_rate));
    }
    let grad = batch_gradient(net, batch, metric)?;
    for (layer, g) in net.layers_mut().iter_mut().zip(&grad.layers) {
        for (w, d) in layer.weights_mut().iter_mut().zip(&g.weights) {
            *w -= learning_rate * d;
        }
        for (b, d) in layer.bias_mut().iter_mut().zip(&g.bias) {
            *b -= learning_rate * d;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidLearningRate(self.learning_rate));
        }
        Ok(())
    }
}

/// Fisher-Yates shuffle driven by ChaCha8 seeded with `seed_from_u64`.
/// Step `i` (from `n-1` down to 1) swaps `i` with `next_u64() % (i + 1)`.
pub fn shuffle_indices(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
}

/// Mini-batch gradient descent. Each epoch reshuffles the samples, applies
/// one [`sgd_step`] per batch, and records the full-dataset cost.
pub fn train(
    mut net: Network,
    samples: &[TrainingSample],
    schedule: &Schedule,
    metric: CostMetric,
) -> Result<(Network, Vec<f64>)> {
    schedule.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    for s in samples {
        s.check(&net)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        shuffle_indices(&mut order, &mut rng);
        for chunk in order.chunks(schedule.batch_size) {
            let batch: Vec<TrainingSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            sgd_step(&mut net, &batch, schedule.learning_rate, metric)?;
        }
        let c = cost(&net, samples, metric)?;
        if !c.is_finite() {
            return Err(Error::Diverged(c, epoch + 1));
        }
        log.push(c);
    }
    Ok((net, log))
}

/// Training log as CSV: header `epoch,cost`, epochs numbered from 1, costs
/// with 17 significant digits.
pub fn cost_log_csv(log: &[f64]) -> String {
    let mut out = String::from("epoch,cost\n");
    for (i, c) in log.iter().enumerate() {
        out.push_str(&format!("{},{:.16e}\n", i + 1, c));
    }
    out
}
