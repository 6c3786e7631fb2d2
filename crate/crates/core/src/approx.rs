//! Constructive approximation by zero-weight networks, robustness radii,
//! direct products of networks and affine charts `a + ℘^N O_K`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localfield::{FieldConfig, TreeIndex};
use crate::network::{Activation, LayerKind, ModelFile, Network};
use crate::testfn::TestFunction;

/// Parameter perturbations that keep the constructive network within `ε`
/// of its target in the sup norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessBall {
    pub epsilon: f64,
    /// `δ(ε) = ε / Lip(σ_M)`.
    pub delta: f64,
    /// Allowed `max |Δθ(i)|` in the final layer.
    pub theta_radius: f64,
    /// Allowed `max |w(i, k)|` in every layer.
    pub weight_radius: f64,
}

impl RobustnessBall {
    /// Radii for `net` fed with inputs bounded by `input_bound` in the sup
    /// norm. The final layer sees the raw input when `Δ = 1` and a state
    /// bounded by `M` otherwise; its weighted sum runs over `p^{L+Δ}` terms.
    pub fn for_network(net: &Network, epsilon: f64, input_bound: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(input_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "input bound must be non-negative, got {input_bound}"
            )));
        }
        let delta = epsilon / net.activation().lipschitz();
        let state_bound = if net.depth() == 1 {
            input_bound
        } else {
            net.activation().bound()
        };
        let fan_in = net.cfg().size(net.output_level())? as f64;
        let weight_radius = if state_bound == 0.0 {
            f64::INFINITY
        } else {
            delta / (2.0 * fan_in * state_bound)
        };
        Ok(Self {
            epsilon,
            delta,
            theta_radius: delta / 2.0,
            weight_radius,
        })
    }
}

/// Network of depth `target.level() - input_level` with every weight 0 and
/// final bias `σ_M^{-1}(target)`, so that its output equals `target` for
/// every input.
pub fn constructive_network(target: &TestFunction, m: f64, input_level: u32) -> Result<Network> {
    let cfg = target.cfg();
    if target.level() <= input_level {
        return Err(Error::InvalidParameter(format!(
            "target level {} must exceed the input level {input_level}; embed the target to a finer level first",
            target.level()
        )));
    }
    let activation = Activation::scaled_tanh(m)?;
    let depth = target.level() - input_level;
    let mut net = Network::zeros(cfg, input_level, depth, activation, LayerKind::Dense)?;
    let bias = target
        .coeffs()
        .iter()
        .enumerate()
        .map(|(rank, &v)| {
            activation.inverse(v).ok_or(Error::TargetTooLarge {
                rank,
                value: v,
                bound: m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = net.layers_mut().last_mut().expect("depth is at least 1");
    last.bias_mut().copy_from_slice(&bias);
    Ok(net)
}

/// [`constructive_network`] together with its robustness radii.
pub fn constructive_network_with_ball(
    target: &TestFunction,
    m: f64,
    input_level: u32,
    epsilon: f64,
    input_bound: f64,
) -> Result<(Network, RobustnessBall)> {
    let net = constructive_network(target, m, input_level)?;
    let ball = RobustnessBall::for_network(&net, epsilon, input_bound)?;
    Ok((net, ball))
}

/// Network approximating `f` within `ε` in `L^ρ` from inputs of level
/// `input_level`. Requires `f.level() > input_level` and `‖f‖_ρ < M`; the
/// construction also needs `‖f‖_∞ < M`.
pub fn approximate_lp(
    f: &TestFunction,
    epsilon: f64,
    rho: f64,
    m: f64,
    input_level: u32,
) -> Result<Network> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if f.level() <= input_level {
        return Err(Error::InvalidParameter(format!(
            "target level {} must exceed the input level {input_level}; embed the target to level {} or higher first",
            f.level(),
            input_level + 1
        )));
    }
    let norm = f.lp_norm(rho)?;
    if norm >= m {
        return Err(Error::InvalidParameter(format!(
            "target norm {norm} is not below M = {m}"
        )));
    }
    constructive_network(f, m, input_level)
}

/// The ball `a + ℘^N O_K`, identified with `O_K` through
/// `T_{a,N}(x) = ℘^{-N}(x - a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineChart {
    center: TreeIndex,
}

impl AffineChart {
    /// Chart around the first `n` digits of `center`.
    pub fn new(cfg: &FieldConfig, center: &TreeIndex, n: u32) -> Result<Self> {
        Ok(Self {
            center: cfg.truncate(center, n)?,
        })
    }

    pub fn identity(cfg: &FieldConfig) -> Self {
        Self {
            center: cfg.zero(0),
        }
    }

    pub fn center(&self) -> &TreeIndex {
        &self.center
    }

    pub fn scale(&self) -> u32 {
        self.center.level()
    }

    /// Whether the level-`l` cell `x` (with `l ≥ N`) lies in the chart.
    pub fn contains(&self, x: &TreeIndex) -> bool {
        x.digits().starts_with(self.center.digits())
    }

    pub fn is_disjoint(&self, other: &AffineChart) -> bool {
        let n = self.scale().min(other.scale()) as usize;
        self.center.digits()[..n] != other.center.digits()[..n]
    }

    fn check_resolution(&self, level: u32) -> Result<()> {
        if level < self.scale() {
            return Err(Error::LevelTooSmall {
                min: self.scale(),
                actual: level,
            });
        }
        Ok(())
    }
}

/// `T*f(x) = f(a + ℘^N x)`: restriction of `f ∈ D^l` to the chart as a
/// function in `D^{l-N}` on the unit ball.
pub fn chart_pullback(f: &TestFunction, chart: &AffineChart) -> Result<TestFunction> {
    let cfg = f.cfg();
    chart.check_resolution(f.level())?;
    let offset = cfg.rank(&chart.center);
    let stride = cfg.size(chart.scale())?;
    let level = f.level() - chart.scale();
    let coeffs = (0..cfg.size(level)?)
        .map(|r| f.coeffs()[offset + stride * r])
        .collect();
    TestFunction::new(cfg, level, coeffs)
}

/// Inverse of [`chart_pullback`]: `y ∈ D^m` transported to the chart,
/// extended by 0, as a function in `D^{m+N}`.
pub fn chart_pushforward(y: &TestFunction, chart: &AffineChart) -> Result<TestFunction> {
    let cfg = y.cfg();
    let level = y.level() + chart.scale();
    let offset = cfg.rank(&chart.center);
    let stride = cfg.size(chart.scale())?;
    let mut coeffs = vec![0.0; cfg.size(level)?];
    for (r, &v) in y.coeffs().iter().enumerate() {
        coeffs[offset + stride * r] = v;
    }
    TestFunction::new(cfg, level, coeffs)
}

/// Independent networks, each attached to a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkBundle {
    components: Vec<(AffineChart, Network)>,
}

impl NetworkBundle {
    pub fn new(components: Vec<(AffineChart, Network)>) -> Result<Self> {
        if let Some((_, first)) = components.first() {
            for (_, net) in &components[1..] {
                first.cfg().ensure_same(&net.cfg())?;
            }
        }
        Ok(Self { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[(AffineChart, Network)] {
        &self.components
    }

    /// Whether the charts are pairwise disjoint.
    pub fn charts_disjoint(&self) -> bool {
        self.components.iter().enumerate().all(|(i, (a, _))| {
            self.components[i + 1..]
                .iter()
                .all(|(b, _)| a.is_disjoint(b))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let file: Vec<BundleEntry> = self
            .components
            .iter()
            .map(|(chart, net)| BundleEntry {
                chart: ChartFile {
                    center: chart.center.to_string(),
                    n: chart.scale(),
                },
                model: ModelFile::from(net),
            })
            .collect();
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: Vec<BundleEntry> = serde_json::from_str(s)?;
        let components = file
            .into_iter()
            .map(|entry| {
                let net = Network::try_from(entry.model)?;
                let cfg = net.cfg();
                let center = TreeIndex::parse(&cfg, &entry.chart.center)?;
                Ok((AffineChart::new(&cfg, &center, entry.chart.n)?, net))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ChartFile {
    center: String,
    #[serde(rename = "N")]
    n: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BundleEntry {
    chart: ChartFile,
    model: ModelFile,
}

/// Bundle of networks on `O_K` run side by side.
pub fn direct_product(networks: Vec<Network>) -> Result<NetworkBundle> {
    let components = networks
        .into_iter()
        .map(|net| (AffineChart::identity(&net.cfg()), net))
        .collect();
    NetworkBundle::new(components)
}

/// Componentwise forward pass; outputs live on the unit ball.
pub fn forward_bundle(
    bundle: &NetworkBundle,
    inputs: &[TestFunction],
) -> Result<Vec<TestFunction>> {
    if inputs.len() != bundle.len() {
        return Err(Error::Shape {
            expected: bundle.len(),
            actual: inputs.len(),
        });
    }
    bundle
        .components
        .iter()
        .zip(inputs)
        .map(|((_, net), x)| net.forward(x).map(|(y, _)| y))
        .collect()
}

/// `max_i ‖Y_i - f_i‖_ρ`.
pub fn bundle_error(outputs: &[TestFunction], targets: &[TestFunction], rho: f64) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::Shape {
            expected: targets.len(),
            actual: outputs.len(),
        });
    }
    outputs
        .iter()
        .zip(targets)
        .try_fold(0.0f64, |acc, (y, f)| Ok(acc.max(y.distance(f, rho)?)))
}

/// `γ(ρ) = p^{N/ρ}` for finite `ρ`, 1 for `ρ = ∞`.
fn chart_gamma(cfg: &FieldConfig, chart: &AffineChart, rho: f64) -> f64 {
    if rho.is_infinite() {
        1.0
    } else {
        (cfg.p() as f64).powf(chart.scale() as f64 / rho)
    }
}

/// Bundle approximating `f ∈ D^l` supported on the disjoint union of
/// `charts`. Each pulled-back piece gets a network with bound
/// `M γ_i(ρ)` and tolerance `ε / γ_i(ρ)`.
pub fn approximate_on_charts(
    f: &TestFunction,
    charts: &[AffineChart],
    epsilon: f64,
    rho: f64,
    m: f64,
    input_level: u32,
) -> Result<NetworkBundle> {
    let cfg = f.cfg();
    let mut components = Vec::with_capacity(charts.len());
    for (i, chart) in charts.iter().enumerate() {
        if let Some(other) = charts[..i].iter().find(|c| !c.is_disjoint(chart)) {
            return Err(Error::InvalidParameter(format!(
                "charts around {} and {} overlap",
                other.center, chart.center
            )));
        }
        let gamma = chart_gamma(&cfg, chart, rho);
        let piece = chart_pullback(f, chart)?;
        let net = approximate_lp(&piece, epsilon / gamma, rho, m * gamma, input_level)?;
        components.push((chart.clone(), net));
    }
    NetworkBundle::new(components)
}

/// Glued output `Σ_i (T_i^{-1})^* Y_i` at the finest output level.
pub fn glue_outputs(bundle: &NetworkBundle, outputs: &[TestFunction]) -> Result<TestFunction> {
    if outputs.len() != bundle.len() || outputs.is_empty() {
        return Err(Error::Shape {
            expected: bundle.len().max(1),
            actual: outputs.len(),
        });
    }
    let pushed = bundle
        .components
        .iter()
        .zip(outputs)
        .map(|((chart, _), y)| chart_pushforward(y, chart))
        .collect::<Result<Vec<_>>>()?;
    let level = pushed.iter().map(TestFunction::level).max().unwrap_or(0);
    let cfg = pushed[0].cfg();
    let mut total = vec![0.0; cfg.size(level)?];
    for g in pushed {
        for (t, v) in total.iter_mut().zip(g.embed(level)?.coeffs()) {
            *t += v;
        }
    }
    TestFunction::new(cfg, level, total)
}
