//! Experiment drivers behind the `padic-nn` binary.
//!
//! Every command takes resolved [`Settings`] and returns its artifacts as
//! strings, so the binary only decides where they are written.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approximate_on_charts, bundle_error, chart_pullback, constructive_network, direct_product,
    forward_bundle, glue_outputs, AffineChart, RobustnessBall,
};
use crate::encoding::{rho_encode, sample_function, Builtin, SampleMode};
use crate::error::{Error, Result};
use crate::localfield::{Characteristic, FieldConfig, TreeIndex};
use crate::network::{Activation, LayerKind, Network};
use crate::testfn::{ComplexTestFunction, TestFunction};
use crate::training::{cost, cost_log_csv, train, CostMetric, Schedule, TrainingSample};
use crate::walsh::{walsh_expand, walsh_on_unit_interval, Basis, WalshExpansion};

/// Experiment description as read from a JSON file or assembled from flags.
/// Every field is optional; [`ExperimentConfig::overlay`] merges two
/// configurations and [`ExperimentConfig::resolve`] fills in defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSection,
    pub network: NetworkSection,
    pub training: TrainingSection,
    pub approx: ApproxSection,
    pub walsh: WalshSection,
    pub product: ProductSection,
    /// Builtin function name or path to a test-function JSON file.
    pub target: Option<String>,
    /// Subset of `"1"`, `"2"`, `"inf"`.
    pub norms: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub p: Option<u32>,
    #[serde(rename = "char")]
    pub characteristic: Option<Characteristic>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(rename = "L")]
    pub input_level: Option<u32>,
    pub delta: Option<u32>,
    #[serde(rename = "M")]
    pub bound: Option<f64>,
    pub kind: Option<LayerKind>,
    pub init_scale: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub eta: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// `"haar"` (default) or `"euclidean"`.
    pub metric: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxSection {
    pub epsilon: Option<f64>,
    pub reference_level: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalshSection {
    pub max_level: Option<u32>,
    pub basis: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductSection {
    /// One target per component of a direct product on the unit ball.
    pub targets: Option<Vec<String>>,
    /// Charts `"center:N"`; when given, the single `target` is approximated
    /// on their disjoint union.
    pub charts: Option<Vec<String>>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// `self` with every field set in `top` replaced by `top`'s value.
    pub fn overlay(mut self, top: ExperimentConfig) -> Self {
        overlay_fields!(self.field, top.field; p, characteristic);
        overlay_fields!(self.network, top.network; input_level, delta, bound, kind, init_scale);
        overlay_fields!(self.training, top.training; epochs, batch, eta, seed, samples, metric);
        overlay_fields!(self.approx, top.approx; epsilon, reference_level);
        overlay_fields!(self.walsh, top.walsh; max_level, basis);
        overlay_fields!(self.product, top.product; targets, charts);
        overlay_fields!(self, top; target, norms);
        self
    }

    pub fn resolve(&self) -> Result<Settings> {
        let cfg = FieldConfig::new(
            self.field.p.unwrap_or(2),
            self.field
                .characteristic
                .unwrap_or(Characteristic::Positive),
        )?;
        let input_level = self.network.input_level.unwrap_or(2);
        let delta = self.network.delta.unwrap_or(2);
        if input_level < 1 || delta < 1 {
            return Err(Error::InvalidParameter(
                "L and delta must both be at least 1".into(),
            ));
        }
        cfg.size(input_level + delta)?;
        let bound = self.network.bound.unwrap_or(2.0);
        Activation::scaled_tanh(bound)?;
        let init_scale = self.network.init_scale.unwrap_or(0.1);
        if !(init_scale >= 0.0 && init_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "init_scale must be non-negative, got {init_scale}"
            )));
        }
        let epsilon = self.approx.epsilon.unwrap_or(0.1);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let samples = self.training.samples.unwrap_or(16);
        if samples == 0 {
            return Err(Error::EmptySamples);
        }
        let basis = match &self.walsh.basis {
            Some(b) => b.parse()?,
            None => match cfg.characteristic() {
                Characteristic::Positive => Basis::Theta,
                Characteristic::Zero => Basis::Gamma,
            },
        };
        let norms = match &self.norms {
            Some(list) => list
                .iter()
                .map(|s| parse_norm(s))
                .collect::<Result<Vec<_>>>()?,
            None => vec![1.0, 2.0, f64::INFINITY],
        };
        let schedule = Schedule {
            epochs: self.training.epochs.unwrap_or(200),
            batch_size: self.training.batch.unwrap_or(8),
            learning_rate: self.training.eta.unwrap_or(0.5),
            seed: self.training.seed.unwrap_or(0),
        };
        if schedule.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        if !(schedule.learning_rate > 0.0 && schedule.learning_rate.is_finite()) {
            return Err(Error::InvalidLearningRate(schedule.learning_rate));
        }
        Ok(Settings {
            cfg,
            input_level,
            delta,
            bound,
            kind: self.network.kind.unwrap_or(LayerKind::Dense),
            init_scale,
            schedule,
            samples,
            metric: match &self.training.metric {
                Some(m) => m.parse()?,
                None => CostMetric::Haar,
            },
            epsilon,
            reference_level: self.approx.reference_level.unwrap_or(8),
            walsh_level: self.walsh.max_level.unwrap_or(6),
            basis,
            target: Target::resolve(self.target.as_deref().unwrap_or("sin2pi"))?,
            product_targets: self
                .product
                .targets
                .iter()
                .flatten()
                .map(|t| Target::resolve(t))
                .collect::<Result<_>>()?,
            charts: self
                .product
                .charts
                .iter()
                .flatten()
                .map(|c| parse_chart(&cfg, c))
                .collect::<Result<_>>()?,
            norms,
        })
    }
}

/// `"1"`, `"2"`, any real `≥ 1`, or `"inf"`.
pub fn parse_norm(s: &str) -> Result<f64> {
    let rho = match s {
        "inf" | "infinity" | "sup" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("norm {other:?}: {e}")))?,
    };
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::InvalidExponent(rho));
    }
    Ok(rho)
}

fn norm_label(rho: f64) -> String {
    if rho.is_infinite() {
        "inf".into()
    } else {
        format!("{rho}")
    }
}

/// `"digits:N"`, e.g. `"01:2"`; the empty center `":0"` is the whole ball.
pub fn parse_chart(cfg: &FieldConfig, s: &str) -> Result<AffineChart> {
    let (center, n) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Parse(format!("chart {s:?} must have the form center:N")))?;
    let n: u32 = n
        .parse()
        .map_err(|e| Error::Parse(format!("chart scale in {s:?}: {e}")))?;
    let center = TreeIndex::parse(cfg, center)?;
    AffineChart::new(cfg, &center, n)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Builtin(Builtin),
    Function(TestFunction),
}

impl Target {
    /// A builtin name, or else a path to a test-function JSON file.
    pub fn resolve(name: &str) -> Result<Self> {
        match name.parse::<Builtin>() {
            Ok(b) => Ok(Target::Builtin(b)),
            Err(parse_err) => {
                let path = PathBuf::from(name);
                if !path.exists() && !name.ends_with(".json") {
                    return Err(parse_err);
                }
                Ok(Target::Function(TestFunction::from_json(&read_file(
                    &path,
                )?)?))
            }
        }
    }

    /// The target as a function in `D^level` on the unit ball: cell averages
    /// for builtins, embedding or averaging for stored functions.
    pub fn at_level(&self, cfg: FieldConfig, level: u32) -> Result<TestFunction> {
        match self {
            Target::Builtin(b) => {
                sample_function(|x| b.eval(x), cfg, level, SampleMode::cell_average())
            }
            Target::Function(f) => {
                cfg.ensure_same(&f.cfg())?;
                if f.level() <= level {
                    f.embed(level)
                } else {
                    f.average_to(level)
                }
            }
        }
    }

    /// Finest available description, at least at `level`.
    fn reference(&self, cfg: FieldConfig, level: u32) -> Result<TestFunction> {
        match self {
            Target::Function(f) if f.level() > level => self.at_level(cfg, f.level()),
            _ => self.at_level(cfg, level),
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub cfg: FieldConfig,
    pub input_level: u32,
    pub delta: u32,
    pub bound: f64,
    pub kind: LayerKind,
    pub init_scale: f64,
    pub schedule: Schedule,
    pub samples: usize,
    pub metric: CostMetric,
    pub epsilon: f64,
    pub reference_level: u32,
    pub walsh_level: u32,
    pub basis: Basis,
    pub target: Target,
    pub product_targets: Vec<Target>,
    pub charts: Vec<AffineChart>,
    pub norms: Vec<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        ExperimentConfig::default()
            .resolve()
            .expect("default configuration is valid")
    }
}

impl Settings {
    pub fn output_level(&self) -> u32 {
        self.input_level + self.delta
    }
}

/// Digit string of `x ∈ [0, 1]` on the first line, then the rank of the
/// corresponding element of `G_depth`.
pub fn cmd_encode(x: f64, p: u32, depth: usize) -> Result<String> {
    let digits = rho_encode(x, p, depth)?;
    let cfg = FieldConfig::new(p, Characteristic::Positive)?;
    let index = cfg.index(digits.digits().to_vec())?;
    Ok(format!(
        "{}\nrank {}\n",
        digits.digit_string(),
        cfg.rank(&index)
    ))
}

/// Test-function JSON of a builtin target sampled at `level`.
pub fn cmd_sample(settings: &Settings, level: u32, mode: SampleMode) -> Result<String> {
    match &settings.target {
        Target::Builtin(b) => sample_function(|x| b.eval(x), settings.cfg, level, mode)?.to_json(),
        Target::Function(_) => Err(Error::InvalidParameter(
            "sample needs a builtin target (sin2pi, absaw, step or poly:c0,c1,...)".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormError {
    pub norm: String,
    /// Against the target at the network's output level.
    pub target_error: f64,
    /// Against the finest available description of the target.
    pub reference_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxReport {
    #[serde(rename = "L")]
    pub input_level: u32,
    pub delta: u32,
    #[serde(rename = "M")]
    pub bound: f64,
    pub reference_level: u32,
    pub epsilon: f64,
    pub input_bound: f64,
    pub theta_radius: f64,
    /// `None` when the input is identically 0 and every weight is allowed.
    pub weight_radius: Option<f64>,
    pub errors: Vec<NormError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOutcome {
    pub model_json: String,
    pub report: ApproxReport,
}

impl ApproxOutcome {
    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report)?)
    }

    pub fn error(&self, rho: f64) -> Option<&NormError> {
        let label = norm_label(rho);
        self.report.errors.iter().find(|e| e.norm == label)
    }
}

/// Constructive network for the target at level `L + Δ`, evaluated on the
/// target's own level-`L` averages.
pub fn cmd_approx(settings: &Settings) -> Result<ApproxOutcome> {
    let cfg = settings.cfg;
    let level = settings.output_level();
    let reference = settings
        .target
        .reference(cfg, settings.reference_level.max(level))?;
    let target = reference.average_to(level)?;
    let net = constructive_network(&target, settings.bound, settings.input_level)?;
    let input = reference.average_to(settings.input_level)?;
    let ball = RobustnessBall::for_network(&net, settings.epsilon, input.sup_norm())?;
    let (y, _) = net.forward(&input)?;
    let errors = settings
        .norms
        .iter()
        .map(|&rho| {
            Ok(NormError {
                norm: norm_label(rho),
                target_error: y.distance(&target, rho)?,
                reference_error: y.distance(&reference, rho)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproxOutcome {
        model_json: net.to_json()?,
        report: ApproxReport {
            input_level: settings.input_level,
            delta: settings.delta,
            bound: settings.bound,
            reference_level: reference.level(),
            epsilon: settings.epsilon,
            input_bound: input.sup_norm(),
            theta_radius: ball.theta_radius,
            weight_radius: ball.weight_radius.is_finite().then_some(ball.weight_radius),
            errors,
        },
    })
}

/// Training pairs: for `i < K`, the target shifted by `i/K` (builtins) or by
/// the group element of rank `i` (stored functions), at level `L` as input
/// and `L + Δ` as target.
pub fn training_samples(settings: &Settings) -> Result<Vec<TrainingSample>> {
    let cfg = settings.cfg;
    let level = settings.output_level();
    let k = settings.samples;
    (0..k)
        .map(|i| {
            let target = match &settings.target {
                Target::Builtin(b) => {
                    let shift = i as f64 / k as f64;
                    sample_function(
                        |x| b.eval((x + shift).fract()),
                        cfg,
                        level,
                        SampleMode::cell_average(),
                    )?
                }
                Target::Function(_) => {
                    let base = settings.target.at_level(cfg, level)?;
                    let n = cfg.size(level)?;
                    let t = cfg.from_rank(level, i % n)?;
                    let coeffs = cfg
                        .enumerate(level)?
                        .iter()
                        .map(|x| Ok(base.coeffs()[cfg.rank(&cfg.add(x, &t)?)]))
                        .collect::<Result<Vec<_>>>()?;
                    TestFunction::new(cfg, level, coeffs)?
                }
            };
            Ok(TrainingSample::new(
                target.average_to(settings.input_level)?,
                target,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model_json: String,
    pub cost_csv: String,
    pub initial_cost: f64,
    pub final_cost: f64,
}

impl TrainOutcome {
    pub fn improved(&self) -> bool {
        self.final_cost < self.initial_cost
    }

    /// 0 when training lowered the cost, 1 otherwise (including 0 epochs).
    pub fn exit_code(&self) -> u8 {
        if self.improved() {
            0
        } else {
            1
        }
    }
}

/// Random initialization from `seed`, then mini-batch gradient descent with
/// the shuffling stream seeded by `seed + 1`.
pub fn cmd_train(settings: &Settings) -> Result<TrainOutcome> {
    let samples = training_samples(settings)?;
    let activation = Activation::scaled_tanh(settings.bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.schedule.seed);
    let net = Network::random(
        settings.cfg,
        settings.input_level,
        settings.delta,
        activation,
        settings.kind,
        settings.init_scale,
        &mut rng,
    )?;
    let initial_cost = cost(&net, &samples, settings.metric)?;
    let schedule = Schedule {
        seed: settings.schedule.seed.wrapping_add(1),
        ..settings.schedule
    };
    let (net, log) = train(net, &samples, &schedule, settings.metric)?;
    Ok(TrainOutcome {
        model_json: net.to_json()?,
        cost_csv: cost_log_csv(&log),
        initial_cost,
        final_cost: log.last().copied().unwrap_or(initial_cost),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalshOutcome {
    pub expansion: WalshExpansion,
    pub coefficients_csv: String,
    /// CSV `level,l2_error`: error of truncating to characters of level `≤ l`.
    pub truncation_csv: String,
}

pub fn cmd_walsh(settings: &Settings) -> Result<WalshOutcome> {
    let level = settings.walsh_level;
    let expansion = match &settings.target {
        Target::Builtin(b) => {
            walsh_on_unit_interval(|x| b.eval(x), settings.cfg, level, settings.basis)?
        }
        Target::Function(_) => {
            let f = settings.target.at_level(settings.cfg, level)?;
            walsh_expand(&ComplexTestFunction::from(&f), settings.basis)?
        }
    };
    let mut truncation_csv = String::from("level,l2_error\n");
    for (l, e) in expansion.truncation_errors().iter().enumerate() {
        truncation_csv.push_str(&format!("{l},{e:.16e}\n"));
    }
    Ok(WalshOutcome {
        coefficients_csv: expansion.to_csv(),
        truncation_csv,
        expansion,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductReport {
    pub components: usize,
    pub charts_disjoint: bool,
    /// Bundle error per norm: the max over components for a direct product,
    /// the glued error on the union of charts otherwise.
    pub errors: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductOutcome {
    pub bundle_json: String,
    pub report: ProductReport,
}

impl ProductOutcome {
    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report)?)
    }
}

/// Without charts: a direct product of constructive networks, one per
/// product target (or the single target). With charts: the target,
/// restricted to their union, approximated chart by chart.
pub fn cmd_product(settings: &Settings) -> Result<ProductOutcome> {
    let cfg = settings.cfg;
    if settings.charts.is_empty() {
        let targets: Vec<&Target> = if settings.product_targets.is_empty() {
            vec![&settings.target]
        } else {
            settings.product_targets.iter().collect()
        };
        let level = settings.output_level();
        let fs = targets
            .iter()
            .map(|t| t.at_level(cfg, level))
            .collect::<Result<Vec<_>>>()?;
        let nets = fs
            .iter()
            .map(|f| constructive_network(f, settings.bound, settings.input_level))
            .collect::<Result<Vec<_>>>()?;
        let inputs = fs
            .iter()
            .map(|f| f.average_to(settings.input_level))
            .collect::<Result<Vec<_>>>()?;
        let bundle = direct_product(nets)?;
        let outputs = forward_bundle(&bundle, &inputs)?;
        let errors = settings
            .norms
            .iter()
            .map(|&rho| Ok((norm_label(rho), bundle_error(&outputs, &fs, rho)?)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(ProductOutcome {
            bundle_json: bundle.to_json()?,
            report: ProductReport {
                components: bundle.len(),
                charts_disjoint: bundle.charts_disjoint(),
                errors,
            },
        });
    }

    let max_scale = settings
        .charts
        .iter()
        .map(AffineChart::scale)
        .max()
        .unwrap_or(0);
    let level = settings.output_level() + max_scale;
    let full = settings.target.at_level(cfg, level)?;
    let coeffs = cfg
        .enumerate(level)?
        .iter()
        .zip(full.coeffs())
        .map(|(x, &v)| {
            if settings.charts.iter().any(|c| c.contains(x)) {
                v
            } else {
                0.0
            }
        })
        .collect();
    let f = TestFunction::new(cfg, level, coeffs)?;
    let rho = settings.norms.first().copied().unwrap_or(2.0);
    let bundle = approximate_on_charts(
        &f,
        &settings.charts,
        settings.epsilon,
        rho,
        settings.bound,
        settings.input_level,
    )?;
    let inputs = settings
        .charts
        .iter()
        .map(|chart| chart_pullback(&f, chart)?.average_to(settings.input_level))
        .collect::<Result<Vec<_>>>()?;
    let outputs = forward_bundle(&bundle, &inputs)?;
    let glued = glue_outputs(&bundle, &outputs)?;
    let errors = settings
        .norms
        .iter()
        .map(|&rho| Ok((norm_label(rho), glued.distance(&f, rho)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductOutcome {
        bundle_json: bundle.to_json()?,
        report: ProductReport {
            components: bundle.len(),
            charts_disjoint: bundle.charts_disjoint(),
            errors,
        },
    })
}
