//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; the process fails if any criterion
//! fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use padic_nn::approx::{constructive_network, constructive_network_with_ball, RobustnessBall};
use padic_nn::cli::{cmd_approx, cmd_train, ExperimentConfig};
use padic_nn::encoding::{rho_decode, rho_encode, sample_function, SampleMode, UnitDigits};
use padic_nn::training::{backprop, cost, CostMetric, TrainingSample};
use padic_nn::walsh::{
    character_values, enumerate_characters, gram_matrix, walsh_expand, Basis, Character,
};
use padic_nn::{
    Activation, Characteristic, ComplexTestFunction, FieldConfig, LayerKind, Network, TestFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const BOTH: [Characteristic; 2] = [Characteristic::Positive, Characteristic::Zero];

fn field(p: u32, ch: Characteristic) -> FieldConfig {
    FieldConfig::new(p, ch).expect("valid field")
}

fn random_fn(cfg: FieldConfig, level: u32, bound: f64, rng: &mut ChaCha8Rng) -> TestFunction {
    let n = cfg.size(level).unwrap();
    TestFunction::new(
        cfg,
        level,
        (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(),
    )
    .unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut partials = 0usize;
    for p in [2u32, 3] {
        for l in [1u32, 2] {
            for kind in [LayerKind::Dense, LayerKind::Convolutional] {
                for ch in BOTH {
                    let cfg = field(p, ch);
                    for _ in 0..10 {
                        let activation =
                            Activation::scaled_tanh(rng.gen_range(0.5..2.0)).map_err(e)?;
                        let mut net = Network::random(cfg, l, 2, activation, kind, 0.5, &mut rng)
                            .map_err(e)?;
                        let sample = [TrainingSample::new(
                            random_fn(cfg, l, 1.0, &mut rng),
                            random_fn(cfg, l + 2, 1.0, &mut rng),
                        )];
                        let analytic = backprop(&net, &sample[0], CostMetric::Euclidean)
                            .map_err(e)?
                            .flatten();
                        let params = net.parameters();
                        let mut shifted = params.clone();
                        for (i, &g) in analytic.iter().enumerate() {
                            shifted[i] = params[i] + h;
                            net.set_parameters(&shifted).map_err(e)?;
                            let up = cost(&net, &sample, CostMetric::Euclidean).map_err(e)?;
                            shifted[i] = params[i] - h;
                            net.set_parameters(&shifted).map_err(e)?;
                            let down = cost(&net, &sample, CostMetric::Euclidean).map_err(e)?;
                            shifted[i] = params[i];
                            let numeric = (up - down) / (2.0 * h);
                            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1.0);
                            check(rel < 1e-6, || {
                                format!("p={p} L={l} {kind:?} {ch}: parameter {i} analytic {g} numeric {numeric}")
                            })?;
                            worst = worst.max(rel);
                            partials += 1;
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{partials} partials over 160 networks, worst relative error {worst:.2e}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn exact_construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let m = 2.0;
    let mut worst = 0.0f64;
    for ch in BOTH {
        let cfg = field(2, ch);
        for _ in 0..20 {
            let target = random_fn(cfg, 4, 0.9 * m, &mut rng);
            let net = constructive_network(&target, m, 2).map_err(e)?;
            for _ in 0..5 {
                let (y, _) = net.forward(&random_fn(cfg, 2, 3.0, &mut rng)).map_err(e)?;
                let err = y.distance(&target, f64::INFINITY).map_err(e)?;
                check(err < 1e-12, || format!("sup error {err:e}"))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!(
        "20 targets x 5 inputs per characteristic, worst sup error {worst:.1e}"
    ))
}

fn perturb(net: &Network, ball: &RobustnessBall, factor: f64, rng: &mut ChaCha8Rng) -> Network {
    let mut params = net.parameters();
    let mut offset = 0;
    let depth = net.layers().len();
    for (i, layer) in net.layers().iter().enumerate() {
        let nw = layer.weights().values().len();
        for w in &mut params[offset..offset + nw] {
            *w += if rng.gen::<bool>() { 1.0 } else { -1.0 } * factor * ball.weight_radius;
        }
        offset += nw;
        let nb = layer.bias().len();
        if i + 1 == depth {
            for b in &mut params[offset..offset + nb] {
                *b += if rng.gen::<bool>() { 1.0 } else { -1.0 } * factor * ball.theta_radius;
            }
        }
        offset += nb;
    }
    let mut out = net.clone();
    out.set_parameters(&params).expect("same shape");
    out
}

fn robustness_ball() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let eps = 0.1;
    let m = 2.0;
    let mut inside_worst = 0.0f64;
    let mut outside_best = 0.0f64;
    for (ch, l, delta) in [
        (Characteristic::Positive, 2, 1),
        (Characteristic::Zero, 2, 2),
    ] {
        let cfg = field(2, ch);
        let target = random_fn(cfg, l + delta, 0.9 * m, &mut rng);
        let x = random_fn(cfg, l, 1.0, &mut rng);
        let (net, ball) =
            constructive_network_with_ball(&target, m, l, eps, x.sup_norm()).map_err(e)?;
        for _ in 0..100 {
            let (y, _) = perturb(&net, &ball, 0.99, &mut rng)
                .forward(&x)
                .map_err(e)?;
            let err = y.distance(&target, f64::INFINITY).map_err(e)?;
            check(err < eps, || {
                format!("{ch} delta={delta}: error {err} at 0.99x radii")
            })?;
            inside_worst = inside_worst.max(err);
        }
        let mut violated = false;
        for _ in 0..100 {
            let (y, _) = perturb(&net, &ball, 10.0, &mut rng)
                .forward(&x)
                .map_err(e)?;
            let err = y.distance(&target, f64::INFINITY).map_err(e)?;
            outside_best = outside_best.max(err);
            violated |= err >= eps;
        }
        check(violated, || {
            format!("{ch} delta={delta}: no violation at 10x radii")
        })?;
    }
    Ok(format!(
        "worst error inside {inside_worst:.4} < {eps}; largest at 10x radii {outside_best:.4}"
    ))
}

fn group_laws() -> Outcome {
    let mut checked = 0usize;
    for p in [2u32, 3] {
        for ch in BOTH {
            let cfg = field(p, ch);
            for l in 1..=3 {
                let all = cfg.enumerate(l).map_err(e)?;
                let zero = cfg.zero(l);
                for x in &all {
                    check(cfg.add(x, &zero).map_err(e)? == *x, || format!("{x} + 0"))?;
                    check(cfg.add(x, &cfg.neg(x)).map_err(e)? == zero, || {
                        format!("{x} - {x}")
                    })?;
                    for y in &all {
                        let xy = cfg.add(x, y).map_err(e)?;
                        check(xy == cfg.add(y, x).map_err(e)?, || {
                            format!("{x} + {y} commutes")
                        })?;
                        let lhs = cfg.project(&xy).map_err(e)?;
                        let rhs = cfg
                            .add(&cfg.project(x).map_err(e)?, &cfg.project(y).map_err(e)?)
                            .map_err(e)?;
                        check(lhs == rhs, || format!("truncation of {x} + {y}"))?;
                        for z in &all {
                            let a = cfg.add(&xy, z).map_err(e)?;
                            let b = cfg.add(x, &cfg.add(y, z).map_err(e)?).map_err(e)?;
                            check(a == b, || format!("({x} + {y}) + {z}"))?;
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    let cfg = field(2, Characteristic::Zero);
    let one = cfg.one(2);
    let two = cfg.add(&one, &one).map_err(e)?;
    check(two.digits() == [0, 1], || {
        format!("1 + 1 = {two} in Z_2 at level 2")
    })?;
    check(two.digits()[1] != 0, || "2 lies in the image of G_1".into())?;
    let pos = field(2, Characteristic::Positive);
    let sum = pos.add(&pos.one(2), &pos.one(2)).map_err(e)?;
    check(sum == pos.zero(2), || format!("1 + 1 = {sum} in F_2[[T]]"))?;
    Ok(format!(
        "{checked} associativity triples plus identity, inverse, commutativity, truncation; 1+1 = {two} leaves {{0, 1}} in Z_2"
    ))
}

fn encoding_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for p in [2u32, 3, 5] {
        let depth = (52.0 / (p as f64).log2()).floor() as usize;
        let bound = (p as f64).powi(-(depth as i32));
        for _ in 0..1000 {
            let x: f64 = rng.gen();
            let back = rho_decode(&rho_encode(x, p, depth).map_err(e)?);
            check((back - x).abs() <= bound, || {
                format!("p={p}: x={x} decoded {back}")
            })?;
        }
        for _ in 0..100 {
            let n = rng.gen_range(1..=depth.min(20));
            let m: u64 = rng.gen_range(0..(p as u64).pow(n as u32));
            let mut expected = Vec::with_capacity(depth);
            let mut rest = m;
            for _ in 0..n {
                expected.push((rest % p as u64) as u8);
                rest /= p as u64;
            }
            expected.reverse();
            // m/p^n is a double only for p = 2; otherwise encode the least
            // double above it, which lies in the same cell at every depth.
            let x = if p == 2 {
                m as f64 / (1u64 << n) as f64
            } else {
                rho_decode(&UnitDigits::new(p, expected.clone()).map_err(e)?)
            };
            expected.resize(depth, 0);
            let digits = rho_encode(x, p, depth).map_err(e)?;
            check(digits.digits() == expected.as_slice(), || {
                format!("p={p}: {m}/{p}^{n} encoded as {}", digits.digit_string())
            })?;
        }
        let samples = 100_000usize;
        let cells = (p * p) as usize;
        let mut counts = vec![0usize; cells];
        for _ in 0..samples {
            let d = rho_encode(rng.gen(), p, 2).map_err(e)?;
            counts[d.digits()[0] as usize + p as usize * d.digits()[1] as usize] += 1;
        }
        let q = 1.0 / cells as f64;
        let sigma = (q * (1.0 - q) / samples as f64).sqrt();
        for (cell, &c) in counts.iter().enumerate() {
            let frac = c as f64 / samples as f64;
            check((frac - q).abs() <= 3.0 * sigma, || {
                format!(
                    "p={p}: ball {cell} holds {frac}, expected {q} +- {}",
                    3.0 * sigma
                )
            })?;
        }
    }
    Ok(
        "round trips within p^-d, exact finite expansions, level-2 ball frequencies within 3 sigma"
            .into(),
    )
}

fn orthonormality() -> Outcome {
    let mut worst_gram = 0.0f64;
    for p in [2u32, 3] {
        for ch in BOTH {
            let cfg = field(p, ch);
            for l in 0..=3 {
                let chars = enumerate_characters(&cfg, l).map_err(e)?;
                check(chars.len() == cfg.size(l).map_err(e)?, || {
                    format!("p={p} l={l}: {} characters", chars.len())
                })?;
                for (i, row) in gram_matrix(&cfg, &chars, l).map_err(e)?.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        let dev = (v.re - if i == j { 1.0 } else { 0.0 }).hypot(v.im);
                        worst_gram = worst_gram.max(dev);
                    }
                }
            }
        }
    }
    check(worst_gram < 1e-12, || {
        format!("Gram deviation {worst_gram:e}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst_parseval = 0.0f64;
    let mut worst_recon = 0.0f64;
    for i in 0..100 {
        let p = [2u32, 3][i % 2];
        let ch = BOTH[(i / 2) % 2];
        let level = 1 + (i / 4) as u32 % 3;
        let cfg = field(p, ch);
        let phi = random_fn(cfg, level, 1.0, &mut rng);
        let basis = match ch {
            Characteristic::Positive => Basis::Theta,
            Characteristic::Zero => Basis::Gamma,
        };
        let expansion = walsh_expand(&ComplexTestFunction::from(&phi), basis).map_err(e)?;
        let norm2 = phi.lp_norm(2.0).map_err(e)?.powi(2);
        worst_parseval = worst_parseval.max((norm2 - expansion.energy()).abs());
        let back = padic_nn::walsh::walsh_reconstruct(&expansion).map_err(e)?;
        for (a, b) in back.coeffs().iter().zip(phi.coeffs()) {
            worst_recon = worst_recon.max((a.re - b).hypot(a.im));
        }
    }
    check(worst_parseval < 1e-10, || {
        format!("Parseval deviation {worst_parseval:e}")
    })?;
    check(worst_recon < 1e-10, || {
        format!("reconstruction error {worst_recon:e}")
    })?;
    Ok(format!(
        "Gram deviation {worst_gram:.1e}, Parseval {worst_parseval:.1e}, reconstruction {worst_recon:.1e}"
    ))
}

/// Walsh-Paley function `w_n` on the dyadic cell whose binary digits after
/// the point are the bits of `xbits`, least significant first.
fn walsh_paley(n: usize, xbits: usize) -> f64 {
    if (n & xbits).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn walsh_paley_agreement() -> Outcome {
    let cfg = field(2, Characteristic::Positive);
    let mut compared = 0usize;
    for l in 1..=3u32 {
        let chars = enumerate_characters(&cfg, l).map_err(e)?;
        let mut indices: Vec<usize> = chars.iter().map(Character::paley_index).collect();
        indices.sort_unstable();
        check(indices == (0..1usize << l).collect::<Vec<_>>(), || {
            format!("level {l}: Paley indices {indices:?}")
        })?;
        let points = cfg.enumerate(l).map_err(e)?;
        for chi in &chars {
            let values = character_values(&cfg, chi, l).map_err(e)?;
            for (x, v) in points.iter().zip(&values) {
                let xbits = x
                    .digits()
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (k, &d)| acc | (d as usize) << k);
                let w = walsh_paley(chi.paley_index(), xbits);
                check(v.re == w && v.im == 0.0, || {
                    format!("{chi} at {x}: {v} vs {w}")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{compared} values equal to the XOR-parity generator"
    ))
}

fn isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let p = [2u32, 3][i % 2];
        let ch = BOTH[(i / 2) % 2];
        let level = 1 + (i / 4) as u32 % 3;
        let cells = (p as usize).pow(level);
        let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let other: Vec<f64> = (0..cells).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let width = 1.0 / cells as f64;
        let step = |v: &[f64]| {
            let v = v.to_vec();
            move |x: f64| v[((x * cells as f64) as usize).min(cells - 1)]
        };
        let lebesgue_sq: f64 = values.iter().map(|v| v * v * width).sum();
        let lebesgue_ip: f64 = values.iter().zip(&other).map(|(a, b)| a * b * width).sum();
        let cfg = field(p, ch);
        let f =
            sample_function(step(&values), cfg, level, SampleMode::CellAverage(1)).map_err(e)?;
        let g = sample_function(step(&other), cfg, level, SampleMode::CellAverage(1)).map_err(e)?;
        let dn = (f.lp_norm(2.0).map_err(e)? - lebesgue_sq.sqrt()).abs();
        let di = (f.inner_product(&g).map_err(e)? - lebesgue_ip).abs();
        check(dn < 1e-12 && di < 1e-12, || {
            format!("p={p} l={level}: norm gap {dn:e}, inner product gap {di:e}")
        })?;
        worst = worst.max(dn).max(di);
    }
    Ok(format!("50 step functions, worst gap {worst:.1e}"))
}

fn training_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.field.p = Some(2);
    config.network.input_level = Some(3);
    config.network.delta = Some(2);
    config.training.epochs = Some(200);
    config.training.eta = Some(0.5);
    config.training.batch = Some(8);
    config.training.seed = Some(2024);
    config.target = Some("sin2pi".into());
    config
}

fn training_end_to_end() -> Outcome {
    let start = Instant::now();
    let settings = training_config().resolve().map_err(e)?;
    let first = cmd_train(&settings).map_err(e)?;
    let second = cmd_train(&settings).map_err(e)?;
    check(
        first.cost_csv.as_bytes() == second.cost_csv.as_bytes(),
        || "cost logs differ".into(),
    )?;
    check(first.model_json == second.model_json, || {
        "models differ".into()
    })?;
    let ratio = first.final_cost / first.initial_cost;
    check(ratio < 0.5, || format!("cost ratio {ratio}"))?;
    // Reference run reached 4.6e-4; the pin leaves 4x slack.
    check(ratio < 2e-3, || {
        format!("cost ratio {ratio} above the pinned 2e-3")
    })?;

    let dir = tempfile::tempdir().map_err(e)?;
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_padic-nn"))
            .args([
                "train", "--p", "2", "-L", "3", "--delta", "2", "--epochs", "200",
            ])
            .args([
                "--eta", "0.5", "--batch", "8", "--seed", "2024", "--target", "sin2pi",
            ])
            .arg("--out-dir")
            .arg(&out)
            .output()
            .map_err(e)?;
        check(status.status.code() == Some(0), || {
            format!("binary exited with {:?}", status.status)
        })?;
        logs.push(std::fs::read(out.join("costs.csv")).map_err(e)?);
    }
    check(logs[0] == logs[1], || "binary cost logs differ".into())?;
    check(logs[0] == first.cost_csv.as_bytes(), || {
        "binary and library logs differ".into()
    })?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "cost {:.4e} -> {:.4e} (ratio {ratio:.2e}), byte-identical logs, {:.1}s",
        first.initial_cost,
        first.final_cost,
        elapsed.as_secs_f64()
    ))
}

fn refinement_monotonicity() -> Outcome {
    let mut errors = Vec::new();
    for delta in 1..=4 {
        let mut config = ExperimentConfig::default();
        config.field.p = Some(2);
        config.network.input_level = Some(2);
        config.network.delta = Some(delta);
        config.approx.reference_level = Some(8);
        config.target = Some("sin2pi".into());
        let out = cmd_approx(&config.resolve().map_err(e)?).map_err(e)?;
        let err = out
            .error(2.0)
            .ok_or("no L2 error in report")?
            .reference_error;
        errors.push(err);
    }
    check(errors.windows(2).all(|w| w[1] <= w[0]), || {
        format!("errors {errors:?}")
    })?;
    Ok(format!(
        "L2 errors for delta 1..4: {}",
        errors
            .iter()
            .map(|v| format!("{v:.4e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_correctness),
        ("exact constructive approximation", exact_construction),
        ("robustness ball", robustness_ball),
        ("group and homomorphism laws", group_laws),
        ("encoding fidelity", encoding_fidelity),
        ("orthonormality and Parseval", orthonormality),
        ("Walsh-Paley agreement", walsh_paley_agreement),
        ("isometry", isometry),
        ("training end to end", training_end_to_end),
        ("refinement monotonicity", refinement_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
