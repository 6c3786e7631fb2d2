// Backpropagated gradients against central finite differences.

use padic_nn::training::{backprop, cost, CostMetric, TrainingSample};
use padic_nn::{Activation, Characteristic, FieldConfig, LayerKind, Network, TestFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(3, Characteristic::Zero)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let activation = Activation::scaled_tanh(1.5)?;
    let h = 1e-6;

    for kind in [LayerKind::Dense, LayerKind::Convolutional] {
        let mut net = Network::random(cfg, 1, 2, activation, kind, 0.3, &mut rng)?;
        let input = TestFunction::new(cfg, 1, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let target =
            TestFunction::new(cfg, 3, (0..27).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let sample = [TrainingSample::new(input, target)];

        let analytic = backprop(&net, &sample[0], CostMetric::Euclidean)?.flatten();
        let params = net.parameters();
        let mut worst = 0.0f64;
        for (i, &g) in analytic.iter().enumerate() {
            let mut shifted = params.clone();
            shifted[i] = params[i] + h;
            net.set_parameters(&shifted)?;
            let up = cost(&net, &sample, CostMetric::Euclidean)?;
            shifted[i] = params[i] - h;
            net.set_parameters(&shifted)?;
            let down = cost(&net, &sample, CostMetric::Euclidean)?;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(1.0));
        }
        net.set_parameters(&params)?;
        println!(
            "{kind:?}: {} partials, worst relative error {worst:.2e}",
            analytic.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
