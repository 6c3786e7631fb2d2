// Forward pass of dense and convolutional networks.

use padic_nn::network::conv_to_dense;
use padic_nn::{Activation, Characteristic, FieldConfig, LayerKind, Network, TestFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(2, Characteristic::Positive)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let activation = Activation::scaled_tanh(2.0)?;
    let input = TestFunction::new(cfg, 1, vec![0.5, -0.25])?;

    for kind in [LayerKind::Dense, LayerKind::Convolutional] {
        let net = Network::random(cfg, 1, 2, activation, kind, 0.5, &mut rng)?;
        let (y, trace) = net.forward(&input)?;
        println!("{kind:?}: {} parameters", net.parameter_count());
        for (l, state) in trace.states.iter().enumerate() {
            println!("  level {}: {:?}", 1 + l, state);
        }
        let dense = net.to_dense();
        let (z, _) = dense.forward(&input)?;
        println!(
            "  dense equivalent differs by {:e}",
            y.distance(&z, f64::INFINITY)?
        );
        if kind == LayerKind::Convolutional {
            let layer = conv_to_dense(&cfg, &net.layers()[0]);
            println!("  first layer as a matrix: {:?}", layer.weights().values());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
