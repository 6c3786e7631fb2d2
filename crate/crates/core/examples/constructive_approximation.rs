// Zero-weight approximating networks and their robustness radii.

use padic_nn::approx::constructive_network_with_ball;
use padic_nn::cli::{cmd_approx, ExperimentConfig};
use padic_nn::{Characteristic, FieldConfig, TestFunction};

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(2, Characteristic::Positive)?;
    let target = TestFunction::new(cfg, 2, vec![1.0, -1.0, 0.5, -0.5])?;
    let input = TestFunction::new(cfg, 1, vec![0.3, -0.8])?;
    let (net, ball) = constructive_network_with_ball(&target, 2.0, 1, 0.1, input.sup_norm())?;
    let (y, _) = net.forward(&input)?;
    println!("output {:?}", y.coeffs());
    println!(
        "theta radius {:.4e}, weight radius {:.4e}",
        ball.theta_radius, ball.weight_radius
    );

    println!("sin(2 pi x) against a level-8 reference, L = 2:");
    for delta in 1..=4 {
        let mut config = ExperimentConfig::default();
        config.network.delta = Some(delta);
        let out = cmd_approx(&config.resolve()?)?;
        let l2 = out
            .error(2.0)
            .map(|e| e.reference_error)
            .unwrap_or(f64::NAN);
        println!("  delta {delta}: L2 error {l2:.6e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
