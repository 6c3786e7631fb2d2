// Training a network on shifted copies of sin(2 pi x).

use padic_nn::cli::{cmd_train, ExperimentConfig};

pub fn run_example() -> padic_nn::Result<()> {
    let mut config = ExperimentConfig::default();
    config.network.input_level = Some(3);
    config.network.delta = Some(2);
    config.training.epochs = Some(200);
    config.training.eta = Some(0.5);
    config.training.batch = Some(8);
    config.training.seed = Some(0);
    let out = cmd_train(&config.resolve()?)?;
    for line in out.cost_csv.lines().step_by(40) {
        println!("{line}");
    }
    println!(
        "cost {:.4e} -> {:.4e} (ratio {:.2e})",
        out.initial_cost,
        out.final_cost,
        out.final_cost / out.initial_cost
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
