// Locally constant functions, Haar norms and embeddings.

use padic_nn::{Characteristic, FieldConfig, TestFunction};

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(2, Characteristic::Zero)?;
    let ball = TestFunction::indicator(cfg, &cfg.index(vec![1, 0])?)?;
    println!("indicator of 1 + 4Z_2: {:?}", ball.coeffs());
    for rho in [1.0, 2.0, f64::INFINITY] {
        println!("  norm {rho}: {}", ball.lp_norm(rho)?);
    }

    let f = TestFunction::new(cfg, 1, vec![1.0, -2.0])?;
    let fine = f.embed(3)?;
    println!("embedded to level 3: {:?}", fine.coeffs());
    println!(
        "L2 norm before {} and after {}",
        f.lp_norm(2.0)?,
        fine.lp_norm(2.0)?
    );
    println!("<f, 1_ball> = {}", f.inner_product(&ball)?);
    println!(
        "average back to level 1: {:?}",
        fine.average_to(1)?.coeffs()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
