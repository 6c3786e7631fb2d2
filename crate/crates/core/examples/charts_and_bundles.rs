// Direct products of networks and approximation on disjoint balls.

use padic_nn::approx::{
    approximate_on_charts, chart_pullback, constructive_network, direct_product, forward_bundle,
    glue_outputs,
};
use padic_nn::encoding::{sample_function, SampleMode};
use padic_nn::{AffineChart, Characteristic, FieldConfig, TestFunction};

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(2, Characteristic::Positive)?;
    let targets = [
        sample_function(
            |x| (6.0 * x).sin() * 0.5,
            cfg,
            3,
            SampleMode::cell_average(),
        )?,
        sample_function(|x| x - 0.5, cfg, 3, SampleMode::cell_average())?,
    ];
    let nets = targets
        .iter()
        .map(|t| constructive_network(t, 1.0, 1))
        .collect::<padic_nn::Result<Vec<_>>>()?;
    let bundle = direct_product(nets)?;
    let inputs = vec![TestFunction::constant(cfg, 1, 0.0)?; 2];
    for (y, t) in forward_bundle(&bundle, &inputs)?.iter().zip(&targets) {
        println!("component error {:e}", y.distance(t, f64::INFINITY)?);
    }

    let charts = [
        AffineChart::new(&cfg, &cfg.index(vec![0])?, 1)?,
        AffineChart::new(&cfg, &cfg.index(vec![1, 1])?, 2)?,
    ];
    let full = sample_function(|x| x * x, cfg, 5, SampleMode::cell_average())?;
    let coeffs = cfg
        .enumerate(5)?
        .iter()
        .zip(full.coeffs())
        .map(|(x, &v)| {
            if charts.iter().any(|c| c.contains(x)) {
                v
            } else {
                0.0
            }
        })
        .collect();
    let f = TestFunction::new(cfg, 5, coeffs)?;
    let bundle = approximate_on_charts(&f, &charts, 0.05, 2.0, 1.0, 2)?;
    let inputs = charts
        .iter()
        .map(|c| chart_pullback(&f, c)?.average_to(2))
        .collect::<padic_nn::Result<Vec<_>>>()?;
    let glued = glue_outputs(&bundle, &forward_bundle(&bundle, &inputs)?)?;
    println!(
        "glued L2 error on the two charts: {:e}",
        glued.distance(&f, 2.0)?
    );
    println!("bundle json: {} bytes", bundle.to_json()?.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
