// Base-p digit expansion of [0, 1] and sampling of real functions.

use padic_nn::encoding::{rho_decode, rho_encode, sample_function, SampleMode};
use padic_nn::{Characteristic, FieldConfig};

pub fn run_example() -> padic_nn::Result<()> {
    for (x, p) in [(0.5, 2), (0.75, 2), (1.0 / 3.0, 3), (0.2, 5)] {
        let digits = rho_encode(x, p, 8)?;
        println!(
            "x = {x:.6}  p = {p}  digits {}  decoded {:.6}",
            digits.digit_string(),
            rho_decode(&digits)
        );
    }

    let cfg = FieldConfig::new(2, Characteristic::Positive)?;
    let f = sample_function(|x| x, cfg, 2, SampleMode::LeftEndpoint)?;
    println!("f(x) = x on G_2 in rank order: {:?}", f.coeffs());
    let g = sample_function(|x| x * x, cfg, 3, SampleMode::cell_average())?;
    println!("cell averages of x^2 at level 3: {:?}", g.coeffs());
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
