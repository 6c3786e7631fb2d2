// Characters of the unit ball and Walsh expansions.

use padic_nn::walsh::{enumerate_characters, gram_matrix, walsh_on_unit_interval, Basis};
use padic_nn::{Characteristic, FieldConfig};

pub fn run_example() -> padic_nn::Result<()> {
    let cfg = FieldConfig::new(3, Characteristic::Zero)?;
    let chars = enumerate_characters(&cfg, 2)?;
    let gram = gram_matrix(&cfg, &chars, 2)?;
    let mut off = 0.0f64;
    for (i, row) in gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            off = off.max((v.re - e).hypot(v.im));
        }
    }
    println!(
        "{} characters up to level 2, Gram deviation {off:.1e}",
        chars.len()
    );

    let cfg = FieldConfig::new(2, Characteristic::Positive)?;
    let e = walsh_on_unit_interval(|x| x, cfg, 4, Basis::Theta)?;
    for c in e.coefficients().iter().take(8) {
        println!(
            "  {:>10}  label {:>2}  paley {:>2}  {:+.5}{:+.5}i",
            c.character.to_string(),
            c.label,
            c.character.paley_index(),
            c.value.re,
            c.value.im
        );
    }
    println!("truncation errors: {:?}", e.truncation_errors());
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
