// Arithmetic on G_l in both characteristics.

use padic_nn::{Characteristic, FieldConfig};

pub fn run_example() -> padic_nn::Result<()> {
    for ch in [Characteristic::Positive, Characteristic::Zero] {
        let cfg = FieldConfig::new(3, ch)?;
        let x = cfg.index(vec![2, 1, 0])?;
        let y = cfg.index(vec![2, 2, 1])?;
        println!("[{cfg}] {x} + {y} = {}", cfg.add(&x, &y)?);
        println!("[{cfg}] {x} * {y} = {}", cfg.multiply(&x, &y)?);
        println!("[{cfg}] -{x} = {}", cfg.neg(&x));
        println!("[{cfg}] parent of {x} = {}", cfg.project(&x)?);
    }

    // 1 + 1 leaves the digit set {0, 1} in Z_2 but not in F_2[[T]].
    for ch in [Characteristic::Positive, Characteristic::Zero] {
        let cfg = FieldConfig::new(2, ch)?;
        let one = cfg.one(2);
        let two = cfg.add(&one, &one)?;
        println!("[{cfg}] 1 + 1 = {two} (rank {})", cfg.rank(&two));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> padic_nn::Result<()> {
    run_example()
}
