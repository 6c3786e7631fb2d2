//! Base-`p` digit expansion of the unit interval and its image in `O_K`.
//!
//! A real `x ∈ [0, 1]` has digits `x = Σ x_i p^{-i-1}`; reading the same
//! digits as `Σ x_i ℘^i` lands in the ring of integers. Truncated at depth
//! `l` this sends the interval cell `[α, α + p^{-l})` with
//! `α = Σ_{i<l} b_i p^{-i-1}` to the ball of `b ∈ G_l`. Cells and balls have
//! the same measure, which is what makes sampling a real function into
//! `D^l` an isometry on step functions.

use std::cmp::Ordering;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::localfield::{Characteristic, FieldConfig, TreeIndex};
use crate::testfn::TestFunction;

/// First `depth` base-`p` digits of a number in `[0, 1]`, most significant first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitDigits {
    p: u8,
    digits: Vec<u8>,
}

fn prime(p: u32) -> Result<u8> {
    Ok(FieldConfig::new(p, Characteristic::Zero)?.p())
}

impl UnitDigits {
    pub fn new(p: u32, digits: Vec<u8>) -> Result<Self> {
        let p = prime(p)?;
        if let Some((position, &digit)) = digits.iter().enumerate().find(|(_, d)| **d >= p) {
            return Err(Error::DigitOutOfRange {
                digit: digit as u32,
                position,
                p,
            });
        }
        Ok(Self { p, digits })
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Digit string, `x_0` first.
    pub fn digit_string(&self) -> String {
        self.digits
            .iter()
            .map(|&d| std::char::from_digit(d as u32, 36).unwrap_or('?'))
            .collect()
    }
}

/// Digits of `x` to the given depth, from `n = ⌊x p^d⌋` computed exactly.
///
/// An `f64` in `[0, 1)` is `m / 2^k` with integer `m`, so `n` is the integer
/// quotient `(m p^d) >> k`. Boundary points `i / p^n` get the expansion
/// ending in zeros; `x = 1` gets all digits `p - 1`.
pub fn rho_encode(x: f64, p: u32, depth: usize) -> Result<UnitDigits> {
    let p = prime(p)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfUnitInterval(x));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    if x == 1.0 {
        return Ok(UnitDigits {
            p,
            digits: vec![p - 1; depth],
        });
    }
    let mut digits = vec![0u8; depth];
    if x > 0.0 {
        let (mantissa, shift) = dyadic_parts(x);
        let scaled = BigUint::from(mantissa) * BigUint::from(p).pow(depth as u32);
        let n: BigUint = scaled >> shift;
        let expansion = n.to_radix_be(p as u32);
        let offset = depth - expansion.len();
        digits[offset..].copy_from_slice(&expansion);
    }
    Ok(UnitDigits { p, digits })
}

/// `(m, k)` with `r = m · 2^-k` exactly, for `r ∈ [0, 1]`.
fn dyadic_parts(r: f64) -> (u64, usize) {
    let bits = r.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (fraction, 1074)
    } else {
        debug_assert!(biased <= 1075, "only called on values in [0, 1]");
        (fraction | (1u64 << 52), (1075 - biased) as usize)
    }
}

/// Compares the double `r ≥ 0` with the rational `n / den` exactly.
fn cmp_exact(r: f64, n: &BigUint, den: &BigUint) -> Ordering {
    let (m, k) = dyadic_parts(r);
    (BigUint::from(m) * den).cmp(&(n << k))
}

/// `Σ x_i p^{-i-1}` as a double.
///
/// The sum is first estimated from the leading digit down with Neumaier
/// compensation, then corrected with exact rational comparisons to the
/// least double not below the true value. Rounding upward keeps the result
/// inside the cell `[α, α + p^{-d})` of its digits, so a decoded value
/// re-encodes to the same digits and `x − decode(encode(x)) < p^{-d}` holds
/// for every double `x`.
pub fn rho_decode(digits: &UnitDigits) -> f64 {
    let p = digits.p as f64;
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    let mut scale = 1.0 / p;
    for &d in &digits.digits {
        let term = d as f64 * scale;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            carry += (sum - t) + term;
        } else {
            carry += (term - t) + sum;
        }
        sum = t;
        scale /= p;
    }
    let mut r = (sum + carry).clamp(0.0, 1.0);

    let n = digits
        .digits
        .iter()
        .fold(BigUint::from(0u8), |acc, &d| acc * digits.p + d);
    let den = BigUint::from(digits.p).pow(digits.depth() as u32);
    while cmp_exact(r, &n, &den) == Ordering::Less {
        r = r.next_up();
    }
    while r > 0.0 && cmp_exact(r.next_down(), &n, &den) != Ordering::Less {
        r = r.next_down();
    }
    r
}

/// The digits read as an element of `G_d` (a truncation of `ϱ_K(x)`).
pub fn to_field(cfg: &FieldConfig, digits: &UnitDigits) -> Result<TreeIndex> {
    if cfg.p() != digits.p {
        return Err(Error::InvalidParameter(format!(
            "digits are base {} but the field has p = {}",
            digits.p,
            cfg.p()
        )));
    }
    cfg.index(digits.digits.clone())
}

/// Left endpoint `Σ b_i p^{-i-1}` of the interval cell belonging to `b ∈ G_l`.
pub fn cell_left_endpoint(cfg: &FieldConfig, b: &TreeIndex) -> f64 {
    let p = cfg.p() as u64;
    let numerator = b.digits().iter().fold(0u64, |acc, &d| acc * p + d as u64);
    numerator as f64 / (p as f64).powi(b.level() as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SampleMode {
    /// Value at the left endpoint of each cell.
    #[default]
    LeftEndpoint,
    /// Midpoint-rule average over each cell with this many sub-samples.
    CellAverage(usize),
}

impl SampleMode {
    pub const DEFAULT_SUBSAMPLES: usize = 8;

    pub fn cell_average() -> Self {
        SampleMode::CellAverage(Self::DEFAULT_SUBSAMPLES)
    }
}

/// Samples `f` on the level-`level` cells of `[0, 1]` into `D^level`.
pub fn sample_function<F>(
    f: F,
    cfg: FieldConfig,
    level: u32,
    mode: SampleMode,
) -> Result<TestFunction>
where
    F: Fn(f64) -> f64,
{
    if let SampleMode::CellAverage(0) = mode {
        return Err(Error::InvalidParameter(
            "cell average needs at least one sub-sample".into(),
        ));
    }
    let width = cfg.ball_measure(level);
    let coeffs = cfg
        .enumerate(level)?
        .iter()
        .map(|b| {
            let alpha = cell_left_endpoint(&cfg, b);
            let value = match mode {
                SampleMode::LeftEndpoint => f(alpha),
                SampleMode::CellAverage(n) => {
                    let h = width / n as f64;
                    (0..n).map(|j| f(alpha + (j as f64 + 0.5) * h)).sum::<f64>() / n as f64
                }
            };
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::NonFiniteSample {
                    cell: b.to_string(),
                    value,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TestFunction::new(cfg, level, coeffs)
}

/// Named target functions on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `sin(2πx)`
    Sin2Pi,
    /// `|2x − 1|`
    AbsSaw,
    /// `1` on `[1/2, 1]`, else `0`
    Step,
    /// `Σ c_i x^i`
    Poly(Vec<f64>),
}

impl Builtin {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Builtin::Sin2Pi => (2.0 * std::f64::consts::PI * x).sin(),
            Builtin::AbsSaw => (2.0 * x - 1.0).abs(),
            Builtin::Step => {
                if x >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Builtin::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin2pi" => Ok(Builtin::Sin2Pi),
            "absaw" | "abs-saw" => Ok(Builtin::AbsSaw),
            "step" => Ok(Builtin::Step),
            _ => {
                let coeffs = s
                    .strip_prefix("poly:")
                    .ok_or_else(|| Error::Parse(format!("unknown builtin function {s:?}")))?;
                coeffs
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("polynomial coefficient {c:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Builtin::Poly)
            }
        }
    }
}
