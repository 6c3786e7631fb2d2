//! Arithmetic on the finite quotient groups `G_l = O_K / ℘^l O_K`.
//!
//! An element of `G_l` is a digit sequence `(a_0, …, a_{l-1})` standing for
//! `a_0 + a_1 ℘ + … + a_{l-1} ℘^{l-1}`. Its *rank* is the integer
//! `Σ a_i p^i`; every vector or matrix indexed by `G_l` elsewhere in the crate
//! is laid out in rank order. Truncating the last digit (the parent map of the
//! tree) is then `rank mod p^{l-1}` in both characteristics.
//!
//! Two rings share this layout:
//!
//! * positive characteristic, `F_p[[T]]`: addition is digit-wise mod `p`
//!   without carries, multiplication is the truncated polynomial product;
//! * characteristic zero, `Z_p`: addition and multiplication act on ranks
//!   modulo `p^l`, so carries propagate into higher digits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported prime; digits are stored as `u8`.
pub const MAX_PRIME: u32 = 251;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Characteristic {
    /// Formal power series `F_p[[T]]`.
    #[serde(rename = "pos")]
    Positive,
    /// The p-adic integers `Z_p`.
    #[serde(rename = "zero")]
    Zero,
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Characteristic::Positive => "pos",
            Characteristic::Zero => "zero",
        })
    }
}

impl FromStr for Characteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" | "positive" => Ok(Characteristic::Positive),
            "zero" | "0" => Ok(Characteristic::Zero),
            other => Err(Error::Parse(format!(
                "unknown characteristic {other:?} (expected \"pos\" or \"zero\")"
            ))),
        }
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The ambient ring: a prime `p` and the characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldConfig {
    p: u8,
    characteristic: Characteristic,
}

impl FieldConfig {
    pub fn new(p: u32, characteristic: Characteristic) -> Result<Self> {
        if p > MAX_PRIME {
            return Err(Error::PrimeTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self {
            p: p as u8,
            characteristic,
        })
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn characteristic(&self) -> Characteristic {
        self.characteristic
    }

    /// `#G_l = p^l`, rejected when it does not fit in 32 bits.
    pub fn size(&self, level: u32) -> Result<usize> {
        (self.p as u64)
            .checked_pow(level)
            .filter(|n| *n <= u32::MAX as u64)
            .map(|n| n as usize)
            .ok_or(Error::Capacity { p: self.p, level })
    }

    /// Haar measure of a level-`level` ball, `p^{-level}`.
    pub fn ball_measure(&self, level: u32) -> f64 {
        (self.p as f64).powi(-(level as i32))
    }

    pub(crate) fn ensure_same(&self, other: &FieldConfig) -> Result<()> {
        if self != other {
            return Err(Error::FieldMismatch {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        Ok(())
    }

    pub fn index(&self, digits: Vec<u8>) -> Result<TreeIndex> {
        if let Some((position, &digit)) = digits.iter().enumerate().find(|(_, d)| **d >= self.p) {
            return Err(Error::DigitOutOfRange {
                digit: digit as u32,
                position,
                p: self.p,
            });
        }
        self.size(digits.len() as u32)?;
        Ok(TreeIndex { digits })
    }

    pub fn zero(&self, level: u32) -> TreeIndex {
        TreeIndex {
            digits: vec![0; level as usize],
        }
    }

    /// Multiplicative identity `1 + 0℘ + …` of `G_l`, `l ≥ 1`.
    pub fn one(&self, level: u32) -> TreeIndex {
        let mut digits = vec![0; level as usize];
        if let Some(first) = digits.first_mut() {
            *first = 1;
        }
        TreeIndex { digits }
    }

    pub fn rank(&self, x: &TreeIndex) -> usize {
        x.digits
            .iter()
            .rev()
            .fold(0usize, |acc, &d| acc * self.p as usize + d as usize)
    }

    pub fn from_rank(&self, level: u32, rank: usize) -> Result<TreeIndex> {
        let size = self.size(level)?;
        if rank >= size {
            return Err(Error::InvalidParameter(format!(
                "rank {rank} is outside G_{level} of size {size}"
            )));
        }
        Ok(self.index_of_rank(level, rank))
    }

    pub(crate) fn index_of_rank(&self, level: u32, mut rank: usize) -> TreeIndex {
        let p = self.p as usize;
        let digits = (0..level)
            .map(|_| {
                let d = (rank % p) as u8;
                rank /= p;
                d
            })
            .collect();
        TreeIndex { digits }
    }

    /// All of `G_l` in rank order.
    pub fn enumerate(&self, level: u32) -> Result<Vec<TreeIndex>> {
        let size = self.size(level)?;
        Ok((0..size).map(|r| self.index_of_rank(level, r)).collect())
    }

    /// The truncation homomorphism `Λ_l : G_l → G_{l-1}`.
    pub fn project(&self, x: &TreeIndex) -> Result<TreeIndex> {
        match x.digits.split_last() {
            Some((_, rest)) => Ok(TreeIndex {
                digits: rest.to_vec(),
            }),
            None => Err(Error::LevelTooSmall { min: 1, actual: 0 }),
        }
    }

    /// Projects `x` down to `level` by dropping trailing digits.
    pub fn truncate(&self, x: &TreeIndex, level: u32) -> Result<TreeIndex> {
        if x.level() < level {
            return Err(Error::LevelTooSmall {
                min: level,
                actual: x.level(),
            });
        }
        Ok(TreeIndex {
            digits: x.digits[..level as usize].to_vec(),
        })
    }

    /// The `p` liftings of `j ∈ G_{l-1}` to `G_l`, ordered by the new digit.
    pub fn lifts(&self, j: &TreeIndex) -> Result<Vec<TreeIndex>> {
        self.size(j.level() + 1)?;
        Ok((0..self.p)
            .map(|d| {
                let mut digits = j.digits.clone();
                digits.push(d);
                TreeIndex { digits }
            })
            .collect())
    }

    fn same_level(x: &TreeIndex, y: &TreeIndex) -> Result<u32> {
        if x.level() != y.level() {
            return Err(Error::LevelMismatch {
                expected: x.level(),
                actual: y.level(),
            });
        }
        Ok(x.level())
    }

    pub fn add(&self, x: &TreeIndex, y: &TreeIndex) -> Result<TreeIndex> {
        let level = Self::same_level(x, y)?;
        Ok(match self.characteristic {
            Characteristic::Positive => TreeIndex {
                digits: x
                    .digits
                    .iter()
                    .zip(&y.digits)
                    .map(|(&a, &b)| ((a as u16 + b as u16) % self.p as u16) as u8)
                    .collect(),
            },
            Characteristic::Zero => {
                let modulus = self.size(level)?;
                self.index_of_rank(level, (self.rank(x) + self.rank(y)) % modulus)
            }
        })
    }

    pub fn neg(&self, x: &TreeIndex) -> TreeIndex {
        match self.characteristic {
            Characteristic::Positive => TreeIndex {
                digits: x.digits.iter().map(|&a| (self.p - a) % self.p).collect(),
            },
            Characteristic::Zero => {
                let modulus = (self.p as usize).pow(x.level());
                self.index_of_rank(x.level(), (modulus - self.rank(x)) % modulus)
            }
        }
    }

    pub fn sub(&self, x: &TreeIndex, y: &TreeIndex) -> Result<TreeIndex> {
        Self::same_level(x, y)?;
        self.add(x, &self.neg(y))
    }

    pub fn multiply(&self, x: &TreeIndex, y: &TreeIndex) -> Result<TreeIndex> {
        let level = Self::same_level(x, y)?;
        Ok(match self.characteristic {
            Characteristic::Positive => {
                let n = level as usize;
                let p = self.p as u32;
                let digits = (0..n)
                    .map(|i| {
                        let c: u32 = (0..=i)
                            .map(|s| x.digits[s] as u32 * y.digits[i - s] as u32 % p)
                            .sum();
                        (c % p) as u8
                    })
                    .collect();
                TreeIndex { digits }
            }
            Characteristic::Zero => {
                let modulus = self.size(level)? as u64;
                let r = (self.rank(x) as u64 * self.rank(y) as u64) % modulus;
                self.index_of_rank(level, r as usize)
            }
        })
    }

    /// `rank(j - k)` computed directly on ranks at `level`.
    pub(crate) fn sub_rank(&self, level: u32, j: usize, k: usize) -> usize {
        let p = self.p as usize;
        match self.characteristic {
            Characteristic::Zero => {
                let modulus = p.pow(level);
                (j + modulus - k) % modulus
            }
            Characteristic::Positive => {
                let (mut j, mut k) = (j, k);
                let mut out = 0;
                let mut scale = 1;
                for _ in 0..level {
                    let d = (j % p + p - k % p) % p;
                    out += d * scale;
                    scale *= p;
                    j /= p;
                    k /= p;
                }
                out
            }
        }
    }
}

impl fmt::Display for FieldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} char={}", self.p, self.characteristic)
    }
}

/// An element of `G_l`, stored as little-endian digits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeIndex {
    digits: Vec<u8>,
}

impl TreeIndex {
    pub fn level(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Parses the digit-string text form. Digits are single base-36
    /// characters, or `.`-separated decimals when `p > 36`.
    pub fn parse(cfg: &FieldConfig, s: &str) -> Result<Self> {
        let digits: Result<Vec<u8>> = if s.contains('.') {
            s.split('.')
                .map(|t| {
                    t.parse::<u8>()
                        .map_err(|e| Error::Parse(format!("digit {t:?}: {e}")))
                })
                .collect()
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(36)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::Parse(format!("invalid digit {c:?}")))
                })
                .collect()
        };
        cfg.index(digits?)
    }
}

impl fmt::Display for TreeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.iter().any(|&d| d >= 36) {
            let parts: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
            f.write_str(&parts.join("."))
        } else {
            for &d in &self.digits {
                let c = std::char::from_digit(d as u32, 36).expect("digit below 36");
                write!(f, "{c}")?;
            }
            Ok(())
        }
    }
}

/// The ball `center + ℘^l O_K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BallId {
    pub center: TreeIndex,
}

impl BallId {
    pub fn radius_exponent(&self) -> u32 {
        self.center.level()
    }

    pub fn measure(&self, cfg: &FieldConfig) -> f64 {
        cfg.ball_measure(self.radius_exponent())
    }

    /// Whether the finer point `x` lies in this ball.
    pub fn contains(&self, x: &TreeIndex) -> bool {
        x.digits().starts_with(self.center.digits())
    }
}
