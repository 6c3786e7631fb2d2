//! Additive characters of the unit ball and the Walsh-type bases they form.
//!
//! A nontrivial character of level `l` is `x ↦ χ_K(℘^{-l} a x)` for a unit
//! `a ∈ G_l` (leading digit `a_0 ≠ 0`). It is constant on level-`l` balls.
//!
//! * In `F_p[[T]]`, `χ_K(y) = exp(2πi Res(y) / p)` and the residue of
//!   `T^{-l} a x` is the carry-free convolution `Σ_{s+t=l-1} a_s x_t mod p`.
//! * In `Z_p`, `χ_K(y) = exp(2πi {y}_p)` and the fractional part of
//!   `p^{-l} a x` is `(rank(a) · rank(x) mod p^l) / p^l`.
//!
//! Levels `1..=l` contribute `(p - 1) p^{level-1}` characters each. Together
//! with the trivial character that is `p^l`, the dimension of `D^l`.
//!
//! Both bases label a character by `n = rank(a) = Σ a_i p^i`. For `p = 2`
//! in positive characteristic the θ basis is the Walsh-Paley system; the
//! Paley index is `n` with its `l` binary digits reversed.

use std::fmt;

use num_complex::Complex64;

use crate::encoding::{sample_function, SampleMode};
use crate::error::{Error, Result};
use crate::localfield::{Characteristic, FieldConfig, TreeIndex};
use crate::testfn::ComplexTestFunction;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Character {
    Trivial,
    /// `χ_K(℘^{-l} a x)` with `l = a.level() ≥ 1` and `a_0 ≠ 0`.
    Nontrivial(TreeIndex),
}

impl Character {
    pub fn nontrivial(a: TreeIndex) -> Result<Self> {
        match a.digits().first() {
            None => Err(Error::LevelTooSmall { min: 1, actual: 0 }),
            Some(0) => Err(Error::InvalidParameter(format!(
                "character index {a} has leading digit 0; use the lower-level character instead"
            ))),
            Some(_) => Ok(Character::Nontrivial(a)),
        }
    }

    pub fn level(&self) -> u32 {
        match self {
            Character::Trivial => 0,
            Character::Nontrivial(a) => a.level(),
        }
    }

    /// Basis label `n = rank(a)`, 0 for the trivial character.
    pub fn label(&self, cfg: &FieldConfig) -> usize {
        match self {
            Character::Trivial => 0,
            Character::Nontrivial(a) => cfg.rank(a),
        }
    }

    /// Index of the matching Walsh-Paley function (p = 2): the digits of
    /// `a` reversed, so `a_{l-1-i}` multiplies the `i`-th binary digit of `x`.
    pub fn paley_index(&self) -> usize {
        match self {
            Character::Trivial => 0,
            Character::Nontrivial(a) => a
                .digits()
                .iter()
                .fold(0usize, |acc, &d| acc * 2 + d as usize),
        }
    }

    fn digit_string(&self) -> String {
        match self {
            Character::Trivial => String::new(),
            Character::Nontrivial(a) => a.to_string(),
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Character::Trivial => f.write_str("trivial"),
            Character::Nontrivial(a) => write!(f, "chi[{a}]"),
        }
    }
}

/// `exp(2πi k / n)` for `k < n`.
struct RootTable {
    roots: Vec<Complex64>,
}

impl RootTable {
    fn new(n: usize) -> Self {
        let roots = (0..n)
            .map(|k| {
                // snap the O(1e-16) residue at multiples of a quarter turn
                let (s, c) = (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin_cos();
                let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
                Complex64::new(snap(c), snap(s))
            })
            .collect();
        Self { roots }
    }

    fn get(&self, k: usize) -> Complex64 {
        self.roots[k % self.roots.len()]
    }
}

/// Phase numerator of `χ` at the level-`l` cell of `x`, over the
/// denominator `p` (positive characteristic) or `p^l` (characteristic zero).
fn phase(cfg: &FieldConfig, a: &TreeIndex, x_digits: &[u8]) -> usize {
    let l = a.level() as usize;
    let p = cfg.p() as usize;
    match cfg.characteristic() {
        Characteristic::Positive => {
            (0..l)
                .map(|t| a.digits()[l - 1 - t] as usize * x_digits[t] as usize)
                .sum::<usize>()
                % p
        }
        Characteristic::Zero => {
            let modulus = (p as u64).pow(l as u32);
            let xr = x_digits[..l]
                .iter()
                .rev()
                .fold(0u64, |acc, &d| acc * p as u64 + d as u64);
            ((cfg.rank(a) as u64 * xr) % modulus) as usize
        }
    }
}

fn phase_denominator(cfg: &FieldConfig, level: u32) -> Result<usize> {
    match cfg.characteristic() {
        Characteristic::Positive => Ok(cfg.p() as usize),
        Characteristic::Zero => cfg.size(level),
    }
}

/// `χ(x)` for `x` of level at least `χ.level()`.
pub fn char_eval(cfg: &FieldConfig, chi: &Character, x: &TreeIndex) -> Result<Complex64> {
    match chi {
        Character::Trivial => Ok(Complex64::new(1.0, 0.0)),
        Character::Nontrivial(a) => {
            if x.level() < a.level() {
                return Err(Error::LevelTooSmall {
                    min: a.level(),
                    actual: x.level(),
                });
            }
            let n = phase_denominator(cfg, a.level())?;
            let angle = 2.0 * std::f64::consts::PI * phase(cfg, a, x.digits()) as f64 / n as f64;
            Ok(Complex64::from_polar(1.0, angle))
        }
    }
}

/// Values of `χ` on all of `G_level` in rank order.
pub fn character_values(cfg: &FieldConfig, chi: &Character, level: u32) -> Result<Vec<Complex64>> {
    if chi.level() > level {
        return Err(Error::LevelTooSmall {
            min: chi.level(),
            actual: level,
        });
    }
    let points = cfg.enumerate(level)?;
    match chi {
        Character::Trivial => Ok(vec![Complex64::new(1.0, 0.0); points.len()]),
        Character::Nontrivial(a) => {
            let table = RootTable::new(phase_denominator(cfg, a.level())?);
            Ok(points
                .iter()
                .map(|x| table.get(phase(cfg, a, x.digits())))
                .collect())
        }
    }
}

/// The trivial character followed by the canonical characters of levels
/// `1..=max_level`, each level in rank order of `a`.
pub fn enumerate_characters(cfg: &FieldConfig, max_level: u32) -> Result<Vec<Character>> {
    cfg.size(max_level)?;
    let mut out = vec![Character::Trivial];
    for level in 1..=max_level {
        out.extend(
            cfg.enumerate(level)?
                .into_iter()
                .filter(|a| a.digits()[0] != 0)
                .map(Character::Nontrivial),
        );
    }
    Ok(out)
}

/// `⟨χ_i, χ_j⟩ = p^{-l} Σ_{x ∈ G_l} χ_i(x) conj(χ_j(x))`.
pub fn gram_matrix(
    cfg: &FieldConfig,
    characters: &[Character],
    level: u32,
) -> Result<Vec<Vec<Complex64>>> {
    let values = characters
        .iter()
        .map(|c| character_values(cfg, c, level))
        .collect::<Result<Vec<_>>>()?;
    let w = cfg.ball_measure(level);
    Ok(values
        .iter()
        .map(|u| {
            values
                .iter()
                .map(|v| {
                    u.iter()
                        .zip(v)
                        .map(|(a, b)| a * b.conj())
                        .sum::<Complex64>()
                        * w
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Carry-free θ basis; positive characteristic only.
    Theta,
    /// Mod-`p^l` γ basis; characteristic zero only.
    Gamma,
    /// Characters of whichever ring is configured.
    RawCharacters,
}

impl Basis {
    fn check(&self, cfg: &FieldConfig) -> Result<()> {
        match (self, cfg.characteristic()) {
            (Basis::Theta, Characteristic::Zero) => Err(Error::BasisMismatch {
                basis: "theta",
                required: "positive-characteristic",
            }),
            (Basis::Gamma, Characteristic::Positive) => Err(Error::BasisMismatch {
                basis: "gamma",
                required: "characteristic-zero",
            }),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Basis::Theta),
            "gamma" => Ok(Basis::Gamma),
            "raw" | "characters" => Ok(Basis::RawCharacters),
            other => Err(Error::Parse(format!(
                "unknown basis {other:?} (expected theta, gamma or raw)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalshCoefficient {
    pub character: Character,
    /// `n = rank(a)` in the θ / γ labeling.
    pub label: usize,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalshExpansion {
    cfg: FieldConfig,
    level: u32,
    basis: Basis,
    coefficients: Vec<WalshCoefficient>,
}

impl WalshExpansion {
    pub fn cfg(&self) -> FieldConfig {
        self.cfg
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coefficients(&self) -> &[WalshCoefficient] {
        &self.coefficients
    }

    /// `Σ |C_χ|²`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.value.norm_sqr()).sum()
    }

    /// `L²` norm of the part of the expansion above each level `0..=level`;
    /// entry `l` is the error of truncating to characters of level `≤ l`.
    pub fn truncation_errors(&self) -> Vec<f64> {
        (0..=self.level)
            .map(|l| {
                self.coefficients
                    .iter()
                    .filter(|c| c.character.level() > l)
                    .fold(0.0, |acc, c| acc + c.value.norm_sqr())
                    .sqrt()
            })
            .collect()
    }

    /// CSV with header `level,a_digits,re,im,modulus`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,a_digits,re,im,modulus\n");
        for c in &self.coefficients {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                c.character.level(),
                c.character.digit_string(),
                c.value.re,
                c.value.im,
                c.value.norm()
            ));
        }
        out
    }
}

/// `C_χ = ⟨φ, χ⟩` for every character up to `φ.level()`.
pub fn walsh_expand(phi: &ComplexTestFunction, basis: Basis) -> Result<WalshExpansion> {
    let cfg = phi.cfg();
    basis.check(&cfg)?;
    let level = phi.level();
    let w = cfg.ball_measure(level);
    let coefficients = enumerate_characters(&cfg, level)?
        .into_iter()
        .map(|character| {
            let values = character_values(&cfg, &character, level)?;
            let value = phi
                .coeffs()
                .iter()
                .zip(&values)
                .map(|(f, c)| f * c.conj())
                .sum::<Complex64>()
                * w;
            Ok(WalshCoefficient {
                label: character.label(&cfg),
                character,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WalshExpansion {
        cfg,
        level,
        basis,
        coefficients,
    })
}

/// `Σ C_χ χ` as a function in `D^level ⊗ C`.
pub fn walsh_reconstruct(expansion: &WalshExpansion) -> Result<ComplexTestFunction> {
    let cfg = expansion.cfg;
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.size(expansion.level)?];
    for c in &expansion.coefficients {
        let values = character_values(&cfg, &c.character, expansion.level)?;
        for (o, v) in out.iter_mut().zip(values) {
            *o += c.value * v;
        }
    }
    ComplexTestFunction::new(cfg, expansion.level, out)
}

/// Expansion of a real function on `[0, 1]` in the basis `χ ∘ ϱ_K`, using
/// cell averages at `level`.
pub fn walsh_on_unit_interval<F>(
    f: F,
    cfg: FieldConfig,
    level: u32,
    basis: Basis,
) -> Result<WalshExpansion>
where
    F: Fn(f64) -> f64,
{
    basis.check(&cfg)?;
    let sampled = sample_function(f, cfg, level, SampleMode::cell_average())?;
    walsh_expand(&ComplexTestFunction::from(&sampled), basis)
}
