//! Locally constant functions on the unit ball.
//!
//! A function in `D^l` is constant on each ball `i + ℘^l O_K`, so it is a
//! vector of `p^l` values indexed by the rank of `i ∈ G_l`. Norms and inner
//! products integrate against the normalized Haar measure, where each
//! level-`l` ball has mass `p^{-l}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localfield::{Characteristic, FieldConfig, TreeIndex};

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    cfg: FieldConfig,
    level: u32,
    coeffs: Vec<f64>,
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Coefficient vector of `embed` from `from` to `to` in rank order: entry
/// `k` of the result is entry `k mod p^from` of the input.
pub(crate) fn embed_values<T: Copy>(values: &[T], copies: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len() * copies);
    for _ in 0..copies {
        out.extend_from_slice(values);
    }
    out
}

fn check_exponent(rho: f64) -> Result<()> {
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::InvalidExponent(rho));
    }
    Ok(())
}

/// `(Σ |v|^ρ · w)^{1/ρ}` with `w` the cell measure, or the max for `ρ = ∞`.
pub(crate) fn weighted_lp(abs_values: impl Iterator<Item = f64>, weight: f64, rho: f64) -> f64 {
    if rho.is_infinite() {
        abs_values.fold(0.0, f64::max)
    } else if rho == 1.0 {
        abs_values.sum::<f64>() * weight
    } else if rho == 2.0 {
        (abs_values.map(|a| a * a).sum::<f64>() * weight).sqrt()
    } else {
        (abs_values.map(|a| a.powf(rho)).sum::<f64>() * weight).powf(1.0 / rho)
    }
}

impl TestFunction {
    pub fn new(cfg: FieldConfig, level: u32, coeffs: Vec<f64>) -> Result<Self> {
        let expected = cfg.size(level)?;
        if coeffs.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: coeffs.len(),
            });
        }
        check_finite(&coeffs)?;
        Ok(Self { cfg, level, coeffs })
    }

    pub fn constant(cfg: FieldConfig, level: u32, value: f64) -> Result<Self> {
        Self::new(cfg, level, vec![value; cfg.size(level)?])
    }

    /// Indicator of the ball `center + ℘^l O_K`, at level `l = center.level()`.
    pub fn indicator(cfg: FieldConfig, center: &TreeIndex) -> Result<Self> {
        let level = center.level();
        let mut coeffs = vec![0.0; cfg.size(level)?];
        coeffs[cfg.rank(center)] = 1.0;
        Self::new(cfg, level, coeffs)
    }

    pub fn cfg(&self) -> FieldConfig {
        self.cfg
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Value on the level-`self.level` ball containing `x`.
    pub fn evaluate(&self, x: &TreeIndex) -> Result<f64> {
        if x.level() < self.level {
            return Err(Error::LevelTooSmall {
                min: self.level,
                actual: x.level(),
            });
        }
        let cell = self.cfg.truncate(x, self.level)?;
        Ok(self.coeffs[self.cfg.rank(&cell)])
    }

    /// The same function viewed in `D^target`, `target ≥ level`.
    pub fn embed(&self, target: u32) -> Result<Self> {
        if target < self.level {
            return Err(Error::LevelTooSmall {
                min: self.level,
                actual: target,
            });
        }
        let copies = self.cfg.size(target - self.level)?;
        self.cfg.size(target)?;
        Ok(Self {
            cfg: self.cfg,
            level: target,
            coeffs: embed_values(&self.coeffs, copies),
        })
    }

    /// Orthogonal projection onto `D^target`, `target ≤ level`: each coarse
    /// cell gets the mean of its children.
    pub fn average_to(&self, target: u32) -> Result<Self> {
        if target > self.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                actual: target,
            });
        }
        let n = self.cfg.size(target)?;
        let copies = self.coeffs.len() / n;
        let coeffs = (0..n)
            .map(|r| (0..copies).map(|k| self.coeffs[r + k * n]).sum::<f64>() / copies as f64)
            .collect();
        Ok(Self {
            cfg: self.cfg,
            level: target,
            coeffs,
        })
    }

    /// `‖φ‖_ρ` for `ρ ∈ [1, ∞]`; pass `f64::INFINITY` for the sup norm.
    pub fn lp_norm(&self, rho: f64) -> Result<f64> {
        check_exponent(rho)?;
        Ok(weighted_lp(
            self.coeffs.iter().map(|c| c.abs()),
            self.cfg.ball_measure(self.level),
            rho,
        ))
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `∫ φ ψ dx`, embedding both to the finer of the two levels.
    pub fn inner_product(&self, other: &TestFunction) -> Result<f64> {
        self.cfg.ensure_same(&other.cfg)?;
        let level = self.level.max(other.level);
        let a = self.embed(level)?;
        let b = other.embed(level)?;
        let sum: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
        Ok(sum * self.cfg.ball_measure(level))
    }

    /// `‖self − other‖_ρ` at the common level.
    pub fn distance(&self, other: &TestFunction, rho: f64) -> Result<f64> {
        self.cfg.ensure_same(&other.cfg)?;
        check_exponent(rho)?;
        let level = self.level.max(other.level);
        let a = self.embed(level)?;
        let b = other.embed(level)?;
        Ok(weighted_lp(
            a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).abs()),
            self.cfg.ball_measure(level),
            rho,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TestFunctionFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<TestFunctionFile>(s)?.try_into()
    }
}

/// On-disk form: `{"p", "char", "level", "coeffs"}` with coefficients in rank order.
#[derive(Serialize, Deserialize)]
pub struct TestFunctionFile {
    pub p: u32,
    #[serde(rename = "char")]
    pub characteristic: Characteristic,
    pub level: u32,
    pub coeffs: Vec<f64>,
}

impl From<&TestFunction> for TestFunctionFile {
    fn from(f: &TestFunction) -> Self {
        Self {
            p: f.cfg.p() as u32,
            characteristic: f.cfg.characteristic(),
            level: f.level,
            coeffs: f.coeffs.clone(),
        }
    }
}

impl TryFrom<TestFunctionFile> for TestFunction {
    type Error = Error;

    fn try_from(f: TestFunctionFile) -> Result<Self> {
        let cfg = FieldConfig::new(f.p, f.characteristic)?;
        TestFunction::new(cfg, f.level, f.coeffs)
    }
}

/// Complex-valued element of `D^l ⊗ C`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTestFunction {
    cfg: FieldConfig,
    level: u32,
    coeffs: Vec<Complex64>,
}

impl ComplexTestFunction {
    pub fn new(cfg: FieldConfig, level: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = cfg.size(level)?;
        if coeffs.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                index,
                value: coeffs[index].norm(),
            });
        }
        Ok(Self { cfg, level, coeffs })
    }

    pub fn cfg(&self) -> FieldConfig {
        self.cfg
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn embed(&self, target: u32) -> Result<Self> {
        if target < self.level {
            return Err(Error::LevelTooSmall {
                min: self.level,
                actual: target,
            });
        }
        let copies = self.cfg.size(target - self.level)?;
        self.cfg.size(target)?;
        Ok(Self {
            cfg: self.cfg,
            level: target,
            coeffs: embed_values(&self.coeffs, copies),
        })
    }

    /// `⟨f, g⟩ = ∫ f ḡ dx`.
    pub fn inner_product(&self, other: &ComplexTestFunction) -> Result<Complex64> {
        self.cfg.ensure_same(&other.cfg)?;
        let level = self.level.max(other.level);
        let a = self.embed(level)?;
        let b = other.embed(level)?;
        let sum: Complex64 = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x * y.conj())
            .sum();
        Ok(sum * self.cfg.ball_measure(level))
    }

    pub fn l2_norm(&self) -> f64 {
        weighted_lp(
            self.coeffs.iter().map(|c| c.norm()),
            self.cfg.ball_measure(self.level),
            2.0,
        )
    }

    /// Real part as a real test function.
    pub fn re(&self) -> Result<TestFunction> {
        TestFunction::new(
            self.cfg,
            self.level,
            self.coeffs.iter().map(|c| c.re).collect(),
        )
    }
}

impl From<&TestFunction> for ComplexTestFunction {
    fn from(f: &TestFunction) -> Self {
        Self {
            cfg: f.cfg,
            level: f.level,
            coeffs: f.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u32) -> FieldConfig {
        FieldConfig::new(p, Characteristic::Zero).unwrap()
    }

    fn random(cfg: FieldConfig, level: u32, rng: &mut ChaCha8Rng) -> TestFunction {
        let n = cfg.size(level).unwrap();
        TestFunction::new(
            cfg,
            level,
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn construction_checks_shape_and_finiteness() {
        let c = cfg(2);
        assert!(matches!(
            TestFunction::new(c, 2, vec![0.0; 3]),
            Err(Error::Shape {
                expected: 4,
                actual: 3
            })
        ));
        assert!(matches!(
            TestFunction::new(c, 1, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn evaluate_constant_and_indicator() {
        let c = cfg(3);
        let k = TestFunction::constant(c, 2, 1.5).unwrap();
        for x in c.enumerate(3).unwrap() {
            assert_eq!(k.evaluate(&x).unwrap(), 1.5);
        }
        let i = c.index(vec![2, 1]).unwrap();
        let ind = TestFunction::indicator(c, &i).unwrap();
        for lift in c.lifts(&i).unwrap() {
            assert_eq!(ind.evaluate(&lift).unwrap(), 1.0);
        }
        assert_eq!(ind.evaluate(&c.index(vec![2, 0, 1]).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            ind.evaluate(&c.index(vec![2]).unwrap()),
            Err(Error::LevelTooSmall { .. })
        ));
    }

    #[test]
    fn evaluate_is_invariant_under_embed() {
        let c = FieldConfig::new(2, Characteristic::Positive).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random(c, 2, &mut rng);
        let g = f.embed(3).unwrap();
        for x in c.enumerate(3).unwrap() {
            assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        }
        assert_eq!(f.embed(2).unwrap(), f);
        assert!(f.embed(1).is_err());
    }

    #[test]
    fn embed_indicator_is_sum_over_lifts() {
        let c = cfg(3);
        let i = c.index(vec![1]).unwrap();
        let fine = TestFunction::indicator(c, &i).unwrap().embed(2).unwrap();
        let mut sum = [0.0; 9];
        for k in c.lifts(&i).unwrap() {
            sum[c.rank(&k)] += 1.0;
        }
        assert_eq!(fine.coeffs(), &sum[..]);
    }

    #[test]
    fn average_is_orthogonal_projection() {
        let c = cfg(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random(c, 3, &mut rng);
        let coarse = f.average_to(1).unwrap();
        assert_eq!(coarse.level(), 1);
        assert!(
            (coarse
                .inner_product(&TestFunction::constant(c, 0, 1.0).unwrap())
                .unwrap()
                - f.inner_product(&TestFunction::constant(c, 0, 1.0).unwrap())
                    .unwrap())
            .abs()
                < 1e-12
        );
        let residual = TestFunction::new(
            c,
            3,
            f.coeffs()
                .iter()
                .zip(coarse.embed(3).unwrap().coeffs())
                .map(|(a, b)| a - b)
                .collect(),
        )
        .unwrap();
        for _ in 0..5 {
            let g = random(c, 1, &mut rng);
            assert!(residual.inner_product(&g).unwrap().abs() < 1e-12);
        }
        let g = random(c, 2, &mut rng);
        assert!(
            g.embed(3)
                .unwrap()
                .average_to(2)
                .unwrap()
                .distance(&g, f64::INFINITY)
                .unwrap()
                < 1e-15
        );
        assert!(g.average_to(3).is_err());
    }

    #[test]
    fn embed_preserves_norms() {
        let c = cfg(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random(c, 1, &mut rng);
            let g = f.embed(3).unwrap();
            for rho in [1.0, 2.0, f64::INFINITY] {
                let a = f.lp_norm(rho).unwrap();
                let b = g.lp_norm(rho).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "rho={rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn norm_examples() {
        let c = cfg(3);
        let one = TestFunction::constant(c, 2, 1.0).unwrap();
        for rho in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((one.lp_norm(rho).unwrap() - 1.0).abs() < 1e-15);
        }
        let ind = TestFunction::indicator(c, &c.index(vec![0, 2]).unwrap()).unwrap();
        assert!((ind.lp_norm(1.0).unwrap() - 1.0 / 9.0).abs() < 1e-16);
        assert!(matches!(one.lp_norm(0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn norms_are_monotone_in_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..100 {
            let c = cfg([2, 3, 5][i % 3]);
            let f = random(c, 2, &mut rng);
            let n1 = f.lp_norm(1.0).unwrap();
            let n2 = f.lp_norm(2.0).unwrap();
            let ni = f.lp_norm(f64::INFINITY).unwrap();
            assert!(n1 <= n2 + 1e-15 && n2 <= ni + 1e-15);
        }
    }

    #[test]
    fn indicator_basis_is_orthogonal() {
        let c = cfg(2);
        let all = c.enumerate(2).unwrap();
        for i in &all {
            for j in &all {
                let a = TestFunction::indicator(c, i).unwrap();
                let b = TestFunction::indicator(c, j).unwrap();
                let ip = a.inner_product(&b).unwrap();
                assert_eq!(ip, if i == j { 0.25 } else { 0.0 });
            }
        }
    }

    #[test]
    fn inner_product_matches_norm_and_rejects_mismatch() {
        let c = cfg(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random(c, 2, &mut rng);
        let n = f.lp_norm(2.0).unwrap();
        assert!((f.inner_product(&f).unwrap() - n * n).abs() < 1e-12);
        let other = TestFunction::constant(
            FieldConfig::new(3, Characteristic::Positive).unwrap(),
            1,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            f.inner_product(&other),
            Err(Error::FieldMismatch { .. })
        ));
        let coarse = random(c, 1, &mut rng);
        let direct = f.inner_product(&coarse.embed(2).unwrap()).unwrap();
        assert!((f.inner_product(&coarse).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn complex_inner_product_is_conjugate_linear() {
        let c = cfg(2);
        let f = ComplexTestFunction::new(
            c,
            1,
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)],
        )
        .unwrap();
        let g = ComplexTestFunction::new(
            c,
            1,
            vec![Complex64::new(0.0, 1.0), Complex64::new(3.0, 0.0)],
        )
        .unwrap();
        let ip = f.inner_product(&g).unwrap();
        // ((1+2i)(-i) + (-i)(3)) / 2 = (2 - i - 3i) / 2
        assert!((ip - Complex64::new(1.0, -2.0)).norm() < 1e-15);
        assert!((f.inner_product(&f).unwrap().re - f.l2_norm().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let c = FieldConfig::new(3, Characteristic::Positive).unwrap();
        let f = TestFunction::new(c, 1, vec![0.1, -1.0 / 3.0, 1e-300]).unwrap();
        let s = f.to_json().unwrap();
        assert!(s.contains("\"char\":\"pos\""));
        assert_eq!(TestFunction::from_json(&s).unwrap(), f);
        assert!(
            TestFunction::from_json(r#"{"p":4,"char":"zero","level":0,"coeffs":[1.0]}"#).is_err()
        );
    }

    proptest! {
        #[test]
        fn inner_product_is_bilinear(
            a in proptest::collection::vec(-5.0f64..5.0, 9),
            b in proptest::collection::vec(-5.0f64..5.0, 9),
            d in proptest::collection::vec(-5.0f64..5.0, 3),
            s in -3.0f64..3.0,
        ) {
            let c = cfg(3);
            let f = TestFunction::new(c, 2, a.clone()).unwrap();
            let g = TestFunction::new(c, 2, b.clone()).unwrap();
            let h = TestFunction::new(c, 1, d).unwrap();
            let comb = TestFunction::new(c, 2, a.iter().zip(&b).map(|(x, y)| s * x + y).collect()).unwrap();
            let lhs = comb.inner_product(&h).unwrap();
            let rhs = s * f.inner_product(&h).unwrap() + g.inner_product(&h).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
            prop_assert!((f.inner_product(&h).unwrap() - h.inner_product(&f).unwrap()).abs() < 1e-12);
        }
    }
}
