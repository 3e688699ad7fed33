//! Generic tail bounds.
//!
//! * Exchangeable pairs `(W, W′)` in `ℝᵏ` with `E(W′|W) = (I − Λ)W` and
//!   `‖W − W′‖₂ ≤ K` satisfy
//!   `P(W ⪰ w), P(W ⪯ −w) ≤ exp(−‖w‖₂² / (2K²ν₁))` with `ν₁ = 1/σ₁(Λ)`;
//!   each coordinate obeys the same bound with `‖w‖₂` replaced by `|wᵢ|`.
//! * Nonnegative vectors with bounded size-bias couplings in every
//!   direction satisfy
//!   `P((W − μ)/σ ⪰ t) ≤ exp(−‖t‖₂² / (2(K₁ + K₂‖t‖₂)))`.
//!
//! All evaluators form the exponent first and exponentiate last, so deep
//! thresholds return `0.0` only once the exponent leaves the range of `f64`.

mod matrix;

pub use matrix::{sigma1_lower_bound, smallest_singular_value, SquareMatrix};

use serde::Serialize;

use crate::error::{invalid, Result};

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_nonnegative(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        Some(bad) => invalid(format!("{name} must be finite and nonnegative, found {bad}")),
        None => Ok(()),
    }
}

/// Constants for the exchangeable-pair bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchBoundParams {
    /// Pathwise bound on `‖W − W′‖₂`.
    pub k: f64,
    /// `ν₁ = 1/σ₁(Λ)`, or any upper bound on it.
    pub nu1: f64,
    pub dim: usize,
}

impl ExchBoundParams {
    pub fn new(k: f64, nu1: f64, dim: usize) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return invalid(format!("coupling bound K must be positive and finite, got {k}"));
        }
        if !(nu1 > 0.0 && nu1.is_finite()) {
            return invalid(format!("nu1 must be positive and finite, got {nu1}"));
        }
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self { k, nu1, dim })
    }

    /// Uses the exact `ν₁ = 1/σ₁(Λ)`.
    pub fn from_lambda(k: f64, lambda: &SquareMatrix) -> Result<Self> {
        let s = smallest_singular_value(lambda);
        if s <= 0.0 {
            return invalid("linearity matrix is singular");
        }
        Self::new(k, 1.0 / s, lambda.dim())
    }

    /// Replaces `ν₁` by the determinant/trace upper bound `1/l`.
    pub fn from_lambda_lower_bound(k: f64, lambda: &SquareMatrix) -> Result<Self> {
        let l = sigma1_lower_bound(lambda)?;
        if l <= 0.0 {
            return invalid("linearity matrix is singular");
        }
        Self::new(k, 1.0 / l, lambda.dim())
    }

    /// `5·K·√ν₁`, the default end of a threshold grid.
    pub fn grid_scale(&self) -> f64 {
        5.0 * self.k * self.nu1.sqrt()
    }
}

/// `exp(−‖w‖₂² / (2K²ν₁))` for `w ⪰ 0`.
pub fn exch_tail_bound(w: &[f64], params: &ExchBoundParams) -> Result<f64> {
    check_nonnegative("threshold vector", w)?;
    if w.len() != params.dim {
        return invalid(format!("threshold vector has length {}, expected {}", w.len(), params.dim));
    }
    let sq: f64 = w.iter().map(|x| x * x).sum();
    Ok((-sq / (2.0 * params.k * params.k * params.nu1)).exp())
}

/// `exp(−wᵢ² / (2K²ν₁))`, the single-coordinate bound.
pub fn coord_tail_bound(w_i: f64, params: &ExchBoundParams) -> Result<f64> {
    check_nonnegative("threshold", &[w_i])?;
    Ok((-(w_i * w_i) / (2.0 * params.k * params.k * params.nu1)).exp())
}

/// Constants for the size-bias bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeBiasBoundParams {
    pub k1: f64,
    pub k2: f64,
}

impl SizeBiasBoundParams {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite() && k2 > 0.0 && k2.is_finite()) {
            return invalid(format!("K1 and K2 must be positive and finite, got {k1}, {k2}"));
        }
        Ok(Self { k1, k2 })
    }

    /// Norm of `t` at which the bound reaches `exp(−12.5)`.
    pub fn grid_scale(&self) -> f64 {
        let (k1, k2) = (self.k1, self.k2);
        (25.0 * k2 + (625.0 * k2 * k2 + 100.0 * k1).sqrt()) / 2.0
    }
}

/// `K₁ = (2K/σ₍₁₎)‖μ/σ‖₂` and `K₂ = K/(2σ₍₁₎)` with `σ₍₁₎ = min σᵢ`.
pub fn size_bias_constants(k: f64, mu: &[f64], sigma: &[f64]) -> Result<SizeBiasBoundParams> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("coupling bound K must be positive, got {k}"));
    }
    if mu.is_empty() || mu.len() != sigma.len() {
        return invalid("mu and sigma must be nonempty and of equal length");
    }
    if let Some(bad) = mu.iter().chain(sigma).find(|x| !(**x > 0.0) || !x.is_finite()) {
        return invalid(format!("mu and sigma must be strictly positive, found {bad}"));
    }
    let sigma_min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio: Vec<f64> = mu.iter().zip(sigma).map(|(m, s)| m / s).collect();
    SizeBiasBoundParams::new(2.0 * k / sigma_min * euclidean_norm(&ratio), k / (2.0 * sigma_min))
}

/// `exp(−‖t‖₂² / (2(K₁ + K₂‖t‖₂)))` for `t ⪰ 0`.
pub fn size_bias_tail_bound(t: &[f64], params: &SizeBiasBoundParams) -> Result<f64> {
    check_nonnegative("threshold vector", t)?;
    let norm = euclidean_norm(t);
    Ok((-(norm * norm) / (2.0 * (params.k1 + params.k2 * norm))).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn p(k: f64, nu1: f64, dim: usize) -> ExchBoundParams {
        ExchBoundParams::new(k, nu1, dim).unwrap()
    }

    #[test]
    fn exch_bound_examples() {
        assert_eq!(exch_tail_bound(&[0.0, 0.0], &p(3.0, 2.0, 2)).unwrap(), 1.0);
        assert_relative_eq!(
            exch_tail_bound(&[2.0, 0.0], &p(1.0, 1.0, 2)).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            exch_tail_bound(&[1.0, 1.0, 1.0], &p(2.0, 0.5, 3)).unwrap(),
            (-0.75f64).exp(),
            max_relative = 1e-15
        );
        assert!(exch_tail_bound(&[-0.1, 1.0], &p(1.0, 1.0, 2)).is_err());
        assert!(exch_tail_bound(&[0.1], &p(1.0, 1.0, 2)).is_err());
    }

    #[test]
    fn coord_bound_examples() {
        assert_eq!(coord_tail_bound(0.0, &p(1.0, 1.0, 1)).unwrap(), 1.0);
        assert_relative_eq!(coord_tail_bound(1.0, &p(1.0, 1.0, 1)).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        assert!(coord_tail_bound(-1.0, &p(1.0, 1.0, 1)).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ExchBoundParams::new(0.0, 1.0, 1).is_err());
        assert!(ExchBoundParams::new(1.0, 0.0, 1).is_err());
        assert!(ExchBoundParams::new(1.0, 1.0, 0).is_err());
        assert!(SizeBiasBoundParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn size_bias_constant_examples() {
        let c = size_bias_constants(2.0, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(c.k1, 4.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(c.k2, 1.0, max_relative = 1e-15);
        let c = size_bias_constants(1.0, &[3.0], &[2.0]).unwrap();
        assert_relative_eq!(c.k1, 1.5, max_relative = 1e-15);
        assert_relative_eq!(c.k2, 0.25, max_relative = 1e-15);
        assert!(size_bias_constants(1.0, &[0.0], &[1.0]).is_err());
        assert!(size_bias_constants(1.0, &[1.0], &[-1.0]).is_err());
        assert!(size_bias_constants(-1.0, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn size_bias_bound_examples() {
        let norm_one = SizeBiasBoundParams { k1: 1.0, k2: 0.0 };
        assert_eq!(size_bias_tail_bound(&[0.0, 0.0], &norm_one).unwrap(), 1.0);
        assert_relative_eq!(
            size_bias_tail_bound(&[0.6, 0.8], &norm_one).unwrap(),
            (-0.5f64).exp(),
            max_relative = 1e-14
        );
        let q = SizeBiasBoundParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(
            size_bias_tail_bound(&[3.0, 4.0], &q).unwrap(),
            (-25.0f64 / 14.0).exp(),
            max_relative = 1e-15
        );
        assert!(size_bias_tail_bound(&[-1.0], &q).is_err());
    }

    #[test]
    fn deep_thresholds_underflow_to_zero_only_past_range() {
        let q = p(1.0, 1.0, 1);
        assert!(coord_tail_bound(30.0, &q).unwrap() > 0.0);
        assert_eq!(coord_tail_bound(1e4, &q).unwrap(), 0.0);
    }

    #[test]
    fn lower_bound_never_exceeds_sigma1_random() {
        let mut rng = crate::rng::stream(99);
        let mut checked = 0;
        while checked < 10_000 {
            let k = rng.random_range(2..=6);
            let entries: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = SquareMatrix::new(k, entries).unwrap();
            let s = smallest_singular_value(&a);
            if s < 1e-6 {
                continue;
            }
            let l = sigma1_lower_bound(&a).unwrap();
            assert!(l <= s + 1e-9, "k={k} l={l} s={s}");
            checked += 1;
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = SquareMatrix> {
        (2usize..=6).prop_flat_map(|k| {
            prop::collection::vec(-1.0f64..1.0, k * k).prop_map(move |e| SquareMatrix::new(k, e).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sigma1_is_homogeneous(a in matrix_strategy(), c in -5.0f64..5.0) {
            let s = smallest_singular_value(&a);
            let sc = smallest_singular_value(&a.scaled(c).unwrap());
            prop_assert!((sc - c.abs() * s).abs() <= 1e-10 * (1.0 + c.abs() * s) + 1e-12);
        }

        #[test]
        fn singular_values_match_gram_trace(a in matrix_strategy()) {
            let sv = a.singular_values();
            let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
            let fro = a.frobenius_norm();
            prop_assert!((sum_sq - fro * fro).abs() <= 1e-10 * (1.0 + fro * fro));
            let prod: f64 = sv.iter().product();
            prop_assert!((prod - a.determinant().abs()).abs() <= 1e-9 * (1.0 + prod));
        }

        #[test]
        fn coordinate_bound_is_one_hot_exch_bound(
            w in 0.0f64..10.0, k in 0.1f64..4.0, nu1 in 0.1f64..4.0, dim in 1usize..6, idx in 0usize..6
        ) {
            let params = p(k, nu1, dim);
            let mut one_hot = vec![0.0; dim];
            one_hot[idx % dim] = w;
            prop_assert_eq!(
                coord_tail_bound(w, &params).unwrap(),
                exch_tail_bound(&one_hot, &params).unwrap()
            );
        }

        #[test]
        fn exch_bound_is_monotone(w in 0.01f64..5.0, dw in 0.01f64..1.0, k in 0.5f64..3.0, nu1 in 0.5f64..3.0) {
            let params = p(k, nu1, 2);
            let b0 = exch_tail_bound(&[w, 0.3], &params).unwrap();
            let b1 = exch_tail_bound(&[w + dw, 0.3], &params).unwrap();
            prop_assert!(b1 < b0 && b0 <= 1.0 && b1 > 0.0);
            let looser = p(k * 1.1, nu1, 2);
            prop_assert!(exch_tail_bound(&[w, 0.3], &looser).unwrap() > b0);
        }

        #[test]
        fn size_bias_bound_increases_in_constants(
            t1 in 0.01f64..5.0, t2 in 0.0f64..5.0, k1 in 0.1f64..5.0, k2 in 0.1f64..5.0
        ) {
            let base = size_bias_tail_bound(&[t1, t2], &SizeBiasBoundParams::new(k1, k2).unwrap()).unwrap();
            let more_k1 = size_bias_tail_bound(&[t1, t2], &SizeBiasBoundParams::new(k1 * 1.5, k2).unwrap()).unwrap();
            let more_k2 = size_bias_tail_bound(&[t1, t2], &SizeBiasBoundParams::new(k1, k2 * 1.5).unwrap()).unwrap();
            prop_assert!(more_k1 > base && more_k2 > base);
        }
    }
}
