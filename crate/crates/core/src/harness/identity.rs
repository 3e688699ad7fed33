use std::collections::HashMap;

use rand::distr::Distribution;
use serde::Serialize;

use super::enumerate::{enumerate_product_space, MAX_PRODUCT_SPACE};
use super::montecarlo::MonteCarlo;
use super::tail::Method;
use crate::bounds::{euclidean_norm, SquareMatrix};
use crate::dips::{lambda_dips, DipsArray, RemainderForm};
use crate::error::{invalid, resource, Result};
use crate::patterns::PatternPair;
use crate::perm::{self, factorial, Permutations};
use crate::ustat::UStatModel;

/// Largest number of `(W, W′)` pairs materialized for exact checks.
const MAX_PAIR_LIST: u128 = 2_000_000;

/// Worst residual of a coupling identity over the conditioning points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub max_residual: f64,
    pub residual_norm_type: &'static str,
    pub sample_space_size: u64,
    pub method: Method,
}

fn identity_minus(lambda: &SquareMatrix, w: &[f64]) -> Vec<f64> {
    let lw = lambda.mul_vec(w).expect("dimensions agree");
    w.iter().zip(lw).map(|(a, b)| a - b).collect()
}

fn residual(expected: &[f64], target: &[f64]) -> f64 {
    let diff: Vec<f64> = expected.iter().zip(target).map(|(a, b)| a - b).collect();
    euclidean_norm(&diff)
}

fn ustat_conditional_residual(model: &UStatModel, lambda: &SquareMatrix, x: &[usize]) -> f64 {
    let n = model.n();
    let probs = model.distribution().probabilities();
    let w = model.w_vector(x);
    let mut expected = vec![0.0; model.d()];
    for i in 0..n {
        for (a, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let wp = model.w_replaced(x, &w, i, a);
            for (e, v) in expected.iter_mut().zip(wp) {
                *e += p * v / n as f64;
            }
        }
    }
    residual(&expected, &identity_minus(lambda, &w))
}

/// `max_X ‖E(W′|X) − (I − Λ)W‖₂` over every sample configuration of
/// positive probability, with the inner expectation over `(I, X′_I)` exact.
pub fn linearity_residual_ustat(model: &UStatModel) -> Result<IdentityReport> {
    let a = model.distribution().len();
    let n = model.n();
    let work = (a as u128).checked_pow(n as u32).unwrap_or(u128::MAX).saturating_mul((n * a) as u128);
    if work > MAX_PRODUCT_SPACE {
        return resource(format!("atoms^n * n * atoms = {work} exceeds the {MAX_PRODUCT_SPACE} guard"));
    }
    let lambda = model.lambda()?;
    let probs = model.distribution().probabilities();
    let mut max: f64 = 0.0;
    let mut points = 0u64;
    enumerate_product_space(a, n, |x| {
        if x.iter().any(|&i| probs[i] == 0.0) {
            return;
        }
        points += 1;
        max = max.max(ustat_conditional_residual(model, &lambda, x));
    })?;
    Ok(IdentityReport {
        max_residual: max,
        residual_norm_type: "euclidean",
        sample_space_size: points,
        method: Method::Exact,
    })
}

/// As [`linearity_residual_ustat`], maximized over sampled configurations.
pub fn linearity_residual_ustat_sampled(model: &UStatModel, mc: &MonteCarlo) -> Result<IdentityReport> {
    let lambda = model.lambda()?;
    let atom_dist = model.distribution().sampler();
    let maxima = mc.map_chunks(|seed, count| {
        let mut rng = crate::rng::stream(seed);
        let mut x = vec![0usize; model.n()];
        let mut max: f64 = 0.0;
        for _ in 0..count {
            for slot in x.iter_mut() {
                *slot = atom_dist.sample(&mut rng);
            }
            max = max.max(ustat_conditional_residual(model, &lambda, &x));
        }
        Ok(max)
    })?;
    Ok(IdentityReport {
        max_residual: maxima.into_iter().fold(0.0, f64::max),
        residual_norm_type: "euclidean",
        sample_space_size: mc.samples(),
        method: Method::MonteCarlo,
    })
}

fn dips_conditional_residual(
    array: &DipsArray,
    lambda: &SquareMatrix,
    form: RemainderForm,
    pi: &[usize],
) -> Result<f64> {
    let n = array.n();
    let v = array.v_vector(pi);
    let mut expected = [0.0; 3];
    let pairs = (n * (n - 1)) as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let vp = array.swapped_v(pi, &v, i, j);
                for k in 0..3 {
                    expected[k] += vp[k] / pairs;
                }
            }
        }
    }
    let mut target = identity_minus(lambda, &v);
    target[0] += form.r1(v[0], n)?;
    Ok(residual(&expected, &target))
}

/// `max_π ‖E(V′|π) − (I₃ − Λ)V − (R₁, 0, 0)‖₂` over all of `S_n`, averaging
/// over every ordered transposition `(I, J)`.
pub fn linearity_residual_dips(array: &DipsArray, form: RemainderForm) -> Result<IdentityReport> {
    let n = array.n();
    let work = factorial(n).saturating_mul((n * n) as u128);
    if work > 100 * MAX_PRODUCT_SPACE {
        return resource(format!("n! * n^2 = {work} is too large for exact enumeration"));
    }
    let lambda = lambda_dips(n)?;
    let mut max: f64 = 0.0;
    let mut perms = Permutations::new(n)?;
    let mut points = 0u64;
    while let Some(pi) = perms.next_perm() {
        points += 1;
        max = max.max(dips_conditional_residual(array, &lambda, form, pi)?);
    }
    Ok(IdentityReport {
        max_residual: max,
        residual_norm_type: "euclidean",
        sample_space_size: points,
        method: Method::Exact,
    })
}

/// As [`linearity_residual_dips`], maximized over sampled permutations.
pub fn linearity_residual_dips_sampled(
    array: &DipsArray,
    form: RemainderForm,
    mc: &MonteCarlo,
) -> Result<IdentityReport> {
    let lambda = lambda_dips(array.n())?;
    let maxima = mc.map_chunks(|seed, count| {
        let mut rng = crate::rng::stream(seed);
        let mut pi = Vec::new();
        let mut max: f64 = 0.0;
        for _ in 0..count {
            perm::shuffle_into(&mut pi, array.n(), &mut rng);
            max = max.max(dips_conditional_residual(array, &lambda, form, &pi)?);
        }
        Ok(max)
    })?;
    Ok(IdentityReport {
        max_residual: maxima.into_iter().fold(0.0, f64::max),
        residual_norm_type: "euclidean",
        sample_space_size: mc.samples(),
        method: Method::MonteCarlo,
    })
}

/// `(W, W′, probability)`.
pub type WeightedPair = (Vec<f64>, Vec<f64>, f64);

/// Every `(X, I, X′_I)` outcome of the coordinate-replacement coupling.
pub fn ustat_exact_pairs(model: &UStatModel) -> Result<Vec<WeightedPair>> {
    let a = model.distribution().len();
    let n = model.n();
    let size = (a as u128).checked_pow(n as u32).unwrap_or(u128::MAX).saturating_mul((n * a) as u128);
    if size > MAX_PAIR_LIST {
        return resource(format!("{size} coupling outcomes exceed the {MAX_PAIR_LIST} guard"));
    }
    let probs = model.distribution().probabilities();
    let mut out = Vec::with_capacity(size as usize);
    enumerate_product_space(a, n, |x| {
        let px: f64 = x.iter().map(|&i| probs[i]).product();
        if px == 0.0 {
            return;
        }
        let w = model.w_vector(x);
        for i in 0..n {
            for (atom, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    let wp = model.w_replaced(x, &w, i, atom);
                    out.push((w.clone(), wp, px * p / n as f64));
                }
            }
        }
    })?;
    Ok(out)
}

/// Every `(π, I, J)` outcome of the transposition coupling, in `W` scale.
pub fn dips_exact_pairs(array: &DipsArray) -> Result<Vec<WeightedPair>> {
    let n = array.n();
    let size = factorial(n).saturating_mul((n * (n - 1)) as u128);
    if size > MAX_PAIR_LIST {
        return resource(format!("{size} coupling outcomes exceed the {MAX_PAIR_LIST} guard"));
    }
    let weight = 1.0 / size as f64;
    let scale = (n as f64).powf(-1.5);
    let mut out = Vec::with_capacity(size as usize);
    Permutations::for_each(n, |pi| {
        let v = array.v_vector(pi);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let vp = array.swapped_v(pi, &v, i, j);
                    out.push((v.iter().map(|x| x * scale).collect(), vp.iter().map(|x| x * scale).collect(), weight));
                }
            }
        }
    })?;
    Ok(out)
}

/// Distance between the laws of `f(W, W′)` and `f(W′, W)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeabilityReport {
    pub distance: f64,
    /// `total-variation` (exact) or `kolmogorov-smirnov` (sampled).
    pub distance_kind: &'static str,
    pub sample_space_size: u64,
    pub method: Method,
}

fn value_key(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

/// Exact total-variation distance; values are identified up to `1e−9`.
pub fn exchangeability_exact(
    pairs: &[WeightedPair],
    f: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<ExchangeabilityReport> {
    if pairs.is_empty() {
        return invalid("no coupling outcomes to compare");
    }
    let mut mass: HashMap<i64, f64> = HashMap::new();
    for (w, wp, p) in pairs {
        *mass.entry(value_key(f(w, wp))).or_default() += p;
        *mass.entry(value_key(f(wp, w))).or_default() -= p;
    }
    let mut keys: Vec<_> = mass.keys().copied().collect();
    keys.sort_unstable();
    let tv = 0.5 * keys.iter().map(|k| mass[k].abs()).sum::<f64>();
    Ok(ExchangeabilityReport {
        distance: tv,
        distance_kind: "total-variation",
        sample_space_size: pairs.len() as u64,
        method: Method::Exact,
    })
}

/// Two-sample Kolmogorov-Smirnov distance between sampled `f(W, W′)` and
/// `f(W′, W)`. `chunk(seed, count, emit)` must emit `count` pairs.
pub fn exchangeability_sampled<C, F>(mc: &MonteCarlo, chunk: C, f: F) -> Result<ExchangeabilityReport>
where
    C: Fn(u64, u64, &mut dyn FnMut(&[f64], &[f64])) -> Result<()> + Sync + Send,
    F: Fn(&[f64], &[f64]) -> f64 + Sync + Send,
{
    let parts = mc.map_chunks(|seed, count| {
        let (mut fw, mut bw) = (Vec::with_capacity(count as usize), Vec::with_capacity(count as usize));
        chunk(seed, count, &mut |w, wp| {
            fw.push(f(w, wp));
            bw.push(f(wp, w));
        })?;
        Ok((fw, bw))
    })?;
    let (mut fw, mut bw): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (a, b) in parts {
        fw.extend(a);
        bw.extend(b);
    }
    if fw.is_empty() {
        return invalid("no coupling outcomes sampled");
    }
    fw.sort_by(f64::total_cmp);
    bw.sort_by(f64::total_cmp);
    let (n, m) = (fw.len() as f64, bw.len() as f64);
    let (mut i, mut j, mut d): (usize, usize, f64) = (0, 0, 0.0);
    while i < fw.len() && j < bw.len() {
        let x = fw[i].min(bw[j]);
        while i < fw.len() && fw[i] <= x {
            i += 1;
        }
        while j < bw.len() && bw[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(ExchangeabilityReport {
        distance: d,
        distance_kind: "kolmogorov-smirnov",
        sample_space_size: fw.len() as u64,
        method: Method::MonteCarlo,
    })
}

/// Named test function `f: ℝ² → ℝ` for the size-bias identity.
pub type TestFunction = (&'static str, fn(&[f64; 2]) -> f64);

/// `1`, `W₁`, `W₂`, `W₁W₂` and `exp(0.1(W₁ + W₂))`.
pub fn size_bias_test_functions() -> Vec<TestFunction> {
    vec![
        ("one", |_| 1.0),
        ("w1", |w| w[0]),
        ("w2", |w| w[1]),
        ("w1*w2", |w| w[0] * w[1]),
        ("exp(0.1*(w1+w2))", |w| (0.1 * (w[0] + w[1])).exp()),
    ]
}

/// Both sides of `E(W_i f(W)) = μ_i E f(Wⁱ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeBiasIdentity {
    pub function: &'static str,
    pub direction: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Exact `E W_i` from the enumeration.
    pub mean: f64,
    /// `n/m!`.
    pub mu: f64,
}

/// Checks the size-bias identity by enumerating every `(π, β)`.
pub fn size_bias_identity(pair: &PatternPair, direction: usize, f: &TestFunction) -> Result<SizeBiasIdentity> {
    if direction > 1 {
        return invalid(format!("direction must be 0 or 1, got {direction}"));
    }
    let n = pair.n();
    let mu = crate::patterns::pattern_mean(n, pair.m())?;
    let mut perms = Permutations::new(n)?;
    let (mut lhs, mut mean, mut biased) = (0.0, 0.0, 0.0);
    let mut scratch = Vec::with_capacity(n);
    let mut count = 0u64;
    while let Some(pi) = perms.next_perm() {
        count += 1;
        let w = pair.counts(pi);
        let wf = [w[0] as f64, w[1] as f64];
        lhs += wf[direction] * (f.1)(&wf);
        mean += wf[direction];
        for beta in 0..n {
            let wb = pair.biased_counts(pi, w, direction, beta, &mut scratch);
            biased += (f.1)(&[wb[0] as f64, wb[1] as f64]);
        }
    }
    let total = count as f64;
    let lhs = lhs / total;
    let rhs = mu * biased / (total * n as f64);
    Ok(SizeBiasIdentity { function: f.0, direction, lhs, rhs, residual: (lhs - rhs).abs(), mean: mean / total, mu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::Pattern;
    use crate::ustat::{FiniteDistribution, Kernel};

    #[test]
    fn ustat_linearity_is_exact() {
        let dist = FiniteDistribution::rademacher();
        let model = UStatModel::new(&Kernel::mean_pair(), &dist, 5).unwrap();
        let rep = linearity_residual_ustat(&model).unwrap();
        assert!(rep.max_residual <= 1e-10, "{rep:?}");
        assert_eq!(rep.sample_space_size, 32);
        let skew = FiniteDistribution::new(vec![-1.0, 0.5, 2.0], vec![0.5, 0.25, 0.25]).unwrap();
        let kernel = Kernel::sign_avg_d3();
        assert!(crate::ustat::kernel_mean(&kernel, &skew).unwrap().abs() < 1e-15);
        let model = UStatModel::new(&kernel, &skew, 6).unwrap();
        assert!(linearity_residual_ustat(&model).unwrap().max_residual <= 1e-10);
        // A kernel with nonzero mean breaks the identity.
        let biased = FiniteDistribution::new(vec![-1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let model = UStatModel::new(&kernel, &biased, 6).unwrap();
        assert!(linearity_residual_ustat(&model).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn dips_linearity_uses_derived_remainder() {
        let zero = DipsArray::dense(4, 1.0, vec![0.0; 256]).unwrap();
        assert_eq!(linearity_residual_dips(&zero, RemainderForm::Printed).unwrap().max_residual, 0.0);
        let mut rng = crate::rng::stream(17);
        let a = DipsArray::random_symmetric(5, 1.0, &mut rng).unwrap();
        let derived = linearity_residual_dips(&a, RemainderForm::Derived).unwrap();
        assert!(derived.max_residual <= 1e-9, "{derived:?}");
        let printed = linearity_residual_dips(&a, RemainderForm::Printed).unwrap();
        assert!(printed.max_residual > 1e-3);
        let mc = MonteCarlo::new(2, 200).unwrap();
        let sampled = linearity_residual_dips_sampled(&a, RemainderForm::Derived, &mc).unwrap();
        assert!(sampled.max_residual <= 1e-9);
    }

    #[test]
    fn exchangeability_exact_scale() {
        let mut rng = crate::rng::stream(4);
        let a = DipsArray::random_symmetric(4, 1.0, &mut rng).unwrap();
        let pairs = dips_exact_pairs(&a).unwrap();
        let rep = exchangeability_exact(&pairs, |w, _| w[0]).unwrap();
        assert!(rep.distance < 1e-12, "{rep:?}");
        let sym = exchangeability_exact(&pairs, |w, wp| w[0] + wp[0]).unwrap();
        assert_eq!(sym.distance, 0.0);
        let model = UStatModel::new(&Kernel::mean_pair(), &FiniteDistribution::rademacher(), 5).unwrap();
        let pairs = ustat_exact_pairs(&model).unwrap();
        let rep = exchangeability_exact(&pairs, |w, wp| w[1] - wp[1]).unwrap();
        assert!(rep.distance < 1e-12);
        // A non-exchangeable pair: W′ = W + 1.
        let shifted: Vec<WeightedPair> = vec![(vec![0.0], vec![1.0], 1.0)];
        assert_eq!(exchangeability_exact(&shifted, |w, _| w[0]).unwrap().distance, 1.0);
    }

    #[test]
    fn exchangeability_sampled_small_distance() {
        let a = crate::dips::mww_array(5, 5).unwrap();
        let mc = MonteCarlo::new(8, 20_000).unwrap();
        let rep = exchangeability_sampled(
            &mc,
            |seed, count, emit| {
                for s in a.sampler(seed)?.take(count as usize) {
                    emit(&s.v, &s.v_prime);
                }
                Ok(())
            },
            |w, _| w[0],
        )
        .unwrap();
        assert!(rep.distance < 0.03, "{rep:?}");
    }

    #[test]
    fn size_bias_identity_small() {
        let pair = PatternPair::new(6, "1 3 2".parse().unwrap(), Pattern::identity(3).unwrap()).unwrap();
        for direction in 0..2 {
            for f in size_bias_test_functions() {
                let r = size_bias_identity(&pair, direction, &f).unwrap();
                assert!(r.residual <= 1e-9, "{r:?}");
                assert!((r.mean - r.mu).abs() < 1e-12);
            }
        }
    }
}
