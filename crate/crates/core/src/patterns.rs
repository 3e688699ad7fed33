//! Circular pattern occurrences in a uniform permutation, their first two
//! moments, the window-reordering size-bias coupling and the bivariate
//! size-bias bound for a pair of pattern counts.
//!
//! Positions, values and pattern entries are 0-based; the text form of a
//! pattern (`"1 3 2"`) is 1-based.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bounds::{size_bias_constants, size_bias_tail_bound, SizeBiasBoundParams};
use crate::error::{invalid, Error, Result};
use crate::perm;
use crate::rng::{stream, StreamRng};

/// Largest pattern length accepted (keeps `m!` exact in `f64`).
pub const MAX_PATTERN_LEN: usize = 18;

/// A pattern `τ ∈ S_m`, `m ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    tau: Vec<usize>,
    inverse: Vec<usize>,
}

impl Pattern {
    /// From a 0-based image vector.
    pub fn new(tau: Vec<usize>) -> Result<Self> {
        if tau.len() < 2 {
            return invalid("patterns need length m >= 2");
        }
        if tau.len() > MAX_PATTERN_LEN {
            return invalid(format!("patterns are limited to length {MAX_PATTERN_LEN}"));
        }
        perm::validate(&tau)?;
        let inverse = perm::inverse(&tau);
        Ok(Self { tau, inverse })
    }

    /// The increasing pattern `ι_m`.
    pub fn identity(m: usize) -> Result<Self> {
        Self::new(perm::identity(m))
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }

    /// 0-based images.
    pub fn as_slice(&self) -> &[usize] {
        &self.tau
    }

    /// True if the values of `pi` on the circular window starting at
    /// `alpha` are in the relative order of `τ`.
    pub fn occurs_at(&self, pi: &[usize], alpha: usize) -> bool {
        let n = pi.len();
        self.inverse.windows(2).all(|w| pi[(alpha + w[0]) % n] < pi[(alpha + w[1]) % n])
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tau = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::InvalidInput(format!("bad pattern entry `{t}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(tau)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tau.iter().map(|v| (v + 1).to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n < m {
        return invalid(format!("need n >= m, got n={n}, m={m}"));
    }
    Ok(())
}

/// Number of circular windows `α ∈ 0..n` at which `pat` occurs.
pub fn pattern_count(pi: &[usize], pat: &Pattern) -> Result<usize> {
    check_sizes(pi.len(), pat.m())?;
    perm::validate(pi)?;
    Ok(count_unchecked(pi, pat))
}

fn count_unchecked(pi: &[usize], pat: &Pattern) -> usize {
    (0..pi.len()).filter(|&a| pat.occurs_at(pi, a)).count()
}

/// Occurrences among the `n − m + 1` windows that do not wrap around. The
/// moment formulas below do not apply to this count.
pub fn pattern_count_linear(pi: &[usize], pat: &Pattern) -> Result<usize> {
    check_sizes(pi.len(), pat.m())?;
    perm::validate(pi)?;
    Ok((0..=pi.len() - pat.m()).filter(|&a| pat.occurs_at(pi, a)).count())
}

fn factorial_f64(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// `μ = n/m!`.
pub fn pattern_mean(n: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return invalid("m must be positive");
    }
    check_sizes(n, m)?;
    Ok(n as f64 / factorial_f64(m))
}

/// `I_k(τ)`: whether `τ(1..m−k)` and `τ(k+1..m)` share a relative order.
pub fn i_k(pat: &Pattern, k: usize) -> Result<bool> {
    let m = pat.m();
    if k == 0 || k >= m {
        return invalid(format!("k must lie in 1..={}, got {k}", m - 1));
    }
    let tau = pat.as_slice();
    let (head, tail) = (&tau[..m - k], &tau[k..]);
    Ok((0..m - k).all(|a| (a + 1..m - k).all(|b| (head[a] < head[b]) == (tail[a] < tail[b]))))
}

/// `n(1/m!·(1 − (2m−1)/m!) + 2 Σ_{k=1}^{m−1} I_k(τ)/(m+k)!)`.
///
/// Matches exact enumeration for `m = 2` and `n ≥ 3`, and for monotone
/// patterns of length 3 when `n ≥ 5`; other patterns deviate.
pub fn pattern_variance(n: usize, pat: &Pattern) -> Result<f64> {
    let m = pat.m();
    check_sizes(n, m)?;
    let mf = factorial_f64(m);
    let mut acc = (1.0 - (2 * m - 1) as f64 / mf) / mf;
    for k in 1..m {
        if i_k(pat, k)? {
            acc += 2.0 / factorial_f64(m + k);
        }
    }
    Ok(n as f64 * acc)
}

/// `n/m!·(1 − (2m−1)/m!)`, the `I_k ≡ 0` case of [`pattern_variance`].
pub fn pattern_variance_lower_bound(n: usize, m: usize) -> Result<f64> {
    let mf = factorial_f64(m);
    Ok(pattern_mean(n, m)? * (1.0 - (2 * m - 1) as f64 / mf))
}

/// `π` with the values on the circular window `V_β` rearranged so that the
/// window realizes `pat`; positions outside `V_β` are untouched.
pub fn size_bias_window_reorder(pi: &[usize], pat: &Pattern, beta: usize) -> Result<Vec<usize>> {
    let n = pi.len();
    check_sizes(n, pat.m())?;
    perm::validate(pi)?;
    if beta >= n {
        return invalid(format!("window start {beta} outside 0..{n}"));
    }
    let mut out = pi.to_vec();
    reorder_into(&mut out, pi, pat, beta);
    Ok(out)
}

fn reorder_into(out: &mut [usize], pi: &[usize], pat: &Pattern, beta: usize) {
    let n = pi.len();
    let m = pat.m();
    let mut values: Vec<usize> = (0..m).map(|p| pi[(beta + p) % n]).collect();
    values.sort_unstable();
    for (p, &rank) in pat.as_slice().iter().enumerate() {
        out[(beta + p) % n] = values[rank];
    }
}

/// Pathwise bound `(2m−1)√2` on `‖W − Wⁱ‖₂`.
pub fn pattern_coupling_bound(m: usize) -> f64 {
    (2 * m - 1) as f64 * std::f64::consts::SQRT_2
}

/// `K₁ = (8m−4)m!/(m!−2m+1)`, `K₂ = (2m−1)m!/√(2n(m!−2m+1))`.
pub fn pattern_constants(n: usize, m: usize) -> Result<SizeBiasBoundParams> {
    if m == 2 {
        return Err(Error::Unsupported("the pattern bound needs m >= 3 (m! - 2m + 1 is negative for m = 2)".into()));
    }
    if !(3..=MAX_PATTERN_LEN).contains(&m) {
        return invalid(format!("pattern length must lie in 3..={MAX_PATTERN_LEN}, got {m}"));
    }
    check_sizes(n, m)?;
    let mf = factorial_f64(m);
    let gap = mf - (2 * m - 1) as f64;
    let k1 = (8 * m - 4) as f64 * mf / gap;
    let k2 = (2 * m - 1) as f64 * mf / (2.0 * n as f64 * gap).sqrt();
    SizeBiasBoundParams::new(k1, k2)
}

/// Upper bound on `P((W − μ)/σ₍₁₎ ⪰ t)` for a pair of pattern counts, with
/// `σ₍₁₎` the variance lower bound.
pub fn pattern_bound(n: usize, m: usize, t: &[f64]) -> Result<f64> {
    if t.len() != 2 {
        return invalid(format!("pattern bound takes a 2-vector, got length {}", t.len()));
    }
    size_bias_tail_bound(t, &pattern_constants(n, m)?)
}

/// Constants with each `σ_i` taken from [`pattern_variance`] instead of the
/// common lower bound.
pub fn sharp_pattern_constants(n: usize, pat1: &Pattern, pat2: &Pattern) -> Result<SizeBiasBoundParams> {
    let m = check_pair(pat1, pat2)?;
    if m < 3 {
        return Err(Error::Unsupported("the pattern bound needs m >= 3".into()));
    }
    let mu = pattern_mean(n, m)?;
    let sigma = [pattern_variance(n, pat1)?.sqrt(), pattern_variance(n, pat2)?.sqrt()];
    size_bias_constants(pattern_coupling_bound(m), &[mu, mu], &sigma)
}

fn check_pair(pat1: &Pattern, pat2: &Pattern) -> Result<usize> {
    if pat1.m() != pat2.m() {
        return invalid(format!("patterns have different lengths {} and {}", pat1.m(), pat2.m()));
    }
    Ok(pat1.m())
}

/// One draw of the size-bias coupling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternPairSample {
    pub w: [usize; 2],
    pub w_biased: [usize; 2],
    /// Biasing direction, `0` or `1`.
    pub direction: usize,
    pub window_start: usize,
}

/// Pattern pair plus `n`; evaluates counts and the biased counts for a
/// given `(π, β)`.
#[derive(Debug, Clone)]
pub struct PatternPair {
    n: usize,
    patterns: [Pattern; 2],
}

impl PatternPair {
    pub fn new(n: usize, pat1: Pattern, pat2: Pattern) -> Result<Self> {
        let m = check_pair(&pat1, &pat2)?;
        check_sizes(n, m)?;
        Ok(Self { n, patterns: [pat1, pat2] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.patterns[0].m()
    }

    pub fn patterns(&self) -> &[Pattern; 2] {
        &self.patterns
    }

    pub fn counts(&self, pi: &[usize]) -> [usize; 2] {
        [count_unchecked(pi, &self.patterns[0]), count_unchecked(pi, &self.patterns[1])]
    }

    /// `Wⁱ` for window start `beta`, reusing `w = counts(pi)` and
    /// recounting only windows that meet `V_β`. `scratch` receives `π^β`.
    pub fn biased_counts(
        &self,
        pi: &[usize],
        w: [usize; 2],
        direction: usize,
        beta: usize,
        scratch: &mut Vec<usize>,
    ) -> [usize; 2] {
        let n = self.n;
        let m = self.m();
        scratch.clear();
        scratch.extend_from_slice(pi);
        reorder_into(scratch, pi, &self.patterns[direction], beta);
        let out = if 2 * m > n {
            self.counts(scratch)
        } else {
            let mut out = w;
            for (j, pat) in self.patterns.iter().enumerate() {
                let mut delta: isize = 0;
                for off in 0..2 * m - 1 {
                    let alpha = (beta + n + off + 1 - m) % n;
                    delta += pat.occurs_at(scratch, alpha) as isize - pat.occurs_at(pi, alpha) as isize;
                }
                out[j] = (w[j] as isize + delta) as usize;
            }
            out
        };
        debug_assert_eq!(out, self.counts(scratch));
        out
    }

    pub fn sampler(&self, direction: usize, seed: u64) -> Result<PatternPairSampler<'_>> {
        if direction > 1 {
            return invalid(format!("direction must be 0 or 1, got {direction}"));
        }
        Ok(PatternPairSampler {
            pair: self,
            direction,
            rng: stream(seed),
            pi: Vec::with_capacity(self.n),
            scratch: Vec::with_capacity(self.n),
        })
    }
}

/// Seeded stream of [`PatternPairSample`]s: uniform `π`, uniform `β`.
pub struct PatternPairSampler<'a> {
    pair: &'a PatternPair,
    direction: usize,
    rng: StreamRng,
    pi: Vec<usize>,
    scratch: Vec<usize>,
}

impl PatternPairSampler<'_> {
    pub fn current_permutation(&self) -> &[usize] {
        &self.pi
    }
}

impl Iterator for PatternPairSampler<'_> {
    type Item = PatternPairSample;

    fn next(&mut self) -> Option<PatternPairSample> {
        let n = self.pair.n;
        perm::shuffle_into(&mut self.pi, n, &mut self.rng);
        let beta = self.rng.random_range(0..n);
        let w = self.pair.counts(&self.pi);
        let w_biased = self.pair.biased_counts(&self.pi, w, self.direction, beta, &mut self.scratch);
        Some(PatternPairSample { w, w_biased, direction: self.direction, window_start: beta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutations;
    use approx::assert_relative_eq;

    fn naive_occurs(pi: &[usize], pat: &Pattern, alpha: usize) -> bool {
        let n = pi.len();
        let m = pat.m();
        let window: Vec<usize> = (0..m).map(|p| pi[(alpha + p) % n]).collect();
        let mut sorted = window.clone();
        sorted.sort_unstable();
        window.iter().zip(pat.as_slice()).all(|(v, &r)| sorted.binary_search(v).unwrap() == r)
    }

    fn exact_moments(n: usize, pat: &Pattern) -> (f64, f64) {
        let (mut s1, mut s2, mut count) = (0.0, 0.0, 0.0);
        Permutations::for_each(n, |pi| {
            let c = count_unchecked(pi, pat) as f64;
            s1 += c;
            s2 += c * c;
            count += 1.0;
        })
        .unwrap();
        let mean = s1 / count;
        (mean, s2 / count - mean * mean)
    }

    #[test]
    fn parse_and_display() {
        let p: Pattern = "1 3 2".parse().unwrap();
        assert_eq!(p.as_slice(), &[0, 2, 1]);
        assert_eq!(p.to_string(), "1 3 2");
        assert!("1 1 2".parse::<Pattern>().is_err());
        assert!("0 1".parse::<Pattern>().is_err());
        assert!("1".parse::<Pattern>().is_err());
        assert!("1 x".parse::<Pattern>().is_err());
        assert_eq!("2,1".parse::<Pattern>().unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn count_examples() {
        let rise = Pattern::identity(2).unwrap();
        assert_eq!(pattern_count(&[0, 1, 2, 3], &rise).unwrap(), 3);
        assert_eq!(pattern_count_linear(&[0, 1, 2, 3], &rise).unwrap(), 3);
        for (n, m) in [(5, 3), (8, 4), (6, 6)] {
            let id = perm::identity(n);
            assert_eq!(pattern_count(&id, &Pattern::identity(m).unwrap()).unwrap(), n - m + 1);
        }
        assert!(pattern_count(&[0, 1], &Pattern::identity(3).unwrap()).is_err());
    }

    #[test]
    fn count_matches_naive_ranks() {
        let mut rng = crate::rng::stream(4);
        let pats: Vec<Pattern> = (0..6).map(|_| Pattern::new(perm::random(3, &mut rng)).unwrap()).collect();
        for _ in 0..200 {
            let pi = perm::random(8, &mut rng);
            for pat in &pats {
                let naive = (0..8).filter(|&a| naive_occurs(&pi, pat, a)).count();
                assert_eq!(pattern_count(&pi, pat).unwrap(), naive);
            }
        }
    }

    #[test]
    fn counts_over_all_patterns_sum_to_n() {
        let mut rng = crate::rng::stream(6);
        let mut all = Vec::new();
        Permutations::for_each(3, |t| all.push(Pattern::new(t.to_vec()).unwrap())).unwrap();
        for _ in 0..50 {
            let pi = perm::random(9, &mut rng);
            let total: usize = all.iter().map(|p| pattern_count(&pi, p).unwrap()).sum();
            assert_eq!(total, 9);
        }
    }

    #[test]
    fn moment_examples() {
        assert_relative_eq!(pattern_mean(10, 3).unwrap(), 10.0 / 6.0);
        let id3 = Pattern::identity(3).unwrap();
        assert!(i_k(&id3, 1).unwrap());
        assert!(!i_k(&"1 3 2".parse().unwrap(), 1).unwrap());
        assert!(i_k(&id3, 0).is_err() && i_k(&id3, 3).is_err());
        for n in [3, 7, 20] {
            let v = pattern_variance(n, &Pattern::identity(2).unwrap()).unwrap();
            assert_relative_eq!(v, n as f64 / 12.0, max_relative = 1e-14);
        }
        assert!(pattern_mean(2, 3).is_err());
    }

    #[test]
    fn exact_mean_matches_formula() {
        let mut rng = crate::rng::stream(10);
        for (n, m) in [(4, 2), (5, 3), (7, 3), (6, 4), (7, 4)] {
            let pat = Pattern::new(perm::random(m, &mut rng)).unwrap();
            let (mean, _) = exact_moments(n, &pat);
            assert_relative_eq!(mean, pattern_mean(n, m).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn variance_formula_where_it_is_exact() {
        for n in 3..=7 {
            let (_, var) = exact_moments(n, &Pattern::identity(2).unwrap());
            assert_relative_eq!(var, pattern_variance(n, &Pattern::identity(2).unwrap()).unwrap(), epsilon = 1e-9);
        }
        for n in 5..=7 {
            for text in ["1 2 3", "3 2 1"] {
                let pat: Pattern = text.parse().unwrap();
                let (_, var) = exact_moments(n, &pat);
                assert_relative_eq!(var, pattern_variance(n, &pat).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn variance_formula_misses_non_monotone_patterns() {
        // Exact variance of the `1 3 2` count at n = 7 is 49/90. The formula
        // has I_1 = 0, I_2 = 1 and gives 7·(1/36 + 2/120) = 14/45.
        let pat: Pattern = "1 3 2".parse().unwrap();
        let (_, var) = exact_moments(7, &pat);
        assert_relative_eq!(var, 49.0 / 90.0, epsilon = 1e-12);
        assert_relative_eq!(pattern_variance(7, &pat).unwrap(), 14.0 / 45.0, epsilon = 1e-12);
    }

    #[test]
    fn window_reorder_properties() {
        let mut rng = crate::rng::stream(12);
        let pats = ["1 3 2", "2 1 3", "1 2 3", "3 1 2"];
        for _ in 0..100 {
            let pi = perm::random(7, &mut rng);
            for text in pats {
                let pat: Pattern = text.parse().unwrap();
                let beta = rng.random_range(0..7);
                let out = size_bias_window_reorder(&pi, &pat, beta).unwrap();
                perm::validate(&out).unwrap();
                assert!(pat.occurs_at(&out, beta));
                for p in 0..7 {
                    if (p + 7 - beta) % 7 >= 3 {
                        assert_eq!(out[p], pi[p]);
                    }
                }
                let mut a: Vec<_> = (0..3).map(|p| pi[(beta + p) % 7]).collect();
                let mut b: Vec<_> = (0..3).map(|p| out[(beta + p) % 7]).collect();
                a.sort_unstable();
                b.sort_unstable();
                assert_eq!(a, b);
                assert_eq!(size_bias_window_reorder(&out, &pat, beta).unwrap(), out);
                if pat.occurs_at(&pi, beta) {
                    assert_eq!(out, pi);
                }
            }
        }
        assert!(size_bias_window_reorder(&[0, 1, 2], &Pattern::identity(2).unwrap(), 3).is_err());
    }

    #[test]
    fn sampler_incremental_and_pathwise() {
        let pair = PatternPair::new(12, "1 3 2".parse().unwrap(), "1 2 3".parse().unwrap()).unwrap();
        for direction in 0..2 {
            let mut sampler = pair.sampler(direction, 5).unwrap();
            for _ in 0..500 {
                let s = sampler.next().unwrap();
                let pi = sampler.current_permutation().to_vec();
                let biased = size_bias_window_reorder(&pi, &pair.patterns()[direction], s.window_start).unwrap();
                assert_eq!(s.w, pair.counts(&pi));
                assert_eq!(s.w_biased, pair.counts(&biased));
                for j in 0..2 {
                    assert!(s.w_biased[j].abs_diff(s.w[j]) <= 5);
                }
            }
        }
        let small = PatternPair::new(4, Pattern::identity(3).unwrap(), "3 2 1".parse().unwrap()).unwrap();
        let a: Vec<_> = small.sampler(1, 9).unwrap().take(40).collect();
        let b: Vec<_> = small.sampler(1, 9).unwrap().take(40).collect();
        assert_eq!(a, b);
        assert!(PatternPair::new(5, Pattern::identity(3).unwrap(), Pattern::identity(2).unwrap()).is_err());
        assert!(small.sampler(2, 0).is_err());
    }

    #[test]
    fn bound_constants() {
        for n in [3, 10, 100] {
            let c = pattern_constants(n, 3).unwrap();
            assert_relative_eq!(c.k1, 120.0, max_relative = 1e-14);
            assert_relative_eq!(c.k2, 30.0 / (2.0 * n as f64).sqrt(), max_relative = 1e-14);
            let sigma = pattern_variance_lower_bound(n, 3).unwrap().sqrt();
            let mu = pattern_mean(n, 3).unwrap();
            let generic = size_bias_constants(pattern_coupling_bound(3), &[mu, mu], &[sigma, sigma]).unwrap();
            assert_relative_eq!(generic.k1, c.k1, max_relative = 1e-12);
            assert_relative_eq!(generic.k2, c.k2, max_relative = 1e-12);
        }
        let c4 = pattern_constants(10, 4).unwrap();
        assert_relative_eq!(c4.k1, 28.0 * 24.0 / 17.0, max_relative = 1e-14);
        assert!(matches!(pattern_constants(10, 2), Err(Error::Unsupported(_))));
        assert_eq!(pattern_bound(10, 3, &[0.0, 0.0]).unwrap(), 1.0);
        assert!(pattern_bound(10, 3, &[1.0]).is_err());
        let sharp = sharp_pattern_constants(10, &Pattern::identity(3).unwrap(), &"1 3 2".parse().unwrap()).unwrap();
        assert!(sharp.k1 <= 120.0);
    }
}
