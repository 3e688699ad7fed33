//! Complete non-degenerate U-statistics and their coordinate-replacement
//! exchangeable pair.
//!
//! For a symmetric kernel `ψ` of arity `d` with `‖ψ‖_∞ ≤ b` and `Eψ = 0`,
//! the projections `ψ_k = E(ψ | X₁..X_k)` give unnormalized statistics
//! `U_k = Σ_{|j|=k} ψ_k(X_j)` and the embedding
//! `W_k = √n · C(n,k)⁻¹ · U_k`, `k = 1..d`. Replacing a uniformly chosen
//! coordinate by an independent copy yields an exchangeable pair with
//! `E(W′|X) = (I − Λ)W` for the lower bidiagonal [`lambda_matrix_u`].
//!
//! Projections are computed exactly, so the embedding is only available for
//! finite-support distributions ([`FiniteDistribution`]). The top coordinate
//! `W_d` alone ([`scaled_u_statistic`]) works on any real sample.

use std::fmt;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Deserialize;

use crate::bounds::SquareMatrix;
use crate::error::{invalid, resource, Result};
use crate::perm::Permutations;
use crate::rng::{stream, StreamRng};

/// Largest number of index subsets a single U-statistic may enumerate.
pub const MAX_SUBSETS: u128 = 10_000_000;
/// Largest number of atom tuples averaged out when projecting a kernel.
pub const MAX_PROJECTION_TERMS: u128 = 1_000_000;
/// Below this `max |ψ₁|` over the atoms the kernel is treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

type KernelFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Bounded symmetric kernel `ψ: ℝᵈ → ℝ`.
///
/// Symmetry, the sup bound and the mean-zero contract are the caller's
/// responsibility; [`Kernel::spot_check`] and [`kernel_mean`] test them.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    arity: usize,
    sup_bound: f64,
    eval: Arc<KernelFn>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Kernel {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        sup_bound: f64,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if arity == 0 {
            return invalid("kernel arity must be at least 1");
        }
        if !(sup_bound > 0.0 && sup_bound.is_finite()) {
            return invalid(format!("kernel sup bound must be positive, got {sup_bound}"));
        }
        Ok(Self { name: name.into(), arity, sup_bound, eval: Arc::new(eval) })
    }

    /// `ψ(x, y) = (x + y)/2`, `b = 1`.
    pub fn mean_pair() -> Self {
        Self::new("mean-pair", 2, 1.0, |x| (x[0] + x[1]) / 2.0).expect("valid builtin")
    }

    /// `ψ(x, y) = xy`, `b = 1`.
    pub fn product() -> Self {
        Self::new("product", 2, 1.0, |x| x[0] * x[1]).expect("valid builtin")
    }

    /// `ψ(x, y, z) = (sgn x + sgn y + sgn z)/3`, `b = 1`.
    pub fn sign_avg_d3() -> Self {
        Self::new("sign-avg-d3", 3, 1.0, |x| x.iter().map(|v| sign(*v)).sum::<f64>() / 3.0).expect("valid builtin")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "mean-pair" => Ok(Self::mean_pair()),
            "product" => Ok(Self::product()),
            "sign-avg-d3" => Ok(Self::sign_avg_d3()),
            other => invalid(format!("unknown kernel `{other}` (expected mean-pair, product or sign-avg-d3)")),
        }
    }

    /// Kernel tabulated on a finite grid; off-grid arguments evaluate to NaN.
    pub fn tabulated(table: TabulatedKernel) -> Result<Self> {
        table.validate()?;
        let TabulatedKernel { arity, atoms, values, b } = table;
        Self::new("tabulated", arity, b, move |x| {
            let mut idx = 0usize;
            for v in x {
                match atoms.iter().position(|a| a == v) {
                    Some(p) => idx = idx * atoms.len() + p,
                    None => return f64::NAN,
                }
            }
            values[idx]
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn evaluate(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.arity);
        (self.eval)(args)
    }

    /// Checks `|ψ| ≤ b` on every input and, for arity ≤ 4, invariance under
    /// every reordering of the arguments.
    pub fn spot_check(&self, inputs: &[Vec<f64>]) -> Result<()> {
        let slack = 1e-12 * self.sup_bound;
        for x in inputs {
            if x.len() != self.arity {
                return invalid(format!("spot-check input {x:?} has the wrong arity"));
            }
            let v = self.evaluate(x);
            if !v.is_finite() || v.abs() > self.sup_bound + slack {
                return invalid(format!(
                    "kernel {} gives {v} at {x:?}, outside the declared bound {}",
                    self.name, self.sup_bound
                ));
            }
            if self.arity <= 4 {
                let mut perms = Permutations::new(self.arity)?;
                let mut buf = vec![0.0; self.arity];
                while let Some(p) = perms.next_perm() {
                    for (slot, &src) in buf.iter_mut().zip(p) {
                        *slot = x[src];
                    }
                    if (self.evaluate(&buf) - v).abs() > slack {
                        return invalid(format!("kernel {} is not symmetric at {x:?}", self.name));
                    }
                }
            }
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// JSON form of a user kernel: `{"arity": d, "atoms": [..], "values": [..], "b": bound}`
/// with `values` the row-major flattening of the `atoms^d` table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TabulatedKernel {
    pub arity: usize,
    pub atoms: Vec<f64>,
    pub values: Vec<f64>,
    pub b: f64,
}

impl TabulatedKernel {
    pub fn validate(&self) -> Result<()> {
        let a = self.atoms.len();
        if self.arity == 0 || a == 0 {
            return invalid("tabulated kernel needs arity >= 1 and at least one atom");
        }
        let expected = checked_pow(a, self.arity)
            .filter(|&c| c <= MAX_SUBSETS)
            .ok_or_else(|| crate::Error::ResourceLimit("tabulated kernel table too large".into()))?;
        if self.values.len() as u128 != expected {
            return invalid(format!("tabulated kernel expects {expected} values, found {}", self.values.len()));
        }
        if !(self.b > 0.0) {
            return invalid("tabulated kernel bound b must be positive");
        }
        let slack = 1e-12 * self.b;
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || v.abs() > self.b + slack) {
            return invalid(format!("tabulated value {v} exceeds the declared bound {}", self.b));
        }
        let mut digits = vec![0usize; self.arity];
        for (flat, &v) in self.values.iter().enumerate() {
            decode(flat, a, &mut digits);
            let mut sorted = digits.clone();
            sorted.sort_unstable();
            if (self.values[encode(&sorted, a)] - v).abs() > slack {
                return invalid(format!("tabulated kernel is not symmetric at index {digits:?}"));
            }
        }
        Ok(())
    }
}

fn encode(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

fn decode(mut flat: usize, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base as u128))
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Distribution with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<f64>,
    probabilities: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probabilities.len() {
            return invalid("distribution needs at least one atom and one probability per atom");
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return invalid("atoms must be finite");
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return invalid("probabilities must be nonnegative");
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { atoms, probabilities })
    }

    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let p = 1.0 / atoms.len() as f64;
        let probabilities = vec![p; atoms.len()];
        Self::new(atoms, probabilities)
    }

    /// Uniform on `{−1, +1}`.
    pub fn rademacher() -> Self {
        Self::uniform(vec![-1.0, 1.0]).expect("valid")
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probabilities).expect("validated probabilities")
    }
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn subset_guard(n: usize, k: usize) -> Result<()> {
    let count = binomial(n, k);
    if count > MAX_SUBSETS {
        return resource(format!("C({n},{k}) = {count} exceeds the {MAX_SUBSETS} subset guard"));
    }
    Ok(())
}

/// `U_d = Σ_{j₁<…<j_d} ψ(X_{j₁}, …, X_{j_d})`, summed in lexicographic order.
pub fn u_statistic(sample: &[f64], kernel: &Kernel) -> Result<f64> {
    let (n, d) = (sample.len(), kernel.arity());
    if n < d {
        return invalid(format!("sample size {n} is smaller than the kernel arity {d}"));
    }
    subset_guard(n, d)?;
    let mut args = vec![0.0; d];
    let mut total = 0.0;
    for_each_subset(n, d, |j| {
        for (a, &i) in args.iter_mut().zip(j) {
            *a = sample[i];
        }
        total += kernel.evaluate(&args);
    });
    if !total.is_finite() {
        return invalid("kernel produced a non-finite value on this sample");
    }
    Ok(total)
}

fn scale(n: usize, k: usize) -> f64 {
    (n as f64).sqrt() / binomial(n, k) as f64
}

/// `W_d = √n · C(n,d)⁻¹ · U_d`.
pub fn scaled_u_statistic(sample: &[f64], kernel: &Kernel) -> Result<f64> {
    Ok(scale(sample.len(), kernel.arity()) * u_statistic(sample, kernel)?)
}

/// Atom tuples of length `len` with their product probabilities.
fn weighted_tuples(dist: &FiniteDistribution, len: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let count = checked_pow(dist.len(), len).unwrap_or(u128::MAX);
    if count > MAX_PROJECTION_TERMS {
        return resource(format!("projection averages {count} atom tuples, above the {MAX_PROJECTION_TERMS} guard"));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; len];
    for flat in 0..count as usize {
        decode(flat, dist.len(), &mut digits);
        let values = digits.iter().map(|&i| dist.atoms[i]).collect();
        let weight = digits.iter().map(|&i| dist.probabilities[i]).product();
        out.push((values, weight));
    }
    Ok(out)
}

/// `ψ_k(x₁..x_k) = E ψ(x₁..x_k, X_{k+1}..X_d)` under `dist`, by exact finite sum.
pub fn sub_kernel(kernel: &Kernel, dist: &FiniteDistribution, k: usize) -> Result<Kernel> {
    let d = kernel.arity();
    if k == 0 || k > d {
        return invalid(format!("projection order must lie in 1..={d}, got {k}"));
    }
    if k == d {
        return Ok(kernel.clone());
    }
    let tail = weighted_tuples(dist, d - k)?;
    let base = kernel.clone();
    Kernel::new(format!("{}|{k}", kernel.name()), k, kernel.sup_bound(), move |x| {
        let mut args = Vec::with_capacity(d);
        let mut acc = 0.0;
        for (rest, w) in &tail {
            args.clear();
            args.extend_from_slice(x);
            args.extend_from_slice(rest);
            acc += w * base.evaluate(&args);
        }
        acc
    })
}

/// `Eψ(X₁..X_d)` under `dist`.
pub fn kernel_mean(kernel: &Kernel, dist: &FiniteDistribution) -> Result<f64> {
    Ok(weighted_tuples(dist, kernel.arity())?.iter().map(|(x, w)| w * kernel.evaluate(x)).sum())
}

/// True when `ψ₁` vanishes on every atom, i.e. the statistic is degenerate.
pub fn is_degenerate(kernel: &Kernel, dist: &FiniteDistribution) -> Result<bool> {
    let psi1 = sub_kernel(kernel, dist, 1)?;
    let max = dist.atoms().iter().map(|a| psi1.evaluate(&[*a]).abs()).fold(0.0, f64::max);
    Ok(max < DEGENERACY_TOLERANCE)
}

/// `(W₁, …, W_d)` for a sample, using exact projections under `dist`.
pub fn standardized_vector(sample: &[f64], kernel: &Kernel, dist: &FiniteDistribution) -> Result<Vec<f64>> {
    (1..=kernel.arity())
        .map(|k| {
            let psi_k = sub_kernel(kernel, dist, k)?;
            Ok(scale(sample.len(), k) * u_statistic(sample, &psi_k)?)
        })
        .collect()
}

/// `Λ = (1/n)·L` with `L` lower bidiagonal, diagonal `1..d` and
/// subdiagonal `−2..−d`.
pub fn lambda_matrix_u(d: usize, n: usize) -> Result<SquareMatrix> {
    if d == 0 || n < d {
        return invalid(format!("need 1 <= d <= n, got d={d}, n={n}"));
    }
    let inv_n = 1.0 / n as f64;
    let mut entries = vec![0.0; d * d];
    for k in 0..d {
        entries[k * d + k] = (k + 1) as f64 * inv_n;
        if k > 0 {
            entries[k * d + k - 1] = -((k + 1) as f64) * inv_n;
        }
    }
    SquareMatrix::new(d, entries)
}

/// `γ_d = (d(d+1)(2d+1)/6)^{1/2}`.
pub fn gamma_d(d: usize) -> Result<f64> {
    if d == 0 {
        return invalid("d must be at least 1");
    }
    let d = d as f64;
    Ok((d * (d + 1.0) * (2.0 * d + 1.0) / 6.0).sqrt())
}

/// `κ_d = (d!)² 3^{d−1} / (d(d+1)(2d+1))^{d−1}`.
pub fn kappa_d(d: usize) -> Result<f64> {
    if d == 0 {
        return invalid("d must be at least 1");
    }
    let df = d as f64;
    let ln_fact: f64 = (1..=d).map(|i| (i as f64).ln()).sum();
    let ln = 2.0 * ln_fact + (df - 1.0) * 3f64.ln() - (df - 1.0) * (df * (df + 1.0) * (2.0 * df + 1.0)).ln();
    Ok(ln.exp())
}

/// Pathwise bound `2bγ_d/√n` on `‖W − W′‖₂`.
pub fn ustat_coupling_bound(b: f64, d: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be positive");
    }
    Ok(2.0 * b * gamma_d(d)? / (n as f64).sqrt())
}

/// `exp(−t² κ_d^{1/2} / (8 b² γ_d²))`, valid for both tails of `W_d`.
pub fn ustat_tail_bound(t: f64, b: f64, d: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("threshold must be nonnegative, got {t}"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return invalid(format!("b must be positive, got {b}"));
    }
    let g = gamma_d(d)?;
    Ok((-(t * t) * kappa_d(d)?.sqrt() / (8.0 * b * b * g * g)).exp())
}

/// The `t` at which [`ustat_tail_bound`] reaches `exp(−12.5)`.
pub fn ustat_grid_scale(b: f64, d: usize) -> Result<f64> {
    let g = gamma_d(d)?;
    Ok(5.0 * (4.0 * b * b * g * g / kappa_d(d)?.sqrt()).sqrt())
}

/// Exact embedding `(W₁..W_d)` for samples drawn from a finite
/// distribution, with every projection `ψ_k` tabulated on the atoms.
///
/// Samples are vectors of atom indices.
#[derive(Debug, Clone)]
pub struct UStatModel {
    n: usize,
    d: usize,
    b: f64,
    dist: FiniteDistribution,
    /// `tables[k-1]` holds `ψ_k` on `atoms^k`, row-major.
    tables: Vec<Vec<f64>>,
    scales: Vec<f64>,
}

impl UStatModel {
    pub fn new(kernel: &Kernel, dist: &FiniteDistribution, n: usize) -> Result<Self> {
        let d = kernel.arity();
        if n < d {
            return invalid(format!("sample size {n} is smaller than the kernel arity {d}"));
        }
        subset_guard(n, d)?;
        let a = dist.len();
        let mut tables = Vec::with_capacity(d);
        for k in 1..=d {
            let psi_k = sub_kernel(kernel, dist, k)?;
            let size = checked_pow(a, k)
                .filter(|&s| s <= MAX_PROJECTION_TERMS)
                .ok_or_else(|| crate::Error::ResourceLimit(format!("projection table atoms^{k} too large")))?
                as usize;
            let mut digits = vec![0usize; k];
            let mut args = vec![0.0; k];
            let table: Vec<f64> = (0..size)
                .map(|flat| {
                    decode(flat, a, &mut digits);
                    for (x, &i) in args.iter_mut().zip(&digits) {
                        *x = dist.atoms[i];
                    }
                    psi_k.evaluate(&args)
                })
                .collect();
            if table.iter().any(|v| !v.is_finite()) {
                return invalid("kernel is not finite on the distribution's atoms");
            }
            tables.push(table);
        }
        let scales = (1..=d).map(|k| scale(n, k)).collect();
        Ok(Self { n, d, b: kernel.sup_bound(), dist: dist.clone(), tables, scales })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sup_bound(&self) -> f64 {
        self.b
    }

    pub fn distribution(&self) -> &FiniteDistribution {
        &self.dist
    }

    pub fn lambda(&self) -> Result<SquareMatrix> {
        lambda_matrix_u(self.d, self.n)
    }

    pub fn coupling_bound(&self) -> Result<f64> {
        ustat_coupling_bound(self.b, self.d, self.n)
    }

    fn psi(&self, k: usize, sample: &[usize], subset: &[usize]) -> f64 {
        let a = self.dist.len();
        let flat = subset.iter().fold(0, |acc, &j| acc * a + sample[j]);
        self.tables[k - 1][flat]
    }

    /// `(W₁..W_d)` for a sample of atom indices.
    pub fn w_vector(&self, sample: &[usize]) -> Vec<f64> {
        debug_assert_eq!(sample.len(), self.n);
        (1..=self.d)
            .map(|k| {
                let mut u = 0.0;
                for_each_subset(self.n, k, |j| u += self.psi(k, sample, j));
                self.scales[k - 1] * u
            })
            .collect()
    }

    /// `W` after setting coordinate `index` to atom `atom`, updated from `w`
    /// by re-summing only the subsets that contain `index`.
    pub fn w_replaced(&self, sample: &[usize], w: &[f64], index: usize, atom: usize) -> Vec<f64> {
        let mut replaced = sample.to_vec();
        replaced[index] = atom;
        if atom == sample[index] {
            return w.to_vec();
        }
        let others: Vec<usize> = (0..self.n).filter(|&j| j != index).collect();
        let mut subset = Vec::with_capacity(self.d);
        (1..=self.d)
            .map(|k| {
                let mut delta = 0.0;
                for_each_subset(self.n - 1, k - 1, |rest| {
                    subset.clear();
                    subset.extend(rest.iter().map(|&r| others[r]));
                    let pos = subset.partition_point(|&j| j < index);
                    subset.insert(pos, index);
                    delta += self.psi(k, &replaced, &subset) - self.psi(k, sample, &subset);
                });
                w[k - 1] + self.scales[k - 1] * delta
            })
            .collect()
    }

    pub fn sampler(&self, seed: u64) -> UStatPairSampler<'_> {
        UStatPairSampler { model: self, atom_dist: self.dist.sampler(), rng: stream(seed), sample: vec![0; self.n] }
    }
}

/// One draw of the coordinate-replacement pair.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatPairSample {
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    /// Replaced coordinate, 0-based.
    pub replaced_index: usize,
}

/// Seeded stream of [`UStatPairSample`]s: fresh i.i.d. sample, uniform
/// index, independent replacement.
pub struct UStatPairSampler<'a> {
    model: &'a UStatModel,
    atom_dist: WeightedIndex<f64>,
    rng: StreamRng,
    sample: Vec<usize>,
}

impl UStatPairSampler<'_> {
    pub fn current_sample(&self) -> &[usize] {
        &self.sample
    }
}

impl Iterator for UStatPairSampler<'_> {
    type Item = UStatPairSample;

    fn next(&mut self) -> Option<UStatPairSample> {
        use rand::Rng;
        for slot in self.sample.iter_mut() {
            *slot = self.atom_dist.sample(&mut self.rng);
        }
        let index = self.rng.random_range(0..self.model.n);
        let atom = self.atom_dist.sample(&mut self.rng);
        let w = self.model.w_vector(&self.sample);
        let w_prime = self.model.w_replaced(&self.sample, &w, index, atom);
        Some(UStatPairSample { w, w_prime, replaced_index: index })
    }
}
