//! Doubly indexed permutation statistics `V₁ = Σ_{s≠t} a(s, t, π(s), π(t))`
//! under a uniform permutation, the random-transposition exchangeable pair
//! and its concentration bound, with the Mann-Whitney-Wilcoxon and graph
//! intersection specializations.
//!
//! Indices are 0-based throughout. Sums run over ordered pairs `s ≠ t`.

use std::collections::HashSet;

use rand::Rng;

use crate::bounds::SquareMatrix;
use crate::error::{invalid, resource, Result};
use crate::perm;
use crate::rng::{stream, StreamRng};

/// Largest `n` accepted for a dense `n⁴` array.
pub const MAX_DENSE_N: usize = 40;

/// Symmetric `n×n` matrix with zero diagonal, stored by row as sorted
/// `(column, value)` lists, so graphs on up to `10⁵` vertices stay cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    rows: Vec<Vec<(usize, f64)>>,
    row_sums: Vec<f64>,
    nnz: usize,
}

impl SparseSymmetric {
    /// Builds from unordered off-diagonal entries; each `(u, v, w)` sets both
    /// `(u, v)` and `(v, u)`.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for &(u, v, w) in entries {
            if u >= n || v >= n {
                return invalid(format!("entry ({u}, {v}) out of range for n = {n}"));
            }
            if u == v {
                return invalid(format!("diagonal entry ({u}, {u}) is not allowed"));
            }
            if !w.is_finite() {
                return invalid("matrix entries must be finite");
            }
            rows[u].push((v, w));
            rows[v].push((u, w));
        }
        let mut nnz = 0;
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return invalid("duplicate off-diagonal entry");
            }
            nnz += row.len();
        }
        let row_sums = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        Ok(Self { rows, row_sums, nnz })
    }

    /// Builds from a dense row-major matrix, checking symmetry and a zero
    /// diagonal.
    pub fn from_dense(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return invalid(format!("expected {} matrix entries, found {}", n * n, values.len()));
        }
        let mut entries = Vec::new();
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return invalid(format!("diagonal entry ({i}, {i}) must be zero"));
            }
            for j in i + 1..n {
                let (x, y) = (values[i * n + j], values[j * n + i]);
                if x != y {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
                if x != 0.0 {
                    entries.push((i, j, x));
                }
            }
        }
        Self::from_entries(n, &entries)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(p) => row[p].1,
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row_sums[i]
    }

    /// Number of stored ordered entries (twice the number of unordered ones).
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|e| e.1.abs()).fold(0.0, f64::max)
    }
}

/// Which remainder to subtract from `V₁` when checking the linearity
/// condition `E(V′|π) = (I − Λ)V + (R₁, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemainderForm {
    /// `R₁ = −2V₁/(n(n−1))`.
    Printed,
    /// `R₁ = +2V₁/(n(n−1))`, the value produced by exact enumeration of
    /// the transposition pair.
    Derived,
}

impl RemainderForm {
    pub fn r1(self, v1: f64, n: usize) -> Result<f64> {
        match self {
            RemainderForm::Printed => remainder_r1(v1, n),
            RemainderForm::Derived => derived_remainder_r1(v1, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense {
        values: Vec<f64>,
        a2: Vec<f64>,
    },
    /// `a(i,j,k,l) = c(i,j)·d(k,l) − offset` for `i≠j`, `k≠l`.
    Product {
        c: SparseSymmetric,
        d: SparseSymmetric,
        offset: f64,
    },
    Mww {
        n1: usize,
    },
}

/// Four-index coefficient array with a declared sup bound `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DipsArray {
    n: usize,
    b: f64,
    repr: Repr,
}

fn dense_index(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

impl DipsArray {
    /// Dense row-major array `a[((i·n + j)·n + k)·n + l]`. Rejects arrays that
    /// break the vanishing-diagonal, symmetry, zero-sum or sup-bound
    /// constraints.
    pub fn dense(n: usize, b: f64, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return invalid("dense array needs n >= 2");
        }
        if n > MAX_DENSE_N {
            return resource(format!("dense arrays are limited to n <= {MAX_DENSE_N}, got {n}"));
        }
        if values.len() != n.pow(4) {
            return invalid(format!("expected n^4 = {} entries, found {}", n.pow(4), values.len()));
        }
        if !(b > 0.0 && b.is_finite()) {
            return invalid(format!("sup bound must be positive, got {b}"));
        }
        let slack = 1e-12 * b;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = values[dense_index(n, i, j, k, l)];
                        if !v.is_finite() {
                            return invalid("array entries must be finite");
                        }
                        if (i == j || k == l) && v != 0.0 {
                            return invalid(format!("a({i},{j},{k},{l}) must vanish"));
                        }
                        if v.abs() > b + slack {
                            return invalid(format!("|a({i},{j},{k},{l})| = {} exceeds b = {b}", v.abs()));
                        }
                        if values[dense_index(n, i, j, l, k)] != v || values[dense_index(n, j, i, l, k)] != v {
                            return invalid(format!("array is not symmetric at ({i},{j},{k},{l})"));
                        }
                        sum += v;
                    }
                }
            }
        }
        let tol = 1e-9 * (n * n) as f64 * b;
        if sum.abs() > tol {
            return invalid(format!("array entries sum to {sum}, not 0 (use `center`)"));
        }
        let inv_n = 1.0 / n as f64;
        let mut a2 = vec![0.0; n * n];
        for s in 0..n {
            for t in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += values[dense_index(n, s, i, t, j)];
                    }
                }
                a2[s * n + t] = acc * inv_n;
            }
        }
        Ok(Self { n, b, repr: Repr::Dense { values, a2 } })
    }

    /// Subtracts the mean over the cells `i≠j`, `k≠l` from those cells and
    /// raises `b` by the absolute mean. Vanishing-diagonal and symmetry
    /// violations are still rejected.
    pub fn center(n: usize, b: f64, mut values: Vec<f64>) -> Result<Self> {
        if n < 2 || values.len() != n.pow(4) {
            return invalid("center needs n >= 2 and n^4 entries");
        }
        let cells = (n * (n - 1)) as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if i != j && k != l {
                            sum += values[dense_index(n, i, j, k, l)];
                        }
                    }
                }
            }
        }
        let mean = sum / (cells * cells);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if i != j && k != l {
                            values[dense_index(n, i, j, k, l)] -= mean;
                        }
                    }
                }
            }
        }
        Self::dense(n, b + mean.abs(), values)
    }

    /// Random array with `a(i,j,k,l)` depending only on `{i,j}` and `{k,l}`,
    /// centered and rescaled so that `sup |a| = b`.
    pub fn random_symmetric<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Result<Self> {
        if !(2..=MAX_DENSE_N).contains(&n) {
            return invalid(format!("random dense arrays need 2 <= n <= {MAX_DENSE_N}"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return invalid(format!("sup bound must be positive, got {b}"));
        }
        let pairs = n * (n - 1) / 2;
        let cell: Vec<f64> = (0..pairs * pairs).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let pair_id = |i: usize, j: usize| {
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            lo * n - lo * (lo + 1) / 2 + (hi - lo - 1)
        };
        let mean = cell.iter().sum::<f64>() / cell.len() as f64;
        let max = cell.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let scale = if max > 0.0 { b / max } else { 0.0 };
        let mut values = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if i != j && k != l {
                            let v = cell[pair_id(i, j) * pairs + pair_id(k, l)];
                            values[dense_index(n, i, j, k, l)] = (v - mean) * scale;
                        }
                    }
                }
            }
        }
        Self::dense(n, b, values)
    }

    /// `a(i,j,k,l) = c(i,j)·d(k,l) − offset` off the diagonals, with
    /// `b = max|c|·max|d| + |offset|` unless overridden.
    pub fn product(c: SparseSymmetric, d: SparseSymmetric, offset: f64) -> Result<Self> {
        let n = c.n();
        if n < 2 || d.n() != n {
            return invalid("product array needs two n x n factors with n >= 2");
        }
        if !offset.is_finite() {
            return invalid("offset must be finite");
        }
        let b = (c.max_abs() * d.max_abs() + offset.abs()).max(f64::MIN_POSITIVE);
        Ok(Self { n, b, repr: Repr::Product { c, d, offset } })
    }

    /// The Mann-Whitney-Wilcoxon array: `±1/2` when `i < n₁ ≤ j` according
    /// to whether `k < l` or `l < k`, zero otherwise; `b = 1/2`.
    pub fn mww(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return invalid("both MWW samples must be nonempty");
        }
        Ok(Self { n: n1 + n2, b: 0.5, repr: Repr::Mww { n1 } })
    }

    /// Replaces the declared sup bound, e.g. with a sharper one.
    pub fn with_sup_bound(mut self, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return invalid(format!("sup bound must be positive, got {b}"));
        }
        self.b = b;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sup_bound(&self) -> f64 {
        self.b
    }

    pub fn kind(&self) -> &'static str {
        match self.repr {
            Repr::Dense { .. } => "dense",
            Repr::Product { .. } => "product",
            Repr::Mww { .. } => "mww",
        }
    }

    /// `a(i, j, k, l)`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        match &self.repr {
            Repr::Dense { values, .. } => values[dense_index(n, i, j, k, l)],
            Repr::Product { c, d, offset } => {
                if i == j || k == l {
                    0.0
                } else {
                    c.get(i, j) * d.get(k, l) - offset
                }
            }
            Repr::Mww { n1 } => {
                if i < *n1 && j >= *n1 {
                    match k.cmp(&l) {
                        std::cmp::Ordering::Less => 0.5,
                        std::cmp::Ordering::Greater => -0.5,
                        std::cmp::Ordering::Equal => 0.0,
                    }
                } else {
                    0.0
                }
            }
        }
    }

    /// `a⁽²⁾(s, t) = (1/n) Σ_{i,j} a(s, i, t, j)`.
    pub fn a2(&self, s: usize, t: usize) -> f64 {
        let n = self.n;
        let nf = n as f64;
        match &self.repr {
            Repr::Dense { a2, .. } => a2[s * n + t],
            Repr::Product { c, d, offset } => (c.row_sum(s) * d.row_sum(t) - offset * (nf - 1.0) * (nf - 1.0)) / nf,
            Repr::Mww { n1 } => {
                if s < *n1 {
                    (n - n1) as f64 * (nf - 1.0 - 2.0 * t as f64) / (2.0 * nf)
                } else {
                    0.0
                }
            }
        }
    }

    /// Row-major `n×n` matrix of [`DipsArray::a2`].
    pub fn a2_matrix(&self) -> Vec<f64> {
        let n = self.n;
        (0..n * n).map(|x| self.a2(x / n, x % n)).collect()
    }

    /// `V₁` for a validated permutation.
    pub fn v1_statistic(&self, pi: &[usize]) -> Result<f64> {
        self.check_perm(pi)?;
        Ok(self.v1_unchecked(pi))
    }

    fn check_perm(&self, pi: &[usize]) -> Result<()> {
        if pi.len() != self.n {
            return invalid(format!("permutation has length {}, array has n = {}", pi.len(), self.n));
        }
        perm::validate(pi)
    }

    pub(crate) fn v1_unchecked(&self, pi: &[usize]) -> f64 {
        let n = self.n;
        match &self.repr {
            Repr::Dense { values, .. } => {
                let mut acc = 0.0;
                for s in 0..n {
                    for t in 0..n {
                        if s != t {
                            acc += values[dense_index(n, s, t, pi[s], pi[t])];
                        }
                    }
                }
                acc
            }
            Repr::Product { c, d, offset } => {
                let mut acc = 0.0;
                for s in 0..n {
                    for &(t, w) in c.row(s) {
                        acc += w * d.get(pi[s], pi[t]);
                    }
                }
                acc - offset * (n * (n - 1)) as f64
            }
            Repr::Mww { n1 } => {
                let x: Vec<usize> = pi[..*n1].to_vec();
                let y: Vec<usize> = pi[*n1..].to_vec();
                let below = count_less_pairs(&x, &y);
                below as f64 - (x.len() * y.len()) as f64 / 2.0
            }
        }
    }

    /// `V₂ = Σ_s a⁽²⁾(s, π(s))`.
    pub fn v2_statistic(&self, pi: &[usize]) -> f64 {
        pi.iter().enumerate().map(|(s, &p)| self.a2(s, p)).sum()
    }

    /// `(V₁, V₂, V₃)` with `V₃ = V₂`.
    pub fn v_vector(&self, pi: &[usize]) -> [f64; 3] {
        let v2 = self.v2_statistic(pi);
        [self.v1_unchecked(pi), v2, v2]
    }

    /// `V₁(π∘τ_{i,j}) − V₁(π)` from the `O(n)` ordered pairs that touch `i`
    /// or `j`.
    pub fn v1_swap_delta(&self, pi: &[usize], i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let image = |s: usize| {
            if s == i {
                pi[j]
            } else if s == j {
                pi[i]
            } else {
                pi[s]
            }
        };
        let mut delta = 0.0;
        for s in [i, j] {
            for t in 0..self.n {
                if t == s {
                    continue;
                }
                delta += self.get(s, t, image(s), image(t)) - self.get(s, t, pi[s], pi[t]);
                if t != i && t != j {
                    delta += self.get(t, s, image(t), image(s)) - self.get(t, s, pi[t], pi[s]);
                }
            }
        }
        delta
    }

    /// `V₂(π∘τ_{i,j}) − V₂(π)`.
    pub fn v2_swap_delta(&self, pi: &[usize], i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        -self.a2(i, pi[i]) - self.a2(j, pi[j]) + self.a2(i, pi[j]) + self.a2(j, pi[i])
    }

    /// `V` after the transposition, updated incrementally from `v`.
    pub fn swapped_v(&self, pi: &[usize], v: &[f64; 3], i: usize, j: usize) -> [f64; 3] {
        let d1 = self.v1_swap_delta(pi, i, j);
        let d2 = self.v2_swap_delta(pi, i, j);
        [v[0] + d1, v[1] + d2, v[2] + d2]
    }

    pub fn sampler(&self, seed: u64) -> Result<DipsPairSampler<'_>> {
        DipsPairSampler::new(self, seed)
    }
}

/// `#{(a, b) ∈ x × y : a < b}` for distinct values, by merging sorted copies.
fn count_less_pairs<T: Ord + Copy>(x: &[T], y: &[T]) -> u64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_unstable();
    ys.sort_unstable();
    let mut count = 0u64;
    let mut p = 0;
    for yv in ys {
        while p < xs.len() && xs[p] < yv {
            p += 1;
        }
        count += p as u64;
    }
    count
}

/// One draw of the transposition pair, in the unscaled `V` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DipsPairSample {
    pub v: [f64; 3],
    pub v_prime: [f64; 3],
    /// Transposed positions `(I, J)`, 0-based and distinct.
    pub swap: (usize, usize),
}

impl DipsPairSample {
    /// `W = n^{−3/2} V`.
    pub fn w(&self, n: usize) -> [f64; 3] {
        scale_v(&self.v, n)
    }

    pub fn w_prime(&self, n: usize) -> [f64; 3] {
        scale_v(&self.v_prime, n)
    }
}

fn scale_v(v: &[f64; 3], n: usize) -> [f64; 3] {
    let s = (n as f64).powf(-1.5);
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Seeded stream of transposition pairs: fresh uniform `π`, uniform ordered
/// distinct `(I, J)`.
pub struct DipsPairSampler<'a> {
    array: &'a DipsArray,
    rng: StreamRng,
    pi: Vec<usize>,
}

impl<'a> DipsPairSampler<'a> {
    pub fn new(array: &'a DipsArray, seed: u64) -> Result<Self> {
        if array.n() < 2 {
            return invalid("transposition coupling needs n >= 2");
        }
        Ok(Self { array, rng: stream(seed), pi: Vec::with_capacity(array.n()) })
    }

    pub fn current_permutation(&self) -> &[usize] {
        &self.pi
    }
}

impl Iterator for DipsPairSampler<'_> {
    type Item = DipsPairSample;

    fn next(&mut self) -> Option<DipsPairSample> {
        let n = self.array.n();
        perm::shuffle_into(&mut self.pi, n, &mut self.rng);
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let v = self.array.v_vector(&self.pi);
        let v_prime = self.array.swapped_v(&self.pi, &v, i, j);
        Some(DipsPairSample { v, v_prime, swap: (i, j) })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return invalid(format!("need n >= 2, got {n}"));
    }
    Ok(())
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return invalid(format!("b must be positive, got {b}"));
    }
    Ok(())
}

/// `Λ = 2/(n−1) · [[(2n−1)/n, −1, −1], [0, 1, 0], [0, 0, 1]]`.
pub fn lambda_dips(n: usize) -> Result<SquareMatrix> {
    check_n(n)?;
    let nf = n as f64;
    let c = 2.0 / (nf - 1.0);
    SquareMatrix::new(3, vec![c * (2.0 * nf - 1.0) / nf, -c, -c, 0.0, c, 0.0, 0.0, 0.0, c])
}

/// `R₁ = −2V₁/(n(n−1))`.
pub fn remainder_r1(v1: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(-2.0 * v1 / (n * (n - 1)) as f64)
}

/// `R₁ = +2V₁/(n(n−1))`; see [`RemainderForm::Derived`].
pub fn derived_remainder_r1(v1: f64, n: usize) -> Result<f64> {
    Ok(-remainder_r1(v1, n)?)
}

fn poly(n: usize) -> f64 {
    let nf = n as f64;
    6.0 + 4.0 / nf + 1.0 / (nf * nf)
}

/// `η_{b,n} = 4b n^{−1/2} (6 + 4/n + 1/n²)^{1/2}`, the pathwise bound on `‖W − W′‖₂`.
pub fn eta_bn(b: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    check_b(b)?;
    Ok(4.0 * b * poly(n).sqrt() / (n as f64).sqrt())
}

/// `φ_{b,n} = 8(2n−1) b² (6 + 4/n + 1/n²)/n`.
pub fn phi_bn(b: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    check_b(b)?;
    let nf = n as f64;
    Ok(8.0 * (2.0 * nf - 1.0) * b * b * poly(n) / nf)
}

/// `exp(−t²/(2φ_{b,n}))`, valid for both tails of `W₁ = n^{−3/2} V₁`.
pub fn dips_tail_bound(t: f64, b: f64, n: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("threshold must be nonnegative, got {t}"));
    }
    Ok((-(t * t) / (2.0 * phi_bn(b, n)?)).exp())
}

/// The `t` at which [`dips_tail_bound`] reaches `exp(−12.5)`.
pub fn dips_grid_scale(b: f64, n: usize) -> Result<f64> {
    Ok(5.0 * phi_bn(b, n)?.sqrt())
}

fn check_distinct(values: &[f64]) -> Result<Vec<usize>> {
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("observations must be finite");
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if let Some(w) = order.windows(2).find(|w| values[w[0]] == values[w[1]]) {
        return invalid(format!("tied observations ({}) are not supported", values[w[0]]));
    }
    Ok(order)
}

/// `V_MWW = #{(i, j) : x_i < y_j}`, rejecting ties.
pub fn mww_statistic(x: &[f64], y: &[f64]) -> Result<u64> {
    let ranks = mww_rank_permutation(x, y)?;
    Ok(count_less_pairs(&ranks[..x.len()], &ranks[x.len()..]))
}

/// `π(i)` = 0-based rank of `z_i` in the pooled sample `z = (x, y)`.
pub fn mww_rank_permutation(x: &[f64], y: &[f64]) -> Result<Vec<usize>> {
    if x.is_empty() || y.is_empty() {
        return invalid("both MWW samples must be nonempty");
    }
    let z: Vec<f64> = x.iter().chain(y).copied().collect();
    let order = check_distinct(&z)?;
    let mut ranks = vec![0; z.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r;
    }
    Ok(ranks)
}

pub fn mww_array(n1: usize, n2: usize) -> Result<DipsArray> {
    DipsArray::mww(n1, n2)
}

/// `exp(−t²n/(4(2n−1)(6 + 4/n + 1/n²)))`, the `b = 1/2` case of [`dips_tail_bound`].
pub fn mww_tail_bound(t: f64, n: usize) -> Result<f64> {
    dips_tail_bound(t, 0.5, n)
}

/// Undirected simple graph on `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    /// Rejects self-loops, repeated edges and out-of-range vertices.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return invalid(format!("edge ({u}, {v}) references a vertex outside 0..{n}"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return invalid(format!("edge ({}, {}) listed twice", e.0, e.1));
            }
            edges.push(e);
        }
        edges.sort_unstable();
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Uniform random graph with `m` edges.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let max = n * n.saturating_sub(1) / 2;
        if m > max {
            return invalid(format!("a simple graph on {n} vertices has at most {max} edges"));
        }
        let mut all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        rand::seq::SliceRandom::shuffle(all.as_mut_slice(), rng);
        all.truncate(m);
        Self::new(n, &all)
    }

    pub fn adjacency(&self) -> SparseSymmetric {
        let entries: Vec<_> = self.edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        SparseSymmetric::from_entries(self.n, &entries).expect("validated edges")
    }
}

fn check_graphs(e1: &EdgeSet, e2: &EdgeSet) -> Result<usize> {
    if e1.n() != e2.n() {
        return invalid(format!("graphs have {} and {} vertices", e1.n(), e2.n()));
    }
    check_n(e1.n())?;
    Ok(e1.n())
}

/// `V₁ = Σ_{s≠t} 1((s,t) ∈ E₁) 1((π(s),π(t)) ∈ E₂)`: twice the number of
/// `E₁` edges whose image lies in `E₂`.
pub fn graph_overlap_statistic(e1: &EdgeSet, e2: &EdgeSet, pi: &[usize]) -> Result<u64> {
    let n = check_graphs(e1, e2)?;
    if pi.len() != n {
        return invalid(format!("permutation has length {}, graphs have n = {n}", pi.len()));
    }
    perm::validate(pi)?;
    let target: HashSet<(usize, usize)> = e2.edges().iter().copied().collect();
    let hits = e1
        .edges()
        .iter()
        .filter(|&&(u, v)| {
            let (a, b) = (pi[u], pi[v]);
            target.contains(&(a.min(b), a.max(b)))
        })
        .count();
    Ok(2 * hits as u64)
}

/// `μ = E V₁ = 4|E₁||E₂|/(n(n−1))`.
pub fn graph_mean(e1: &EdgeSet, e2: &EdgeSet) -> Result<f64> {
    let n = check_graphs(e1, e2)? as f64;
    Ok(4.0 * e1.len() as f64 * e2.len() as f64 / (n * (n - 1.0)))
}

/// `W₁ = n^{−3/2}(V₁ − μ)`.
pub fn graph_centered_w1(e1: &EdgeSet, e2: &EdgeSet, pi: &[usize]) -> Result<f64> {
    let v1 = graph_overlap_statistic(e1, e2, pi)? as f64;
    let n = e1.n() as f64;
    Ok((v1 - graph_mean(e1, e2)?) * n.powf(-1.5))
}

/// Centered product array `â = c·d − 4|E₁||E₂|/(n²(n−1)²)` with `b = 2`.
pub fn graph_array(e1: &EdgeSet, e2: &EdgeSet) -> Result<DipsArray> {
    let n = check_graphs(e1, e2)? as f64;
    let offset = 4.0 * e1.len() as f64 * e2.len() as f64 / (n * n * (n - 1.0) * (n - 1.0));
    DipsArray::product(e1.adjacency(), e2.adjacency(), offset)?.with_sup_bound(2.0)
}

/// `exp(−nt²/(64(2n−1)(6 + 4/n + 1/n²)))`, the `b = 2` case of [`dips_tail_bound`].
pub fn graph_tail_bound(t: f64, n: usize) -> Result<f64> {
    dips_tail_bound(t, 2.0, n)
}
