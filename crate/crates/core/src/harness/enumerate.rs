use crate::error::{resource, Result};
use crate::perm::Permutations;
use crate::ustat::{binomial, for_each_subset};

use super::tail::{exact_tail, TailFragment};

/// Largest product space `atoms^n` that may be enumerated.
pub const MAX_PRODUCT_SPACE: u128 = 10_000_000;

fn product_size(atoms: usize, n: usize) -> u128 {
    (0..n).try_fold(1u128, |acc, _| acc.checked_mul(atoms as u128)).unwrap_or(u128::MAX)
}

/// Calls `f` on every index vector in `{0..atoms}ⁿ`, odometer order.
pub fn enumerate_product_space(atoms: usize, n: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
    let size = product_size(atoms, n);
    if size > MAX_PRODUCT_SPACE {
        return resource(format!("product space {atoms}^{n} = {size} exceeds the {MAX_PRODUCT_SPACE} guard"));
    }
    if atoms == 0 {
        return Ok(());
    }
    let mut idx = vec![0usize; n];
    loop {
        f(&idx);
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < atoms {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exact tail of `stat(π)` under a uniform `π ∈ S_n`.
pub fn exact_permutation_tail(
    n: usize,
    thresholds: &[f64],
    mut stat: impl FnMut(&[usize]) -> f64,
) -> Result<TailFragment> {
    let mut values = Vec::new();
    Permutations::for_each(n, |pi| values.push(stat(pi)))?;
    exact_tail(&values, thresholds)
}

/// Exact null distribution of `V_MWW` as `(value, probability)` pairs, from
/// all `C(n₁+n₂, n₁)` placements of the `x` labels among the ranks.
pub fn mww_exact_distribution(n1: usize, n2: usize) -> Result<Vec<(f64, f64)>> {
    let n = n1 + n2;
    let placements = binomial(n, n1);
    if placements > MAX_PRODUCT_SPACE {
        return resource(format!("{placements} label placements exceed the {MAX_PRODUCT_SPACE} guard"));
    }
    let mut counts = vec![0u64; n1 * n2 + 1];
    for_each_subset(n, n1, |x_ranks| {
        // y ranks above each x rank: (n − 1 − r) minus the x ranks above r.
        let v: usize = x_ranks.iter().enumerate().map(|(pos, &r)| (n - 1 - r) - (n1 - 1 - pos)).sum();
        counts[v] += 1;
    });
    let total = placements as f64;
    Ok(counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(v, &c)| (v as f64, c as f64 / total)).collect())
}
