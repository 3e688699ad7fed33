//! Permutations of `0..n` stored as image vectors (`pi[i]` is the image of
//! `i`), lexicographic enumeration and uniform sampling.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, resource, Result};

/// Largest `n` for which [`Permutations`] may enumerate all of `S_n`.
pub const MAX_ENUMERATION_N: usize = 10;

pub fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn validate(pi: &[usize]) -> Result<()> {
    let n = pi.len();
    let mut seen = vec![false; n];
    for &v in pi {
        if v >= n || seen[v] {
            return invalid(format!("not a permutation of 0..{n}: {pi:?}"));
        }
        seen[v] = true;
    }
    Ok(())
}

pub fn inverse(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (i, &v) in pi.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

/// Uniform permutation by Fisher-Yates, written into `buf`.
pub fn shuffle_into<R: Rng + ?Sized>(buf: &mut Vec<usize>, n: usize, rng: &mut R) {
    buf.clear();
    buf.extend(0..n);
    buf.shuffle(rng);
}

pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut pi = Vec::with_capacity(n);
    shuffle_into(&mut pi, n, rng);
    pi
}

/// Advances `p` to its lexicographic successor; returns `false` (leaving `p`
/// as the last permutation) when there is none.
pub fn next_lexicographic(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Lending-style iterator over all of `S_n` in lexicographic order.
///
/// ```
/// use concentra::perm::Permutations;
/// let mut perms = Permutations::new(3).unwrap();
/// let mut count = 0;
/// while let Some(p) = perms.next_perm() {
///     assert_eq!(p.len(), 3);
///     count += 1;
/// }
/// assert_eq!(count, 6);
/// ```
pub struct Permutations {
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl Permutations {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_ENUMERATION_N {
            return resource(format!("enumerating S_{n} exceeds the n <= {MAX_ENUMERATION_N} guard"));
        }
        Ok(Self { current: identity(n), started: false, done: false })
    }

    pub fn next_perm(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !next_lexicographic(&mut self.current) {
            self.done = true;
            return None;
        }
        Some(&self.current)
    }

    /// Calls `f` on every permutation.
    pub fn for_each(n: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
        let mut it = Self::new(n)?;
        while let Some(p) = it.next_perm() {
            f(p);
        }
        Ok(())
    }
}
