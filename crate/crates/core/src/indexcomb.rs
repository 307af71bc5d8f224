//! Exact combinatorics over the set of increasing `ℓ`-tuples of `[0, n)`.
//!
//! Subsets are ordered lexicographically. Ranking goes through the
//! combinatorial number system on the reflected indices `n − 1 − a_i`, which
//! turns lexicographic order into reverse colexicographic order.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Exact binomial coefficient with overflow detection.
pub fn binom(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Err(Error::Range(format!("binom({n}, {k}) requires k <= n")));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step; reduce by gcd
        // first so the intermediate product overflows only when the result does.
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        let (a, d) = (acc / g, den / g);
        let num = num / d;
        acc = a
            .checked_mul(num)
            .ok_or_else(|| Error::Overflow(format!("binom({n}, {k})")))?;
    }
    Ok(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A strictly increasing tuple of observation indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "multi-index {indices:?} is not strictly increasing"
            )));
        }
        Ok(Self(indices))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The set of `C(n, ℓ)` increasing `ℓ`-tuples drawn from `[0, n)`.
///
/// Holds a table of `C(b, j)` for `b < n`, `j ≤ ℓ` (saturating at `u128::MAX`)
/// for `O(ℓ log n)` unranking.
#[derive(Debug, Clone)]
pub struct IndexSpace {
    n: usize,
    ell: usize,
    total: u128,
    // row-major: table[j * n + b] = C(b, j)
    table: Arc<[u128]>,
}

impl PartialEq for IndexSpace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.ell == other.ell
    }
}

impl IndexSpace {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Validation("arity must be >= 1".into()));
        }
        if n < ell {
            return Err(Error::InsufficientData { needed: ell, got: n });
        }
        let total = binom(n as u64, ell as u64)?;
        let mut table = vec![0u128; (ell + 1) * n];
        table[..n].fill(1);
        for j in 1..=ell {
            for b in 0..n {
                // C(b, j) = C(b-1, j) + C(b-1, j-1)
                table[j * n + b] = if b == 0 {
                    0
                } else {
                    table[j * n + b - 1].saturating_add(table[(j - 1) * n + b - 1])
                };
            }
        }
        Ok(Self {
            n,
            ell,
            total,
            table: table.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `C(n, ℓ)`.
    pub fn total(&self) -> u128 {
        self.total
    }

    #[inline]
    fn choose(&self, b: usize, j: usize) -> u128 {
        self.table[j * self.n + b]
    }

    /// The `rank`-th subset in lexicographic order.
    pub fn unrank(&self, rank: u128) -> Result<MultiIndex> {
        if rank >= self.total {
            return Err(Error::Range(format!(
                "rank {rank} outside [0, {})",
                self.total
            )));
        }
        let mut out = vec![0usize; self.ell];
        self.unrank_into(rank, &mut out);
        Ok(MultiIndex(out))
    }

    /// Unchecked unranking into a caller buffer of length `ℓ`.
    #[inline]
    pub(crate) fn unrank_into(&self, rank: u128, out: &mut [usize]) {
        let mut r = self.total - 1 - rank;
        let mut hi = self.n; // exclusive upper bound on the reflected index
        for (i, slot) in out.iter_mut().enumerate() {
            let j = self.ell - i;
            // largest b < hi with C(b, j) <= r; C(·, j) is nondecreasing in b
            let col = &self.table[j * self.n..j * self.n + hi];
            let b = col.partition_point(|&v| v <= r) - 1;
            r -= col[b];
            *slot = self.n - 1 - b;
            hi = b;
        }
    }

    pub fn rank(&self, idx: &MultiIndex) -> Result<u128> {
        self.validate(idx)?;
        let mut acc: u128 = 0;
        for (i, &a) in idx.0.iter().enumerate() {
            acc += self.choose(self.n - 1 - a, self.ell - i);
        }
        Ok(self.total - 1 - acc)
    }

    pub fn validate(&self, idx: &MultiIndex) -> Result<()> {
        if idx.len() != self.ell {
            return Err(Error::Validation(format!(
                "multi-index has length {}, expected {}",
                idx.len(),
                self.ell
            )));
        }
        if let Some(&last) = idx.0.last() {
            if last >= self.n {
                return Err(Error::Validation(format!(
                    "index {last} outside [0, {})",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Lexicographic iterator over all subsets starting at `rank`.
    pub fn iter_from(&self, rank: u128) -> Result<Combinations> {
        let first = self.unrank(rank)?;
        Ok(Combinations {
            n: self.n,
            current: Some(first.0),
        })
    }

    pub fn iter(&self) -> Combinations {
        Combinations {
            n: self.n,
            current: Some((0..self.ell).collect()),
        }
    }
}

/// Lexicographic successor iteration over increasing tuples.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    /// The tuple the iterator currently points at, without allocating.
    pub fn current(&self) -> Option<&[usize]> {
        self.current.as_deref()
    }

    /// Moves to the lexicographic successor; returns false when exhausted.
    pub fn advance(&mut self) -> bool {
        let Some(cur) = self.current.as_mut() else {
            return false;
        };
        let k = cur.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < self.n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                return true;
            }
        }
        self.current = None;
        false
    }
}

impl Iterator for Combinations {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let out = self.current.clone()?;
        self.advance();
        Some(MultiIndex(out))
    }
}

/// `|a ∩ b|` for two multi-indices of the same space.
pub fn overlap_count(space: &IndexSpace, a: &MultiIndex, b: &MultiIndex) -> Result<usize> {
    space.validate(a)?;
    space.validate(b)?;
    // both sorted: merge-walk
    let (mut i, mut j, mut common) = (0, 0, 0);
    let (a, b) = (a.as_slice(), b.as_slice());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(common)
}

/// `m = C(n,ℓ)(C(n,ℓ) − 1) − C(n,ℓ)·C(n−ℓ,ℓ)`: ordered pairs of distinct
/// subsets sharing at least one index.
pub fn shared_pair_count(space: &IndexSpace) -> Result<u128> {
    let c = space.total();
    let disjoint_partners = if space.n() >= 2 * space.ell() {
        binom((space.n() - space.ell()) as u64, space.ell() as u64)?
    } else {
        0
    };
    let overflow = || Error::Overflow(format!("shared pair count for n={}", space.n()));
    let all = c.checked_mul(c - 1).ok_or_else(overflow)?;
    let disjoint = c.checked_mul(disjoint_partners).ok_or_else(overflow)?;
    Ok(all - disjoint)
}
