//! The three term-selection schemes for incomplete U-statistics and the exact
//! moments of their selection counts `α(I)`.
//!
//! All schemes work on subset ranks so the index space is never materialized:
//! Floyd's algorithm for sampling without replacement, aggregated uniform
//! draws for sampling with replacement, and geometric gap skipping for
//! Bernoulli sampling.
//!
//! With-replacement counts are the cells of a multinomial vector with `N`
//! trials and equal cell probabilities `1/C(n,ℓ)`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::indexcomb::IndexSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    WithoutReplacement,
    WithReplacement,
    Bernoulli,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::WithoutReplacement,
        SchemeKind::WithReplacement,
        SchemeKind::Bernoulli,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SchemeKind::WithoutReplacement => "swor",
            SchemeKind::WithReplacement => "swr",
            SchemeKind::Bernoulli => "bern",
        }
    }

    /// Whether the budget must be an integer.
    pub fn integer_budget(self) -> bool {
        !matches!(self, SchemeKind::Bernoulli)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swor" => Ok(SchemeKind::WithoutReplacement),
            "swr" => Ok(SchemeKind::WithReplacement),
            "bern" => Ok(SchemeKind::Bernoulli),
            other => Err(Error::Config(format!(
                "unknown sampling scheme `{other}` (expected swor, swr or bern)"
            ))),
        }
    }
}

/// A scheme together with its nominal budget `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingScheme {
    pub kind: SchemeKind,
    pub budget: f64,
}

impl SamplingScheme {
    pub fn new(kind: SchemeKind, budget: f64) -> Self {
        Self { kind, budget }
    }

    pub fn without_replacement(budget: u128) -> Self {
        Self::new(SchemeKind::WithoutReplacement, budget as f64)
    }

    pub fn with_replacement(budget: u128) -> Self {
        Self::new(SchemeKind::WithReplacement, budget as f64)
    }

    pub fn bernoulli(budget: f64) -> Self {
        Self::new(SchemeKind::Bernoulli, budget)
    }

    /// Checks the budget against the space: `1 ≤ N ≤ C` integer (SWOR),
    /// `N ≥ 1` integer (SWR), `0 < N ≤ C` real (Bernoulli).
    pub fn validate(&self, space: &IndexSpace) -> Result<()> {
        let n = self.budget;
        let c = space.total() as f64;
        if !n.is_finite() {
            return Err(Error::Validation(format!("budget {n} is not finite")));
        }
        if self.kind.integer_budget() && n.fract() != 0.0 {
            return Err(Error::Validation(format!(
                "{} requires an integer budget, got {n}",
                self.kind
            )));
        }
        let ok = match self.kind {
            SchemeKind::WithoutReplacement => n >= 1.0 && n <= c,
            SchemeKind::WithReplacement => n >= 1.0,
            SchemeKind::Bernoulli => n > 0.0 && n <= c,
        };
        if !ok {
            return Err(Error::Validation(format!(
                "budget {n} invalid for {} with C(n,l) = {}",
                self.kind,
                space.total()
            )));
        }
        Ok(())
    }
}

/// `p = N / C(n,ℓ)`, the expected selection count of any fixed subset.
pub fn inclusion_probability(space: &IndexSpace, budget: f64) -> Result<f64> {
    let c = space.total() as f64;
    if !(budget > 0.0 && budget <= c) {
        return Err(Error::Range(format!("budget {budget} outside (0, {c}]")));
    }
    Ok(budget / c)
}

/// One realization of the selection counts, stored sparsely by rank in
/// increasing rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDraw {
    entries: Vec<(u128, u64)>,
    n: usize,
    ell: usize,
    scheme: SamplingScheme,
    pn: f64,
}

impl SelectionDraw {
    /// Builds a draw from explicit `(rank, count)` pairs, e.g. a hand-crafted
    /// realization. Ranks are sorted and must be distinct with positive counts.
    pub fn from_entries(
        space: &IndexSpace,
        scheme: SamplingScheme,
        mut entries: Vec<(u128, u64)>,
    ) -> Result<Self> {
        if !(scheme.budget > 0.0) {
            return Err(Error::Validation("budget must be positive".into()));
        }
        entries.sort_unstable_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation("duplicate rank in selection".into()));
        }
        if let Some(&(r, _)) = entries.iter().find(|e| e.0 >= space.total() || e.1 == 0) {
            return Err(Error::Validation(format!("invalid selection entry at rank {r}")));
        }
        Ok(Self {
            entries,
            n: space.n(),
            ell: space.ell(),
            scheme,
            pn: scheme.budget / space.total() as f64,
        })
    }

    pub fn entries(&self) -> &[(u128, u64)] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    pub fn pn(&self) -> f64 {
        self.pn
    }

    /// Number of distinct selected subsets.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    /// `Σ α(I)`.
    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn count_of(&self, rank: u128) -> u64 {
        self.entries
            .binary_search_by_key(&rank, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }
}

/// Draws one selection under `scheme`.
pub fn draw_selection<R: Rng + ?Sized>(
    space: &IndexSpace,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<SelectionDraw> {
    scheme.validate(space)?;
    let c = space.total();
    let entries = match scheme.kind {
        SchemeKind::WithoutReplacement => floyd(c, scheme.budget as u128, rng)
            .into_iter()
            .map(|r| (r, 1))
            .collect(),
        SchemeKind::WithReplacement => {
            let mut ranks: Vec<u128> = (0..scheme.budget as u128)
                .map(|_| rng.random_range(0..c))
                .collect();
            ranks.sort_unstable();
            let mut out: Vec<(u128, u64)> = Vec::with_capacity(ranks.len());
            for r in ranks {
                match out.last_mut() {
                    Some(last) if last.0 == r => last.1 += 1,
                    _ => out.push((r, 1)),
                }
            }
            out
        }
        SchemeKind::Bernoulli => bernoulli_skip(c, scheme.budget / c as f64, rng)
            .into_iter()
            .map(|r| (r, 1))
            .collect(),
    };
    Ok(SelectionDraw {
        entries,
        n: space.n(),
        ell: space.ell(),
        scheme,
        pn: scheme.budget / c as f64,
    })
}

/// Floyd's algorithm: `k` distinct values of `[0, n)`, uniform over all
/// `k`-subsets, in `O(k)` expected time. Returned sorted.
fn floyd<R: Rng + ?Sized>(n: u128, k: u128, rng: &mut R) -> Vec<u128> {
    let mut set: HashSet<u128> = HashSet::with_capacity(k as usize);
    for j in n - k..n {
        let t = rng.random_range(0..=j);
        if !set.insert(t) {
            set.insert(j);
        }
    }
    let mut out: Vec<u128> = set.into_iter().collect();
    out.sort_unstable();
    out
}

/// Independent inclusion of each of `[0, n)` with probability `p`, visiting
/// only the included positions: gaps between inclusions are geometric.
fn bernoulli_skip<R: Rng + ?Sized>(n: u128, p: f64, rng: &mut R) -> Vec<u128> {
    if p >= 1.0 {
        return (0..n).collect();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::with_capacity((n as f64 * p * 1.1) as usize + 8);
    let mut pos: u128 = 0;
    loop {
        // 1 - U lies in (0, 1], so the log is finite
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        let remaining = n - pos;
        if !(skip < remaining as f64) {
            break;
        }
        let skip = skip as u128;
        if skip >= remaining {
            break;
        }
        pos += skip;
        out.push(pos);
        pos += 1;
        if pos >= n {
            break;
        }
    }
    out
}

/// Exact first and second moments of the selection counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMoments {
    pub mean: f64,
    pub variance: f64,
    /// `Cov[α(I), α(J)]` for `I ≠ J`.
    pub cov_distinct: f64,
}

pub fn exact_selection_moments(
    space: &IndexSpace,
    scheme: SamplingScheme,
) -> Result<SelectionMoments> {
    scheme.validate(space)?;
    if space.total() == 1 {
        return Err(Error::DegenerateSpace);
    }
    let c = space.total() as f64;
    let n = scheme.budget;
    let p = n / c;
    Ok(match scheme.kind {
        // hypergeometric
        SchemeKind::WithoutReplacement => SelectionMoments {
            mean: p,
            variance: p * (1.0 - p),
            cov_distinct: -p * (1.0 - p) / (c - 1.0),
        },
        // multinomial
        SchemeKind::WithReplacement => SelectionMoments {
            mean: p,
            variance: n * (1.0 / c) * (1.0 - 1.0 / c),
            cov_distinct: -n / (c * c),
        },
        SchemeKind::Bernoulli => SelectionMoments {
            mean: p,
            variance: p * (1.0 - p),
            cov_distinct: 0.0,
        },
    })
}

/// One inequality from the covariance-bound family.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; nonnegative when the bound holds.
    pub margin: f64,
    pub passed: bool,
    /// False when the inequality's hypotheses do not hold (it is then reported
    /// but does not count toward `all_passed`).
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub moments: SelectionMoments,
    pub pn: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.applicable)
    }
}

fn le_check(name: &'static str, lhs: f64, rhs: f64, applicable: bool) -> BoundCheck {
    // equality cases (e.g. the with-replacement covariance) must survive rounding
    let slack = 1e-12 * rhs.abs().max(lhs.abs());
    BoundCheck {
        name,
        lhs,
        rhs,
        margin: rhs - lhs,
        passed: lhs <= rhs + slack,
        applicable,
    }
}

/// Checks `|Var α(I)| ≤ p`, `|Cov[α(I), α(J)]| ≤ p/C`, `E[α(I)α(J)] ≤ 2p²`,
/// and the chain `p/C + p² ≤ 2p²` used to reach it (valid when `N ≥ 1`).
pub fn verify_covariance_bound(space: &IndexSpace, scheme: SamplingScheme) -> Result<BoundReport> {
    let m = exact_selection_moments(space, scheme)?;
    let c = space.total() as f64;
    let p = m.mean;
    let cross = m.cov_distinct + p * p;
    let checks = vec![
        le_check("variance <= p_n", m.variance.abs(), p, true),
        le_check("|covariance| <= p_n / C", m.cov_distinct.abs(), p / c, true),
        le_check("E[a(I)a(J)] <= 2 p_n^2", cross, 2.0 * p * p, true),
        le_check(
            "p_n / C + p_n^2 <= 2 p_n^2",
            p / c + p * p,
            2.0 * p * p,
            scheme.budget >= 1.0,
        ),
    ];
    Ok(BoundReport {
        moments: m,
        pn: p,
        checks,
    })
}

/// Monte-Carlo estimates of the selection moments on a small space, with
/// standard errors, centered at the exact mean.
#[derive(Debug, Clone)]
pub struct EmpiricalMoments {
    pub draws: usize,
    pub total: usize,
    /// Per rank: (estimate, standard error).
    pub mean: Vec<(f64, f64)>,
    pub variance: Vec<(f64, f64)>,
    /// Row-major `total × total`; diagonal entries are unused (zero).
    pub covariance: Vec<(f64, f64)>,
    /// Per draw `Σ α(I)`: (min, max).
    pub total_count_range: (u64, u64),
}

/// Largest space accepted by [`empirical_selection_moments`].
pub const MAX_DENSE_SUBSETS: u128 = 256;

pub fn empirical_selection_moments<R: Rng + ?Sized>(
    space: &IndexSpace,
    scheme: SamplingScheme,
    draws: usize,
    rng: &mut R,
) -> Result<EmpiricalMoments> {
    if space.total() > MAX_DENSE_SUBSETS {
        return Err(Error::Validation(format!(
            "empirical moments need C(n,l) <= {MAX_DENSE_SUBSETS}, got {}",
            space.total()
        )));
    }
    if draws < 2 {
        return Err(Error::Validation("need at least 2 draws".into()));
    }
    let exact = exact_selection_moments(space, scheme)?;
    let c = space.total() as usize;
    let mut s1 = vec![0.0; c];
    let mut s2 = vec![0.0; c];
    let mut d1 = vec![0.0; c];
    let mut d2 = vec![0.0; c];
    let mut x1 = vec![0.0; c * c];
    let mut x2 = vec![0.0; c * c];
    let mut dense = vec![0.0; c];
    let mut range = (u64::MAX, 0u64);
    for _ in 0..draws {
        let draw = draw_selection(space, scheme, rng)?;
        let tc = draw.total_count();
        range = (range.0.min(tc), range.1.max(tc));
        dense.iter_mut().for_each(|v| *v = -exact.mean);
        for &(r, k) in draw.entries() {
            dense[r as usize] += k as f64;
        }
        for i in 0..c {
            let a = dense[i];
            s1[i] += a;
            s2[i] += a * a;
            let sq = a * a;
            d1[i] += sq;
            d2[i] += sq * sq;
            for j in i + 1..c {
                let prod = a * dense[j];
                x1[i * c + j] += prod;
                x2[i * c + j] += prod * prod;
            }
        }
    }
    let r = draws as f64;
    let est = |s: f64, ss: f64| {
        let m = s / r;
        let var = ((ss / r) - m * m).max(0.0) * r / (r - 1.0);
        (m, (var / r).sqrt())
    };
    let mean = (0..c)
        .map(|i| {
            let (m, se) = est(s1[i], s2[i]);
            (m + exact.mean, se)
        })
        .collect();
    let variance = (0..c).map(|i| est(d1[i], d2[i])).collect();
    let mut covariance = vec![(0.0, 0.0); c * c];
    for i in 0..c {
        for j in i + 1..c {
            let e = est(x1[i * c + j], x2[i * c + j]);
            covariance[i * c + j] = e;
            covariance[j * c + i] = e;
        }
    }
    Ok(EmpiricalMoments {
        draws,
        total: c,
        mean,
        variance,
        covariance,
        total_count_range: range,
    })
}

/// Result of comparing [`EmpiricalMoments`] to the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAgreement {
    /// Worst |empirical − exact| / standard error over all entries, per moment.
    pub mean_z: f64,
    pub variance_z: f64,
    pub covariance_z: f64,
    pub passed: bool,
}

/// Every entry must lie within `z` standard errors of the closed form; entries
/// with zero standard error must match to `1e-12`.
pub fn compare_moments(emp: &EmpiricalMoments, exact: &SelectionMoments, z: f64) -> MomentAgreement {
    let mut passed = true;
    let mut worst = |pairs: &mut dyn Iterator<Item = (f64, f64)>, target: f64| -> f64 {
        let mut w: f64 = 0.0;
        for (est, se) in pairs {
            let diff = (est - target).abs();
            if se > 0.0 {
                let zz = diff / se;
                w = w.max(zz);
                if zz > z {
                    passed = false;
                }
            } else if diff > 1e-12 {
                passed = false;
                w = f64::INFINITY;
            }
        }
        w
    };
    let c = emp.total;
    let mean_z = worst(&mut emp.mean.iter().copied(), exact.mean);
    let variance_z = worst(&mut emp.variance.iter().copied(), exact.variance);
    let mut offdiag = (0..c).flat_map(|i| (0..c).filter(move |&j| j != i).map(move |j| (i, j)));
    let covariance_z = worst(
        &mut std::iter::from_fn(|| offdiag.next().map(|(i, j)| emp.covariance[i * c + j])),
        exact.cov_distinct,
    );
    MomentAgreement {
        mean_z,
        variance_z,
        covariance_z,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    fn space(n: usize, ell: usize) -> IndexSpace {
        IndexSpace::new(n, ell).unwrap()
    }

    #[test]
    fn inclusion_probability_examples() {
        assert_eq!(inclusion_probability(&space(4, 2), 3.0).unwrap(), 0.5);
        let p = inclusion_probability(&space(50, 2), 50.0).unwrap();
        assert!((p - 50.0 / 1225.0).abs() < 1e-15);
        assert!((p - 0.0408163).abs() < 1e-7);
        assert_eq!(inclusion_probability(&space(4, 2), 6.0).unwrap(), 1.0);
        assert!(inclusion_probability(&space(4, 2), 0.0).is_err());
        assert!(inclusion_probability(&space(4, 2), 6.5).is_err());
    }

    #[test]
    fn scheme_validation() {
        let s = space(4, 2);
        assert!(SamplingScheme::without_replacement(7).validate(&s).is_err());
        assert!(SamplingScheme::without_replacement(0).validate(&s).is_err());
        assert!(SamplingScheme::new(SchemeKind::WithReplacement, 2.5).validate(&s).is_err());
        assert!(SamplingScheme::with_replacement(100).validate(&s).is_ok());
        assert!(SamplingScheme::bernoulli(0.3).validate(&s).is_ok());
        assert!(SamplingScheme::bernoulli(6.01).validate(&s).is_err());
        assert!(SamplingScheme::bernoulli(0.0).validate(&s).is_err());
    }

    #[test]
    fn full_budget_selects_everything() {
        let s = space(7, 3);
        let mut rng = StreamKey::root(1).rng();
        for scheme in [
            SamplingScheme::without_replacement(s.total()),
            SamplingScheme::bernoulli(s.total() as f64),
        ] {
            let d = draw_selection(&s, scheme, &mut rng).unwrap();
            let want: Vec<(u128, u64)> = (0..s.total()).map(|r| (r, 1)).collect();
            assert_eq!(d.entries(), want.as_slice());
            assert_eq!(d.pn(), 1.0);
        }
    }

    #[test]
    fn swor_inclusion_frequencies() {
        let s = space(6, 2);
        let scheme = SamplingScheme::without_replacement(5);
        let mut rng = StreamKey::root(42).rng();
        let draws = 100_000;
        let mut hits = [0u32; 15];
        for _ in 0..draws {
            for &(r, _) in draw_selection(&s, scheme, &mut rng).unwrap().entries() {
                hits[r as usize] += 1;
            }
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for h in hits {
            assert!((h as f64 / draws as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn exact_moment_examples() {
        let m = exact_selection_moments(&space(4, 2), SamplingScheme::without_replacement(3)).unwrap();
        assert_eq!(m.mean, 0.5);
        assert_eq!(m.variance, 0.25);
        assert!((m.cov_distinct + 0.05).abs() < 1e-15);
        let m = exact_selection_moments(&space(4, 2), SamplingScheme::with_replacement(6)).unwrap();
        assert_eq!(m.mean, 1.0);
        assert!((m.variance - 5.0 / 6.0).abs() < 1e-15);
        assert!((m.cov_distinct + 1.0 / 6.0).abs() < 1e-15);
        let m = exact_selection_moments(&space(9, 4), SamplingScheme::bernoulli(17.5)).unwrap();
        assert_eq!(m.cov_distinct, 0.0);
        assert!(matches!(
            exact_selection_moments(&space(2, 2), SamplingScheme::without_replacement(1)),
            Err(Error::DegenerateSpace)
        ));
    }

    /// Enumerates every equally likely size-`k` selection of `[0, c)` and
    /// averages indicator products directly.
    fn enumerate_swor(c: usize, k: usize) -> (f64, f64, f64) {
        let sp = space(c, k);
        let sets: Vec<_> = sp.iter().collect();
        let total = sets.len() as f64;
        let ind = |set: &crate::indexcomb::MultiIndex, i: usize| {
            set.as_slice().contains(&i) as u8 as f64
        };
        let mean = sets.iter().map(|s| ind(s, 0)).sum::<f64>() / total;
        let var = sets.iter().map(|s| (ind(s, 0) - mean).powi(2)).sum::<f64>() / total;
        let cov = sets
            .iter()
            .map(|s| (ind(s, 0) - mean) * (ind(s, 1) - mean))
            .sum::<f64>()
            / total;
        (mean, var, cov)
    }

    #[test]
    fn swor_moments_match_enumeration() {
        // n=4, ℓ=2: C = 6 subsets; every 3-subset (20 of them) and 2-subset (15)
        for k in [2usize, 3] {
            let (mean, var, cov) = enumerate_swor(6, k);
            let m = exact_selection_moments(&space(4, 2), SamplingScheme::without_replacement(k as u128))
                .unwrap();
            assert!((m.mean - mean).abs() < 1e-15);
            assert!((m.variance - var).abs() < 1e-15);
            assert!((m.cov_distinct - cov).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_examples() {
        let r = verify_covariance_bound(&space(4, 2), SamplingScheme::without_replacement(3)).unwrap();
        assert!(r.all_passed());
        assert_eq!(r.checks[0].lhs, 0.25);
        assert_eq!(r.checks[0].rhs, 0.5);
        assert!((r.checks[1].rhs - 0.5 / 6.0).abs() < 1e-15);

        let r = verify_covariance_bound(&space(4, 2), SamplingScheme::with_replacement(6)).unwrap();
        assert!(r.all_passed());
        assert!(r.checks[1].margin.abs() < 1e-15, "equality case");

        let r = verify_covariance_bound(&space(10, 3), SamplingScheme::bernoulli(0.4)).unwrap();
        assert!(r.all_passed());
        assert!(!r.checks[3].applicable);
    }

    #[test]
    fn empirical_moments_small_space() {
        let s = space(6, 2);
        for kind in SchemeKind::ALL {
            let scheme = SamplingScheme::new(kind, 5.0);
            let mut rng = StreamKey::root(9).push(kind as u64).rng();
            let emp = empirical_selection_moments(&s, scheme, 20_000, &mut rng).unwrap();
            let exact = exact_selection_moments(&s, scheme).unwrap();
            let agree = compare_moments(&emp, &exact, 4.0);
            assert!(agree.passed, "{kind}: {agree:?}");
            if kind.integer_budget() {
                assert_eq!(emp.total_count_range, (5, 5));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn draws_respect_scheme_invariants(n in 2usize..40, ell in 1usize..4, seed: u64, frac in 0.0f64..1.0) {
            prop_assume!(n >= ell);
            let s = space(n, ell);
            let c = s.total();
            let budget = 1 + ((c - 1) as f64 * frac) as u128;
            let key = StreamKey::root(seed);

            let d = draw_selection(&s, SamplingScheme::without_replacement(budget), &mut key.rng()).unwrap();
            prop_assert_eq!(d.distinct() as u128, budget);
            prop_assert!(d.entries().iter().all(|e| e.1 == 1 && e.0 < c));
            prop_assert!(d.entries().windows(2).all(|w| w[0].0 < w[1].0));
            let again = draw_selection(&s, SamplingScheme::without_replacement(budget), &mut key.rng()).unwrap();
            prop_assert_eq!(&d, &again);

            let d = draw_selection(&s, SamplingScheme::with_replacement(budget * 2), &mut key.rng()).unwrap();
            prop_assert_eq!(d.total_count() as u128, budget * 2);

            let d = draw_selection(&s, SamplingScheme::bernoulli(budget as f64 * 0.5 + 0.1), &mut key.rng()).unwrap();
            prop_assert!(d.entries().iter().all(|e| e.1 == 1 && e.0 < c));
        }
    }

    #[test]
    fn bernoulli_over_huge_space_is_sparse() {
        // C(10^6, 3) ≈ 1.7e17 subsets; expected 50 selections
        let s = space(1_000_000, 3);
        let mut rng = StreamKey::root(3).rng();
        let d = draw_selection(&s, SamplingScheme::bernoulli(50.0), &mut rng).unwrap();
        assert!(d.distinct() > 10 && d.distinct() < 120, "{}", d.distinct());
        let d = draw_selection(&s, SamplingScheme::without_replacement(1000), &mut rng).unwrap();
        assert_eq!(d.distinct(), 1000);
    }
}
