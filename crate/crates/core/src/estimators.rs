//! Complete and incomplete U-statistics, the realized four-term error
//! decomposition under truncation, and the shape of the L1 error bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indexcomb::IndexSpace;
use crate::kernels::{truncate, Kernel};
use crate::rng::StreamKey;
use crate::sampling::{draw_selection, SamplingScheme, SelectionDraw};
use crate::sum::KahanSum;

/// Terms per compensated block. Blocks are merged in rank order, so the
/// result does not depend on how blocks are distributed over threads.
pub const BLOCK_TERMS: u128 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateKind {
    Complete,
    Incomplete(SamplingScheme),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// `C(n,ℓ)` for the complete statistic, distinct selected subsets otherwise.
    pub n_terms_evaluated: u128,
    pub kind: EstimateKind,
    pub n: usize,
    pub ell: usize,
    /// Divisor: `C(n,ℓ)` or the nominal budget `N`.
    pub budget: f64,
}

fn check_data(data: &[f64], ell: usize) -> Result<()> {
    if data.len() < ell {
        return Err(Error::InsufficientData {
            needed: ell,
            got: data.len(),
        });
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("observation {x}")));
    }
    Ok(())
}

fn block_sum(kernel: &Kernel, data: &[f64], space: &IndexSpace, start: u128) -> KahanSum {
    let end = (start + BLOCK_TERMS).min(space.total());
    let mut acc = KahanSum::new();
    let mut it = space.iter_from(start).expect("start rank in range");
    let mut args = vec![0.0; space.ell()];
    for _ in start..end {
        let idx = it.current().expect("iterator not exhausted inside block");
        for (a, &i) in args.iter_mut().zip(idx) {
            *a = data[i];
        }
        acc.add(kernel.eval_unchecked(&args));
        it.advance();
    }
    acc
}

/// Sums `h` over all subsets in lexicographic order, one [`KahanSum`] per
/// block of [`BLOCK_TERMS`] ranks.
fn complete_sum(kernel: &Kernel, data: &[f64], space: &IndexSpace) -> f64 {
    let mut total = KahanSum::new();
    if space.ell() == 2 {
        let n = data.len();
        let mut acc = KahanSum::new();
        let mut filled: u128 = 0;
        for i in 0..n {
            let xi = data[i];
            for &xj in &data[i + 1..] {
                acc.add(kernel.eval_unchecked(&[xi, xj]));
                filled += 1;
                if filled == BLOCK_TERMS {
                    total.merge(&acc);
                    acc = KahanSum::new();
                    filled = 0;
                }
            }
        }
        if filled > 0 {
            total.merge(&acc);
        }
    } else {
        let mut start = 0;
        while start < space.total() {
            total.merge(&block_sum(kernel, data, space, start));
            start += BLOCK_TERMS;
        }
    }
    total.value()
}

/// `U_n = C(n,ℓ)⁻¹ Σ_I h(X_I)`.
pub fn complete_u(kernel: &Kernel, data: &[f64]) -> Result<Estimate> {
    check_data(data, kernel.arity())?;
    let space = IndexSpace::new(data.len(), kernel.arity())?;
    let sum = complete_sum(kernel, data, &space);
    Ok(complete_estimate(sum, &space))
}

/// Block-parallel variant of [`complete_u`]; bit-identical to it.
pub fn complete_u_par(kernel: &Kernel, data: &[f64]) -> Result<Estimate> {
    check_data(data, kernel.arity())?;
    let space = IndexSpace::new(data.len(), kernel.arity())?;
    let blocks = space.total().div_ceil(BLOCK_TERMS);
    let block_count = usize::try_from(blocks)
        .map_err(|_| Error::Overflow(format!("{blocks} blocks")))?;
    let partials: Vec<KahanSum> = (0..block_count)
        .into_par_iter()
        .map(|b| block_sum(kernel, data, &space, b as u128 * BLOCK_TERMS))
        .collect();
    let mut total = KahanSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(complete_estimate(total.value(), &space))
}

fn complete_estimate(sum: f64, space: &IndexSpace) -> Estimate {
    let c = space.total();
    Estimate {
        value: sum / c as f64,
        n_terms_evaluated: c,
        kind: EstimateKind::Complete,
        n: space.n(),
        ell: space.ell(),
        budget: c as f64,
    }
}

fn check_draw(kernel: &Kernel, data: &[f64], draw: &SelectionDraw) -> Result<IndexSpace> {
    check_data(data, kernel.arity())?;
    if draw.n() != data.len() || draw.ell() != kernel.arity() {
        return Err(Error::Validation(format!(
            "draw is for (n={}, l={}) but data has n={} and kernel arity {}",
            draw.n(),
            draw.ell(),
            data.len(),
            kernel.arity()
        )));
    }
    if !(draw.scheme().budget > 0.0) {
        return Err(Error::Validation("budget must be positive".into()));
    }
    IndexSpace::new(data.len(), kernel.arity())
}

/// `U_{n,N} = N⁻¹ Σ_I α(I) h(X_I)`, always divided by the nominal budget `N`
/// (for Bernoulli sampling this is not the realized number of terms).
pub fn incomplete_u(kernel: &Kernel, data: &[f64], draw: &SelectionDraw) -> Result<Estimate> {
    let space = check_draw(kernel, data, draw)?;
    let mut idx = vec![0usize; space.ell()];
    let mut args = vec![0.0; space.ell()];
    let mut acc = KahanSum::new();
    for &(rank, count) in draw.entries() {
        space.unrank_into(rank, &mut idx);
        for (a, &i) in args.iter_mut().zip(&idx) {
            *a = data[i];
        }
        acc.add(count as f64 * kernel.eval_unchecked(&args));
    }
    let budget = draw.scheme().budget;
    Ok(Estimate {
        value: acc.value() / budget,
        n_terms_evaluated: draw.distinct() as u128,
        kind: EstimateKind::Incomplete(draw.scheme()),
        n: space.n(),
        ell: space.ell(),
        budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMean {
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
}

/// Average of `U_{n,N}` over `replications` independent draws on fixed data;
/// estimates `E[U_{n,N} | data]`, which equals `U_n` for all three schemes.
pub fn conditional_mean_over_sampling(
    kernel: &Kernel,
    data: &[f64],
    scheme: SamplingScheme,
    replications: usize,
    key: StreamKey,
) -> Result<ConditionalMean> {
    if replications == 0 {
        return Err(Error::Validation("need at least one replication".into()));
    }
    check_data(data, kernel.arity())?;
    let space = IndexSpace::new(data.len(), kernel.arity())?;
    let mut rng = key.rng();
    let mut s1 = KahanSum::new();
    let mut s2 = KahanSum::new();
    for _ in 0..replications {
        let draw = draw_selection(&space, scheme, &mut rng)?;
        let v = incomplete_u(kernel, data, &draw)?.value;
        s1.add(v);
        s2.add(v * v);
    }
    let r = replications as f64;
    let mean = s1.value() / r;
    let std_error = if replications > 1 {
        let var = (s2.value() / r - mean * mean).max(0.0) * r / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Ok(ConditionalMean {
        mean,
        std_error,
        replications,
    })
}

/// One realization of `U_{n,N} − θ = t1 + t2 + t3 + t4` at truncation level `c`:
///
/// * `t1 = U_{n,N} − Ũ_{n,N}` (untruncated minus truncated estimate),
/// * `t2 = Ũ_{n,N} − Ū_{n,N}` with `Ū_{n,N} = θ_c N⁻¹ Σ α(I)`,
/// * `t3 = Ū_{n,N} − θ_c`, zero whenever `Σ α(I) = N`,
/// * `t4 = θ_c − θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition {
    pub estimate: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub level: f64,
    pub theta_c: f64,
    pub theta: f64,
}

impl ErrorDecomposition {
    pub fn parts(&self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }

    pub fn sum(&self) -> f64 {
        self.t1 + self.t2 + self.t3 + self.t4
    }
}

pub fn error_decomposition(
    kernel: &Kernel,
    data: &[f64],
    draw: &SelectionDraw,
    level: f64,
    theta_c: f64,
    theta: f64,
) -> Result<ErrorDecomposition> {
    if !(level > 0.0) {
        return Err(Error::Domain(format!("truncation level must be > 0, got {level}")));
    }
    if !theta_c.is_finite() || !theta.is_finite() {
        return Err(Error::NonFinite("oracle value".into()));
    }
    let space = check_draw(kernel, data, draw)?;
    let mut idx = vec![0usize; space.ell()];
    let mut args = vec![0.0; space.ell()];
    let mut full = KahanSum::new();
    let mut trunc = KahanSum::new();
    for &(rank, count) in draw.entries() {
        space.unrank_into(rank, &mut idx);
        for (a, &i) in args.iter_mut().zip(&idx) {
            *a = data[i];
        }
        let h = kernel.eval_unchecked(&args);
        full.add(count as f64 * h);
        trunc.add(count as f64 * truncate(h, level));
    }
    let budget = draw.scheme().budget;
    let u = full.value() / budget;
    let u_trunc = trunc.value() / budget;
    // Σα / N is exactly 1 when the counts sum to the (integer) budget
    let u_bar = theta_c * (draw.total_count() as f64 / budget);
    Ok(ErrorDecomposition {
        estimate: u,
        t1: u - u_trunc,
        t2: u_trunc - u_bar,
        t3: u_bar - theta_c,
        t4: theta_c - theta,
        level,
        theta_c,
        theta,
    })
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("moment order must be >= 1, got {p}")));
    }
    Ok(())
}

fn min_budget(n: usize, budget: f64) -> Result<f64> {
    if n == 0 || !(budget > 0.0) {
        return Err(Error::Domain(format!("need n >= 1 and N > 0, got n={n}, N={budget}")));
    }
    Ok((n as f64).min(budget))
}

/// `A·c^{(2−p)₊/2}/√min(n,N) + B·c^{1−p}`: the shape of the L1 bound with
/// caller-chosen constants.
pub fn bound_curve(p: f64, n: usize, budget: f64, level: f64, a: f64, b: f64) -> Result<f64> {
    check_order(p)?;
    let m = min_budget(n, budget)?;
    if !(level > 0.0) {
        return Err(Error::Domain(format!("truncation level must be > 0, got {level}")));
    }
    let first = a * level.powf((2.0 - p).max(0.0) / 2.0) / m.sqrt();
    let second = b * level.powf(1.0 - p);
    Ok(first + second)
}

/// `min(n,N)^{1/p}`, the level balancing both terms of [`bound_curve`].
pub fn optimal_truncation(p: f64, n: usize, budget: f64) -> Result<f64> {
    check_order(p)?;
    Ok(min_budget(n, budget)?.powf(1.0 / p))
}

/// Exponent `β` in the rate `min(n,N)^{−β}`: `(p−1)/p` below 2, `1/2` from 2 on.
pub fn rate_exponent(p: f64) -> Result<f64> {
    check_order(p)?;
    Ok(if p < 2.0 { (p - 1.0) / p } else { 0.5 })
}
